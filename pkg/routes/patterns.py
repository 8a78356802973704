# routes/patterns.py
import logging

from flask import Blueprint, Response, jsonify, request

from services.contacts_service import contact_graph
from services.errors import (
    InvalidVariant,
    PackingError,
    PatternNotRepresentable,
    UnsupportedSeries,
)
from services.geometry_service import PatternVariant, SeriesId
from services.pattern_service import build_pattern, enumerate_variants, m_pattern
from services.render_service import RenderOptions, render_svg
from services.storage_service import save_packing

logger = logging.getLogger(__name__)

patterns_bp = Blueprint("patterns", __name__, url_prefix="/api/patterns")


def _error(message, status_code):
    return jsonify({"success": False, "error": True, "message": message, "data": None}), status_code


def _series_or_none(series_name):
    try:
        return SeriesId.parse(series_name)
    except ValueError:
        return None


def _build(series, k):
    """Builds the requested member; returns (packing, error_response)"""
    try:
        variant = PatternVariant.parse(request.args.get("variant"))
    except ValueError as ve:
        return None, _error(str(ve), 400)
    try:
        return build_pattern(series, k, variant), None
    except PatternNotRepresentable as e:
        return None, _error(f"{e} ({e.reason})", 422)
    except (InvalidVariant, UnsupportedSeries) as e:
        return None, _error(str(e), 400)


@patterns_bp.route("/<string:series_name>/<int:k>", methods=["GET"])
def get_formula(series_name, k):
    """Closed-form m and existence of one series member"""
    series = _series_or_none(series_name)
    if series is None:
        return _error(f"Unknown series '{series_name}'", 404)
    try:
        formula = m_pattern(series, k)
    except UnsupportedSeries as e:
        return _error(str(e), 400)
    return (
        jsonify(
            {
                "success": True,
                "error": False,
                "message": "Formula evaluated successfully.",
                "data": formula.to_dict(),
            }
        ),
        200,
    )


@patterns_bp.route("/<string:series_name>/<int:k>/packing", methods=["GET"])
def get_packing(series_name, k):
    series = _series_or_none(series_name)
    if series is None:
        return _error(f"Unknown series '{series_name}'", 404)
    packing, error_response = _build(series, k)
    if error_response:
        return error_response
    with_contacts = request.args.get("contacts", "false").lower() == "true"
    return Response(save_packing(packing, with_contacts), mimetype="text/plain")


@patterns_bp.route("/<string:series_name>/<int:k>/svg", methods=["GET"])
def get_svg(series_name, k):
    series = _series_or_none(series_name)
    if series is None:
        return _error(f"Unknown series '{series_name}'", 404)
    packing, error_response = _build(series, k)
    if error_response:
        return error_response
    try:
        labels = request.args.get("labels", "true").lower() != "false"
        svg = render_svg(packing, contact_graph(packing), RenderOptions(labels=labels))
    except PackingError as e:
        logger.error("Rendering %s k=%s failed: %s", series_name, k, e)
        return _error("An unexpected error occurred", 500)
    return Response(svg, mimetype="image/svg+xml")


@patterns_bp.route("/<string:series_name>/<int:k>/variants", methods=["GET"])
def get_variants(series_name, k):
    series = _series_or_none(series_name)
    if series is None:
        return _error(f"Unknown series '{series_name}'", 404)
    try:
        variants = enumerate_variants(series, k)
    except UnsupportedSeries as e:
        return _error(str(e), 400)
    return (
        jsonify(
            {
                "success": True,
                "error": False,
                "message": f"{len(variants)} variants.",
                "data": [v.label() for v in variants],
            }
        ),
        200,
    )
