# routes/packings.py
import logging

from flask import Blueprint, jsonify, request

from services.analysis_service import analysis_report
from services.errors import ContactMismatch, PackingError, ParseError, ValidationError
from services.storage_service import load_packing

logger = logging.getLogger(__name__)

packings_bp = Blueprint("packings", __name__, url_prefix="/api/packings")


@packings_bp.route("/analyze", methods=["POST"])
def analyze_packing_route():
    """Body: a packing file (text format v1)"""
    body = request.get_data(as_text=True)
    if not body:
        return (
            jsonify({"success": False, "error": True, "message": "Request body is empty.", "data": None}),
            400,
        )

    try:
        packing = load_packing(body, source="upload")
        report = analysis_report(packing)
    except ParseError as pe:
        return jsonify({"success": False, "error": True, "message": str(pe), "data": None}), 400
    except (ValidationError, ContactMismatch) as ve:
        return jsonify({"success": False, "error": True, "message": str(ve), "data": None}), 422
    except PackingError as e:
        logger.error("Error in analyze route: %s", e)
        return (
            jsonify({"success": False, "error": True, "message": "An unexpected error occurred", "data": None}),
            500,
        )

    return (
        jsonify(
            {
                "success": True,
                "error": False,
                "message": "Packing analyzed successfully.",
                "data": report,
            }
        ),
        200,
    )
