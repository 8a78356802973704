# routes/series.py
import logging

from flask import Blueprint, jsonify, request

from config import BEST_KNOWN_TABLE
from services.analysis_service import ChallengerSource, oblong_crossover, series_threshold
from services.errors import MissingChallenger, PackingError, ParseError, UnsupportedSeries
from services.geometry_service import SeriesId
from services.storage_service import BestKnownTable

logger = logging.getLogger(__name__)

series_bp = Blueprint("series", __name__, url_prefix="/api/series")

MAX_K = 30


def _error(message, status_code):
    return jsonify({"success": False, "error": True, "message": message, "data": None}), status_code


def _k_range(default_lo, default_hi):
    """Parses ?k=lo..hi; returns (range, error_message)"""
    text = request.args.get("k")
    if not text:
        return list(range(default_lo, default_hi + 1)), None
    try:
        lo, _, hi = text.partition("..")
        lo, hi = int(lo), int(hi or lo)
    except ValueError:
        return None, f"Invalid k range '{text}'"
    if lo < 2 or hi > MAX_K or lo > hi:
        return None, f"k range must lie within 2..{MAX_K}"
    return list(range(lo, hi + 1)), None


@series_bp.route("/oblong/crossover", methods=["GET"])
def get_crossover():
    k_range, message = _k_range(4, 12)
    if message:
        return _error(message, 400)
    rows = oblong_crossover(k_range)
    data = [
        {"k": r.k, "n": r.n, "m": r.m, "m_alt": r.m_alt, "winner": r.winner} for r in rows
    ]
    return (
        jsonify({"success": True, "error": False, "message": "Crossover computed.", "data": data}),
        200,
    )


@series_bp.route("/<string:series_name>", methods=["GET"])
def get_series_report(series_name):
    """Series report against the best-known table; simulation is not run here"""
    try:
        series = SeriesId.parse(series_name)
    except ValueError:
        return _error(f"Unknown series '{series_name}'", 404)
    k_range, message = _k_range(2, 8)
    if message:
        return _error(message, 400)

    try:
        table = BestKnownTable.load(BEST_KNOWN_TABLE)
        report = series_threshold(
            series, k_range, ChallengerSource(table=table), missing_ok=True
        )
    except (MissingChallenger, UnsupportedSeries) as e:
        return _error(str(e), 422)
    except ParseError as e:
        logger.error("Best-known table is unreadable: %s", e)
        return _error("An unexpected error occurred", 500)
    except PackingError as e:
        logger.error("Error in series route: %s", e)
        return _error("An unexpected error occurred", 500)

    return (
        jsonify(
            {
                "success": True,
                "error": False,
                "message": "Series report computed.",
                "data": report.to_dict(),
            }
        ),
        200,
    )
