# app.py
import logging

from flask import Flask, jsonify, redirect
from flask_cors import CORS

from config import API_V1_STR, CORS_ORIGINS, LOG_LEVEL, PROJECT_NAME
from routes.packings import packings_bp
from routes.patterns import patterns_bp
from routes.series import series_bp


def create_app():
    logging.basicConfig(
        level=LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    app = Flask(__name__)

    CORS(app, resources={rf"{API_V1_STR}/*": {"origins": CORS_ORIGINS}})

    app.config["PROJECT_NAME"] = PROJECT_NAME

    app.register_blueprint(patterns_bp)
    app.register_blueprint(packings_bp)
    app.register_blueprint(series_bp)

    @app.route(API_V1_STR)
    def api_index():
        return jsonify({"status": f"{app.config['PROJECT_NAME']} API is running"}), 200

    @app.route("/")
    def index():
        return redirect(API_V1_STR)

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({"success": False, "error": True, "message": "Not Found", "data": None}), 404

    return app


if __name__ == "__main__":
    app = create_app()
    app.run(host="0.0.0.0", port=1999, debug=True)
