"""HTTP scoring service for the questionnaire model.

POST /v1/score takes SurveyAnswers fields as snake_case JSON and returns
probability, percentile, and model version; GET /v1/health is a liveness
probe. The service is stateless: nothing from a request is stored, and the
model is loaded once at startup.
"""

from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .errors import EmptyDistribution
from .features import CONDITION_NAMES, SurveyAnswers, answers_to_features
from .models import LogisticModel, percentile_of, score_logistic

logger = logging.getLogger(__name__)

AGE_MIN, AGE_MAX = 18, 120


def validate_payload(payload) -> tuple[Optional[SurveyAnswers], list[dict]]:
    """Field-level validation; returns (answers, []) or (None, errors)."""
    errors: list[dict] = []
    if not isinstance(payload, dict):
        return None, [{"field": "", "error": "body must be a JSON object"}]

    def add(field: str, message: str):
        errors.append({"field": field, "error": message})

    values: dict = {}
    age = payload.get("age_years")
    if age is None:
        add("age_years", "required")
    elif isinstance(age, bool) or not isinstance(age, int):
        add("age_years", "must be an integer")
    elif not AGE_MIN <= age <= AGE_MAX:
        add("age_years", f"must be between {AGE_MIN} and {AGE_MAX}")
    else:
        values["age_years"] = age

    gender = payload.get("gender")
    if gender is None:
        add("gender", "required")
    elif gender not in ("male", "female", "unknown"):
        add("gender", "must be one of male, female, unknown")
    else:
        values["gender"] = gender

    for field in ("prior_admissions", "prior_er_visits"):
        v = payload.get(field, 0)
        if isinstance(v, bool) or not isinstance(v, int):
            add(field, "must be an integer")
        elif v < 0:
            add(field, "must be >= 0")
        else:
            values[field] = v

    for name in CONDITION_NAMES:
        v = payload.get(name, False)
        if not isinstance(v, bool):
            add(name, "must be true or false")
        else:
            values[name] = v

    if errors:
        return None, errors
    return SurveyAnswers(**values), []


def score_answers(model: LogisticModel, answers: SurveyAnswers) -> dict:
    vector = answers_to_features(answers)
    probability = score_logistic(model, vector)
    percentile = None
    if model.percentiles is not None:
        try:
            percentile = percentile_of(model.percentiles, probability)
        except EmptyDistribution:
            percentile = None
    return {
        "probability": probability,
        "percentile": percentile,
        "model_version": model.model_version,
    }


def make_handler(model: LogisticModel, allow_origin: Optional[str] = None):
    class ScoreHandler(BaseHTTPRequestHandler):
        server_version = "c19risk/0.1"

        def _reply(self, status: int, body: dict):
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            if allow_origin:
                self.send_header("Access-Control-Allow-Origin", allow_origin)
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/v1/health":
                self._reply(200, {"status": "ok"})
            else:
                self._reply(404, {"errors": [{"field": "", "error": "not found"}]})

        def do_OPTIONS(self):
            self.send_response(204)
            if allow_origin:
                self.send_header("Access-Control-Allow-Origin", allow_origin)
                self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_POST(self):
            if self.path != "/v1/score":
                self._reply(404, {"errors": [{"field": "", "error": "not found"}]})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self._reply(400, {"errors": [{"field": "", "error": "invalid JSON body"}]})
                return
            answers, errors = validate_payload(payload)
            if errors:
                self._reply(400, {"errors": errors})
                return
            self._reply(200, score_answers(model, answers))

        def log_message(self, fmt, *args):
            logger.info("%s %s", self.address_string(), fmt % args)

    return ScoreHandler


def create_server(
    model: LogisticModel,
    host: str = "127.0.0.1",
    port: int = 8000,
    allow_origin: Optional[str] = None,
) -> ThreadingHTTPServer:
    handler = make_handler(model, allow_origin)
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(model: LogisticModel, host: str, port: int, allow_origin: Optional[str]):
    server = create_server(model, host, port, allow_origin)
    logger.info("scoring service on %s:%d (model %s)", host, port, model.model_version)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
