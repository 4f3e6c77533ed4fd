"""Black-box binary classifier interface.

Three kinds of predictor sit behind one ``predict_batch`` call: a built-in
deterministic blob rule (for tests and phantoms), a child process speaking
JSON-lines over stdio, and an HTTP endpoint. The wire body is identical for
both external kinds:

    request:  {"id": "<nonce>", "images": ["<base64 PNG>", ...]}
    response: {"id": "<same nonce>", "probs": [[p_no_tumor, p_tumor], ...]}

One JSON object per line for stdio; one request/response body for HTTP POST
to ``<endpoint>/predict``. Each probability pair must sum to 1 within 1e-6
and come back in input order.
"""

from __future__ import annotations

import base64
import io
import json
import shlex
import subprocess
import uuid
from dataclasses import dataclass, field

import numpy as np
import requests
from PIL import Image

from .errors import PredictorUnavailable, ProtocolViolation, ShapeMismatch

_MAX_ATTEMPTS = 3  # 1 try + 2 retries
_HTTP_TIMEOUT = 30.0


@dataclass(frozen=True)
class Prediction:
    p_no_tumor: float
    p_tumor: float

    def __post_init__(self):
        for p in (self.p_no_tumor, self.p_tumor):
            if not -1e-9 <= p <= 1.0 + 1e-9:
                raise ValueError(f"probability out of range: {p}")
        if abs(self.p_no_tumor + self.p_tumor - 1.0) > 1e-6:
            raise ValueError(
                f"probabilities must sum to 1: {self.p_no_tumor} + {self.p_tumor}"
            )

    @property
    def decision(self) -> int:
        """Argmax class; an exact tie reads as 0 (first index wins)."""
        return 1 if self.p_tumor > self.p_no_tumor else 0


def builtin_blob_predict(img: np.ndarray) -> Prediction:
    """Synthetic stand-in classifier: p_tumor = min(1, bright_fraction / 0.05)
    where bright_fraction counts pixels >= 0.8."""
    bright = np.count_nonzero(img >= 0.8) / img.size
    p = min(1.0, bright / 0.05)
    return Prediction(p_no_tumor=1.0 - p, p_tumor=p)


@dataclass
class PredictorHandle:
    kind: str
    endpoint: str = ""
    batch_limit: int = 64
    _process: subprocess.Popen | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("builtin-blob", "external-process", "external-http"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.batch_limit < 1:
            raise ValueError(f"batch_limit must be >= 1, got {self.batch_limit}")

    @classmethod
    def from_spec(cls, spec: str, batch_limit: int = 64) -> "PredictorHandle":
        """Parse a predictor spec: ``builtin``, ``exec:CMD``, or an http(s) URL."""
        if spec == "builtin":
            return cls(kind="builtin-blob", batch_limit=batch_limit)
        if spec.startswith("exec:"):
            return cls(kind="external-process", endpoint=spec[5:], batch_limit=batch_limit)
        if spec.startswith(("http:", "https:")):
            return cls(kind="external-http", endpoint=spec, batch_limit=batch_limit)
        raise ValueError(f"predictor spec not understood: {spec!r}")

    def close(self) -> None:
        if self._process is not None:
            self._process.kill()
            self._process.wait()
            self._process = None


def encode_png_b64(img: np.ndarray) -> str:
    """Quantize a [0, 1] image to 8-bit and encode as base64 PNG."""
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(data, mode="L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_b64(payload: str) -> np.ndarray:
    """Inverse of encode_png_b64; useful when implementing a model server."""
    with Image.open(io.BytesIO(base64.b64decode(payload))) as im:
        return np.asarray(im).astype(np.float64) / 255.0


def predict_batch(handle: PredictorHandle, images: list[np.ndarray]) -> list[Prediction]:
    """Run the predictor on a batch, preserving order.

    Batches larger than ``handle.batch_limit`` are split transparently. A
    failed sub-batch raises rather than returning partial results.
    """
    if not images:
        raise ValueError("predict_batch needs at least one image")
    shape = images[0].shape
    for im in images[1:]:
        if im.shape != shape:
            raise ShapeMismatch(f"mixed image shapes in batch: {shape} vs {im.shape}")

    out: list[Prediction] = []
    for start in range(0, len(images), handle.batch_limit):
        chunk = images[start : start + handle.batch_limit]
        if handle.kind == "builtin-blob":
            out.extend(builtin_blob_predict(im) for im in chunk)
        elif handle.kind == "external-process":
            out.extend(_process_round(handle, chunk))
        else:
            out.extend(_http_round(handle, chunk))
    return out


def _validate_response(payload, request_id: str, n_images: int) -> list[Prediction]:
    if not isinstance(payload, dict) or "id" not in payload or "probs" not in payload:
        raise ProtocolViolation(f"response missing id/probs: {payload!r}")
    if payload["id"] != request_id:
        raise ProtocolViolation(
            f"response id {payload['id']!r} does not match request id {request_id!r}"
        )
    probs = payload["probs"]
    if not isinstance(probs, list) or len(probs) != n_images:
        raise ProtocolViolation(
            f"expected {n_images} probability pairs, got {len(probs) if isinstance(probs, list) else probs!r}"
        )
    preds = []
    for pair in probs:
        if not isinstance(pair, list) or len(pair) != 2:
            raise ProtocolViolation(f"probability entry is not a pair: {pair!r}")
        try:
            p0, p1 = float(pair[0]), float(pair[1])
        except (TypeError, ValueError) as exc:
            raise ProtocolViolation(f"non-numeric probabilities: {pair!r}") from exc
        if abs(p0 + p1 - 1.0) > 1e-6 or not (-1e-9 <= p0 <= 1 + 1e-9) or not (-1e-9 <= p1 <= 1 + 1e-9):
            raise ProtocolViolation(f"probability pair invalid: {pair!r}")
        p1 = min(1.0, max(0.0, p1))
        preds.append(Prediction(p_no_tumor=1.0 - p1, p_tumor=p1))
    return preds


class _Unavailable(Exception):
    """Internal marker for retryable transport failures."""


def _process_round(handle: PredictorHandle, images: list[np.ndarray]) -> list[Prediction]:
    body = None
    last = "no attempt made"
    for _ in range(_MAX_ATTEMPTS):
        try:
            if handle._process is None or handle._process.poll() is not None:
                handle._process = subprocess.Popen(
                    shlex.split(handle.endpoint),
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                    bufsize=1,
                )
            proc = handle._process
            request_id = uuid.uuid4().hex
            body = {"id": request_id, "images": [encode_png_b64(im) for im in images]}
            try:
                proc.stdin.write(json.dumps(body) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise _Unavailable(str(exc)) from exc
            if not line:
                raise _Unavailable("predictor process closed its stdout")
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolViolation(f"response is not JSON: {line[:200]!r}") from exc
            return _validate_response(payload, request_id, len(images))
        except _Unavailable as exc:
            last = str(exc)
            handle.close()
    raise PredictorUnavailable(f"exec predictor {handle.endpoint!r} failed: {last}")


def _http_round(handle: PredictorHandle, images: list[np.ndarray]) -> list[Prediction]:
    url = handle.endpoint.rstrip("/")
    if not url.endswith("/predict"):
        url += "/predict"
    last = "no attempt made"
    for _ in range(_MAX_ATTEMPTS):
        request_id = uuid.uuid4().hex
        body = {"id": request_id, "images": [encode_png_b64(im) for im in images]}
        try:
            resp = requests.post(url, json=body, timeout=_HTTP_TIMEOUT)
        except (requests.ConnectionError, requests.Timeout) as exc:
            last = str(exc)
            continue
        if resp.status_code != 200:
            last = f"HTTP {resp.status_code}"
            continue
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ProtocolViolation(f"response body is not JSON: {resp.text[:200]!r}") from exc
        return _validate_response(payload, request_id, len(images))
    raise PredictorUnavailable(f"http predictor {url} failed: {last}")
