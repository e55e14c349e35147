"""State / subspace / report files.

A state or subspace file is a JSON document (``format_version`` 1)::

    {"format_version": 1, "kind": "state" | "subspace",
     "dims": [...], "K": 1, "uniformity": null, "name": null,
     "index_order": "big-endian mixed radix (party 0 most significant)",
     "dtype": "<c16",
     "encoding": "base64", "data": "..."}

Amplitudes are little-endian float64 (re, im) pairs, interleaved, in flat
index order; a subspace stores its K basis vectors back to back.  Payloads
above ``EMBED_LIMIT`` bytes go to a sidecar file instead::

     "encoding": "sidecar", "path": "name.bin", "sha256": "..."

Writing is deterministic (sorted keys, fixed layout), so equal objects give
byte-identical files.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..tensor import PureState, Shape, Subspace, check_capacity

__all__ = [
    "FORMAT_VERSION",
    "write_state",
    "read_state",
    "write_subspace",
    "read_subspace",
    "write_any",
    "read_any",
    "read_header",
    "write_report",
    "dumps",
]

FORMAT_VERSION = 1
EMBED_LIMIT = 64 * 1024
INDEX_ORDER = "big-endian mixed radix (party 0 most significant)"
DTYPE = "<c16"


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _payload_doc(amps: np.ndarray, path: Path, embed_limit: int) -> dict:
    raw = np.ascontiguousarray(amps, dtype=DTYPE).tobytes()
    if len(raw) <= embed_limit:
        return {"encoding": "base64", "data": base64.b64encode(raw).decode("ascii")}
    side = path.with_suffix(".bin")
    side.write_bytes(raw)
    return {"encoding": "sidecar", "path": side.name, "sha256": hashlib.sha256(raw).hexdigest()}


def _write(path, kind: str, dims, K: int, amps, uniformity, name, embed_limit) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "dims": list(dims),
        "K": K,
        "uniformity": uniformity,
        "name": name,
        "index_order": INDEX_ORDER,
        "dtype": DTYPE,
    }
    doc.update(_payload_doc(amps, path, embed_limit))
    path.write_text(dumps(doc))
    return path


def write_state(path, s: PureState, name: str | None = None, embed_limit: int = EMBED_LIMIT) -> Path:
    return _write(path, "state", s.dims, 1, s.amplitudes, None, name, embed_limit)


def write_subspace(path, W: Subspace, embed_limit: int = EMBED_LIMIT) -> Path:
    return _write(path, "subspace", W.dims, W.K, W.basis, W.uniformity, W.name, embed_limit)


def write_any(path, obj, embed_limit: int = EMBED_LIMIT) -> Path:
    if isinstance(obj, PureState):
        return write_state(path, obj, embed_limit=embed_limit)
    return write_subspace(path, obj, embed_limit)


def _parse(path: Path) -> tuple[dict, str]:
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", len(text[: exc.pos].encode())) from None
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: top level must be an object", 0)
    return doc, text


def _field_offset(text: str, key: str) -> int | None:
    i = text.find(f'"{key}"')
    return None if i < 0 else len(text[:i].encode())


def read_header(path) -> dict:
    """Validated metadata without decoding the payload."""
    path = Path(path)
    doc, text = _parse(path)
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: unsupported format_version {doc.get('format_version')!r}",
            _field_offset(text, "format_version") or 0,
        )
    for key in ("kind", "dims", "K", "encoding"):
        if key not in doc:
            raise FormatError(f"{path}: missing field {key!r}", 0)
    if doc["kind"] not in ("state", "subspace"):
        raise FormatError(f"{path}: unknown kind {doc['kind']!r}", _field_offset(text, "kind"))
    if doc.get("dtype", DTYPE) != DTYPE:
        raise FormatError(f"{path}: unsupported dtype {doc['dtype']!r}", _field_offset(text, "dtype"))
    try:
        Shape(tuple(doc["dims"]))
    except Exception as exc:
        raise FormatError(f"{path}: bad dims: {exc}", _field_offset(text, "dims")) from None
    doc["_text"] = text
    return doc


def _payload(path: Path, doc: dict) -> np.ndarray:
    text = doc["_text"]
    dims = tuple(doc["dims"])
    K = int(doc["K"])
    N = Shape(dims).total
    check_capacity(N * K, f"file {path.name}")
    expected = N * K * 16
    if doc["encoding"] == "base64":
        try:
            raw = base64.b64decode(doc["data"], validate=True)
        except (binascii.Error, KeyError, TypeError):
            raise FormatError(f"{path}: invalid base64 payload", _field_offset(text, "data")) from None
    elif doc["encoding"] == "sidecar":
        side = path.parent / doc["path"]
        try:
            raw = side.read_bytes()
        except OSError as exc:
            raise FormatError(f"{path}: cannot read sidecar {side.name}: {exc.strerror}", _field_offset(text, "path")) from None
        if "sha256" in doc and hashlib.sha256(raw).hexdigest() != doc["sha256"]:
            raise FormatError(f"{side}: content hash mismatch", 0)
    else:
        raise FormatError(f"{path}: unknown encoding {doc['encoding']!r}", _field_offset(text, "encoding"))
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload has {len(raw)} bytes, expected {expected} for K={K} and dims {list(dims)}",
            min(len(raw), expected),
        )
    return np.frombuffer(raw, dtype=DTYPE).reshape(K, N).astype(np.complex128)


def read_any(path):
    path = Path(path)
    doc = read_header(path)
    amps = _payload(path, doc)
    shape = Shape(tuple(doc["dims"]))
    try:
        if doc["kind"] == "state":
            if amps.shape[0] != 1:
                raise FormatError(f"{path}: a state file must have K = 1", _field_offset(doc["_text"], "K"))
            return PureState(shape, amps[0])
        return Subspace(shape, amps, doc.get("uniformity"), doc.get("name"))
    except FormatError:
        raise
    except Exception as exc:
        raise FormatError(f"{path}: invalid amplitudes: {exc}", _field_offset(doc["_text"], "data")) from None


def read_state(path) -> PureState:
    obj = read_any(path)
    if not isinstance(obj, PureState):
        raise FormatError(f"{path}: expected a state file, found a subspace", 0)
    return obj


def read_subspace(path) -> Subspace:
    obj = read_any(path)
    return obj if isinstance(obj, Subspace) else obj.as_subspace()


def write_report(path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(doc))
    return path
