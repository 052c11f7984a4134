"""On-disk formats: matrix files and fitted-model files.

Matrix file (binary, little-endian)::

    offset 0   8 bytes   magic b"CTMHMAT1"
    offset 8   uint64    row count
    offset 16  uint64    column count
    offset 24  4 bytes   element type tag b"f8le" (IEEE float64)
    offset 28  rows*cols*8 bytes, row-major payload

Anything not starting with the magic is read as comma-separated text, with
an optional non-numeric header line.

Model file::

    8 bytes magic b"CTMHMOD1", uint32 header length, UTF-8 JSON header,
    then the coefficient matrix B as an embedded matrix file.
"""

from __future__ import annotations

import hashlib
import io
import json
import struct

import numpy as np

from .basis import BasisFamily, uniform_times
from .memfit import ContinuousMemory

MATRIX_MAGIC = b"CTMHMAT1"
MODEL_MAGIC = b"CTMHMOD1"
DTYPE_TAG = b"f8le"
_MATRIX_HEADER = struct.Struct("<8sQQ4s")
_MODEL_PREFIX = struct.Struct("<8sI")
MODEL_FORMAT_VERSION = 1


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _check_finite(x: np.ndarray) -> None:
    bad = np.flatnonzero(~np.all(np.isfinite(x), axis=1))
    if bad.size:
        raise FormatError(f"row {bad[0]} contains non-finite values")


def matrix_to_bytes(x: np.ndarray) -> bytes:
    x = np.asarray(x, dtype="<f8")
    if x.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {x.shape}")
    header = _MATRIX_HEADER.pack(MATRIX_MAGIC, x.shape[0], x.shape[1], DTYPE_TAG)
    return header + np.ascontiguousarray(x).tobytes()


def matrix_from_bytes(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Decode a binary matrix starting at ``offset``; returns it and the end offset."""
    if len(buf) - offset < _MATRIX_HEADER.size:
        raise FormatError("truncated matrix header")
    magic, rows, cols, tag = _MATRIX_HEADER.unpack_from(buf, offset)
    if magic != MATRIX_MAGIC:
        raise FormatError("bad matrix magic")
    if tag != DTYPE_TAG:
        raise FormatError(f"unsupported element type {tag!r}")
    start = offset + _MATRIX_HEADER.size
    end = start + rows * cols * 8
    if end > len(buf) or (offset == 0 and end != len(buf)):
        raise FormatError(
            f"payload length does not match header ({rows}x{cols})"
        )
    x = np.frombuffer(buf, dtype="<f8", count=rows * cols, offset=start)
    x = x.reshape(rows, cols).astype(np.float64)
    _check_finite(x)
    return x, end


def _parse_csv(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty CSV matrix")
    try:
        [float(v) for v in lines[0].split(",")]
    except ValueError:
        lines = lines[1:]  # header line
    try:
        x = np.loadtxt(io.StringIO("\n".join(lines)), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FormatError(f"malformed CSV matrix: {exc}") from None
    if x.size == 0:
        raise FormatError("empty CSV matrix")
    _check_finite(x)
    return x


def load_matrix(path) -> np.ndarray:
    """Read a binary matrix file, or CSV text when the magic is absent."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf.startswith(MATRIX_MAGIC):
        return matrix_from_bytes(buf)[0]
    if buf.startswith(MODEL_MAGIC):
        raise FormatError(f"{path} is a model file, not a matrix")
    try:
        text = buf.decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError(f"{path} is neither a binary matrix nor CSV text") from None
    return _parse_csv(text)


def save_matrix(path, x, csv: bool | None = None, header: bool = False) -> None:
    """Write ``x``; CSV when ``csv`` is true or the path ends in ``.csv``."""
    path = str(path)
    if csv is None:
        csv = path.lower().endswith(".csv")
    x = np.asarray(x, dtype=float)
    if csv:
        buf = io.StringIO()
        hdr = ",".join(f"x{j}" for j in range(x.shape[1])) if header else ""
        np.savetxt(buf, x, delimiter=",", fmt="%.17g", header=hdr, comments="")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        with open(path, "wb") as fh:
            fh.write(matrix_to_bytes(x))


def memory_checksum(x) -> str:
    """SHA-256 over the shape and little-endian float64 payload."""
    x = np.ascontiguousarray(np.asarray(x, dtype="<f8"))
    h = hashlib.sha256(f"{x.shape[0]}x{x.shape[1]}:".encode())
    h.update(x.tobytes())
    return h.hexdigest()


def model_to_bytes(cm: ContinuousMemory, source_sha256: str) -> bytes:
    header = {
        "format": MODEL_FORMAT_VERSION,
        "basis": {"kind": cm.basis.kind, "n": cm.basis.n},
        "lambda": cm.lam,
        "l": int(cm.times.size),
        "d": cm.d,
        "times": "uniform",
        "source_sha256": source_sha256,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    return _MODEL_PREFIX.pack(MODEL_MAGIC, len(blob)) + blob + matrix_to_bytes(cm.coeffs)


def model_from_bytes(buf: bytes) -> tuple[ContinuousMemory, dict]:
    if len(buf) < _MODEL_PREFIX.size:
        raise FormatError("truncated model file")
    magic, size = _MODEL_PREFIX.unpack_from(buf)
    if magic != MODEL_MAGIC:
        raise FormatError("bad model magic")
    start = _MODEL_PREFIX.size
    try:
        header = json.loads(buf[start : start + size].decode("utf-8"))
        basis = BasisFamily(n=header["basis"]["n"], kind=header["basis"]["kind"])
        lam = header["lambda"]
        l = header["l"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"bad model header: {exc}") from None
    if header.get("format") != MODEL_FORMAT_VERSION or header.get("times") != "uniform":
        raise FormatError("unsupported model header")
    coeffs, end = matrix_from_bytes(buf, start + size)
    if end != len(buf):
        raise FormatError("trailing bytes after model payload")
    cm = ContinuousMemory(coeffs=coeffs, basis=basis, lam=lam, times=uniform_times(l))
    return cm, header


def save_model(path, cm: ContinuousMemory, source_sha256: str) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(cm, source_sha256))


def load_model(path) -> tuple[ContinuousMemory, dict]:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


def is_model_file(path) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MODEL_MAGIC)) == MODEL_MAGIC
