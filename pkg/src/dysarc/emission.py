"""Frame-level log-posterior matrices and their on-disk formats.

Binary format "DWEM1" (bit-exact, little-endian):
    magic b"DWEM1" | u32 T | u32 C | f32 frame_shift_ms | T*C f32 row-major
A JSON alternative {"frame_shift_ms": ..., "logits": [[...]]} is accepted
for hand-written test fixtures.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

MAGIC = b"DWEM1"
_HEADER = struct.Struct("<IIf")

NORMALIZATION_TOLERANCE = 1e-3


@dataclass(frozen=True, eq=False)
class EmissionMatrix:
    """T x C log posteriors over phoneme classes, one row per frame."""

    values: np.ndarray
    frame_shift_ms: float = 20.0
    provenance: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise InputError(f"emission must be 2-D, got shape {values.shape}")
        if self.frame_shift_ms <= 0:
            raise InputError("frame_shift_ms must be positive")
        object.__setattr__(self, "values", values)

    @property
    def T(self) -> int:
        return int(self.values.shape[0])

    @property
    def C(self) -> int:
        return int(self.values.shape[1])

    def row_log_norms(self) -> np.ndarray:
        """logsumexp of each row; ~0 for a proper log posterior."""
        if self.T == 0:
            return np.zeros(0)
        m = self.values.max(axis=1, keepdims=True)
        return (m + np.log(np.exp(self.values - m).sum(axis=1, keepdims=True))).ravel()

    def is_log_normalized(self, tol: float = NORMALIZATION_TOLERANCE) -> bool:
        if self.T == 0:
            return True
        return bool(np.all(np.abs(self.row_log_norms()) <= tol))

    def check_finite(self) -> None:
        bad = np.argwhere(np.isnan(self.values))
        if bad.size:
            t, c = bad[0]
            raise InputError(f"NaN in emission at frame {t}, class {c}")


def write_emission(emission: EmissionMatrix, path: str | Path) -> None:
    from .util import write_bytes_atomic

    payload = np.ascontiguousarray(emission.values, dtype="<f4").tobytes()
    header = MAGIC + _HEADER.pack(emission.T, emission.C, emission.frame_shift_ms)
    write_bytes_atomic(path, header + payload)


def load_emission(path: str | Path, *, strict: bool = True) -> EmissionMatrix:
    """Read a DWEM1 or JSON emission file.

    With strict=True (the default for files coming off disk) every row must
    be log-normalized within 1e-3. Noise-injected matrices are only handled
    in memory and bypass this check via their provenance.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[: len(MAGIC)] == MAGIC:
        emission = _parse_binary(raw, str(path))
    else:
        emission = _parse_json(raw, str(path))
    emission.check_finite()
    if strict and not emission.is_log_normalized():
        worst = float(np.abs(emission.row_log_norms()).max())
        raise InputError(
            f"{path}: rows are not log-normalized (worst |logsumexp| = {worst:.3g}); "
            "pass strict=False if this is intended"
        )
    return emission


def _parse_binary(raw: bytes, origin: str) -> EmissionMatrix:
    offset = len(MAGIC)
    if len(raw) < offset + _HEADER.size:
        raise InputError(f"{origin}: truncated emission header")
    t, c, shift = _HEADER.unpack_from(raw, offset)
    offset += _HEADER.size
    expected = t * c * 4
    body = raw[offset:]
    if len(body) != expected:
        raise InputError(f"{origin}: expected {expected} payload bytes, found {len(body)}")
    values = np.frombuffer(body, dtype="<f4").reshape(t, c).astype(np.float64)
    return EmissionMatrix(values, float(shift), provenance=origin)


def _parse_json(raw: bytes, origin: str) -> EmissionMatrix:
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"{origin}: neither a DWEM1 file nor valid JSON ({exc})") from None
    try:
        logits = doc["logits"]
        shift = float(doc.get("frame_shift_ms", 20.0))
    except (TypeError, KeyError) as exc:
        raise InputError(f"{origin}: JSON emission needs a 'logits' array ({exc})") from None
    values = np.asarray(logits, dtype=np.float64)
    if values.ndim == 1 and values.size == 0:
        values = values.reshape(0, 0)
    return EmissionMatrix(values, shift, provenance=origin)
