"""DWEM1 emission files and the lexicon file, written from this side of the
format contract (bit-compatible with the decoder's reader)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"DWEM1"
_HEADER = struct.Struct("<IIf")


class WriterError(Exception):
    pass


@dataclass(frozen=True)
class ExportResult:
    emission_path: Path
    frames: int
    classes: int
    duration_s: float


def write_emission_file(path: str | Path, values: np.ndarray, frame_shift_ms: float) -> None:
    values = np.asarray(values)
    if values.ndim != 2:
        raise WriterError(f"emission must be 2-D, got shape {values.shape}")
    t, c = values.shape
    payload = np.ascontiguousarray(values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(t, c, float(frame_shift_ms)))
        fh.write(payload)


def lexicon_text(labels) -> str:
    return "\n".join(labels) + "\n"


def write_or_verify_lexicon(path: str | Path, labels) -> None:
    """Write the lexicon, or verify byte equality if one already exists.

    A mismatching lexicon (different classes or order) is a hard error:
    silently remapping emission columns would corrupt every downstream
    decode.
    """
    path = Path(path)
    text = lexicon_text(labels)
    if path.exists():
        existing = path.read_text(encoding="utf-8")
        if existing != text:
            existing_labels = [l for l in existing.splitlines() if l.strip()]
            raise WriterError(
                f"{path} already exists with {len(existing_labels)} classes; "
                f"this model head has {len(list(labels))}: refusing to overwrite or remap"
            )
        return
    path.write_text(text, encoding="utf-8")
