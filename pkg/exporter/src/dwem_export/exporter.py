"""Tie audio, encoder, and writers together."""

from __future__ import annotations

from pathlib import Path

from .audio import load_wav
from .writer import ExportResult, WriterError, write_emission_file, write_or_verify_lexicon


def export_file(audio_path: str | Path, encoder, out_dir: str | Path) -> ExportResult:
    """Encode one audio file: write `<stem>.dwem` and the lexicon into out_dir."""
    audio_path = Path(audio_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    samples = load_wav(audio_path)
    values = encoder.encode(samples)
    if values.shape[1] != len(encoder.labels):
        raise WriterError(
            f"encoder produced {values.shape[1]} classes but its lexicon has "
            f"{len(encoder.labels)}"
        )
    write_or_verify_lexicon(out_dir / "lexicon.txt", encoder.labels)
    emission_path = out_dir / (audio_path.stem + ".dwem")
    write_emission_file(emission_path, values, encoder.frame_shift_ms)
    return ExportResult(
        emission_path=emission_path,
        frames=int(values.shape[0]),
        classes=int(values.shape[1]),
        duration_s=len(samples) / 16000.0,
    )
