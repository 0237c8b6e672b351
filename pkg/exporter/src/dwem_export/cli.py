"""CLI: dwem-export <wav...> --model <id> --out <dir>"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .audio import AudioError
from .encoders import DEFAULT_MODEL, EncoderError, load_encoder
from .exporter import export_file
from .writer import WriterError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dwem-export",
        description="Export phoneme-CTC emissions (DWEM1) plus the matching lexicon.",
    )
    parser.add_argument("audio", nargs="+", help="WAV files (resampled to 16 kHz mono)")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"encoder id: builtin:specproj or hf:<repo> (default {DEFAULT_MODEL})")
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        encoder = load_encoder(args.model)
        for audio in args.audio:
            path = Path(audio)
            if not path.exists():
                print(f"dwem-export: error: audio file not found: {path}", file=sys.stderr)
                return 1
            result = export_file(path, encoder, args.out)
            print(
                f"{path.name}: T={result.frames} C={result.classes} "
                f"duration={result.duration_s:.2f}s -> {result.emission_path}"
            )
    except (AudioError, EncoderError, WriterError, OSError) as exc:
        print(f"dwem-export: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
