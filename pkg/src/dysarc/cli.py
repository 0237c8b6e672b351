"""Command-line driver.

Subcommands: decode, eval, simulate, sweep-beta, noise-test,
export-similarity. Configuration precedence is flags > DWFST_* environment
variables > built-in defaults. Exit codes: 0 success, 1 bad input or usage,
2 decode found no path. Output files are written atomically and reruns with
identical inputs and seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .decoder import decode
from .detect import detect_dysfluency, detection_report
from .emission import load_emission
from .errors import DysarcError, InputError, NoPathError
from .graphs import SeverityConfig
from .lexicon import Lexicon, default_lexicon_path, load_lexicon
from .metrics import (
    ACCURACY_DEFINITION,
    SimilarityMatrix,
    aggregate_detection,
    default_similarity,
    default_similarity_path,
    load_similarity,
    per,
    position_detection_accuracy,
    similarity_csv,
    wper,
)
from .pronounce import PronouncingDictionary, demo_dictionary_path, text_to_phonemes
from .synth import (
    decode_corpus,
    experiment_csv,
    load_corpus,
    noise_test,
    sweep_beta,
    synthesize_corpus,
    write_corpus,
)
from .util import sha256_file, write_text_atomic

VERSION = "0.1.0"

DEFAULT_BETA = 2.5  # sits on the flat region of the beta sweep; a choice, not a given


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; the contract is 1
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _env(name: str, default):
    return os.environ.get(f"DWFST_{name}", default)


@dataclass
class CliConfig:
    beta: float
    lexicon: Lexicon
    lexicon_path: Path
    dictionary_path: Path
    similarity: SimilarityMatrix
    strict_final: bool
    free_insertion_arcs: bool
    seed: int
    jobs: int

    @classmethod
    def from_args(cls, args) -> "CliConfig":
        lexicon_path = Path(args.lexicon)
        dictionary_path = Path(args.dictionary)
        # Fail fast: every configured file must exist and parse before work starts.
        lexicon = load_lexicon(lexicon_path)
        if not dictionary_path.exists():
            raise InputError(f"pronouncing dictionary not found: {dictionary_path}")
        if args.similarity:
            similarity = load_similarity(args.similarity)
        else:
            similarity = default_similarity()
        return cls(
            beta=float(args.beta),
            lexicon=lexicon,
            lexicon_path=lexicon_path,
            dictionary_path=dictionary_path,
            similarity=similarity,
            strict_final=bool(getattr(args, "strict_final", False)),
            free_insertion_arcs=bool(getattr(args, "free_insertion_arcs", False)),
            seed=int(args.seed),
            jobs=int(args.jobs),
        )

    @property
    def severity(self) -> SeverityConfig:
        return SeverityConfig(self.beta)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beta", type=float, default=_env("BETA", DEFAULT_BETA),
                        help=f"dysfluency severity parameter (default {DEFAULT_BETA})")
    parser.add_argument("--lexicon", default=_env("LEXICON", str(default_lexicon_path())),
                        help="lexicon file: one label per line, blank first")
    parser.add_argument("--dictionary", default=_env("DICTIONARY", str(demo_dictionary_path())),
                        help="CMUdict-format pronouncing dictionary")
    parser.add_argument("--similarity", default=_env("SIMILARITY", ""),
                        help="phoneme similarity CSV (default: built-in articulatory matrix)")
    parser.add_argument("--seed", type=int, default=_env("SEED", 0))
    parser.add_argument("--jobs", type=int, default=_env("JOBS", 1),
                        help="parallel workers for batch commands")
    parser.add_argument("--strict-final", action="store_true",
                        help="disable early-accept arcs: audio must cover the whole reference")
    parser.add_argument("--free-insertion-arcs", action="store_true",
                        help="experimental: self-loop insertion arcs in the reference machine")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dysarc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print version and data hashes")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("decode", help="decode one emission (or a corpus manifest)")
    p.add_argument("emission", nargs="?", help="DWEM1 or JSON emission file")
    p.add_argument("--text", help="reference text, resolved through the dictionary")
    p.add_argument("--phonemes", help="reference phonemes, space-separated")
    p.add_argument("--phonemes-file", help="file with space/newline-separated reference phonemes")
    p.add_argument("--manifest", help="decode every utterance of a corpus manifest (JSONL out)")
    p.add_argument("--out", help="report path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score a decoded corpus against its gold manifest")
    p.add_argument("--hyp", required=True, help="JSONL reports from `decode --manifest`")
    p.add_argument("--gold", required=True, help="gold corpus manifest")
    p.add_argument("--out", help="metrics JSON path (default: stdout)")
    p.add_argument("--csv", help="optional per-utterance CSV path")
    p.add_argument("--position-level", action="store_true",
                   help="also report stricter type+position accuracy")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="generate a synthetic corpus with gold labels")
    p.add_argument("--kind", choices=("fluent", "rep", "del", "ins", "mixed"), default="rep")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--min-len", type=int, default=6)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--frames-per-phoneme", type=int, default=3)
    p.add_argument("--blank-frames", type=int, default=1)
    p.add_argument("--confidence", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-beta", help="decode a corpus at several beta values")
    p.add_argument("--manifest", required=True)
    p.add_argument("--betas", default="1,2,2.5,3,4,6", help="comma-separated beta values")
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_sweep_beta)

    p = sub.add_parser("noise-test", help="decode a corpus under Gaussian emission noise")
    p.add_argument("--manifest", required=True)
    p.add_argument("--sigmas", default="0,0.1,1,10", help="comma-separated noise levels")
    p.add_argument("--out", help="CSV path (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_noise_test)

    p = sub.add_parser("export-similarity", help="write the built-in similarity matrix as CSV")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_export_similarity)

    return parser


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        write_text_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _resolve_reference(args, config: CliConfig) -> tuple[str, ...]:
    given = [x for x in (args.text, args.phonemes, args.phonemes_file) if x]
    if len(given) != 1:
        raise InputError("provide exactly one of --text, --phonemes, --phonemes-file")
    if args.text:
        dictionary = PronouncingDictionary.load(config.dictionary_path)
        phonemes = text_to_phonemes(args.text, dictionary)
    elif args.phonemes:
        phonemes = tuple(args.phonemes.split())
    else:
        phonemes = tuple(Path(args.phonemes_file).read_text(encoding="utf-8").split())
    return config.lexicon.check_phonemes(phonemes)


def cmd_decode(args) -> int:
    config = CliConfig.from_args(args)
    if args.manifest:
        items = load_corpus(args.manifest)
        results = decode_corpus(items, config.severity, config.lexicon, config.jobs)
        lines = []
        for item, (transcription, detection) in zip(items, results):
            report = {"id": item.id, **detection_report(transcription, detection)}
            lines.append(json.dumps(report))
        _emit(args, "\n".join(lines) + "\n")
        return 0
    if not args.emission:
        raise InputError("decode needs an emission file (or --manifest)")
    emission_path = Path(args.emission)
    if not emission_path.exists():
        raise InputError(f"emission file not found: {emission_path}")
    reference = _resolve_reference(args, config)
    emission = load_emission(emission_path)
    transcription = decode(
        emission, reference, config.severity, config.lexicon,
        strict_final=config.strict_final,
        free_insertion_arcs=config.free_insertion_arcs,
    )
    detection = detect_dysfluency(transcription.segments, reference)
    _emit(args, json.dumps(detection_report(transcription, detection), indent=2) + "\n")
    return 0


def _load_hyp_reports(path: Path) -> dict[str, dict]:
    reports = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        if "id" not in doc:
            raise InputError(f"{path}: hypothesis line without an 'id' field")
        reports[doc["id"]] = doc
    if not reports:
        raise InputError(f"hypothesis file {path} contains no reports")
    return reports


def cmd_eval(args) -> int:
    config = CliConfig.from_args(args)
    items = load_corpus(args.gold)
    hyps = _load_hyp_reports(Path(args.hyp))
    gold_ids = [item.id for item in items]
    missing = sorted(set(gold_ids) - set(hyps))
    extra = sorted(set(hyps) - set(gold_ids))
    if missing or extra:
        raise InputError(
            f"utterance ids do not align: missing from hyp {missing[:5]}, "
            f"unexpected in hyp {extra[:5]}"
        )

    sim = config.similarity
    per_num = wper_num = ref_len = 0.0
    pairs = []
    csv_rows = []
    gold_positions = []
    hyp_positions = []
    for item in items:
        report = hyps[item.id]
        hyp_phonemes = [seg["phoneme"] for seg in report["segments"]]
        gold_spoken = item.gold.spoken_phonemes
        u_per = per(gold_spoken, hyp_phonemes)
        u_wper = wper(gold_spoken, hyp_phonemes, sim)
        n = len(gold_spoken)
        per_num += u_per * n
        wper_num += u_wper * n
        ref_len += n
        gold_counts = item.gold.summary
        hyp_counts = report["summary"]
        pairs.append((gold_counts, hyp_counts))
        csv_rows.append((item.id, u_per, u_wper,
                         gold_counts["repetition"], hyp_counts["repetition"],
                         gold_counts["deleted_phonemes"], hyp_counts["deleted_phonemes"],
                         gold_counts["insertion"], hyp_counts["insertion"]))
        if args.position_level:
            gold_positions.extend((t, s) for _, t, s in item.gold.annotations)
            hyp_positions.extend(
                (d["type"], seg["start_state"])
                for seg, d in zip(report["segments"], report["dysfluency"])
            )

    metrics = {
        "per": per_num / ref_len,
        "wper": wper_num / ref_len,
        "detection": aggregate_detection(pairs),
        "accuracy_definition": ACCURACY_DEFINITION,
    }
    if args.position_level:
        metrics["detection_position"] = position_detection_accuracy(gold_positions, hyp_positions)
    _emit(args, json.dumps(metrics, indent=2) + "\n")
    if args.csv:
        header = "id,per,wper,rep_gold,rep_hyp,del_gold,del_hyp,ins_gold,ins_hyp"
        lines = [header] + [",".join(str(c) for c in row) for row in csv_rows]
        write_text_atomic(args.csv, "\n".join(lines) + "\n")
    return 0


def cmd_simulate(args) -> int:
    config = CliConfig.from_args(args)
    items = synthesize_corpus(
        args.kind, args.count, config.seed, config.lexicon,
        min_len=args.min_len, max_len=args.max_len,
        frames_per_phoneme=args.frames_per_phoneme,
        blank_frames=args.blank_frames,
        confidence=args.confidence,
    )
    manifest = write_corpus(items, args.out)
    print(manifest)
    return 0


def _parse_floats(text: str, what: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse {what} list: {text!r}") from None
    if not values:
        raise InputError(f"empty {what} list")
    return values


def cmd_sweep_beta(args) -> int:
    config = CliConfig.from_args(args)
    betas = _parse_floats(args.betas, "beta")
    if any(b <= 0 for b in betas):
        raise InputError("beta values must be positive")
    items = load_corpus(args.manifest)
    rows = sweep_beta(items, betas, config.lexicon, config.jobs)
    _emit(args, experiment_csv(rows, "beta"))
    return 0


def cmd_noise_test(args) -> int:
    config = CliConfig.from_args(args)
    sigmas = _parse_floats(args.sigmas, "sigma")
    items = load_corpus(args.manifest)
    rows = noise_test(items, sigmas, config.seed, config.severity, config.lexicon, config.jobs)
    _emit(args, experiment_csv(rows, "sigma"))
    return 0


def cmd_export_similarity(args) -> int:
    write_text_atomic(args.out, similarity_csv(default_similarity()))
    return 0


def _print_version() -> None:
    print(f"dysarc {VERSION}")
    print(f"lexicon sha256 {sha256_file(default_lexicon_path())}")
    print(f"similarity sha256 {sha256_file(default_similarity_path())}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0; usage errors exit 1 via _Parser.error
        return int(exc.code or 0)
    if args.version:
        _print_version()
        return 0
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except NoPathError as exc:
        print(f"dysarc: no path: {exc}", file=sys.stderr)
        return 2
    except (DysarcError, OSError, json.JSONDecodeError) as exc:
        print(f"dysarc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
