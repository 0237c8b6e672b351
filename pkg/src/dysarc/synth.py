"""Synthetic emissions with exact dysfluency ground truth, noise injection,
and the beta-sweep / noise-level experiment drivers.

Real encoders are deliberately out of the loop: a synthetic emission puts a
fixed probability mass on the intended class of every frame, which makes
gold labels exact while preserving the decoder-facing interface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decoder import PathSegment, decode, segment_timestamps
from .detect import detect_dysfluency, summarize
from .emission import EmissionMatrix
from .errors import DysarcError, InputError
from .graphs import SeverityConfig
from .lexicon import Lexicon, default_lexicon
from .metrics import SimilarityMatrix, aggregate_detection, default_similarity, per, wper

# Plan operations: ("repeat", start, stop, times) repeats ref[start:stop]
# times times right after it; ("delete", pos) drops ref[pos];
# ("insert_backjump", pos) starts the utterance at ref[pos], then says ref[0]
# out of order and continues from pos+1 (the only shape that triggers the
# detector's insertion rule, which needs a state below everything visited).
PlanOp = tuple


@dataclass(frozen=True)
class SyntheticSpec:
    ref_phonemes: tuple[str, ...]
    dysfluency_plan: tuple[PlanOp, ...] = ()
    frames_per_phoneme: int = 3
    blank_frames: int = 1
    confidence: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.frames_per_phoneme < 1:
            raise InputError("frames_per_phoneme must be >= 1")
        if self.blank_frames < 0:
            raise InputError("blank_frames must be >= 0")
        if not 0.5 < self.confidence < 1.0:
            raise InputError("confidence must lie in (0.5, 1)")


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise InputError("sigma must be finite and >= 0")


@dataclass(frozen=True)
class GoldLabels:
    """What the speaker actually said, with rule-derived dysfluency labels.

    Annotations are (phoneme, type, reference start state) triples; segments
    carry the intended frame spans and are present only for freshly
    synthesized gold (they do not survive the manifest round-trip).
    """

    spoken_phonemes: tuple[str, ...]
    annotations: tuple[tuple[str, str, int], ...]
    deleted_reference_phonemes: tuple[str, ...]
    segments: tuple[PathSegment, ...] = ()

    @property
    def summary(self) -> dict:
        counts = {"normal": 0, "repetition": 0, "insertion": 0, "deletion": 0}
        for _, kind, _ in self.annotations:
            counts[kind] += 1
        counts["deleted_phonemes"] = len(self.deleted_reference_phonemes)
        return counts


def expand_plan(ref, plan) -> list[int]:
    """Reference positions spoken, in order, after applying the plan."""
    ref = list(ref)
    S = len(ref)
    positions = list(range(S))
    for op in plan:
        kind = op[0]
        if kind == "repeat":
            _, start, stop, times = op
            if not (0 <= start < stop <= S):
                raise InputError(f"repeat range [{start}, {stop}) outside reference of length {S}")
            if stop >= S:
                # No jump arcs leave the accept state, so a repeat must end
                # before the final phoneme to stay decodable.
                raise InputError("repeat range must end before the last reference phoneme")
            if times < 1:
                raise InputError("repeat times must be >= 1")
            anchor = _last_index(positions, stop - 1)
            positions[anchor + 1:anchor + 1] = list(range(start, stop)) * times
        elif kind == "delete":
            _, pos = op
            if pos not in positions:
                raise InputError(f"delete position {pos} not present (already deleted?)")
            positions.remove(pos)
        elif kind == "insert_backjump":
            _, pos = op
            if not 1 <= pos <= S - 2:
                raise InputError(f"insert_backjump position must be in [1, {S - 2}]")
            if positions != list(range(S)):
                raise InputError("insert_backjump must be the only plan operation")
            positions = [pos, 0] + list(range(pos + 1, S))
        else:
            raise InputError(f"unknown plan operation {kind!r}")
    if not positions:
        raise InputError("plan produced an empty spoken sequence")
    return positions


def _last_index(items: list[int], value: int) -> int:
    for i in range(len(items) - 1, -1, -1):
        if items[i] == value:
            return i
    raise InputError(f"position {value} not present in plan expansion")


def synthesize_emission(spec: SyntheticSpec, lexicon: Lexicon | None = None):
    """Emission for the planned utterance plus its gold labels.

    Each spoken phoneme is held frames_per_phoneme frames with blank_frames
    of blank between phonemes (at least one between identical neighbours,
    which CTC could not otherwise keep apart). Rows are log-normalized:
    `confidence` on the intended class, the rest uniform.
    """
    if lexicon is None:
        lexicon = default_lexicon()
    ref = lexicon.check_phonemes(spec.ref_phonemes)
    if not ref:
        raise InputError("reference phoneme sequence is empty")
    positions = expand_plan(ref, spec.dysfluency_plan)
    spoken = [ref[m] for m in positions]

    frames: list[int] = []  # class ids per frame
    spans: list[tuple[int, int]] = []
    blank_id = 1
    for k, phoneme in enumerate(spoken):
        if k > 0:
            gap = spec.blank_frames
            if spoken[k - 1] == phoneme:
                gap = max(1, gap)
            frames.extend([blank_id] * gap)
        begin = len(frames)
        frames.extend([lexicon.class_id(phoneme)] * spec.frames_per_phoneme)
        spans.append((begin, len(frames)))

    C = lexicon.C
    log_true = math.log(spec.confidence)
    log_rest = math.log((1.0 - spec.confidence) / (C - 1))
    values = np.full((len(frames), C), log_rest)
    for t, cid in enumerate(frames):
        values[t, cid - 1] = log_true
    emission = EmissionMatrix(values, provenance=f"synthetic(seed={spec.seed})")

    segments = segment_timestamps(
        [
            PathSegment(m, m + 1, ref[m], begin, end)
            for m, (begin, end) in zip(positions, spans)
        ],
        emission.frame_shift_ms,
    )
    detection = detect_dysfluency(segments, ref)
    gold = GoldLabels(
        tuple(spoken),
        tuple((a.phoneme, a.dysfluency_type, a.segment.start_state)
              for a in detection.annotations),
        detection.deleted_phonemes,
        tuple(segments),
    )
    return emission, gold


def inject_noise(emission: EmissionMatrix, noise: NoiseSpec) -> EmissionMatrix:
    """Add iid N(0, sigma^2) to every cell; rows are not renormalized."""
    if noise.sigma == 0.0:
        return emission
    rng = np.random.default_rng(noise.seed)
    values = emission.values + rng.normal(0.0, noise.sigma, emission.values.shape)
    return EmissionMatrix(
        values, emission.frame_shift_ms,
        provenance=f"{emission.provenance}+noise(sigma={noise.sigma},seed={noise.seed})",
    )


@dataclass(frozen=True)
class CorpusItem:
    """One synthetic utterance: its inputs and its gold labels."""

    id: str
    ref_phonemes: tuple[str, ...]
    emission: EmissionMatrix
    gold: GoldLabels
    plan: tuple[PlanOp, ...] = ()


def _random_reference(rng, lexicon: Lexicon, length: int) -> tuple[str, ...]:
    phonemes = lexicon.phonemes
    return tuple(phonemes[rng.randrange(len(phonemes))] for _ in range(length))


def _random_plan(rng, kind: str, S: int) -> tuple[PlanOp, ...]:
    if kind == "fluent":
        return ()
    if kind == "rep":
        # Repeat a short run, like a speaker restarting a word. Runs of one
        # phoneme are excluded: merging the two copies by mishearing the
        # single separating blank is cheaper than a distance-1 return arc at
        # the default operating point, so they are undetectable by design.
        run = rng.choice((2, 3)) if S >= 5 else 2
        start = rng.randrange(0, S - run)  # run ends before the last phoneme
        times = 1 if rng.random() < 0.8 else 2
        return (("repeat", start, start + run, times),)
    if kind == "del":
        # Leading deletions: the one shape whose skipped phonemes the
        # detection rules count exactly.
        run = 1 if S < 6 or rng.random() < 0.7 else 2
        return tuple(("delete", pos) for pos in range(run))
    if kind == "ins":
        pos = rng.randrange(1, min(3, S - 1))
        return (("insert_backjump", pos),)
    raise InputError(f"unknown corpus kind {kind!r}")


def synthesize_corpus(
    kind: str,
    count: int,
    seed: int,
    lexicon: Lexicon | None = None,
    *,
    min_len: int = 6,
    max_len: int = 10,
    frames_per_phoneme: int = 3,
    blank_frames: int = 1,
    confidence: float = 0.9,
) -> list[CorpusItem]:
    """A corpus of one dysfluency kind: fluent | rep | del | ins | mixed."""
    import random

    if count < 1:
        raise InputError("corpus count must be >= 1")
    if lexicon is None:
        lexicon = default_lexicon()
    items = []
    for index in range(count):
        rng = random.Random(seed ^ index)
        length = rng.randrange(min_len, max_len + 1)
        ref = _random_reference(rng, lexicon, length)
        item_kind = rng.choice(("rep", "del", "ins")) if kind == "mixed" else kind
        plan = _random_plan(rng, item_kind, length)
        spec = SyntheticSpec(
            ref, plan,
            frames_per_phoneme=frames_per_phoneme,
            blank_frames=blank_frames,
            confidence=confidence,
            seed=seed ^ index,
        )
        emission, gold = synthesize_emission(spec, lexicon)
        items.append(CorpusItem(f"{kind}-{index:04d}", ref, emission, gold, plan))
    return items


def evaluate_corpus(
    items,
    hyp_results,
    sim: SimilarityMatrix | None = None,
) -> dict:
    """Pooled PER/WPER of decoded vs. gold spoken phonemes plus detection accuracy.

    `hyp_results` pairs each item with (transcription, detection).
    """
    if sim is None:
        sim = default_similarity()
    per_num = wper_num = ref_len = 0.0
    pairs = []
    for item, (transcription, detection) in zip(items, hyp_results):
        gold_spoken = item.gold.spoken_phonemes
        n = len(gold_spoken)
        per_num += per(gold_spoken, transcription.phonemes) * n
        wper_num += wper(gold_spoken, transcription.phonemes, sim) * n
        ref_len += n
        pairs.append((
            item.gold.summary,
            summarize(detection.annotations, detection.deleted_reference),
        ))
    detection_acc = aggregate_detection(pairs)
    return {
        "per": per_num / ref_len,
        "wper": wper_num / ref_len,
        "detection": detection_acc,
    }


def decode_corpus(items, config: SeverityConfig, lexicon: Lexicon | None = None, jobs: int = 1):
    """Decode + detect every item; order follows the input."""
    if lexicon is None:
        lexicon = default_lexicon()
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_decode_one, ((item, config, lexicon) for item in items)))
    return [_decode_one((item, config, lexicon)) for item in items]


def _decode_one(task):
    item, config, lexicon = task
    transcription = decode(item.emission, item.ref_phonemes, config, lexicon)
    detection = detect_dysfluency(transcription.segments, item.ref_phonemes)
    return transcription, detection


def sweep_beta(items, betas, lexicon: Lexicon | None = None, jobs: int = 1) -> list[dict]:
    """Metrics per beta. In the underflow regime (10^-beta == 0) the
    reference machine is effectively linear; that run is asserted to contain
    no non-normal detections."""
    rows = []
    for beta in betas:
        config = SeverityConfig(beta)
        results = decode_corpus(items, config, lexicon, jobs)
        metrics = evaluate_corpus(items, results)
        if config.underflowed:
            flagged = sum(
                1
                for _, detection in results
                for a in detection.annotations
                if a.dysfluency_type != "normal"
            )
            if flagged:
                raise DysarcError(
                    f"beta={beta} underflowed to a linear reference machine but "
                    f"{flagged} non-normal annotations were produced"
                )
        rows.append({"beta": beta, **_flatten(metrics)})
    return rows


def noise_test(items, sigmas, seed: int, config: SeverityConfig,
               lexicon: Lexicon | None = None, jobs: int = 1) -> list[dict]:
    """Metrics per noise level sigma; per-utterance noise streams are seeded
    seed^index so parallelism cannot change results."""
    rows = []
    for sigma in sigmas:
        noisy = [
            CorpusItem(
                item.id, item.ref_phonemes,
                inject_noise(item.emission, NoiseSpec(sigma, seed ^ index)),
                item.gold, item.plan,
            )
            for index, item in enumerate(items)
        ]
        results = decode_corpus(noisy, config, lexicon, jobs)
        metrics = evaluate_corpus(noisy, results)
        rows.append({"sigma": sigma, **_flatten(metrics)})
    return rows


def _flatten(metrics: dict) -> dict:
    detection = metrics["detection"]
    return {
        "per": metrics["per"],
        "wper": metrics["wper"],
        "rep_acc": detection["repetition"],
        "del_acc": detection["deletion"],
        "ins_acc": detection["insertion"],
    }


def experiment_csv(rows, key: str) -> str:
    """CSV with columns (beta|sigma, per, wper, rep_acc, del_acc, ins_acc)."""
    header = [key, "per", "wper", "rep_acc", "del_acc", "ins_acc"]
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for col in header:
            value = row[col]
            cells.append("" if value is None else repr(float(value)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_corpus(items, out_dir) -> "Path":
    """Write DWEM1 emissions plus a JSON-lines manifest; returns the manifest path."""
    import json
    from pathlib import Path

    from .emission import write_emission
    from .util import write_text_atomic

    out_dir = Path(out_dir)
    (out_dir / "emissions").mkdir(parents=True, exist_ok=True)
    lines = []
    for item in items:
        rel = f"emissions/{item.id}.dwem"
        write_emission(item.emission, out_dir / rel)
        lines.append(json.dumps({
            "id": item.id,
            "emission": rel,
            "ref_phonemes": list(item.ref_phonemes),
            "spoken_phonemes": list(item.gold.spoken_phonemes),
            "annotations": [
                {"phoneme": p, "type": t, "start_state": s}
                for p, t, s in item.gold.annotations
            ],
            "deleted_reference_phonemes": list(item.gold.deleted_reference_phonemes),
            "plan": [list(op) for op in item.plan],
        }))
    manifest = out_dir / "manifest.jsonl"
    write_text_atomic(manifest, "\n".join(lines) + "\n")
    return manifest


def load_corpus(manifest_path) -> list[CorpusItem]:
    """Read a manifest written by write_corpus; emissions load lazily-strict."""
    import json
    from pathlib import Path

    from .emission import load_emission

    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    items = []
    for line in manifest_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        gold = GoldLabels(
            tuple(doc["spoken_phonemes"]),
            tuple((a["phoneme"], a["type"], a["start_state"]) for a in doc["annotations"]),
            tuple(doc["deleted_reference_phonemes"]),
        )
        items.append(CorpusItem(
            doc["id"],
            tuple(doc["ref_phonemes"]),
            load_emission(base / doc["emission"]),
            gold,
            tuple(tuple(op) for op in doc.get("plan", [])),
        ))
    if not items:
        raise InputError(f"manifest {manifest_path} contains no utterances")
    return items
