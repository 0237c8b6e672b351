"""Phonetic error rates, the weighted variant, and detection accuracy.

WPER scales substitution cost by 1 - S(i, j) where S is a phoneme
similarity matrix; deletions and insertions cost 1, and the alignment is
the one minimizing the weighted cost. The shipped default matrix is built
from articulatory features and versioned as a CSV so results reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InputError
from .lexicon import ARPABET

MATCH = "match"
SUBSTITUTE = "substitute"
DELETE = "delete"
INSERT = "insert"


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    labels: tuple[str, ...]
    values: np.ndarray  # symmetric, unit diagonal, entries in [0, 1]
    provenance: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        n = len(self.labels)
        if values.shape != (n, n):
            raise InputError(f"similarity matrix shape {values.shape} != ({n}, {n})")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.labels)})

    def similarity(self, a: str, b: str) -> float:
        index = self._index  # type: ignore[attr-defined]
        try:
            return float(self.values[index[a], index[b]])
        except KeyError as exc:
            raise InputError(f"phoneme {exc.args[0]!r} is not in the similarity matrix") from None


@dataclass(frozen=True)
class EditAlignment:
    """Minimum-cost edit script; replaying ops on the reference gives the hypothesis."""

    ops: tuple[tuple, ...]  # (MATCH, p) | (SUBSTITUTE, i, j) | (DELETE, i) | (INSERT, j)
    cost: float

    @property
    def deletions(self) -> int:
        return sum(1 for op in self.ops if op[0] == DELETE)

    @property
    def insertions(self) -> int:
        return sum(1 for op in self.ops if op[0] == INSERT)

    @property
    def substituted_pairs(self) -> tuple[tuple[str, str], ...]:
        return tuple((op[1], op[2]) for op in self.ops if op[0] == SUBSTITUTE)


def align(ref, hyp, substitution_cost=None) -> EditAlignment:
    """Cost-minimizing alignment; substitutions cost 1 unless a function is given."""
    ref = list(ref)
    hyp = list(hyp)
    if substitution_cost is None:
        substitution_cost = lambda i, j: 1.0
    n, m = len(ref), len(hyp)
    cost = np.zeros((n + 1, m + 1))
    cost[:, 0] = np.arange(n + 1)
    cost[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = 0.0 if ref[i - 1] == hyp[j - 1] else substitution_cost(ref[i - 1], hyp[j - 1])
            cost[i, j] = min(cost[i - 1, j - 1] + sub,
                             cost[i - 1, j] + 1.0,
                             cost[i, j - 1] + 1.0)
    ops: list[tuple] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            sub = 0.0 if ref[i - 1] == hyp[j - 1] else substitution_cost(ref[i - 1], hyp[j - 1])
            if cost[i, j] == cost[i - 1, j - 1] + sub:
                ops.append((MATCH, ref[i - 1]) if sub == 0.0 else (SUBSTITUTE, ref[i - 1], hyp[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and cost[i, j] == cost[i - 1, j] + 1.0:
            ops.append((DELETE, ref[i - 1]))
            i -= 1
            continue
        ops.append((INSERT, hyp[j - 1]))
        j -= 1
    ops.reverse()
    return EditAlignment(tuple(ops), float(cost[n, m]))


def per(ref, hyp) -> float:
    """Phonetic error rate: (S + D + I) / N at unit costs. May exceed 1."""
    ref = list(ref)
    if not ref:
        raise InputError("reference phoneme sequence is empty")
    return align(ref, hyp).cost / len(ref)


def wper(ref, hyp, sim: SimilarityMatrix) -> float:
    """Weighted phonetic error rate: substitution costs 1 - S(i, j)."""
    ref = list(ref)
    hyp = list(hyp)
    if not ref:
        raise InputError("reference phoneme sequence is empty")
    for p in ref + hyp:
        sim.similarity(p, p)  # raises InputError naming any unknown phoneme
    alignment = align(ref, hyp, lambda i, j: 1.0 - sim.similarity(i, j))
    return alignment.cost / len(ref)


# Articulatory features for the default similarity matrix.
# Consonants: (voiced, place 0..7, manner 0..5); place is bilabial,
# labiodental, dental, alveolar, postalveolar, palatal, velar, glottal;
# manner is stop, affricate, fricative, nasal, liquid, glide.
_CONSONANTS = {
    "B": (1, 0, 0), "CH": (0, 4, 1), "D": (1, 3, 0), "DH": (1, 2, 2),
    "F": (0, 1, 2), "G": (1, 6, 0), "HH": (0, 7, 2), "JH": (1, 4, 1),
    "K": (0, 6, 0), "L": (1, 3, 4), "M": (1, 0, 3), "N": (1, 3, 3),
    "NG": (1, 6, 3), "P": (0, 0, 0), "R": (1, 3, 4), "S": (0, 3, 2),
    "SH": (0, 4, 2), "T": (0, 3, 0), "TH": (0, 2, 2), "V": (1, 1, 2),
    "W": (1, 0, 5), "Y": (1, 5, 5), "Z": (1, 3, 2), "ZH": (1, 4, 2),
}
# Vowels: (height 0..2, backness 0..2, rounded, diphthong, tense, front offglide)
_VOWELS = {
    "AA": (2, 2, 0, 0, 1, 0), "AE": (2, 0, 0, 0, 0, 0), "AH": (1, 1, 0, 0, 0, 0),
    "AO": (2, 2, 1, 0, 1, 0), "AW": (2, 1, 0, 1, 1, 0), "AY": (2, 1, 0, 1, 1, 1),
    "EH": (1, 0, 0, 0, 0, 0), "ER": (1, 1, 0, 0, 1, 0), "EY": (1, 0, 0, 1, 1, 1),
    "IH": (0, 0, 0, 0, 0, 0), "IY": (0, 0, 0, 0, 1, 0), "OW": (1, 2, 1, 1, 1, 0),
    "OY": (1, 2, 1, 1, 1, 1), "UH": (0, 2, 1, 0, 0, 0), "UW": (0, 2, 1, 0, 1, 0),
}
_MIXED_DISTANCE = 3.5  # also the normalizer; larger than any same-class distance


def _feature_distance(a: str, b: str) -> float:
    if a in _CONSONANTS and b in _CONSONANTS:
        va, vb = _CONSONANTS[a], _CONSONANTS[b]
        return (0.4 * abs(va[0] - vb[0])
                + 1.0 * abs(va[1] - vb[1]) / 7.0
                + 1.0 * abs(va[2] - vb[2]) / 5.0)
    if a in _VOWELS and b in _VOWELS:
        va, vb = _VOWELS[a], _VOWELS[b]
        return (1.0 * abs(va[0] - vb[0]) / 2.0
                + 1.0 * abs(va[1] - vb[1]) / 2.0
                + 0.4 * abs(va[2] - vb[2])
                + 0.4 * abs(va[3] - vb[3])
                + 0.25 * abs(va[4] - vb[4])
                + 0.4 * abs(va[5] - vb[5]))
    return _MIXED_DISTANCE


def default_similarity() -> SimilarityMatrix:
    """S(i, j) = 1 - normalized articulatory feature distance."""
    n = len(ARPABET)
    values = np.ones((n, n))
    for i, a in enumerate(ARPABET):
        for j, b in enumerate(ARPABET):
            if i != j:
                values[i, j] = 1.0 - _feature_distance(a, b) / _MIXED_DISTANCE
    return SimilarityMatrix(tuple(ARPABET), values, provenance="default-articulatory")


def similarity_csv(sim: SimilarityMatrix) -> str:
    lines = ["," + ",".join(sim.labels)]
    for i, label in enumerate(sim.labels):
        lines.append(label + "," + ",".join(repr(float(v)) for v in sim.values[i]))
    return "\n".join(lines) + "\n"


def load_similarity(path: str | Path) -> SimilarityMatrix:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise InputError(f"similarity file {path} is empty")
    header = lines[0].split(",")
    labels = tuple(h for h in header[1:])
    rows = []
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        if cells[0] != labels[len(rows)]:
            raise InputError(f"{path}: row label {cells[0]!r} does not match column order")
        rows.append([float(v) for v in cells[1:]])
    matrix = SimilarityMatrix(labels, np.array(rows), provenance=str(path))
    _validate_similarity(matrix)
    return matrix


def _validate_similarity(sim: SimilarityMatrix) -> None:
    v = sim.values
    if not np.allclose(v, v.T, atol=0):
        raise InputError("similarity matrix must be symmetric")
    if not np.all(np.diag(v) == 1.0):
        raise InputError("similarity matrix diagonal must be 1")
    if v.min() < 0.0 or v.max() > 1.0:
        raise InputError("similarity entries must lie in [0, 1]")


def default_similarity_path() -> Path:
    return Path(str(resources.files("dysarc").joinpath("data/similarity.csv")))


def _as_counts(annotations_or_counts) -> dict:
    if isinstance(annotations_or_counts, dict):
        return annotations_or_counts
    counts: dict = {}
    for a in annotations_or_counts:
        kind = a.dysfluency_type if hasattr(a, "dysfluency_type") else a[1]
        counts[kind] = counts.get(kind, 0) + 1
    return counts


def detection_accuracy(gold, hyp) -> dict:
    """Count-level accuracy per type: min(hyp, gold) / gold; None when gold is 0.

    Accepts annotation lists or count dicts (as produced by summarize()).
    Deletion accuracy counts deleted reference phonemes, so it needs count
    dicts carrying 'deleted_phonemes'; with bare annotations it falls back
    to deletion-trigger segments.
    """
    gold_counts = _as_counts(gold)
    hyp_counts = _as_counts(hyp)
    out = {}
    for kind in ("repetition", "insertion"):
        g = gold_counts.get(kind, 0)
        h = hyp_counts.get(kind, 0)
        out[kind] = None if g == 0 else min(h, g) / g
    del_key = "deleted_phonemes" if "deleted_phonemes" in gold_counts else "deletion"
    g = gold_counts.get(del_key, 0)
    h = hyp_counts.get(del_key, 0)
    out["deletion"] = None if g == 0 else min(h, g) / g
    return out


def aggregate_detection(pairs) -> dict:
    """Corpus-level count accuracy: sum of per-utterance min(hyp, gold) over sum gold.

    `pairs` yields (gold_counts, hyp_counts) dicts as produced by summarize().
    """
    matched = {"repetition": 0, "insertion": 0, "deletion": 0}
    total = {"repetition": 0, "insertion": 0, "deletion": 0}
    for gold, hyp in pairs:
        for kind, key in (("repetition", "repetition"), ("insertion", "insertion"),
                          ("deletion", "deleted_phonemes")):
            g = gold.get(key, 0)
            h = hyp.get(key, 0)
            matched[kind] += min(g, h)
            total[kind] += g
    return {k: (matched[k] / total[k] if total[k] else None) for k in matched}


ACCURACY_DEFINITION = (
    "count-level: per dysfluency type, sum over utterances of "
    "min(hypothesis count, gold count) divided by the summed gold count; "
    "deletion counts are deleted reference phonemes, not trigger segments"
)


def position_detection_accuracy(gold_pairs, hyp_pairs) -> dict:
    """Stricter optional metric over (type, reference start state) pairs:
    both must match for a hypothesis annotation to count."""
    def keyed(pairs):
        bag: dict[tuple, int] = {}
        for key in pairs:
            key = tuple(key)
            bag[key] = bag.get(key, 0) + 1
        return bag

    gold, hyp = keyed(gold_pairs), keyed(hyp_pairs)
    out = {}
    for kind in ("repetition", "insertion", "deletion"):
        total = sum(c for (t, _), c in gold.items() if t == kind)
        if total == 0:
            out[kind] = None
            continue
        hit = sum(min(c, hyp.get(key, 0)) for key, c in gold.items() if key[0] == kind)
        out[kind] = hit / total
    return out
