"""Builders for the three decoding-graph ingredients.

* a CTC topology over the lexicon's frame classes,
* a reference transducer whose extra arcs admit repetitions, deletions and
  out-of-order revisits, weighted by the severity parameter beta,
* a linear acceptor carrying the per-frame emission scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

from .emission import EmissionMatrix
from .errors import ConfigurationError, InputError
from .fst import EPSILON, Wfst, symbol_table
from .lexicon import Lexicon, default_lexicon

GAUSS_NORM = 1.0 / math.sqrt(2.0 * math.pi)

BETA_UNDERFLOW_WARNING = "beta-underflow"


@dataclass(frozen=True)
class SeverityConfig:
    """Severity parameter beta and the weights derived from it.

    The monotone "expected next phoneme" transition gets probability
    alpha = 1 - 10^-beta; jump transitions get err(x) = err0 * phi(x) where
    err0 = 10^-beta, phi is the standard normal density and x the distance
    jumped in the reference. alpha + err0 == 1 holds exactly in floats.
    """

    beta: float
    alpha: float = field(init=False)
    err0: float = field(init=False)

    def __post_init__(self):
        if not self.beta > 0:
            raise InputError(f"beta must be positive, got {self.beta}")
        # err0 keeps full float range (subnormal until beta ~ 323); the
        # rounding of 1 - err0 still makes alpha + err0 == 1.0 exact.
        err0 = 10.0 ** (-self.beta)
        object.__setattr__(self, "alpha", 1.0 - err0)
        object.__setattr__(self, "err0", err0)

    @property
    def underflowed(self) -> bool:
        """True when 10^-beta is zero in float64 (beta ≳ 323): jump arcs become impossible."""
        return self.err0 == 0.0

    def err(self, x: float) -> float:
        return self.err0 * GAUSS_NORM * math.exp(-(x * x) / 2.0)

    def jump_weight(self, x: float) -> float:
        e = self.err(x)
        return math.inf if e == 0.0 else -math.log(e)

    @property
    def forward_weight(self) -> float:
        return -math.log(self.alpha)


def encode_record(src: int, dst: int, phoneme: str) -> str:
    """Output-label spelling of a reference transition record."""
    return f"{src}>{dst}:{phoneme}"


def decode_record(label: str) -> tuple[int, int, str]:
    states, _, phoneme = label.partition(":")
    src, _, dst = states.partition(">")
    try:
        return int(src), int(dst), phoneme
    except ValueError:
        raise InputError(f"not a transition record label: {label!r}") from None


@dataclass(frozen=True, eq=False)
class ReferenceFst:
    """The reference machine plus the decode table for its output labels."""

    machine: Wfst
    ref_phonemes: tuple[str, ...]
    records: dict[int, tuple[int, int, str]]  # output symbol id -> (src, dst, phoneme)
    warnings: tuple[str, ...] = ()

    @property
    def num_ref_states(self) -> int:
        return len(self.ref_phonemes) + 1


@lru_cache(maxsize=8)
def build_ctc_topology(lexicon: Lexicon) -> Wfst:
    """Standard CTC collapse transducer over the lexicon's classes.

    Consumes frame labels (blank included), emits each phoneme once per
    entered run: blanks map to epsilon, repeated frame labels collapse, and
    phoneme-blank-same-phoneme emits the phoneme twice. All arcs weight 0.
    """
    machine = Wfst(lexicon.class_table(), lexicon.phoneme_table())
    blank_state = machine.add_state(start=True, accept=True)
    phonemes = lexicon.phonemes
    states = [machine.add_state(accept=True) for _ in phonemes]

    blank = lexicon.class_id(lexicon.symbols[0])
    machine.add_arc(blank_state, blank_state, blank, EPSILON, 0.0)
    for k, p in enumerate(phonemes):
        machine.add_arc(blank_state, states[k], lexicon.class_id(p), lexicon.phoneme_id(p), 0.0)
    for k, p in enumerate(phonemes):
        src = states[k]
        machine.add_arc(src, src, lexicon.class_id(p), EPSILON, 0.0)
        machine.add_arc(src, blank_state, blank, EPSILON, 0.0)
        for j, q in enumerate(phonemes):
            if j != k:
                machine.add_arc(src, states[j], lexicon.class_id(q), lexicon.phoneme_id(q), 0.0)
    return machine


def build_reference_fst(
    ref_phonemes,
    config: SeverityConfig,
    lexicon: Lexicon | None = None,
    *,
    strict_final: bool = False,
    free_insertion_arcs: bool = False,
) -> ReferenceFst:
    """Reference transducer with states 0..S; state i = "i phonemes consumed".

    Three weighted arc families, each consuming a reference phoneme r_m and
    emitting the transition record (m, m+1, r_m):

    * forward, from state m: weight -log(alpha);
    * backward, from any state q > m (revisit: repetition or out-of-order
      insertion, told apart at detection time): weight -log(err(q - m));
    * skip, from any state q < m (deletion of r_q..r_{m-1}): -log(err(m - q)).

    Unless strict_final is set, every state i < S also gets an epsilon
    "early accept" arc to S weighted -log(err(S - i)) so truncated audio
    still decodes. With free_insertion_arcs, experimental self-loops consume
    any phoneme q != r_i at state i for weight -log(err(1)).
    """
    if lexicon is None:
        lexicon = default_lexicon()
    ref = lexicon.check_phonemes(ref_phonemes)
    if not ref:
        raise InputError("reference phoneme sequence is empty")
    S = len(ref)

    osyms = [encode_record(m, m + 1, p) for m, p in enumerate(ref)]
    extra: list[str] = []
    if free_insertion_arcs:
        for i in range(S):
            extra.extend(
                encode_record(i, i, q) for q in lexicon.phonemes if q != ref[i]
            )
    machine = Wfst(lexicon.phoneme_table(), symbol_table(osyms + extra))
    records = {oid: decode_record(label) for oid, label in enumerate(osyms + extra, start=1)}

    for i in range(S + 1):
        machine.add_state(start=(i == 0), accept=(i == S))

    def record_id(m: int) -> int:
        return m + 1  # osyms order: record m at symbol id m+1

    for m in range(S):
        machine.add_arc(m, m + 1, lexicon.phoneme_id(ref[m]), record_id(m), config.forward_weight)
    for q in range(1, S):
        for m in range(q):
            machine.add_arc(q, m + 1, lexicon.phoneme_id(ref[m]), record_id(m),
                            config.jump_weight(q - m))
    for q in range(S - 1):
        for m in range(q + 1, S):
            machine.add_arc(q, m + 1, lexicon.phoneme_id(ref[m]), record_id(m),
                            config.jump_weight(m - q))
    if not strict_final:
        for i in range(S):
            machine.add_arc(i, S, EPSILON, EPSILON, config.jump_weight(S - i))
    if free_insertion_arcs:
        oid = len(osyms) + 1
        for i in range(S):
            for q in lexicon.phonemes:
                if q != ref[i]:
                    machine.add_arc(i, i, lexicon.phoneme_id(q), oid, config.jump_weight(1))
                    oid += 1

    warnings = (BETA_UNDERFLOW_WARNING,) if config.underflowed else ()
    return ReferenceFst(machine, ref, records, warnings)


def build_emission_acceptor(emission: EmissionMatrix, lexicon: Lexicon) -> Wfst:
    """Linear acceptor with T+1 states; arc weight -log P(class | frame)."""
    if emission.T > 0 and emission.C != lexicon.C:
        raise ConfigurationError(
            f"emission has {emission.C} classes but lexicon defines {lexicon.C}"
        )
    emission.check_finite()
    machine = Wfst(lexicon.class_table())
    states = [machine.add_state() for _ in range(emission.T + 1)]
    machine.set_start(states[0])
    machine.set_accept(states[-1])
    values = emission.values
    for t in range(emission.T):
        row = values[t]
        for c in range(emission.C):
            label = c + 1  # class ids start after epsilon
            machine.add_arc(states[t], states[t + 1], label, label, -float(row[c]))
    return machine
