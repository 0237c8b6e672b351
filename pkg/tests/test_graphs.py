"""Graph builders: CTC topology, reference machine, emission acceptor."""

import itertools
import math
import random

import numpy as np
import pytest
from mpmath import mp, mpf

from dysarc.emission import EmissionMatrix
from dysarc.errors import ConfigurationError, InputError
from dysarc.fst import EPSILON, enumerate_paths
from dysarc.graphs import (
    SeverityConfig,
    build_ctc_topology,
    build_emission_acceptor,
    build_reference_fst,
    decode_record,
    encode_record,
)
from dysarc.lexicon import Lexicon

from oracles import ctc_collapse

mp.dps = 50

TINY = Lexicon(("<blank>", "AA", "T"))


def independent_weights(beta, x):
    """High-precision evaluation of the weight formulas, independent of the package."""
    alpha = mpf(1) - mpf(10) ** (-mpf(beta))
    err0 = mpf(10) ** (-mpf(beta))
    err_x = err0 * (1 / mp.sqrt(2 * mp.pi)) * mp.e ** (-mpf(x) ** 2 / 2)
    return float(alpha), float(err0), float(err_x)


class TestSeverityConfig:
    def test_alpha_and_err0_sum_to_one_exactly(self):
        for beta in (0.5, 1, 2, 2.5, 3, 4, 6, 10, 16, 100, 300, 400):
            cfg = SeverityConfig(beta)
            assert cfg.alpha + cfg.err0 == 1.0
            if beta <= 300:  # past ~323 the base error underflows by design
                assert 0 < cfg.err0 < 1

    def test_formulas_match_independent_evaluation(self):
        for beta in (1, 2, 3):
            for x in (1, 2, 3):
                alpha, err0, err_x = independent_weights(beta, x)
                cfg = SeverityConfig(beta)
                assert abs(cfg.alpha - alpha) <= 1e-12
                assert abs(cfg.err0 - err0) <= 1e-12
                assert abs(cfg.err(x) - err_x) <= 1e-12

    def test_known_values_at_beta_2(self):
        cfg = SeverityConfig(2)
        assert math.isclose(cfg.forward_weight, 0.01005, rel_tol=1e-3)
        assert math.isclose(cfg.err(1), 2.4197e-3, rel_tol=1e-4)
        assert math.isclose(cfg.jump_weight(1), 6.024, rel_tol=1e-3)

    def test_err_strictly_decreases(self):
        for beta in (0.5, 2, 5):
            cfg = SeverityConfig(beta)
            assert cfg.err(1) > cfg.err(2) > cfg.err(3) > 0

    def test_underflow_flagged_not_fatal(self):
        cfg = SeverityConfig(400)
        assert cfg.underflowed
        assert cfg.jump_weight(1) == math.inf
        assert SeverityConfig(2).underflowed is False

    def test_beta_must_be_positive(self):
        with pytest.raises(InputError):
            SeverityConfig(0)
        with pytest.raises(InputError):
            SeverityConfig(-1)


class TestCtcTopology:
    def test_blank_only_transduces_to_empty(self):
        topo = build_ctc_topology(TINY)
        blank = TINY.class_id("<blank>")
        assert _transduce(topo, [blank, blank]) == ()

    def test_canonical_collapse(self):
        topo = build_ctc_topology(TINY)
        aa, blank = TINY.class_id("AA"), TINY.class_id("<blank>")
        assert _transduce(topo, [aa, aa, blank, aa]) == ("AA", "AA")

    def test_matches_collapse_oracle_on_all_short_strings(self):
        topo = build_ctc_topology(TINY)
        blank = TINY.class_id("<blank>")
        # Index transductions by input string once.
        table = {}
        for p in enumerate_paths(topo, 3):
            table.setdefault(p.inputs, set()).add(p.outputs)
        for length in range(0, 4):
            for frames in itertools.product([1, 2, 3], repeat=length):
                collapsed = ctc_collapse(frames, blank)
                want = tuple(
                    TINY.phoneme_id(TINY.phonemes[c - 2]) for c in collapsed
                )
                assert table.get(frames, {()} if length == 0 else set()) == {want}, frames

    def test_all_arcs_weight_zero(self):
        topo = build_ctc_topology(TINY)
        assert all(a.weight == 0.0 for a in topo.all_arcs())


def _transduce(topo, frames):
    """Unique output string of the topology for a full frame string."""
    outs = {
        p.outputs for p in enumerate_paths(topo, len(frames)) if p.inputs == tuple(frames)
    }
    assert len(outs) == 1, f"not deterministic for {frames}: {outs}"
    labels = next(iter(outs))
    return tuple(topo.osyms[o] for o in labels)


class TestReferenceFst:
    def test_structure_for_three_phonemes(self):
        ref = build_reference_fst(("N", "AA", "T"), SeverityConfig(2))
        m = ref.machine
        assert m.num_states == 4
        assert m.starts == [0]
        assert m.accepts == {3}

        def record_arcs():
            return [
                (a.src, a.dst, ref.records[a.olabel])
                for a in m.all_arcs()
                if a.olabel != EPSILON
            ]

        arcs = record_arcs()
        # Forward arcs follow the reading order.
        for m_idx, phoneme in enumerate(("N", "AA", "T")):
            assert (m_idx, m_idx + 1, (m_idx, m_idx + 1, phoneme)) in arcs
        # A repetition of N after AA: arc leaving state 2 consuming N.
        assert (2, 1, (0, 1, "N")) in arcs
        # Deleting N: arc leaving state 0 consuming AA.
        assert (0, 2, (1, 2, "AA")) in arcs

    def test_arc_family_counts(self):
        for S in (1, 2, 3, 5, 8):
            phonemes = tuple(["AA", "T"] * S)[:S]
            ref = build_reference_fst(phonemes, SeverityConfig(2), TINY)
            forward = backward = skip = early = 0
            for a in ref.machine.all_arcs():
                if a.ilabel == EPSILON:
                    early += 1
                    continue
                rec = ref.records[a.olabel]
                if a.src == rec[0]:
                    forward += 1
                elif a.src > rec[0]:
                    backward += 1
                else:
                    skip += 1
            assert forward == S
            assert backward == S * (S - 1) // 2
            assert skip == S * (S - 1) // 2
            assert early == S

    def test_weights_follow_distance_convention(self):
        cfg = SeverityConfig(2)
        ref = build_reference_fst(("N", "AA", "T"), cfg)
        for a in ref.machine.all_arcs():
            if a.ilabel == EPSILON:
                assert a.weight == cfg.jump_weight(3 - a.src)
                continue
            m_idx = ref.records[a.olabel][0]
            if a.src == m_idx:
                assert a.weight == cfg.forward_weight
            else:
                assert a.weight == cfg.jump_weight(abs(m_idx - a.src))

    def test_forward_cheaper_than_any_jump(self):
        for beta in (0.5, 1, 2.5, 6, 50):
            cfg = SeverityConfig(beta)
            ref = build_reference_fst(("N", "AA", "T"), cfg)
            jumps = [a.weight for a in ref.machine.all_arcs() if a.weight != cfg.forward_weight]
            assert all(cfg.forward_weight < w for w in jumps)

    def test_record_round_trip(self):
        ref = build_reference_fst(("N", "AA", "T"), SeverityConfig(2))
        for oid, record in ref.records.items():
            assert decode_record(encode_record(*record)) == record
            assert decode_record(ref.machine.osyms[oid]) == record
        for a in ref.machine.all_arcs():
            if a.olabel != EPSILON:
                assert ref.records[a.olabel][1] == a.dst

    def test_strict_final_removes_early_accepts(self):
        ref = build_reference_fst(("N", "AA"), SeverityConfig(2), strict_final=True)
        assert all(a.ilabel != EPSILON for a in ref.machine.all_arcs())

    def test_underflowed_beta_is_effectively_linear_with_warning(self):
        ref = build_reference_fst(("N", "AA", "T"), SeverityConfig(400))
        assert "beta-underflow" in ref.warnings
        finite = [a for a in ref.machine.all_arcs() if a.weight != math.inf]
        assert len(finite) == 3  # only the forward arcs stay usable

    def test_empty_reference_rejected(self):
        with pytest.raises(InputError):
            build_reference_fst((), SeverityConfig(2))

    def test_unknown_phoneme_rejected(self):
        with pytest.raises(InputError, match="QQ"):
            build_reference_fst(("QQ",), SeverityConfig(2))

    def test_free_insertion_arcs_flag(self):
        def insertion_arcs(ref):
            # Free-insertion arcs are the ones whose record goes nowhere (i, i, q).
            return [
                a for a in ref.machine.all_arcs()
                if a.olabel != EPSILON and ref.records[a.olabel][0] == ref.records[a.olabel][1]
            ]

        cfg = SeverityConfig(2)
        plain = build_reference_fst(("AA", "T"), cfg, TINY)
        loopy = build_reference_fst(("AA", "T"), cfg, TINY, free_insertion_arcs=True)
        assert not insertion_arcs(plain)
        loops = insertion_arcs(loopy)
        assert len(loops) == 2  # one non-reference phoneme per state
        assert all(a.src == a.dst for a in loops)
        assert all(a.weight == cfg.jump_weight(1) for a in loops)


class TestProductionComposition:
    """The actual decoding-graph machines, checked by the brute-force join."""

    def test_ctc_with_single_phoneme_reference(self):
        from dysarc.fst import compose

        from oracles import join_triples, path_triples

        topo = build_ctc_topology(TINY)
        ref = build_reference_fst(("AA",), SeverityConfig(2), TINY)
        graph = compose(topo, ref.machine)
        got = path_triples(graph, 4)
        want = join_triples(topo, ref.machine, 4, 4)
        assert len(got) == len(want)
        for (gi, go, gw), (wi, wo, ww) in zip(got, want):
            assert gi == wi and go == wo
            assert abs(gw - ww) <= 1e-12
        # Sanity: frame string [AA AA blank AA] against reference [AA] needs
        # a return arc, frame string [blank AA AA] does not.
        inputs = {i for i, _, _ in got}
        aa, blank = TINY.class_id("AA"), TINY.class_id("<blank>")
        assert (blank, aa, aa) in inputs

    def test_lattice_paths_match_composed_graph_filter(self):
        import numpy as np

        from dysarc.fst import compose, intersect

        from oracles import iter_paths, path_triples

        topo = build_ctc_topology(TINY)
        ref = build_reference_fst(("AA", "T"), SeverityConfig(2), TINY)
        graph = compose(topo, ref.machine)
        rows = np.log(np.full((3, 3), 1 / 3))
        emission = EmissionMatrix(rows)
        lattice = intersect(graph, build_emission_acceptor(emission, TINY))
        frame_w = -float(rows[0, 0])
        got = path_triples(lattice, 3)
        want = sorted(
            (inputs, outputs, weight + 3 * frame_w)
            for _, weight, inputs, outputs in iter_paths(graph, 3)
            if len(inputs) == 3
        )
        assert len(got) == len(want)
        for (gi, go, gw), (wi, wo, ww) in zip(got, want):
            assert gi == wi and go == wo
            assert abs(gw - ww) <= 1e-12


class TestEmissionAcceptor:
    def test_zero_frames(self):
        em = EmissionMatrix(np.zeros((0, 3)))
        m = build_emission_acceptor(em, TINY)
        assert m.num_states == 1
        assert m.num_arcs == 0
        assert m.starts == [0] and m.accepts == {0}

    def test_single_frame_weights(self):
        row = np.log(np.array([[0.7, 0.2, 0.1]]))
        m = build_emission_acceptor(EmissionMatrix(row), TINY)
        weights = [a.weight for a in m.arcs(0)]
        assert weights == pytest.approx([-math.log(0.7), -math.log(0.2), -math.log(0.1)])

    def test_path_weight_is_negative_log_likelihood(self):
        rng = random.Random(9)
        values = np.log(_random_posteriors(rng, 6, 3))
        em = EmissionMatrix(values)
        m = build_emission_acceptor(em, TINY)
        for _ in range(100):
            labels = [rng.randint(1, 3) for _ in range(6)]
            want = -sum(values[t][c - 1] for t, c in enumerate(labels))
            paths = [p for p in enumerate_paths(m, 6) if p.inputs == tuple(labels)]
            assert len(paths) == 1
            assert paths[0].total_weight == pytest.approx(want, abs=1e-12)

    def test_nan_rejected_with_location(self):
        values = np.zeros((2, 3))
        values[1, 2] = np.nan
        with pytest.raises(InputError, match="frame 1, class 2"):
            build_emission_acceptor(EmissionMatrix(values), TINY)

    def test_class_count_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            build_emission_acceptor(EmissionMatrix(np.zeros((2, 5))), TINY)


def _random_posteriors(rng, T, C):
    rows = []
    for _ in range(T):
        raw = [rng.uniform(0.05, 1.0) for _ in range(C)]
        total = sum(raw)
        rows.append([x / total for x in raw])
    return np.array(rows)
