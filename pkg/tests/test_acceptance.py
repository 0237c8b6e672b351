"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line (run with `pytest -s tests/test_acceptance.py` to see them).

Tolerances are pinned here, not configurable.
"""

import math
import random
import time

import numpy as np
from mpmath import mp, mpf

from dysarc.cli import main
from dysarc.decoder import decode
from dysarc.emission import EmissionMatrix
from dysarc.fst import compose, enumerate_paths, intersect
from dysarc.graphs import (
    SeverityConfig,
    build_ctc_topology,
    build_emission_acceptor,
    build_reference_fst,
)
from dysarc.lexicon import ARPABET, Lexicon
from dysarc.metrics import default_similarity, per, wper
from dysarc.synth import decode_corpus, noise_test, sweep_beta, synthesize_corpus

from oracles import edit_cost_exhaustive, join_triples, path_triples, random_machine, syms

mp.dps = 50

SMALL = Lexicon(("<blank>", "AA", "N", "T"))


def _criterion(name: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f"  ({detail})"
    print(line)
    assert ok, line


def test_repetition_detection_count_level_100_percent():
    started = time.perf_counter()
    items = synthesize_corpus("rep", 100, seed=20250810, confidence=0.9)
    results = decode_corpus(items, SeverityConfig(2.5))
    exact = 0
    for item, (_, detection) in zip(items, results):
        got = sum(1 for a in detection.annotations if a.dysfluency_type == "repetition")
        want = item.gold.summary["repetition"]
        exact += min(got, want) == want
    elapsed = time.perf_counter() - started
    accuracy = exact / len(items)
    _criterion(
        "repetition detection accuracy 100% at count level (100 utterances, "
        "confidence 0.9, beta 2.5, < 10 s)",
        accuracy == 1.0 and elapsed < 10.0,
        f"accuracy={accuracy:.3f}, {elapsed:.1f}s",
    )


def test_shortest_path_oracle_equivalence_1000_cases():
    started = time.perf_counter()
    rng = random.Random(0xD15C0)
    topo = build_ctc_topology(SMALL)
    checked = 0
    for _ in range(1000):
        S = rng.randint(1, 3)
        T = rng.randint(1, 6)
        beta = rng.choice((1, 2, 2.5, 4))
        ref = tuple(rng.choice(SMALL.phonemes) for _ in range(S))
        rows = []
        for _ in range(T):
            raw = [rng.uniform(0.02, 1.0) for _ in range(SMALL.C)]
            total = sum(raw)
            rows.append([math.log(x / total) for x in raw])
        emission = EmissionMatrix(np.array(rows))
        config = SeverityConfig(beta)
        ref_fst = build_reference_fst(ref, config, SMALL)
        graph = compose(topo, ref_fst.machine)
        lattice = intersect(graph, build_emission_acceptor(emission, SMALL))
        enumerated = [p.total_weight for p in enumerate_paths(lattice, T, max_paths=2_000_000)]
        got = decode(emission, ref, config, SMALL).total_weight
        if got != min(enumerated):  # bit-exact
            break
        checked += 1
    elapsed = time.perf_counter() - started
    _criterion(
        "shortest-path equals exhaustive enumeration minimum, bit-exact "
        "(1000 seeded cases, T <= 6, S <= 3, < 60 s)",
        checked == 1000 and elapsed < 60.0,
        f"checked={checked}, {elapsed:.1f}s",
    )


def test_composition_oracle_equivalence_200_pairs():
    rng = random.Random(0xC0FFEE)
    mid = syms("m", "n")
    matched = 0
    for _ in range(200):
        left = random_machine(rng, syms("a", "b"), mid, eps_in=False)
        right = random_machine(rng, mid, syms("x", "y"))
        got = path_triples(compose(left, right), 4)
        want = join_triples(left, right, 4, 4)
        if len(got) != len(want):
            break
        ok = all(
            gi == wi and go == wo and abs(gw - ww) <= 1e-12
            for (gi, go, gw), (wi, wo, ww) in zip(got, want)
        )
        if not ok:
            break
        matched += 1
    _criterion(
        "composition path sets and weights match the brute-force join "
        "(200 random pairs, lengths <= 4, weights within 1e-12)",
        matched == 200,
        f"matched={matched}",
    )


def test_fluent_soundness_across_betas():
    items = synthesize_corpus("fluent", 100, seed=31337, confidence=0.9)
    clean = True
    for beta in (1, 2, 2.5, 4):
        results = decode_corpus(items, SeverityConfig(beta))
        for item, (transcription, detection) in zip(items, results):
            starts = [s.start_state for s in transcription.segments]
            forward_only = starts == list(range(len(item.ref_phonemes)))
            no_flags = all(a.dysfluency_type == "normal" for a in detection.annotations)
            if not (forward_only and no_flags and not detection.deleted_reference):
                clean = False
                break
        if not clean:
            break
    _criterion(
        "100 fluent utterances decode all-forward with zero non-normal "
        "annotations for beta in {1, 2, 2.5, 4} (exact)",
        clean,
    )


def test_weight_formulas_match_independent_evaluation():
    worst = 0.0
    for beta in (1, 2, 3):
        cfg = SeverityConfig(beta)
        alpha = mpf(1) - mpf(10) ** (-mpf(beta))
        err0 = mpf(10) ** (-mpf(beta))
        worst = max(worst, abs(cfg.alpha - float(alpha)), abs(cfg.err0 - float(err0)))
        for x in (1, 2, 3):
            err_x = err0 * (1 / mp.sqrt(2 * mp.pi)) * mp.e ** (-mpf(x) ** 2 / 2)
            worst = max(worst, abs(cfg.err(x) - float(err_x)))
    _criterion(
        "alpha, err0, err(x) match independent high-precision evaluation "
        "for beta in {1,2,3}, x in {1,2,3} (within 1e-12)",
        worst <= 1e-12,
        f"worst |delta|={worst:.2e}",
    )


def test_wper_properties():
    sim = default_similarity()
    rng = random.Random(0xE0A1)
    identity_ok = all(
        wper(seq, seq, sim) == 0.0
        for seq in (("AA",), ("B", "IY", "T"), tuple(ARPABET[:10]))
    )
    bounded = True
    for _ in range(500):
        ref = [rng.choice(ARPABET) for _ in range(rng.randint(1, 7))]
        hyp = [rng.choice(ARPABET) for _ in range(rng.randint(0, 7))]
        if wper(ref, hyp, sim) > per(ref, hyp) + 1e-12:
            bounded = False
            break
    exhaustive = True
    cost = lambda a, b: 1.0 - sim.similarity(a, b)
    for _ in range(150):
        ref = [rng.choice(ARPABET) for _ in range(rng.randint(1, 5))]
        hyp = [rng.choice(ARPABET) for _ in range(rng.randint(0, 5))]
        want = edit_cost_exhaustive(ref, hyp, cost) / len(ref)
        if abs(wper(ref, hyp, sim) - want) > 1e-12:
            exhaustive = False
            break
        if abs(per(ref, hyp) - edit_cost_exhaustive(ref, hyp) / len(ref)) > 1e-12:
            exhaustive = False
            break
    _criterion(
        "wper(x,x)=0; wper <= per on 500 random pairs; DP equals exhaustive "
        "edit enumeration for lengths <= 5 (exact / 1e-12)",
        identity_ok and bounded and exhaustive,
    )


def test_beta_ablation_shape():
    started = time.perf_counter()
    items = synthesize_corpus("rep", 30, seed=424242, confidence=0.9)
    rows = sweep_beta(items, [1, 2, 3, 4, 6])
    wpers = [row["wper"] for row in rows]
    spread = max(wpers) - min(wpers)

    underflow_rows = sweep_beta(items, [400])  # raises if anything non-normal slips out
    reps_at_400 = underflow_rows[0]["rep_acc"]

    ref_fst = build_reference_fst(items[0].ref_phonemes, SeverityConfig(400))
    linear = all(
        a.weight == math.inf
        for a in ref_fst.machine.all_arcs()
        if a.olabel == 0 or ref_fst.records[a.olabel][0] != a.src
    )
    elapsed = time.perf_counter() - started
    _criterion(
        "beta sweep: WPER spread <= 1 point over {1,2,3,4,6}; at beta=400 "
        "zero repetition detections and a linear reference machine (< 60 s)",
        spread <= 0.01 and reps_at_400 == 0.0 and linear and elapsed < 60.0,
        f"spread={spread:.4f}, rep_acc@400={reps_at_400}, {elapsed:.1f}s",
    )


def test_noise_trend_non_decreasing():
    started = time.perf_counter()
    items = synthesize_corpus("rep", 30, seed=8675309, confidence=0.9)
    rows = noise_test(items, [0, 0.1, 1, 10], seed=8675309, config=SeverityConfig(2.5))
    wpers = [row["wper"] for row in rows]
    non_decreasing = all(a <= b + 1e-12 for a, b in zip(wpers, wpers[1:]))
    elapsed = time.perf_counter() - started
    _criterion(
        "mean WPER non-decreasing over sigma in {0, 0.1, 1, 10} with fixed "
        "seeds (trend only, < 60 s)",
        non_decreasing and elapsed < 60.0,
        "wper=" + ",".join(f"{w:.3f}" for w in wpers) + f", {elapsed:.1f}s",
    )


def test_command_reruns_are_byte_identical(tmp_path):
    outputs = []
    for name in ("first", "second"):
        base = tmp_path / name
        code = main(["simulate", "--kind", "rep", "--count", "6", "--seed", "99",
                     "--out", str(base)])
        assert code == 0
        hyp = tmp_path / f"{name}-hyp.jsonl"
        assert main(["decode", "--manifest", str(base / "manifest.jsonl"),
                     "--out", str(hyp)]) == 0
        metrics = tmp_path / f"{name}-metrics.json"
        assert main(["eval", "--hyp", str(hyp), "--gold", str(base / "manifest.jsonl"),
                     "--out", str(metrics)]) == 0
        noise = tmp_path / f"{name}-noise.csv"
        assert main(["noise-test", "--manifest", str(base / "manifest.jsonl"),
                     "--sigmas", "0,0.5", "--seed", "99", "--out", str(noise)]) == 0
        outputs.append((
            (base / "manifest.jsonl").read_bytes(),
            hyp.read_bytes(),
            metrics.read_bytes(),
            noise.read_bytes(),
        ))
    _criterion(
        "identical inputs and seed give byte-identical report files",
        outputs[0] == outputs[1],
    )
