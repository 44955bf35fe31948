"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with  pytest tests/test_acceptance.py -v -s  to see the lines live.
All shot counts, seeds, and tolerances are pinned here.  The LER-ordering
run (criterion 5) dominates the runtime at roughly ten minutes on one core;
everything else finishes in seconds to a couple of minutes.
"""

from __future__ import annotations

import gc
import time
from contextlib import contextmanager

import numpy as np
import pytest

from symbreak.bp import BpConfig, prior_from_error_rate, run_bp
from symbreak.codes import CssCode, build_code, load_registry
from symbreak.decoder import (
    StagnationMonitor,
    SymBreakConfig,
    decode,
    plan_split_bb_layered,
    plan_split_bp_guided,
    plan_split_syndrome_guided,
)
from symbreak.gf2 import BinMatrix, BinVector, commutes, matvec
from symbreak.harness import (
    ExperimentSpec,
    MlOracle,
    _BlockSampler,
    _ShotKit,
    _build_decoder,
    _cached_code,
    _prior_for,
    _sides_of,
    run_experiment,
    wilson_interval,
)
from symbreak.noise import NoiseModel
from symbreak.tanner import TannerGraph

# ── pinned experiment parameters ──────────────────────────────────────

C1_TOTAL_BUDGET_S = 60.0
C1_BB72_BUDGET_S = 1.0

C3_SPLITS = 10_000
C3_SEED = 3003

C4_SHOTS = 10_000
C4_P = 0.05
C4_SEED = 44

C5_SHOTS = 6_000_000
C5_SEED = 20250809
C5_P = 0.003

C6_PAIRED_SHOTS = 400_000
C6_P_HIGH = 0.005
C6_SEED = 404

C7_RUNS = (("bb_144_12_12", 40_000), ("bb_288_12_18", 25_000), ("bb_360_12", 20_000),
           ("bb_756_16", 10_000), ("bb_784_24", 10_000))
C7_SEED = 31
C7_P = 0.003

C9_SHOTS = 400_000
C9_SEED = 909

_results_cache: dict = {}


def report(cid: str, ok: bool, detail: str) -> None:
    print(f"\n[ACCEPTANCE {cid}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {cid}: {detail}"


@contextmanager
def _gc_paused():
    """Collector pauses add tens of microseconds to individual decodes,
    which swamps the timing criteria at small n; pause it, as timeit does."""
    gc.collect()
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


# ── criterion 1: code construction exactness ──────────────────────────

def test_criterion_1_code_construction():
    t0 = time.perf_counter()
    bb72 = build_code("bb_72_12_6")
    bb72_time = time.perf_counter() - t0
    ok = (
        bb72.n == 72 and bb72.k == 12
        and all(len(s) == 6 for s in bb72.hx.row_support)
        and all(len(s) == 6 for s in bb72.hz.row_support)
        and all(len(s) == 3 for s in bb72.hx.col_support)
        and all(len(s) == 3 for s in bb72.hz.col_support)
        and commutes(bb72.hz, bb72.hx)
        and bb72_time < C1_BB72_BUDGET_S
    )
    reg = load_registry()
    t0 = time.perf_counter()
    checked = []
    for label in sorted(reg):
        code = build_code(label, reg)  # validates declared (n, k) by rank
        ok = ok and commutes(code.hz, code.hx)
        checked.append((label, code.n))
    total = time.perf_counter() - t0
    ok = ok and total < C1_TOTAL_BUDGET_S and max(n for _, n in checked) == 7938
    report("1", ok,
           f"bb_72_12_6 exact in {bb72_time * 1e3:.0f} ms; "
           f"{len(checked)} registry instances validated in {total:.1f} s")


# ── criterion 2: degeneracy micro-test ────────────────────────────────

def test_criterion_2_degeneracy_micro():
    gadget = CssCode(BinMatrix(1, 2, [(0, 1)]), BinMatrix(1, 2, [(0, 1)]),
                     label="fig_gadget")
    priors = np.full(2, prior_from_error_rate(0.05))

    g = TannerGraph.from_parity(gadget.hz, BinVector(1, (0,)))
    state, _, conv = run_bp(g, BpConfig(max_iters=1000).with_priors(priors))
    raw_bp_stalls = (not conv) and state.iteration == 1000 and np.all(np.abs(state.llr) < 1e-9)

    cfg = SymBreakConfig(m=10, bp=BpConfig(prior_llr=priors))
    out = decode(gadget, BinVector(1, (0,)), cfg, error_type="X")
    split_ok = (
        out.converged
        and len(out.splits) == 1
        and out.estimate.weight == 1
        and matvec(gadget.hz, out.estimate).support == (0,)
    )
    report("2", raw_bp_stalls and split_ok,
           f"raw BP stalled for 1000 iterations (|L| max "
           f"{np.abs(state.llr).max():.1e}); split decoder converged with "
           f"{len(out.splits)} split to weight-{out.estimate.weight}")


# ── criterion 3: split soundness property suite ───────────────────────

def test_criterion_3_split_soundness():
    rng = np.random.default_rng(C3_SEED)
    reg = load_registry()
    codes = [build_code(label, reg) for label in
             ("bb_72_12_6", "bb_90_8_10", "bb_108_8_10", "bb_144_12_12", "hp_13_1_3")]
    kits = {c.label: _ShotKit(c, "X") for c in codes}
    violations = 0
    done = 0
    while done < C3_SPLITS:
        code = codes[int(rng.integers(len(codes)))]
        h, hx = code.hz, code.hx
        e_bits = (rng.random(code.n) < 0.05).astype(np.uint8)
        e = BinVector.from_dense(e_bits)
        s = kits[code.label].syndrome(list(e.support))
        g = TannerGraph.from_parity(h, s)
        llrs = rng.normal(0, 8, size=code.n)
        state = type("S", (), {"llr": llrs})()
        edges_before = len(g.edges())
        # several independent splits per graph instance
        candidates = [c.id for c in g.live_checks()]
        rng.shuffle(candidates)
        for cid in candidates[:8]:
            node = g.checks[cid]
            if node.split_child or not node.alive:
                continue
            gx_rows = [r for r in range(hx.rows)
                       if len(set(hx.row_support[r]) & set(node.var_neighbors)) >= 2
                       and len(set(hx.row_support[r]) & set(node.var_neighbors)) % 2 == 0]
            if not gx_rows:
                continue
            gx = hx.row_support[gx_rows[int(rng.integers(len(gx_rows)))]]
            strategy = int(rng.integers(3)) if code.family == "bb" else int(rng.integers(2))
            if strategy == 0:
                part1, s1 = plan_split_bp_guided(g, cid, gx, state)
            elif strategy == 1:
                part1, s1 = plan_split_syndrome_guided(g, cid, gx, state)
            else:
                part1, s1 = plan_split_bb_layered(g, cid, code, state)
            syn_before = node.syndrome
            c1, c2 = g.split_check(cid, part1, s1)
            done += 1
            n1, n2 = g.checks[c1], g.checks[c2]
            # odd overlap with the targeted opposite check
            if len(set(n1.var_neighbors) & set(gx)) % 2 != 1:
                violations += 1
            if len(set(n2.var_neighbors) & set(gx)) % 2 != 1:
                violations += 1
            # syndrome conservation
            if n1.syndrome ^ n2.syndrome != syn_before:
                violations += 1
            # edge conservation
            if sorted(n1.var_neighbors + n2.var_neighbors) != sorted(node.var_neighbors):
                violations += 1
            # two-error distinguishability: e vs e ^ gx on the children
            e2_bits = e_bits.copy()
            e2_bits[list(gx)] ^= 1
            for child in (n1, n2):
                supp = list(child.var_neighbors)
                if int(e_bits[supp].sum() % 2) == int(e2_bits[supp].sum() % 2):
                    violations += 1
        if len(g.edges()) != edges_before:
            violations += 1
    report("3", violations == 0,
           f"{done} randomized splits across {len(codes)} codes, {violations} violations")


# ── criterion 4: oracle equivalence on tiny codes ─────────────────────

def _small_codes():
    steane_h = BinMatrix(3, 7, [(3, 4, 5, 6), (1, 2, 5, 6), (0, 2, 4, 6)])
    return [
        build_code("hp_13_1_3"),
        CssCode(steane_h, steane_h, label="steane_7_1_3", claimed_distance=3),
        CssCode(BinMatrix(1, 4, [(0, 1, 2, 3)]), BinMatrix(2, 4, [(0, 1), (2, 3)]),
                label="c4_4_1_2", claimed_distance=2),
    ]


def test_criterion_4_oracle_equivalence():
    noise = NoiseModel.depolarizing(C4_P)
    lines = []
    ok = True
    for code in _small_codes():
        sides = ("X", "Z")
        priors = {t: np.full(code.n, prior_from_error_rate(max(noise.marginal(t), 1e-12)))
                  for t in sides}
        decs = {
            "ml": MlOracle(code).set_priors(priors),
            "bp_osd0": _build_decoder(code, "bp_osd0", {}, priors),
            "symbreak": _build_decoder(code, "symbreak", {}, priors),
        }
        kits = {t: _ShotKit(code, t) for t in sides}
        sampler = _BlockSampler(noise, code.n, C4_SEED, sides, kits)
        failures = {name: 0 for name in decs}
        consistency_violations = 0
        for shot in range(C4_SHOTS):
            ex, ez, synd = sampler.shot(shot)
            failed = {name: False for name in decs}
            for t in sides:
                e_supp = set(int(q) for q in (ex if t == "X" else ez))
                s = BinVector.from_sorted(kits[t].n_checks, synd[t])
                for name, dec in decs.items():
                    out = dec(s, t)
                    if out.converged and matvec(code.parity_matrix(t), out.estimate).support != s.support:
                        consistency_violations += 1
                    if not out.converged:
                        failed[name] = True
                    else:
                        r = sorted(e_supp ^ set(out.estimate.support))
                        if r and kits[t].residual_is_logical(r):
                            failed[name] = True
            for name in decs:
                if failed[name]:
                    failures[name] += 1
        ler = {name: f / C4_SHOTS for name, f in failures.items()}
        hw = {name: (wilson_interval(f, C4_SHOTS)[1] - wilson_interval(f, C4_SHOTS)[0]) / 2
              for name, f in failures.items()}
        code_ok = consistency_violations == 0
        for name in ("bp_osd0", "symbreak"):
            code_ok = code_ok and ler["ml"] <= ler[name] + 2 * hw[name]
        ok = ok and code_ok
        lines.append(f"{code.label}: ml={ler['ml']:.4f} osd0={ler['bp_osd0']:.4f} "
                     f"sb={ler['symbreak']:.4f} violations={consistency_violations}")
    report("4", ok, "; ".join(lines))


# ── criterion 5: LER ordering at p = 0.003 ────────────────────────────

def test_criterion_5_ler_ordering():
    noise = NoiseModel.depolarizing(C5_P)
    results = {}
    for dec in ("bp", "symbreak", "bp_osd0"):
        spec = ExperimentSpec("bb_72_12_6", noise, dec, shots=C5_SHOTS, seed=C5_SEED)
        results[dec] = run_experiment(spec)
    _results_cache["c5"] = results
    bp, sb, osd0 = results["bp"], results["symbreak"], results["bp_osd0"]
    separated = sb.ci_high < bp.ci_low and sb.ler < bp.ler
    vs_osd0 = sb.ler <= 1.5 * osd0.ci_high
    report("5", separated and vs_osd0,
           f"LER bp={bp.ler:.3e} [{bp.ci_low:.3e},{bp.ci_high:.3e}] vs "
           f"symbreak={sb.ler:.3e} [{sb.ci_low:.3e},{sb.ci_high:.3e}] "
           f"(non-overlapping: {separated}); symbreak <= 1.5x osd0 upper "
           f"({1.5 * osd0.ci_high:.3e}): {vs_osd0}")


# ── criterion 6: timing ratios ────────────────────────────────────────

def test_criterion_6_timing():
    results = _results_cache.get("c5")
    if results is None:
        pytest.fail("criterion 5 must run before criterion 6")
    ratio = results["symbreak"].mean_time / results["bp"].mean_time
    clause1 = ratio <= 2.0

    # Paired, shot-interleaved comparison against BP+OSD-CS at the top of
    # the benchmark error-rate range; pairing cancels clock drift, which
    # otherwise dwarfs the microsecond-scale true gap at this noise level.
    noise = NoiseModel.depolarizing(C6_P_HIGH)
    spec = ExperimentSpec("bb_72_12_6", noise, "bp", shots=C6_PAIRED_SHOTS, seed=C6_SEED)
    code = _cached_code(spec.code)
    sides = _sides_of(spec)
    priors = {t: _prior_for(spec, code, t) for t in sides}
    sb = _build_decoder(code, "symbreak", {}, priors)
    cs = _build_decoder(code, "bp_osd_cs", {}, priors)
    kits = {t: _ShotKit(code, t) for t in sides}
    sampler = _BlockSampler(noise, code.n, spec.seed, sides, kits)
    t_sb = t_cs = 0.0
    n_dec = 0
    with _gc_paused():
        for shot in range(spec.shots):
            _, _, synd = sampler.shot(shot)
            for t in sides:
                if not len(synd[t]):
                    continue
                s = BinVector.from_sorted(kits[t].n_checks, synd[t])
                if shot % 2 == 0:
                    o1 = sb(s, t)
                    o2 = cs(s, t)
                else:
                    o2 = cs(s, t)
                    o1 = sb(s, t)
                t_sb += o1.wall_time
                t_cs += o2.wall_time
                n_dec += 1
    clause2 = t_sb < t_cs
    report("6", clause1 and clause2,
           f"mean T(symbreak)/T(bp) = {ratio:.2f} (<= 2.0) at p={C5_P}; paired "
           f"p={C6_P_HIGH}: symbreak {t_sb / n_dec * 1e6:.2f} us < osd_cs "
           f"{t_cs / n_dec * 1e6:.2f} us over {n_dec} decodes: {clause2}")


# ── criterion 7: linear-complexity evidence ───────────────────────────

def test_criterion_7_scaling_slope():
    noise = NoiseModel.depolarizing(C7_P)
    points = []
    with _gc_paused():
        for label, shots in C7_RUNS:
            r = run_experiment(ExperimentSpec(label, noise, "symbreak", shots=shots, seed=C7_SEED))
            points.append((int(label.split("_")[1]), r.mean_time))
    slope = float(np.polyfit(np.log([p[0] for p in points]),
                             np.log([p[1] for p in points]), 1)[0])
    ok = 0.7 <= slope <= 1.5
    detail = ", ".join(f"n={n}: {t * 1e6:.0f}us" for n, t in points)
    report("7", ok, f"log-log slope {slope:.2f} in [0.7, 1.5] ({detail})")


# ── criterion 8: K-counter unit behavior ──────────────────────────────

def test_criterion_8_k_counter():
    mon = StagnationMonitor(3)
    ks = []
    for d in (5, 3, 3, 4, 2):
        assert mon.observe(d) == "continue"
        ks.append(mon.k)
    exact_counts = ks == [0, 0, 1, 2, 1]

    mon = StagnationMonitor(3)
    actions = [mon.observe(d) for d in (4, 4, 4, 4)]
    stops_at_third_nondecrease = actions == ["continue"] * 3 + ["stop"]

    mon = StagnationMonitor(3)
    actions = [mon.observe(d) for d in (3, 2, 1, 0)]
    converges = actions == ["continue"] * 3 + ["converged"]

    report("8", exact_counts and stops_at_third_nondecrease and converges,
           f"(5,3,3,4,2) -> K={ks}; (4,4,4,4) stops at the third non-decrease; "
           f"(3,2,1,0) -> syndrome_matched")


# ── criterion 9: sensitivity directions ───────────────────────────────

def test_criterion_9_sensitivity():
    noise = NoiseModel.depolarizing(C5_P)
    lers = {}
    for iters in (10, 100):
        spec = ExperimentSpec("bb_72_12_6", noise, "bp", shots=C9_SHOTS, seed=C9_SEED,
                              decoder_params={"max_iters": iters})
        lers[iters] = run_experiment(spec)
    hw = {k: (r.ci_high - r.ci_low) / 2 for k, r in lers.items()}
    iters_ok = lers[100].ler <= lers[10].ler + hw[10] + hw[100]

    p_results = []
    for p in (0.001, 0.003, 0.005):
        spec = ExperimentSpec("bb_72_12_6", NoiseModel.depolarizing(p), "symbreak",
                              shots=C9_SHOTS, seed=C9_SEED)
        p_results.append(run_experiment(spec))
    mono_ok = True
    for a, b in zip(p_results, p_results[1:]):
        hw_a = (a.ci_high - a.ci_low) / 2
        hw_b = (b.ci_high - b.ci_low) / 2
        if b.ler < a.ler - (hw_a + hw_b):
            mono_ok = False
    report("9", iters_ok and mono_ok,
           f"LER(bp,100it)={lers[100].ler:.2e} <= LER(bp,10it)={lers[10].ler:.2e} within CI; "
           f"LER(symbreak) over p={{0.001,0.003,0.005}} = "
           f"{[f'{r.ler:.2e}' for r in p_results]} non-decreasing within CI")
