"""Acceptance gate: one test per release criterion.

Run with ``pytest -v tests/test_acceptance.py`` to get one pass/fail line
per criterion.  Each test pins the tolerance it enforces; the frozen
config tables below are part of the gate and must not be edited to make
a failing criterion pass.
"""

import hashlib
import math
import time
from pathlib import Path

import numpy as np
import pytest

from pushsim.graphs import generate_sequence
from pushsim.harness import (
    ExperimentConfig,
    GraphConfig,
    InitConfig,
    ObjectiveConfig,
    ScheduleConfig,
    SweepConfig,
    run_experiment,
    sweep_experiment,
)
from pushsim.pushsum import (
    AbsProbSeq,
    build_s_matrix,
    initial_state,
    pushsum_step,
    ratio_state,
)
from pushsim.subgradient import (
    AbsoluteTerm,
    HingeTerm,
    QuadraticTerm,
    ZeroTerm,
    subgradient,
)
from pushsim.weights import build_weights

# ---------------------------------------------------------------------------
# frozen config tables
# ---------------------------------------------------------------------------

# (kind, n, seed, horizon); horizons chosen so the ratio error reaches 1e-8
# within the run and well before t = 300 for every entry
PUSHSUM_CONFIGS = (
    ("static-cycle", 3, 13, 40),
    ("static-cycle", 4, 14, 80),
    ("static-cycle", 5, 15, 130),
    ("static-cycle", 6, 16, 170),
    ("rotating-arc", 2, 22, 40),
    ("rotating-arc", 3, 23, 80),
    ("rotating-arc", 4, 24, 140),
    ("rotating-arc", 5, 25, 220),
    ("rotating-arc", 6, 26, 300),
    ("random-walkable", 3, 0, 50),
    ("random-walkable", 3, 1, 50),
    ("random-walkable", 3, 3, 50),
    ("random-walkable", 4, 0, 50),
    ("random-walkable", 4, 1, 50),
    ("random-walkable", 4, 2, 50),
    ("random-walkable", 5, 0, 50),
    ("random-walkable", 5, 1, 50),
    ("random-walkable", 5, 2, 40),
    ("random-walkable", 6, 0, 40),
    ("random-walkable", 6, 1, 60),
)


def _cfg(graph, obj, sched=None, init=None):
    return ExperimentConfig(
        graph=graph, objective=obj,
        schedule=sched or ScheduleConfig(), init=init or InitConfig(),
    )


# ten optimization setups with clean stepsize reports and a finite
# connectivity window, covering both decaying and fixed stepsizes, all
# three graph families, n = 1..6, d = 1..2 and every objective family
CERTIFIED = {
    "cycle3-quad-harmonic": _cfg(
        GraphConfig(kind="static-cycle", n=3, horizon=600),
        ObjectiveConfig(kind="quadratic", d=1, targets=((0.0,), (2.0,), (4.0,))),
    ),
    "cycle3-l1-harmonic": _cfg(
        GraphConfig(kind="static-cycle", n=3, horizon=600),
        ObjectiveConfig(kind="l1", d=1, targets=((0.0,), (1.0,), (2.0,))),
    ),
    "walk5-l1-harmonic": _cfg(
        GraphConfig(kind="random-walkable", n=5, horizon=800, seed=7),
        ObjectiveConfig(kind="l1", d=1,
                        targets=((-2.0,), (0.0,), (1.0,), (3.0,), (6.0,))),
        init=InitConfig(mode="random", seed=42, lo=-8.0, hi=8.0),
    ),
    "walk5-quad2d-poly75": _cfg(
        GraphConfig(kind="random-walkable", n=5, horizon=600, seed=11),
        ObjectiveConfig(kind="quadratic", d=2,
                        targets=((0.0, 0.0), (1.0, 2.0), (-1.0, 1.0),
                                 (2.0, -1.0), (3.0, 1.0))),
        ScheduleConfig(kind="polynomial", a=1.0, p=0.75),
    ),
    "rotate4-l1-harmonic2": _cfg(
        GraphConfig(kind="rotating-arc", n=4, horizon=600),
        ObjectiveConfig(kind="l1", d=1,
                        targets=((0.0,), (1.0,), (2.0,), (4.0,))),
        ScheduleConfig(kind="harmonic", a=2.0),
    ),
    "walk6-quad-poly60": _cfg(
        GraphConfig(kind="random-walkable", n=6, horizon=500, seed=3),
        ObjectiveConfig(kind="quadratic", d=1,
                        targets=((-3.0,), (-1.0,), (0.0,), (1.0,), (2.0,), (5.0,))),
        ScheduleConfig(kind="polynomial", a=0.5, p=0.6),
    ),
    "rotate2-quad2d-harmonic": _cfg(
        GraphConfig(kind="rotating-arc", n=2, horizon=400),
        ObjectiveConfig(kind="quadratic", d=2, targets=((0.0, 0.0), (2.0, 2.0))),
    ),
    "single-agent-fixed": _cfg(
        GraphConfig(kind="static-cycle", n=1, horizon=100),
        ObjectiveConfig(kind="quadratic", d=1, targets=((2.0,),)),
        ScheduleConfig(kind="fixed", t_fixed=100),
        InitConfig(mode="explicit", values=((5.0,),)),
    ),
    "walk5-l1-fixed": _cfg(
        GraphConfig(kind="random-walkable", n=5, horizon=400, seed=7),
        ObjectiveConfig(kind="l1", d=1,
                        targets=((-2.0,), (0.0,), (1.0,), (3.0,), (6.0,))),
        ScheduleConfig(kind="fixed", t_fixed=400),
        InitConfig(mode="random", seed=42, lo=-8.0, hi=8.0),
    ),
    "cycle3-hinge2d-fixed": _cfg(
        GraphConfig(kind="static-cycle", n=3, horizon=300),
        ObjectiveConfig(kind="hinge", d=2,
                        normals=((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)),
                        labels=(1.0, -1.0, 1.0),
                        box_lo=(-4.0, -4.0), box_hi=(4.0, 4.0)),
        ScheduleConfig(kind="fixed", t_fixed=300),
        InitConfig(mode="random", seed=2, lo=-3.0, hi=3.0),
    ),
}


@pytest.fixture(scope="module")
def certified():
    t0 = time.perf_counter()
    results = {name: run_experiment(cfg) for name, cfg in CERTIFIED.items()}
    elapsed = time.perf_counter() - t0
    return results, elapsed


def _r2(x, y, slope, intercept):
    resid = y - (slope * x + intercept)
    tot = ((y - y.mean()) ** 2).sum()
    return 1.0 - float((resid ** 2).sum()) / float(tot)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_criterion_01_ratio_consensus_on_twenty_seeded_configs():
    """Ratios reach the initial average to 1e-8 by t<=300 with a clean
    geometric tail (slope < 0, r^2 >= 0.9) on all 20 configs, in < 5 s."""
    t0 = time.perf_counter()
    for kind, n, seed, horizon in PUSHSUM_CONFIGS:
        seq = generate_sequence(kind, n, horizon, seed)
        ws = [build_weights(g) for g in seq.graphs]
        x0 = np.random.default_rng(seed + 1000).uniform(-5, 5, (n, 1))
        truth = x0.mean()
        state = initial_state(x0)
        errs = np.empty(horizon)
        for t, w in enumerate(ws):
            state = pushsum_step(state, w)
            errs[t] = np.abs(ratio_state(state) - truth).max()
        label = f"{kind} n={n} seed={seed}"
        assert horizon <= 300, label
        assert errs[-1] <= 1e-8, f"{label}: final error {errs[-1]:.3e}"
        half = np.arange(horizon // 2, horizon)
        keep = half[errs[half] > 1e-13]
        ts = keep + 1.0
        slope, intercept = np.polyfit(ts, np.log(errs[keep]), 1)
        r2 = _r2(ts, np.log(errs[keep]), slope, intercept)
        assert slope < 0, f"{label}: slope {slope:.3g}"
        assert r2 >= 0.9, f"{label}: r2 {r2:.4f}"
    assert time.perf_counter() - t0 < 5.0


def test_criterion_02_product_exchange_identity():
    """[P_S]_ij y_i(t) == [P_W]_ij y_j(tau) to 1e-9 for every window of
    length <= 50, over 10 seeded sequences with n <= 6."""
    worst = 0.0
    for run_idx in range(10):
        n = 2 + run_idx % 5
        seq = generate_sequence("random-walkable", n, 60, seed=run_idx)
        ws = [build_weights(g) for g in seq.graphs]
        state = initial_state(np.zeros((n, 1)))
        ys, ss = [state.y], []
        for w in ws:
            ss.append(build_s_matrix(w, state.y))
            state = pushsum_step(state, w)
            ys.append(state.y)
        for tau in range(60):
            pw = np.eye(n)
            ps = np.eye(n)
            for t in range(tau + 1, min(tau + 50, 60) + 1):
                pw = ws[t - 1].entries @ pw
                ps = ss[t - 1].entries @ ps
                gap = np.abs(ps * ys[t][:, None] - pw * ys[tau][None, :]).max()
                worst = max(worst, float(gap))
    assert worst <= 1e-9, f"worst identity residual {worst:.3e}"


def test_criterion_03_absolute_probability_sequence(certified):
    """pi(t) = y(t)/n satisfies pi(t)^T = pi(t+1)^T S(t) to 1e-10 and is
    stochastic to 1e-12 along every certified run."""
    results, _ = certified
    for name, res in results.items():
        tr = res.trace
        ys = [tr.ys[t] for t in range(tr.steps)] + [tr.final_state.y]
        aps = AbsProbSeq.from_weight_history(ys)
        assert aps.stochasticity_residual() <= 1e-12, name
        rec = aps.recursion_residual(tr.smatrices)
        assert rec.max() <= 1e-10, f"{name}: recursion residual {rec.max():.3e}"


def test_criterion_04_weighted_average_recursion(certified):
    """The pi-weighted network average obeys its exact one-step recursion
    to 1e-9 per coordinate at every step of every run."""
    results, _ = certified
    for name, res in results.items():
        tr = res.trace
        zl = np.vstack([tr.zlyap, tr.final_zlyap])
        drift = (tr.alphas[:, None] / tr.n) * tr.gs.sum(axis=1)
        resid = np.abs(zl[1:] - zl[:-1] + drift).max()
        assert resid <= 1e-9, f"{name}: recursion residual {resid:.3e}"


def test_criterion_05_gap_certificates_dominate(certified):
    """Measured optimality gaps stay below the four-term certificates
    (network and per-agent, decaying and fixed stepsize) with empirical
    constants on all ten certified configs, within 60 s of runtime."""
    results, elapsed = certified
    overall = math.inf
    for name, res in results.items():
        assert res.summary.passed, f"{name}: {[c.name for c in res.summary.checks if not c.passed]}"
        gap_margins = {
            label: m for label, m in res.summary.bound_margins.items()
            if label.startswith("gap-") and label.endswith("-empirical")
        }
        assert gap_margins, name
        for label, margin in gap_margins.items():
            assert margin >= 0.0, f"{name}/{label}: margin {margin:.3e}"
            overall = min(overall, margin)
    assert elapsed < 60.0, f"certified runs took {elapsed:.1f} s"
    print(f"\n  worst gap-certificate margin over 10 configs: {overall:.4g} "
          f"({elapsed:.2f} s)")


def test_criterion_06_consensus_envelope(certified):
    """Per-step agent disagreement stays below the contraction envelope
    (empirical constants) pointwise for all t <= 200 on every config."""
    results, _ = certified
    for name, res in results.items():
        rep = next(r for r in res.envelope_reports
                   if r.label == "envelope-geometric-empirical")
        sel = rep.ts <= 200
        margins = rep.rhs[sel] - rep.lhs[sel]
        assert margins.min() >= 0.0, f"{name}: envelope margin {margins.min():.3e}"
        refined = [r for r in res.envelope_reports
                   if r.label == "envelope-refined-empirical"]
        for r in refined:
            sel = r.ts <= 200
            assert (r.rhs[sel] - r.lhs[sel]).min() >= 0.0, name


def test_criterion_07_square_root_rate_sweep(tmp_path):
    """Final gap vs horizon T in {100, 400, 1600, 6400} on the 5-agent
    median objective fits a log-log slope <= -0.35 with r^2 >= 0.9
    in < 120 s."""
    t0 = time.perf_counter()
    cfg = _cfg(
        GraphConfig(kind="random-walkable", n=5, horizon=100, seed=7),
        ObjectiveConfig(kind="l1", d=1,
                        targets=((-2.0,), (0.0,), (1.0,), (3.0,), (6.0,))),
        ScheduleConfig(kind="fixed", t_fixed=100),
        InitConfig(mode="random", seed=42, lo=-8.0, hi=8.0),
    )
    cfg = ExperimentConfig(**{**cfg.__dict__,
                              "sweep": SweepConfig(horizons=(100, 400, 1600, 6400))})
    summary = sweep_experiment(cfg, out_dir=tmp_path)
    elapsed = time.perf_counter() - t0
    assert summary.passed
    assert not summary.sweep_exact
    assert summary.sweep_slope <= -0.35, f"slope {summary.sweep_slope:.4f}"
    assert summary.sweep_r2 >= 0.9, f"r2 {summary.sweep_r2:.4f}"
    assert elapsed < 120.0
    print(f"\n  slope {summary.sweep_slope:.4f}, r2 {summary.sweep_r2:.4f}, "
          f"{elapsed:.1f} s")


def test_criterion_08_subgradient_inequality_randomized():
    """f(w) >= f(z) + g(z).(w - z) - 1e-10 over 100 random points x 100
    probes for every objective term family."""
    rng = np.random.default_rng(2024)

    def fresh(kind, d):
        if kind == "quadratic":
            return QuadraticTerm(rng.uniform(-4, 4, d))
        if kind == "absolute":
            return AbsoluteTerm(rng.uniform(-4, 4, d))
        if kind == "hinge":
            return HingeTerm(rng.uniform(-2, 2, d), float(rng.choice([-1.0, 1.0])))
        return ZeroTerm(d)

    for kind in ("quadratic", "absolute", "hinge", "zero"):
        worst = math.inf
        for _ in range(100):
            d = int(rng.integers(1, 4))
            term = fresh(kind, d)
            z = rng.uniform(-5, 5, d)
            g = subgradient(term, z)
            fz = term.value(z)
            probes = rng.uniform(-6, 6, (100, d))
            resid = term.value_batch(probes) - (fz + (probes - z) @ g)
            worst = min(worst, float(resid.min()))
        assert worst >= -1e-10, f"{kind}: worst inequality residual {worst:.3e}"


def test_criterion_09_mass_conservation_and_weight_floor(certified):
    """Column-stochastic mixing keeps sum(y) = n to 1e-9 and min y above
    the n^(-nL) floor on every certified run."""
    results, _ = certified
    for name, res in results.items():
        tr = res.trace
        n = tr.n
        ys = np.vstack([tr.ys, tr.final_state.y])
        mass_err = np.abs(ys.sum(axis=1) - n).max()
        assert mass_err <= 1e-9, f"{name}: mass error {mass_err:.3e}"
        L = res.summary.connectivity_window
        assert L is not None, name
        floor = float(n) ** (-n * L)
        assert tr.min_y >= floor, f"{name}: min y {tr.min_y:.3e} < floor {floor:.3e}"


def test_criterion_10_trace_determinism(tmp_path):
    """Re-running a config yields byte-identical trace files (decaying and
    fixed stepsize specimens)."""
    for name in ("walk5-l1-harmonic", "walk5-l1-fixed"):
        digests = []
        for attempt in ("a", "b"):
            out = tmp_path / f"{name}-{attempt}"
            run_experiment(CERTIFIED[name], out_dir=out)
            digests.append(hashlib.sha256((out / "trace.csv").read_bytes()).hexdigest())
        assert digests[0] == digests[1], name
