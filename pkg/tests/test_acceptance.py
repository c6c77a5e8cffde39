"""Acceptance gate: criteria 1-11, one PASS/FAIL line each in the terminal summary.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines also print
live when pytest is given ``-s``.
"""
import math
import time

import numpy as np
import pytest

from entropia import bounds, zoo
from entropia.config import ExperimentConfig
from entropia.covering import entropy_limit_fit
from entropia.local import infinite_ball_approx, local_entropy_sup, local_grid, sampling_plan
from entropia.runner import as_system, run, sandwich_violations, verify_corollary, verify_theorem

RESULTS: dict[int, str] = {}

DYADIC = [2**-4, 2**-5, 2**-6, 2**-7]
PLANE = [2**-3, 2**-4, 2**-5]


def report(k: int, ok: bool, detail: str):
    line = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    assert ok, line


_fits = {}


def timed_fit(name, ladder, window, g):
    key = (name, tuple(ladder), window, g)
    if key not in _fits:
        sys = as_system(zoo.resolve(name))
        t0 = time.perf_counter()
        fit = entropy_limit_fit(sys, ladder, window, g)
        _fits[key] = (fit, time.perf_counter() - t0)
    return _fits[key]


def test_criterion_01_doubling_entropy():
    fit, wall = timed_fit("doubling", DYADIC, (4, 12), 14)
    v = fit.final.value
    ok = abs(v - math.log(2)) <= 0.1 * math.log(2) and wall < 60
    report(1, ok, f"doubling final {v:.4f} vs ln 2 = {math.log(2):.4f} (+/-10%), {wall:.1f} s < 60 s")


def test_criterion_02_rotation_entropy():
    fit, _ = timed_fit("rotation", DYADIC, (4, 12), 14)
    v = fit.final.value
    report(2, v <= 0.05, f"rotation final {v:.4f} <= 0.05")


def test_criterion_03_cat_entropy():
    fit, wall = timed_fit("cat", PLANE, (3, 8), 9)
    h = math.log((3 + math.sqrt(5)) / 2)
    v = fit.final.value
    ok = abs(v - h) <= 0.15 * h and wall < 300
    report(3, ok, f"cat final {v:.4f} vs {h:.4f} (+/-15%), {wall:.1f} s < 300 s")


SANDWICH_RUNS = [
    ("identity", DYADIC, (4, 12), 14), ("doubling", DYADIC, (4, 12), 14),
    ("rotation", DYADIC, (4, 12), 14), ("trig", DYADIC, (4, 12), 16),
    ("logistic", DYADIC, (4, 12), 16), ("cat", PLANE, (3, 8), 9),
    ("toral:1,1,0,1", PLANE, (3, 8), 9), ("identity:2", PLANE, (3, 8), 9),
    ("suspend:doubling:1.25", PLANE, (3, 8), 8),
]


def test_criterion_04_sandwich():
    cells = bad = 0
    for name, ladder, window, g in SANDWICH_RUNS:
        fit, _ = timed_fit(name, ladder, window, g)
        cells += int(fit.table.complete.sum())
        bad += sandwich_violations(fit.table)
    report(4, bad == 0 and cells > 0,
           f"{bad} sandwich violations over {cells} (eps, n) cells on {len(SANDWICH_RUNS)} systems")


def test_criterion_05_expansive_collapse():
    sys = zoo.make_circle_map("doubling")
    plan = sampling_plan(sys.space)
    worst_frac, worst_val = 1.0, 0.0
    for eps in (1 / 8, 1 / 16):
        g = local_grid(eps)
        single = np.mean([infinite_ball_approx(sys, x, eps, 20, g).size == 1 for x in plan])
        est = local_entropy_sup(sys, eps, plan)
        worst_frac = min(worst_frac, float(single))
        worst_val = max(worst_val, est.value)
    ok = worst_frac >= 0.99 and worst_val <= 0.05
    report(5, ok, f"doubling: single-cell fraction {worst_frac:.3f} >= 0.99, "
                  f"h_loc {worst_val:.4f} <= 0.05 over {len(plan)} centers, eps 1/8 and 1/16")


def test_criterion_06_envelopes():
    systems = [as_system(zoo.resolve(n)) for n in
               ("identity", "doubling", "rotation", "trig", "cat", "logistic", "toral:1,1,0,1")]
    reps = bounds.certify_envelopes(systems, alpha_max=5, n_max=6, points=1000)
    viol = sum(r.violations for r in reps)
    checks = sum(r.checks for r in reps)
    report(6, viol == 0 and len(reps) == len(systems),
           f"{viol} envelope violations in {checks} checks over {len(reps)} systems")


def test_criterion_07_q_max():
    bad = [n for n in range(3, 201)
           if not math.isclose(bounds.q_max(n)[1],
                               max(bounds.q_function(n, 1), bounds.q_function(n, n)), rel_tol=1e-12)]
    report(7, not bad, f"q_max = max(q(1), q(n)) for n = 3..200, {len(bad)} mismatches")


def test_criterion_08_schedule_health():
    sched = bounds.BoundSchedule(2.0, 1, rho=0.5)
    rep = bounds.schedule_conditions_check(sched, 10**6)
    a = bounds.a_at_step(sched, np.arange(1, 10**6 + 1))
    mono = bool(np.all(np.diff(a) <= 0))
    ratio = a[-1] / a[9]
    N = bounds.large_n_threshold(sched)
    ok = rep.ok and mono and ratio < 0.2 and N <= 20 and N == 8
    report(8, ok, f"conditions {'pass' if rep.ok else 'FAIL'} to 1e6, a nonincreasing {mono}, "
                  f"a(d(1e6))/a(d(10)) = {ratio:.3f} < 0.2, large-n threshold {N} (expect 8)")


@pytest.mark.parametrize("name", ["doubling", "rotation", "cat", "logistic"])
def test_criterion_09_theorem_and_corollary(name):
    cfg = ExperimentConfig(system=name)
    thm, _ = verify_theorem(cfg)
    cor, _ = verify_corollary(cfg)
    tested = sum(r["status"] in ("pass", "FAIL") for r in cor.rows)
    line = f"{name}: theorem {'pass' if thm.ok else 'FAIL'} (C={thm.C:.3g}), corollary " \
           f"{'pass' if cor.ok else 'FAIL'} (C={cor.C:.3g}, {tested} scales tested)"
    _shape_lines.append((thm.ok and cor.ok, line))
    if len(_shape_lines) == 4 or not (thm.ok and cor.ok):
        report(9, all(ok for ok, _ in _shape_lines), "; ".join(l for _, l in _shape_lines))


_shape_lines: list = []


def test_criterion_10_suspension():
    base = zoo.make_circle_map("doubling")
    susp = zoo.suspend(base, 1.25)
    x = np.linspace(0, 1, 1001, endpoint=False)
    z = np.stack([np.zeros_like(x), x], axis=-1)
    for _ in range(susp.i):
        z = susp.step(z)
    err = float(max(np.max(np.abs(z[:, 0])),
                    np.max(base.space.coord_diff(z[:, 1:], base.eval(x[:, None])))))
    sched = bounds.BoundSchedule(2.0, 1)
    c3 = [bounds.c3_ratio_bound(sched, i, 10**4) for i in range(0, 5)]
    shift = all(bounds.shift_inequality_holds(sched, i, 10**4) for i in range(0, 5))
    ok = susp.i <= 64 and err <= 1e-12 and all(map(math.isfinite, c3)) and shift
    report(10, ok, f"i = {susp.i} <= 64, section error {err:.1e}, c3 ratios "
                   f"{', '.join(f'{c:.3f}' for c in c3)}, shift inequality {shift}")


def test_criterion_11_determinism(tmp_path):
    outs = []
    for tag in ("a", "b"):
        for task, extra in (("entropy", {}), ("local-entropy", {"centers": 16, "coarse": 2})):
            cfg = ExperimentConfig(task=task, system="trig", eps_ladder=(1 / 8, 1 / 16, 1 / 32),
                                   grid_g=11, n_window=(2, 8), seed=7,
                                   output_dir=str(tmp_path / tag / task), **extra)
            run(cfg)
    for task, name in (("entropy", "entropy.csv"), ("local-entropy", "local.csv")):
        outs.append((tmp_path / "a" / task / name).read_bytes() == (tmp_path / "b" / task / name).read_bytes())
    report(11, all(outs), "entropy.csv and local.csv byte-identical across repeated seeded runs")
