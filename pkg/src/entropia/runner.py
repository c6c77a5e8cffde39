"""Task dispatch, verdicts and on-disk run archives."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bounds, covering, local
from .config import ExperimentConfig, budget_from_env
from .core import AnalyticSystem
from .errors import ConfigError, ParameterError
from .zoo import SuspensionSystem, resolve

__all__ = ["RunRecord", "run", "verify_theorem", "verify_corollary", "sandwich_violations",
           "as_system", "write_csv"]


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def as_system(obj) -> AnalyticSystem:
    """Suspensions enter the covering pipelines through their time-one map."""
    return obj.time_one_system() if isinstance(obj, SuspensionSystem) else obj


def _resolve(name: str):
    try:
        return resolve(name)
    except ParameterError as exc:
        raise ConfigError(f"system: {exc}") from exc


def schedule_for(sys: AnalyticSystem) -> bounds.BoundSchedule:
    """Default schedule for verification: ``L0 = max(2, Lip)`` with the system's constants."""
    return bounds.BoundSchedule.for_system(sys, L0=max(2.0, sys.L0))


@dataclass
class Verdict:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class RunRecord:
    """Everything a run produced: config, timing, CSV payloads, verdicts and text reports."""

    config: ExperimentConfig
    version: str
    wall_time: float = 0.0
    tables: dict[str, list[dict]] = field(default_factory=dict)
    verdicts: list[Verdict] = field(default_factory=list)
    reports: dict[str, str] = field(default_factory=dict)
    partial: bool = False

    @property
    def ok(self) -> bool:
        return all(v.ok for v in self.verdicts) and not self.partial

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def verdict(self, name: str, ok: bool, detail: str = ""):
        self.verdicts.append(Verdict(name, bool(ok), detail))

    def summary(self) -> str:
        lines = [f"task {self.config.task} on {self.config.system}: "
                 f"{'PASS' if self.ok else 'FAIL'} ({self.wall_time:.1f} s)"]
        for v in self.verdicts:
            lines.append(f"  [{'pass' if v.ok else 'FAIL'}] {v.name}" + (f": {v.detail}" if v.detail else ""))
        if self.partial:
            lines.append("  [FAIL] budget: time budget exhausted, results partial")
        return "\n".join(lines)

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, rows in self.tables.items():
            write_csv(out / f"{name}.csv", rows)
            (out / f"{name}.plot").write_text(_plot_script(name, rows))
        for name, text in self.reports.items():
            (out / f"{name}.txt").write_text(text.rstrip() + "\n")
        (out / "config.ini").write_text(self.config.snapshot())
        (out / "verdicts.txt").write_text(self.summary() + "\n")
        meta = {"version": self.version, "wall_time": self.wall_time, "ok": self.ok,
                "partial": self.partial, "config": self.config.as_dict(),
                "verdicts": [{"name": v.name, "ok": v.ok, "detail": v.detail} for v in self.verdicts]}
        (out / "record.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
        return out


def write_csv(path, rows: list[dict]):
    Path(path).write_text(csv_text(rows))


def csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


_AXES = {
    "entropy": ("n", "r_upper", "log", "eps"),
    "local": ("eps", "rate", "linear", ""),
    "bound_curve": ("log_delta", "a", "linear", ""),
    "theorem": ("eps", "h_loc", "log", ""),
    "corollary": ("eps", "gap", "log", ""),
    "envelopes": ("system", "worst_log_margin", "linear", ""),
}


def _plot_script(name: str, rows: list[dict]) -> str:
    """Renderer-agnostic plot description: data file, columns, axes."""
    x, y, yscale, group = _AXES.get(name, (None, None, "linear", ""))
    cols = list(rows[0]) if rows else []
    x = x or (cols[0] if cols else "")
    y = y or (cols[1] if len(cols) > 1 else "")
    lines = [f"data {name}.csv", f"columns {' '.join(cols)}", f"x {x}", f"y {y}", f"yscale {yscale}"]
    if group:
        lines.append(f"group {group}")
    return "\n".join(lines) + "\n"


class _Clock:
    def __init__(self, budget: float | None):
        self.budget = budget
        self.start = time.perf_counter()

    def remaining(self) -> float | None:
        if self.budget is None:
            return None
        return max(0.0, self.budget - (time.perf_counter() - self.start))

    def expired(self) -> bool:
        r = self.remaining()
        return r is not None and r <= 0


def sandwich_violations(table: covering.CoveringTable) -> int:
    """Count failures of ``s_lower(2 eps) <= r_upper(eps) <= s_lower(eps)`` over computed cells."""
    bad = 0
    eps = list(table.eps)
    for e, eps_val in enumerate(eps):
        ok = table.complete[e]
        bad += int(np.sum(ok & (table.r_upper[e] > table.s_lower[e])))
        twice = [k for k, v in enumerate(eps) if math.isclose(v, 2 * eps_val)]
        if twice:
            k = twice[0]
            both = ok & table.complete[k]
            bad += int(np.sum(both & (table.s_lower[k] > table.r_upper[e])))
    return bad


# ----------------------------------------------------------------------------
# tasks

def _task_entropy(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    sys = as_system(_resolve(cfg.system))
    fit = covering.entropy_limit_fit(sys, cfg.eps_ladder, cfg.n_window, cfg.grid_g,
                                     budget_seconds=clock.remaining())
    rec.tables["entropy"] = covering.table_rows(fit.table, fit)
    rec.partial |= not bool(fit.table.complete.all())
    final = fit.final
    lines = [f"system {sys.name}, grid 2^-{cfg.grid_g}, window {cfg.n_window}"]
    for eps, est in fit:
        tag = " flagged" if est.flagged else ""
        lines.append(f"  eps={eps:.6g}: rate={est.value:.6f} +/- {est.half_width:.4g} "
                     f"window={est.window} residual={est.residual:.3g}{tag}")
    lines.append(f"final estimate {final.value:.6f} (eps={final.eps:.6g})")
    if sys.exact_entropy is not None:
        lines.append(f"exact entropy {sys.exact_entropy:.6f}")
    rec.reports["entropy"] = "\n".join(lines)
    rec.verdict("final-estimate", not final.flagged and math.isfinite(final.value),
                f"{final.value:.6f} at eps={final.eps:.6g}")
    rec.verdict("monotone-in-eps", fit.monotone())
    bad = sandwich_violations(fit.table)
    rec.verdict("sandwich", bad == 0, f"{bad} violations")


def _local_sweep(cfg: ExperimentConfig, sys: AnalyticSystem, clock: _Clock) -> list[local.LocalEntropyEstimate]:
    plan = local.sampling_plan(sys.space, cfg.coarse, cfg.centers, cfg.seed)
    out = []
    for eps in cfg.eps_ladder:
        if clock.expired():
            break
        out.append(local.local_entropy_sup(sys, eps, plan, cfg.N_proxy, cfg.local_window,
                                           workers=cfg.workers, seed=cfg.seed,
                                           budget_seconds=clock.remaining()))
    return out


def _local_partial(ests, cfg) -> bool:
    if len(ests) < len(cfg.eps_ladder):
        return True
    return any(c.estimate.partial for e in ests for c in e.per_center)


def _task_local(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    sys = as_system(_resolve(cfg.system))
    ests = _local_sweep(cfg, sys, clock)
    rec.partial |= _local_partial(ests, cfg)
    rows = []
    for est in ests:
        rows.extend(local.local_rows(sys.name, est))
    rec.tables["local"] = rows
    lines = [f"system {sys.name}, N_proxy {cfg.N_proxy}, {len(ests[0].per_center) if ests else 0} centers"]
    for est in ests:
        lines.append(f"  eps={est.eps:.6g}: h_loc={est.value:.6f} at {np.round(est.argmax_center, 6)} "
                     f"grid 2^-{est.grid_g}, stabilized {est.stabilized_fraction:.3f}, "
                     f"single-cell {est.single_cell_fraction:.3f}")
    if sys.invertible:
        lines.append("note: forward balls only; the two-sided ball of an invertible map can be smaller")
    rec.reports["local"] = "\n".join(lines)
    rec.verdict("nonnegative", all(e.value >= 0 for e in ests))
    mono = all(b.value <= a.value + a.half_width + b.half_width for a, b in zip(ests, ests[1:]))
    rec.verdict("monotone-in-eps", mono)
    nested = True
    for est in ests:
        for c in est.per_center:
            ball = c.ball
            prev = set(ball.at(1).tolist())
            for k in range(2, ball.n + 1):
                cur = set(ball.at(k).tolist())
                nested &= cur <= prev
                prev = cur
    rec.verdict("ball-nesting", nested)


def _task_bound_curve(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    sys = as_system(_resolve(cfg.system))
    sched = schedule_for(sys)
    rows = bounds.bound_curve_rows(sched, cfg.curve_n_max)
    rec.tables["bound_curve"] = rows
    a = np.array([float(r["a"]) for r in rows])
    rec.verdict("a-nonincreasing", bool(np.all(np.diff(a) <= 0)))
    h = np.array([float(r["hloc_bound"]) for r in rows if r["hloc_bound"] != ""])
    rec.verdict("hloc-bound-finite", bool(h.size and np.all(np.isfinite(h))))
    rec.reports["bound_curve"] = (f"L0={sched.L0:g} m={sched.m} C0={sched.C0:.6g} model={sched.model.label} "
                                  f"s-rule={sched.s_rule.label} N_threshold={sched.N_threshold}")


def _task_schedule(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    sys = as_system(_resolve(cfg.system))
    sched = schedule_for(sys)
    report = bounds.schedule_conditions_check(sched, cfg.schedule_n_max)
    text = [str(report), f"large-n threshold N = {sched.N_threshold}",
            f"a(delta(10)) = {bounds.a_at_step(sched, 10):.6g}, "
            f"a(delta({cfg.schedule_n_max})) = {bounds.a_at_step(sched, cfg.schedule_n_max):.6g}"]
    rec.reports["schedule"] = "\n".join(text)
    for r in report.results:
        rec.verdict(f"schedule:{r.name}", r.ok,
                    r.detail if r.first_bad is None else f"first bad n = {r.first_bad}; {r.detail}")


def _task_envelopes(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    if cfg.system == "all":
        names = ["identity", "doubling", "rotation", "trig", "cat", "logistic"]
    else:
        names = [cfg.system]
    systems = [as_system(_resolve(n)) for n in names]
    reports = bounds.certify_envelopes(systems, seed=cfg.seed)
    rec.tables["envelopes"] = [{"system": r.system, "checks": r.checks, "violations": r.violations,
                                "worst_log_margin": f"{r.worst_log_margin:.12g}"} for r in reports]
    if not reports:
        rec.verdict("envelopes", True, "no system with jets; nothing to certify")
    for r in reports:
        rec.verdict(f"envelope:{r.system}", r.violations == 0,
                    f"{r.violations}/{r.checks} violations, worst log margin {r.worst_log_margin:.3f}")


@dataclass
class ShapeCheck:
    ok: bool
    C: float
    rows: list[dict]


def _anchored(eps, lhs, hw, a, usable) -> ShapeCheck:
    """Fit C at the largest usable eps, then test ``lhs <= C a + slack`` at the smaller ones."""
    idx = [k for k in range(len(eps)) if usable[k]]
    if not idx:
        return ShapeCheck(False, math.nan, [])
    k0 = idx[0]
    C = max(0.0, lhs[k0]) / a[k0]
    ok = True
    rows = []
    for k in range(len(eps)):
        slack = (hw[k] + hw[k0]) if usable[k] else math.nan
        if not usable[k]:
            status = "skipped"
        elif k == k0:
            status = "anchor"
        else:
            passed = lhs[k] <= C * a[k] + slack + 1e-12
            ok &= passed
            status = "pass" if passed else "FAIL"
        rows.append({"eps": f"{eps[k]:.12g}", "lhs": f"{lhs[k]:.12g}", "half_width": f"{hw[k]:.6g}",
                     "a": f"{a[k]:.12g}", "C_a": f"{C * a[k]:.12g}", "slack": f"{slack:.6g}",
                     "status": status})
    return ShapeCheck(ok, C, rows)


def _finite(x: float) -> float:
    return x if math.isfinite(x) else 0.0


def verify_theorem(cfg: ExperimentConfig, clock: _Clock | None = None) -> tuple[ShapeCheck, list]:
    """Local-entropy estimates against ``C a(eps)`` with C anchored at the largest eps."""
    cfg = cfg.resolved()
    if len(cfg.eps_ladder) < 3:
        raise ConfigError("eps_ladder: verification needs at least 3 scales")
    clock = clock or _Clock(cfg.budget_seconds)
    sys = as_system(_resolve(cfg.system))
    sched = schedule_for(sys)
    ests = _local_sweep(cfg, sys, clock)
    eps = [e.eps for e in ests]
    lhs = [e.value for e in ests]
    hw = [_finite(e.half_width) for e in ests]
    a = [bounds.a_of_t(sched, e) for e in eps]
    check = _anchored(eps, lhs, hw, a, [True] * len(ests))
    for row, e in zip(check.rows, ests):
        row["h_loc"] = row.pop("lhs")
    return check, ests


def verify_corollary(cfg: ExperimentConfig, clock: _Clock | None = None) -> tuple[ShapeCheck, covering.LimitFit]:
    """``h(f) - h(f, eps)`` against ``C a(eps)``; flagged rungs are reported but not tested."""
    cfg = cfg.resolved()
    if len(cfg.eps_ladder) < 3:
        raise ConfigError("eps_ladder: verification needs at least 3 scales")
    clock = clock or _Clock(cfg.budget_seconds)
    sys = as_system(_resolve(cfg.system))
    sched = schedule_for(sys)
    fit = covering.entropy_limit_fit(sys, cfg.eps_ladder, cfg.n_window, cfg.grid_g,
                                     budget_seconds=clock.remaining())
    h = sys.exact_entropy if sys.exact_entropy is not None else fit.final.value
    eps = [e for e, _ in fit]
    lhs = [h - est.value for _, est in fit]
    hw = [_finite(est.half_width) for _, est in fit]
    a = [bounds.a_of_t(sched, e) for e in eps]
    usable = [not est.flagged for _, est in fit]
    check = _anchored(eps, lhs, hw, a, usable)
    for row in check.rows:
        row["gap"] = row.pop("lhs")
    return check, fit


def _task_theorem(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    check, ests = verify_theorem(cfg, clock)
    rec.partial |= _local_partial(ests, cfg)
    rec.tables["theorem"] = check.rows
    rec.reports["theorem"] = f"C = {check.C:.6g}\n" + csv_text(check.rows)
    rec.verdict("theorem-shape", check.ok, f"C = {check.C:.4g}")


def _task_corollary(cfg: ExperimentConfig, rec: RunRecord, clock: _Clock):
    check, fit = verify_corollary(cfg, clock)
    rec.partial |= not bool(fit.table.complete.all())
    rec.tables["corollary"] = check.rows
    rec.tables["entropy"] = covering.table_rows(fit.table, fit)
    tested = sum(r["status"] in ("pass", "FAIL") for r in check.rows)
    rec.reports["corollary"] = f"C = {check.C:.6g}, {tested} scales tested\n" + csv_text(check.rows)
    rec.verdict("corollary-shape", check.ok, f"C = {check.C:.4g}, {tested} scales tested")


_TASKS = {
    "entropy": _task_entropy,
    "local-entropy": _task_local,
    "bound-curve": _task_bound_curve,
    "schedule-report": _task_schedule,
    "certify-envelopes": _task_envelopes,
    "verify-theorem": _task_theorem,
    "verify-corollary": _task_corollary,
}


def run(config: ExperimentConfig, write: bool = True) -> RunRecord:
    """Run one task.  The budget comes from the config, overridden by the environment."""
    cfg = config.resolved()
    budget = budget_from_env(cfg.budget_seconds)
    if budget != cfg.budget_seconds:
        cfg = replace(cfg, budget_seconds=budget)
    rec = RunRecord(cfg, _version())
    clock = _Clock(cfg.budget_seconds)
    _TASKS[cfg.task](cfg, rec, clock)
    rec.wall_time = time.perf_counter() - clock.start
    if write:
        rec.write(cfg.output_dir)
    return rec
