"""Grid approximations of dynamical balls and the local entropy at a scale."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.stats import qmc

from . import _kernels
from .core import AnalyticSystem, orbit_table
from .covering import EntropyEstimate, Grid, entropy_limit_fit
from .errors import ParameterError, ResolutionInsufficient

__all__ = [
    "BowenBallApprox",
    "LocalEntropyEstimate",
    "CenterResult",
    "bowen_ball_boxes",
    "infinite_ball_approx",
    "local_entropy_at",
    "local_entropy_sup",
    "sampling_plan",
    "local_rows",
    "INNER_LADDER",
]

# inner scales, as fractions of the ball radius
INNER_LADDER = (4, 8, 16)
DEFAULT_N_PROXY = 20
DEFAULT_WINDOW = (1, 6)


@dataclass
class BowenBallApprox:
    """Grid cells whose centers stay strictly within ``eps`` of the orbit of ``center``.

    ``exit`` stores, per candidate cell, the first step at which the cell
    leaves the ball, so the ball at any ``k <= n`` is one comparison away.
    """

    center: np.ndarray
    n: int
    eps: float
    grid_g: int
    boxes: np.ndarray
    error: float
    stabilized: bool = True
    candidates: np.ndarray = field(default=None, repr=False)
    exit: np.ndarray = field(default=None, repr=False)
    center_cell: int = -1

    @property
    def size(self) -> int:
        return int(self.boxes.size)

    def at(self, k: int) -> np.ndarray:
        """Cells of the ball after ``k <= n`` steps."""
        if not 1 <= k <= self.n:
            raise ParameterError(f"k must lie in [1, {self.n}]")
        keep = (self.exit >= k) | (self.candidates == self.center_cell)
        return self.candidates[keep]

    @cached_property
    def stable_from(self) -> int:
        """Smallest ``k`` from which the ball no longer changes up to ``n``."""
        k = self.n
        while k > 1 and np.array_equal(self.at(k - 1), self.boxes):
            k -= 1
        return k


def _ball(sys: AnalyticSystem, x, n: int, eps: float, grid_g: int) -> BowenBallApprox:
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    grid = Grid(sys.space, grid_g)
    if grid.h > eps / 8:
        raise ResolutionInsufficient(
            f"resolution insufficient: grid step {grid.h:g} > eps/8 = {eps / 8:g}")
    x = sys.space.normalize(np.asarray(x, dtype=float).reshape(sys.m))
    cand = grid.cells_near(x, eps)
    orb = np.ascontiguousarray(orbit_table(sys, grid.points(cand), n))
    orb_x = np.ascontiguousarray(orbit_table(sys, x[None], n)[0])
    wraps = np.array(sys.space.wraps, dtype=np.bool_)
    exit_ = _kernels.exit_times(orb_x, orb, float(eps), wraps)
    home = grid.nearest(x)
    boxes = cand[(exit_ >= n) | (cand == home)]
    error = grid.cell_diameter * sys.L0 ** (n - 1)
    return BowenBallApprox(x, n, float(eps), grid_g, boxes, error, True, cand, exit_, home)


def bowen_ball_boxes(sys: AnalyticSystem, x, n: int, eps: float, grid_g: int) -> BowenBallApprox:
    """Cells of the ``n``-step dynamical ball ``B_n(x, eps)`` on the ``2^-grid_g`` lattice.

    The cell holding ``x`` is always included.  ``error`` is the reported
    over-approximation bound ``cell_diameter * L0^(n-1)``.
    """
    return _ball(sys, x, n, eps, grid_g)


def infinite_ball_approx(sys: AnalyticSystem, x, eps: float, N_proxy: int = DEFAULT_N_PROXY,
                         grid_g: int = 12) -> BowenBallApprox:
    """``B_{N_proxy}`` as a stand-in for the all-time ball, with a stabilization flag.

    ``stabilized`` records whether the last step left the ball unchanged;
    with ``N_proxy = 1`` there is no earlier ball and the flag is set.
    """
    if N_proxy < 1:
        raise ParameterError("N_proxy must be at least 1")
    ball = _ball(sys, x, N_proxy, eps, grid_g)
    if N_proxy > 1:
        ball.stabilized = bool(np.array_equal(ball.at(N_proxy - 1), ball.boxes))
    return ball


def local_grid(eps: float, grid_g: int | None = None) -> int:
    """Smallest lattice exponent that resolves the finest inner scale (step <= eps/64)."""
    need = math.ceil(math.log2(4 * INNER_LADDER[-1] / eps) - 1e-12)
    return need if grid_g is None else int(grid_g)


@dataclass
class CenterResult:
    center: np.ndarray
    ball: BowenBallApprox
    estimate: EntropyEstimate
    rungs: list[EntropyEstimate]


def _center(sys, x, eps, N_proxy, window, grid_g, budget_seconds=None) -> CenterResult:
    ball = infinite_ball_approx(sys, x, eps, N_proxy, grid_g)
    ladder = [eps / k for k in INNER_LADDER]
    fit = entropy_limit_fit(sys, ladder, window, grid_g, region=ball.boxes,
                            budget_seconds=budget_seconds)
    rungs = [est for _, est in fit]
    good = [est for est in rungs if not est.flagged and math.isfinite(est.value)]
    pool = good or [est for est in rungs if math.isfinite(est.value)] or rungs
    best = max(pool, key=lambda est: est.value)
    if not good or not ball.stabilized:
        best = EntropyEstimate(best.value, best.window, best.residual, best.half_width,
                               best.lower, best.eps, best.saturated or not ball.stabilized,
                               best.partial, best.counts)
    return CenterResult(ball.center, ball, best, rungs)


def local_entropy_at(sys: AnalyticSystem, x, eps: float, N_proxy: int = DEFAULT_N_PROXY,
                     window=DEFAULT_WINDOW, grid_g: int | None = None,
                     budget_seconds: float | None = None) -> EntropyEstimate:
    """Entropy of the map on the ``B_{N_proxy}(x, eps)`` proxy.

    The covering is run at inner scales ``eps/4, eps/8, eps/16`` and the
    largest unflagged rate is returned.  An unstabilized ball flags the
    result as saturated.
    """
    return _center(sys, x, eps, N_proxy, window, local_grid(eps, grid_g), budget_seconds).estimate


def sampling_plan(space, coarse: int = 8, random_points: int = 256, seed: int = 0) -> np.ndarray:
    """Centers: a ``coarse``-per-side lattice plus scrambled Halton points."""
    axes = [np.arange(coarse) / coarse] * space.m
    lattice = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, space.m)
    if random_points > 0:
        extra = qmc.Halton(d=space.m, scramble=True, seed=seed).random(random_points)
        lattice = np.concatenate([lattice, extra])
    return space.normalize(lattice)


@dataclass
class LocalEntropyEstimate:
    """Sampled supremum of ball entropies at one scale."""

    eps: float
    value: float
    argmax_center: np.ndarray
    N_proxy: int
    per_center: list[CenterResult]
    grid_g: int

    @property
    def half_width(self) -> float:
        best = max(self.per_center, key=lambda c: c.estimate.value)
        hw = best.estimate.half_width
        return hw if math.isfinite(hw) else 0.0

    @property
    def stabilized_fraction(self) -> float:
        return float(np.mean([c.ball.stabilized for c in self.per_center]))

    @property
    def single_cell_fraction(self) -> float:
        return float(np.mean([c.ball.size == 1 for c in self.per_center]))


def local_entropy_sup(sys: AnalyticSystem, eps: float, centers=None,
                      N_proxy: int = DEFAULT_N_PROXY, window=DEFAULT_WINDOW,
                      grid_g: int | None = None, workers: int = 1, seed: int = 0,
                      budget_seconds: float | None = None) -> LocalEntropyEstimate:
    """Maximum of :func:`local_entropy_at` over a sampling plan, argmax recorded.

    ``centers`` is an ``(k, m)`` array or ``None`` for the default plan.
    Negative fitted rates (noise around a constant count) are clamped to 0.
    """
    if centers is None:
        centers = sampling_plan(sys.space, seed=seed)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        raise ParameterError("sampling plan is empty")
    g = local_grid(eps, grid_g)

    def one(x):
        return _center(sys, x, eps, N_proxy, window, g, budget_seconds)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, centers))
    else:
        results = [one(x) for x in centers]
    k = int(np.argmax([r.estimate.value for r in results]))
    value = max(0.0, results[k].estimate.value)
    return LocalEntropyEstimate(float(eps), value, results[k].center, N_proxy, results, g)


LOCAL_CSV_FIELDS = ("system", "eps", "center", "N_proxy", "stabilized", "ball_cells", "rate",
                    "residual")


def local_rows(system: str, est: LocalEntropyEstimate) -> list[dict]:
    return [{
        "system": system, "eps": est.eps,
        "center": " ".join(f"{v:.12g}" for v in c.center),
        "N_proxy": est.N_proxy, "stabilized": int(c.ball.stabilized),
        "ball_cells": c.ball.size, "rate": f"{c.estimate.value:.12g}",
        "residual": f"{c.estimate.residual:.12g}",
    } for c in est.per_center]
