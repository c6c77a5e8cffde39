"""Spanning and separated cardinalities on dyadic grids, and scale-entropy rate fits."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from . import _kernels
from .core import AnalyticSystem, orbit_table
from .errors import ParameterError, ResolutionInsufficient
from .spaces import StateSpace

__all__ = [
    "Grid",
    "CoveringTable",
    "SpanningResult",
    "EntropyEstimate",
    "max_separated",
    "greedy_spanning",
    "covering_table",
    "entropy_scale_rate",
    "entropy_limit_fit",
    "LimitFit",
    "fit_rate",
    "table_rows",
    "verify_spanning",
    "verify_separated",
]


@dataclass(frozen=True)
class Grid:
    """Dyadic lattice of step ``2^-g`` over the fundamental domain.

    Circle factors carry ``2^g`` points, interval factors ``2^g + 1``.
    Flat indices are row-major with the first coordinate most significant,
    so increasing index is lexicographic order on coordinates.
    """

    space: StateSpace
    g: int

    @property
    def h(self) -> float:
        return 2.0 ** -self.g

    @cached_property
    def sides(self) -> np.ndarray:
        return np.array([2**self.g if w else 2**self.g + 1 for w in self.space.wraps],
                        dtype=np.int64)

    @cached_property
    def strides(self) -> np.ndarray:
        s = np.ones(self.space.m, dtype=np.int64)
        for j in range(self.space.m - 2, -1, -1):
            s[j] = s[j + 1] * self.sides[j + 1]
        return s

    @property
    def size(self) -> int:
        return int(np.prod(self.sides))

    @property
    def cell_diameter(self) -> float:
        return math.sqrt(self.space.m) * self.h

    def multi(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self.strides) % self.sides

    def flat(self, multi) -> np.ndarray:
        return np.asarray(multi, dtype=np.int64) @ self.strides

    def points(self, idx=None) -> np.ndarray:
        if idx is None:
            idx = np.arange(self.size, dtype=np.int64)
        return self.multi(idx) * self.h

    def nearest(self, x) -> int:
        """Flat index of the grid point (cell) containing ``x``."""
        x = self.space.normalize(x)
        k = np.rint(np.asarray(x) / self.h).astype(np.int64)
        k = np.where(self.space.wrap_mask, k % self.sides, np.clip(k, 0, self.sides - 1))
        return int(self.flat(k))

    def offsets(self, radius: float) -> np.ndarray:
        """Lattice offsets of Euclidean length at most ``radius`` (each residue once)."""
        ranges = []
        for side, w in zip(self.sides, self.space.wraps):
            K = int(math.floor(radius / self.h + 1e-9))
            if w and 2 * K + 1 > side:
                ranges.append(np.arange(-(side // 2), side - side // 2))
            else:
                K = min(K, int(side) - 1)
                ranges.append(np.arange(-K, K + 1))
        mesh = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, self.space.m)
        length = self.h * np.sqrt(np.sum(mesh.astype(float) ** 2, axis=-1))
        return np.ascontiguousarray(mesh[length <= radius * (1 + 1e-12)], dtype=np.int64)

    def cells_near(self, x, radius: float) -> np.ndarray:
        """Sorted flat indices of grid points within ``radius`` of ``x`` (plus the cell of ``x``)."""
        base = self.multi(self.nearest(x))
        off = self.offsets(radius + self.cell_diameter)
        cand = base + off
        w = self.space.wrap_mask
        inside = np.all(w | ((cand >= 0) & (cand < self.sides)), axis=-1)
        cand = np.where(w, cand % self.sides, cand)[inside]
        flat = self.flat(cand)
        d = self.space.distance(self.points(flat), self.space.normalize(x))
        keep = (d <= radius) | (flat == self.nearest(x))
        return np.unique(flat[keep])


def _check_resolution(grid: Grid, eps: float, factor: float = 4.0):
    if grid.h > eps / factor:
        raise ResolutionInsufficient(
            f"resolution insufficient: grid step {grid.h:g} > eps/{factor:g} = {eps / factor:g}")


class _Prepared:
    """Orbit table and per-n KD-trees for one (system, grid, region, n_max)."""

    leafsize = 16

    def __init__(self, sys: AnalyticSystem, grid: Grid, region, n_max: int):
        if sys.space.wraps != grid.space.wraps:
            raise ParameterError("grid and system live on different spaces")
        if region is None:
            region = np.arange(grid.size, dtype=np.int64)
        region = np.unique(np.asarray(region, dtype=np.int64))
        if region.size == 0:
            raise ParameterError("region must be non-empty")
        self.grid = grid
        self.region = region
        self.n_max = n_max
        self.orb = np.ascontiguousarray(orbit_table(sys, grid.points(region), n_max))
        self.wraps = np.array(grid.space.wraps, dtype=np.bool_)
        self._trees = {}

    def tree(self, n: int):
        if not 1 <= n <= self.n_max:
            raise ParameterError(f"n must lie in [1, {self.n_max}]")
        if n not in self._trees:
            self._trees = {n: _kernels.build_tree(self.orb, n, self.leafsize)}
        return self._trees[n]

    def first_fit(self, n: int, eps: float) -> np.ndarray:
        return _kernels.first_fit(self.orb, n, eps, self.wraps, self.tree(n))

    def farthest(self, n: int, eps: float, cap: float | None = None) -> np.ndarray:
        cap = 2.0 * eps if cap is None else cap
        return _kernels.capped_farthest(self.orb, n, eps, self.wraps, self.tree(n), cap)


# point-center distance evaluations allowed for the uncapped farthest-point pass
UNCAPPED_WORK = 2 * 10**7


def _farthest_cover(prep: _Prepared, n: int, eps: float) -> np.ndarray:
    """Capped farthest-point cover, replaced by the uncapped one when that is affordable and smaller."""
    centers = prep.farthest(n, eps)
    if len(centers) * prep.region.size <= UNCAPPED_WORK:
        plain = prep.farthest(n, eps, math.inf)
        if len(plain) < len(centers):
            centers = plain
    return centers


@dataclass
class SpanningResult:
    """Counts for one (n, eps) on one grid.

    ``r_upper`` is the size of an (n, eps)-spanning set, ``s_lower`` the size
    of an (n, eps)-separated set; either may be ``None`` when not computed.
    """

    n: int
    eps: float
    grid_g: int
    r_upper: int | None = None
    s_lower: int | None = None
    method: str = ""
    centers: np.ndarray | None = field(default=None, repr=False)


def max_separated(sys: AnalyticSystem, region=None, n: int = 1, eps: float = 0.125,
                  grid_g: int = 10) -> SpanningResult:
    """Maximal (n, eps)-separated set by a lexicographic greedy pass.

    Maximality makes the same set (n, eps)-spanning, so ``r_upper`` is
    filled with the same count.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    grid = Grid(sys.space, grid_g)
    _check_resolution(grid, eps)
    prep = _Prepared(sys, grid, region, n)
    centers = prep.first_fit(n, eps)
    return SpanningResult(n, eps, grid_g, r_upper=len(centers), s_lower=len(centers),
                          method="first-fit", centers=prep.region[centers])


def greedy_spanning(sys: AnalyticSystem, region=None, n: int = 1, eps: float = 0.125,
                    grid_g: int = 10) -> SpanningResult:
    """Greedy cover of the region by Bowen balls of radius ``eps`` (farthest-point order)."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    grid = Grid(sys.space, grid_g)
    _check_resolution(grid, eps)
    prep = _Prepared(sys, grid, region, n)
    centers = _farthest_cover(prep, n, eps)
    return SpanningResult(n, eps, grid_g, r_upper=len(centers), method="farthest-point",
                          centers=prep.region[centers])


def verify_spanning(sys: AnalyticSystem, grid: Grid, region, centers, n: int, eps: float) -> bool:
    """Exhaustive check that every region point is within ``eps`` in d_n of a center."""
    region = np.arange(grid.size) if region is None else np.asarray(region)
    orb_r = orbit_table(sys, grid.points(region), n)
    orb_c = orbit_table(sys, grid.points(np.asarray(centers)), n)
    best = np.full(region.size, np.inf)
    for c in orb_c:
        d = sys.space.distance(orb_r, c[None]).max(axis=1)
        np.minimum(best, d, out=best)
    return bool(np.all(best <= eps + _kernels.TIE))


def verify_separated(sys: AnalyticSystem, grid: Grid, centers, n: int, eps: float) -> bool:
    orb = orbit_table(sys, grid.points(np.asarray(centers)), n)
    for a in range(len(orb) - 1):
        d = sys.space.distance(orb[a + 1:], orb[a][None]).max(axis=1)
        if np.any(d <= eps + _kernels.TIE):
            return False
    return True


@dataclass
class CoveringTable:
    """Counts over an (eps, n) lattice, after monotone envelopes.

    Raw passes: a lexicographic maximal separated set and a farthest-point
    cover (capped, or plain when affordable), both of which are
    simultaneously separated and spanning.  Envelopes use that an (n', eps')-spanning set with n' >= n,
    eps' <= eps also spans at (n, eps), and dually for separated sets.
    """

    system: str
    grid_g: int
    region_size: int
    eps: np.ndarray
    ns: np.ndarray
    r_upper: np.ndarray
    s_lower: np.ndarray
    raw_first_fit: np.ndarray
    raw_farthest: np.ndarray
    complete: np.ndarray
    elapsed: float

    def result(self, n: int, eps: float) -> SpanningResult:
        e = int(np.flatnonzero(np.isclose(self.eps, eps))[0])
        k = int(np.flatnonzero(self.ns == n)[0])
        return SpanningResult(n, float(self.eps[e]), self.grid_g,
                              int(self.r_upper[e, k]), int(self.s_lower[e, k]), "envelope")


def covering_table(sys: AnalyticSystem, eps_list, ns, grid_g: int, region=None,
                   budget_seconds: float | None = None) -> CoveringTable:
    """Compute spanning and separated counts for every ``eps`` in ``eps_list`` and ``n`` in ``ns``.

    Cells left uncomputed when the budget runs out are ``-1`` and flagged in
    ``complete``.
    """
    eps_arr = np.asarray(sorted(set(float(e) for e in eps_list), reverse=True))
    ns = np.asarray(sorted(set(int(n) for n in ns)))
    if ns[0] < 1:
        raise ParameterError("n must be at least 1")
    grid = Grid(sys.space, grid_g)
    for e in eps_arr:
        _check_resolution(grid, e)
    start = time.perf_counter()
    prep = _Prepared(sys, grid, region, int(ns[-1]))
    shape = (eps_arr.size, ns.size)
    ff = np.full(shape, -1, dtype=np.int64)
    fp = np.full(shape, -1, dtype=np.int64)
    for k, n in enumerate(ns):
        for e, eps in enumerate(eps_arr):
            if budget_seconds is not None and time.perf_counter() - start > budget_seconds:
                break
            ff[e, k] = len(prep.first_fit(int(n), float(eps)))
            fp[e, k] = len(_farthest_cover(prep, int(n), float(eps)))
    complete = ff >= 0
    big = np.iinfo(np.int64).max
    r_raw = np.where(complete, np.minimum(ff, fp), big)
    s_raw = np.where(complete, np.maximum(ff, fp), -1)
    # spanning: reuse sets from larger n and smaller eps (later rows / columns)
    r_env = np.minimum.accumulate(np.minimum.accumulate(r_raw[::-1, ::-1], axis=0), axis=1)[::-1, ::-1]
    s_env = np.maximum.accumulate(np.maximum.accumulate(s_raw, axis=0), axis=1)
    r_env = np.where(complete, r_env, -1)
    s_env = np.where(complete, s_env, -1)
    return CoveringTable(sys.name, grid_g, int(prep.region.size), eps_arr, ns, r_env, s_env,
                         ff, fp, complete, time.perf_counter() - start)


@dataclass
class EntropyEstimate:
    """Slope of ``ln r_upper(n)`` against ``n`` over a window, in nats."""

    value: float
    window: tuple[int, int]
    residual: float
    half_width: float
    lower: float | None = None
    eps: float | None = None
    saturated: bool = False
    partial: bool = False
    counts: tuple[int, ...] = ()

    @property
    def flagged(self) -> bool:
        return self.saturated or self.partial


def fit_rate(ns, counts, level: float = 0.95) -> tuple[float, float, float]:
    """Least-squares slope of ``ln counts`` vs ``n``: (slope, RMS residual, CI half-width)."""
    x = np.asarray(ns, dtype=float)
    y = np.log(np.asarray(counts, dtype=float))
    if x.size < 2:
        return 0.0, 0.0, math.inf
    if np.all(y == y[0]):
        return 0.0, 0.0, 0.0 if x.size >= 3 else math.inf
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    rms = float(np.sqrt(np.mean(resid**2)))
    if x.size < 3:
        return float(slope), rms, math.inf
    dof = x.size - 2
    se = math.sqrt(float(np.sum(resid**2)) / dof / float(np.sum((x - x.mean()) ** 2)))
    hw = float(stats.t.ppf(0.5 + level / 2, dof) * se)
    return float(slope), rms, hw


MIN_POPULATION = 32


def _rate_from_table(table: CoveringTable, e: int, window: tuple[int, int],
                     min_population: float = MIN_POPULATION) -> EntropyEstimate:
    """Fit one eps row over the window, dropping resolution-limited steps.

    A step n is resolution-limited once the region holds fewer than
    ``min_population`` grid points per spanning center: Bowen balls then
    approach single cells and counts flatten toward the region size.
    Fewer than three usable steps flags the estimate as saturated.
    """
    lo, hi = window
    in_window = (table.ns >= lo) & (table.ns <= hi)
    done = table.complete[e] & in_window
    r = table.r_upper[e]
    usable = done & (r * min_population <= table.region_size)
    constant = done.any() and np.all(r[done] == r[done][0])
    if constant:
        # counts that never move carry an exact zero rate, whatever the population
        usable = done
    partial = not np.all(table.complete[e][in_window])
    saturated = usable.sum() < 3
    keep = usable if usable.sum() >= 2 else done
    ns = table.ns[keep]
    if ns.size == 0:
        return EntropyEstimate(math.nan, (lo, hi), math.nan, math.inf, eps=float(table.eps[e]),
                               saturated=True, partial=True)
    slope, rms, hw = fit_rate(ns, r[keep])
    s_slope = fit_rate(ns, table.s_lower[e][keep])[0]
    return EntropyEstimate(slope, (int(ns[0]), int(ns[-1])), rms, hw, lower=s_slope,
                           eps=float(table.eps[e]), saturated=bool(saturated), partial=partial,
                           counts=tuple(int(c) for c in r[keep]))


def _check_window(window) -> tuple[int, int]:
    lo, hi = (int(w) for w in window)
    if lo < 1 or hi - lo < 4:
        raise ParameterError(f"window must satisfy 1 <= n_min and n_max - n_min >= 4, got {window}")
    return lo, hi


def entropy_scale_rate(sys: AnalyticSystem, region=None, eps: float = 2**-6,
                       window=(4, 12), grid_g: int = 14, budget_seconds: float | None = None,
                       min_population: float = MIN_POPULATION) -> EntropyEstimate:
    """Scale entropy h(f, region, eps) as the slope of ``ln r_upper(n)`` over a window."""
    lo, hi = _check_window(window)
    table = covering_table(sys, [eps], range(1, hi + 1), grid_g, region, budget_seconds)
    return _rate_from_table(table, 0, (lo, hi), min_population)


@dataclass
class LimitFit:
    """Scale-entropy estimates along a decreasing eps ladder."""

    rows: list[tuple[float, EntropyEstimate]]
    table: CoveringTable

    @property
    def final(self) -> EntropyEstimate:
        """The estimate at the finest eps that is not flagged (the h(f) estimate)."""
        good = [est for _, est in self.rows if not est.flagged]
        return good[-1] if good else self.rows[0][1]

    def monotone(self) -> bool:
        """Unflagged values nondecreasing as eps decreases, up to half-width slack."""
        good = [est for _, est in self.rows if not est.flagged]
        return all(b.value >= a.value - (a.half_width + b.half_width)
                   for a, b in zip(good, good[1:]))

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def __getitem__(self, k):
        return self.rows[k]


def entropy_limit_fit(sys: AnalyticSystem, eps_sequence, window=(4, 12), grid_g: int = 14,
                      region=None, budget_seconds: float | None = None,
                      min_population: float = MIN_POPULATION) -> LimitFit:
    """Run the scale-entropy fit along a strictly decreasing eps ladder (one shared table)."""
    eps_sequence = [float(e) for e in eps_sequence]
    if not eps_sequence:
        raise ParameterError("eps ladder must be non-empty")
    if any(b >= a for a, b in zip(eps_sequence, eps_sequence[1:])):
        raise ParameterError("eps ladder must be strictly decreasing")
    lo, hi = _check_window(window)
    table = covering_table(sys, eps_sequence, range(1, hi + 1), grid_g, region, budget_seconds)
    rows = [(float(table.eps[e]), _rate_from_table(table, e, (lo, hi), min_population))
            for e in range(len(eps_sequence))]
    return LimitFit(rows, table)


CSV_FIELDS = ("system", "n", "eps", "grid_g", "s_lower", "r_upper", "slope", "residual")


def table_rows(table: CoveringTable, fits: LimitFit | None = None) -> list[dict]:
    """CSV rows (``CSV_FIELDS``) for a covering table; slope/residual repeat per eps."""
    rows = []
    for e, eps in enumerate(table.eps):
        est = fits.rows[e][1] if fits is not None else None
        for k, n in enumerate(table.ns):
            if not table.complete[e, k]:
                continue
            rows.append({
                "system": table.system, "n": int(n), "eps": float(eps), "grid_g": table.grid_g,
                "s_lower": int(table.s_lower[e, k]), "r_upper": int(table.r_upper[e, k]),
                "slope": "" if est is None else f"{est.value:.12g}",
                "residual": "" if est is None else f"{est.residual:.12g}",
            })
    return rows
