"""Dynamical systems on flat spaces: orbits, the Bowen metric, jets and rescaled maps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm, qmc

from . import jets
from .errors import NoComplexExtension, NoJetAvailable, NumericEscape, ParameterError
from .spaces import StateSpace, as_point

__all__ = [
    "AnalyticSystem",
    "RescaledMap",
    "iterate_orbit",
    "bowen_distance",
    "jet_norms",
    "polydisc_sup",
    "probe_directions",
    "check_system",
]

Lift = Callable[[Sequence], Sequence]


@dataclass(frozen=True, eq=False)
class AnalyticSystem:
    """A self-describing map on a flat model space.

    ``lift`` is the closed form on the universal cover, written against
    :mod:`entropia.jets` so it accepts floats, arrays, complex numbers and
    jets; it takes and returns a sequence of ``m`` coordinates.  Systems
    without a closed form supply ``map_fn`` instead (array ``(..., m)`` in
    and out) and get no jets or complex extension.
    """

    name: str
    space: StateSpace
    L0: float
    rho: float
    M0: float
    lift: Lift | None = None
    map_fn: Callable[[np.ndarray], np.ndarray] | None = None
    analytic: bool = True
    exact_entropy: float | None = None
    invertible: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lift is None and self.map_fn is None:
            raise ParameterError("a system needs either a lift or a map_fn")
        if not self.L0 > 1.0:
            raise ParameterError(f"L0 must exceed 1, got {self.L0}")
        if not 0.0 < self.rho < 1.0:
            raise ParameterError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.M0 > 0.0:
            raise ParameterError(f"M0 must be positive, got {self.M0}")
        if self.exact_entropy is not None and self.exact_entropy < 0:
            raise ParameterError("exact entropy must be non-negative")

    @property
    def m(self) -> int:
        return self.space.m

    @property
    def has_jets(self) -> bool:
        return self.lift is not None

    @property
    def has_complex(self) -> bool:
        return self.lift is not None and self.analytic

    def apply_lift(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        out = self.lift(tuple(x[..., j] for j in range(self.m)))
        return np.stack(np.broadcast_arrays(*out), axis=-1)

    def eval(self, x) -> np.ndarray:
        """Apply the map to points of shape ``(..., m)``, normalized."""
        x = np.asarray(x, dtype=float)
        y = self.apply_lift(x) if self.lift is not None else self.map_fn(x)
        return self.space.normalize(y)

    def complex_eval(self, z) -> np.ndarray:
        if not self.has_complex:
            raise NoComplexExtension(f"{self.name} has no complex extension")
        return self.apply_lift(np.asarray(z, dtype=complex))

    def __repr__(self) -> str:
        return f"AnalyticSystem({self.name!r}, {self.space}, L0={self.L0:.6g})"


def iterate_orbit(sys: AnalyticSystem, x, n: int) -> np.ndarray:
    """Orbit segment ``x, f(x), ..., f^n(x)`` as an array of shape ``(n + 1, m)``."""
    if n < 0:
        raise ParameterError("n must be non-negative")
    out = np.empty((n + 1, sys.m))
    out[0] = as_point(sys.space, x)
    for i in range(n):
        y = sys.eval(out[i])
        if not np.all(np.isfinite(y)):
            raise NumericEscape(i + 1)
        out[i + 1] = y
    return out


def orbit_table(sys: AnalyticSystem, points: np.ndarray, n: int) -> np.ndarray:
    """Orbits of many points, shape ``(N, n, m)`` holding ``f^i(p)`` for ``i < n``."""
    points = np.asarray(points, dtype=float)
    out = np.empty((points.shape[0], n, sys.m))
    cur = points
    for i in range(n):
        out[:, i] = cur
        if i + 1 < n:
            cur = sys.eval(cur)
            if not np.all(np.isfinite(cur)):
                raise NumericEscape(i + 1)
    return out


def bowen_distance(sys: AnalyticSystem, x, y, n: int) -> float:
    """``max_{0 <= i < n} d(f^i x, f^i y)``."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    ox = iterate_orbit(sys, x, n - 1)
    oy = iterate_orbit(sys, y, n - 1)
    return float(np.max(sys.space.distance(ox, oy)))


def probe_directions(m: int, count: int = 64) -> np.ndarray:
    """Fixed quasi-random unit directions in R^m.

    In one dimension the single direction 1 suffices since the k-th
    derivative form is homogeneous.
    """
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        theta = np.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    u = qmc.Halton(d=m, scramble=False).random(count + 1)[1:]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def _directional_derivatives(sys: AnalyticSystem, x: np.ndarray, n: int, kmax: int,
                             dirs: np.ndarray) -> np.ndarray:
    """Norms of ``d^k f^n(x)[v, ..., v]``; shape ``(kmax, *batch, ndirs)``."""
    x = np.asarray(x, dtype=float)[..., None, :]
    u = jets.seed_line(x, dirs, kmax)
    for _ in range(n):
        u = list(sys.lift(tuple(u)))
        # translations by integers do not change derivatives; keep coordinates small
        for j, w in enumerate(sys.space.wraps):
            if w:
                u[j].c[0] = np.mod(u[j].c[0], 1.0)
    out = []
    for k in range(1, kmax + 1):
        comp = np.stack([uj.derivative(k) for uj in u], axis=-1)
        out.append(np.linalg.norm(comp, axis=-1))
    return np.stack(out)


def jet_norms(sys: AnalyticSystem, x, n: int, kmax: int, directions: int = 64) -> np.ndarray:
    """Operator-norm estimates of ``d^k f^n(x)`` for ``k = 1..kmax``.

    Taylor expansions of ``f^n`` along a fixed set of probe directions are
    propagated through the closed form; the maximum directional value is a
    lower estimate of the true norm (exact in one dimension).  ``x`` may
    carry leading batch axes.
    """
    if not sys.has_jets:
        raise NoJetAvailable(f"no jet available for {sys.name}")
    if kmax < 1:
        raise ParameterError("kmax must be at least 1")
    dirs = probe_directions(sys.m, directions)
    vals = _directional_derivatives(sys, x, n, kmax, dirs)
    return np.moveaxis(vals.max(axis=-1), 0, -1)


def _van_der_corput(count: int, base: int) -> np.ndarray:
    out = np.zeros(count)
    for i in range(count):
        f, k, r = 1.0, i, 0.0
        while k > 0:
            f /= base
            r += f * (k % base)
            k //= base
        out[i] = r
    return out


def polydisc_sup(sys: AnalyticSystem, center, radius: float, samples: int = 4096) -> float:
    """Empirical sup of the complex extension over a polydisc.

    Points are taken on the distinguished boundary ``|z_j - c_j| = radius``
    (where the maximum modulus over the closed polydisc is attained), at
    angles from a radical-inverse sequence, so the first ``k`` samples are
    always a prefix of the first ``k + 1``.
    """
    if not sys.has_complex:
        raise NoComplexExtension(f"{sys.name} has no complex extension")
    if radius > sys.rho:
        raise ParameterError(f"radius {radius} exceeds analytic radius {sys.rho}")
    c = np.asarray(center, dtype=float).reshape(sys.m)
    primes = [2, 3, 5, 7, 11, 13, 17, 19][: sys.m]
    angles = np.stack([_van_der_corput(samples, p) for p in primes], axis=-1) * 2 * np.pi
    z = c + radius * np.exp(1j * angles)
    vals = sys.complex_eval(z)
    return float(np.max(np.linalg.norm(vals, axis=-1)))


@dataclass(frozen=True, eq=False)
class RescaledMap:
    """The maps ``g_i(t) = s1 (g(t / s1 + g^{i-1}(x)) - g^i(x))`` with ``g = f^n``."""

    base: AnalyticSystem
    n: int
    x: np.ndarray
    count: int = 4

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be at least 1")
        if not self.base.has_jets:
            raise NoJetAvailable(f"no jet available for {self.base.name}")

    @cached_property
    def log_s1(self) -> float:
        return self.n * math.log(self.base.L0) + 2 * math.log(self.n)

    @cached_property
    def s1(self) -> float:
        return float(self.base.L0) ** self.n * self.n ** 2

    @cached_property
    def anchor_orbit(self) -> np.ndarray:
        """``g^{i}(x)`` for ``i = 0..count``."""
        orbit = iterate_orbit(self.base, self.x, self.n * self.count)
        return orbit[:: self.n]

    def _power_lift(self, z: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``f^n(z) - f^n(y)`` on the cover, with ``z`` near ``y``."""
        z = np.asarray(z, dtype=float)
        y = np.broadcast_to(np.asarray(y, dtype=float), z.shape).copy()
        z = z.copy()
        wraps = self.base.space.wrap_mask
        for _ in range(self.n):
            fz = self.base.apply_lift(z)
            fy = self.base.apply_lift(y)
            shift = np.where(wraps, np.floor(fy), 0.0)
            z, y = fz - shift, fy - shift
        return z - y

    def __call__(self, i: int, t) -> np.ndarray:
        if not 1 <= i <= self.count:
            raise ParameterError(f"i must lie in [1, {self.count}]")
        t = np.asarray(t, dtype=float)
        y = self.anchor_orbit[i - 1]
        return self.s1 * self._power_lift(y + t / self.s1, y)

    def derivative_norms(self, i: int, t, kmax: int) -> np.ndarray:
        """Jet estimates of ``||d^k g_i(t)||``, ``k = 1..kmax``."""
        t = np.asarray(t, dtype=float)
        y = self.anchor_orbit[i - 1]
        raw = jet_norms(self.base, y + t / self.s1, self.n, kmax)
        k = np.arange(1, kmax + 1)
        return raw * np.exp((1 - k) * self.log_s1)


@dataclass
class SystemCheck:
    domain_ok: bool
    lipschitz_max_ratio: float
    lipschitz_ok: bool
    complex_max_error: float | None
    complex_ok: bool

    @property
    def ok(self) -> bool:
        return self.domain_ok and self.lipschitz_ok and self.complex_ok


def check_system(sys: AnalyticSystem, samples: int = 2000, seed: int = 0,
                 pair_scale: float = 1e-5) -> SystemCheck:
    """Sampled checks of domain preservation, the Lipschitz bound and real/complex agreement."""
    rng = np.random.default_rng(seed)
    x = sys.space.sample(samples, rng)
    fx = sys.eval(x)
    domain_ok = bool(np.all(sys.space.contains(fx)))
    v = rng.normal(size=x.shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    y = x + pair_scale * v
    # keep interval factors inside their domain
    y = np.where(sys.space.wrap_mask, y, np.clip(y, 0.0, 1.0))
    d0 = sys.space.distance(x, y)
    keep = d0 > 0
    d1 = sys.space.distance(fx[keep], sys.eval(y[keep]))
    ratio = float(np.max(d1 / d0[keep]))
    lip_ok = ratio <= sys.L0 * (1 + 1e-6)
    if sys.has_complex:
        real_part = sys.complex_eval(x.astype(complex))
        # compare modulo the fundamental domain on wrapped coordinates
        err = float(np.max(sys.space.coord_diff(real_part.real, fx)))
        err = max(err, float(np.max(np.abs(real_part.imag))))
        cx_ok = err <= 1e-12
    else:
        err, cx_ok = None, True
    return SystemCheck(domain_ok, ratio, bool(lip_ok), err, cx_ok)
