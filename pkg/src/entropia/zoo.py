"""Benchmark systems with known entropy, and the suspension (mapping torus) construction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import jets
from .core import AnalyticSystem
from .errors import ParameterError
from .spaces import StateSpace

__all__ = [
    "make_identity",
    "make_circle_map",
    "make_toral_automorphism",
    "make_logistic",
    "SuspensionSystem",
    "suspend",
    "resolve",
    "ZOO_NAMES",
]

ISOMETRY_L0 = 1.0 + 1e-9
CAT = ((2, 1), (1, 1))


def _neighbourhood_sup(lift, rho: float, samples: int = 20000) -> float:
    """Sup of |lift| over the complex rho-neighbourhood of [0, 1] (1-D maps).

    The neighbourhood is a stadium; by the maximum modulus principle the sup
    sits on its boundary, which is sampled densely.  A 1% margin absorbs the
    sampling gap.
    """
    s = np.linspace(0.0, 1.0, samples)
    theta = np.linspace(-np.pi / 2, np.pi / 2, samples)
    boundary = np.concatenate([
        s + 1j * rho,
        s - 1j * rho,
        1.0 + rho * np.exp(1j * theta),
        0.0 - rho * np.exp(1j * theta),
    ])
    vals = np.abs(np.asarray(lift((boundary,))[0]))
    return float(vals.max() * 1.01)


def make_identity(m: int = 1) -> AnalyticSystem:
    rho = 0.9
    return AnalyticSystem(
        name="identity" if m == 1 else f"identity{m}",
        space=StateSpace.torus(m),
        L0=ISOMETRY_L0,
        rho=rho,
        M0=math.sqrt(m) + rho,
        lift=lambda x: tuple(x),
        exact_entropy=0.0,
        invertible=True,
    )


def make_circle_map(kind: str, param: float | None = None) -> AnalyticSystem:
    """Circle maps: ``doubling``, ``rotation`` (angle ``param``) or ``trig`` (``param = c``).

    ``trig`` is ``x -> 2x + c sin(2 pi x) mod 1``, a degree-2 expanding map
    for ``|c| < 1 / (2 pi)``.
    """
    space = StateSpace.torus(1)
    if kind == "doubling":
        rho = 0.5
        return AnalyticSystem(
            name="doubling", space=space, L0=2.0, rho=rho, M0=2 * (1 + rho),
            lift=lambda x: (2 * x[0],), exact_entropy=math.log(2),
        )
    if kind == "rotation":
        alpha = 0.30902 if param is None else float(param)
        rho = 0.9
        return AnalyticSystem(
            name=f"rotation:{alpha:g}", space=space, L0=ISOMETRY_L0, rho=rho,
            M0=1 + rho + abs(alpha), lift=lambda x: (x[0] + alpha,),
            exact_entropy=0.0, invertible=True, params={"alpha": alpha},
        )
    if kind == "trig":
        c = 0.05 if param is None else float(param)
        if not abs(c) < 1 / (2 * math.pi):
            raise ParameterError(f"trig map needs |c| < 1/(2 pi), got {c}")
        rho = 0.5
        return AnalyticSystem(
            name=f"trig:{c:g}", space=space, L0=2 + 2 * math.pi * abs(c), rho=rho,
            M0=2 * (1 + rho) + abs(c) * math.cosh(2 * math.pi * rho),
            lift=lambda x: (2 * x[0] + c * jets.sin(2 * math.pi * x[0]),),
            exact_entropy=math.log(2), params={"c": c},
        )
    raise ParameterError(f"unknown circle map kind {kind!r}")


def make_toral_automorphism(A) -> AnalyticSystem:
    """Linear automorphism of the 2-torus given by an integer unimodular matrix."""
    A = np.asarray(A)
    if A.shape != (2, 2) or not np.issubdtype(A.dtype, np.integer):
        raise ParameterError("A must be a 2x2 integer matrix")
    det = round(float(np.linalg.det(A)))
    if abs(det) != 1:
        raise ParameterError(f"A must be unimodular, det = {det}")
    eig = np.linalg.eigvals(A.astype(float))
    h = float(sum(math.log(abs(l)) for l in eig if abs(l) > 1 + 1e-12))
    norm2 = float(np.linalg.norm(A.astype(float), 2))
    rho = 0.5
    a, b, c, d = (int(v) for v in A.ravel())
    name = "cat" if (a, b, c, d) == (2, 1, 1, 1) else f"toral:{a},{b},{c},{d}"
    return AnalyticSystem(
        name=name, space=StateSpace.torus(2), L0=max(norm2, ISOMETRY_L0), rho=rho,
        M0=max(norm2, 1.0) * (math.sqrt(2) + rho),
        lift=lambda x: (a * x[0] + b * x[1], c * x[0] + d * x[1]),
        exact_entropy=h, invertible=True, params={"A": [[a, b], [c, d]]},
    )


def _logistic_lift(x):
    return (4 * x[0] * (1 - x[0]),)


def make_logistic() -> AnalyticSystem:
    rho = 0.5
    return AnalyticSystem(
        name="logistic", space=StateSpace.cube(1), L0=4.0, rho=rho,
        M0=_neighbourhood_sup(_logistic_lift, rho), lift=_logistic_lift,
        exact_entropy=math.log(2),
    )


@dataclass(frozen=True, eq=False)
class SuspensionSystem:
    """Mapping torus of ``base`` with the vertical flow sampled at time ``1 / i``.

    Points are ``(t, x)`` with ``t`` in [0, 1); ``(1, x)`` is glued to
    ``(0, f(x))``.  Distances use the warped product metric
    ``dt^2 + lam^(2t) |dx|^2`` with ``lam = base.L0``, which matches the
    gluing to first order: the fibre at height 1 is the fibre at height 0
    pulled back by ``f``.  Under it the time-``1/i`` map stretches by at most
    ``lam^(1/i)``.
    """

    base: AnalyticSystem
    i: int

    @property
    def lam(self) -> float:
        return self.base.L0

    @cached_property
    def space(self) -> StateSpace:
        return StateSpace.product(StateSpace.cube(1), self.base.space)

    def step(self, z) -> np.ndarray:
        """The time-``1/i`` map."""
        z = np.array(z, dtype=float)
        t = z[..., 0] + 1.0 / self.i
        cross = t >= 1.0 - 1e-12
        t = np.where(cross, t - 1.0, t)
        t = np.where(np.abs(t) < 1e-12, 0.0, t)
        x = z[..., 1:]
        if np.any(cross):
            x = np.where(cross[..., None], self.base.eval(x), x)
        return np.concatenate([t[..., None], x], axis=-1)

    def time_one(self, z) -> np.ndarray:
        z = np.array(z, dtype=float)
        return np.concatenate([z[..., :1], self.base.eval(z[..., 1:])], axis=-1)

    def distance(self, z, w) -> np.ndarray:
        """Warped distance, minimised over the direct route and the forward seam route.

        The seam route pushes the higher point across the gluing with ``f``;
        no inverse is used, so non-invertible bases are covered too.
        """
        z = np.asarray(z, dtype=float)
        w = np.asarray(w, dtype=float)

        def direct(a, b):
            dt = a[..., 0] - b[..., 0]
            mid = 0.5 * (a[..., 0] + b[..., 0])
            dx = self.base.space.distance(a[..., 1:], b[..., 1:])
            return np.sqrt(dt * dt + (self.lam ** mid * dx) ** 2)

        d = direct(z, w)
        hi = np.where((z[..., 0] >= w[..., 0])[..., None], z, w)
        lo = np.where((z[..., 0] >= w[..., 0])[..., None], w, z)
        pushed = np.concatenate([hi[..., :1] - 1.0, self.base.eval(hi[..., 1:])], axis=-1)
        return np.minimum(d, direct(pushed, lo))

    def step_norm(self, samples: int = 10_000, seed: int = 0, h: float = 1e-7) -> float:
        """Empirical sup of the time-``1/i`` map's derivative norm (finite differences)."""
        rng = np.random.default_rng(seed)
        m = self.base.m
        t = rng.uniform(1e-6, 1 - 1e-6, samples)
        threshold = 1.0 - 1.0 / self.i
        keep = np.abs(t - threshold) > 10 * h
        t = t[keep]
        x = self.base.space.sample(t.size, rng)
        u = rng.normal(size=(t.size, m + 1))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        z = np.concatenate([t[:, None], x], axis=-1)
        dz = h * u
        dz[:, 1:] /= self.lam ** t[:, None]
        z2 = z + dz
        fz, fz2 = self.step(z), self.step(z2)
        dt = fz2[:, 0] - fz[:, 0]
        dx = self.base.space.distance(fz[:, 1:], fz2[:, 1:])
        mid = 0.5 * (fz[:, 0] + fz2[:, 0])
        stretched = np.sqrt(dt * dt + (self.lam ** mid * dx) ** 2)
        return float(np.max(stretched / h))

    def step_system(self) -> AnalyticSystem:
        """The time-``1/i`` map as a system; its ``L0`` refers to the warped metric."""
        return AnalyticSystem(
            name=f"suspend-step:{self.base.name}:{self.i}", space=self.space,
            L0=self.lam ** (1.0 / self.i), rho=self.base.rho,
            M0=max(self.base.M0, 1.0 + 1.0 / self.i + self.base.rho),
            map_fn=self.step, analytic=False, exact_entropy=None,
            invertible=self.base.invertible,
        )

    def time_one_system(self) -> AnalyticSystem:
        """``(t, x) -> (t, f(x))``; Lipschitz constant ``max(1, L0)`` in the flat product metric."""
        ent = self.base.exact_entropy
        return AnalyticSystem(
            name=f"suspend-one:{self.base.name}", space=self.space, L0=self.base.L0,
            rho=self.base.rho, M0=max(self.base.M0, 1.0 + self.base.rho),
            map_fn=self.time_one, analytic=False, exact_entropy=ent,
            invertible=self.base.invertible,
        )


def suspend(base: AnalyticSystem, L0_target: float, samples: int = 10_000,
            seed: int = 0, i_max: int = 10**6) -> SuspensionSystem:
    """Suspension with the smallest ``i`` whose time-``1/i`` map stretches less than ``L0_target``.

    ``i`` is swept linearly up to 64 and by bisection beyond (the measured
    norm is nonincreasing in ``i``).
    """
    if not L0_target > 1.0:
        raise ParameterError("L0_target must exceed 1")

    def ok(i: int) -> bool:
        return SuspensionSystem(base, i).step_norm(samples, seed) < L0_target

    for i in range(1, 65):
        if ok(i):
            return SuspensionSystem(base, i)
    lo, hi = 64, 128
    while not ok(hi):
        lo, hi = hi, hi * 2
        if lo >= i_max:
            raise ParameterError(
                f"no i <= {i_max} brings the step norm below {L0_target}; metric inconsistent")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        lo, hi = (lo, mid) if ok(mid) else (mid, hi)
    return SuspensionSystem(base, hi)


ZOO_NAMES = ("identity", "doubling", "rotation:<alpha>", "trig:<c>", "cat",
             "toral:<a,b,c,d>", "logistic", "suspend:<base>:<L0_target>")


def resolve(name: str) -> AnalyticSystem | SuspensionSystem:
    """Look up a zoo system by its CLI name, e.g. ``rotation:0.309`` or ``suspend:doubling:1.25``."""
    head, _, rest = name.strip().partition(":")
    try:
        if head == "identity":
            return make_identity(int(rest) if rest else 1)
        if head == "doubling":
            return make_circle_map("doubling")
        if head in ("rotation", "trig"):
            return make_circle_map(head, float(rest) if rest else None)
        if head == "cat":
            return make_toral_automorphism(CAT)
        if head == "toral":
            vals = [int(v) for v in rest.split(",")]
            return make_toral_automorphism(np.array(vals).reshape(2, 2))
        if head == "logistic":
            return make_logistic()
        if head == "suspend":
            base_name, _, target = rest.rpartition(":")
            base = resolve(base_name)
            if isinstance(base, SuspensionSystem):
                raise ParameterError("nested suspensions are not supported")
            return suspend(base, float(target))
    except (ValueError, IndexError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"cannot parse system name {name!r}: {exc}") from exc
    raise ParameterError(f"unknown system {name!r}; known: {', '.join(ZOO_NAMES)}")
