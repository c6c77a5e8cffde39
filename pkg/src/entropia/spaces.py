"""Flat model spaces: tori, cubes and their products."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = ["StateSpace", "as_point"]


@dataclass(frozen=True)
class StateSpace:
    """A flat compact space with global coordinates.

    Each coordinate either wraps (circle factor, fundamental domain [0, 1))
    or is clamped (interval factor, [0, 1]).  Distances are Euclidean over
    per-coordinate differences, with the wrapped difference
    ``min(|a - b|, 1 - |a - b|)`` on circle factors.
    """

    kind: str
    m: int
    wraps: tuple[bool, ...]

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError(f"dimension must be positive, got {self.m}")
        if len(self.wraps) != self.m:
            raise ParameterError("wraps must have one flag per coordinate")

    @classmethod
    def torus(cls, m: int) -> "StateSpace":
        return cls("torus", m, (True,) * m)

    @classmethod
    def cube(cls, m: int) -> "StateSpace":
        return cls("cube", m, (False,) * m)

    @classmethod
    def product(cls, first: "StateSpace", second: "StateSpace") -> "StateSpace":
        return cls("product", first.m + second.m, first.wraps + second.wraps)

    @property
    def wrap_mask(self) -> np.ndarray:
        return np.array(self.wraps, dtype=bool)

    def normalize(self, x) -> np.ndarray:
        """Map coordinates into the fundamental domain."""
        x = np.asarray(x, dtype=float)
        w = self.wrap_mask
        out = np.where(w, np.mod(x, 1.0), np.clip(x, 0.0, 1.0))
        # mod can return exactly 1.0 for tiny negative inputs
        return np.where(w & (out >= 1.0), 0.0, out)

    def coord_diff(self, x, y) -> np.ndarray:
        d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        w = self.wrap_mask
        dw = np.mod(d, 1.0)
        return np.where(w, np.minimum(dw, 1.0 - dw), d)

    def distance(self, x, y) -> np.ndarray:
        """Euclidean distance; broadcasts over leading axes."""
        d = self.coord_diff(x, y)
        return np.sqrt(np.sum(d * d, axis=-1))

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        w = self.wrap_mask
        upper = np.where(w, x < 1.0 + tol, x <= 1.0 + tol)
        return np.all((x >= -tol) & upper, axis=-1)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((size, self.m))

    def __str__(self) -> str:
        if self.kind == "product":
            return "x".join("T" if w else "I" for w in self.wraps)
        return f"{self.kind}({self.m})"


def as_point(space: StateSpace, coords) -> np.ndarray:
    """Validate and normalize a point of ``space``."""
    x = np.atleast_1d(np.asarray(coords, dtype=float))
    if x.shape != (space.m,):
        raise ParameterError(f"point must have {space.m} coordinates, got shape {x.shape}")
    return space.normalize(x)
