"""Experiment configuration: sectioned ``key = value`` files plus per-system defaults."""
from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

__all__ = ["ExperimentConfig", "TASKS", "load_config", "system_defaults", "budget_from_env"]

TASKS = ("entropy", "local-entropy", "bound-curve", "verify-theorem", "verify-corollary",
         "certify-envelopes", "schedule-report")

BUDGET_ENV = "ENTROPIA_BUDGET_SECONDS"

# eps ladder, lattice exponent and fit window that keep each system's run at desk scale
_CIRCLE = ((2**-4, 2**-5, 2**-6, 2**-7), 14, (4, 12))
# nonlinear maps bunch orbits unevenly, so their balls need a finer lattice
_CURVED = (_CIRCLE[0], 16, (4, 12))
_PLANE = ((2**-3, 2**-4, 2**-5), 9, (3, 8))
_DEFAULTS = {
    "identity": _CIRCLE, "doubling": _CIRCLE, "rotation": _CIRCLE, "trig": _CURVED,
    "logistic": _CURVED, "cat": _PLANE, "toral": _PLANE, "suspend": _PLANE,
}


def system_defaults(system: str) -> tuple[tuple[float, ...], int, tuple[int, int]]:
    head = system.partition(":")[0]
    if head == "identity" and system.partition(":")[2] not in ("", "1"):
        return _PLANE
    return _DEFAULTS.get(head, _CIRCLE)


@dataclass(frozen=True)
class ExperimentConfig:
    system: str = "doubling"
    task: str = "entropy"
    eps_ladder: tuple[float, ...] | None = None
    grid_g: int | None = None
    n_window: tuple[int, int] | None = None
    N_proxy: int = 20
    local_window: tuple[int, int] = (1, 6)
    coarse: int = 8
    centers: int = 256
    budget_seconds: float | None = None
    seed: int = 0
    output_dir: str = "entropia-out"
    workers: int = 1
    schedule_n_max: int = 10**6
    curve_n_max: int = 10**4

    def resolved(self) -> "ExperimentConfig":
        """Fill unset ladder, lattice and window from the system defaults, then validate."""
        ladder, g, window = system_defaults(self.system)
        cfg = replace(self,
                      eps_ladder=tuple(self.eps_ladder) if self.eps_ladder is not None else ladder,
                      grid_g=self.grid_g if self.grid_g is not None else g,
                      n_window=tuple(self.n_window) if self.n_window is not None else window)
        cfg.validate()
        return cfg

    def validate(self):
        if self.task not in TASKS:
            raise ConfigError(f"task: unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if not self.system:
            raise ConfigError("system: must name a zoo system")
        lad = self.eps_ladder
        if lad is not None:
            if len(lad) == 0:
                raise ConfigError("eps_ladder: must be non-empty")
            if any(not (e > 0 and math.isfinite(e)) for e in lad):
                raise ConfigError("eps_ladder: entries must be positive")
            if any(b >= a for a, b in zip(lad, lad[1:])):
                raise ConfigError("eps_ladder: must be strictly decreasing")
        if self.grid_g is not None and not 1 <= self.grid_g <= 24:
            raise ConfigError("grid_g: must lie in [1, 24]")
        for name in ("n_window", "local_window"):
            w = getattr(self, name)
            if w is not None and (len(w) != 2 or w[0] < 1 or w[1] - w[0] < 4):
                raise ConfigError(f"{name}: need a,b with 1 <= a and b - a >= 4")
        if self.budget_seconds is not None and not self.budget_seconds > 0:
            raise ConfigError("budget_seconds: must be positive")
        for name in ("N_proxy", "workers", "coarse"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be at least 1")
        if self.centers < 0:
            raise ConfigError("centers: must be non-negative")

    def snapshot(self) -> str:
        """The config as an INI text that :func:`load_config` reads back."""
        lines = ["[system]", f"name = {self.system}", "", "[experiment]"]
        for f in fields(self):
            if f.name == "system":
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def as_dict(self) -> dict:
        return asdict(self)


def _floats(text: str) -> tuple[float, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(_number(p) for p in parts)


def _number(text: str) -> float:
    """Parse a float, also accepting ``2^-4`` and ``1/8``."""
    t = text.strip()
    if "^" in t:
        base, _, exp = t.partition("^")
        return float(base) ** float(exp)
    if "/" in t:
        num, _, den = t.partition("/")
        return float(num) / float(den)
    return float(t)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in re.split(r"[,\s]+", text.strip()) if p)


_PARSERS = {
    "task": str, "eps_ladder": _floats, "grid_g": int, "n_window": _ints, "N_proxy": int,
    "local_window": _ints, "coarse": int, "centers": int, "budget_seconds": float, "seed": int,
    "output_dir": str, "workers": int, "schedule_n_max": int, "curve_n_max": int,
}


def _line_of(text: str, key: str) -> int | None:
    pat = re.compile(rf"^\s*{re.escape(key)}\s*[=:]", re.IGNORECASE)
    for k, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return k
    return None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse ``[system] name = ...`` and ``[experiment] key = value`` sections."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {}
    if cp.has_section("system"):
        for key in cp["system"]:
            if key != "name":
                raise ConfigError(f"{source} line {_line_of(text, key)}: unknown key {key!r} in [system]")
        if "name" in cp["system"]:
            values["system"] = cp["system"]["name"].strip()
    for section in cp.sections():
        if section not in ("system", "experiment"):
            raise ConfigError(f"{source}: unknown section [{section}]")
    if cp.has_section("experiment"):
        for key, raw in cp["experiment"].items():
            if key not in _PARSERS:
                raise ConfigError(f"{source} line {_line_of(text, key)}: unknown key {key!r}")
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{source} line {_line_of(text, key)}: bad value for {key}: {raw!r}") from exc
    cfg = ExperimentConfig(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        field_name = str(exc).partition(":")[0]
        line = _line_of(text, field_name)
        where = f" line {line}" if line else ""
        raise ConfigError(f"{source}{where}: {exc}") from None
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def budget_from_env(default: float | None = None) -> float | None:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        val = float(raw)
    except ValueError as exc:
        raise ConfigError(f"{BUDGET_ENV}: not a number: {raw!r}") from exc
    if not val > 0:
        raise ConfigError(f"{BUDGET_ENV}: must be positive")
    return val
