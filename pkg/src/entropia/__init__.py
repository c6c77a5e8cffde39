"""Numerical topological entropy, local entropy and analytic bounds for model dynamical systems."""
from .bounds import BoundSchedule, CauchyEnvelope, MuNuModel, a_of_t, hloc_bound, q_max
from .config import ExperimentConfig, load_config
from .core import AnalyticSystem, RescaledMap, bowen_distance, iterate_orbit, jet_norms
from .covering import (EntropyEstimate, entropy_limit_fit, entropy_scale_rate, greedy_spanning,
                       max_separated)
from .errors import (ConfigError, EntropiaError, NoComplexExtension, NoJetAvailable, NumericEscape,
                     ParameterError, PreconditionError, ResolutionInsufficient, ScaleTooSmall)
from .local import bowen_ball_boxes, infinite_ball_approx, local_entropy_at, local_entropy_sup
from .runner import RunRecord, run
from .spaces import StateSpace
from .zoo import SuspensionSystem, resolve, suspend

__version__ = "0.1.0"
