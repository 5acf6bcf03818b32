"""Monte Carlo toolkit for the time-inhomogeneous kinetic diffusion

    dV_t = dB_t - t^(-beta) F(V_t) dt,    dX_t = V_t dt,

its changes of time, invariant laws and scaling limits.
"""

from .config import ExperimentConfig
from .errors import (DomainError, ExplosionError, KlimError, PreconditionError, QuadratureError,
                     RegimeMismatchError, SpecError, UnsupportedError)
from .integrate import (PathBundle, RngPolicy, TimeGrid, simulate_exponential_homogenized, simulate_ou_exact,
                        simulate_power_homogenized, simulate_ske)
from .invariant import DensitySpec, LambdaF, PiF, scale_function
from .limits import CriticalLaw, KolmogorovPair, SubcriticalPosition, SubcriticalVelocity, rescale
from .model import DriftSpec, ModelSpec, Regime, classify_regime, eval_drift, explosion_verdict
from .stats import TestReport
from .timechange import TimeChange, apply_scaling, inverse_scaling, simulate_time_changed

__version__ = "0.1.0"
