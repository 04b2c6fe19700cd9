"""Nonlocal Jordan-Moore-Gibson-Thompson equations: kernels, a spectral
Volterra solver, singular-limit experiments and a batch CLI."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kernels import Kernel, KernelPair, resolvent, sonine_defect, conv_apply, conv_apply_fast  # noqa: E402
from .spectral import Interval, Rectangle, SineBasis  # noqa: E402
from .solver import (  # noqa: E402
    Forcing,
    InitialData,
    ScenarioConfig,
    Trajectory,
    limiting_solve,
    solve_linear,
    solve_nonlinear,
)
