"""Homogenization of heterogeneous Wilson-Cowan neural field equations.

The package solves ``u' = -u + J^eps * f(x/eps, u)`` on a periodic box,
its two-scale limit ``u0' = -u0 + J ** f(y, u0)``, and measures how the
former approaches the latter as ``eps -> 0``.
"""
from .profiles import Profile
from .micro import (AlgebraTag, CellSampled, LimitAtInfinity, MicroFunction, TrigPoly, ball_average,
                    besicovitch_seminorm, eval_micro, mean_value, shift_micro, sup_norm, trace)
from .grid import (CellGrid, GridMismatchError, MacroField, MacroGrid, TwoScaleField, cell_mean,
                   corrector_trace, integrate, lift, lp_norm, read_field, refine_macro, sample_trace,
                   two_scale_eval, write_field)
from .convolve import (ConvPlan, YoungReport, cell_conv, conv_direct, conv_macro, double_conv,
                       double_conv_direct, two_scale_norm, young_check)
from .model import (FiringRate, HeteroProblem, HomogProblem, KernelSpec, Linear, Sigmoid, apply_firing,
                    apply_firing_two_scale, hetero_rhs, homog_rhs, kernel_mass, kernel_trace,
                    kernel_two_scale)
from .solver import (BlowUpError, BoundReport, ConfigurationError, ConvergenceFailure, NonContractionError,
                     PicardConfig, Solution, SolveReport, TimeGrid, apriori_monitor, homog_solve,
                     picard_solve, rk4_solve)
from .sigma import (PairingReport, StrongReport, TestFunction, TimeFactor, check_commensurate,
                    convolution_limit_check, default_family, holder_bound, is_commensurate,
                    limit_pairing, spacetime_limit_pairing, spacetime_pairing, strong_sigma_check,
                    translate_limit_check, weak_sigma_pairing)
from .experiment import (ExperimentConfig, SweepResult, ValidationError, control_config, default_config,
                         load_config, run, run_sweep, validate)

__version__ = "0.1.0"
