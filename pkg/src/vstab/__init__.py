"""Filter stability in weighted total-variation (V) norms for scalar HMMs.

Grid-based filters, closed-form Kalman references, numerical checks of the
stability hypotheses, and two-filter forgetting experiments.
"""
from .assumptions import (DriftProfile, EnvStats, LDReport, TheoremConstants,
                          admissible_c_range, check_drift, check_E_conditions,
                          drift_profile, drift_ratio, env_stats, kappa, ld_constants,
                          ld_spot_check, psi_gauss, theorem_constants)
from .engine import (FilterRun, SDecomposition, StepKernel, initial_measure,
                     log_difference_vnorms, run, s_decompose, step)
from .exceptions import (DegenerateFit, DomainError, GammaTooSmall, GridMismatch,
                         KappaNonpositive, ZeroMass)
from .experiments import (RateFit, StabilityTrace, echeck_bound, forget_bound,
                          observation_sd, prediction_vnorm_divergence, rate_estimate,
                          rho_scaled_decreasing, run_seeds, stability_run)
from .gaussian import (GaussianState, gaussian_v_moment, kalman_filter, kalman_predict,
                       kalman_step, kalman_update, log_gaussian_v_moment, stationary_pi)
from .measure import (Grid, GridMeasure, KernelGrid, WeightSpec, apply_kernel,
                      compose_kernels, grid_gaussian, identity_kernel, integrate,
                      kernel_vnorm, log_vnorm, normalize, tail_diagnostic, v_eval, vnorm)
from .models import (Fn, ModelSpec, ObservationPath, Scenario, q_kernel, simulate,
                     transition_matrix)

__version__ = "0.1.0"
