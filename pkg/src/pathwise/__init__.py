"""Pathwise stochastic calculus on step paths.

Adapted-Riemann-sum (Bichteler-Karandikar) integration, causal time/space
derivatives of path functionals, and a Monte Carlo harness that verifies the
functional Ito formula numerically.
"""

__version__ = "0.1.0"

from .bk import (
    BkConfig,
    BkResult,
    StoppingGrid,
    bk_integral,
    check_integrand_causality,
    doleans_dade,
    functional_path,
    ito_process_functional,
    level_sum,
    levy_area,
    make_bk_functional,
    make_qv_functional,
    quad_variation,
    qv_level_path,
    stopping_times,
)
from .functional import (
    CausalFunctional,
    ContinuityProbeReport,
    DerivativeBundle,
    check_causality,
    combine,
    make_running_integral,
    make_state_functional,
    numeric_gradient,
    numeric_hessian,
    numeric_time_derivative,
    probe_space_continuity,
    probe_time_continuity,
)
from .paths import (
    PRE_START,
    CadlagPath,
    Partition,
    bump,
    paths_equal,
    piecewise_const,
    read_path_csv,
    stop,
    sup_distance,
    write_path_csv,
)
from .paths import dyadic_refinement
from .simulate import GeneratorSpec, brownian_path, ensemble, generate, ito_euler, substream
from .verify import (
    ConvergenceReport,
    ItoReport,
    functional_trace,
    heat_operator,
    ito_residual,
    ito_rhs,
    qv_refinement_report,
    regularity_report,
    residual_report,
    st_decomposition,
)

__all__ = [
    "__version__",
    "PRE_START",
    "Partition",
    "CadlagPath",
    "stop",
    "bump",
    "piecewise_const",
    "sup_distance",
    "paths_equal",
    "dyadic_refinement",
    "read_path_csv",
    "write_path_csv",
    "CausalFunctional",
    "DerivativeBundle",
    "ContinuityProbeReport",
    "check_causality",
    "combine",
    "make_running_integral",
    "make_state_functional",
    "numeric_gradient",
    "numeric_hessian",
    "numeric_time_derivative",
    "probe_space_continuity",
    "probe_time_continuity",
    "BkConfig",
    "BkResult",
    "StoppingGrid",
    "stopping_times",
    "level_sum",
    "bk_integral",
    "check_integrand_causality",
    "make_bk_functional",
    "quad_variation",
    "qv_level_path",
    "make_qv_functional",
    "doleans_dade",
    "ito_process_functional",
    "levy_area",
    "functional_path",
    "GeneratorSpec",
    "substream",
    "brownian_path",
    "ito_euler",
    "generate",
    "ensemble",
    "ItoReport",
    "ConvergenceReport",
    "functional_trace",
    "ito_rhs",
    "ito_residual",
    "st_decomposition",
    "heat_operator",
    "regularity_report",
    "residual_report",
    "qv_refinement_report",
]
