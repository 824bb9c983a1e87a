"""Conservative systems on the sphere with integrals of fourth degree in momenta.

``QF_THREADS`` caps BLAS and numba threads when set before the first import.
"""

import os as _os

_threads = _os.environ.get("QF_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .charts import ChartedSystem, PhaseState, SystemParams  # noqa: E402
from .criterion import FAnsatz, check_grid, criterion_residual, f_jet, fd_oracle  # noqa: E402
from .dynamics import IntegratorConfig, Section, Trajectory, integrate, poincare  # noqa: E402
from .errors import (  # noqa: E402
    BadParams,
    InadmissibleP,
    NumericalError,
    QuarticFlowError,
    ValidationError,
)
from .family import admissible_p, build_base, build_general, build_shifted, gaussian_curvature  # noqa: E402
from .integral_finder import (  # noqa: E402
    QuarticAnsatz,
    bracket_operator,
    certify,
    find_integrals,
    reconstruct,
    trivial_integrals,
)
from .kovalevskaya import (  # noqa: E402
    goryachev_reference,
    kov_chart_system,
    kovalevskaya_reference,
    match_kovalevskaya,
    verify_metric_identity,
)
from .quartic_ode import FamilyParams, compute_pole_functions, solve_u  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "BadParams", "ChartedSystem", "FAnsatz", "FamilyParams", "InadmissibleP", "IntegratorConfig",
    "NumericalError", "PhaseState", "QuarticAnsatz", "QuarticFlowError", "Section", "SystemParams",
    "Trajectory", "ValidationError", "admissible_p", "bracket_operator", "build_base", "build_general",
    "build_shifted", "certify", "check_grid", "compute_pole_functions", "criterion_residual", "f_jet",
    "fd_oracle", "find_integrals", "gaussian_curvature", "goryachev_reference", "integrate",
    "kov_chart_system", "kovalevskaya_reference", "match_kovalevskaya", "poincare", "reconstruct",
    "solve_u", "trivial_integrals", "verify_metric_identity",
]
