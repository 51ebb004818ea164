"""Small eigenvalues of Zig-Zag generators on the torus: predictors, solvers, simulation."""
from .asymptotics import (
    EKPrediction,
    gamma_leading,
    predict_table,
    refreshed_prefactor,
    unrefreshed_prefactor,
    witten_prefactor,
)
from .errors import *  # noqa: F401,F403
from .landscape import FICTIVE_SADDLE, H2Report, LabeledMinimum, Landscape, brute_force_labels, check_h2, label_minima
from .operators import CollocationGrid, OperatorBundle, assemble_p, assemble_q, assemble_t, dump_matrix
from .pdmp import HittingStats, PdmpState, PointTarget, hitting_time_tau, simulate_until
from .potential import (
    CANONICAL_V,
    AssumptionReport,
    CriticalPoint,
    TorusPotential,
    check_assumptions,
    eval_derivatives,
    find_critical_points,
)
from .spectra import (
    GrushinReduction,
    SpectrumReport,
    WittenLowModes,
    direct_small_spectrum,
    grushin_eigenvalues,
    pencil_residual,
    semigroup_decay,
    witten_low_modes,
)

__version__ = "0.1.0"
