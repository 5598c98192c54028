"""Brown measures, Fuglede-Kadison determinants and subordination data of R-diagonal operators."""

from .brown import (
    DeterminantValue,
    RadialBrownMeasure,
    fk_det,
    fk_det_regularized,
    hermitian_reduction,
    hermitian_reduction_delta,
    log_potential,
    log_potential_consistency,
    negative_moment_first,
    radial_brown_measure,
    radial_cdf,
    radial_cdf_via_s_transform,
    radial_density,
    resolvent_traces,
    resolvent_traces_limit,
    shifted_modulus_bounds,
)
from .errors import RDiagError
from .measures import (
    LambdaBounds,
    MeasureRPlus,
    SymmetricMeasure,
    lambda_bounds,
    load_measure,
    make_atomic,
    make_density,
    make_empirical,
    marchenko_pastur,
    measure_from_spec,
    moment,
    pushforward_square,
    quarter_circle,
    symmetrize,
    tabulated,
    uniform,
)
from .subordination import INFINITE, NEG_INFINITE, KFunction, Regime, Unbounded, fixed_point_omega1, solve_s
from .transforms import h_eval, psi_eval, s_transform, s_transform_inverse

__version__ = "0.1.0"
