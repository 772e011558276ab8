"""Index of immersions R^n -> R^2n fixed at infinity, by intersection signs and by integration."""

from .errors import (BudgetWarning, CompletenessWarning, DegenerateDeterminant, DimensionMismatch,
                     ImmIdxError, NonTransversal, OddDimension, PreimageMismatch, RankDeficient,
                     RoundingAmbiguous, SpecError, TooLarge)
from .immersion import (Immersion, bump_loop_curve, concat, lift, one_loop_curve, perturb,
                        reflect, trivial_immersion, validate_derivatives)
from .intersections import (IntersectionRecord, SolverConfig, find_self_intersections,
                            index_by_signs, sign_of_intersection)
from .laplace import LaplaceReport, laplace_decomposition, laplace_J
from .linalg import StiefelPoint, gram, minor, mu
from .profiles import BumpFunction, Plateau, SignPlateau
from .quadrature import (IndexReport, QuadratureConfig, index_by_integral, index_whitney_1d,
                         integrate_adaptive)
from .stiefel_form import closedness_check, integrand_direct, integrand_pullback, omega_eval

__version__ = "0.1.0"
