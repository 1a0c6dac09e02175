"""Numerical harness for degenerate divergence-form operators on grids."""
from .space import GridSpace, build_grid, ball, annulus, volume, doubling_report
from .media import make_field, make_cutoff, make_region, ellipticity_check
from .assemble import assemble_form_operator, shift_identity, discrete_gradient
from .spectral import eigendecompose, inv_sqrt_subordination, positive_semigroup
from .multiplier import make_multiplier, dyadic_partition, holder_norm, mihlin_sup

__version__ = "0.1.0"
