"""Multiple scattering of obliquely incident E-polarised plane waves by an
infinite grating of dielectric circular rods.

Modules
-------
special     Bessel/Hankel kernels, Bernoulli numbers and polynomials, zeta sums.
model       Grating and wave parameters, derived wavenumbers, rod coefficients.
lattice     Schlömilch lattice sums (direct, elementary, small-spacing forms).
exact       Truncated exact coefficient system (dense solve, Neumann iteration).
asymptotic  Small-spacing system for the wavelength-independent coefficients.
fields      Incident and exterior longitudinal fields.
cli         Command-line front end (``python3 -m cylgrating``).
"""

from .errors import (
    ConfigError,
    DomainError,
    EvanescentInterior,
    GratingError,
    IllConditioned,
    InteriorPoint,
    InvalidParameters,
    NoConvergence,
    PreconditionViolated,
    SingularDenominator,
    TruncationNotConverged,
    WoodAnomaly,
)
from .model import DerivedQuantities, GratingParams, IncidentWave, derive
from .lattice import SchlomilchTable, direct_sum, elementary, schlomilch_table
from .exact import CoefficientSet, assemble, solve_direct, solve_exact, solve_neumann
from .asymptotic import AsymptoticSet, reconstruct, solve_asymptotic

__version__ = "0.1.0"
