"""Detector-pair correlations and entanglement negativity outside a Schwarzschild black hole.

Static Unruh-DeWitt detectors with Gaussian switching couple to a massless
scalar field in the Boulware, Unruh or Hartle-Hawking state; this package
computes the leading-order joint density-matrix entries, their
commutator/anticommutator split, and the entanglement negativity, together
with the null-geodesic quantities (propagation times, wavefronts, caustics)
that organize the "entanglement lensing" phenomenology.

Geometric units G = c = 1 throughout; every length and time is in units of
the black-hole mass M (the kernels fix M = 1).
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ChecksumError,
    ConvergenceError,
    CoverageError,
    DomainError,
    EntlensError,
    IllConditionedError,
    NoSolutionError,
    SeriesTruncationError,
    TableFormatError,
    VersionError,
)
from .geometry import (  # noqa: F401
    GeodesicBranch,
    SpacetimeParams,
    axis_touch_time,
    lapse,
    null_propagation_time,
    null_propagation_times,
    propagation_time_curve,
    redshift_factor,
    tortoise,
    tortoise_inverse,
    wavefront,
)
from .modecache import GridSpec, ModeTable, build, load, save  # noqa: F401
from .radial import (  # noqa: F401
    ModeIndex,
    RadialSolution,
    ScatteringCoeffs,
    extract_coeffs,
    rescaled_mode,
    rw_potential,
    solve_in_jaffe,
    solve_in_ode,
    solve_up,
)
from .response import (  # noqa: F401
    ConvergenceControls,
    DetectorPairSpec,
    DetectorSpec,
    PairResponse,
    density_matrix,
    l_term,
    m_term,
    negativity,
    pair_response,
    width_for_proper,
    window_integral_full,
    window_integral_nested,
)
from .specfun import erf_complex, erfc_complex, erfi_complex, legendre_p, wofz  # noqa: F401
from .states import FieldState, bose_factor, kernel, kernel_blocks, kernel_split  # noqa: F401
from .sweeps import SweepResult, SweepSpec, run_sweep  # noqa: F401
