"""Systolic quantities of star-shaped energy surfaces ``{H = 1}`` in R^{2n}.

Modules
-------
hamcore     degree-2-homogeneous Hamiltonians and their exact Poisson algebra
flow        Hamiltonian flows, monodromy and actions
orbits      closed characteristics and systole estimates
geometry    contact volume, systolic ratio, radial comparison
normalform  resonant normal form and jet-prescribed deformations
cli         batch front end
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    ConventionMismatchError,
    DegreeCapError,
    DomainError,
    HypothesisViolatedError,
    InputError,
    IntegrationError,
    StarShapednessError,
    SystolicError,
    TRangeError,
    UnsupportedRepresentationError,
)
from .flow import FlowSegment, action_integral, integrate, reference_flow_hst
from .geometry import (
    ComparisonCertificate,
    ContactSurface,
    SurfaceMetrics,
    commutation_defect,
    contact_volume,
    normalize_volume,
    prop1_compare,
    resolve_convention,
    systolic_ratio,
)
from .hamcore import (
    DeformationSeries,
    PolyOverH,
    Quadratic,
    Radial,
    ellipsoid_hamiltonian,
    evaluate,
    gradient,
    hamiltonian_vector_field,
    hst,
    poisson_bracket,
    radial_profile,
)
from .normalform import (
    ResonantSeries,
    SymplecticJet,
    build_theorem_deformation,
    normal_form,
    s1_average,
    solve_homological,
)
from .orbits import ClosedOrbit, SystoleEstimate, find_closed_orbits, systole

__all__ = [name for name in dir() if not name.startswith("_")]
