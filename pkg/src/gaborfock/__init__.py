"""Gaussian Gabor systems through the Bargmann-Fock picture."""

from .bargmann import (
    GaborAtom,
    HermiteExpansion,
    atom_inner,
    bargmann_atom,
    bargmann_pointwise,
    bargmann_transform,
    hermite_functions,
)
from .dual import (
    BiorthogonalElement,
    GeneratingFunction,
    GeneratorSpec,
    biorth_element,
    coefficient,
    generating_function,
    gram_matrix,
    min_singular_value,
    upper_density,
)
from .errors import *  # noqa: F401,F403
from .fock import (
    FockFunction,
    FockPoint,
    PhasePoint,
    PointSet,
    fock_inner_quadrature,
    fock_inner_taylor,
    fock_norm,
    fock_to_phase,
    phase_to_fock,
)
from .series import (
    FormalSeries,
    VerificationReport,
    assemble_series,
    finite_section_reconstruct,
    verify_coeff_bound,
    verify_interchange,
    verify_sampling_sum,
    verify_w_sigma_norm,
)
from .sigma import SigmaEvaluator, growth_ratio, sigma_prime_lattice

__version__ = "0.1.0"
