"""tau-convolution calculus on semidirect products of finite groups."""
from .algebra import (
    GFunction,
    KFunction,
    PhiDensity,
    agree,
    associator_tau,
    conv_K,
    in_J1,
    involution_K,
    involution_tau,
    k_point_mass,
    k_zero,
    lconv,
    lift_phi,
    norm,
    point_mass,
    psi_phi_embed,
    random_gfunction,
    random_kfunction,
    rconv,
    section,
    standard_conv_G,
    tconv,
    tilde,
    zero,
)
from .groups import (
    FiniteGroup,
    SemidirectGroup,
    builtin_group,
    conjugation_action,
    cyclic,
    dihedral,
    inversion_action,
    sd_inv,
    sd_mul,
    semidirect,
    symmetric,
    trivial_action,
    validate_action,
    validate_group,
)

from .lp_module import LpElement, module_action
from .spectral import NotCyclicError, dft, idft, lconv_fft, rconv_fft, tconv_fft
from .verify import CHECKS, find_witness, run_check, run_suite

__version__ = "0.1.0"
