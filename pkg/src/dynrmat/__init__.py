"""Classical dynamical r-matrices, Lagrangian subalgebras of the double, and Dirac structures."""

from .rootsys import CartanType, SimpleLieAlgebra, UnsupportedType, build_algebra, killing_form, normalized_basis, pairing
from .multivec import MultiVector, cybe_rhs, schouten, sharp, wedge
from .dynr import RMatrixFamily, cdybe_residual, classify_from_samples, eval_r
from .lagrangian import DSubspace, build_l, extend_from_point, w_of_lambda
from .courant import charpair_dirac_check, dirac_closure_check, mc_residual

__all__ = [
    "CartanType", "SimpleLieAlgebra", "UnsupportedType", "build_algebra", "killing_form",
    "normalized_basis", "pairing", "MultiVector", "cybe_rhs", "schouten", "sharp", "wedge",
    "RMatrixFamily", "cdybe_residual", "classify_from_samples", "eval_r", "DSubspace", "build_l",
    "extend_from_point", "w_of_lambda", "charpair_dirac_check", "dirac_closure_check", "mc_residual",
]
