"""Chebyshev solver and sampled certificates for ``Phi(x) - sum a_n(x) Phi(phi_n(x)) = u(x)``."""

__version__ = "0.1.0"

from .chebcore import ChebRep, interpolate
from .feqop import OperatorSpec, TermSpec, build_operator, certify_Ak
from .funexpr import parse_expr
from .papersuite import paper_example
from .solver import Solution, fit_coeff_decay, solve_neumann

__all__ = [
    "ChebRep", "OperatorSpec", "Solution", "TermSpec", "build_operator", "certify_Ak",
    "fit_coeff_decay", "interpolate", "paper_example", "parse_expr", "solve_neumann",
]
