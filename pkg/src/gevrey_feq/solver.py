"""Neumann-series solution of ``Phi - T(Phi) = u`` plus regularity diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import chebcore
from .chebcore import ChebRep, combine, sup_norm_interval
from .errors import ContractionError, ConvergenceError, TooFewCoefficientsError
from .feqop import OperatorSpec, apply_operator, contraction_real, operator_sum
from .funexpr import Expr, evaluate

CONTRACTION_MARGIN = 1e-9
DECAY_FLOOR = 1e-13
DECAY_MIN_COEFFS = 16
DECAY_WINDOW_START = 8
BETA_GRID = np.round(np.arange(1, 31) * 0.05, 2)


class GevreyDiagnosticWarning(UserWarning):
    pass


@dataclass
class DecayFit:
    """Least-squares fit ``log|c_j| ~ log C - c * j**beta``."""

    beta: float
    c: float
    C: float
    fit_range: tuple[int, int]
    residual_of_fit: float
    k_target: float | None = None
    beta_target: float | None = None
    warning: bool = False

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "c": self.c,
            "C": self.C,
            "fit_range": list(self.fit_range),
            "residual_of_fit": self.residual_of_fit,
            "k_target": self.k_target,
            "beta_target": self.beta_target,
            "warning": self.warning,
        }


@dataclass
class Solution:
    phi: ChebRep
    iterations: int
    residual: float
    apriori_bound: float
    aposteriori_bound: float
    rho_used: float
    decay: DecayFit | None
    truncation_budget: float
    converged: bool = True
    increments: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "degree": self.phi.degree,
            "iterations": self.iterations,
            "residual": self.residual,
            "apriori_bound": self.apriori_bound,
            "aposteriori_bound": self.aposteriori_bound,
            "rho_used": self.rho_used,
            "truncation_budget": self.truncation_budget,
            "converged": self.converged,
            "increments": list(self.increments),
            "decay": None if self.decay is None else self.decay.to_dict(),
            "coefficients": "coeffs.csv",
        }


def apriori_bound(rho: float, norm_u: float, m: int) -> float:
    """``norm_u * rho**(m+1) / (1 - rho)``: distance from the m-th partial sum
    ``sum_{n<=m} T^n u`` to the full series."""
    if not 0 <= rho < 1:
        raise ContractionError(f"need 0 <= rho < 1, got {rho!r}", rho=rho)
    return norm_u * rho ** (m + 1) / (1 - rho)


def _evaluator(f):
    if isinstance(f, ChebRep):
        return f
    if isinstance(f, Expr):
        return lambda x: np.broadcast_to(evaluate(f, x), np.shape(x))
    return f


def residual_grid(grid: int) -> np.ndarray:
    """First-kind Chebyshev points plus both endpoints, ascending."""
    j = np.arange(grid)
    inner = np.sin(np.pi * (2 * j + 1 - grid) / (2 * grid))
    return np.concatenate([[-1.0], inner, [1.0]])


def residual(op: OperatorSpec, phi: ChebRep, u, grid: int = 1001) -> float:
    """Max of ``|phi - sum a_n * phi(phi_n) - u|`` by direct term summation.

    ``u`` may be a :class:`ChebRep`, an expression or a vectorized callable.
    """
    if grid < 101:
        raise ValueError("residual grid must have at least 101 points")
    x = residual_grid(grid)
    u_eval = _evaluator(u)
    r = chebcore.eval_cheb(phi, x) - operator_sum(op, phi, x) - np.asarray(u_eval(x), dtype=np.float64)
    return float(np.max(np.abs(r)))


def neumann_iterates(op: OperatorSpec, u: ChebRep, count: int, start: ChebRep | None = None):
    """Yield ``Phi_0 = start (default u)`` and ``Phi_{m+1} = u + T(Phi_m)``."""
    phi = u if start is None else start
    yield phi
    for _ in range(count):
        phi = combine(1.0, u, 1.0, apply_operator(op, phi))
        yield phi


def neumann_partial_sums(op: OperatorSpec, u: ChebRep, count: int):
    """Yield ``S_m = sum_{n<=m} T^n(u)`` by accumulating the series terms."""
    term = u
    total = u
    yield total
    for _ in range(count):
        term = apply_operator(op, term)
        total = combine(1.0, total, 1.0, term)
        yield total


def solve_neumann(op: OperatorSpec, u: ChebRep, tol: float = 1e-11, max_iter: int = 200,
                  *, start: ChebRep | None = None, k_target: float | None = None,
                  rhs=None, residual_points: int = 1001) -> Solution:
    """Fixed-point iteration ``Phi_{m+1} = u + T(Phi_m)``.

    Stops once ``rho/(1-rho) * ||Phi_{m+1} - Phi_m|| <= tol`` with
    ``rho = contraction_real(op)``.  ``rhs`` (default ``u``) is what the
    residual is measured against; pass the source expression to keep the
    check independent of the interpolant of ``u``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    rho = contraction_real(op)
    if rho >= 1.0 - CONTRACTION_MARGIN:
        raise ContractionError(f"operator is not a contraction: rho = {rho!r}", rho=rho)

    factor = rho / (1.0 - rho)
    phi = u if start is None else start
    increments = []
    converged = False
    m = 0
    while m < max_iter:
        nxt = combine(1.0, u, 1.0, apply_operator(op, phi))
        inc = sup_norm_interval(combine(1.0, nxt, -1.0, phi))
        increments.append(inc)
        phi = nxt
        m += 1
        if factor * inc <= tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no convergence after {max_iter} iterations (last increment {increments[-1]:.3e})",
            iterations=m, increment=increments[-1],
        )

    norm_phi = sup_norm_interval(phi)
    truncation = op.tail_bound * norm_phi / (1.0 - rho)
    res = residual(op, phi, u if rhs is None else rhs, residual_points)
    decay = None
    if k_target is not None:
        try:
            decay = fit_coeff_decay(phi, k_target)
        except TooFewCoefficientsError:
            decay = None
    return Solution(
        phi=phi,
        iterations=m,
        residual=res,
        apriori_bound=apriori_bound(rho, sup_norm_interval(u), m),
        aposteriori_bound=factor * increments[-1] + truncation,
        rho_used=rho,
        decay=decay,
        truncation_budget=truncation,
        converged=converged,
        increments=increments,
    )


def fit_coeff_decay(rep: ChebRep, k_target: float | None = None,
                    floor: float = DECAY_FLOOR) -> DecayFit:
    """Fit ``|c_j| ~ C exp(-c j**beta)`` over coefficients above ``floor``.

    ``beta`` is grid-searched over 0.05..1.50; ``c`` and ``log C`` come from a
    linear least-squares fit for each candidate.  Indices start at 8 and stop
    at the last coefficient above ``floor * max|c|``; coefficients below the
    floor inside the window (e.g. the zeros of an odd function) are skipped.
    Against ``k_target`` the expected exponent is ``k/(k+1)``; falling short
    by more than 0.1 only raises a :class:`GevreyDiagnosticWarning`.
    """
    c = np.abs(np.asarray(rep.coeffs, dtype=np.float64))
    scale = float(np.max(c)) if c.size else 0.0
    above = np.nonzero(c > floor * scale)[0] if scale > 0 else np.array([], dtype=int)
    if above.size < DECAY_MIN_COEFFS:
        raise TooFewCoefficientsError(
            f"need {DECAY_MIN_COEFFS} coefficients above the {floor:g} floor, found {above.size}"
        )
    last = int(above[-1])
    j = above[above >= DECAY_WINDOW_START].astype(np.float64)
    if j.size < 3:
        raise TooFewCoefficientsError("fewer than 3 coefficients in the fit window")
    y = np.log(c[j.astype(int)])

    best = None
    for beta in BETA_GRID:
        design = np.column_stack([np.ones_like(j), -(j**beta)])
        sol, *_ = np.linalg.lstsq(design, y, rcond=None)
        err = float(np.sqrt(np.mean((design @ sol - y) ** 2)))
        if best is None or err < best[0]:
            best = (err, float(beta), float(sol[1]), float(sol[0]))
    err, beta, rate, logC = best

    fit = DecayFit(beta=beta, c=rate, C=math.exp(logC), fit_range=(DECAY_WINDOW_START, last),
                   residual_of_fit=err)
    if k_target is not None:
        fit.k_target = float(k_target)
        fit.beta_target = k_target / (k_target + 1.0)
        if beta < fit.beta_target - 0.1:
            fit.warning = True
            warnings.warn(
                f"coefficient decay exponent {beta:.2f} is below {fit.beta_target:.2f} - 0.1",
                GevreyDiagnosticWarning, stacklevel=2,
            )
    return fit
