"""Chebyshev series on [-1, 1]: adaptive interpolation, Clenshaw evaluation,
differentiation, linear combination and sup norms.

Samples live on Chebyshev points of the second kind ``cos(pi*j/N)``, so the
endpoints are always sampled.  Coefficients come from a type-I DCT.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import dct

from .errors import ChebDomainError, ResolutionError

DEFAULT_TOL = 1e-14
DEFAULT_MAX_DEGREE = 2**15
MIN_DEGREE = 16


@dataclass(frozen=True)
class ChebRep:
    """A truncated Chebyshev-T series ``sum_k coeffs[k] * T_k(x)``."""

    coeffs: np.ndarray
    tol: float = DEFAULT_TOL
    _abs_sum: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64).ravel()
        if c.size == 0:
            c = np.zeros(1)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "_abs_sum", float(np.sum(np.abs(c))))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return eval_cheb(self, x)

    def __eq__(self, other):
        if not isinstance(other, ChebRep):
            return NotImplemented
        return self.tol == other.tol and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


def cheb_points(n: int) -> np.ndarray:
    """The ``n + 1`` Chebyshev points of the second kind, from 1 down to -1."""
    if n == 0:
        return np.zeros(1)
    # sin form is exactly antisymmetric about the midpoint
    j = np.arange(n + 1)
    return np.sin(np.pi * (n - 2 * j) / (2 * n))


def vals_to_coeffs(values) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through ``values`` sampled at
    :func:`cheb_points`."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size - 1
    if n == 0:
        return values.copy()
    c = dct(values, type=1) / n
    c[0] /= 2
    c[-1] /= 2
    return c


def chop(coeffs, tol: float = DEFAULT_TOL) -> ChebRep:
    """Drop the longest trailing block with ``|c_k| <= tol * max|c|``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    c = np.asarray(coeffs, dtype=np.float64).ravel()
    if c.size == 0:
        return ChebRep(np.zeros(1), tol)
    scale = np.max(np.abs(c))
    if scale == 0:
        return ChebRep(np.zeros(1), tol)
    above = np.nonzero(np.abs(c) > tol * scale)[0]
    return ChebRep(c[: above[-1] + 1], tol)


def _resolved(c, vscale, tol):
    tail = max(2, c.size // 8)
    return np.max(np.abs(c[-tail:])) <= tol * vscale


def interpolate(f, tol: float = DEFAULT_TOL, max_degree: int = DEFAULT_MAX_DEGREE,
                min_degree: int = MIN_DEGREE) -> ChebRep:
    """Adaptive Chebyshev interpolant of a vectorized callable on [-1, 1].

    The degree doubles from ``min_degree`` until the trailing eighth of the
    coefficients falls below ``tol`` times the largest sampled magnitude.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_degree < MIN_DEGREE or max_degree & (max_degree - 1):
        raise ValueError(f"max_degree must be a power of two >= {MIN_DEGREE}")
    n = MIN_DEGREE
    while n < min_degree:
        n *= 2
    n = min(n, max_degree)
    while True:
        values = np.asarray(f(cheb_points(n)), dtype=np.float64)
        if values.shape != (n + 1,):
            values = np.broadcast_to(values, (n + 1,)).copy()
        if not np.all(np.isfinite(values)):
            raise ResolutionError("function returned non-finite samples")
        vscale = float(np.max(np.abs(values)))
        c = vals_to_coeffs(values)
        if vscale == 0:
            return ChebRep(np.zeros(1), tol)
        if _resolved(c, vscale, tol):
            return chop(c, tol)
        if n >= max_degree:
            raise ResolutionError(
                f"not resolved to tol {tol:g} at degree {n}", envelope=_envelope(c)
            )
        n *= 2


def _envelope(c):
    # running max from the right: the monotone coefficient envelope
    return np.maximum.accumulate(np.abs(c)[::-1])[::-1]


def eval_cheb(rep: ChebRep, x):
    """Clenshaw evaluation; ``x`` must lie in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1):
        bad = x[np.abs(x) > 1].flat[0] if x.ndim else float(x)
        raise ChebDomainError(f"evaluation point {bad!r} outside [-1, 1]")
    c = rep.coeffs
    if c.size == 1:
        return c[0] + 0.0 * x
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    two_x = 2.0 * x
    for ck in c[:0:-1]:
        b1, b2 = two_x * b1 - b2 + ck, b1
    return x * b1 - b2 + c[0]


def differentiate_cheb(rep: ChebRep) -> ChebRep:
    c = rep.coeffs
    n = c.size - 1
    if n == 0:
        return ChebRep(np.zeros(1), rep.tol)
    d = np.zeros(n + 2)
    for k in range(n, 0, -1):
        d[k - 1] = d[k + 1] + 2 * k * c[k]
    d[0] /= 2
    return ChebRep(d[:n], rep.tol)


def combine(alpha: float, f: ChebRep, beta: float, g: ChebRep) -> ChebRep:
    """``alpha*f + beta*g``, chopped at the looser of the two tolerances."""
    n = max(f.coeffs.size, g.coeffs.size)
    out = np.zeros(n)
    out[: f.coeffs.size] += alpha * f.coeffs
    out[: g.coeffs.size] += beta * g.coeffs
    return chop(out, max(f.tol, g.tol))


def coeff_abs_sum(rep: ChebRep) -> float:
    """``sum |c_k|``, a rigorous upper bound on the sup norm over [-1, 1]."""
    return rep._abs_sum


def sup_norm_interval(rep: ChebRep) -> float:
    """Max of ``|rep|`` on a ``10*(N+1)``-point Chebyshev grid (endpoints included).

    The grid value is capped by ``sum |c_k|``, which bounds the true sup.
    """
    grid = cheb_points(max(10 * rep.coeffs.size - 1, 1))
    vals = np.abs(eval_cheb(rep, grid))
    return float(min(np.max(vals), rep._abs_sum))


def from_values(values, tol: float = DEFAULT_TOL) -> ChebRep:
    return chop(vals_to_coeffs(values), tol)


def constant(value: float, tol: float = DEFAULT_TOL) -> ChebRep:
    return ChebRep(np.array([float(value)]), tol)


# ---------------------------------------------------------------- CSV export

def coeffs_to_csv(rep: ChebRep, hexfloat: bool = False) -> str:
    buf = io.StringIO()
    buf.write("index,coefficient\n")
    for k, c in enumerate(rep.coeffs):
        text = float(c).hex() if hexfloat else format(float(c), ".17g")
        buf.write(f"{k},{text}\n")
    return buf.getvalue()


def coeffs_from_csv(text: str) -> np.ndarray:
    """Parse ``index,coefficient`` lines (decimal or hex floats)."""
    rows = list(csv.reader(io.StringIO(text)))
    if rows and rows[0] and rows[0][0].strip() == "index":
        rows = rows[1:]
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    coeffs = np.zeros(len(rows))
    seen = set()
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 2:
            raise ValueError(f"line {lineno}: expected 'index,coefficient'")
        try:
            k = int(row[0])
            cell = row[1].strip()
            value = float.fromhex(cell) if "0x" in cell.lower() else float(cell)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if not 0 <= k < len(rows) or k in seen:
            raise ValueError(f"line {lineno}: bad or duplicate index {k}")
        seen.add(k)
        coeffs[k] = value
    return coeffs
