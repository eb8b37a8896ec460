"""Stadium neighbourhoods of [-1, 1] and sampled hypothesis checks.

A stadium of radius ``r`` is ``{z : dist(z, [-1, 1]) < r}``.  The shrinking
family uses ``r = A * n**(-1/k)``.  Every check here samples boundaries and
grids; none of it is an interval-arithmetic proof, and the certificates say so.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidMapError
from .funexpr import Expr, evaluate, taylor_coefficients, to_text

CERTIFICATE_KIND = "numerical certificate (sampled, non-rigorous)"
REAL_CHECK_POINTS = 1001
REAL_SUP_POINTS = 2001
RANGE_GUARD = 1e-12


def dist_to_interval(z):
    """Distance from ``z`` (scalar or array) to the segment [-1, 1]."""
    z = np.asarray(z, dtype=np.complex128)
    x = np.abs(z.real)
    y = np.abs(z.imag)
    d = np.where(x <= 1.0, y, np.hypot(x - 1.0, y))
    return float(d) if d.ndim == 0 else d


def strip_radius(k: float, A: float, n: int) -> float:
    if k <= 0 or A <= 0 or n < 1:
        raise ValueError("need k > 0, A > 0 and n >= 1")
    return A * n ** (-1.0 / k)


@dataclass(frozen=True)
class StripDomain:
    k: float
    A: float
    n: int

    @property
    def radius(self) -> float:
        return strip_radius(self.k, self.A, self.n)

    def contains(self, z):
        return dist_to_interval(z) < self.radius


def sample_strip_boundary(domain, m: int) -> np.ndarray:
    """``m`` points equally spaced in arclength on the stadium boundary.

    ``domain`` is a :class:`StripDomain` or a bare radius.  The walk starts at
    ``1 + r`` and runs counterclockwise, so for ``m`` divisible by 4 the
    samples include ``1 + r``, ``i r``, ``-(1 + r)`` and ``-i r``.
    """
    if m < 8:
        raise ValueError("need at least 8 boundary samples")
    r = domain.radius if isinstance(domain, StripDomain) else float(domain)
    if r <= 0:
        raise ValueError("radius must be positive")
    quarter = 0.5 * math.pi * r
    half = math.pi * r
    total = 4.0 + 2.0 * math.pi * r
    s = np.arange(m) * (total / m)
    z = np.empty(m, dtype=np.complex128)

    # right cap, upper quarter
    sel = s < quarter
    z[sel] = 1.0 + r * np.exp(1j * s[sel] / r)
    # top edge, right to left
    b1 = quarter + 2.0
    sel = (s >= quarter) & (s < b1)
    z[sel] = (1.0 - (s[sel] - quarter)) + 1j * r
    # left cap
    b2 = b1 + half
    sel = (s >= b1) & (s < b2)
    z[sel] = -1.0 + r * np.exp(1j * (0.5 * math.pi + (s[sel] - b1) / r))
    # bottom edge, left to right
    b3 = b2 + 2.0
    sel = (s >= b2) & (s < b3)
    z[sel] = (-1.0 + (s[sel] - b2)) - 1j * r
    # right cap, lower quarter
    sel = s >= b3
    z[sel] = 1.0 + r * np.exp(1j * (1.5 * math.pi + (s[sel] - b3) / r))
    return z


def _anchors(r):
    """The four junctions of the stadium's caps and edges."""
    return np.array([1 + 1j * r, -1 + 1j * r, -1 - 1j * r, 1 - 1j * r])


def strip_sup_norm(f: Expr, r: float, m: int = 2000) -> float:
    """Sampled max of ``|f|`` over the stadium of radius ``r``.

    Relies on the maximum-modulus principle, so only the boundary is sampled;
    the result is a lower estimate of the true sup.
    """
    if m < 64:
        raise ValueError("need at least 64 boundary samples")
    z = np.concatenate([sample_strip_boundary(r, m), _anchors(r)])
    return float(np.max(np.abs(evaluate(f, z))))


def check_real_range(maps, points: int = REAL_CHECK_POINTS) -> None:
    """Raise :class:`InvalidMapError` unless every map sends [-1, 1] into itself."""
    x = np.linspace(-1.0, 1.0, points)
    for p, phi in enumerate(maps):
        vals = np.asarray(evaluate(phi, x), dtype=np.float64)
        bad = ~(np.abs(vals) <= 1.0 + RANGE_GUARD)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise InvalidMapError(
                f"map {p} ({to_text(phi)}) sends x={x[j]!r} to {vals[j]!r}, outside [-1, 1]",
                index=p, witness=float(x[j]),
            )


@dataclass
class EkCertificate:
    k: float
    A: float
    n_range: tuple[int, int]
    M_A: int | None
    max_ratio: float
    samples_per_boundary: int
    ratios: list[float] = field(default_factory=list)
    violations: list[tuple] = field(default_factory=list)
    kind: str = CERTIFICATE_KIND

    @property
    def passed(self) -> bool:
        return not self.violations and self.max_ratio < 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        d["violations"] = [list(v) for v in self.violations]
        d["pass"] = self.passed
        return d


def check_Ek(maps, k: float, A: float, n_lo: int = 1, n_hi: int = 50, m: int = 2000,
             max_witnesses: int = 64) -> EkCertificate:
    """Sampled check of ``phi_p(strip(n+1)) subset strip(n)`` for ``n_lo <= n <= n_hi``.

    ``ratios[i]`` is the worst ``dist(phi_p(z)) / strip_radius(k, A, n)`` over
    all maps for ``n = n_lo + i``.  Violation witnesses are
    ``(p, n, re z, im z, observed distance, required radius)``, in ``(p, n,
    sample)`` order, capped at ``max_witnesses``.
    """
    if A <= 0:
        raise ValueError("A must be positive")
    if n_lo < 1 or n_hi < n_lo:
        raise ValueError("need 1 <= n_lo <= n_hi")
    maps = list(maps)
    check_real_range(maps)

    n_values = range(n_lo, n_hi + 1)
    r_out = np.array([strip_radius(k, A, n) for n in n_values])
    z = np.stack([
        np.concatenate([sample_strip_boundary(strip_radius(k, A, n + 1), m),
                        _anchors(strip_radius(k, A, n + 1))])
        for n in n_values
    ])
    ratios = np.zeros(len(n_values))
    failing = np.zeros(len(n_values), dtype=bool)
    violations = []
    for p, phi in enumerate(maps):
        d = dist_to_interval(evaluate(phi, z.ravel())).reshape(z.shape)
        d = np.where(np.isfinite(d), d, np.inf)
        ratios = np.maximum(ratios, np.max(d, axis=1) / r_out)
        bad = ~(d < r_out[:, None])
        failing |= bad.any(axis=1)
        for i, j in np.argwhere(bad)[: max(0, max_witnesses - len(violations))]:
            violations.append((p, n_values[i], float(z[i, j].real), float(z[i, j].imag),
                               float(d[i, j]), float(r_out[i])))

    M_A = None
    for i in range(len(n_values) - 1, -1, -1):
        if failing[i]:
            break
        M_A = n_values[i]
    return EkCertificate(
        k=float(k), A=float(A), n_range=(n_lo, n_hi), M_A=M_A,
        max_ratio=float(np.max(ratios)) if maps else 0.0,
        samples_per_boundary=m, ratios=[float(v) for v in ratios],
        violations=violations,
    )


def nesting_ratio_bound(A: float, n: int) -> float:
    """Analytic ceiling ``n / (n + 1 - A)`` on the k=1 nesting ratio when lambda <= 1."""
    return n / (n + 1 - A)


@dataclass
class LambdaReport:
    n_max: int
    values: list[float]
    lambda_hat: float
    argmax: int
    sup_possibly_not_attained: bool

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_lambda(psi: Expr, n_max: int = 25, points: int = REAL_SUP_POINTS) -> LambdaReport:
    """Truncated ``sup_{1<=n<=n_max} (||psi^(n)||_[-1,1] / n!)^(1/n)``.

    The normalized derivatives come from Taylor-mode propagation on a uniform
    grid that contains both endpoints.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    x = np.linspace(-1.0, 1.0, points)
    jets = taylor_coefficients(psi, x, n_max)
    norms = np.max(np.abs(jets[1:]), axis=1)
    values = [float(norms[i] ** (1.0 / (i + 1))) for i in range(n_max)]
    best = int(np.argmax(values))
    return LambdaReport(
        n_max=n_max, values=values, lambda_hat=values[best], argmax=best + 1,
        sup_possibly_not_attained=(best + 1 == n_max),
    )
