"""The composition operator ``T(f) = sum_n a_n * (f o phi_n)`` and its certificates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import chebcore
from .chebcore import ChebRep
from .errors import InvalidMapError
from .funexpr import Expr, check_denominators, evaluate, to_text
from .stripgeo import (
    CERTIFICATE_KIND, RANGE_GUARD, REAL_SUP_POINTS, EkCertificate, check_Ek,
    check_real_range, sample_strip_boundary, strip_sup_norm,
)

DEFAULT_A_GRID = (0.1, 0.2, 0.4)
DEFAULT_N_RANGE = (1, 50)
DEFAULT_BOUNDARY_SAMPLES = 2000
APPLY_MIN_DEGREE = 64


@dataclass(frozen=True)
class TermSpec:
    """One summand ``a(x) * f(phi(x))``; ``a`` and ``phi`` are claimed
    holomorphic on the stadium of radius ``sigma``."""

    a: Expr
    phi: Expr
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def validate_term(term: TermSpec, index: int = 0) -> None:
    """Range check of ``phi`` on [-1, 1] and sampled evaluability on the stadium."""
    try:
        check_real_range([term.phi])
    except InvalidMapError as exc:
        raise InvalidMapError(
            f"term {index}: map {to_text(term.phi)} sends x={exc.witness!r} outside [-1, 1]",
            index=index, witness=exc.witness,
        ) from None
    z = _stadium_samples(term.sigma)
    check_denominators(term.a, z)
    check_denominators(term.phi, z)


def _stadium_samples(sigma):
    # closed stadium: real axis, three inner levels and the boundary
    parts = [np.linspace(-1.0, 1.0, 401).astype(np.complex128)]
    for frac in (0.25, 0.5, 0.75, 1.0):
        parts.append(sample_strip_boundary(frac * sigma, 256))
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A truncated term family plus closed-form tail bounds.

    ``tail_bound`` bounds the omitted ``sum ||a_n||`` over [-1, 1];
    ``strip_tail_bound`` bounds it over each term's stadium and defaults to
    ``tail_bound`` (exact for constant coefficients).
    """

    terms: tuple[TermSpec, ...]
    tail_bound: float = 0.0
    k: float = 1.0
    strip_tail_bound: float | None = None
    name: str | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.tail_bound < 0:
            raise ValueError("tail_bound must be >= 0")
        if self.strip_tail_bound is None:
            object.__setattr__(self, "strip_tail_bound", float(self.tail_bound))
        if self.k <= 0:
            raise ValueError("k must be positive")

    @property
    def sigma_min(self) -> float | None:
        return min((t.sigma for t in self.terms), default=None)

    def term_values(self, x: np.ndarray):
        """``(a_n(x), phi_n(x))`` stacked over terms; ``phi`` is range-guarded."""
        key = x.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if not self.terms:
            out = (np.zeros((0, x.size)), np.zeros((0, x.size)))
        else:
            a = np.stack([np.broadcast_to(evaluate(t.a, x), x.shape) for t in self.terms])
            phi = np.stack([np.broadcast_to(evaluate(t.phi, x), x.shape) for t in self.terms])
            a = np.asarray(a, dtype=np.float64)
            phi = np.asarray(phi, dtype=np.float64)
            over = np.abs(phi) > 1.0
            if np.any(np.abs(phi) > 1.0 + RANGE_GUARD):
                p, j = np.argwhere(np.abs(phi) > 1.0 + RANGE_GUARD)[0]
                raise InvalidMapError(
                    f"term {p}: inner map value {phi[p, j]!r} at x={x[j]!r} leaves [-1, 1]",
                    index=int(p), witness=float(x[j]),
                )
            phi = np.where(over, np.clip(phi, -1.0, 1.0), phi)
            out = (a, phi)
        if len(self._cache) < 64:
            self._cache[key] = out
        return out


def build_operator(family, tail_bound: float = 0.0, k: float = 1.0, *,
                   strip_tail_bound: float | None = None, name: str | None = None) -> OperatorSpec:
    """Validate a term family and wrap it as an :class:`OperatorSpec`.

    ``family`` is a list of :class:`TermSpec` or a ``(name, count)`` pair
    naming one of the shipped families (whose tail bounds then override the
    arguments).  Contraction is not checked here.
    """
    if isinstance(family, tuple) and len(family) == 2 and isinstance(family[0], str):
        from .papersuite import family_operator

        fname, count = family
        return family_operator(fname, count, k=k)
    terms = tuple(family)
    for i, term in enumerate(terms):
        validate_term(term, i)
    return OperatorSpec(terms, float(tail_bound), float(k), strip_tail_bound, name)


def contraction_real(op: OperatorSpec, points: int = REAL_SUP_POINTS) -> float:
    """``sum_n ||a_n||`` over a uniform grid on [-1, 1], plus the tail bound."""
    x = np.linspace(-1.0, 1.0, points)
    total = 0.0
    for t in op.terms:
        total += float(np.max(np.abs(np.broadcast_to(evaluate(t.a, x), x.shape))))
    return total + op.tail_bound


def contraction_strip(op: OperatorSpec, m: int = DEFAULT_BOUNDARY_SAMPLES) -> float:
    """``sum_n ||a_n||`` over each term's stadium (boundary-sampled), plus tail."""
    total = 0.0
    for t in op.terms:
        total += strip_sup_norm(t.a, t.sigma, m)
    return total + op.strip_tail_bound


def operator_sum(op: OperatorSpec, f, x: np.ndarray) -> np.ndarray:
    """``sum_n a_n(x) * f(phi_n(x))`` summed in ascending ``n``."""
    a, phi = op.term_values(x)
    total = np.zeros(x.shape)
    for n in range(a.shape[0]):
        total = total + a[n] * f(phi[n])
    return total


def apply_operator(op: OperatorSpec, f: ChebRep,
                   max_degree: int = chebcore.DEFAULT_MAX_DEGREE) -> ChebRep:
    """Chebyshev interpolant of ``T(f)``, starting at degree ``max(2 deg f, 64)``."""
    start = max(2 * f.degree, APPLY_MIN_DEGREE)
    return chebcore.interpolate(
        lambda x: operator_sum(op, f, x), tol=f.tol, max_degree=max_degree,
        min_degree=min(start, max_degree),
    )


@dataclass
class AkCertificate:
    k: float
    A_grid: list[float]
    rho_real: float
    rho_strip: float
    sigma_min: float | None
    ek: list[EkCertificate]
    N_A: dict
    tau_candidate: float | None
    notes: list[str] = field(default_factory=list)
    kind: str = CERTIFICATE_KIND

    @property
    def rho(self) -> float:
        return self.rho_strip

    @property
    def passed(self) -> bool:
        return self.rho_strip < 1.0 and all(c.passed for c in self.ek)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "A_grid": list(self.A_grid),
            "rho": self.rho,
            "rho_real": self.rho_real,
            "rho_strip": self.rho_strip,
            "sigma_min": self.sigma_min,
            "N_A": {repr(a): n for a, n in self.N_A.items()},
            "tau_candidate": self.tau_candidate,
            "ek": [c.to_dict() for c in self.ek],
            "notes": list(self.notes),
            "pass": self.passed,
        }


def certify_Ak(op: OperatorSpec, A_grid=DEFAULT_A_GRID, n_lo: int = DEFAULT_N_RANGE[0],
               n_hi: int = DEFAULT_N_RANGE[1], m: int = DEFAULT_BOUNDARY_SAMPLES) -> AkCertificate:
    """Sampled check of the contraction and strip-nesting hypotheses.

    ``N_A`` is the observed first index from which nesting held for every map;
    ``tau_candidate`` is the largest tested ``A`` that passed.
    """
    A_grid = [float(A) for A in A_grid]
    if any(A <= 0 for A in A_grid):
        raise ValueError("A_grid entries must be positive")
    notes = []
    sigma = op.sigma_min
    if sigma is not None and any(A > sigma for A in A_grid):
        raise ValueError(f"A_grid must lie within the smallest term sigma {sigma!r}")
    maps = [t.phi for t in op.terms]
    rho_real = contraction_real(op)
    rho_strip = contraction_strip(op, max(m, 64))
    if rho_strip >= 1.0:
        notes.append(f"contraction violation: rho_strip = {rho_strip!r} >= 1")
    ek = [check_Ek(maps, op.k, A, n_lo, n_hi, m) for A in A_grid]
    for cert in ek:
        if not cert.passed:
            notes.append(f"strip nesting failed for A = {cert.A!r}")
    passed_A = [c.A for c in ek if c.passed]
    return AkCertificate(
        k=op.k, A_grid=A_grid, rho_real=rho_real, rho_strip=rho_strip,
        sigma_min=sigma, ek=ek, N_A={c.A: c.M_A for c in ek},
        tau_candidate=max(passed_A) if passed_A else None, notes=notes,
    )
