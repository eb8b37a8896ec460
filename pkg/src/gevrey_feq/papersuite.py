"""The four worked instances, with their free parameters pinned down.

=========  ====================  ============================  ==================
instance   coefficient a_n       inner map phi_n               tail over [-1, 1]
=========  ====================  ============================  ==================
1          1/2                   sin(x)                        0 (single term)
2          2^-(n+2)              sin(x/(n+1))                  2^-(N+2)
3          x^2/(2^(n+1)(x^2+1))  sin(sin(x - 1/n))             2^-(N+2)
4          cos((-1)^n x)/2^(n+1) sin^<n>(x/2^(n-1))            2^-(N+1)
=========  ====================  ============================  ==================

Every instance has right-hand side ``u = -x`` and ``k = 1``.  Families are
indexed from ``n = 1`` and truncated after ``N`` terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .feqop import OperatorSpec, TermSpec, build_operator
from .funexpr import Expr, parse_expr

DEFAULT_SIGMA = 0.5
DEFAULT_TRUNC = 30
RHS_TEXT = "-x"


@dataclass(frozen=True)
class Family:
    name: str
    a: str
    phi: str
    tail: object
    strip_tail: object
    note: str = ""


def _ex3_strip_tail(N, sigma):
    # |z^2/(z^2+1)| <= (1+sigma)/(1-sigma) on the stadium: |z| <= 1+sigma, Re(z^2+1) >= 1-sigma^2
    if sigma >= 1:
        return math.inf
    return 2.0 ** -(N + 1) * (1 + sigma) / (1 - sigma)


FAMILIES = {
    "example2": Family(
        "example2", "1/2^(n+2)", "sin(x/(n+1))",
        tail=lambda N: 2.0 ** -(N + 2),
        strip_tail=lambda N, sigma: 2.0 ** -(N + 2),
        note="g = sin, P_n(x) = x/(n+1), a_n = 2^-(n+2)",
    ),
    "example3": Family(
        "example3", "x^2/(2^(n+1)*(x^2+1))", "sin(sin(x - 1/n))",
        tail=lambda N: 2.0 ** -(N + 2),
        strip_tail=_ex3_strip_tail,
        note="alpha_n = 1/n",
    ),
    "example4": Family(
        "example4", "cos((-1)^n*x)/2^(n+1)", "iter_scaled(sin, n)",
        tail=lambda N: 2.0 ** -(N + 1),
        strip_tail=lambda N, sigma: 2.0 ** -(N + 1) * math.cosh(sigma),
        note="epsilon_n = (-1)^n",
    ),
}


def family_terms(name: str, count: int, sigma: float = DEFAULT_SIGMA) -> list[TermSpec]:
    fam = _family(name)
    if count < 1:
        raise ValueError("family count must be >= 1")
    return [
        TermSpec(parse_expr(fam.a, n=n), parse_expr(fam.phi, n=n), sigma)
        for n in range(1, count + 1)
    ]


def family_operator(name: str, count: int, k: float = 1.0,
                    sigma: float = DEFAULT_SIGMA) -> OperatorSpec:
    fam = _family(name)
    return build_operator(
        family_terms(name, count, sigma), fam.tail(count), k,
        strip_tail_bound=fam.strip_tail(count, sigma), name=name,
    )


def _family(name):
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; known: {sorted(FAMILIES)}") from None


@dataclass
class ProblemSpec:
    id: int
    op: OperatorSpec
    u: Expr
    k: float
    notes: str
    trunc_N: int | None = None
    sigma: float = DEFAULT_SIGMA
    rhs: str = RHS_TEXT


def paper_example(id: int, trunc_N: int = DEFAULT_TRUNC, sigma: float = DEFAULT_SIGMA) -> ProblemSpec:
    u = parse_expr(RHS_TEXT)
    if id == 1:
        op = build_operator([TermSpec(parse_expr("0.5"), parse_expr("sin(x)"), sigma)], 0.0, 1.0,
                            name="example1")
        return ProblemSpec(1, op, u, 1.0, "single term a = 1/2, phi = sin", None, sigma)
    if id in (2, 3, 4):
        if trunc_N < 1:
            raise ValueError("trunc_N must be >= 1")
        name = f"example{id}"
        op = family_operator(name, trunc_N, 1.0, sigma)
        return ProblemSpec(id, op, u, 1.0, FAMILIES[name].note, trunc_N, sigma)
    raise ValueError(f"unknown example id {id!r}; expected 1..4")


def to_config(problem: ProblemSpec) -> dict:
    """The instance as a CLI config mapping (schema 1)."""
    cfg = {"schema": 1, "k": problem.k, "rhs": problem.rhs}
    if problem.trunc_N is None:
        cfg["terms"] = [{"a": "0.5", "phi": "sin(x)", "sigma": problem.sigma}]
    else:
        cfg["family"] = {"name": f"example{problem.id}", "count": problem.trunc_N,
                         "sigma": problem.sigma}
    cfg.update({
        "tol": 1e-11,
        "max_iter": 200,
        "A_grid": [0.1, 0.2, 0.4],
        "n_range": [1, 50],
        "boundary_samples": 2000,
    })
    return cfg


def oracle_example1(x: float, n_terms: int = 60) -> float:
    """``-sum_{n<n_terms} 2^-n sin^<n>(x)`` by plain scalar summation."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    total = 0.0
    t = float(x)
    w = 1.0
    for _ in range(n_terms):
        total -= w * t
        t = math.sin(t)
        w *= 0.5
    return total


def oracle_example1_tail(n_terms: int) -> float:
    """Bound on the omitted terms: ``sum_{n>=N} 2^-n = 2^-(N-1)`` since ``|sin^<n>| <= 1``."""
    return 2.0 ** -(n_terms - 1)
