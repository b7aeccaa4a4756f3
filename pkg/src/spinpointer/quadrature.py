"""Deterministic quadrature rules and the refinement bookkeeping used everywhere.

All integrals in this package are evaluated twice, once at the requested
resolution and once with every node count scaled by ``REFINEMENT_FACTOR``;
the difference is the declared error estimate and is never silently absorbed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_legendre

from .errors import DomainError

REFINEMENT_FACTOR = 1.5


@dataclass(frozen=True)
class Rule1D:
    """Nodes and weights for one axis, tied to the interval they integrate."""

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple[float, float]
    kind: str = "gauss"

    def __post_init__(self):
        if self.nodes.shape != self.weights.shape or self.nodes.ndim != 1:
            raise DomainError("nodes and weights must be 1-D arrays of equal length")
        a, b = self.domain
        if not (b > a):
            raise DomainError(f"empty integration domain [{a}, {b}]")
        if self.kind not in ("gauss", "trapezoid"):
            raise DomainError(f"unknown rule kind {self.kind!r}")

    @property
    def count(self) -> int:
        return self.nodes.size

    def refined(self, factor: float = REFINEMENT_FACTOR) -> "Rule1D":
        n = scaled_count(self.count, factor)
        if self.kind == "trapezoid":
            return trapezoid_periodic(n, self.domain[1] - self.domain[0])
        return gauss_legendre(n, self.domain[0], self.domain[1])


@dataclass(frozen=True)
class ConvergenceReport:
    """Base and refined values of one integral plus the acceptance verdict."""

    value: float
    refined_value: float
    abs_diff: float
    tolerance: float
    accepted: bool


@lru_cache(maxsize=256)
def _legendre_reference(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n: int, a: float = -1.0, b: float = 1.0) -> Rule1D:
    """Gauss-Legendre rule with ``n`` nodes mapped onto [a, b]."""
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    if not (b > a):
        raise DomainError(f"empty integration domain [{a}, {b}]")
    x, w = _legendre_reference(int(n))
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return Rule1D(nodes=mid + half * x, weights=half * w, domain=(float(a), float(b)))


def trapezoid_periodic(n: int, period: float = 2.0 * math.pi) -> Rule1D:
    """Equal-weight rule for periodic integrands; exact for harmonics |m| < n."""
    if n < 1:
        raise DomainError(f"need at least one node, got {n}")
    if period <= 0:
        raise DomainError("period must be positive")
    nodes = np.arange(n) * (period / n)
    weights = np.full(n, period / n)
    return Rule1D(nodes=nodes, weights=weights, domain=(0.0, float(period)), kind="trapezoid")


def scaled_count(n: int, factor: float = REFINEMENT_FACTOR) -> int:
    return int(math.ceil(n * factor))


def product_integrate(f: Callable[..., np.ndarray], rules: Sequence[Rule1D]) -> float:
    """Integrate ``f(x1, ..., xd)`` over the tensor product of the given rules.

    ``f`` must accept broadcast arrays (one per axis, shaped for an open mesh)
    and return the integrand values.
    """
    if len(rules) == 0:
        raise DomainError("need at least one axis")
    mesh = np.ix_(*[r.nodes for r in rules])
    values = np.asarray(f(*mesh), dtype=float)
    for r in reversed(rules):
        values = values @ r.weights
    return float(values)


def integrate_with_refinement(
    f: Callable[..., np.ndarray],
    rules: Sequence[Rule1D],
    tolerance: float,
    factor: float = REFINEMENT_FACTOR,
) -> ConvergenceReport:
    """Product-rule integral with one refinement step on every axis."""
    base = product_integrate(f, rules)
    refined = product_integrate(f, [r.refined(factor) for r in rules])
    return refinement_report(base, refined, tolerance)


def refinement_report(value: float, refined_value: float, tolerance: float) -> ConvergenceReport:
    if tolerance <= 0:
        raise DomainError("tolerance must be positive")
    diff = abs(refined_value - value)
    return ConvergenceReport(
        value=float(value),
        refined_value=float(refined_value),
        abs_diff=float(diff),
        tolerance=float(tolerance),
        accepted=bool(diff <= tolerance),
    )
