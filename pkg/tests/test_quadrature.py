"""Quadrature rules: exactness, refinement bookkeeping, failure detection."""
import math

import numpy as np
import pytest

from spinpointer.errors import DomainError
from spinpointer.quadrature import (
    REFINEMENT_FACTOR,
    Rule1D,
    gauss_legendre,
    integrate_with_refinement,
    product_integrate,
    refinement_report,
    scaled_count,
    trapezoid_periodic,
)


def test_two_node_rule_on_reference_interval():
    rule = gauss_legendre(2)
    assert np.allclose(np.sort(rule.nodes), [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    assert np.allclose(rule.weights, [1.0, 1.0], atol=1e-15)


def test_two_nodes_integrate_cubic_exactly():
    rule = gauss_legendre(2, 0.0, 1.0)
    assert float(rule.weights @ rule.nodes**3) == pytest.approx(0.25, abs=1e-15)


def test_three_nodes_exact_through_degree_five():
    rule = gauss_legendre(3, 0.0, 1.0)
    for degree in range(6):
        got = float(rule.weights @ rule.nodes**degree)
        assert got == pytest.approx(1.0 / (degree + 1), abs=1e-13)


def test_weights_sum_to_interval_length():
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = float(rng.uniform(-4, 2))
        b = a + float(rng.uniform(0.1, 7))
        for n in (1, 2, 9, 33):
            rule = gauss_legendre(n, a, b)
            assert float(np.sum(rule.weights)) == pytest.approx(b - a, rel=1e-14)


def test_trapezoid_exact_for_low_harmonics():
    rule = trapezoid_periodic(8)
    assert float(np.sum(rule.weights)) == pytest.approx(2 * math.pi, rel=1e-15)
    for m in (1, 2, 3, 7):
        assert float(rule.weights @ np.cos(m * rule.nodes)) == pytest.approx(0.0, abs=1e-13)
        assert float(rule.weights @ np.sin(m * rule.nodes)) == pytest.approx(0.0, abs=1e-13)


def test_trapezoid_refined_keeps_kind():
    rule = trapezoid_periodic(8)
    finer = rule.refined()
    assert finer.kind == "trapezoid"
    assert finer.count == scaled_count(8)


def test_scaled_count_rounds_up():
    assert scaled_count(4) == 6
    assert scaled_count(5) == 8
    assert scaled_count(4, 2.0) == 8
    assert REFINEMENT_FACTOR == 1.5


def test_product_integrate_separable():
    rules = [gauss_legendre(4, 0.0, 1.0), gauss_legendre(4, 0.0, 1.0)]
    got = product_integrate(lambda x, y: x * y, rules)
    assert got == pytest.approx(0.25, abs=1e-14)


def test_refinement_constant_integrand_has_zero_diff():
    report = integrate_with_refinement(
        lambda x: np.ones_like(x), [gauss_legendre(6, 0.0, 2.0)], tolerance=1e-12
    )
    assert report.abs_diff < 1e-14
    assert report.accepted
    assert report.refined_value == pytest.approx(2.0, abs=1e-15)


def test_refinement_accepts_resolved_gaussian():
    rule = gauss_legendre(32, -8.0, 8.0)
    report = integrate_with_refinement(
        lambda x: np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi), [rule], tolerance=1e-8
    )
    assert report.accepted
    assert report.refined_value == pytest.approx(1.0, abs=1e-8)


def test_refinement_rejects_undersampled_oscillation():
    rule = gauss_legendre(8, 0.0, 1.0)
    report = integrate_with_refinement(
        lambda x: np.sin(40.0 * x) + 1.0, [rule], tolerance=1e-8
    )
    assert not report.accepted


def test_refinement_report_fields():
    report = refinement_report(1.0, 1.0 + 5e-7, tolerance=1e-6)
    assert report.accepted
    assert report.abs_diff == pytest.approx(5e-7, rel=1e-9)
    assert not refinement_report(1.0, 1.01, tolerance=1e-6).accepted


def test_domain_errors():
    with pytest.raises(DomainError):
        gauss_legendre(0)
    with pytest.raises(DomainError):
        gauss_legendre(4, 1.0, 1.0)
    with pytest.raises(DomainError):
        trapezoid_periodic(0)
    with pytest.raises(DomainError):
        refinement_report(1.0, 1.0, tolerance=0.0)
    with pytest.raises(DomainError):
        Rule1D(nodes=np.zeros(3), weights=np.zeros(2), domain=(0.0, 1.0))
