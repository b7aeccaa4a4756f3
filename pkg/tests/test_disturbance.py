"""Disturbance and post-measurement Bloch vector.

The one- and two-spin disturbance oracles below are hand-derived closed
forms: averaging the rotated state's overlap with the input reduces to
Gaussian moments E_k = (1 - k^2/(4 spread^2)) exp(-k^2/(8 spread^2)) of
sin^2 powers, so no quadrature at all is needed to certify those cases.
"""
import math

import numpy as np
import pytest

from spinpointer.disturbance import (
    bloch_post_numeric,
    bloch_z_post_closed,
    disturbance_exact,
    disturbance_lowest_order,
    disturbance_oracle_full,
    disturbance_series_copt,
    min_disturbance,
)
from spinpointer.errors import CapabilityError, DomainError
from spinpointer.pointer import PointerModel


def single_spin_disturbance_oracle(spread: float) -> float:
    e1 = (1.0 - 1.0 / (4.0 * spread**2)) * math.exp(-1.0 / (8.0 * spread**2))
    return (1.0 - e1) / 3.0


def two_spin_disturbance_oracle(spread: float) -> float:
    e1 = (1.0 - 1.0 / (4.0 * spread**2)) * math.exp(-1.0 / (8.0 * spread**2))
    e2 = (1.0 - 1.0 / spread**2) * math.exp(-1.0 / (2.0 * spread**2))
    m1 = (1.0 - e1) / 2.0  # <sin^2(p/2)>
    m2 = (3.0 - 4.0 * e1 + e2) / 8.0  # <sin^4(p/2)>
    return 2.0 * (2.0 / 3.0) * m1 - (8.0 / 15.0) * m2


@pytest.mark.parametrize("spread", [0.1, 0.35355339059327379, 1.0, 3.0])
def test_single_spin_matches_closed_form(spread):
    point = disturbance_exact(1, PointerModel(spread))
    assert point.accepted
    assert point.d_exact == pytest.approx(single_spin_disturbance_oracle(spread), abs=1e-10)


@pytest.mark.parametrize("spread", [0.3, 0.8])
def test_two_spin_matches_closed_form(spread):
    point = disturbance_exact(2, PointerModel(spread))
    assert point.d_exact == pytest.approx(two_spin_disturbance_oracle(spread), abs=1e-10)


def test_special_values():
    # At spread 1/2 the prefactor 1 - 1/(4 spread^2) vanishes, leaving 1/3.
    assert disturbance_exact(1, PointerModel(0.5)).d_exact == pytest.approx(1.0 / 3.0, abs=1e-12)
    expected = (1.0 + 2.0 * math.exp(-1.5)) / 3.0
    got = disturbance_exact(1, PointerModel(1.0 / math.sqrt(12.0))).d_exact
    assert got == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.482086773432, abs=1e-12)


def test_strong_coupling_limit_single_spin():
    assert disturbance_exact(1, PointerModel(0.005)).d_exact == pytest.approx(1.0 / 3.0, abs=0.01)


def test_weak_coupling_decay():
    for n in (1, 2, 5, 10):
        assert disturbance_exact(n, PointerModel(50.0)).d_exact < 1e-3


def test_interior_maximum():
    for n in (1, 2, 3):
        bump = disturbance_exact(n, PointerModel(0.3)).d_exact
        assert bump > disturbance_exact(n, PointerModel(0.005)).d_exact
        assert bump > disturbance_exact(n, PointerModel(5.0)).d_exact


def test_curves_ordered_in_ensemble_size():
    for spread in (0.2, 0.5, 1.0, 2.0):
        values = [disturbance_exact(n, PointerModel(spread)).d_exact for n in (1, 2, 3)]
        assert values[0] < values[1] < values[2]


def test_factorized_route_matches_full_tensor():
    for n, spread in ((1, 0.4), (2, 0.7), (3, 1.1)):
        model = PointerModel(spread)
        full = disturbance_oracle_full(n, model)
        assert disturbance_exact(n, model).d_exact == pytest.approx(full, abs=1e-8)
    with pytest.raises(CapabilityError):
        disturbance_oracle_full(4, PointerModel(0.7))


def test_lowest_order_lorentzian():
    for n in (1, 3, 10):
        at_opt = disturbance_lowest_order(n, math.sqrt(n / 8.0))
        assert at_opt == pytest.approx(0.5, abs=1e-14)
    assert disturbance_lowest_order(100, 5.0) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert disturbance_lowest_order(2, 0.3) == pytest.approx(2.0 / (2.0 + 8.0 * 0.09), rel=1e-14)


def test_series_and_minimum_constants():
    assert disturbance_series_copt(200) == pytest.approx(0.5 + 23.0 / (1440.0 * 200**2), abs=1e-15)
    assert min_disturbance(1) == pytest.approx(2.0 / 3.0, abs=1e-15)
    assert min_disturbance(2) == pytest.approx(0.6, abs=1e-15)
    assert min_disturbance(3) == pytest.approx(4.0 / 7.0, abs=1e-15)
    assert min_disturbance(100) == pytest.approx(101.0 / 201.0, abs=1e-15)


def test_point_carries_lowest_order_companion():
    point = disturbance_exact(2, PointerModel(0.5))
    assert point.d_lowest_order == pytest.approx(disturbance_lowest_order(2, 0.5), abs=1e-15)
    assert point.error_estimate < 1e-7


def test_bloch_closed_form_values():
    # (n/6) [1 + e^{-1/(8 spread^2)} (2 - 1/(2 spread^2))]; the bracketed
    # correction vanishes at spread 1/2.
    assert bloch_z_post_closed(2, 0.5) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert bloch_z_post_closed(1, 50.0) == pytest.approx(0.5, abs=1e-4)


def test_bloch_closed_matches_numeric_path():
    for n in (1, 4, 10):
        for spread in (0.3, 1.0, 3.0):
            report = bloch_post_numeric(n, PointerModel(spread))
            assert report.sz_post_numeric == pytest.approx(report.sz_post_closed, abs=1e-6)
            assert abs(report.sx_post) < 1e-8
            assert abs(report.sy_post) < 1e-8
            assert report.sz_initial == pytest.approx(n / 2.0, abs=1e-15)
            assert report.sz_post_closed <= report.sz_initial + 1e-12


def test_bloch_recovers_with_weaker_coupling():
    values = [bloch_z_post_closed(2, s) for s in (0.5, 1.0, 1.5, 8.0)]
    assert values == sorted(values)
    assert values[-1] == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("n_spins", [50, 100, 200])
def test_bloch_large_ensemble_offset(n_spins):
    # At the fidelity-optimal spread the longitudinal component settles one
    # half-unit pair below its initial value: n/2 - 1 up to O(1/n).
    value = bloch_z_post_closed(n_spins, math.sqrt(n_spins / 8.0))
    assert abs(value - (n_spins / 2.0 - 1.0)) < 2.0 / n_spins


def test_domain_errors():
    with pytest.raises(DomainError):
        disturbance_exact(0, PointerModel(1.0))
    with pytest.raises(DomainError):
        min_disturbance(0)
    with pytest.raises(DomainError):
        bloch_z_post_closed(1, -1.0)
