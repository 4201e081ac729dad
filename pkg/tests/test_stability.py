import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallcross.exact import Q, QQi, cross
from wallcross.lattice import CentralCharge, Sector
from wallcross.lie import SkewForm, TruncationContext, multiply, product
from wallcross.stability import (SectorElement, StabilityData, StabilityError, TransportError, data_from_dt,
                                 estimate_growth, factorize, factorize_rays, growth_from_coefficients,
                                 inverse_mobius, mobius_transform, planted_element, random_stability_data,
                                 rays_from_data, sector_product, transport_charge)

EAST, WEST = QQi(1, 0), QQi(-1, 0)
UPPER = Sector.between(EAST, WEST, False, False)
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=15)
@given(seeds, st.sampled_from([2, 3]))
def test_sector_product_respects_every_split(seed, n):
    rng = np.random.default_rng(seed)
    sig = random_stability_data(TruncationContext.orthant(n, 6), rng)
    A = sector_product(sig, UPPER).element
    rays = rays_from_data(sig, WEST)
    assert product([r.element for r in rays]) == A
    for r in rays:
        left = sector_product(sig, Sector.between(r.direction, WEST, False, False)).element
        right = sector_product(sig, Sector.between(EAST, r.direction, True, False)).element
        assert multiply(left, right) == A


@settings(max_examples=15)
@given(seeds)
def test_factorize_inverts_multiply(seed):
    rng = np.random.default_rng(seed)
    sig = random_stability_data(TruncationContext.orthant(2, 6), rng)
    A = SectorElement(UPPER, sector_product(sig, UPPER).element)
    for r in rays_from_data(sig, WEST):
        left, mid, right = factorize(A, r.direction, sig.Z)
        assert product([left, mid, right]) == A.element
        assert mid == r.element
        assert all(cross(r.direction, sig.Z(g)) > 0 for g in left.log.terms)
        assert all(cross(r.direction, sig.Z(g)) < 0 for g in right.log.terms)
    # ray factors of the whole product are the data itself
    got = factorize_rays(A.element, sig.Z, WEST)
    want = rays_from_data(sig, WEST)
    assert [f.element for f in got] == [w.element for w in want]


def test_factorize_rejects_ray_outside_sector():
    rng = np.random.default_rng(0)
    sig = random_stability_data(TruncationContext.orthant(2, 4), rng)
    A = SectorElement(UPPER, sector_product(sig, UPPER).element)
    with pytest.raises(StabilityError):
        factorize(A, QQi(0, -1), sig.Z)


@pytest.fixture
def pentagon_data():
    ctx = TruncationContext.orthant(2, 8)
    om = SkewForm.standard()
    Z0 = CentralCharge([QQi(-1, 2), QQi(1, 2)])
    Z1 = CentralCharge([QQi(1, 2), QQi(-1, 2)])
    return ctx, om, Z0, Z1


def test_transport_across_the_wall_creates_the_bound_state(pentagon_data):
    ctx, om, Z0, Z1 = pentagon_data
    sig = data_from_dt(Z0, {(1, 0): 1, (0, 1): 1}, om, ctx)
    V = Sector.between(QQi(2, 1), QQi(-2, 1))
    res = transport_charge(sig, [V], [Z1])
    assert res.data.a == data_from_dt(Z1, {(1, 0): 1, (0, 1): 1, (1, 1): 1}, om, ctx).a
    back = transport_charge(res.data, [V], [Z0])
    assert back.data.a == sig.a


def test_transport_reports_exit(pentagon_data):
    ctx, om, Z0, _ = pentagon_data
    sig = data_from_dt(Z0, {(1, 0): 1, (0, 1): 1}, om, ctx)
    V = Sector.between(QQi(2, 1), QQi(-2, 1))
    away = CentralCharge([QQi(-1, -2), QQi(1, 2)])
    with pytest.raises(TransportError) as info:
        transport_charge(sig, [V], [away])
    assert info.value.step == 0 and 0 < info.value.s <= 1


def test_support_form_is_enforced():
    ctx = TruncationContext.orthant(3, 3)
    from wallcross.lattice import QuadraticForm
    from wallcross.lie import GradedVectorField
    Z = CentralCharge([QQi(1, 0), QQi(0, 1), QQi(1, 1)])
    a = GradedVectorField({(0, 0, 1): (1, 0, 0)}, ctx)
    with pytest.raises(StabilityError):
        StabilityData(Z, a, QuadraticForm.diag(1, 1, -1))


@given(st.dictionaries(st.integers(1, 10), st.integers(-5, 5).filter(bool), max_size=5), st.sampled_from([1, -1]))
def test_mobius_inverse_roundtrip(omega, sign):
    b = mobius_transform(omega, 10, sign)
    assert inverse_mobius(b, 10, sign) == omega


def test_mobius_minus_sign_closed_form():
    # b_k = sum_{d | k} Omega(d) (d/k)^2 for the (1 - x) convention
    omega = {1: 2, 2: -1, 3: 4}
    b = mobius_transform(omega, 6, -1)
    for k in range(1, 7):
        want = sum(Fraction(w) * Fraction(d, k) ** 2 for d, w in omega.items() if k % d == 0)
        assert b.get(k, 0) == Q(want)


def test_inverse_mobius_flags_nonintegral():
    with pytest.raises(StabilityError):
        inverse_mobius({1: Q(Fraction(1, 2))}, 3)


@pytest.mark.parametrize("r", ["3/2", "1/3", "5", "7/10", "2"])
def test_planted_geometric_slope(r):
    want = math.log(float(Q(r)))
    coeffs = {(k, 0): Q(r) ** k for k in range(1, 13)}
    rep = growth_from_coefficients(coeffs)
    assert abs(rep.slope - want) <= 0.05 * abs(want)
    assert rep.consistent
    el = estimate_growth(planted_element((1, 0), (0, 1), Q(r), TruncationContext.orthant(2, 12)))
    assert abs(el.slope - want) <= 0.05 * abs(want)


@pytest.mark.parametrize("power", [1, 2])
def test_factorial_growth_is_flagged(power):
    coeffs = {(k, 0): math.factorial(k) ** power for k in range(1, 21)}
    assert not growth_from_coefficients(coeffs).consistent


def test_polynomial_prefactor_is_tolerated():
    coeffs = {(k, 0): k ** 3 * 2 ** k for k in range(1, 21)}
    assert growth_from_coefficients(coeffs).consistent


def test_identity_growth_is_trivial():
    from wallcross.lie import GroupElement
    rep = estimate_growth(GroupElement.identity(TruncationContext.orthant(2, 4)))
    assert rep.trivial and rep.consistent


def test_stability_json_roundtrip(rng):
    sig = random_stability_data(TruncationContext.orthant(2, 4), rng)
    again = StabilityData.from_json(sig.to_json())
    assert again.a == sig.a and again.Z == sig.Z and again.Q == sig.Q
