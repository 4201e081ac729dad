import cmath
import itertools
import math

import pytest
from hypothesis import assume, given, strategies as st

from fractions import Fraction as F

from wallcross.exact import Q, QQi, det, nullspace
from wallcross.lattice import (CentralCharge, GeometryError, QuadraticForm, RationalCone, Sector,
                               check_support_property, ccw_less, family_ball_radius, family_support_form,
                               fm_feasible, normalize_rational_charge, primitive, sector_contains,
                               support_cone_enumerate)

small = st.integers(-6, 6)
gauss = st.builds(QQi, small, small).filter(bool)


def arg0(z):
    return math.atan2(float(z.im), float(z.re)) % (2 * math.pi)


@given(gauss, gauss)
def test_ccw_less_matches_float_angles(a, b):
    assume(abs(arg0(a) - arg0(b)) > 1e-9)
    assert ccw_less(a, b) == (arg0(a) < arg0(b))


@given(gauss, gauss, gauss)
def test_exact_sector_agrees_with_angles(a, b, z):
    V = Sector.between(a, b, include_left=False, include_right=False)
    rel = (arg0(z) - arg0(a)) % (2 * math.pi)
    width = (arg0(b) - arg0(a)) % (2 * math.pi)
    assume(rel > 1e-9 and abs(rel - width) > 1e-9)
    assert sector_contains(V, z) == (rel < width)


@given(gauss, gauss)
def test_sector_boundaries_follow_flags(a, b):
    assume(arg0(a) != arg0(b))
    for left, right in itertools.product([True, False], repeat=2):
        V = Sector.between(a, b, left, right)
        assert sector_contains(V, a * 3) == right
        assert sector_contains(V, b * 2) == left


def test_sector_rejects_zero():
    with pytest.raises(GeometryError):
        Sector.ray(QQi(1, 0)).contains(QQi(0, 0))


def test_half_plane_admissibility():
    open_half = Sector.between(QQi(1, 0), QQi(-1, 0), False, False)
    closed_half = Sector.between(QQi(1, 0), QQi(-1, 0))
    assert open_half.admissible and not closed_half.admissible
    assert Sector.between(QQi(1, 0), QQi(0, 1)).admissible


@given(st.lists(st.tuples(st.lists(small, min_size=2, max_size=2), small), min_size=1, max_size=5))
def test_fm_matches_grid_search_in_one_direction(rows):
    # a feasible witness found on a grid must be accepted
    for x in itertools.product([Q(k) / 2 for k in range(-8, 9)], repeat=2):
        if all(a[0] * x[0] + a[1] * x[1] >= b for a, b in rows):
            assert fm_feasible(rows, 2)
            return


def test_fm_known_cases():
    assert fm_feasible([((1, 0), 1), ((0, 1), 1), ((-1, -1), -3)], 2)
    assert not fm_feasible([((1, 0), 1), ((0, 1), 1), ((-1, -1), -1)], 2)
    assert not fm_feasible([((1,), Q(F(1, 2))), ((-1,), 0)], 1)


def brute_cone_points(gens, ell, N, box=8):
    # membership by nonnegative rational combination, 2D only
    (a, b), (c, d) = gens
    det = a * d - b * c
    out = []
    for g in itertools.product(range(-box, box + 1), repeat=2):
        lam = (Q(g[0] * d - g[1] * c) / det, Q(a * g[1] - b * g[0]) / det)
        deg = ell[0] * g[0] + ell[1] * g[1]
        if lam[0] >= 0 and lam[1] >= 0 and 1 <= deg <= N:
            out.append(g)
    return sorted(out, key=lambda g: (ell[0] * g[0] + ell[1] * g[1], g))


@pytest.mark.parametrize("gens,ell", [
    (((1, 0), (0, 1)), (1, 1)),
    (((1, 0), (1, 2)), (1, 1)),
    (((1, -1), (1, 1)), (1, 0)),
    (((2, 1), (-1, 3)), (1, 2)),
])
def test_cone_lattice_points_against_brute_force(gens, ell):
    C = RationalCone(gens)
    assert C.lattice_points(ell, 5) == brute_cone_points([primitive(g) for g in gens], ell, 5)


def test_cone_rejects_nonpositive_grading():
    with pytest.raises(GeometryError):
        RationalCone([(1, 0), (0, 1)]).lattice_points((1, -1), 3)


@given(st.lists(st.tuples(small, small), min_size=3, max_size=3),
       st.lists(small, min_size=3, max_size=3))
def test_family_form_splits_image_and_kernel(vals, g):
    Z = CentralCharge([QQi(a, b) for a, b in vals])
    assume(Z.rank == 2)
    eps = Q(F(1, 3))
    Qf = family_support_form(Z, eps)
    re, im = Z.rows()
    (k,) = nullspace([re, im], 3)
    # Q = |Z|^2 - eps^2 |kernel coordinate|^2, so it is -eps^2 |k|_adapted^2 on the kernel line
    assert Qf(k) == -eps * eps
    assert Qf(g) <= Z(g).abs2()
    for c in (2, -3):
        assert Qf([c * x for x in k]) == -eps * eps * c * c
    assert check_support_property([], Z, Qf).kernel_negative


def test_family_form_survives_small_perturbation_and_fails_far_away():
    Z0 = CentralCharge([QQi(1, 0), QQi(0, 1), QQi(1, 1)])
    eps = Q(F(1, 2))
    Qf = family_support_form(Z0, eps)
    rho = family_ball_radius(Z0, eps)
    for ang in range(8):
        d = 0.9 * rho * cmath.exp(1j * ang)
        step = QQi(Q(round(d.real * 4096)) / 4096, Q(round(d.imag * 4096)) / 4096)
        Z = CentralCharge([Z0.values[0] + step, Z0.values[1], Z0.values[2]])
        assert check_support_property([], Z, Qf).kernel_negative
    # far outside the ball the kernel moves to (1, 1, 1), where the form is positive
    far = CentralCharge([QQi(1, 0), QQi(0, 1), QQi(-1, -1)])
    assert not check_support_property([], far, Qf).kernel_negative


def test_support_property_flags_negative_support():
    Z = CentralCharge([QQi(1, 0), QQi(0, 1), QQi(1, 1)])
    Qf = QuadraticForm.diag(1, 1, -1)
    cert = check_support_property([(0, 0, 1)], Z, Qf)
    assert not cert.passed and cert.bad_support == [(0, 0, 1)]


def test_support_cone_enumerate_small_case():
    Z = CentralCharge([QQi(1, 0), QQi(0, 1)])
    Qf = QuadraticForm.diag(1, 1)
    V = Sector.between(QQi(1, 0), QQi(0, 1))
    pts = support_cone_enumerate(Qf, Z, V, (1, 1), 3)
    assert pts == {g for g in itertools.product(range(4), repeat=2) if 1 <= sum(g) <= 3}


@given(st.lists(st.tuples(small, small), min_size=2, max_size=3))
def test_rational_normal_form_is_unimodular_change(vals):
    Z = CentralCharge([QQi(a, b) for a, b in vals])
    assume(Z.rank == 2)
    U, Zp, _ = normalize_rational_charge(Z)
    assert abs(det(U)) == 1
    n = Z.n
    for j in range(n):
        col = [U[i][j] for i in range(n)]
        assert Z(col) == Zp.values[j]
    re, im = Zp.rows()
    assert all(x == 0 for x in re[1:]) and all(x == 0 for x in im[2:])
