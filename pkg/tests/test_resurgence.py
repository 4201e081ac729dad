import cmath
import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallcross.exact import Q, QQi
from wallcross.lattice import CentralCharge
from wallcross.lie import SkewForm, TruncationContext, ks_transform
from wallcross.repro import AIRY, airy_stokes, psi_oracle
from wallcross.resurgence import (EVData, EVError, SectorError, StokesData, StokesError, TSeries, borel,
                                  circle_grid, conjugate_germ, critical_points, ev_formal, ev_normal_form_check,
                                  ev_solve, gevrey_fit, parse_poly, psi_series, recover_normalizing, rh_split,
                                  saddle_expansion, stokes_jump, tail_bounds, thimble_integral, twist,
                                  twist_factor)


# ---------------------------------------------------------------- thimbles


def airy_coefficient(k):
    """(-3/2)^k u_k with u_k = Gamma(3k + 1/2) / (54^k k! Gamma(k + 1/2)), exactly."""
    num = Fraction(1)
    for j in range(k, 3 * k):
        num *= Fraction(2 * j + 1, 2)
    u = num / (54 ** k * math.factorial(k))
    return u * Fraction(-3, 2) ** k


def test_airy_saddle_coefficients_are_exact():
    S = saddle_expansion(AIRY, 0, 12)
    assert S.exact[:4] == [Q(1), Q(Fraction(-5, 48)), Q(Fraction(385, 4608)), Q(Fraction(-85085, 663552))]
    assert S.exact == [Q(airy_coefficient(k)) for k in range(13)]


def test_critical_points_of_airy():
    cps = critical_points(AIRY)
    assert [(c.x, c.z, c.hessian) for c in cps] == [(1, Q(Fraction(-2, 3)), 2), (-1, Q(Fraction(2, 3)), -2)]


def test_parse_poly_rejects_garbage():
    with pytest.raises(Exception):
        parse_poly("x^3 + sin(x)")


def contour_oracle(t, j):
    """I_j^mod by mpmath along two straight rays through the critical point into the valleys."""
    x0, z = (1, mp.mpf(-2) / 3) if j == 0 else (-1, mp.mpf(2) / 3)
    th = cmath.phase(t)
    ends = [cmath.exp(1j * (math.pi / 3 + th / 3)), cmath.exp(1j * (-math.pi / 3 + th / 3))] if j == 0 else \
        [cmath.exp(1j * (math.pi + th / 3)), cmath.exp(1j * (math.pi / 3 + th / 3))]
    f = lambda x: mp.exp((x ** 3 / 3 - x - z) / t)  # noqa: E731
    legs = []
    for e in ends:
        legs.append(mp.quad(lambda s: f(x0 + s * e) * e, [0, 0.5, 2, mp.inf]))
    val = (legs[0] - legs[1]) / mp.sqrt(2 * mp.pi * t)
    return complex(val)


@pytest.mark.parametrize("t", [0.05, 0.1 * cmath.exp(0.6j), 0.2 * cmath.exp(-0.9j)])
def test_thimble_matches_contour_quadrature(t):
    r = thimble_integral(AIRY, 0, t)
    ex = contour_oracle(t, 0)
    # orientation is fixed by I^mod -> sqrt(-1/f''), i.e. i/sqrt(2) here; the oracle is taken up to sign
    c0 = 1j / math.sqrt(2)
    ex = ex if (ex * c0.conjugate()).real > 0 else -ex
    assert abs(r.mod - ex) <= 1e-10 * abs(ex)


@pytest.mark.parametrize("mag", [1e-3, 5e-3, 1e-2])
def test_saddle_series_tracks_thimble(mag):
    S = saddle_expansion(AIRY, 0, 30)
    for ang in (-2.0, 0.4, 1.7):
        t = mag * cmath.exp(1j * ang)
        r = thimble_integral(AIRY, 0, t)
        ser = S(t, S.optimal_terms(t))
        assert abs(r.mod - ser) <= 1e-6 * abs(ser)


def test_airy_stokes_multipliers():
    assert stokes_jump(AIRY, 0, 1).n == -1
    J = stokes_jump(AIRY, 1, 0)
    assert J.n == 1 and J.residual < 1e-8


def test_thimble_refuses_stokes_ray():
    with pytest.raises(Exception):
        thimble_integral(AIRY, 0, -0.1)


# ---------------------------------------------------------------- Borel and growth


@pytest.mark.parametrize("a", [0.5, 2.0, 1.5 * cmath.exp(0.7j)])
def test_borel_finds_planted_pole(a):
    c = TSeries([math.factorial(n) * a ** n for n in range(26)])
    near = borel(c).nearest()
    assert near is not None
    assert abs(near.location - 1 / a) <= 1e-6 * abs(1 / a)


def test_borel_of_airy_series_sees_the_other_saddle():
    near = borel(saddle_expansion(AIRY, 0, 30)).nearest()
    assert abs(near.distance - 4 / 3) / (4 / 3) < 0.01


@pytest.mark.parametrize("A", [0.5, 2.0, 3.0])
def test_gevrey_fit_recovers_rate(A):
    fit = gevrey_fit([math.factorial(n) * A ** n * (1 + 1 / (n + 1)) for n in range(25)])
    assert abs(fit.A - A) / A < 0.05 and fit.bounded


def test_gevrey_flags_faster_growth():
    assert not gevrey_fit([math.factorial(n) ** 2 for n in range(25)]).bounded


# ---------------------------------------------------------------- Psi and splitting


def mp_depth_one(sd, i, j, t, R):
    dz = sd.z[i] - sd.z[j]
    u = dz / abs(dz)
    f = lambda x: mp.exp(-dz / (x * u)) * u / (x * u - t)  # noqa: E731
    pts = sorted({0, abs(t), 0.1 * R, R})
    return complex(sd.n[i, j]) / (2j * mp.pi) * mp.quad(f, pts)


@pytest.mark.parametrize("t", [0.3 * cmath.exp(1.0j), 0.6 * cmath.exp(-1.7j), 0.2 * cmath.exp(-0.05j)])
def test_psi_depth_one_against_mpmath(t):
    sd = airy_stokes()
    one = psi_series(sd, t, 1.0, 1).matrix
    for i, j in sd.pairs():
        ex = mp_depth_one(sd, i, j, t, 1.0)
        assert abs(one[i, j] - ex) < 1e-10
        assert abs(psi_oracle(sd, i, j, t, 1.0) - ex) < 1e-10


@settings(max_examples=10)
@given(st.floats(0.1, 0.9), st.floats(-3.0, 3.0))
def test_psi_depth_terms_stay_under_bounds(r, ang):
    sd = airy_stokes()
    t = r * cmath.exp(1j * ang)
    if sd.stokes_distance(t) < 0.05:
        return
    res = psi_series(sd, t, 1.0, 6)
    assert all(a <= b for a, b in zip(res.terms, res.bounds))


def test_psi_rejects_stokes_ray_and_bad_data():
    sd = airy_stokes()
    with pytest.raises(StokesError):
        psi_series(sd, 0.5, 1.0, 2)    # arg(z_0 - z_1) = pi, arg(z_1 - z_0) = 0
    with pytest.raises(StokesError):
        StokesData([0, 1, 2], np.zeros((3, 3)))


def test_tail_bounds_decay_geometrically():
    b = tail_bounds(airy_stokes(), 0.4j, 1.0, 6)
    ratios = [b[s + 1] / b[s] for s in range(5)]
    assert max(ratios) < 1 and np.allclose(ratios, ratios[0])


@pytest.mark.parametrize("r0", [0.7, 1.5])
def test_rh_split_recovers_planted_radius_and_coefficients(r0):
    ts = circle_grid(0.4, 128)
    M = np.array([[[1, 0.3 * t], [0.0, 1]] for t in ts], dtype=complex)
    Jtrue = np.array([[1 / (1 - t / r0), np.exp(t)] for t in ts])
    I = np.einsum("mij,mj->mi", M, Jtrue)
    sp = rh_split(ts, M, I)
    assert abs(sp.radius - r0) / r0 < 0.05
    for n in range(6):
        assert abs(sp.series[0].coeffs[n] - r0 ** -n) < 1e-10


# ---------------------------------------------------------------- gluing and normal forms


def ev_moment_oracle(eps, delta, n):
    # first order in eps: c_n = eps i^(-n-1) Gamma(n, 2 pi/delta) / (2 pi)^(n+1)
    return eps * (1j) ** (-n - 1) * complex(mp.gammainc(n, 2 * mp.pi / delta)) / (2 * math.pi) ** (n + 1)


def test_ev_moments_against_incomplete_gamma():
    eps, delta = 1e-3, 0.5
    d = EVData([eps], [])
    sol = ev_solve(d, delta)
    assert sol.residual < 1e-12
    F = ev_formal(d, sol)
    for n in range(1, 12):
        ex = ev_moment_oracle(eps, delta, n)
        assert abs(F.moments.coeffs[n] - ex) <= 1e-6 * abs(ex)
    assert F.growth.bounded


def test_ev_solve_is_symmetric_in_the_two_sides():
    # f_- = eps/z mirrors f_+ = eps z under t -> -t
    eps, delta = 1e-3, 0.5
    plus = ev_solve(EVData([eps], []), delta)
    minus = ev_solve(EVData([], [eps]), delta)
    for t in (0.05, 0.1 + 0.02j):
        assert abs(plus.W(t) + minus.W(-t)) < 1e-12


def test_ev_rejects_large_delta():
    with pytest.raises(EVError):
        ev_solve(EVData([1.0], [], r_plus=1e-3), 5.0)


def series_mul(a, b, n):
    return [sum(a[i] * b[k - i] for i in range(k + 1) if i < len(a) and k - i < len(b)) for k in range(n)]


def series_compose(a, b, n):
    """a(b(t)) with b(0) = 0, truncated to n terms."""
    out = [Fraction(0)] * n
    p = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for k in range(n):
        if k < len(a):
            out = [x + a[k] * y for x, y in zip(out, p)]
        p = series_mul(p, b, n)
    return out


def series_exp(a, n):
    # a(0) = 0; exp via the ODE y' = a' y
    y = [Fraction(1)] + [Fraction(0)] * (n - 1)
    da = [k * a[k] for k in range(1, len(a))] + [Fraction(0)] * n
    for k in range(1, n):
        y[k] = sum(da[i] * y[k - 1 - i] for i in range(k)) / k
    return y


def w_map(c, n):
    e = series_exp([Fraction(x) for x in c] + [Fraction(0)] * n, n)
    return [Fraction(0)] + e[: n - 1]


@pytest.mark.parametrize("c", [[0, 0, 1], [0, 0, 1, Fraction(1, 2)], [0, 0, 0, -2, 0, Fraction(1, 3)]])
def test_conjugated_germ_satisfies_the_normal_form(c):
    N = 20
    n = N + 2
    c = c + [0] * (N + 1 - len(c))
    g = [Fraction(int(x.p), int(x.q)) for x in conjugate_germ(c, N + 3)]
    w = w_map(c, n)
    lhs = series_compose(w, g[:n], n)
    # w / (1 - w) = w + w^2 + ...
    rhs = series_compose([Fraction(0)] + [Fraction(1)] * (n - 1), w, n)
    assert lhs == rhs
    assert ev_normal_form_check(c, g, N).passed


def test_normal_form_check_locates_a_perturbation():
    c = [0, 0, 1] + [0] * 18
    g = conjugate_germ(c, 23)
    g[15] += 1
    rep = ev_normal_form_check(c, g, 20)
    assert not rep.passed and rep.order == 15


@settings(max_examples=15)
@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=4), min_size=6, max_size=6))
def test_recover_normalizing_inverts_conjugation(tail):
    N = 8
    c = [0, 0] + [Q(x) for x in tail] + [0]
    g = conjugate_germ(c, N + 3)
    rec = recover_normalizing(g, N)
    assert list(rec.c) == c[: N + 1]


# ---------------------------------------------------------------- twist


def test_twist_rescales_each_graded_piece():
    ctx = TruncationContext.orthant(2, 5)
    g = ks_transform((1, 0), 1, SkewForm.standard(), ctx)
    Z = CentralCharge([QQi(1, 1), QQi(2, -1)])
    t = 0.5 + 0.2j
    T = twist(g, Z, t)
    for beta, u in g.log.terms.items():
        f = twist_factor(Z, beta, t)
        assert np.allclose(T.element.log.terms[beta], [f * float(x) for x in u])
    # acting on x2: (1 + e^{-Z(1,0)/t} x1)^1
    s = T.series(1)
    f = twist_factor(Z, (1, 0), t)
    assert abs(s[(1, 0)] - f) < 1e-14 and all(abs(v) < 1e-14 for m, v in s.items() if m[0] > 1)


def test_twist_sector_condition():
    ctx = TruncationContext.orthant(2, 3)
    g = ks_transform((1, 0), 1, SkewForm.standard(), ctx)
    with pytest.raises(SectorError):
        twist(g, CentralCharge([QQi(-1, 0), QQi(0, 1)]), 1.0)
