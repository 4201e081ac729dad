import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wallcross.exact import Q
from wallcross.lie import (ConeSeries, ContextError, GradedVectorField, GroupElement, SkewForm, TruncationContext,
                           act, action_series, bch_degree4, bracket, exp_field, inverse, ks_transform, multiply,
                           product, random_field)

seeds = st.integers(0, 2**32 - 1)


def gen_binom(e, k):
    """Generalized binomial coefficient, exact."""
    out = Fraction(1)
    for j in range(k):
        out *= Fraction(e - j, j + 1)
    return out


@pytest.mark.parametrize("g,omega_count", [((1, 0), 1), ((0, 1), 1), ((1, 1), 2), ((2, 1), 1), ((1, 2), 3)])
@pytest.mark.parametrize("sign", [1, -1])
def test_ks_action_is_binomial(g, omega_count, sign):
    ctx = TruncationContext.orthant(2, 9)
    om = SkewForm.standard()
    T = ks_transform(g, omega_count, om, ctx, sign=sign)
    for i in range(2):
        e = omega_count * om(g, tuple(int(k == i) for k in range(2)))
        series = action_series(T, i)
        k = 1
        while sum(g) * k <= ctx.order:
            want = gen_binom(e, k) * sign ** k
            assert series.coefficient(tuple(k * x for x in g)) == Q(want)
            k += 1
        # nothing off the ray
        for m in series.terms:
            if any(m):
                assert m[0] * g[1] == m[1] * g[0]
    if e >= 0:
        assert gen_binom(e, 2) == math.comb(e, 2)


@pytest.mark.parametrize("order", [4, 8, 12])
def test_pentagon(order):
    ctx = TruncationContext.orthant(2, order)
    om = SkewForm.standard()
    T = {g: ks_transform(g, 1, om, ctx) for g in [(1, 0), (0, 1), (1, 1)]}
    assert multiply(T[(1, 0)], T[(0, 1)]) == product([T[(0, 1)], T[(1, 1)], T[(1, 0)]])


def test_pentagon_fails_without_middle_factor():
    ctx = TruncationContext.orthant(2, 6)
    om = SkewForm.standard()
    T = {g: ks_transform(g, 1, om, ctx) for g in [(1, 0), (0, 1)]}
    assert multiply(T[(1, 0)], T[(0, 1)]) != multiply(T[(0, 1)], T[(1, 0)])


@given(seeds, st.sampled_from([2, 3]))
def test_bracket_antisymmetric_and_jacobi(seed, n):
    rng = np.random.default_rng(seed)
    ctx = TruncationContext.orthant(n, 4)
    X, Y, W = (random_field(ctx, rng, density=0.4) for _ in range(3))
    assert (bracket(X, Y) + bracket(Y, X)).is_zero()
    jac = bracket(X, bracket(Y, W)) + bracket(Y, bracket(W, X)) + bracket(W, bracket(X, Y))
    assert jac.is_zero()


@given(seeds)
def test_product_matches_bch_when_degree_five_vanishes(seed):
    rng = np.random.default_rng(seed)
    ctx = TruncationContext.orthant(2, 4)
    X, Y = random_field(ctx, rng), random_field(ctx, rng)
    assert product([GroupElement(X), GroupElement(Y)]).log == bch_degree4(X, Y)


@given(seeds)
def test_group_axioms(seed):
    rng = np.random.default_rng(seed)
    ctx = TruncationContext.orthant(2, 5)
    a, b, c = (exp_field(random_field(ctx, rng, density=0.3)) for _ in range(3))
    assert multiply(multiply(a, b), c) == multiply(a, multiply(b, c))
    assert multiply(a, inverse(a)).is_identity()
    assert product([a, b, c]) == multiply(a, multiply(b, c))


@given(seeds)
def test_action_is_a_ring_homomorphism_and_composes(seed):
    rng = np.random.default_rng(seed)
    ctx = TruncationContext.orthant(2, 5)
    g, h = (exp_field(random_field(ctx, rng, density=0.3)) for _ in range(2))
    f1 = ConeSeries({(1, 0): 1, (0, 2): Q(Fraction(1, 2))}, ctx, 5)
    f2 = ConeSeries({(0, 1): -2, (1, 1): 3}, ctx, 5)
    assert act(g, f1 * f2) == act(g, f1) * act(g, f2)
    assert act(multiply(g, h), f1) == act(g, act(h, f1))


def test_gaussian_and_complex_modes_agree_with_exact():
    ctx = TruncationContext.orthant(2, 6)
    om = SkewForm.standard()
    ex = multiply(ks_transform((1, 0), 1, om, ctx), ks_transform((0, 1), 1, om, ctx))
    cctx = ctx.with_mode("complex")
    cx = multiply(ks_transform((1, 0), 1, om, cctx), ks_transform((0, 1), 1, om, cctx))
    for g, u in ex.log.terms.items():
        assert np.allclose([complex(float(x)) for x in u], cx.log.terms[g], atol=1e-12)


def test_field_json_roundtrip(rng):
    ctx = TruncationContext.orthant(3, 4)
    X = random_field(ctx, rng)
    assert GradedVectorField.from_json(X.to_json()) == X


def test_context_guards():
    ctx = TruncationContext.orthant(2, 3)
    with pytest.raises(ContextError):
        exp_field(GradedVectorField({(0, 0): (1, 0)}, ctx))
    with pytest.raises(ContextError):
        GradedVectorField({(-1, 1): (1, 0)}, ctx)
    with pytest.raises(ContextError):
        ks_transform((0, 0), 1, SkewForm.standard(), ctx)
