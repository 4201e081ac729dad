import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallcross.hlt import (AlmostStandardConnection, GaugeElement, HLTError, PolyField, ResonanceError,
                           connection_invariants, flatness_check, gauge_apply, hlt_normalize, perturb,
                           poly_ring, random_gauge, zgen)

seeds = st.integers(0, 2**32 - 1)


def gauged(seed, n, M=4, N=4, zdeg=2):
    rng = np.random.default_rng(seed)
    st_ = AlmostStandardConnection.standard(n, M, N)
    h0 = random_gauge(n, M, st_.ctx, rng, zdeg=zdeg)
    return st_, h0, gauge_apply(h0, st_)


@settings(max_examples=15)
@given(seeds, st.sampled_from([1, 2, 3]), st.sampled_from(["s0", "sj"]))
def test_normalization_recovers_the_inverse_gauge(seed, n, method):
    st_, h0, nab = gauged(seed, n)
    assert connection_invariants(nab).vanish
    h, cert = hlt_normalize(nab, method=method, check=False)
    assert cert.passed
    assert h == -h0.truncate(st_.M)
    assert gauge_apply(h, nab).is_standard()


@settings(max_examples=10)
@given(seeds, st.sampled_from([1, 2]))
def test_gauge_action_is_invertible_and_flat(seed, n):
    st_, h0, nab = gauged(seed, n, M=3, N=3)
    assert gauge_apply(-h0, nab) == st_
    assert flatness_check(nab).flat


def test_standard_connection_is_fixed():
    st_ = AlmostStandardConnection.standard(2, 4, 4)
    h, cert = hlt_normalize(st_)
    assert h.is_zero() and cert.fully_standard


def test_delta_obstruction_blocks_normalization():
    n = 2
    st_ = AlmostStandardConnection.standard(n, 3, 3)
    C = poly_ring(n)
    bad = perturb(st_, -1, PolyField.euler([C.from_dict({}) + 1, C.from_dict({})], n))
    inv = connection_invariants(bad)
    assert not inv.vanish
    with pytest.raises(HLTError):
        hlt_normalize(bad)


def test_nonflat_input_is_rejected():
    n = 1
    st_ = AlmostStandardConnection.standard(n, 3, 3)
    f = PolyField({(1,): (zgen(n, 0),)}, n)
    bad = perturb(st_, 0, f)
    rep = flatness_check(bad)
    assert not rep.flat and rep.first_defect is not None
    with pytest.raises(HLTError):
        hlt_normalize(bad)


def test_alpha_residues_are_closed_after_gauge():
    _, _, nab = gauged(5, 3)
    assert connection_invariants(nab).closed


def test_resonance_is_reported():
    _, _, nab = gauged(3, 2)
    with pytest.raises(ResonanceError):
        hlt_normalize(nab, Z0=[1, -1])


def test_json_roundtrip():
    st_, h0, nab = gauged(11, 2)
    assert AlmostStandardConnection.from_json(nab.to_json()) == nab
    assert GaugeElement.from_json(h0.to_json()) == h0
