import json
import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wallcross.cover import (BatchedCyclicSystem, CombCyclicCover, CoverError, CyclicProductSystem, Interval,
                             UnipotentSystem, cover_checks, apply_step, canonicalize, disjoint_subcovers,
                             enumerate_covers, gauge_act, gauge_orbits, global_elements, linked_decompose,
                             min_subcover, phi, random_gauge, refine_map, refinement_from_canonical,
                             rewrite_to_disjoint, validate_cover, verify_system)

UNI = UnipotentSystem(3, 2, 3, {(0, 1): 0, (0, 2): 1, (1, 2): 2})
CYC = CyclicProductSystem([2, 3, 2])


def small_covers(system, m_max=3):
    return [CombCyclicCover(ivs) for ivs in enumerate_covers(system.k, m_max)
            if all(system.is_small(I) for I in ivs)]


def test_interval_basics():
    I = Interval(2, 3, 5)
    assert I.elements == (2, 3, 4) and I.holes == (2, 3, 4, 0)
    assert I.contains(Interval(3, 1, 5)) and not I.contains(Interval(4, 2, 5))
    with pytest.raises(CoverError):
        Interval(0, 5, 5)


@given(st.integers(2, 6), st.data())
def test_linked_decompose_recomposes(k, data):
    I1 = Interval(data.draw(st.integers(0, k - 1)), data.draw(st.integers(0, k - 1)), k)
    I2 = Interval(data.draw(st.integers(0, k - 1)), data.draw(st.integers(0, k - 1)), k)
    d = linked_decompose(I1, I2)
    if d is not None:
        A, B, C = d
        assert A.first_hole == I1.first_hole and A.length + B.length == I1.length
        assert B.first_hole == I2.first_hole and B.length + C.length == I2.length


@pytest.mark.parametrize("k", [2, 3, 4])
def test_enumerated_covers_are_valid(k):
    covers = list(enumerate_covers(k, k + 1))
    assert covers
    for ivs in covers:
        assert validate_cover(ivs)[0]
    assert CombCyclicCover.canonical(k).is_disjoint


def test_validate_cover_rejects_double_winding():
    k = 3
    bad = [Interval(0, 1, k), Interval(1, 1, k), Interval(2, 1, k)] * 2
    ok, why = validate_cover(bad)
    assert not ok and "degree" in why


@pytest.mark.parametrize("system", [CYC, UNI], ids=["cyclic", "unipotent"])
def test_systems_factorize(system):
    assert verify_system(system)[0]


@pytest.mark.parametrize("system", [CYC, UNI], ids=["cyclic", "unipotent"])
def test_canonical_form_is_a_complete_orbit_invariant(system):
    globals_ = global_elements(system)
    for kap in small_covers(system):
        orbit = gauge_orbits(system, kap)
        assert len(set(orbit.values())) == len(globals_)
        canon_of_orbit = {}
        for x, oid in orbit.items():
            g = tuple(canonicalize(system, kap, list(x)))
            assert canon_of_orbit.setdefault(oid, g) == g
        assert len(set(canon_of_orbit.values())) == len(globals_)


@pytest.mark.parametrize("system", [CYC, UNI], ids=["cyclic", "unipotent"])
def test_rewrite_reaches_a_disjoint_subcover_and_every_step_keeps_the_class(system, rng):
    for kap in small_covers(system):
        for _ in range(3):
            g = [system.random_element(Interval(i, 1, system.k), rng) for i in range(system.k)]
            x = gauge_act(system, kap, phi(system, kap, g), random_gauge(system, kap, rng))
            J, xs, trace = rewrite_to_disjoint(system, kap, x)
            assert J.is_disjoint
            assert canonicalize(system, J, xs) == g
            for e in trace:
                assert validate_cover(e.after)[0]
            for step in range(1, 9):
                r = apply_step(system, kap, x, step)
                if r is not None:
                    assert canonicalize(system, r[0], r[1], check=False) == g


def test_phi_does_not_depend_on_the_subcover(rng):
    for kap in small_covers(UNI):
        g = [UNI.random_element(Interval(i, 1, 3), rng) for i in range(3)]
        for J in disjoint_subcovers(kap):
            assert canonicalize(UNI, kap, phi(UNI, kap, g, J)) == g


def test_refine_map_is_a_bijection_on_classes():
    can = CombCyclicCover.canonical(3)
    for kap in small_covers(UNI):
        psi = refinement_from_canonical(kap)
        images = {tuple(canonicalize(UNI, kap, refine_map(UNI, can, kap, psi, g))) for g in global_elements(UNI)}
        assert len(images) == len(global_elements(UNI))


def test_refine_map_checks_inclusion():
    can = CombCyclicCover.canonical(3)
    with pytest.raises(CoverError):
        refine_map(CYC, can, can, [1, 2, 0], [(0, 0, 0)] * 3)


def test_min_subcover_is_disjoint():
    for ivs in enumerate_covers(4, 5):
        assert min_subcover(CombCyclicCover(ivs)).is_disjoint


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1))
def test_batched_cyclic_agrees_with_scalar_system(seed):
    rng = np.random.default_rng(seed)
    system, G = BatchedCyclicSystem.exhaustive(3, 3)
    g = system.global_split(G)
    for ivs in enumerate_covers(3, 4):
        out = cover_checks(system, CombCyclicCover(ivs), g, rng, ngauge=1)
        assert all(out.values())


def test_against_frozen_brute_force_table(data_dir):
    from wallcross.workbench import _cover, _system

    with open(os.path.join(data_dir, "cover_table.json")) as fh:
        rows = json.load(fh)["rows"]
    assert len(rows) > 100
    for row in rows:
        system, kap = _system(row), _cover(row)
        x = [system.decode(v) for v in row["element"]]
        assert [system.encode(v) for v in canonicalize(system, kap, x)] == row["canonical"]
