"""The acceptance suites, runnable one by one or all together.

Each suite returns a SuiteReport whose certificates carry the measured
residuals next to the thresholds they are judged against.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import flint
import numpy as np

from .exact import QQi, Q
from .jsonio import Certificate


@dataclass
class SuiteReport:
    name: str
    certificates: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.certificates) and all(c.passed for c in self.certificates)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bad = [c.name for c in self.certificates if not c.passed]
        tail = f" (failed: {', '.join(bad)})" if bad else ""
        return f"[{status}] {self.name}: {len(self.certificates)} certificates in {self.seconds:.1f}s{tail}"

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": self.seconds, "results": self.results,
                "certificates": [c.to_json() for c in self.certificates]}


def _timed(fn):
    def run(**kw):
        t0 = time.perf_counter()
        rep = fn(**kw)
        rep.seconds = time.perf_counter() - t0
        return rep
    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# ---------------------------------------------------------------- 1. pentagon


@_timed
def pentagon(order: int = 12, budget: float = 10.0, seed: int = 0) -> SuiteReport:
    """T_(1,0) T_(0,1) = T_(0,1) T_(1,1) T_(1,0) with unit counts, compared coefficient by coefficient."""
    del seed
    from .lie import SkewForm, TruncationContext, action_series, ks_transform, multiply, product

    t0 = time.perf_counter()
    ctx = TruncationContext.orthant(2, order)
    om = SkewForm.standard()
    T = {g: ks_transform(g, 1, om, ctx) for g in [(1, 0), (0, 1), (1, 1)]}
    lhs = multiply(T[(1, 0)], T[(0, 1)])
    rhs = product([T[(0, 1)], T[(1, 1)], T[(1, 0)]])
    mismatched, compared = 0, 0
    for i in range(2):
        a, b = action_series(lhs, i).terms, action_series(rhs, i).terms
        for mu in set(a) | set(b):
            compared += 1
            if a.get(mu, 0) != b.get(mu, 0):
                mismatched += 1
    dt = time.perf_counter() - t0
    rep = SuiteReport("pentagon")
    rep.certificates.append(Certificate("exact_equality", mismatched == 0 and lhs == rhs, float(mismatched),
                                        {"compared": compared, "order": order}))
    rep.certificates.append(Certificate("runtime", dt < budget, dt, {"budget_s": budget}))
    rep.results = {"order": order, "coefficients_compared": compared, "log_terms": len(lhs.log.terms)}
    return rep


# ---------------------------------------------------------------- 2. factorization


@_timed
def factorization(trials: int = 100, order: int = 8, seed: int = 0) -> SuiteReport:
    """Clockwise splits of the upper half-plane and factorize(multiply(triple)) = triple."""
    from .lattice import Sector
    from .lie import TruncationContext, multiply, product
    from .stability import SectorElement, factorize, random_stability_data, rays_from_data, sector_product

    rng = np.random.default_rng(seed)
    east, west = QQi(1, 0), QQi(-1, 0)
    upper = Sector.between(east, west, False, False)
    split_bad = triple_bad = splits = triples = 0
    for trial in range(trials):
        n = 2 + trial % 2
        ctx = TruncationContext.orthant(n, order)
        sig = random_stability_data(ctx, rng, nsupport=int(rng.integers(2, 6)))
        rays = rays_from_data(sig, west)
        A = sector_product(sig, upper).element
        if product([r.element for r in rays]) != A:
            split_bad += 1
        for j in range(1, len(rays)):
            d = rays[j - 1].direction
            left = sector_product(sig, Sector.between(d, west, False, False)).element
            right = sector_product(sig, Sector.between(east, d, True, False)).element
            splits += 1
            split_bad += multiply(left, right) != A
        for r in rays:
            d = r.direction
            trip = (sector_product(sig, Sector.between(d, west, False, False)).element, r.element,
                    sector_product(sig, Sector.between(east, d, False, False)).element)
            got = factorize(SectorElement(upper, product(list(trip))), d, sig.Z)
            triples += 1
            triple_bad += not all(a == b for a, b in zip(got, trip))
    rep = SuiteReport("factorization")
    rep.certificates.append(Certificate("split_product", split_bad == 0, float(split_bad), {"splits": splits}))
    rep.certificates.append(Certificate("factorize_multiply", triple_bad == 0, float(triple_bad),
                                        {"triples": triples}))
    rep.results = {"trials": trials, "order": order, "seed": seed}
    return rep


# ---------------------------------------------------------------- 3. support family


def _rat(x: float, den: int = 1 << 20):
    return flint.fmpq(int(round(x * den)), den)


def _enclosing_sector(Z, margin: float = 0.2):
    from .lattice import Sector

    angs = [math.atan2(float(z.im), float(z.re)) for z in Z.values]
    lo, hi = min(angs) - margin, max(angs) + margin
    return Sector.between(QQi(_rat(math.cos(lo), 1024), _rat(math.sin(lo), 1024)),
                          QQi(_rat(math.cos(hi), 1024), _rat(math.sin(hi), 1024)))


@_timed
def support_family(paths: int = 50, order: int = 5, vertices: int = 3, seed: int = 0) -> SuiteReport:
    """One form Q(Z0, eps) certifies every datum transported along random paths in its ball."""
    from .lattice import CentralCharge, check_support_property, family_ball_radius, family_support_form
    from .lie import TruncationContext
    from .stability import StabilityData, random_stability_data, transport_charge

    rng = np.random.default_rng(seed)
    bad = checks = walls = 0
    worst = None
    for _ in range(paths):
        n = 3
        ctx = TruncationContext.orthant(n, order)
        while True:
            sig = random_stability_data(ctx, rng, nsupport=3)
            angs = [math.atan2(float(z.im), float(z.re)) for z in sig.Z.values]
            if max(angs) - min(angs) < 2.5:
                break
        Z0 = sig.Z
        eps = Q(1)
        while not all(family_support_form(Z0, eps)(g) >= 0 for g in ctx.points):
            eps /= 2
        Qf = family_support_form(Z0, eps)
        rho = family_ball_radius(Z0, eps)
        V = _enclosing_sector(Z0)
        path = []
        for _ in range(vertices):
            D = rng.normal(size=(2, n))
            D *= rng.uniform(0.2, 0.95) * rho / np.linalg.norm(D)   # Frobenius bounds the operator norm
            path.append(CentralCharge([z + QQi(_rat(D[0, i]), _rat(D[1, i])) for i, z in enumerate(Z0.values)]))
        base = StabilityData(Z0, sig.a, None)
        for k in range(vertices):
            res = transport_charge(base, [V], path[: k + 1], Qf)
            cert = check_support_property(res.data.support, path[k], Qf)
            checks += 1
            walls += set(res.data.support) != set(base.support)
            if not cert.passed:
                bad += 1
                worst = worst or {"support": cert.bad_support, "kernel_negative": cert.kernel_negative}
    rep = SuiteReport("support")
    rep.certificates.append(Certificate("family_form", bad == 0, float(bad),
                                        {"checks": checks, "first_failure": worst}))
    rep.results = {"paths": paths, "checks": checks, "support_changes": walls, "seed": seed}
    return rep


# ---------------------------------------------------------------- 4. cover calculus


@_timed
def covers(k_max: int = 4, max_order: int = 3, random_trials: int = 100, seed: int = 0) -> SuiteReport:
    """Cover calculus: exhaustive over cyclic products, then random truncated pronilpotent systems."""
    from .cover import (BatchedCyclicSystem, CombCyclicCover, Interval, cover_checks, enumerate_covers,
                        random_sector_cover, sectors_to_combinatorial)
    from .lie import TruncationContext
    from .stability import random_stability_data

    rng = np.random.default_rng(seed)
    keys = ("roundtrip", "gauge", "subcover", "steps", "refine")
    fails = {k: 0 for k in keys}
    covers = rows = 0
    # a one-element cyclic set has only empty proper intervals, so k starts at 2
    for k in range(2, k_max + 1):
        system, G = BatchedCyclicSystem.exhaustive(k, max_order)
        g = system.global_split(G)
        for ivs in enumerate_covers(k, k + 1):
            out = cover_checks(system, CombCyclicCover(ivs), g, rng)
            covers += 1
            rows += system.rows
            for key in keys:
                fails[key] += not out[key]
    rfails = {k: 0 for k in keys}
    for _ in range(random_trials):
        sig = random_stability_data(TruncationContext.orthant(2, 4), rng)
        a1, a2 = (math.atan2(float(z.im), float(z.re)) for z in sig.Z.values)
        _, secs = random_sector_cover(rng, r=int(rng.integers(2, 5)), focus=(min(a1, a2) - 0.02, max(a1, a2) + 0.02))
        H, system, kap = sectors_to_combinatorial(secs, sig)
        g = [system.random_element(Interval(i, 1, H.size), rng) for i in range(H.size)]
        out = cover_checks(system, kap, g, rng, ngauge=1)
        for key in keys:
            rfails[key] += not out[key]
    rep = SuiteReport("covers")
    names = {"roundtrip": "bijective", "gauge": "gauge_invariant", "subcover": "subcover_independent",
             "steps": "steps_preserve", "refine": "refine_bijection"}
    for key in keys:
        total = fails[key] + rfails[key]
        rep.certificates.append(Certificate(names[key], total == 0, float(total),
                                            {"exhaustive_failures": fails[key], "random_failures": rfails[key]}))
    rep.results = {"exhaustive_covers": covers, "exhaustive_rows": rows, "random_trials": random_trials}
    return rep


# ---------------------------------------------------------------- 5. connections


@_timed
def hlt(trials: int = 50, M: int = 6, N: int = 6, zdeg: int = 2, seed: int = 0, budget: float = 60.0,
        flat_checks: int = 5) -> SuiteReport:
    """normalize(gauge_apply(h0, standard)) = -h0, i.e. exp(h0)^-1, with vanishing invariants."""
    from .hlt import (AlmostStandardConnection, connection_invariants, flatness_check, gauge_apply, hlt_normalize,
                      random_gauge)

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    wrong = inv_bad = std_bad = flat_bad = 0
    for trial in range(trials):
        n = 1 + trial % 3
        st = AlmostStandardConnection.standard(n, M, N)
        h0 = random_gauge(n, M, st.ctx, rng, zdeg=zdeg)
        nab = gauge_apply(h0, st)
        if trial < flat_checks and not flatness_check(nab).flat:
            flat_bad += 1
        inv_bad += not connection_invariants(nab).vanish
        h, cert = hlt_normalize(nab, check=False)
        wrong += h != -h0.truncate(M)
        back = gauge_apply(h, nab)
        std_bad += not (cert.passed and back.is_standard() and connection_invariants(back).vanish)
    dt = time.perf_counter() - t0
    rep = SuiteReport("hlt")
    rep.certificates.append(Certificate("recovers_inverse", wrong == 0, float(wrong), {"trials": trials}))
    rep.certificates.append(Certificate("invariants_vanish", inv_bad == 0, float(inv_bad)))
    rep.certificates.append(Certificate("standard_after", std_bad == 0, float(std_bad)))
    rep.certificates.append(Certificate("flat_input", flat_bad == 0, float(flat_bad), {"checked": flat_checks}))
    rep.certificates.append(Certificate("runtime", dt < budget, dt, {"budget_s": budget}))
    rep.results = {"trials": trials, "M": M, "N": N, "zdeg": zdeg, "seed": seed}
    return rep


# ---------------------------------------------------------------- 6. Airy instance


AIRY = "x^3/3-x"
AIRY_Z = (-2.0 / 3.0, 2.0 / 3.0)
AIRY_N = ((0, -1), (1, 0))


def airy_stokes():
    from .resurgence import StokesData

    return StokesData(list(AIRY_Z), [list(r) for r in AIRY_N])


@_timed
def airy(K: int = 30, seed: int = 0, budget: float = 300.0) -> SuiteReport:
    """Thimble vs saddle series, Borel pole, Stokes jump and the splitting radius for x^3/3 - x."""
    from .resurgence import (borel, circle_grid, psi_series, rh_split, saddle_expansion, stokes_jump,
                             thimble_integral)

    del seed
    t0 = time.perf_counter()
    rep = SuiteReport("airy")
    S = saddle_expansion(AIRY, 0, K)
    worst = 0.0
    for mag in (1e-3, 2e-3, 5e-3, 1e-2):
        for ang in (-2.5, -1.2, -0.4, 0.3, 1.0, 2.2):
            t = mag * cmath.exp(1j * ang)
            r = thimble_integral(AIRY, 0, t, tol=1e-12)
            ser = S(t, S.optimal_terms(t))
            worst = max(worst, abs(r.mod - ser) / abs(ser))
    rep.certificates.append(Certificate("saddle_vs_thimble", worst < 1e-6, worst, {"threshold": 1e-6}))

    B = borel(S)
    gap = abs(AIRY_Z[1] - AIRY_Z[0])
    near = B.nearest()
    err = abs(near.distance - gap) / gap if near else math.inf
    rep.certificates.append(Certificate("borel_pole", err < 0.01, err,
                                        {"pole": near.location if near else None, "expected_distance": gap}))

    J = stokes_jump(AIRY, 0, 1)
    rep.certificates.append(Certificate("stokes_jump", J.residual < 1e-8 and J.n == AIRY_N[0][1], J.residual,
                                        {"n": J.n, "ratio": J.ratio, "expected_n": AIRY_N[0][1]}))

    sd = airy_stokes()
    radii = []
    for m in (32, 64, 128):
        ts = circle_grid(0.5, m)
        Ms = np.array([psi_series(sd, t, 1.0, 10).matrix for t in ts])
        Is = np.array([[thimble_integral(AIRY, j, t).mod for j in range(2)] for t in ts])
        radii.append(rh_split(ts, Ms, Is).radius)
    drift = max(abs(radii[i + 1] - radii[i]) / radii[i] for i in range(len(radii) - 1))
    rep.certificates.append(Certificate("rh_radius_stable", drift < 0.05 and min(radii) > 0, drift,
                                        {"radii": radii, "grids": [32, 64, 128]}))
    dt = time.perf_counter() - t0
    rep.certificates.append(Certificate("runtime", dt < budget, dt, {"budget_s": budget}))
    rep.results = {"K": K, "saddle_head": S.exact[:4], "borel_poles": [p.to_json() for p in B.stable_poles[:4]],
                   "stokes_multiplier": J.n}
    return rep


# ---------------------------------------------------------------- 7. Psi chains


def psi_oracle(sd, i: int, j: int, t: complex, R: float) -> complex:
    """Depth-one entry by adaptive quadrature along the Stokes ray, real and imaginary parts apart."""
    from scipy.integrate import quad

    dz = sd.z[i] - sd.z[j]
    u = dz / abs(dz)

    def f(x):
        tau = x * u
        return cmath.exp(-dz / tau) * u / (tau - t) if x > 0 else 0j

    pts = sorted({abs(t), 0.1 * R, 0.3 * R})
    pts = [p for p in pts if 0 < p < R]
    re = quad(lambda x: f(x).real, 0, R, points=pts, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    im = quad(lambda x: f(x).imag, 0, R, points=pts, epsabs=1e-15, epsrel=1e-13, limit=400)[0]
    return complex(sd.n[i, j]) / (2j * math.pi) * complex(re, im)


PSI_POINTS = (0.3 * cmath.exp(1.0j), 0.5 * cmath.exp(2.2j), 0.2 * cmath.exp(-0.05j), 0.9 * cmath.exp(3.1j),
              0.6 * cmath.exp(-1.7j))


@_timed
def psi(depth: int = 5, R: float = 1.0, seed: int = 0) -> SuiteReport:
    """Each extra depth of the chain sum stays under its analytic bound; depth one matches quadrature."""
    from .resurgence import psi_series

    del seed
    sd = airy_stokes()
    over, margin = 0, math.inf
    oracle_err = 0.0
    rows = []
    for t in PSI_POINTS:
        res = psi_series(sd, t, R, depth + 1)
        for s in range(1, depth + 1):
            size, bound = res.terms[s], res.bounds[s]    # depth s+1 contribution and its bound
            over += size > bound
            margin = min(margin, bound / size if size else math.inf)
        one = psi_series(sd, t, R, 1).matrix
        for i, j in sd.pairs():
            ex = psi_oracle(sd, i, j, t, R)
            oracle_err = max(oracle_err, abs(one[i, j] - ex))
        rows.append({"t": t, "terms": res.terms, "bounds": res.bounds, "quad_error": res.quad_error})
    rep = SuiteReport("psi")
    rep.certificates.append(Certificate("tail_bound", over == 0, float(over), {"min_bound_ratio": margin}))
    rep.certificates.append(Certificate("depth_one_oracle", oracle_err < 1e-8, oracle_err, {"threshold": 1e-8}))
    rep.results = {"points": rows, "R": R, "depth": depth}
    return rep


# ---------------------------------------------------------------- 8. gluing


@_timed
def ecalle(eps: float = 1e-3, delta: float = 0.5, N: int = 20, seed: int = 0) -> SuiteReport:
    """Gluing solve for f+ = eps z, f- = 0; growth of c_n; exact normal-form check of a conjugated germ."""
    from .resurgence import (EVData, EVGrid, conjugate_germ, ev_formal, ev_normal_form_check, ev_solve,
                             recover_normalizing)

    del seed
    d = EVData([eps], [])
    sol = ev_solve(d, delta)
    fine = ev_solve(d, delta, EVGrid().refined())
    ts = [delta / 5 * q for q in (1, 0.5, 0.2)] + [-delta / 5 * q for q in (1, 0.5, 0.2)] + [0.05j + 0.02]
    scale = max(abs(sol.W(t)) for t in ts)
    drift = max(abs(sol.W(t) - fine.W(t)) for t in ts) / scale
    F = ev_formal(d, sol)
    rep = SuiteReport("ecalle")
    rep.certificates.append(Certificate("solve_residual", sol.residual < 1e-12, sol.residual,
                                        {"iterations": len(sol.history)}))
    rep.certificates.append(Certificate("grid_refinement", drift < 1e-8, drift, {"threshold": 1e-8}))
    rep.certificates.append(Certificate("gevrey_growth", bool(F.growth and F.growth.bounded),
                                        None if F.growth is None else F.growth.A,
                                        {"growth": F.growth.to_json() if F.growth else None}))
    c = [0, 0, 1] + [0] * (N - 2)
    g = conjugate_germ(c, N + 3)
    nf = ev_normal_form_check(c, g, N)
    rec = recover_normalizing(g, N)
    rep.certificates.append(Certificate("normal_form", nf.passed, None, nf.to_json()))
    rep.certificates.append(Certificate("normalizer_recovered", list(rec.c) == [Q(x) for x in c]
                                        and rec.invariant_defect == 0, None, {"c": rec.c[:6]}))
    rep.results = {"eps": eps, "delta": delta, "c": F.moments.coeffs[:8], "fit_rel": F.fit_rel,
                   "side_gap": F.side_gap, "solution": sol.to_json()}
    return rep


# ---------------------------------------------------------------- 9. growth


@_timed
def growth(order: int = 12, seed: int = 0) -> SuiteReport:
    """Planted geometric coefficients give back log r; ray factors of a planted element stay consistent."""
    from .lattice import CentralCharge, Sector
    from .lie import TruncationContext, multiply
    from .stability import (SectorElement, estimate_growth, factorize, factorize_rays, growth_from_coefficients,
                            planted_element)

    del seed
    ctx = TruncationContext.orthant(2, order)
    worst = 0.0
    for r in ("3/2", "1/3", "5", "7/10"):
        want = math.log(float(Q(r)))
        for rep_ in (growth_from_coefficients({(k, 0): Q(r) ** k for k in range(1, order + 1)}),
                     estimate_growth(planted_element((1, 0), (0, 1), Q(r), ctx))):
            worst = max(worst, abs(rep_.slope - want) / abs(want))
    A = multiply(planted_element((1, 0), (0, 1), Q("1/2"), ctx), planted_element((0, 1), (1, 0), Q("1/3"), ctx))
    Z = CentralCharge([QQi(1, 0), QQi(0, 1)])
    whole = estimate_growth(A)
    rays = factorize_rays(A, Z, QQi(-1, 1))
    flags = [estimate_growth(f.element).consistent for f in rays]
    V = Sector.between(QQi(1, 0), QQi(0, 1))
    parts = factorize(SectorElement(V, A), QQi(1, 1), Z)
    flags += [estimate_growth(x).consistent for x in parts]
    rep = SuiteReport("growth")
    rep.certificates.append(Certificate("planted_slope", worst < 0.05, worst, {"threshold": 0.05}))
    rep.certificates.append(Certificate("factors_consistent", whole.consistent and all(flags),
                                        float(flags.count(False)),
                                        {"element_consistent": whole.consistent, "factors": len(flags)}))
    rep.results = {"element": whole.to_json(), "rays": len(rays)}
    return rep


SUITES = {
    "pentagon": pentagon,
    "factorization": factorization,
    "support": support_family,
    "covers": covers,
    "hlt": hlt,
    "airy": airy,
    "psi": psi,
    "ecalle": ecalle,
    "growth": growth,
}


def run(names=None, seed: int = 0, echo=None) -> list[SuiteReport]:
    names = list(SUITES) if names in (None, "all", ["all"]) else list(names)
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or 'all'")
        rep = SUITES[name](seed=seed)
        if echo:
            echo(rep.line())
        out.append(rep)
    return out
