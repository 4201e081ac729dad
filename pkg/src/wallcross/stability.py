"""Stability data: ray elements, sector products, factorization, transport and growth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cmp_to_key, lru_cache

import numpy as np

from .exact import ONE, ZERO, Q, QQi
from .lattice import (
    CentralCharge,
    GeometryError,
    QuadraticForm,
    Sector,
    SupportCertificate,
    angle_of,
    ccw_less,
    check_support_property,
    primitive,
    same_direction,
    sector_contains,
)
from .lie import (
    ConeSeries,
    GradedVectorField,
    GroupElement,
    SkewForm,
    TruncationContext,
    action_series,
    product,
)


class StabilityError(ValueError):
    pass


class TransportError(StabilityError):
    def __init__(self, msg, gamma=None, step=None, s=None):
        super().__init__(msg)
        self.gamma = gamma
        self.step = step
        self.s = s


@lru_cache(maxsize=256)
def _ctx_at(cone, grading, order, mode) -> TruncationContext:
    return TruncationContext(cone, grading, order, mode)


def truncated(ctx: TruncationContext, order: int) -> TruncationContext:
    if order == ctx.order:
        return ctx
    return _ctx_at(ctx.cone, ctx.grading, order, ctx.scalar_mode)


def _to_ctx(v: GradedVectorField, ctx: TruncationContext) -> GradedVectorField:
    return GradedVectorField({g: u for g, u in v.terms.items() if ctx.degree(g) <= ctx.order}, ctx, check=False)


# ---------------------------------------------------------------- data types


@dataclass
class StabilityData:
    Z: CentralCharge
    a: GradedVectorField
    Q: QuadraticForm | None = None
    certificate: SupportCertificate | None = None

    def __post_init__(self):
        if self.Z.n != self.a.ctx.n:
            raise StabilityError("central charge and context have different ranks")
        for g in self.a.terms:
            z = self.Z(g)
            if not z:
                raise StabilityError(f"support vector {g} has Z = 0")
        if self.Q is not None and self.certificate is None:
            self.certificate = check_support_property(self.support, self.Z, self.Q)
            if not self.certificate.passed:
                raise StabilityError(f"support property fails on {self.certificate.bad_support or 'Ker Z'}")

    @property
    def ctx(self) -> TruncationContext:
        return self.a.ctx

    @property
    def support(self) -> list:
        return self.a.support

    def to_json(self) -> dict:
        out = {"Z": [[str(v.re), str(v.im)] if isinstance(v, QQi) else [complex(v).real, complex(v).imag]
                     for v in self.Z.values],
               "a": self.a.to_json()}
        if self.Q is not None:
            out["Q"] = self.Q.to_json()
        return out

    @staticmethod
    def from_json(d: dict) -> "StabilityData":
        Z = CentralCharge([QQi.coerce(v) if isinstance(v[0], str) else complex(*v) for v in d["Z"]])
        a = GradedVectorField.from_json(d["a"])
        Qf = QuadraticForm(d["Q"]) if "Q" in d else None
        return StabilityData(Z, a, Qf)


@dataclass
class RayElement:
    direction: object  # QQi or complex
    element: GroupElement

    @property
    def ray(self) -> Sector:
        return Sector.ray(self.direction)


@dataclass
class SectorElement:
    sector: Sector
    element: GroupElement


# ---------------------------------------------------------------- ordering


def clockwise_key(start):
    """Sort key for directions by clockwise angle from start, in [0, 2pi)."""
    start = start if isinstance(start, QQi) else complex(start)

    def rel(d):
        if isinstance(d, QQi) and isinstance(start, QQi):
            return start * d.conj()
        return complex(start) * complex(d).conjugate()

    def cmp(d1, d2):
        r1, r2 = rel(d1), rel(d2)
        if same_direction(r1, r2):
            return 0
        return -1 if ccw_less(r1, r2) else 1

    return cmp_to_key(cmp)


def _group_directions(vectors, Z):
    groups: list[tuple[object, list]] = []
    for g in vectors:
        z = Z(g)
        if not z:
            raise StabilityError(f"support vector {g} has Z = 0")
        for d, members in groups:
            if same_direction(d, z):
                members.append(g)
                break
        else:
            groups.append((z, [g]))
    return groups


def rays_from_data(sigma: StabilityData, start=QQi(0, 1)) -> list[RayElement]:
    """Ray elements A_l = exp(sum of a(g) over Z(g) in l), clockwise from start."""
    groups = _group_directions(sigma.a.terms, sigma.Z)
    key = clockwise_key(start)
    groups.sort(key=lambda p: key(p[0]))
    ctx = sigma.ctx
    return [RayElement(d, GroupElement(GradedVectorField({g: sigma.a.terms[g] for g in members}, ctx, check=False)))
            for d, members in groups]


def _left_dir(V: Sector):
    if V.exact:
        return V.dir_plus
    return complex(math.cos(V.theta_plus), math.sin(V.theta_plus))


def sector_product(sigma: StabilityData, V: Sector) -> SectorElement:
    """Clockwise product of the ray elements inside V (left boundary outermost)."""
    if not V.admissible:
        raise StabilityError("sector is not admissible")
    rays = [r for r in rays_from_data(sigma, _left_dir(V)) if sector_contains(V, r.direction)]
    if not rays:
        return SectorElement(V, GroupElement.identity(sigma.ctx))
    return SectorElement(V, product([r.element for r in rays]))


# ---------------------------------------------------------------- factorization


def factorize_labeled(A: GroupElement, classify, sort_key) -> list:
    """Unique factors g_c (c in label order) with log g_c supported in class c and prod g_c = A.

    Built degree by degree: the degree-d residual between log A and the log of
    the current product is linear in the new degree-d terms, so each residual
    component goes straight to the factor owning its class.  Labels may appear
    for the first time at any degree (new rays after wall-crossing).
    """
    ctx = A.ctx
    L = A.log
    parts: dict = {}

    def put(g, u):
        c = classify(g)
        if c is None:
            raise StabilityError(f"support vector {g} is not covered by the split")
        parts.setdefault(c, {})[g] = u

    def ordered():
        return sorted(parts, key=sort_key)

    labels = {classify(g) for g in L.terms}
    if None in labels:
        bad = next(g for g in L.terms if classify(g) is None)
        raise StabilityError(f"support vector {bad} is not covered by the split")
    if len(labels) <= 1:
        for g, u in L.terms.items():
            put(g, u)
    else:
        dmax = max(ctx.degree(g) for g in L.terms)
        for d in range(1, dmax + 1):
            cd = truncated(ctx, d)
            current = product([GroupElement(_to_ctx(GradedVectorField(parts[c], ctx, check=False), cd))
                               for c in ordered()]) if parts else GroupElement.identity(cd)
            resid = _to_ctx(L, cd) - current.log
            for g, u in resid.terms.items():
                if cd.degree(g) < d:
                    raise StabilityError("factorization residual at a lower degree (internal error)")
                put(g, u)
    return [(c, GroupElement(GradedVectorField(parts[c], ctx, check=False))) for c in ordered()]


def factorize_ordered(A: GroupElement, classify, nclasses: int) -> list[GroupElement]:
    """Factors for integer classes 0..nclasses-1 (identity where empty)."""
    got = dict(factorize_labeled(A, classify, lambda c: c))
    return [got.get(c, GroupElement.identity(A.ctx)) for c in range(nclasses)]


def direction_label(z):
    """Hashable label of the ray through z != 0."""
    if isinstance(z, QQi):
        den = math.lcm(int(z.re.q), int(z.im.q))
        a, b = int(z.re * den), int(z.im * den)
        g = math.gcd(a, b)
        return (a // g, b // g)
    return round(angle_of(z) % (2 * math.pi), 10)


def label_direction(lab):
    if isinstance(lab, tuple):
        return QQi(lab[0], lab[1])
    return complex(math.cos(lab), math.sin(lab))


def _side(z, l) -> int:
    """0 if z is counterclockwise of l (within a half-turn), 1 on l, 2 clockwise."""
    if same_direction(z, l):
        return 1
    if isinstance(z, QQi) and isinstance(l, QQi):
        c = l.re * z.im - l.im * z.re
        return 0 if c > 0 else 2
    c = (complex(l).conjugate() * complex(z)).imag
    return 0 if c > 0 else 2


def factorize(A: SectorElement, l, Z: CentralCharge):
    """(g_left, g_l, g_right) with g_left g_l g_right = A, split by the ray through l."""
    if not sector_contains(A.sector, l):
        raise StabilityError("splitting ray is not inside the sector")

    def classify(g):
        z = Z(g)
        if not sector_contains(A.sector, z):
            return None
        return _side(z, l)

    left, mid, right = factorize_ordered(A.element, classify, 3)
    return left, mid, right


def factorize_rays(g: GroupElement, Z: CentralCharge, start) -> list[RayElement]:
    """Split g into clockwise ray factors from start."""
    def classify(gamma):
        z = Z(gamma)
        return direction_label(z) if z else None

    key = clockwise_key(start)
    facs = factorize_labeled(g, classify, lambda lab: key(label_direction(lab)))
    return [RayElement(label_direction(c), f) for c, f in facs if not f.is_identity()]


# ---------------------------------------------------------------- transport


@dataclass
class TransportResult:
    data: StabilityData
    representatives: list
    certificate: SupportCertificate | None
    steps: int


def _first_exit(Z0, Z1, V, g, depth=40):
    lo, hi = ZERO, ONE
    for _ in range(depth):
        mid = (lo + hi) / 2
        z = Z0.lerp(Z1, mid)(g)
        if z and sector_contains(V, z):
            lo = mid
        else:
            hi = mid
    return float(hi)


def transport_charge(sigma: StabilityData, cover, Z_path, Q_: QuadraticForm | None = None) -> TransportResult:
    """Hold g_V fixed for each V in cover while Z runs along the path, then refactorize into rays."""
    cover = list(cover)
    path = list(Z_path)
    if not path:
        raise StabilityError("empty path")
    for V in cover:
        if not V.admissible:
            raise StabilityError("cover sector is not admissible")
    Zs = sigma.Z
    owner = {}
    for g in sigma.a.terms:
        hits = [i for i, V in enumerate(cover) if sector_contains(V, Zs(g))]
        if len(hits) != 1:
            raise StabilityError(f"support vector {g} lies in {len(hits)} cover sectors")
        owner[g] = hits[0]
    reps = [sector_product(sigma, V) for V in cover]
    prev = Zs
    for step, Zt in enumerate(path):
        for i, rep in enumerate(reps):
            for g in rep.element.log.terms:
                z = Zt(g)
                if not z or not sector_contains(cover[i], z):
                    s = _first_exit(prev, Zt, cover[i], g)
                    raise TransportError(f"charge of {g} leaves sector {i} at step {step} (s ~ {s:.6g})",
                                         gamma=g, step=step, s=s)
        prev = Zt
    Zend = path[-1]
    terms = {}
    for i, rep in enumerate(reps):
        for r in factorize_rays(rep.element, Zend, _left_dir(cover[i])):
            terms.update(r.element.log.terms)
    a = GradedVectorField(terms, sigma.ctx, check=False)
    Qf = Q_ if Q_ is not None else sigma.Q
    cert = check_support_property(a.support, Zend, Qf) if Qf is not None else None
    new = StabilityData(Zend, a, None)
    new.Q = Qf
    new.certificate = cert
    return TransportResult(new, reps, cert, len(path))


# ---------------------------------------------------------------- Hamiltonian data


def _divisors(k: int):
    return [d for d in range(1, k + 1) if k % d == 0]


def _kernel_coeff(j: int, sign: int):
    # coefficient of {x^(j g), .} in log T_g for T_g: x^m -> x^m (1 + sign x^g)^<g,m>,
    # reported against the generator sign-adjusted so that sign=-1 gives 1/j^2
    if sign == 1:
        return Q((-1) ** (j + 1)) / (j * j)
    return ONE / (j * j)


def mobius_transform(omega: dict, kmax: int, sign: int = 1) -> dict:
    """Omega(d g0) -> b_k with log prod_d T_{d g0}^{Omega} = sum_k b_k s {x^(k g0), .}.

    sign=+1 uses (1 + x^g) and s = 1; sign=-1 uses (1 - x^g) and s = -1, where the
    coefficients reduce to b_k = sum_{d|k} Omega(d)(d/k)^2.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    b = {}
    for k in range(1, kmax + 1):
        s = ZERO
        for d in _divisors(k):
            w = omega.get(d, 0)
            if w:
                s += Q(w) * _kernel_coeff(k // d, sign)
        if s:
            b[k] = s
    return b


def inverse_mobius(b: dict, kmax: int, sign: int = 1, integral: bool = True) -> dict:
    """Triangular divisor solve recovering Omega from b."""
    om = {}
    for k in range(1, kmax + 1):
        s = Q(b.get(k, 0))
        for d in _divisors(k)[:-1]:
            if om.get(d):
                s -= om[d] * _kernel_coeff(k // d, sign)
        if s:
            if integral and s.q != 1:
                raise StabilityError(f"Omega({k}) = {s} is not an integer")
            om[k] = int(s.p) if integral else s
    return om


def hamiltonian_components(b: dict, g0, omega: SkewForm, ctx: TruncationContext, sign: int = 1) -> GradedVectorField:
    """a(k g0) = sign * b_k * <k g0, .> as covectors."""
    terms = {}
    for k, c in b.items():
        g = tuple(k * x for x in g0)
        if ctx.degree(g) > ctx.order:
            continue
        terms[g] = tuple(Q(sign) * c * x for x in omega.covector(g))
    return GradedVectorField(terms, ctx)


def data_from_dt(Z: CentralCharge, dt: dict, omega: SkewForm, ctx: TruncationContext,
                 Q_: QuadraticForm | None = None, sign: int = 1) -> StabilityData:
    """Stability data from invariants Omega(g) (Hamiltonian case)."""
    by_prim: dict = {}
    for g, w in dt.items():
        g = tuple(g)
        p = primitive(g)
        k = next(g[i] // p[i] for i in range(len(g)) if p[i])
        by_prim.setdefault(p, {})[k] = by_prim.setdefault(p, {}).get(k, 0) + w
    a = GradedVectorField.zero(ctx)
    for p, om in by_prim.items():
        kmax = ctx.order // max(ctx.degree(p), 1)
        a = a + hamiltonian_components(mobius_transform(om, kmax, sign), p, omega, ctx, sign)
    return StabilityData(Z, a, Q_)


# ---------------------------------------------------------------- growth


@dataclass
class GrowthReport:
    R_hat: float
    slope: float
    slope_low: float
    slope_high: float
    levels: list = field(default_factory=list)
    consistent: bool = True
    trivial: bool = False

    def to_json(self) -> dict:
        return {"R_hat": self.R_hat, "slope": self.slope, "slope_low": self.slope_low,
                "slope_high": self.slope_high, "levels": self.levels,
                "consistent": self.consistent, "trivial": self.trivial}


def _norm(mu, norm) -> float:
    if norm == "l1":
        return float(sum(abs(x) for x in mu))
    if norm == "l2":
        return float(math.sqrt(sum(x * x for x in mu)))
    if norm == "linf":
        return float(max(abs(x) for x in mu))
    return float(norm(mu))


def _fit(ks, ys) -> float:
    if len(ks) < 2:
        return float("nan")
    return float(np.polyfit(np.asarray(ks, float), np.asarray(ys, float), 1)[0])


def growth_from_coefficients(coeffs: dict, norm="l1", tol: float = 0.1) -> GrowthReport:
    """Exponential-bound diagnostics for coefficients c_mu, mu != 0.

    M_k is the largest |c_mu| with ||mu|| = k; the slope of log M_k against k
    estimates log R.  Bound-consistent means the slope has settled over the top
    half of the levels: the fit over its upper part exceeds the fit over its
    lower part by at most tol (relative).  The windows run on the maximum of
    each pair of adjacent levels, which fills the parity dips that supports on
    a sublattice produce.  Factorial growth keeps steepening (local slope
    ~ log k) and fails; geometric growth with polynomial prefactors passes.
    """
    best: dict = {}
    R = 0.0
    for mu, c in coeffs.items():
        if not any(mu):
            continue
        a = abs(complex(c)) if not hasattr(c, "p") else abs(float(c))
        if a == 0:
            continue
        k = _norm(mu, norm)
        R = max(R, a ** (1.0 / k))
        best[k] = max(best.get(k, 0.0), a)
    if not best:
        return GrowthReport(0.0, float("-inf"), float("-inf"), float("-inf"), [], True, True)
    ks = sorted(best)
    ys = [math.log(best[k]) for k in ks]
    slope = _fit(ks, ys)
    env = [max(ys[i: i + 2]) for i in range(len(ys) - 1)]
    top = list(range(len(env) // 2, len(env)))
    if len(top) < 4:
        lo = hi = slope
        consistent = True
    else:
        mid = top[len(top) // 2]
        lo = _fit(ks[top[0]: mid + 1], env[top[0]: mid + 1])
        hi = _fit(ks[mid: len(env)], env[mid:])
        consistent = bool(hi <= lo + tol * max(1.0, abs(slope)))
    return GrowthReport(R, slope, lo, hi, [[k, best[k]] for k in ks], consistent, False)


def estimate_growth(A, norm="l1", tol: float = 0.1) -> GrowthReport:
    """Growth report for the action series A(x^(e_i)) / x^(e_i) over all basis i."""
    g = A.element if hasattr(A, "element") else A
    if g.is_identity():
        return GrowthReport(0.0, float("-inf"), float("-inf"), float("-inf"), [], True, True)
    coeffs = {}
    for i in range(g.ctx.n):
        s = action_series(g, i)
        for mu, c in s.terms.items():
            if any(mu):
                prev = coeffs.get(mu)
                if prev is None or abs(complex(prev)) < abs(complex(c)):
                    coeffs[mu] = c
    return growth_from_coefficients(coeffs, norm, tol)


def planted_element(g0, u, r, ctx: TruncationContext) -> GroupElement:
    """exp(sum_k r^k/k x^(k g0) D_u); with u(g0) = 0 it sends x^m to x^m (1 - r x^g0)^(-u(m))."""
    terms = {}
    k = 1
    r = Q(r)
    while ctx.degree(tuple(k * x for x in g0)) <= ctx.order:
        terms[tuple(k * x for x in g0)] = tuple(r ** k / k * Q(x) for x in u)
        k += 1
    return GroupElement(GradedVectorField(terms, ctx))


# ---------------------------------------------------------------- random data


def random_charge(n: int, rng, spread: int = 4) -> CentralCharge:
    """Gaussian-integer charge with Z(e_i) in the open upper half-plane."""
    vals = []
    for _ in range(n):
        re = int(rng.integers(-spread, spread + 1))
        im = int(rng.integers(1, spread + 1))
        vals.append(QQi(re, im))
    return CentralCharge(vals)


def random_stability_data(ctx: TruncationContext, rng, nsupport: int = 4, max_degree: int = 3,
                          Z: CentralCharge | None = None) -> StabilityData:
    """Random data on the positive orthant with a certified quadratic form."""
    from .lattice import family_support_form

    n = ctx.n
    Z = Z or random_charge(n, rng)
    pts = [g for g in ctx.points if ctx.degree(g) <= max_degree]
    idx = rng.choice(len(pts), size=min(nsupport, len(pts)), replace=False)
    terms = {}
    for i in idx:
        terms[pts[int(i)]] = tuple(Q(int(rng.integers(-3, 4))) / int(rng.integers(1, 4)) for _ in range(n))
    a = GradedVectorField(terms, ctx)
    eps = ONE
    Qf = None
    for _ in range(40):
        Qf = family_support_form(Z, eps)
        if all(Qf(g) >= 0 for g in ctx.points):
            break
        eps /= 2
    return StabilityData(Z, a, Qf)
