"""Almost standard non-linear connections, their invariants and formal normalization.

Vertical vector fields on the torus are sums z^gamma D_u with D_u = sum_i u_i z_i d/dz_i,
where the u_i are exact polynomials in the central charge coordinates Z_1..Z_n
(variables Z0..Z{n-1} of a flint fmpq_mpoly context).  A connection is kept as
t-Laurent series of such fields, one for d/dt and one for each d/dZ_j:

    nabla_t   = d/dt + t^-2 sum_i Z_i z_i d/dz_i + sum_{m >= -1} t^m v_m
    nabla_j   = d/dZ_j - t^-1 z_j d/dz_j       + sum_{m >= 0}  t^m w_m^(j)

Gauge transformations h = sum_{k >= 1} t^k h_k act by nabla -> exp(-ad h) nabla.
With this sign the t^-1 coefficient of nabla_t moves by S_0(h_1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import flint

from .exact import Q, qstr
from .lie import TruncationContext

fmpq = flint.fmpq


class HLTError(ValueError):
    pass


class ResonanceError(HLTError):
    def __init__(self, gamma, msg="resonant direction"):
        super().__init__(f"{msg}: Z({gamma}) vanishes")
        self.gamma = gamma


@lru_cache(maxsize=None)
def poly_ring(n: int):
    return flint.fmpq_mpoly_ctx.get(("Z", n))


def zgen(n: int, i: int):
    return poly_ring(n).gens()[i]


def _zero(n):
    return poly_ring(n).from_dict({})


def charge_poly(gamma, n: int):
    """Z(gamma) = sum_i gamma_i Z_i as a polynomial."""
    C = poly_ring(n)
    return C.from_dict({tuple(int(i == j) for j in range(n)): fmpq(int(g)) for i, g in enumerate(gamma) if g})


# ---------------------------------------------------------------- vertical fields


class PolyField:
    """Sparse vertical field {gamma: (u_1..u_n)} with polynomial coefficients in Z."""

    __slots__ = ("terms", "n")

    def __init__(self, terms, n: int):
        self.n = n
        self.terms = {}
        for g, u in terms.items():
            u = tuple(u)
            if len(u) != n:
                raise HLTError("coefficient vector has the wrong length")
            if any(not p.is_zero() for p in u):
                self.terms[tuple(int(x) for x in g)] = u

    @staticmethod
    def zero(n):
        return PolyField({}, n)

    @staticmethod
    def euler(coeffs, n):
        """Degree-0 field sum_i c_i z_i d/dz_i."""
        C = poly_ring(n)
        return PolyField({(0,) * n: tuple(C.from_dict({}) + c for c in coeffs)}, n)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        return isinstance(other, PolyField) and self.terms == other.terms

    def __add__(self, other):
        out = dict(self.terms)
        for g, v in other.terms.items():
            if g in out:
                out[g] = tuple(a + b for a, b in zip(out[g], v))
            else:
                out[g] = v
        return PolyField(out, self.n)

    def __neg__(self):
        return PolyField({g: tuple(-a for a in u) for g, u in self.terms.items()}, self.n)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = Q(c) if not isinstance(c, flint.fmpq_mpoly) else c
        return PolyField({g: tuple(a * c for a in u) for g, u in self.terms.items()}, self.n)

    def degree_zero(self) -> "PolyField":
        z = (0,) * self.n
        return PolyField({z: self.terms[z]} if z in self.terms else {}, self.n)

    def nonzero_degree(self) -> "PolyField":
        z = (0,) * self.n
        return PolyField({g: u for g, u in self.terms.items() if g != z}, self.n)

    def d_Z(self, j: int) -> "PolyField":
        return PolyField({g: tuple(a.derivative(j) for a in u) for g, u in self.terms.items()}, self.n)

    def S(self, j: int) -> "PolyField":
        """S_0 multiplies the gamma-part by Z(gamma); S_j (j >= 1) by gamma_j."""
        if j == 0:
            return PolyField({g: tuple(a * charge_poly(g, self.n) for a in u)
                              for g, u in self.terms.items()}, self.n)
        return PolyField({g: tuple(a * g[j - 1] for a in u) for g, u in self.terms.items()}, self.n)

    def max_zdegree(self) -> int:
        return max((a.total_degree() for u in self.terms.values() for a in u), default=0)

    def to_json(self) -> list:
        return [{"gamma": list(g), "u": [_poly_json(a) for a in u]} for g, u in sorted(self.terms.items())]

    @staticmethod
    def from_json(d, n: int) -> "PolyField":
        return PolyField({tuple(int(x) for x in e["gamma"]): tuple(_poly_from_json(a, n) for a in e["u"]) for e in d}, n)

    def __repr__(self):
        return f"PolyField({len(self.terms)} terms)"


def _poly_json(p) -> list:
    return [[[int(e) for e in m], qstr(c)] for m, c in sorted(p.to_dict().items())]


def _poly_from_json(d, n):
    return poly_ring(n).from_dict({tuple(int(e) for e in m): Q(c) for m, c in d})


def _allowed(g, ctx: TruncationContext) -> bool:
    return not any(g) or ctx.in_truncation(g)


def field_bracket(a: PolyField, b: PolyField, ctx: TruncationContext) -> PolyField:
    """[z^g D_u, z^m D_v] = z^(g+m) (u(m) D_v - v(g) D_u), truncated to ctx."""
    n = a.n
    out: dict = {}
    for g, u in a.terms.items():
        for m, v in b.terms.items():
            s = tuple(x + y for x, y in zip(g, m))
            if not _allowed(s, ctx):
                continue
            um = None
            for i in range(n):
                if m[i]:
                    um = u[i] * m[i] if um is None else um + u[i] * m[i]
            vg = None
            for i in range(n):
                if g[i]:
                    vg = v[i] * g[i] if vg is None else vg + v[i] * g[i]
            if um is None and vg is None:
                continue
            comp = []
            for i in range(n):
                c = um * v[i] if um is not None else None
                if vg is not None:
                    c = -(vg * u[i]) if c is None else c - vg * u[i]
                comp.append(c)
            if s in out:
                out[s] = [x + y for x, y in zip(out[s], comp)]
            else:
                out[s] = comp
    return PolyField(out, n)


# ---------------------------------------------------------------- t-series of fields


def series_add(A: dict, B: dict) -> dict:
    out = dict(A)
    for m, f in B.items():
        out[m] = out[m] + f if m in out else f
    return {m: f for m, f in out.items() if f}


def series_scale(A: dict, c) -> dict:
    return {m: f.scale(c) for m, f in A.items()}


def series_bracket(A: dict, B: dict, ctx: TruncationContext, max_order: int) -> dict:
    out: dict = {}
    for a, fa in A.items():
        for b, fb in B.items():
            if a + b > max_order:
                continue
            r = field_bracket(fa, fb, ctx)
            if r:
                out[a + b] = out[a + b] + r if a + b in out else r
    return {m: f for m, f in out.items() if f}


def series_equal(A: dict, B: dict, orders) -> bool:
    return all(A.get(m, None) == B.get(m, None) or (not A.get(m) and not B.get(m)) for m in orders)


# ---------------------------------------------------------------- connections


@dataclass
class AlmostStandardConnection:
    """nabla_t and nabla_j beyond their fixed polar parts, truncated at t^M and degree N.

    v: {m: field} for m = -1..M;  w: {(j, m): field} for j = 1..n, m = 0..M.
    """

    n: int
    M: int
    ctx: TruncationContext
    v: dict = field(default_factory=dict)
    w: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ctx.n != self.n:
            raise HLTError("grading context rank differs from the connection rank")
        for m in self.v:
            if not -1 <= m <= self.M:
                raise HLTError(f"v has a term at t^{m}, outside -1..M")
        for j, m in self.w:
            if not (1 <= j <= self.n and 0 <= m <= self.M):
                raise HLTError(f"w has a term at direction {j}, t^{m}")
        self.v = {m: f for m, f in self.v.items() if f}
        self.w = {k: f for k, f in self.w.items() if f}
        for f in list(self.v.values()) + list(self.w.values()):
            for g in f.terms:
                if not _allowed(g, self.ctx):
                    raise HLTError(f"support {g} lies outside the truncation")

    @staticmethod
    def standard(n: int, M: int, N: int) -> "AlmostStandardConnection":
        return AlmostStandardConnection(n, M, TruncationContext.orthant(n, N))

    @property
    def N(self) -> int:
        return self.ctx.order

    def is_standard(self) -> bool:
        return not self.v and not self.w

    # full vertical parts including the fixed polar terms
    def vertical_t(self) -> dict:
        E = PolyField.euler([zgen(self.n, i) for i in range(self.n)], self.n)
        return series_add({-2: E}, self.v)

    def vertical_j(self, j: int) -> dict:
        C = poly_ring(self.n)
        coeffs = [C.from_dict({}) - (1 if i == j - 1 else 0) for i in range(self.n)]
        lead = {-1: PolyField.euler(coeffs, self.n)}
        return series_add(lead, {m: f for (jj, m), f in self.w.items() if jj == j})

    @staticmethod
    def from_verticals(n, M, ctx, Ft: dict, Fj: list) -> "AlmostStandardConnection":
        st = AlmostStandardConnection(n, M, ctx)
        v = series_add(Ft, series_scale({-2: st.vertical_t()[-2]}, -1))
        w = {}
        for j in range(1, n + 1):
            d = series_add(Fj[j - 1], series_scale({-1: st.vertical_j(j)[-1]}, -1))
            for m, f in d.items():
                if m < 0:
                    raise HLTError("gauge action changed a fixed polar term (internal error)")
                w[(j, m)] = f
        if any(m < -1 for m in v):
            raise HLTError("gauge action changed a fixed polar term (internal error)")
        return AlmostStandardConnection(n, M, ctx, {m: f for m, f in v.items() if m <= M},
                                        {k: f for k, f in w.items() if k[1] <= M})

    def __eq__(self, other):
        return (isinstance(other, AlmostStandardConnection) and self.n == other.n and self.M == other.M
                and self.v == other.v and self.w == other.w)

    def to_json(self) -> dict:
        return {"rank": self.n, "M": self.M, "N": self.N,
                "v": [{"m": m, "field": f.to_json()} for m, f in sorted(self.v.items())],
                "w": [{"j": j, "m": m, "field": f.to_json()} for (j, m), f in sorted(self.w.items())]}

    @staticmethod
    def from_json(d: dict) -> "AlmostStandardConnection":
        n = int(d["rank"])
        ctx = TruncationContext.orthant(n, int(d["N"]))
        v = {int(e["m"]): PolyField.from_json(e["field"], n) for e in d.get("v", [])}
        w = {(int(e["j"]), int(e["m"])): PolyField.from_json(e["field"], n) for e in d.get("w", [])}
        return AlmostStandardConnection(n, int(d["M"]), ctx, v, w)


def s_operators(Z, gamma, j: int):
    """Multiplier of S_0 (j = 0: Z(gamma)) or S_j (gamma_j) on the gamma-component."""
    if j == 0:
        return sum(g * z for g, z in zip(gamma, Z))
    return gamma[j - 1]


# ---------------------------------------------------------------- invariants


@dataclass
class ConnectionInvariants:
    delta: list
    alpha: list          # alpha[i][j] = a_{i+1, j+1}
    residues: dict       # (i, j1, j2) -> d_{Z_j1} a_{i j2} - d_{Z_j2} a_{i j1}

    @property
    def vanish(self) -> bool:
        return all(p.is_zero() for p in self.delta) and all(p.is_zero() for r in self.alpha for p in r)

    @property
    def closed(self) -> bool:
        return all(p.is_zero() for p in self.residues.values())

    def to_json(self) -> dict:
        return {"delta": [_poly_json(p) for p in self.delta],
                "alpha": [[_poly_json(p) for p in r] for r in self.alpha],
                "closed": self.closed}


def connection_invariants(nabla: AlmostStandardConnection) -> ConnectionInvariants:
    n = nabla.n
    z = (0,) * n
    zero = _zero(n)
    v1 = nabla.v.get(-1, PolyField.zero(n))
    delta = list(v1.terms.get(z, (zero,) * n))
    alpha = [[zero] * n for _ in range(n)]
    for j in range(1, n + 1):
        f = nabla.w.get((j, 0), PolyField.zero(n))
        for i, p in enumerate(f.terms.get(z, (zero,) * n)):
            alpha[i][j - 1] = p
    res = {}
    for i in range(n):
        for j1 in range(n):
            for j2 in range(j1 + 1, n):
                res[(i + 1, j1 + 1, j2 + 1)] = alpha[i][j2].derivative(j1) - alpha[i][j1].derivative(j2)
    return ConnectionInvariants(delta, alpha, res)


# ---------------------------------------------------------------- flatness


@dataclass
class FlatnessReport:
    flat: bool
    checked: dict            # pair -> highest t-order that the truncation determines
    defects: list            # (pair, t-order, gamma) of nonzero commutator terms
    max_residual: float

    @property
    def first_defect(self):
        return min(self.defects, key=lambda d: d[1]) if self.defects else None

    def to_json(self) -> dict:
        return {"flat": self.flat, "max_residual": self.max_residual,
                "checked": {f"{a},{b}": m for (a, b), m in self.checked.items()},
                "defects": [{"pair": list(p), "m": m, "gamma": list(g)} for p, m, g in self.defects[:50]]}


def _d_t(F: dict) -> dict:
    return {m - 1: f.scale(m) for m, f in F.items() if m != 0}


def _d_Z(F: dict, j: int) -> dict:
    return {m: f.d_Z(j - 1) for m, f in F.items()}


def _poly_size(p) -> float:
    return max((abs(float(c)) for c in p.coeffs()), default=0.0)


def flatness_check(nabla: AlmostStandardConnection) -> FlatnessReport:
    """All commutators [nabla_a, nabla_b] for a, b in {t, 1..n}, up to the orders fixed by truncation."""
    n, M, ctx = nabla.n, nabla.M, nabla.ctx
    F = {"t": nabla.vertical_t()}
    for j in range(1, n + 1):
        F[j] = nabla.vertical_j(j)
    dirs = ["t"] + list(range(1, n + 1))

    def d(a, S):
        return _d_t(S) if a == "t" else _d_Z(S, a)

    checked, defects, worst = {}, [], 0.0
    for x in range(len(dirs)):
        for y in range(x + 1, len(dirs)):
            a, b = dirs[x], dirs[y]
            top = M - 2 if a == "t" else M - 1
            comm = series_add(series_add(d(a, F[b]), series_scale(d(b, F[a]), -1)),
                              series_bracket(F[a], F[b], ctx, top))
            checked[(a, b)] = top
            for m, f in sorted(comm.items()):
                if m > top:
                    continue
                for g, u in f.terms.items():
                    defects.append(((a, b), m, g))
                    worst = max(worst, max(_poly_size(p) for p in u))
    return FlatnessReport(not defects, checked, defects, worst)


# ---------------------------------------------------------------- gauge transformations


@dataclass
class GaugeElement:
    """h = sum_{k >= 1} t^k h_k."""

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(k < 1 for k in self.terms):
            raise HLTError("gauge elements have no t^0 or polar terms")
        self.terms = {k: f for k, f in self.terms.items() if f}

    def __neg__(self):
        return GaugeElement(self.n, {k: -f for k, f in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, GaugeElement) and self.terms == other.terms

    def truncate(self, M: int) -> "GaugeElement":
        return GaugeElement(self.n, {k: f for k, f in self.terms.items() if k <= M})

    def is_zero(self) -> bool:
        return not self.terms

    def to_json(self) -> dict:
        return {"rank": self.n, "h": [{"k": k, "field": f.to_json()} for k, f in sorted(self.terms.items())]}

    @staticmethod
    def from_json(d: dict) -> "GaugeElement":
        n = int(d["rank"])
        return GaugeElement(n, {int(e["k"]): PolyField.from_json(e["field"], n) for e in d["h"]})


def _exp_minus_ad(h: dict, base_deriv: dict, F: dict, ctx, top: int) -> dict:
    """exp(-ad h)(base + F) minus the base: F + (d_base h - [h, F]) + sum_p (-ad h)^p / p!."""
    cur = series_add({m: f for m, f in base_deriv.items() if m <= top},
                     series_scale(series_bracket(h, F, ctx, top), -1))
    total = series_add({m: f for m, f in F.items() if m <= top}, cur)
    p = 1
    while cur:
        p += 1
        cur = series_scale(series_bracket(h, cur, ctx, top), Q(-1) / p)
        total = series_add(total, cur)
    return total


def gauge_apply(h: GaugeElement, nabla: AlmostStandardConnection, top: int | None = None) -> AlmostStandardConnection:
    """exp(-ad h) applied to every lifted direction, truncated at t^top (default M)."""
    n, ctx = nabla.n, nabla.ctx
    M = nabla.M if top is None else min(top, nabla.M)
    if h.n != n:
        raise HLTError("gauge rank differs from the connection rank")
    H = {k: PolyField({g: u for g, u in f.terms.items() if _allowed(g, ctx)}, n) for k, f in h.terms.items()}
    Ft = _exp_minus_ad(H, _d_t(H), nabla.vertical_t(), ctx, M)
    Fj = [_exp_minus_ad(H, _d_Z(H, j), nabla.vertical_j(j), ctx, M) for j in range(1, n + 1)]
    return AlmostStandardConnection.from_verticals(n, M, ctx, Ft, Fj)


# ---------------------------------------------------------------- normalization


@dataclass
class NormalizationCertificate:
    standard_at: dict        # which orders of gauge_apply(h, nabla) were compared with the standard form
    passed: bool
    fully_standard: bool     # also the orders beyond those the truncation determines
    min_abs_charge: float | None

    def to_json(self) -> dict:
        return {"passed": self.passed, "fully_standard": self.fully_standard,
                "standard_at": self.standard_at, "min_abs_charge": self.min_abs_charge}


def _divide_charge(r: PolyField, sign: int) -> PolyField:
    out = {}
    for g, u in r.terms.items():
        zg = charge_poly(g, r.n)
        comps = []
        for a in u:
            q, rem = divmod(a, zg)
            if not rem.is_zero():
                raise HLTError(f"component at {g} is not divisible by Z({g}); the connection is not flat")
            comps.append(q * sign)
        out[g] = tuple(comps)
    return PolyField(out, r.n)


def _divide_gamma(r: dict, n: int) -> PolyField:
    """Solve S_j(x) = w^(j) using, per gamma, the first j with gamma_j != 0."""
    out = {}
    gammas = set()
    for f in r.values():
        gammas |= set(f.terms)
    for g in gammas:
        j = next(i for i in range(n) if g[i])
        u = r[j + 1].terms.get(g) if (j + 1) in r else None
        if u is not None:
            out[g] = tuple(a * (Q(1) / g[j]) for a in u)
    return PolyField(out, n)


def hlt_normalize(nabla: AlmostStandardConnection, method: str = "s0", check: bool = True,
                  Z0=None) -> tuple[GaugeElement, NormalizationCertificate]:
    """The unique h with gauge_apply(h, nabla) standard, built one power of t at a time.

    At step k the current connection is gauge_apply(h_{<k}, nabla).  The
    nonzero-degree part of h_k solves S_0(h_k) = -v_{k-2} (method "s0") or
    S_j(h_k) = w^(j)_{k-1} (method "sj"); the degree-zero part, which commutes
    with everything, is -v_{k-1}/k from the t-derivative of t^k h_k.
    """
    n, M = nabla.n, nabla.M
    inv = connection_invariants(nabla)
    if not inv.vanish:
        raise HLTError("delta or alpha does not vanish; no gauge to the standard connection")
    if check:
        rep = flatness_check(nabla)
        if not rep.flat:
            raise HLTError(f"connection is not flat at truncation (first defect {rep.first_defect})")
    min_abs = None
    if Z0 is not None:
        support = {g for f in list(nabla.v.values()) + list(nabla.w.values()) for g in f.terms if any(g)}
        vals = {g: abs(complex(sum(x * complex(z) for x, z in zip(g, Z0)))) for g in support}
        for g, a in vals.items():
            if a == 0:
                raise ResonanceError(g)
        min_abs = min(vals.values()) if vals else None
    h = GaugeElement(n)
    zero = PolyField.zero(n)
    for k in range(1, M + 1):
        cur = gauge_apply(h, nabla, top=k - 1)
        if method == "s0":
            hk = _divide_charge(cur.v.get(k - 2, zero).nonzero_degree(), -1)
        elif method == "sj":
            hk = _divide_gamma({j: cur.w.get((j, k - 1), zero).nonzero_degree() for j in range(1, n + 1)}, n)
        else:
            raise HLTError(f"unknown method {method!r}")
        hk = hk + cur.v.get(k - 1, zero).degree_zero().scale(Q(-1) / k)
        if hk:
            h = GaugeElement(n, {**h.terms, k: hk})
    out = gauge_apply(h, nabla)
    det_v = list(range(-1, M - 1))
    det_w = [(j, m) for j in range(1, n + 1) for m in range(0, M)]
    ok = all(not out.v.get(m) for m in det_v) and not out.v.get(M - 1, zero).degree_zero() \
        and all(not out.w.get(key) for key in det_w)
    cert = NormalizationCertificate({"v": [-1, M - 2], "v_degree_zero": M - 1, "w": [0, M - 1]},
                                    ok, out.is_standard(), min_abs)
    if not ok:
        raise HLTError("normalization left a nonzero term at a determined order (internal error)")
    return h, cert


# ---------------------------------------------------------------- random data


def random_poly(n: int, rng, zdeg: int = 2, nterms: int = 2, max_num: int = 3, max_den: int = 2):
    C = poly_ring(n)
    d = {}
    for _ in range(nterms):
        e = [0] * n
        for _ in range(int(rng.integers(0, zdeg + 1))):
            e[int(rng.integers(0, n))] += 1
        d[tuple(e)] = d.get(tuple(e), fmpq(0)) + fmpq(int(rng.integers(-max_num, max_num + 1)),
                                                         int(rng.integers(1, max_den + 1)))
    return C.from_dict({m: c for m, c in d.items() if c != 0})


def random_gauge(n: int, M: int, ctx: TruncationContext, rng, zdeg: int = 2, terms_per_order: int = 2,
                 degree_zero: bool = True) -> GaugeElement:
    pts = [g for g in ctx.points if any(g)]
    if degree_zero:
        pts = [(0,) * n] + pts
    out = {}
    for k in range(1, M + 1):
        f = {}
        for _ in range(terms_per_order):
            g = pts[int(rng.integers(0, len(pts)))]
            f[g] = tuple(random_poly(n, rng, zdeg, nterms=1) for _ in range(n))
        out[k] = PolyField(f, n)
    return GaugeElement(n, out)


def perturb(nabla: AlmostStandardConnection, m: int, f: PolyField, direction="t") -> AlmostStandardConnection:
    """Add a planted term t^m f to nabla_t (or nabla_j)."""
    if direction == "t":
        v = dict(nabla.v)
        v[m] = v[m] + f if m in v else f
        return AlmostStandardConnection(nabla.n, nabla.M, nabla.ctx, v, dict(nabla.w))
    w = dict(nabla.w)
    key = (int(direction), m)
    w[key] = w[key] + f if key in w else f
    return AlmostStandardConnection(nabla.n, nabla.M, nabla.ctx, dict(nabla.v), w)


def evaluate(f: PolyField, Z0) -> dict:
    """Numeric coefficients of a field at the point Z0 (second, non-exact mode)."""
    vals = [complex(z) for z in Z0]

    def ev(p):
        return sum(complex(float(c)) * math.prod(v ** e for v, e in zip(vals, m)) for m, c in p.to_dict().items())

    return {g: tuple(ev(p) for p in u) for g, u in f.terms.items()}
