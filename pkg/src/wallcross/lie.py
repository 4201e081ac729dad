"""Truncated graded Lie algebra of torus vector fields and its pronilpotent group.

A field is a finite sum of x^g D_u with D_u(x^m) = u(m) x^m; the group element
exp(v) acts on monomials as the exponential of the derivation.  Elements are
stored by their logs.  Composition and logs are computed with exact matrices of
the derivation on the spaces span{x^(nu + b) : b in the truncation}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import flint
import numpy as np

from .exact import ONE, ZERO, Q, QQi, qstr
from .lattice import RationalCone

MODES = ("exact", "gaussian", "complex")


class ContextError(ValueError):
    pass


# ---------------------------------------------------------------- scalar backends
#
# Each backend supplies derivation matrices, coefficient vectors and exp(D) v.
# The exact backend keeps integer matrices over one common denominator and
# vectors as (integer column, denominator); integer products are much faster
# than rational ones in flint.


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


class _ExactBackend:
    zero = ZERO
    one = ONE

    @staticmethod
    def coerce(x):
        return Q(x)

    @staticmethod
    def matrices(P, ents):
        den = 1
        for e in ents:
            for x in e.values():
                den = _lcm(den, int(x.q))
        out = []
        for e in ents:
            data = [0] * (P * P)
            for (r, c), x in e.items():
                data[r * P + c] = int(x.p) * (den // int(x.q))
            out.append((flint.fmpz_mat(P, P, data), den))
        return out

    @staticmethod
    def combine(mats, coeffs):
        out = None
        for (M, d), c in zip(mats, coeffs):
            if c:
                t = M if c == 1 else M * int(c)
                out = t if out is None else out + t
        if out is None:
            P = mats[0][0].nrows()
            out = flint.fmpz_mat(P, P)
        return (out, mats[0][1])

    @staticmethod
    def unit(P, i=0):
        v = flint.fmpz_mat(P, 1)
        v[i, 0] = 1
        return (v, 1)

    @staticmethod
    def get(v, i):
        return flint.fmpq(v[0][i, 0], v[1])

    @staticmethod
    def _reduce(num, den):
        g = den
        for x in num.entries():
            if g == 1:
                return (num, den)
            if x:
                g = math.gcd(g, int(x))
        if g == 1:
            return (num, den)
        P = num.nrows()
        return (flint.fmpz_mat(P, 1, [int(x) // g for x in num.entries()]), den // g)

    @classmethod
    def add(cls, v, w):
        l = _lcm(v[1], w[1])
        a = v[0] if l == v[1] else v[0] * (l // v[1])
        b = w[0] if l == w[1] else w[0] * (l // w[1])
        return cls._reduce(a + b, l)

    @classmethod
    def sub(cls, v, w):
        return cls.add(v, (-w[0], w[1]))

    @classmethod
    def scale(cls, v, c):
        c = Q(c)
        return cls._reduce(v[0] * int(c.p), v[1] * int(c.q))

    @classmethod
    def exp_apply(cls, M, v, nterms, sign=1):
        """sum_{j<=nterms} (sign D)^j v / j! over a common denominator."""
        Mz, d = M
        num, s = v
        # term j carries weight nterms!/j! * d^(nterms-j)
        weights = [1] * (nterms + 1)
        for j in range(nterms - 1, -1, -1):
            weights[j] = weights[j + 1] * (j + 1) * d
        acc = num * weights[0]
        u = num
        for j in range(1, nterms + 1):
            u = Mz * u
            if u.is_zero():
                break
            acc = acc + u * (weights[j] * sign ** j)
        return cls._reduce(acc, s * weights[0])


class _GaussBackend:
    zero = QQi(0, 0)
    one = QQi(1, 0)

    @staticmethod
    def coerce(x):
        return QQi.coerce(x)

    @staticmethod
    def matrices(P, ents):
        out = []
        for e in ents:
            re = [ZERO] * (P * P)
            im = [ZERO] * (P * P)
            for (r, c), x in e.items():
                re[r * P + c] = x.re
                im[r * P + c] = x.im
            out.append((flint.fmpq_mat(P, P, re), flint.fmpq_mat(P, P, im)))
        return out

    @staticmethod
    def combine(mats, coeffs):
        P = mats[0][0].nrows()
        A, B = flint.fmpq_mat(P, P), flint.fmpq_mat(P, P)
        for (X, Y), c in zip(mats, coeffs):
            if c:
                A, B = A + X * Q(c), B + Y * Q(c)
        return (A, B)

    @staticmethod
    def unit(P, i=0):
        v = flint.fmpq_mat(P, 1)
        v[i, 0] = ONE
        return (v, flint.fmpq_mat(P, 1))

    @staticmethod
    def get(v, i):
        return QQi(v[0][i, 0], v[1][i, 0])

    @staticmethod
    def add(v, w):
        return (v[0] + w[0], v[1] + w[1])

    @staticmethod
    def sub(v, w):
        return (v[0] - w[0], v[1] - w[1])

    @staticmethod
    def scale(v, c):
        c = Q(c)
        return (v[0] * c, v[1] * c)

    @classmethod
    def exp_apply(cls, M, v, nterms, sign=1):
        A, B = M
        acc = u = v
        for j in range(1, nterms + 1):
            x, y = u
            u = ((A * x - B * y) * Q(sign), (A * y + B * x) * Q(sign))
            u = (u[0] / j, u[1] / j)
            acc = cls.add(acc, u)
        return acc


class _ComplexBackend:
    zero = 0j
    one = 1 + 0j

    @staticmethod
    def coerce(x):
        return complex(x)

    @staticmethod
    def matrices(P, ents):
        out = []
        for e in ents:
            M = np.zeros((P, P), dtype=complex)
            for (r, c), x in e.items():
                M[r, c] = x
            out.append(M)
        return out

    @staticmethod
    def combine(mats, coeffs):
        out = np.zeros_like(mats[0])
        for M, c in zip(mats, coeffs):
            if c:
                out = out + M * float(c)
        return out

    @staticmethod
    def unit(P, i=0):
        v = np.zeros(P, dtype=complex)
        v[i] = 1
        return v

    @staticmethod
    def get(v, i):
        return complex(v[i])

    @staticmethod
    def add(v, w):
        return v + w

    @staticmethod
    def sub(v, w):
        return v - w

    @staticmethod
    def scale(v, c):
        return v * complex(c) if not isinstance(c, flint.fmpq) else v * (int(c.p) / int(c.q))

    @staticmethod
    def exp_apply(M, v, nterms, sign=1):
        acc = u = v
        for j in range(1, nterms + 1):
            u = (M @ u) * (sign / j)
            acc = acc + u
        return acc


_BACKENDS = {"exact": _ExactBackend, "gaussian": _GaussBackend, "complex": _ComplexBackend}


# ---------------------------------------------------------------- context


@dataclass(frozen=True)
class TruncationContext:
    cone: RationalCone
    grading: tuple
    order: int
    scalar_mode: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "grading", tuple(int(x) for x in self.grading))
        if self.scalar_mode not in MODES:
            raise ContextError(f"unknown scalar mode {self.scalar_mode!r}")
        if self.order < 1:
            raise ContextError("truncation order must be >= 1")
        if len(self.grading) != self.cone.n:
            raise ContextError("grading length differs from lattice rank")
        if not self.cone.is_strict:
            raise ContextError("truncation cone must be strict")
        if not self.cone.is_positive(self.grading):
            raise ContextError("grading must be positive on the cone")

    @staticmethod
    def orthant(n: int, order: int, scalar_mode: str = "exact") -> "TruncationContext":
        return TruncationContext(RationalCone.orthant(n), (1,) * n, order, scalar_mode)

    def with_mode(self, mode: str) -> "TruncationContext":
        return TruncationContext(self.cone, self.grading, self.order, mode)

    def with_order(self, order: int) -> "TruncationContext":
        return TruncationContext(self.cone, self.grading, order, self.scalar_mode)

    @property
    def n(self) -> int:
        return self.cone.n

    @property
    def backend(self):
        return _BACKENDS[self.scalar_mode]

    def degree(self, g) -> int:
        return sum(a * b for a, b in zip(self.grading, g))

    @cached_property
    def points(self) -> tuple:
        """Cone lattice points with 1 <= degree <= order, sorted by degree."""
        return tuple(self.cone.lattice_points(self.grading, self.order))

    @cached_property
    def basis(self) -> tuple:
        return ((0,) * self.n,) + self.points

    @cached_property
    def index(self) -> dict:
        return {g: i for i, g in enumerate(self.basis)}

    def in_truncation(self, g) -> bool:
        return g in self.index and any(g)

    def shifts(self, g) -> list:
        """Pairs (idx(b), idx(b + g)) for basis points b with b + g still in the basis."""
        cache = self.__dict__.setdefault("_shift_cache", {})
        if g not in cache:
            idx = self.index
            out = []
            for b in self.basis:
                t = tuple(x + y for x, y in zip(b, g))
                j = idx.get(t)
                if j is not None:
                    out.append((idx[b], j))
            cache[g] = out
        return cache[g]

    def coerce(self, x):
        return self.backend.coerce(x)

    def to_json(self) -> dict:
        return {"cone": [list(g) for g in self.cone.generators], "grading": list(self.grading),
                "order": self.order, "scalar_mode": self.scalar_mode}

    @staticmethod
    def from_json(d: dict) -> "TruncationContext":
        return TruncationContext(RationalCone(d["cone"]), tuple(d["grading"]), int(d["order"]),
                                 d.get("scalar_mode", "exact"))


def _is_zero(x) -> bool:
    return not x if not isinstance(x, complex) else x == 0


def _scalar_json(x):
    if isinstance(x, QQi):
        return [qstr(x.re), qstr(x.im)]
    if isinstance(x, complex):
        return [x.real, x.imag]
    return qstr(x)


def _scalar_from_json(x, mode):
    if mode == "exact":
        return Q(x)
    if mode == "gaussian":
        return QQi.coerce(x) if isinstance(x, list) else QQi(Q(x), 0)
    return complex(x[0], x[1]) if isinstance(x, list) else complex(float(x))


# ---------------------------------------------------------------- fields


class GradedVectorField:
    """Sum over g of x^g D_{u(g)}; terms maps g -> covector tuple."""

    __slots__ = ("terms", "ctx", "saturated")

    def __init__(self, terms, ctx: TruncationContext, saturated: bool = False, check: bool = True):
        self.ctx = ctx
        self.saturated = saturated
        clean = {}
        for g, u in terms.items():
            g = tuple(int(c) for c in g)
            u = tuple(ctx.coerce(x) for x in u) if check else tuple(u)
            if check:
                if len(u) != ctx.n:
                    raise ContextError(f"covector at {g} has length {len(u)}, expected {ctx.n}")
                if not ctx.in_truncation(g):
                    if any(not _is_zero(x) for x in u) and ctx.cone.contains(g) and ctx.degree(g) > ctx.order:
                        self.saturated = True
                        continue
                    if any(not _is_zero(x) for x in u):
                        raise ContextError(f"support vector {g} outside the truncation")
            if any(not _is_zero(x) for x in u):
                clean[g] = u
        self.terms = clean

    @staticmethod
    def zero(ctx) -> "GradedVectorField":
        return GradedVectorField({}, ctx)

    @staticmethod
    def term(g, u, ctx) -> "GradedVectorField":
        return GradedVectorField({tuple(g): tuple(u)}, ctx)

    def _same(self, other):
        if self.ctx != other.ctx:
            raise ContextError("context mismatch")

    def __add__(self, other):
        self._same(other)
        out = dict(self.terms)
        for g, u in other.terms.items():
            if g in out:
                out[g] = tuple(a + b for a, b in zip(out[g], u))
            else:
                out[g] = u
        return GradedVectorField(out, self.ctx, self.saturated or other.saturated, check=False)

    def __neg__(self):
        return GradedVectorField({g: tuple(-x for x in u) for g, u in self.terms.items()}, self.ctx,
                                 self.saturated, check=False)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = self.ctx.coerce(s)
        return GradedVectorField({g: tuple(s * x for x in u) for g, u in self.terms.items()}, self.ctx,
                                 self.saturated, check=False)

    def __eq__(self, other):
        if not isinstance(other, GradedVectorField):
            return NotImplemented
        return self.ctx == other.ctx and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    @property
    def support(self) -> list:
        return sorted(self.terms, key=lambda g: (self.ctx.degree(g), g))

    def degree_part(self, d: int) -> "GradedVectorField":
        return GradedVectorField({g: u for g, u in self.terms.items() if self.ctx.degree(g) == d},
                                 self.ctx, check=False)

    def restrict(self, pred) -> "GradedVectorField":
        return GradedVectorField({g: u for g, u in self.terms.items() if pred(g)}, self.ctx, check=False)

    def min_degree(self) -> int | None:
        return min((self.ctx.degree(g) for g in self.terms), default=None)

    def apply(self, f: "ConeSeries") -> "ConeSeries":
        """The derivation applied to a series (truncated at f's cap)."""
        out = {}
        for m, c in f.terms.items():
            for g, u in self.terms.items():
                t = tuple(a + b for a, b in zip(g, m))
                if self.ctx.degree(t) > f.cap:
                    continue
                w = sum((ui * mi for ui, mi in zip(u, m) if mi), self.ctx.backend.zero)
                if not _is_zero(w):
                    out[t] = out.get(t, self.ctx.backend.zero) + w * c
        return ConeSeries(out, self.ctx, f.cap)

    def to_json(self) -> dict:
        return {"terms": [{"gamma": list(g), "u": [_scalar_json(x) for x in self.terms[g]]} for g in self.support],
                "context": self.ctx.to_json()}

    @staticmethod
    def from_json(d: dict, ctx: TruncationContext | None = None) -> "GradedVectorField":
        ctx = ctx or TruncationContext.from_json(d["context"])
        return GradedVectorField({tuple(t["gamma"]): tuple(_scalar_from_json(x, ctx.scalar_mode) for x in t["u"])
                                  for t in d["terms"]}, ctx)

    def __repr__(self):
        parts = [f"x^{g}D{tuple(_scalar_json(x) for x in u)}" for g, u in ((g, self.terms[g]) for g in self.support)]
        return "GVF(" + " + ".join(parts) + ")"


def bracket(v: GradedVectorField, w: GradedVectorField) -> GradedVectorField:
    """[x^g D_u, x^m D_v] = x^(g+m) (u(m) D_v - v(g) D_u), dropping degrees above the order."""
    v._same(w)
    ctx = v.ctx
    N = ctx.order
    zero = ctx.backend.zero
    out = {}
    saturated = v.saturated or w.saturated
    for g, u in v.terms.items():
        dg = ctx.degree(g)
        for m, vv in w.terms.items():
            t = tuple(a + b for a, b in zip(g, m))
            um = sum((a * b for a, b in zip(u, m) if b), zero)
            vg = sum((a * b for a, b in zip(vv, g) if b), zero)
            if _is_zero(um) and _is_zero(vg):
                continue
            comp = tuple(um * b - vg * a for a, b in zip(u, vv))
            if all(_is_zero(x) for x in comp):
                continue
            if dg + ctx.degree(m) > N:
                saturated = True
                continue
            if t in out:
                out[t] = tuple(a + b for a, b in zip(out[t], comp))
            else:
                out[t] = comp
    return GradedVectorField(out, ctx, saturated, check=False)


# ---------------------------------------------------------------- series


class ConeSeries:
    """Truncated series sum c_g x^g; terms of degree above cap are unknown and dropped."""

    __slots__ = ("terms", "ctx", "cap")

    def __init__(self, terms, ctx: TruncationContext, cap: int | None = None):
        self.ctx = ctx
        zero = ctx.backend.zero
        t = {}
        for g, c in terms.items():
            g = tuple(int(x) for x in g)
            c = ctx.coerce(c)
            if not _is_zero(c):
                t[g] = t.get(g, zero) + c
        if cap is None:
            low = min((ctx.degree(g) for g in t), default=0)
            cap = low + ctx.order
        self.cap = cap
        self.terms = {g: c for g, c in t.items() if ctx.degree(g) <= cap and not _is_zero(c)}

    @staticmethod
    def monomial(g, ctx, coeff=1) -> "ConeSeries":
        g = tuple(g)
        return ConeSeries({g: coeff}, ctx, ctx.degree(g) + ctx.order)

    @staticmethod
    def one(ctx) -> "ConeSeries":
        return ConeSeries.monomial((0,) * ctx.n, ctx)

    def low_degree(self) -> int:
        return min((self.ctx.degree(g) for g in self.terms), default=self.cap)

    def __add__(self, other):
        cap = min(self.cap, other.cap)
        out = dict(self.terms)
        for g, c in other.terms.items():
            out[g] = out[g] + c if g in out else c
        return ConeSeries(out, self.ctx, cap)

    def __neg__(self):
        return ConeSeries({g: -c for g, c in self.terms.items()}, self.ctx, self.cap)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = self.ctx.coerce(s)
        return ConeSeries({g: s * c for g, c in self.terms.items()}, self.ctx, self.cap)

    def __mul__(self, other):
        if not isinstance(other, ConeSeries):
            return self.scale(other)
        ctx = self.ctx
        cap = min(self.cap + other.low_degree(), other.cap + self.low_degree())
        out = {}
        for g, a in self.terms.items():
            dg = ctx.degree(g)
            for m, b in other.terms.items():
                if dg + ctx.degree(m) > cap:
                    continue
                t = tuple(x + y for x, y in zip(g, m))
                out[t] = out[t] + a * b if t in out else a * b
        return ConeSeries(out, ctx, cap)

    def truncate(self, cap: int) -> "ConeSeries":
        return ConeSeries(self.terms, self.ctx, min(cap, self.cap))

    def __eq__(self, other):
        if not isinstance(other, ConeSeries):
            return NotImplemented
        cap = min(self.cap, other.cap)
        d = self.ctx.degree
        return ({g: c for g, c in self.terms.items() if d(g) <= cap}
                == {g: c for g, c in other.terms.items() if d(g) <= cap})

    def coefficient(self, g):
        return self.terms.get(tuple(g), self.ctx.backend.zero)

    def __repr__(self):
        return f"ConeSeries({self.terms}, cap={self.cap})"


# ---------------------------------------------------------------- group


class GroupElement:
    """exp(log) in the truncated group; the log is canonical, matrices are cached."""

    __slots__ = ("log", "_mats", "_acts")

    def __init__(self, log: GradedVectorField):
        self.log = log
        self._mats = None
        self._acts = {}

    @property
    def ctx(self) -> TruncationContext:
        return self.log.ctx

    @staticmethod
    def identity(ctx) -> "GroupElement":
        return GroupElement(GradedVectorField.zero(ctx))

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.log == other.log

    def __hash__(self):
        return hash(self.log)

    def is_identity(self) -> bool:
        return self.log.is_zero()

    def _matrices(self):
        """Matrices A_1..A_n, B with D on span{x^(nu+b)} equal to sum nu_k A_k + B."""
        if self._mats is None:
            ctx = self.ctx
            be = ctx.backend
            P = len(ctx.basis)
            basis = ctx.basis
            ents = [dict() for _ in range(ctx.n + 1)]
            for g, u in self.log.terms.items():
                for ib, it in ctx.shifts(g):
                    b = basis[ib]
                    for k in range(ctx.n):
                        if not _is_zero(u[k]):
                            ents[k][(it, ib)] = u[k]
                    ub = sum((x * y for x, y in zip(u, b) if y), be.zero)
                    if not _is_zero(ub):
                        ents[ctx.n][(it, ib)] = ub
            self._mats = be.matrices(P, ents)
        return self._mats

    def derivation_matrix(self, nu):
        key = tuple(int(x) for x in nu)
        if key not in self._acts:
            self._acts[key] = self.ctx.backend.combine(self._matrices(), list(key) + [1])
        return self._acts[key]

    def apply_exp(self, nu, v, sign: int = 1, low: int = 0):
        """exp(+-D) applied to a coefficient vector over span{x^(nu+b)}.

        low is a lower bound for the degree of v; the series stops at the order.
        """
        if self.log.is_zero():
            return v
        nterms = self.ctx.order - low
        if nterms <= 0:
            return v
        return self.ctx.backend.exp_apply(self.derivation_matrix(nu), v, nterms, sign)


def exp_field(v: GradedVectorField) -> GroupElement:
    if (0,) * v.ctx.n in v.terms:
        raise ContextError("degree-0 terms are not allowed in the pronilpotent group")
    return GroupElement(v)


def log_element(g: GroupElement) -> GradedVectorField:
    return g.log


def inverse(g: GroupElement) -> GroupElement:
    return GroupElement(-g.log)


def product(elements) -> GroupElement:
    """Composite automorphism g_1 o g_2 o ... o g_m (g_m acts first), as a log."""
    elements = list(elements)
    if not elements:
        raise ContextError("empty product")
    ctx = elements[0].ctx
    for g in elements:
        if g.ctx != ctx:
            raise ContextError("context mismatch in product")
    nontrivial = [g for g in elements if not g.is_identity()]
    if len(nontrivial) <= 1:
        return nontrivial[0] if nontrivial else GroupElement.identity(ctx)
    be = ctx.backend
    N = ctx.order
    P = len(ctx.basis)
    basis = ctx.basis
    cols = []
    for i in range(ctx.n):
        nu = tuple(int(k == i) for k in range(ctx.n))

        def T_minus_1(v, low):
            w = v
            for g in reversed(nontrivial):
                w = g.apply_exp(nu, w, low=low)
            return be.sub(w, v)

        # log T e0 = sum_k (-1)^(k+1)/k (T - 1)^k e0; (T - 1)^k e0 has degree >= k
        w = T_minus_1(be.unit(P, 0), 0)
        acc = w
        for k in range(2, N + 1):
            w = T_minus_1(w, k - 1)
            acc = be.add(acc, be.scale(w, Q((-1) ** (k + 1)) / k))
        cols.append(acc)
    terms = {}
    for j in range(1, P):
        u = tuple(be.get(cols[i], j) for i in range(ctx.n))
        if any(not _is_zero(x) for x in u):
            terms[basis[j]] = u
    return GroupElement(GradedVectorField(terms, ctx, check=False))


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    """Acts as f -> g(h(f))."""
    return product([g, h])


def act(g: GroupElement, f: ConeSeries) -> ConeSeries:
    """Apply the automorphism exp(log g) to a series, truncated at the series cap."""
    if g.ctx != f.ctx:
        raise ContextError("context mismatch")
    ctx = g.ctx
    be = ctx.backend
    P = len(ctx.basis)
    out = {}
    for nu, c in f.terms.items():
        col = g.apply_exp(nu, be.unit(P, 0))
        dnu = ctx.degree(nu)
        for j, b in enumerate(ctx.basis):
            if dnu + ctx.degree(b) > f.cap:
                continue
            x = be.get(col, j)
            if not _is_zero(x):
                t = tuple(p + q for p, q in zip(nu, b))
                out[t] = out[t] + c * x if t in out else c * x
    return ConeSeries(out, ctx, f.cap)


def action_series(g: GroupElement, i: int) -> ConeSeries:
    """g(x^(e_i)) / x^(e_i) = 1 + sum c_m x^m."""
    ctx = g.ctx
    nu = tuple(int(k == i) for k in range(ctx.n))
    col = g.apply_exp(nu, ctx.backend.unit(len(ctx.basis), 0))
    return ConeSeries({b: ctx.backend.get(col, j) for j, b in enumerate(ctx.basis)}, ctx, ctx.order)


# ---------------------------------------------------------------- Hamiltonian pieces


@dataclass(frozen=True)
class SkewForm:
    matrix: tuple

    def __init__(self, matrix):
        M = tuple(tuple(int(x) for x in r) for r in matrix)
        n = len(M)
        for i in range(n):
            for j in range(n):
                if M[i][j] != -M[j][i]:
                    raise ContextError("skew form must be antisymmetric")
        object.__setattr__(self, "matrix", M)

    @staticmethod
    def standard() -> "SkewForm":
        return SkewForm([[0, 1], [-1, 0]])

    def __call__(self, g, m) -> int:
        M = self.matrix
        return sum(g[i] * M[i][j] * m[j] for i in range(len(g)) for j in range(len(m)))

    def covector(self, g) -> tuple:
        """<g, .> as a covector."""
        M = self.matrix
        return tuple(sum(g[i] * M[i][j] for i in range(len(g))) for j in range(len(M)))


def ham_field(f: ConeSeries, omega: SkewForm) -> GradedVectorField:
    """{f, .} with {x^g, .} = x^g D_<g,.>."""
    ctx = f.ctx
    out = {}
    for g, c in f.terms.items():
        if not any(g):
            raise ContextError("Hamiltonian has a constant term")
        out[g] = tuple(c * x for x in omega.covector(g))
    return GradedVectorField(out, ctx)


def ks_transform(g, omega_count: int, omega: SkewForm, ctx: TruncationContext, sign: int = 1) -> GroupElement:
    """x^m -> x^m (1 + sign*x^g)^(Omega <g,m>) truncated at the context order."""
    g = tuple(int(x) for x in g)
    if not any(g):
        raise ContextError("ks_transform needs g != 0")
    if not ctx.cone.contains(g):
        raise ContextError(f"{g} is not in the context cone")
    cov = omega.covector(g)
    terms = {}
    k = 1
    while ctx.degree(g) * k <= ctx.order:
        # Omega * log(1 + sign x^g) = Omega * sum (-1)^(k+1) sign^k x^(kg) / k
        c = Q(omega_count) * Q((-1) ** (k + 1) * sign ** k) / k
        terms[tuple(k * x for x in g)] = tuple(c * x for x in cov)
        k += 1
    el = GroupElement(GradedVectorField(terms, ctx))
    return el


def random_field(ctx: TruncationContext, rng, density: float = 0.5, max_num: int = 3, max_den: int = 3,
                 support=None) -> GradedVectorField:
    """Random field with small rational coefficients (test and experiment helper)."""
    pts = list(support) if support is not None else list(ctx.points)
    terms = {}
    for g in pts:
        if rng.random() < density:
            u = []
            for _ in range(ctx.n):
                p = int(rng.integers(-max_num, max_num + 1))
                q = int(rng.integers(1, max_den + 1))
                u.append(Q(p) / q)
            if ctx.scalar_mode == "gaussian":
                u = [QQi(x, Q(int(rng.integers(-max_num, max_num + 1)))) for x in u]
            elif ctx.scalar_mode == "complex":
                u = [complex(float(x), float(rng.normal())) for x in u]
            terms[g] = tuple(u)
    return GradedVectorField(terms, ctx)


def bch_degree4(X: GradedVectorField, Y: GradedVectorField) -> GradedVectorField:
    """Textbook BCH series through total degree 4 in X, Y."""
    br = bracket
    XY = br(X, Y)
    out = X + Y + XY.scale(Q("1/2"))
    out = out + br(X, XY).scale(Q("1/12")) - br(Y, XY).scale(Q("1/12"))
    out = out - br(Y, br(X, XY)).scale(Q("1/24"))
    return out


def factorial(n: int) -> int:
    return math.factorial(n)
