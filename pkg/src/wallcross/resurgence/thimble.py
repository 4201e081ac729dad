"""Exponential integrals of a univariate polynomial over Lefschetz thimbles.

For a Morse critical point x_j with value z_j and a = f''(x_j), the thimble is
parametrized by v in R through f(x(v)) = z_j - v^2 t', x(0) = x_j, where t' is
the tracing parameter (t' = t except for the two-sided Stokes comparisons).
Then

    I_j(t)     = int e^{f/t} dx = e^{z_j/t} int e^{-v^2 t'/t} x'(v) dv
    I_j^mod(t) = (2 pi t)^{-1/2} e^{-z_j/t} I_j(t)

and the orientation is the one for which I_j^mod(t) -> c_0 = sqrt(-1/a)
(principal root, so c_0 = i/sqrt(a) for real a > 0); I^mod is then continuous
in t away from Stokes rays.
"""

from __future__ import annotations

import ast
import cmath
import math
from dataclasses import dataclass

import flint
import numpy as np
from numpy.polynomial import legendre as L

from ..exact import Q
from .series import TSeries

fmpq = flint.fmpq


class ThimbleError(ValueError):
    pass


# ---------------------------------------------------------------- polynomials


def parse_poly(text: str) -> flint.fmpq_poly:
    """Rational polynomial in x from an expression like 'x^3/3 - x'."""
    tree = ast.parse(text.replace("^", "**"), mode="eval")
    X = flint.fmpq_poly([0, 1])

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return flint.fmpq_poly([Q(node.value)])
        if isinstance(node, ast.Name) and node.id == "x":
            return X
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if b.degree() != 0:
                    raise ThimbleError("division by a non-constant")
                return a * flint.fmpq_poly([1 / b[0]])
            if isinstance(node.op, ast.Pow):
                if b.degree() > 0 or b[0].q != 1 or b[0] < 0:
                    raise ThimbleError("exponents must be non-negative integers")
                return a ** int(b[0].p)
        raise ThimbleError(f"cannot parse polynomial term {ast.dump(node)}")

    return ev(tree)


def as_poly(f) -> flint.fmpq_poly:
    if isinstance(f, flint.fmpq_poly):
        return f
    if isinstance(f, str):
        return parse_poly(f)
    return flint.fmpq_poly([Q(c) for c in f])


@dataclass(frozen=True)
class CriticalPoint:
    x: object          # fmpq when rational, else complex
    z: object
    hessian: object

    @property
    def exact(self) -> bool:
        return isinstance(self.x, flint.fmpq)

    def xc(self) -> complex:
        return complex(_c(self.x))

    def zc(self) -> complex:
        return complex(_c(self.z))


def _c(x) -> complex:
    if isinstance(x, flint.fmpq):
        return int(x.p) / int(x.q)
    return complex(x)


def critical_points(f) -> list[CriticalPoint]:
    """Critical points sorted by critical value (real part, then imaginary part)."""
    f = as_poly(f)
    df = f.derivative()
    if df.degree() < 1:
        raise ThimbleError("polynomial has no critical points")
    d2 = df.derivative()
    pts = []
    _, facs = df.factor()
    numeric = []
    for g, mult in facs:
        if mult > 1:
            raise ThimbleError("degenerate (non-Morse) critical point")
        if g.degree() == 1:
            x = -g[0] / g[1]
            pts.append(CriticalPoint(x, f(x), d2(x)))
        else:
            numeric.append(g)
    for g in numeric:
        for r, _ in g.complex_roots():
            x = complex(float(r.real.mid()), float(r.imag.mid()))
            pts.append(CriticalPoint(x, _peval(f, x), _peval(d2, x)))
    for p in pts:
        if abs(_c(p.hessian)) == 0:
            raise ThimbleError("degenerate (non-Morse) critical point")
    pts.sort(key=lambda p: (round(p.zc().real, 12), round(p.zc().imag, 12), -p.xc().real))
    return pts


def _coeffs_c(f) -> list:
    return [_c(f[i]) for i in range(f.degree() + 1)]


def _peval(f, x: complex) -> complex:
    acc = 0j
    for c in reversed(_coeffs_c(f)):
        acc = acc * x + c
    return acc


def critical_values(f) -> list[complex]:
    return [p.zc() for p in critical_points(f)]


# ---------------------------------------------------------------- formal side


def _lead(a) -> complex:
    # sqrt(-1/a) rather than 1/sqrt(-a): the latter depends on the sign of a zero imaginary part
    return cmath.sqrt(-1 / complex(a))


def _dfact2(m: int) -> int:
    """(m)!! for odd m >= -1."""
    out = 1
    while m > 1:
        out *= m
        m -= 2
    return out


def saddle_expansion(f, j: int, K: int) -> TSeries:
    """Formal series of I_j^mod(t) to order t^K by Gaussian moments.

    With g(y) = f(x_j + y) - z_j = a y^2/2 + sum_{d >= 3} h_d y^d and y = sqrt(t) s,
    e^{g/t} = e^{a s^2/2} sum_m u^m E_m(s), u = sqrt(t); only even m survive and
    int s^{2p} e^{a s^2/2} ds = sqrt(2 pi/(-a)) (2p-1)!! (-1/a)^p.
    """
    f = as_poly(f)
    cps = critical_points(f)
    if not 0 <= j < len(cps):
        raise ThimbleError(f"critical point index {j} out of range")
    cp = cps[j]
    if not cp.exact:
        return _saddle_numeric(f, cp, K)
    x0 = cp.x
    g = f(flint.fmpq_poly([x0, 1])) - cp.z
    a = 2 * g[2]
    if a == 0:
        raise ThimbleError("degenerate critical point")
    deg = g.degree()
    H = {k: flint.fmpq_poly([0] * (k + 2) + [g[k + 2]]) for k in range(1, deg - 1)}
    E = [flint.fmpq_poly([1])]
    for m in range(1, 2 * K + 1):
        acc = flint.fmpq_poly([])
        for k, h in H.items():
            if k <= m:
                acc += k * h * E[m - k]
        E.append(acc / m)
    ma = -1 / a
    out = []
    for q in range(K + 1):
        P = E[2 * q]
        s = fmpq(0)
        for p in range(0, P.degree() // 2 + 1):
            c = P[2 * p]
            if c:
                s += c * _dfact2(2 * p - 1) * ma ** p
        out.append(s)
    c0 = _lead(_c(a))
    if out[0] == 0:
        raise ThimbleError("vanishing leading coefficient")
    return TSeries.from_exact(out, c0)


def _saddle_numeric(f, cp: CriticalPoint, K: int) -> TSeries:
    x0 = cp.xc()
    # Taylor coefficients of f at x0
    co = _coeffs_c(f)
    n = len(co) - 1
    g = [sum(math.comb(i, d) * co[i] * x0 ** (i - d) for i in range(d, n + 1)) for d in range(n + 1)]
    a = 2 * g[2]
    H = {k: g[k + 2] for k in range(1, n - 1)}
    E = [np.array([1 + 0j])]
    for m in range(1, 2 * K + 1):
        acc = np.zeros(3 * m + 1, dtype=complex)
        for k, h in H.items():
            if k <= m:
                prev = E[m - k]
                acc[k + 2: k + 2 + len(prev)] += k * h * prev
        E.append(acc / m)
    out = []
    for q in range(K + 1):
        P = E[2 * q]
        out.append(sum(P[2 * p] * _dfact2(2 * p - 1) * (-1 / a) ** p for p in range(len(P) // 2 + 1) if 2 * p < len(P)))
    c0 = _lead(a)
    return TSeries([c0 * c for c in out])


# ---------------------------------------------------------------- numerics


@dataclass
class ThimbleResult:
    t: complex
    z: complex
    mod: complex
    error: float
    nodes: int

    @property
    def value(self) -> complex:
        """I_j(t); overflows for small |t| when Re(z/t) is large."""
        return cmath.exp(self.z / self.t) * cmath.sqrt(2 * math.pi * self.t) * self.mod

    def to_json(self) -> dict:
        try:
            v = self.value
            val = [v.real, v.imag]
        except OverflowError:
            val = None
        return {"t": [self.t.real, self.t.imag], "I_mod": [self.mod.real, self.mod.imag],
                "I": val, "error": self.error, "nodes": self.nodes}


class _Path:
    """y(v) = x(v) - x_j on the thimble, tracked by Newton continuation from v = 0.

    g holds the Taylor coefficients of f(x_j + y) - z_j, so the residual is free
    of the cancellation f(x) - z_j.
    """

    def __init__(self, g, tp, slope):
        self.g = g
        self.dg = [k * c for k, c in enumerate(g)][1:]
        self.tp = tp
        self.slope = slope

    @staticmethod
    def _ev(co, y):
        acc = 0j
        for c in reversed(co):
            acc = acc * y + c
        return acc

    def _newton(self, y, v):
        target = -v * v * self.tp
        last = math.inf
        for _ in range(40):
            d = self._ev(self.dg, y)
            if d == 0:
                return None
            dy = (self._ev(self.g, y) - target) / d
            y -= dy
            size = abs(dy)
            if size <= 1e-15 * abs(y) or (size >= last and size <= 1e-11 * abs(y)):
                return y
            last = size
        return None

    def track(self, vs):
        """x'(v) at the sorted non-negative nodes vs."""
        ds = np.empty(len(vs), dtype=complex)
        y, v = 0j, 0.0
        dy = self.slope
        scale = abs(self.slope)
        for i, target in enumerate(vs):
            while v < target:
                h = min(target - v, 0.25)
                while True:
                    guess = y + dy * h
                    new = self._newton(guess, v + h)
                    if new is not None and abs(new - guess) <= 0.05 * abs(dy) * h:
                        break
                    h /= 2
                    if h < 1e-10:
                        raise ThimbleError("path tracing stalled (the thimble meets another critical point)")
                y, v = new, v + h
                d = self._ev(self.dg, y)
                if abs(d) < 1e-10 * scale:
                    raise ThimbleError("path tracing hits a critical point")
                dy = -2 * v * self.tp / d
            ds[i] = dy
        return ds


def _stokes_check(cps, j, tp, tol=1e-12):
    zj = cps[j].zc()
    for k, cp in enumerate(cps):
        if k == j:
            continue
        w = (cp.zc() - zj) / tp
        if w.real < 0 and abs(w.imag) <= tol * abs(w):
            raise ThimbleError(f"t lies on the Stokes ray of critical point {j} towards {k} "
                               f"(angular distance {abs(w.imag) / abs(w):.2e})")


def thimble_integral(f, j: int, t: complex, tol: float = 1e-12, trace_t: complex | None = None,
                     max_panels: int = 256) -> ThimbleResult:
    """I_j^mod(t) by steepest-descent tracing and composite Gauss-Legendre quadrature.

    trace_t, when given, traces the thimble of that parameter while integrating
    e^{f/t}; for trace_t close to t this is the analytic continuation of I_j from
    trace_t to t, oriented consistently with I_j at t.
    """
    t = complex(t)
    if t == 0:
        raise ThimbleError("t must be nonzero")
    f = as_poly(f)
    cps = critical_points(f)
    if not 0 <= j < len(cps):
        raise ThimbleError(f"critical point index {j} out of range")
    tp = complex(trace_t) if trace_t is not None else t
    _stokes_check(cps, j, tp)
    decay = (tp / t).real
    if decay <= 0:
        raise ThimbleError("tracing parameter too far from t")
    cp = cps[j]
    a = complex(_c(cp.hessian))
    x0 = cp.xc()
    co = _coeffs_c(f)
    n = len(co) - 1
    g = [sum(math.comb(i, d) * co[i] * x0 ** (i - d) for i in range(d, n + 1)) for d in range(n + 1)]
    g[0] = g[1] = 0j
    c0 = _lead(a)
    ref = c0 * cmath.sqrt(t) * math.sqrt(abs(a) / abs(t))
    slope = cmath.sqrt(-2 * tp / a)
    if (slope * ref.conjugate()).real < 0:
        slope = -slope
    V = math.sqrt((math.log(1 / tol) + 10) / decay)
    p = 20
    xg, wg = L.leggauss(p)
    prev = None
    panels = 4
    while True:
        edges = np.linspace(0, V, panels + 1)
        h = (edges[1] - edges[0]) / 2
        vs = (((edges[:-1] + edges[1:]) / 2)[:, None] + h * xg[None, :]).ravel()
        ws = np.tile(wg * h, panels)
        total = 0j
        for sgn in (1, -1):
            ds = _Path(g, tp, sgn * slope).track(vs)
            total += sgn * np.dot(ws, np.exp(-vs * vs * tp / t) * ds)
        mod = total / cmath.sqrt(2 * math.pi * t)
        if prev is not None:
            err = abs(mod - prev)
            if err <= tol * max(abs(mod), 1e-300) or panels >= max_panels:
                return ThimbleResult(t, cp.zc(), complex(mod), float(err), len(vs) * 2)
        prev = mod
        panels *= 2


@dataclass
class StokesJump:
    i: int
    j: int
    t: complex
    n: int
    ratio: complex
    residual: float

    def to_json(self) -> dict:
        return {"i": self.i, "j": self.j, "t": [self.t.real, self.t.imag], "n": self.n,
                "ratio": [self.ratio.real, self.ratio.imag], "residual": self.residual}


def stokes_jump(f, i: int, j: int, t: complex | None = None, eps: float = 0.3, tol: float = 1e-13) -> StokesJump:
    """Measure n_ij from I_i^mod continued to t from both sides of its Stokes ray.

    Counterclockwise crossing: I_i^mod -> I_i^mod + n_ij e^{-(z_i - z_j)/t} I_j^mod.
    """
    cps = critical_points(f)
    zi, zj = cps[i].zc(), cps[j].zc()
    u = (zi - zj) / abs(zi - zj)
    t = complex(t) if t is not None else u
    if abs(((t / u).imag)) > 1e-12 * abs(t) or (t / u).real <= 0:
        raise ThimbleError("t must lie on the Stokes ray arg t = arg(z_i - z_j)")
    plus = thimble_integral(f, i, t, tol, trace_t=t * cmath.exp(1j * eps))
    minus = thimble_integral(f, i, t, tol, trace_t=t * cmath.exp(-1j * eps))
    other = thimble_integral(f, j, t, tol)
    jump = plus.mod - minus.mod
    base = cmath.exp(-(zi - zj) / t) * other.mod
    ratio = jump / base
    n = int(round(ratio.real))
    return StokesJump(i, j, t, n, ratio, abs(jump - n * base) / max(abs(jump), abs(base)))
