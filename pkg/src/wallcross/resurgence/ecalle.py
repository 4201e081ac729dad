"""Ecalle-Voronin gluing data: the additive splitting problem and formal normal forms.

Unknowns u = log z_L (holomorphic on the side containing t > 0) and v = log z_R
(side containing t < 0), glued across the two imaginary half-rays

    v - u = F_+(t, u) = f_+(e^{-2 pi i/t} e^u)      on l_+ = i (0, delta)
    v - u = F_-(t, u) = f_-(e^{-2 pi i/t} e^u)      on l_- = -i (0, delta)

with f_+(z) = sum a_n z^n and f_-(z) = sum a_{-n} z^{-n}.  Both forcing terms are
flat at t = 0 on their rays.  The splitting

    W(t) = 1/(2 pi i) [ int_{l_+} phi_+ (1/(tau-t) - 1/tau) dtau - int_{l_-} phi_- (1/(tau-t) - 1/tau) dtau ]

(rays oriented outwards) has W_west - W_east = phi on both rays and W(0) = 0, so
u = W east, v = W west, and the fixed point is u = W_east[phi(u)] on the rays.
Expanding the kernel gives the common asymptotic coefficients as moments
c_n = 1/(2 pi i) [ int_{l_+} phi_+ tau^{-n-1} dtau - int_{l_-} phi_- tau^{-n-1} dtau ].
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import flint
import numpy as np

from ..exact import Q
from ._quad import RayRule
from .series import TSeries, gevrey_fit

fmpq = flint.fmpq


class EVError(ValueError):
    pass


class ContractionError(EVError):
    def __init__(self, lipschitz: float, msg: str = "fixed-point iteration does not contract"):
        super().__init__(f"{msg} (measured Lipschitz estimate {lipschitz:.3e}); reduce delta")
        self.lipschitz = lipschitz


@dataclass
class EVData:
    a_plus: list
    a_minus: list
    r_plus: float = math.inf
    r_minus: float = math.inf
    margin: float = 1.0

    def __post_init__(self):
        self.a_plus = [complex(x) for x in self.a_plus]
        self.a_minus = [complex(x) for x in self.a_minus]
        for name, a, r in (("a_plus", self.a_plus, self.r_plus), ("a_minus", self.a_minus, self.r_minus)):
            if r <= 0:
                raise EVError(f"radius for {name} must be positive")
            base = 1 / r + self.margin
            for n, x in enumerate(a, start=1):
                if abs(x) > base ** n:
                    raise EVError(f"{name}[{n}] = {x} grows faster than the declared radius {r}")

    def f_plus(self, z):
        return sum(a * z ** n for n, a in enumerate(self.a_plus, start=1)) if self.a_plus else 0 * z

    def f_minus(self, z):
        return self.f_minus_inv(1 / z)

    def f_minus_inv(self, w):
        """f_- as a series in w = 1/z."""
        return sum(a * w ** n for n, a in enumerate(self.a_minus, start=1)) if self.a_minus else 0 * w

    def to_json(self) -> dict:
        return {"a_plus": [[x.real, x.imag] for x in self.a_plus], "a_minus": [[x.real, x.imag] for x in self.a_minus],
                "r_plus": self.r_plus if math.isfinite(self.r_plus) else None,
                "r_minus": self.r_minus if math.isfinite(self.r_minus) else None}

    @staticmethod
    def from_json(d: dict) -> "EVData":
        cv = lambda xs: [complex(*x) if isinstance(x, list) else complex(x) for x in xs]  # noqa: E731
        return EVData(cv(d.get("a_plus", [])), cv(d.get("a_minus", [])),
                      d.get("r_plus") or math.inf, d.get("r_minus") or math.inf)


@dataclass(frozen=True)
class EVGrid:
    ratio: float = 0.6
    p: int = 16
    refine: int = 0

    def refined(self) -> "EVGrid":
        return EVGrid(self.ratio, self.p, self.refine + 1)


@dataclass
class EVSolution:
    data: EVData
    delta: float
    plus: RayRule
    minus: RayRule
    u_plus: np.ndarray
    u_minus: np.ndarray
    residual: float
    history: list = field(default_factory=list)
    lipschitz: float = 0.0

    def phi(self):
        d = self.data
        # both arguments are flat at tau = 0 on their rays: e^{-2 pi/|tau|}
        with np.errstate(under="ignore"):
            pp = d.f_plus(np.exp(-2j * np.pi / self.plus.tau + self.u_plus))
            pm = d.f_minus_inv(np.exp(2j * np.pi / self.minus.tau - self.u_minus))
        return pp + np.zeros(len(self.plus.r), dtype=complex), pm + np.zeros(len(self.minus.r), dtype=complex)

    def W(self, t: complex) -> complex:
        """u(t) for Re t > 0, v(t) for Re t < 0 (off the rays)."""
        pp, pm = self.phi()
        return _split_value(self.plus, self.minus, pp, pm, complex(t))

    def log_zL(self, t: complex) -> complex:
        if complex(t).real <= 0:
            raise EVError("log z_L is evaluated on the side Re t > 0")
        return self.W(t)

    def log_zR(self, t: complex) -> complex:
        if complex(t).real >= 0:
            raise EVError("log z_R is evaluated on the side Re t < 0")
        return self.W(t)

    def to_json(self) -> dict:
        return {"delta": self.delta, "residual": self.residual, "history": self.history,
                "lipschitz": self.lipschitz, "nodes": [len(self.plus.r), len(self.minus.r)]}


def _split_value(plus, minus, pp, pm, t):
    c = (plus.cauchy(pp, t) - plus.integrate(pp / plus.tau)
         - minus.cauchy(pm, t) + minus.integrate(pm / minus.tau))
    return c / (2j * math.pi)


def _boundary_operator(rule: RayRule, targets: RayRule, side: int, same: bool) -> np.ndarray:
    """Matrix K with (K phi)_a = int_rule phi (1/(tau - t_a) - 1/tau) dtau at the target nodes."""
    n = len(rule.r)
    eye = np.eye(n, dtype=complex)
    K = np.empty((len(targets.r), n), dtype=complex)
    base = rule.w * rule.direction / rule.tau
    for a, t in enumerate(targets.tau):
        K[a] = rule.cauchy(eye, t, side if same else 0) - base
    return K


def _validate(d: EVData, delta: float, theta: float, ubound: float = 1.0):
    """|e^{-+2 pi i/t} z_L^{+-1}| < r_+- on the overlap sectors of half-opening pi/2 - theta."""
    worst = math.exp(-2 * math.pi * math.sin(theta) / delta + ubound)
    for name, a, r in (("S+", d.a_plus, d.r_plus), ("S-", d.a_minus, d.r_minus)):
        if a and worst >= r:
            raise EVError(f"delta = {delta} too large: |e^(-2 pi i/t) z| reaches {worst:.3e} >= r on {name}")


def ev_solve(d: EVData, delta: float, grid: EVGrid = EVGrid(), tol: float = 1e-12, max_iter: int = 60,
             theta: float = math.pi / 4) -> EVSolution:
    _validate(d, delta, theta)
    r_min = 2 * math.pi / 700
    if r_min >= delta:
        raise EVError("delta is below the resolvable scale")
    plus = RayRule.graded(1j, delta, r_min, grid.ratio, grid.p)
    minus = RayRule.graded(-1j, delta, r_min, grid.ratio, grid.p)
    for _ in range(grid.refine):
        plus, minus = plus.refined(), minus.refined()
    # east side: right of the upward ray, left of the downward ray
    Kpp = _boundary_operator(plus, plus, -1, True)
    Kmp = _boundary_operator(minus, plus, +1, False)
    Kpm = _boundary_operator(plus, minus, -1, False)
    Kmm = _boundary_operator(minus, minus, +1, True)
    scale = 1 / (2j * math.pi)
    up = np.zeros(len(plus.r), dtype=complex)
    um = np.zeros(len(minus.r), dtype=complex)
    sol = EVSolution(d, delta, plus, minus, up, um, math.inf)
    history = []
    prev = None
    for it in range(max_iter):
        sol.u_plus, sol.u_minus = up, um
        pp, pm = sol.phi()
        new_p = scale * (Kpp @ pp - Kmp @ pm)
        new_m = scale * (Kpm @ pp - Kmm @ pm)
        res = float(max(np.max(np.abs(new_p - up), initial=0), np.max(np.abs(new_m - um), initial=0)))
        history.append(res)
        up, um = new_p, new_m
        if res < tol:
            sol.u_plus, sol.u_minus = up, um
            break
        if prev is not None and prev > 0 and res >= prev and it >= 3:
            raise ContractionError(res / prev)
        if not np.isfinite(res):
            raise ContractionError(math.inf, "iteration diverged")
        prev = res
    else:
        rate = history[-1] / history[-2] if len(history) > 1 and history[-2] > 0 else math.inf
        raise ContractionError(rate, f"no convergence in {max_iter} iterations")
    # one more evaluation for the reported residual of the final iterate
    sol.u_plus, sol.u_minus = up, um
    pp, pm = sol.phi()
    fin = float(max(np.max(np.abs(scale * (Kpp @ pp - Kmp @ pm) - up), initial=0),
                    np.max(np.abs(scale * (Kpm @ pp - Kmm @ pm) - um), initial=0)))
    sol.residual = fin
    sol.history = history
    rates = [b / a for a, b in zip(history, history[1:]) if a > 0 and b > 0]
    sol.lipschitz = max(rates) if rates else 0.0
    return sol


@dataclass
class EVFormal:
    moments: TSeries
    fit_u: list
    fit_v: list
    fit_rel: list        # |fit_u - c_n| / |c_n| per fitted order
    side_gap: float      # max relative gap between the two one-sided fits
    growth: object = None

    @property
    def fit_error(self) -> float:
        return max(self.fit_rel) if self.fit_rel else 0.0

    def to_json(self) -> dict:
        return {"c": [[c.real, c.imag] for c in self.moments.coeffs],
                "fit_u": [[c.real, c.imag] for c in self.fit_u], "fit_v": [[c.real, c.imag] for c in self.fit_v],
                "fit_rel": self.fit_rel, "side_gap": self.side_gap,
                "growth": self.growth.to_json() if self.growth else None}


def _moments(sol: EVSolution, N: int) -> list:
    pp, pm = sol.phi()
    out = [0j]
    for n in range(1, N + 1):
        a = sol.plus.integrate(pp * sol.plus.tau ** (-n - 1))
        b = sol.minus.integrate(pm * sol.minus.tau ** (-n - 1))
        out.append((a - b) / (2j * math.pi))
    return out


def _fit(values, ts, K: int) -> np.ndarray:
    """Least squares for c_1..c_K with columns scaled by n! tmax^n (Gevrey weights)."""
    ts = np.asarray(ts)
    tmax = np.max(np.abs(ts))
    n = np.arange(1, K + 1)
    w = np.array([math.factorial(k) for k in n]) * tmax ** n
    V = (ts[:, None] ** n[None, :]) / w[None, :]
    sol, *_ = np.linalg.lstsq(V, np.asarray(values), rcond=None)
    return sol / w


def ev_formal(d: EVData, sol: EVSolution, N: int = 20, K_fit: int = 6, t_max: float | None = None,
              samples: int = 24, q: float = 0.85, reliable: int = 3) -> EVFormal:
    """Moments c_1..c_N plus least-squares fits of both one-sided expansions.

    The fits use K_fit orders; only the lowest `reliable` are compared, the
    rest absorb the truncation of the asymptotic series.
    """
    del d
    c = _moments(sol, N)
    t_max = t_max if t_max is not None else sol.delta / 5
    ts = t_max * q ** np.arange(samples)
    fu = _fit([sol.W(t) for t in ts], ts, K_fit)
    fv = _fit([sol.W(-t) for t in ts], -ts, K_fit)
    rel, gap = [], 0.0
    for n in range(1, min(reliable, K_fit, N) + 1):
        ref = abs(c[n])
        if ref == 0:
            rel.append(float(abs(fu[n - 1])))
            gap = max(gap, float(abs(fu[n - 1] - fv[n - 1])))
            continue
        rel.append(float(abs(fu[n - 1] - c[n]) / ref))
        gap = max(gap, float(abs(fu[n - 1] - fv[n - 1]) / ref))
    series = TSeries(c)
    growth = None
    if sum(1 for x in c[1:] if abs(x) > 0) >= 3:
        growth = gevrey_fit(series)
    return EVFormal(series, list(fu), list(fv), rel, gap, growth)


# ---------------------------------------------------------------- formal normal forms


def _exact_list(xs) -> list:
    if isinstance(xs, TSeries):
        if xs.exact is None:
            raise EVError("normal-form checks need exact coefficients")
        if xs.prefactor != 1:
            raise EVError("normal-form checks need an unscaled series")
        xs = xs.exact
    return [Q(x) for x in xs]


def _series(coeffs, prec):
    return flint.fmpq_series(list(coeffs)[:prec], prec=prec)


def _uncapped(fn):
    """Lift flint's global series cap (default 10 terms) while fn runs; every series here sets prec itself."""
    @functools.wraps(fn)
    def wrapped(*args, **kw):
        old = flint.ctx.cap
        flint.ctx.cap = max(old, 4096)
        try:
            return fn(*args, **kw)
        finally:
            flint.ctx.cap = old
    return wrapped


@_uncapped
def normalizing_map(c, prec: int):
    """w(t) = t exp(sum_{n >= 2} c_n t^n) as an fmpq_series."""
    c = _exact_list(c)
    if any(c[i] for i in range(min(2, len(c)))):
        raise EVError("c_0 and c_1 must vanish")
    C = _series(c + [0] * prec, prec)
    return _series([0, 1], prec) * C.exp()


def _first_nonzero(s, upto: int) -> float:
    co = s.coeffs()
    for i in range(min(len(co), upto + 1)):
        if co[i] != 0:
            return i
    return math.inf


def _check_germ(g, prec):
    g = _exact_list(g)
    g = g + [fmpq(0)] * max(0, prec - len(g))
    if g[0] != 0 or g[1] != 1:
        raise EVError("germ must be tangent to the identity")
    if g[2] != 1:
        raise EVError("germ must have unit t^2 coefficient")
    return _series(g, prec)


@dataclass
class NormalFormReport:
    order: float
    N: int
    coefficient: object

    @property
    def passed(self) -> bool:
        return self.order > self.N

    def to_json(self) -> dict:
        return {"order": None if math.isinf(self.order) else int(self.order), "N": self.N,
                "passed": self.passed, "coefficient": None if self.coefficient is None else str(self.coefficient)}


@_uncapped
def ev_normal_form_check(c, g, N: int | None = None) -> NormalFormReport:
    """First nonvanishing order of w(g(t)) - w(t)/(1 - w(t)) through t^(N+1), exactly."""
    cl = _exact_list(c)
    N = N if N is not None else max(len(cl) - 1, 2)
    prec = N + 2
    G = _check_germ(g, prec)
    w = normalizing_map(cl[: N + 1], prec)
    one = _series([1], prec)
    R = w(G) - w * (one - w).inv()
    order = _first_nonzero(R, N + 1)
    coef = None if math.isinf(order) else R.coeffs()[order]
    return NormalFormReport(order, N, coef)


@_uncapped
def conjugate_germ(c, prec: int) -> list:
    """g = w^-1 o N o w with N(t) = t/(1-t): the germ normalized by c."""
    w = normalizing_map(c, prec)
    one = _series([1], prec)
    Nw = w * (one - w).inv()
    g = w.reversion()(Nw)
    co = g.coeffs()
    return co + [fmpq(0)] * (prec - len(co))


@dataclass
class RecoveredMap:
    c: list
    invariant_defect: object     # t^3 coefficient mismatch (formal invariant), 0 when conjugate
    residual_order: float


@_uncapped
def recover_normalizing(g, N: int) -> RecoveredMap:
    """Solve w o g = N o w order by order for w = t + sum_{m >= 3} b_m t^m, then c = log(w/t).

    The t^(m+1) coefficient of the defect moves by (m - 2) b_m, so b_m is fixed
    for m >= 3; the t^3 coefficient is a formal invariant and is reported.
    c_n is exact through n = N when g is known through t^(N+2).
    """
    prec = N + 3
    G = _check_germ(g, prec)
    one = _series([1], prec)
    b = [fmpq(0), fmpq(1)] + [fmpq(0)] * (prec - 2)
    for m in range(3, prec - 1):
        w = _series(b, prec)
        R = w(G) - w * (one - w).inv()
        r = R.coeffs()[m + 1] if len(R.coeffs()) > m + 1 else fmpq(0)
        b[m] = -r / (m - 2)
    w = _series(b, prec)
    R = w(G) - w * (one - w).inv()
    co = R.coeffs()
    defect = co[3] if len(co) > 3 else fmpq(0)
    # c = log(w / t)
    wt = _series(b[1:] + [0], prec)
    c = wt.log().coeffs()
    c = c + [fmpq(0)] * (N + 1 - len(c))
    return RecoveredMap(c[: N + 1], defect, _first_nonzero(R, N + 1))
