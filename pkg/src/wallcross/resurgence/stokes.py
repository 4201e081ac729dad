"""Stokes data, the chain-integral solution Psi of the jump problem, and the M^-1 I split.

Psi solves the truncated Riemann-Hilbert problem in |t| < R

    Psi_i(t) = e_i + sum_j n_ij/(2 pi i) int_{l_ij} e^{-(z_i - z_j)/tau} Psi_j(tau) dtau/(tau - t)

with l_ij = {r (z_i - z_j)/|z_i - z_j| : 0 < r < R}.  Crossing l_ij counterclockwise,
row i of M = (Psi_ij) gains n_ij e^{-(z_i - z_j)/t} times row j, which is the jump of
the normalized exponential integrals I^mod, so M^-1 I^mod has no jumps.
Iterating the equation gives the chain sum with kernel
1/((tau_1 - t)(tau_2 - tau_1)...(tau_s - tau_{s-1})).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import exp1, expn

from ._quad import RayRule
from .series import TSeries


class StokesError(ValueError):
    pass


def _cross(a: complex, b: complex) -> float:
    return a.real * b.imag - a.imag * b.real


@dataclass
class StokesData:
    z: tuple
    n: np.ndarray

    def __post_init__(self):
        self.z = tuple(complex(x) for x in self.z)
        self.n = np.asarray(self.n, dtype=int)
        k = len(self.z)
        if self.n.shape != (k, k):
            raise StokesError(f"Stokes matrix must be {k}x{k}")
        if np.any(np.diag(self.n) != 0):
            raise StokesError("Stokes matrix must vanish on the diagonal")
        for i in range(k):
            for j in range(i + 1, k):
                if abs(self.z[i] - self.z[j]) == 0:
                    raise StokesError("critical values must be distinct")
        self.check_generic()

    @property
    def k(self) -> int:
        return len(self.z)

    def check_generic(self, tol: float = 1e-12):
        """No straight line contains three of the points."""
        z = self.z
        k = len(z)
        for a in range(k):
            for b in range(a + 1, k):
                for c in range(b + 1, k):
                    u, w = z[b] - z[a], z[c] - z[a]
                    if abs(_cross(u, w)) <= tol * abs(u) * abs(w):
                        raise StokesError(f"points {a}, {b}, {c} are collinear")

    def pairs(self) -> list:
        return [(i, j) for i in range(self.k) for j in range(self.k) if i != j and self.n[i, j]]

    def direction(self, i: int, j: int) -> complex:
        d = self.z[i] - self.z[j]
        return d / abs(d)

    def stokes_distance(self, t: complex) -> float:
        """Angular distance (radians) from arg t to the nearest active Stokes ray."""
        best = math.inf
        for i, j in self.pairs():
            best = min(best, abs(cmath.phase(t / self.direction(i, j))))
        return best

    @property
    def A(self) -> float:
        return min((abs(self.z[i] - self.z[j]) for i, j in self.pairs()), default=math.inf)

    def to_json(self) -> dict:
        return {"z": [[x.real, x.imag] for x in self.z], "n": self.n.tolist()}

    @staticmethod
    def from_json(d: dict) -> "StokesData":
        return StokesData([complex(*x) if isinstance(x, list) else complex(x) for x in d["z"]], d["n"])


@dataclass
class PsiResult:
    t: complex
    matrix: np.ndarray
    terms: list                   # max-abs of each depth contribution, s = 1..s_max
    tail_bound: float             # bound on the depth s_max + 1 contribution
    bounds: list                  # bound per depth s = 1..s_max + 1
    quad_error: float

    def to_json(self) -> dict:
        return {"t": [self.t.real, self.t.imag],
                "matrix": [[[x.real, x.imag] for x in row] for row in self.matrix],
                "terms": self.terms, "tail_bound": self.tail_bound, "bounds": self.bounds,
                "quad_error": self.quad_error}


class PsiEngine:
    """Chain sums for fixed Stokes data and radius; inner panels are shared across t."""

    def __init__(self, sd: StokesData, R: float, s_max: int, ratio: float = 0.6, p: int = 16, refine: int = 0):
        if s_max < 1:
            raise StokesError("depth must be >= 1")
        if R <= 0:
            raise StokesError("radius must be positive")
        self.sd, self.R, self.s_max = sd, float(R), s_max
        self.rays = {}
        for i, j in sd.pairs():
            dz = sd.z[i] - sd.z[j]
            # exp(-|dz|/r) underflows below r_min
            rule = RayRule.graded(sd.direction(i, j), R, abs(dz) / 700, ratio, p)
            for _ in range(refine):
                rule = rule.refined()
            self.rays[(i, j)] = rule
        self._build()

    def _build(self):
        sd = self.sd
        k = sd.k
        keys = list(self.rays)
        self.phi = {}
        for (i, j), rule in self.rays.items():
            dz = sd.z[i] - sd.z[j]
            with np.errstate(over="ignore", under="ignore"):
                self.phi[(i, j)] = sd.n[i, j] / (2j * math.pi) * np.exp(-dz / rule.tau)
        # F[s][(i, j)][q] = row j of the depth-s chain remainder at node q of ray (i, j)
        F = [{key: np.tile(np.eye(k, dtype=complex)[key[1]], (len(self.rays[key].r), 1)) for key in keys}]
        for s in range(1, self.s_max):
            nxt = {}
            for (i, j), rule in self.rays.items():
                acc = np.zeros((len(rule.r), k), dtype=complex)
                for (a, b), inner in self.rays.items():
                    if a != j:
                        continue
                    kern = 1.0 / (inner.tau[None, :] - rule.tau[:, None])
                    acc += kern @ ((self.phi[(a, b)] * inner.direction * inner.w)[:, None] * F[s - 1][(a, b)])
                nxt[(i, j)] = acc
            F.append(nxt)
        self.F = F

    def contributions(self, t: complex) -> list:
        """Depth-s matrices for s = 1..s_max."""
        sd = self.sd
        k = sd.k
        out = []
        for s in range(1, self.s_max + 1):
            M = np.zeros((k, k), dtype=complex)
            for (i, j), rule in self.rays.items():
                M[i] += rule.cauchy(self.phi[(i, j)][:, None] * self.F[s - 1][(i, j)], t)
            out.append(M)
        return out


def _angle_factor(sd: StokesData) -> float:
    """min over consecutive rays l_ab, l_bc of the constant c with |x - y| >= c |y|."""
    c = 1.0
    for (a, b) in sd.pairs():
        for (b2, d) in sd.pairs():
            if b2 != b:
                continue
            ang = abs(cmath.phase(sd.direction(b, d) / sd.direction(a, b)))
            if ang < math.pi / 2:
                c = min(c, math.sin(ang))
    return c


def tail_bounds(sd: StokesData, t: complex, R: float, depth: int) -> list:
    """Bounds on the max entry of the depth-s contribution, s = 1..depth.

    |tau_1 - t| >= dist(t, rays); |tau_{l+1} - tau_l| >= c |tau_{l+1}|; each ray
    factor is at most e^{-A/r}, so with Nrow = max_i sum_j |n_ij|

        B_s = (Nrow/2 pi)^s R E_2(A/R) / dist * (E_1(A/R)/c)^(s-1).
    """
    if not sd.pairs():
        return [0.0] * depth
    A = sd.A
    Nrow = float(np.max(np.sum(np.abs(sd.n), axis=1)))
    dist = min(_ray_distance(sd.direction(i, j), R, t) for i, j in sd.pairs())
    c = _angle_factor(sd)
    x = A / R
    first = R * float(expn(2, x)) / dist
    step = float(exp1(x)) / c
    return [(Nrow / (2 * math.pi)) ** s * first * step ** (s - 1) for s in range(1, depth + 1)]


def _ray_distance(u: complex, R: float, t: complex) -> float:
    c = t / u
    return abs(c - min(max(c.real, 0.0), R))


_ENGINES: dict = {}


def _engine(sd, R, s_max, refine=0):
    key = (sd.z, sd.n.tobytes(), R, s_max, refine)
    if key not in _ENGINES:
        if len(_ENGINES) > 32:
            _ENGINES.clear()
        _ENGINES[key] = PsiEngine(sd, R, s_max, refine=refine)
    return _ENGINES[key]


def psi_series(sd: StokesData, t: complex, R: float, s_max: int, min_angle: float = 1e-10) -> PsiResult:
    """Truncated chain sum Psi(t) with per-depth sizes, tail bound and quadrature estimate."""
    t = complex(t)
    if not 0 < abs(t) < R:
        raise StokesError(f"|t| = {abs(t)} must lie in (0, R = {R})")
    if sd.pairs():
        dist = sd.stokes_distance(t)
        if dist <= min_angle:
            raise StokesError(f"t lies on a Stokes ray (angular distance {dist:.3e})")
    k = sd.k
    if not sd.pairs():
        return PsiResult(t, np.eye(k, dtype=complex), [0.0] * s_max, 0.0, [0.0] * (s_max + 1), 0.0)
    eng = _engine(sd, R, s_max)
    parts = eng.contributions(t)
    fine = _engine(sd, R, s_max, refine=1).contributions(t)
    M = np.eye(k, dtype=complex) + sum(parts)
    Mf = np.eye(k, dtype=complex) + sum(fine)
    bounds = tail_bounds(sd, t, R, s_max + 1)
    return PsiResult(t, Mf, [float(np.max(np.abs(P))) for P in fine], bounds[-1], bounds,
                     float(np.max(np.abs(M - Mf))))


# ---------------------------------------------------------------- splitting


@dataclass
class RHSplit:
    ts: np.ndarray
    M: np.ndarray          # (m, k, k)
    J: np.ndarray          # (m, k) samples of M^-1 I
    series: list           # TSeries per component
    radius: float
    condition: float
    fit_residual: float = 0.0
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"radius": self.radius, "condition": self.condition, "fit_residual": self.fit_residual,
                "series": [s.to_json() for s in self.series]}


class SplitError(ValueError):
    pass


def _radius_estimate(coeffs: np.ndarray, rho: float, floor: float) -> float:
    """Fit log|a_n| = c - n log(radius) + beta log n over coefficients above the noise floor.

    The log n term absorbs the algebraic prefactor of a branch point, which
    otherwise biases a plain root test at moderate n.
    """
    mags = np.abs(coeffs)
    # pair neighbours so alternating or lacunary patterns do not break the fit
    env = np.maximum(mags[:-1], mags[1:])
    n = np.arange(len(env))
    keep = (env * rho ** n > floor) & (n >= 2) & (env > 0)
    if keep.sum() < 5:
        return math.inf
    X = np.stack([np.ones(keep.sum()), n[keep], np.log(n[keep])], axis=1)
    sol, *_ = np.linalg.lstsq(X, np.log(env[keep]), rcond=None)
    return float(math.exp(-sol[1]))


def rh_split(ts, M, I, order: int | None = None, cond_max: float = 1e10, floor: float = 1e-13) -> RHSplit:
    """J = M^-1 I on the grid, its Taylor coefficients and a convergence radius estimate.

    Samples on an equispaced circle |t| = rho use the FFT; other grids use a
    column-scaled least-squares fit.
    """
    ts = np.asarray(ts, dtype=complex)
    M = np.asarray(M, dtype=complex)
    I = np.asarray(I, dtype=complex)
    if M.shape[0] != len(ts) or I.shape[0] != len(ts):
        raise SplitError("sample grids do not match")
    conds = np.array([np.linalg.cond(m) for m in M])
    if np.max(conds) > cond_max:
        raise SplitError(f"ill-conditioned monodromy samples (cond {np.max(conds):.2e})")
    J = np.array([np.linalg.solve(m, v) for m, v in zip(M, I)])
    m = len(ts)
    rho = float(np.mean(np.abs(ts)))
    circle = np.allclose(np.abs(ts), rho, rtol=1e-12) and m >= 4
    if circle:
        ang = np.angle(ts / ts[0])
        steps = np.diff(np.unwrap(ang))
        circle = np.allclose(steps, 2 * np.pi / m, atol=1e-9)
    series, radii = [], []
    resid = 0.0
    if circle:
        # a_n rho^n e^{i n theta_0} = mean_k J(t_k) w^{-nk}
        ph = ts[0] / abs(ts[0])
        F = np.fft.fft(J, axis=0) / m
        nmax = order if order is not None else m // 2
        n = np.arange(nmax + 1)
        coef = F[: nmax + 1] / (rho ** n * ph ** n)[:, None]
        # aliasing test: the upper half of the spectrum should be at noise level
        resid = float(np.max(np.abs(F[m // 2:])) / max(np.max(np.abs(F)), 1e-300))
        for c in range(J.shape[1]):
            series.append(TSeries(list(coef[:, c])))
            scaled = np.abs(coef[:, c]) * rho ** n
            radii.append(_radius_estimate(coef[:, c], rho, floor * max(np.max(scaled), 1e-300)))
        cond = 1.0
    else:
        nmax = order if order is not None else max(1, m // 2 - 1)
        scale = max(np.max(np.abs(ts)), 1e-300)
        V = np.vander(ts / scale, nmax + 1, increasing=True)
        cond = float(np.linalg.cond(V))
        if cond > cond_max:
            raise SplitError(f"ill-conditioned Taylor fit (cond {cond:.2e})")
        sol, *_ = np.linalg.lstsq(V, J, rcond=None)
        resid = float(np.max(np.abs(V @ sol - J)))
        for c in range(J.shape[1]):
            coef = sol[:, c] / scale ** np.arange(nmax + 1)
            series.append(TSeries(list(coef)))
            scaled = np.abs(sol[:, c])
            radii.append(_radius_estimate(coef, scale, floor * max(np.max(scaled), 1e-300)))
    return RHSplit(ts, M, J, series, float(min(radii)), cond, resid, {"radii": radii})


def circle_grid(rho: float, m: int, offset: float = 0.5) -> np.ndarray:
    """m equispaced points on |t| = rho, shifted by offset steps off the real axis."""
    return rho * np.exp(2j * np.pi * (np.arange(m) + offset) / m)
