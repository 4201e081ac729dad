"""Formal series in t, Borel transforms and singularity estimates."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import flint
import numpy as np
from scipy.interpolate import pade
from scipy.linalg import LinAlgWarning

from ..exact import Q, qstr


class SeriesError(ValueError):
    pass


def _cplx(x) -> complex:
    if isinstance(x, flint.fmpq):
        return int(x.p) / int(x.q)
    return complex(x)


@dataclass
class TSeries:
    """c_0 + c_1 t + ... + c_N t^N.

    When the series is prefactor * (rational series), `exact` holds the rationals
    and `prefactor` the common complex factor; `coeffs` are always complex.
    """

    coeffs: list
    exact: list | None = None
    prefactor: complex = 1.0

    def __post_init__(self):
        self.coeffs = [complex(c) for c in self.coeffs]

    @staticmethod
    def from_exact(rats, prefactor=1.0) -> "TSeries":
        rats = [Q(r) for r in rats]
        return TSeries([complex(prefactor) * _cplx(r) for r in rats], rats, complex(prefactor))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __call__(self, t, terms: int | None = None):
        c = self.coeffs[: (terms if terms is not None else len(self.coeffs))]
        return np.polyval(np.array(c[::-1]), t)

    def optimal_terms(self, t) -> int:
        """Number of terms up to the smallest one (optimal truncation)."""
        mags = [abs(c) * abs(t) ** k for k, c in enumerate(self.coeffs)]
        best = min(range(len(mags)), key=lambda k: (mags[k] if mags[k] > 0 else math.inf, k))
        return max(best, 1)

    def to_json(self) -> dict:
        d = {"coeffs": [[c.real, c.imag] for c in self.coeffs]}
        if self.exact is not None:
            d["exact"] = [qstr(r) for r in self.exact]
            d["prefactor"] = [self.prefactor.real, self.prefactor.imag]
        return d

    @staticmethod
    def from_json(d: dict) -> "TSeries":
        if "exact" in d:
            pf = d.get("prefactor", [1.0, 0.0])
            return TSeries.from_exact(d["exact"], complex(pf[0], pf[1]))
        return TSeries([complex(*c) if isinstance(c, list) else complex(c) for c in d["coeffs"]])


@dataclass
class Singularity:
    location: complex
    stable: bool
    spread: float

    @property
    def distance(self) -> float:
        return abs(self.location)

    def to_json(self) -> dict:
        return {"location": [self.location.real, self.location.imag], "distance": self.distance,
                "stable": self.stable, "spread": self.spread}


@dataclass
class BorelSeries:
    """B(c) = sum c_n lambda^n / n!, with singularity estimates."""

    coeffs: list
    source: TSeries
    poles: list = field(default_factory=list)
    ratio_radius: float = math.inf
    root_radius: float = math.inf
    orders: tuple = ()

    @property
    def stable_poles(self) -> list:
        return [p for p in self.poles if p.stable]

    def nearest(self) -> Singularity | None:
        st = self.stable_poles
        return min(st, key=lambda p: p.distance) if st else None

    def to_json(self) -> dict:
        return {"coeffs": [[complex(c).real, complex(c).imag] for c in self.coeffs],
                "poles": [p.to_json() for p in self.poles], "ratio_radius": self.ratio_radius,
                "root_radius": self.root_radius, "pade_orders": list(self.orders)}


def _pade_poles(b, L: int) -> np.ndarray:
    """Poles of the diagonal [L/L] approximant of sum b_n x^n."""
    # high orders are ill-conditioned by nature; stability across orders is the real filter
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        try:
            _, q = pade(list(b[: 2 * L + 1]), L, L)
            den = np.asarray(q.coeffs)
        except np.linalg.LinAlgError:
            den = _pade_denominator_svd(b, L)
    nz = np.nonzero(np.abs(den) > 1e-300)[0]
    if len(nz) == 0:
        return np.array([])
    den = den[nz[0]:]
    return np.roots(den) if len(den) > 1 else np.array([])


def _pade_denominator_svd(b, L: int) -> np.ndarray:
    """Denominator of [L/L] from the smallest singular vector of the Toeplitz block.

    Used when the block is exactly singular (the function is rational of lower
    degree); every null vector keeps the true poles as roots, the extra roots
    move between orders and fail the stability filter.
    """
    b = np.asarray(b[: 2 * L + 1])
    C = np.array([[b[L + 1 + i - j] if L + 1 + i - j >= 0 else 0 for j in range(L + 1)] for i in range(L)])
    q = np.linalg.svd(C)[2][-1].conj()
    return q[::-1]          # highest degree first, as np.roots expects


def _radius_tests(b) -> tuple[float, float]:
    mags = np.abs(np.asarray(b, dtype=complex))
    tail = [k for k in range(len(mags) // 2, len(mags)) if mags[k] > 0 and k > 0]
    if not tail:
        return math.inf, math.inf
    root = float(np.mean([mags[k] ** (-1.0 / k) for k in tail[-3:]]))
    ratios = [mags[k - 1] / mags[k] for k in tail if mags[k - 1] > 0]
    # alternate terms may vanish or oscillate; average over the last few ratios
    ratio = float(np.exp(np.mean(np.log(ratios[-4:])))) if ratios else math.inf
    return ratio, root


def borel(c: TSeries, scan_radius: float | None = None, rel: float = 0.02, levels: int = 3) -> BorelSeries:
    """Borel transform plus Pade-pole and root/ratio singularity estimates.

    A pole of the top diagonal approximant is reported stable when the next
    `levels - 1` lower diagonal orders each have a pole within `rel` (relative).
    """
    if all(x == 0 for x in c.coeffs):
        raise SeriesError("all-zero series has no Borel singularities")
    if c.exact is not None:
        bex = [r / math.factorial(n) for n, r in enumerate(c.exact)]
        b = [c.prefactor * _cplx(r) for r in bex]
    else:
        bex = None
        b = [x / math.factorial(n) for n, x in enumerate(c.coeffs)]
    ratio, root = _radius_tests(b)
    out = BorelSeries(bex if bex is not None else b, c, ratio_radius=ratio, root_radius=root)
    N = len(b) - 1
    Ltop = N // 2
    if Ltop < levels:
        return out
    # rescale the variable so the coefficients are O(1): lambda = s * x
    s = root if math.isfinite(root) and root > 0 else 1.0
    bs = np.array([x * s ** n for n, x in enumerate(b)], dtype=complex)
    if np.all(np.abs(bs.imag) <= 1e-15 * np.abs(bs).max()):
        bs = bs.real
    orders = tuple(range(Ltop, Ltop - levels, -1))
    sets = [_pade_poles(bs, L) * s for L in orders]
    out.orders = orders
    scan = scan_radius if scan_radius is not None else 3 * s
    for p in sets[0]:
        if abs(p) > scan:
            continue
        spreads = []
        for other in sets[1:]:
            if len(other) == 0:
                spreads.append(math.inf)
                continue
            spreads.append(float(np.min(np.abs(other - p)) / abs(p)))
        spread = max(spreads)
        out.poles.append(Singularity(complex(p), spread <= rel, spread))
    out.poles.sort(key=lambda q: (not q.stable, q.distance))
    return out


@dataclass
class GevreyFit:
    """log(|c_n| / n!) ~ log K + n log A on the fitted range."""

    A: float
    K: float
    root_trend: list
    bounded: bool

    def to_json(self) -> dict:
        return {"A": self.A, "K": self.K, "bounded": self.bounded, "root_trend": self.root_trend}


def gevrey_fit(c, start: int = 1, factor: float = 1.5) -> GevreyFit:
    """Fit Gevrey-1 growth |c_n| <= K A^n n! and test that the per-step rate |c_m/c_k|^(1/(m-k))/m stays bounded.

    `bounded` asks that the late half of the trend never exceeds `factor` times
    the early maximum.  A trend growing linearly in n (Gevrey order 2) gives a
    late/early ratio close to 2, so factor must stay well below 2.
    """
    coeffs = c.coeffs if isinstance(c, TSeries) else list(c)
    pts = [(n, abs(complex(x))) for n, x in enumerate(coeffs) if n >= start and abs(complex(x)) > 0]
    if len(pts) < 3:
        raise SeriesError("need at least three nonzero coefficients for a growth fit")
    n = np.array([p[0] for p in pts], dtype=float)
    y = np.array([math.log(p[1]) - math.lgamma(p[0] + 1) for p in pts])
    slope, icpt = np.polyfit(n, y, 1)
    # growth rate between consecutive nonzero terms, so the overall constant K
    # (which can be tiny) does not leak into the trend
    trend = [math.exp((math.log(m1) - math.log(m0)) / (k1 - k0)) / k1
             for (k0, m0), (k1, m1) in zip(pts, pts[1:])]
    half = len(trend) // 2
    early = max(trend[: max(half, 1)])
    bounded = max(trend[half:]) <= factor * early
    return GevreyFit(float(math.exp(slope)), float(math.exp(icpt)), trend, bool(bounded))
