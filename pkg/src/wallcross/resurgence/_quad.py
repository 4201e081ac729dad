"""Composite Gauss-Legendre rules on rays from the origin, with Cauchy integrals.

A ray is {r u : 0 < r < R} for a unit complex u.  Panels are graded geometrically
towards 0, where every integrand used here is flat (it carries a factor exp(-a/r)).
Cauchy integrals int f(tau)/(tau - t) dtau near or on the ray subtract the pole
panelwise: the Legendre interpolant P of f on a panel gives

    int P(r)/(r - c) dr = sum_q w_q (P(r_q) - P(c))/(r_q - c) + P(c) log((b - c)/(a - c))

exactly, because the first integrand is a polynomial of degree p - 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L


@lru_cache(maxsize=None)
def _gauss(p: int):
    x, w = L.leggauss(p)
    # rows: Legendre coefficients from node values (exact for degree < p)
    V = L.legvander(x, p - 1)
    k = np.arange(p)
    to_coef = (V * w[:, None]).T * ((2 * k + 1) / 2)[:, None]
    return x, w, to_coef


@dataclass
class RayRule:
    direction: complex
    edges: np.ndarray
    p: int = 16

    def __post_init__(self):
        self.direction = complex(self.direction) / abs(self.direction)
        self.edges = np.asarray(self.edges, dtype=float)
        x, w, _ = _gauss(self.p)
        a, b = self.edges[:-1], self.edges[1:]
        half = (b - a) / 2
        mid = (a + b) / 2
        self.r = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        self.w = (half[:, None] * w[None, :]).ravel()
        self.tau = self.r * self.direction
        self.npanel = len(a)

    @staticmethod
    def graded(direction, R: float, r_min: float, ratio: float = 0.6, p: int = 16, split: int = 1) -> "RayRule":
        edges = [R]
        while edges[-1] * ratio > r_min:
            edges.append(edges[-1] * ratio)
        edges.append(0.0)
        edges = np.array(edges[::-1])
        if split > 1:
            fine = [np.linspace(edges[i], edges[i + 1], split + 1)[:-1] for i in range(len(edges) - 1)]
            edges = np.concatenate(fine + [edges[-1:]])
        return RayRule(direction, edges, p)

    def refined(self) -> "RayRule":
        mids = (self.edges[:-1] + self.edges[1:]) / 2
        e = np.empty(2 * len(self.edges) - 1)
        e[0::2] = self.edges
        e[1::2] = mids
        return RayRule(self.direction, e, self.p)

    @property
    def R(self) -> float:
        return float(self.edges[-1])

    def integrate(self, values) -> complex:
        """int f(tau) dtau along the ray, given f at the nodes."""
        return complex(np.dot(self.w, values) * self.direction)

    def distance(self, t: complex) -> float:
        c = t / self.direction
        x = min(max(c.real, 0.0), self.R)
        return abs(c - x)

    def cauchy(self, values, t, side: int = 0):
        """int f(tau)/(tau - t) dtau, f given at the nodes (last axis may be vectorial).

        For t on the ray, side=+1 takes the boundary value from the left of the
        outward ray and side=-1 from the right; side=0 demands t off the ray.
        """
        values = np.asarray(values)
        c = complex(t) / self.direction
        p = self.p
        F = values.reshape((self.npanel, p) + values.shape[1:])
        r = self.r.reshape(self.npanel, p)
        w = self.w.reshape(self.npanel, p)
        a, b = self.edges[:-1], self.edges[1:]
        on_ray = abs(c.imag) <= 1e-14 * max(1.0, abs(c)) and 0 < c.real < self.R
        if on_ray and side == 0:
            raise ValueError("point lies on the integration ray")
        if on_ray:
            c = complex(c.real, 0.0)
        # panels close to c get the subtraction treatment
        near = (c.real > a - (b - a)) & (c.real < b + (b - a)) & (abs(c.imag) < 2 * (b - a))
        total = np.zeros(values.shape[1:], dtype=complex)
        far = ~near
        if far.any():
            total = total + np.einsum("pq,pq...->...", w[far] / (r[far] - c), F[far])
        _, _, to_coef = _gauss(p)
        x, _, _ = _gauss(p)
        for i in np.nonzero(near)[0]:
            h = (b[i] - a[i]) / 2
            m = (a[i] + b[i]) / 2
            xc = (c - m) / h
            coef = np.tensordot(to_coef, F[i], axes=(1, 0))
            Pc = L.legval(xc, coef)
            dd = (x - xc).reshape((p,) + (1,) * (F.ndim - 2))
            hit = np.abs(dd) < 1e-13
            with np.errstate(divide="ignore", invalid="ignore"):
                quot = (F[i] - Pc) / (dd * h)
            if hit.any():
                dP = L.legval(xc, L.legder(coef)) / h
                quot = np.where(hit, dP, quot)
            s = np.tensordot(w[i], quot, axes=(0, 0))
            if on_ray and a[i] < c.real < b[i]:
                lg = np.log((b[i] - c.real) / (c.real - a[i])) + 1j * np.pi * side
            else:
                lg = np.log((b[i] - c) / (a[i] - c))
            total = total + s + Pc * lg
        return total
