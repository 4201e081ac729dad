"""The t-twist of a group element: x^beta -> e^{-Z(beta)/t} x^beta.

The substitution is a grading-compatible torus rescaling, so it commutes with
exp and with brackets; it is applied to the log field term by term.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from ..lattice import CentralCharge
from ..lie import GradedVectorField, GroupElement, action_series


class SectorError(ValueError):
    def __init__(self, beta, value):
        super().__init__(f"sector condition fails at beta={tuple(beta)}: Re(Z(beta)/t) = {value:.3e} <= 0")
        self.beta = tuple(beta)


def _scalar(x) -> complex:
    if hasattr(x, "p") and hasattr(x, "q"):
        return int(x.p) / int(x.q)
    return complex(x)


@dataclass
class TwistedAutomorphism:
    element: GroupElement
    t: complex
    factors: dict      # beta -> e^{-Z(beta)/t} on the support

    def series(self, i: int):
        """x_i -> x_i * (1 + sum c_m x^m): the coefficients as a dict."""
        s = action_series(self.element, i)
        return dict(s.terms)

    def __call__(self, x):
        """Apply to a numeric point of the torus (truncated series)."""
        x = np.asarray(x, dtype=complex)
        out = np.empty_like(x)
        for i in range(len(x)):
            tot = 0j
            for m, c in self.series(i).items():
                tot += complex(c) * np.prod(x ** np.array(m))
            out[i] = x[i] * tot
        return out


def twist_factor(Z: CentralCharge, beta, t: complex) -> complex:
    return cmath.exp(-complex(Z(beta)) / complex(t))


def twist(g: GroupElement, Z: CentralCharge, t: complex) -> TwistedAutomorphism:
    t = complex(t)
    if t == 0:
        raise ValueError("t must be nonzero")
    ctx = g.ctx.with_mode("complex")
    terms, factors = {}, {}
    for beta, u in g.log.terms.items():
        zb = complex(Z(beta)) / t
        if zb.real <= 0:
            raise SectorError(beta, zb.real)
        f = cmath.exp(-zb)
        factors[beta] = f
        terms[beta] = tuple(f * _scalar(x) for x in u)
    return TwistedAutomorphism(GroupElement(GradedVectorField(terms, ctx)), t, factors)
