"""Exact scalars: rationals (flint.fmpq), Gaussian rationals, small rational linear algebra."""

from __future__ import annotations

from fractions import Fraction
from numbers import Integral, Rational

import flint

fmpq = flint.fmpq
ZERO = fmpq(0)
ONE = fmpq(1)


def Q(x) -> flint.fmpq:
    """Coerce ints, Fractions, fmpq and "p/q" strings to fmpq. Floats are taken exactly."""
    if isinstance(x, flint.fmpq):
        return x
    if isinstance(x, (bool,)):
        return fmpq(int(x))
    if isinstance(x, Integral):
        return fmpq(int(x))
    if isinstance(x, flint.fmpz):
        return fmpq(x)
    if isinstance(x, Rational):
        return fmpq(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        s = x.strip()
        if "/" in s:
            p, q = s.split("/")
            return fmpq(int(p), int(q))
        return fmpq(int(s))
    if isinstance(x, float):
        f = Fraction(x)
        return fmpq(f.numerator, f.denominator)
    raise TypeError(f"cannot make an exact rational from {x!r}")


def qstr(x) -> str:
    x = Q(x)
    return str(x.p) if x.q == 1 else f"{x.p}/{x.q}"


def is_exact(x) -> bool:
    return isinstance(x, (flint.fmpq, flint.fmpz, Integral, Rational, QQi))


class QQi:
    """Gaussian rational re + i*im with fmpq parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Q(re)
        self.im = Q(im)

    @staticmethod
    def coerce(z) -> "QQi":
        if isinstance(z, QQi):
            return z
        if isinstance(z, complex):
            return QQi(Q(z.real), Q(z.imag))
        if isinstance(z, (tuple, list)) and len(z) == 2:
            return QQi(Q(z[0]), Q(z[1]))
        return QQi(Q(z), 0)

    def __add__(self, o):
        o = QQi.coerce(o)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, o):
        o = QQi.coerce(o)
        return QQi(self.re - o.re, self.im - o.im)

    def __rsub__(self, o):
        return QQi.coerce(o) - self

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __mul__(self, o):
        o = QQi.coerce(o)
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def conj(self):
        return QQi(self.re, -self.im)

    def abs2(self):
        return self.re * self.re + self.im * self.im

    def __truediv__(self, o):
        o = QQi.coerce(o)
        d = o.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        n = self * o.conj()
        return QQi(n.re / d, n.im / d)

    def __eq__(self, o):
        if isinstance(o, complex) and not isinstance(o, QQi):
            return complex(self) == o
        try:
            o = QQi.coerce(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re != 0 or self.im != 0)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QQi({qstr(self.re)}, {qstr(self.im)})"


def cross(a, b):
    """Im(conj(a) b): positive when b is counterclockwise from a."""
    if isinstance(a, QQi) and isinstance(b, QQi):
        return a.re * b.im - a.im * b.re
    a, b = complex(a), complex(b)
    return a.real * b.imag - a.imag * b.real


def dot(a, b):
    if isinstance(a, QQi) and isinstance(b, QQi):
        return a.re * b.re + a.im * b.im
    a, b = complex(a), complex(b)
    return a.real * b.real + a.imag * b.imag


# ---------------------------------------------------------------- linear algebra


def qmat(rows) -> flint.fmpq_mat:
    rows = [[Q(x) for x in r] for r in rows]
    m = len(rows)
    n = len(rows[0]) if m else 0
    return flint.fmpq_mat(m, n, [x for r in rows for x in r])


def mat_rows(M: flint.fmpq_mat) -> list[list]:
    return [[M[i, j] for j in range(M.ncols())] for i in range(M.nrows())]


def nullspace(rows, n: int | None = None) -> list[list]:
    """Rational basis of {x : A x = 0} from the reduced row echelon form."""
    if not rows:
        return [[ONE if i == j else ZERO for i in range(n)] for j in range(n)]
    A = qmat(rows)
    n = A.ncols()
    R, rank = A.rref()
    pivots = []
    r = 0
    for j in range(n):
        if r < rank and R[r, j] != 0:
            pivots.append(j)
            r += 1
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * n
        v[f] = ONE
        for i, p in enumerate(pivots):
            v[p] = -R[i, f]
        basis.append(v)
    return basis


def rank(rows) -> int:
    if not rows or not rows[0]:
        return 0
    return qmat(rows).rank()


def det(rows):
    return qmat(rows).det()


def is_negative_definite(M) -> bool:
    """Sylvester's criterion on -M (exact)."""
    k = len(M)
    for s in range(1, k + 1):
        minor = det([[-M[i][j] for j in range(s)] for i in range(s)])
        if minor <= 0:
            return False
    return True
