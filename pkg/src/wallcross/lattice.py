"""Lattices, central charges, cones, sectors and quadratic forms.

Everything here is exact over the rationals / Gaussian rationals unless a
central charge is given with float entries, in which case predicates fall
back to a tolerance and say so.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exact import (
    ONE,
    ZERO,
    Q,
    QQi,
    cross,
    dot,
    is_negative_definite,
    mat_rows,
    nullspace,
    qmat,
    rank,
)

TOL = 1e-12


class GeometryError(ValueError):
    pass


def gamma(coords) -> tuple[int, ...]:
    return tuple(int(c) for c in coords)


def primitive(v) -> tuple[int, ...]:
    g = 0
    for c in v:
        g = math.gcd(g, int(c))
    if g == 0:
        raise GeometryError("zero vector has no primitive direction")
    return tuple(int(c) // g for c in v)


# ---------------------------------------------------------------- central charge


@dataclass(frozen=True)
class CentralCharge:
    """Z(e_i) for a basis e_i; entries are QQi (exact) or complex."""

    values: tuple

    def __init__(self, values):
        vals = []
        exact = all(not isinstance(v, (float, complex)) or _is_float_int(v) for v in values)
        for v in values:
            if exact:
                vals.append(QQi.coerce(v) if not isinstance(v, complex) else QQi(Q(v.real), Q(v.imag)))
            else:
                vals.append(complex(v))
        object.__setattr__(self, "values", tuple(vals))

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, QQi) for v in self.values)

    @property
    def rational_flag(self) -> bool:
        return self.exact and all(v.re.q == 1 and v.im.q == 1 for v in self.values)

    def __call__(self, g):
        return eval_charge(self, g)

    def rows(self) -> tuple[list, list]:
        """Real and imaginary coefficient rows."""
        if self.exact:
            return [v.re for v in self.values], [v.im for v in self.values]
        return [v.real for v in self.values], [v.imag for v in self.values]

    @cached_property
    def rank(self) -> int:
        re, im = self.rows()
        if self.exact:
            return rank([re, im])
        return int(np.linalg.matrix_rank(np.array([re, im], dtype=float), tol=1e-10))

    def as_complex(self) -> np.ndarray:
        return np.array([complex(v) for v in self.values])

    def lerp(self, other: "CentralCharge", s) -> "CentralCharge":
        if self.exact and other.exact and not isinstance(s, float):
            s = Q(s)
            return CentralCharge([a * (ONE - s) + b * s for a, b in zip(self.values, other.values)])
        s = float(s)
        return CentralCharge([complex(a) * (1 - s) + complex(b) * s for a, b in zip(self.values, other.values)])


def _is_float_int(v) -> bool:
    # floats that are exactly representable are still treated as floats, except
    # complex numbers with integral parts (typed like 1j) which are clearly exact input
    if isinstance(v, complex):
        return v.real.is_integer() and v.imag.is_integer()
    if isinstance(v, float):
        return v.is_integer()
    return True


def eval_charge(Z: CentralCharge, g):
    g = tuple(g)
    if len(g) != Z.n:
        raise GeometryError(f"dimension mismatch: charge has rank {Z.n}, vector has length {len(g)}")
    if Z.exact:
        out = QQi(0, 0)
        for c, v in zip(g, Z.values):
            if c:
                out = out + v * c
        return out
    return complex(sum(int(c) * v for c, v in zip(g, Z.values)))


# ---------------------------------------------------------------- sectors


def _half(w) -> int:
    # 0 for angles in [0, pi), 1 for [pi, 2pi)
    if isinstance(w, QQi):
        return 0 if (w.im > 0 or (w.im == 0 and w.re > 0)) else 1
    w = complex(w)
    return 0 if (w.imag > 0 or (w.imag == 0 and w.real > 0)) else 1


def ccw_less(w1, w2) -> bool:
    """arg(w1) < arg(w2) with arguments taken in [0, 2pi)."""
    h1, h2 = _half(w1), _half(w2)
    if h1 != h2:
        return h1 < h2
    return cross(w1, w2) > 0


def same_direction(w1, w2) -> bool:
    return cross(w1, w2) == 0 and dot(w1, w2) > 0


def angle_of(z) -> float:
    return math.atan2(float(z.im), float(z.re)) if isinstance(z, QQi) else cmath.phase(complex(z))


@dataclass(frozen=True)
class Sector:
    """Angular sector from theta_minus (right boundary) counterclockwise to theta_plus (left).

    When exact boundary directions are attached, containment of exact points
    is decided exactly; otherwise angles are compared with a tolerance.
    """

    theta_minus: float
    theta_plus: float
    include_left: bool = True
    include_right: bool = True
    dir_minus: QQi | None = None
    dir_plus: QQi | None = None

    def __post_init__(self):
        if self.theta_plus < self.theta_minus - TOL:
            raise GeometryError("sector needs theta_plus >= theta_minus")
        if self.theta_plus - self.theta_minus >= 2 * math.pi:
            raise GeometryError("sector wider than a full turn")

    @staticmethod
    def between(z_minus, z_plus, include_left=True, include_right=True) -> "Sector":
        """Sector swept counterclockwise from direction z_minus to direction z_plus."""
        exact = isinstance(z_minus, QQi) or isinstance(z_plus, QQi)
        if exact:
            z_minus, z_plus = QQi.coerce(z_minus), QQi.coerce(z_plus)
        a, b = angle_of(z_minus), angle_of(z_plus)
        if exact and same_direction(z_minus, z_plus):
            b = a
        else:
            while b < a - TOL:
                b += 2 * math.pi
        return Sector(a, b, include_left, include_right,
                      z_minus if exact else None, z_plus if exact else None)

    @staticmethod
    def ray(direction) -> "Sector":
        return Sector.between(direction, direction, True, True)

    @staticmethod
    def from_angles(theta_minus, theta_plus, include_left=True, include_right=True) -> "Sector":
        return Sector(float(theta_minus), float(theta_plus), include_left, include_right)

    @property
    def exact(self) -> bool:
        return self.dir_minus is not None and self.dir_plus is not None

    @property
    def width(self) -> float:
        return self.theta_plus - self.theta_minus

    @property
    def is_ray(self) -> bool:
        if self.exact:
            return same_direction(self.dir_minus, self.dir_plus)
        return abs(self.width) <= TOL

    @property
    def admissible(self) -> bool:
        if self.exact and not self.is_ray:
            tb = self.dir_plus * self.dir_minus.conj()
            if tb.im > 0:
                return True
            if tb.im == 0 and tb.re < 0:
                return not (self.include_left or self.include_right)
            return False
        w = self.width
        if w < math.pi - TOL:
            return True
        if abs(w - math.pi) <= TOL:
            return not (self.include_left or self.include_right)
        return False

    def contains(self, z) -> bool:
        return sector_contains(self, z)

    def bisector(self) -> complex:
        return cmath.exp(1j * (self.theta_minus + self.theta_plus) / 2)

    def to_json(self) -> dict:
        out = {"theta_minus": self.theta_minus, "theta_plus": self.theta_plus,
               "include_left": self.include_left, "include_right": self.include_right}
        if self.exact:
            from .exact import qstr

            out["dir_minus"] = [qstr(self.dir_minus.re), qstr(self.dir_minus.im)]
            out["dir_plus"] = [qstr(self.dir_plus.re), qstr(self.dir_plus.im)]
        return out

    @staticmethod
    def from_json(d: dict) -> "Sector":
        if "dir_minus" in d and "dir_plus" in d:
            return Sector.between(QQi.coerce(d["dir_minus"]), QQi.coerce(d["dir_plus"]),
                                  bool(d.get("include_left", True)), bool(d.get("include_right", True)))
        return Sector(float(d["theta_minus"]), float(d["theta_plus"]),
                      bool(d.get("include_left", True)), bool(d.get("include_right", True)))


def sector_contains(V: Sector, z) -> bool:
    if (isinstance(z, QQi) and not z) or (not isinstance(z, QQi) and complex(z) == 0):
        raise GeometryError("sector membership undefined for z = 0")
    if V.exact and isinstance(z, QQi):
        a, b = V.dir_minus, V.dir_plus
        t = z * a.conj()
        if t.im == 0 and t.re > 0:
            return V.include_right or (V.is_ray and V.include_left)
        if V.is_ray:
            return False
        tb = b * a.conj()
        if same_direction(t, tb):
            return V.include_left
        return ccw_less(t, tb)
    phi = angle_of(z)
    rel = (phi - V.theta_minus) % (2 * math.pi)
    if rel > 2 * math.pi - TOL:
        rel = 0.0
    w = V.width
    if rel <= TOL:
        return V.include_right or (w <= TOL and V.include_left)
    if abs(rel - w) <= TOL:
        return V.include_left
    return rel < w


# ---------------------------------------------------------------- Fourier-Motzkin


def _normalize_row(a, b):
    for x in a:
        if x != 0:
            s = abs(x)
            return tuple(y / s for y in a), b / s
    return tuple(a), b


def fm_eliminate(rows, j):
    """Eliminate variable j from inequalities a.x >= b."""
    pos, neg, rest = [], [], []
    for a, b in rows:
        (pos if a[j] > 0 else neg if a[j] < 0 else rest).append((a, b))
    out = set(rest)
    for ap, bp in pos:
        for an, bn in neg:
            cp, cn = -an[j], ap[j]
            a = tuple(cp * x + cn * y for x, y in zip(ap, an))
            out.add(_normalize_row(a, cp * bp + cn * bn))
    return list(out)


def fm_feasible(rows, nvars) -> bool:
    """Exact feasibility of {x : a.x >= b for all rows}."""
    rows = [_normalize_row(tuple(Q(x) for x in a), Q(b)) for a, b in rows]
    for j in range(nvars):
        rows = fm_eliminate(rows, j)
    return all(b <= 0 for _, b in rows)


# ---------------------------------------------------------------- cones


@dataclass(frozen=True)
class RationalCone:
    """Closed cone generated by primitive integer vectors."""

    generators: tuple

    def __init__(self, generators):
        gens = sorted({primitive(g) for g in generators})
        if not gens:
            raise GeometryError("cone needs at least one generator")
        if len({len(g) for g in gens}) != 1:
            raise GeometryError("generators of different lengths")
        object.__setattr__(self, "generators", tuple(gens))

    @staticmethod
    def orthant(n: int) -> "RationalCone":
        return RationalCone([tuple(int(i == j) for i in range(n)) for j in range(n)])

    @property
    def n(self) -> int:
        return len(self.generators[0])

    @cached_property
    def inequalities(self) -> tuple:
        """Rows a with cone = {x : a.x >= 0}; equalities appear as +-pairs."""
        n, G = self.n, self.generators
        if len(G) == n and rank([list(g) for g in G]) == n:
            # simplicial: lambda = G^-1 x >= 0
            inv = qmat([[G[j][i] for j in range(n)] for i in range(n)]).inv()
            rows = {_normalize_row(tuple(r), ZERO)[0] for r in mat_rows(inv)}
            return tuple(sorted(rows, key=lambda r: tuple(float(x) for x in r)))
        m = len(G)
        rows = []
        for i in range(n):
            a = [ZERO] * (n + m)
            a[i] = ONE
            for j in range(m):
                a[n + j] = Q(-G[j][i])
            rows.append((tuple(a), ZERO))
            rows.append((tuple(-x for x in a), ZERO))
        for j in range(m):
            a = [ZERO] * (n + m)
            a[n + j] = ONE
            rows.append((tuple(a), ZERO))
        rows = [_normalize_row(a, b) for a, b in rows]
        for j in range(n, n + m):
            rows = fm_eliminate(rows, j)
        out = set()
        for a, _ in rows:
            a = a[:n]
            if any(x != 0 for x in a):
                out.add(_normalize_row(a, ZERO)[0])
        return tuple(sorted(out, key=lambda r: tuple(float(x) for x in r)))

    def contains(self, g) -> bool:
        g = tuple(g)
        if len(g) != self.n:
            raise GeometryError("dimension mismatch")
        return all(sum(a * c for a, c in zip(row, g) if c) >= 0 for row in self.inequalities)

    @cached_property
    def is_strict(self) -> bool:
        ineq = [list(r) for r in self.inequalities]
        return bool(ineq) and rank(ineq) == self.n

    def is_positive(self, ell) -> bool:
        return all(sum(a * b for a, b in zip(ell, g)) > 0 for g in self.generators)

    def lattice_points(self, ell, N: int, include_zero=False) -> list[tuple[int, ...]]:
        """All lattice points of the cone with 1 <= ell(g) <= N, sorted by (ell, g)."""
        ell = tuple(int(x) for x in ell)
        if not self.is_positive(ell):
            raise GeometryError("grading functional is not positive on the cone generators")
        n = self.n
        lo, hi = [], []
        for i in range(n):
            b = max(Q(abs(g[i])) / sum(a * c for a, c in zip(ell, g)) for g in self.generators) * N
            b = int(b.p // b.q) + 1
            lo.append(0 if all(g[i] >= 0 for g in self.generators) else -b)
            hi.append(0 if all(g[i] <= 0 for g in self.generators) else b)
        out = []
        for g in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            d = sum(a * c for a, c in zip(ell, g))
            if 1 <= d <= N and self.contains(g):
                out.append(g)
        out.sort(key=lambda g: (sum(a * c for a, c in zip(ell, g)), g))
        if include_zero:
            out.insert(0, (0,) * n)
        return out


# ---------------------------------------------------------------- quadratic forms


@dataclass(frozen=True)
class QuadraticForm:
    matrix: tuple

    def __init__(self, matrix):
        M = tuple(tuple(Q(x) for x in row) for row in matrix)
        n = len(M)
        if any(len(r) != n for r in M):
            raise GeometryError("quadratic form needs a square matrix")
        for i in range(n):
            for j in range(n):
                if M[i][j] != M[j][i]:
                    raise GeometryError("quadratic form matrix must be symmetric")
        object.__setattr__(self, "matrix", M)

    @staticmethod
    def diag(*d) -> "QuadraticForm":
        return QuadraticForm([[d[i] if i == j else 0 for j in range(len(d))] for i in range(len(d))])

    @property
    def n(self) -> int:
        return len(self.matrix)

    def __call__(self, v):
        M = self.matrix
        v = [Q(x) for x in v]
        return sum((M[i][j] * v[i] * v[j] for i in range(len(v)) for j in range(len(v)) if v[i] and v[j]), ZERO)

    def restrict(self, basis) -> list[list]:
        M = self.matrix
        return [[sum(b1[i] * M[i][j] * b2[j] for i in range(self.n) for j in range(self.n))
                 for b2 in basis] for b1 in basis]

    def to_json(self) -> list:
        from .exact import qstr

        return [[qstr(x) for x in row] for row in self.matrix]


def kernel_basis(Z: CentralCharge, tol: float = 1e-12):
    """Basis of Ker Z_R; exact rational when Z is exact, SVD otherwise (flagged)."""
    re, im = Z.rows()
    if Z.exact:
        return nullspace([re, im], Z.n), False
    A = np.array([re, im], dtype=float)
    _, s, vt = np.linalg.svd(A)
    r = int((s > tol * max(1.0, s.max(initial=0.0))).sum())
    return [list(row) for row in vt[r:]], True


@dataclass
class SupportCertificate:
    passed: bool
    bad_support: list = field(default_factory=list)
    kernel_negative: bool = True
    kernel_dim: int = 0
    warning: str | None = None

    def __bool__(self):
        return self.passed


def check_support_property(support, Z: CentralCharge, Q_: QuadraticForm, tol: float = 1e-12) -> SupportCertificate:
    if Q_.n != Z.n:
        raise GeometryError("dimension mismatch between Z and Q")
    bad = []
    for g in support:
        if len(g) != Z.n:
            raise GeometryError("dimension mismatch in support vector")
        if Q_(g) < 0:
            bad.append(tuple(g))
    K, numeric = kernel_basis(Z, tol)
    warning = None
    if not K:
        neg = True
    elif numeric:
        M = np.array([[float(x) for x in r] for r in Q_.matrix])
        B = np.array(K, dtype=float).T
        ev = np.linalg.eigvalsh(B.T @ M @ B)
        neg = bool(ev.max() < -tol)
        warning = f"kernel computed numerically (tol {tol:g})"
    else:
        neg = is_negative_definite(Q_.restrict(K))
    return SupportCertificate(not bad and neg, bad, neg, len(K), warning)


def _adapted_basis(Z0: CentralCharge):
    """Vectors dual to the rows of Z0 followed by a kernel basis; Q is diagonal in it."""
    if not Z0.exact:
        Z0 = CentralCharge([QQi(Q(complex(v).real), Q(complex(v).imag)) for v in Z0.values])
    n = Z0.n
    re, im = Z0.rows()
    r = Z0.rank
    if r == 0:
        raise GeometryError("Z0 = 0 has no adapted form")
    K = nullspace([re, im], n)
    if r == 2:
        G = qmat([[sum(a * b for a, b in zip(x, y)) for y in (re, im)] for x in (re, im)]).inv()
        comp = [[G[0, k] * re[i] + G[1, k] * im[i] for i in range(n)] for k in range(2)]
    else:
        w = re if any(x != 0 for x in re) else im
        ww = sum(x * x for x in w)
        comp = [[x / ww for x in w]]
    return comp + K, len(comp)


def family_support_form(Z0: CentralCharge, eps) -> QuadraticForm:
    """|Z0(g)|^2 - eps^2 |kernel coordinates of g|^2 in a basis adapted to Z0."""
    eps = Q(eps)
    if eps <= 0:
        raise GeometryError("eps must be positive")
    basis, r = _adapted_basis(Z0)
    n = Z0.n
    weights = [ONE] * r + [-eps * eps] * (n - r)
    # columns of B are the adapted basis; Q = B^-T D B^-1
    B = qmat([[basis[j][i] for j in range(n)] for i in range(n)])
    Binv = B.inv()
    M = [[sum(Binv[k, i] * weights[k] * Binv[k, j] for k in range(n)) for j in range(n)] for i in range(n)]
    return QuadraticForm(M)


def family_ball_radius(Z0: CentralCharge, eps) -> float:
    """rho such that family_support_form(Z0, eps) is negative on Ker Z whenever ||Z - Z0|| < rho.

    ||.|| is the operator 2-norm of Z as a real 2 x n matrix.  For k in Ker Z,
    |Z0 k| <= rho ||k|| <= rho ||B|| (|x| + |y|) in adapted coordinates, which
    forces |x| < eps |y| once rho < eps / ((1 + eps) ||B||).
    """
    basis, _ = _adapted_basis(Z0)
    B = np.array([[float(x) for x in b] for b in basis]).T
    nb = float(np.linalg.norm(B, 2))
    e = float(Q(eps))
    return 0.999 * e / ((1 + e) * nb)


def support_cone_enumerate(Q_: QuadraticForm, Z: CentralCharge, V: Sector, ell, N: int,
                           bound: int | None = None, max_points: int = 5_000_000, seed: int = 0) -> set:
    """{g != 0 : Q(g) > 0, Z(g) in V, ell(g) <= N}.

    The coordinate box is sized from a numerical lower bound c of ell on the unit
    sphere of the closed region; c <= 0 means the enumeration would be unbounded.
    """
    n = Z.n
    ell = tuple(int(x) for x in ell)
    if bound is None:
        c = _min_grading_on_region(Q_, Z, V, ell, seed)
        if c is None:
            return set()
        if c <= 1e-9:
            raise GeometryError(f"unbounded enumeration: grading is not positive on the region (min ~ {c:.3g})")
        bound = int(math.ceil(2 * N / c))
    if (2 * bound + 1) ** n > max_points:
        raise GeometryError(f"unbounded enumeration: box radius {bound} in rank {n} is too large")
    out = set()
    for g in itertools.product(range(-bound, bound + 1), repeat=n):
        d = sum(a * b for a, b in zip(ell, g))
        if d > N or not any(g):
            continue
        if Q_(g) > 0:
            z = eval_charge(Z, g)
            if z and sector_contains(V, z):
                out.add(g)
    return out


def _min_grading_on_region(Q_, Z, V, ell, seed):
    from scipy.optimize import minimize

    n = Z.n
    M = np.array([[float(x) for x in r] for r in Q_.matrix])
    zc = Z.as_complex()
    a = cmath.exp(1j * V.theta_minus)
    b = cmath.exp(1j * V.theta_plus)
    L = np.array(ell, dtype=float)

    def zf(u):
        return complex(zc @ u)

    cons = [{"type": "eq", "fun": lambda u: u @ u - 1.0},
            {"type": "ineq", "fun": lambda u: u @ M @ u}]
    if V.is_ray:
        cons.append({"type": "eq", "fun": lambda u: cross(a, zf(u))})
        cons.append({"type": "ineq", "fun": lambda u: dot(a, zf(u))})
    else:
        cons.append({"type": "ineq", "fun": lambda u: cross(a, zf(u))})
        cons.append({"type": "ineq", "fun": lambda u: cross(zf(u), b)})
    rng = np.random.default_rng(seed)
    best = None
    starts = [np.eye(n)[i] * s for i in range(n) for s in (1, -1)] + list(rng.normal(size=(60, n)))
    for u0 in starts:
        u0 = u0 / np.linalg.norm(u0)
        res = minimize(lambda u: L @ u, u0, constraints=cons, method="SLSQP", options={"maxiter": 200})
        u = res.x
        if not np.isfinite(u).all() or abs(u @ u - 1) > 1e-6:
            continue
        if u @ M @ u < -1e-7:
            continue
        z = zf(u)
        if abs(z) > 1e-9 and not sector_contains(Sector(V.theta_minus - 1e-6, V.theta_plus + 1e-6), z):
            continue
        val = float(L @ u)
        best = val if best is None else min(best, val)
    return best


# ---------------------------------------------------------------- rational charges


def normalize_rational_charge(Z: CentralCharge):
    """Unimodular U with Z' = Z o U in column Hermite form.

    Re Z' is supported on e1 and Im Z' on e1, e2, with 0 <= Im Z'(e1) < |Im Z'(e2)|.
    Returns (U as integer rows, Z', rectangular) where rectangular means Im Z'(e1) = 0,
    i.e. Z' has the two-coordinate shape a*x1 + i*c*x2.
    """
    if not Z.exact or not Z.rational_flag:
        raise GeometryError("normalize_rational_charge needs integer real and imaginary parts")
    if Z.rank < 2:
        raise GeometryError("normalize_rational_charge needs rank 2")
    n = Z.n
    rows = [[int(v.re) for v in Z.values], [int(v.im) for v in Z.values]]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(dst, src, q):
        # column dst -= q * column src, in both M and U
        for r in rows:
            r[dst] -= q * r[src]
        for r in U:
            r[dst] -= q * r[src]

    def swap(i, j):
        for r in rows + U:
            r[i], r[j] = r[j], r[i]

    def gather(row, start):
        # euclid across columns start.. until only column `start` is nonzero in `row`
        R = rows[row]
        while True:
            nz = [j for j in range(start, n) if R[j] != 0]
            if not nz:
                return
            if nz == [start]:
                return
            p = min(nz, key=lambda j: abs(R[j]))
            if p != start:
                swap(p, start)
            for j in range(start + 1, n):
                if R[j]:
                    colop(j, start, R[j] // R[start])

    gather(0, 0)
    gather(1, 1)
    b, c = rows[1][0], rows[1][1]
    if c and not (0 <= b < abs(c)):
        colop(0, 1, b // c if c > 0 else -(b // -c))
    Zp = CentralCharge([QQi(rows[0][j], rows[1][j]) for j in range(n)])
    return U, Zp, rows[1][0] == 0


# ---------------------------------------------------------------- wheels of cones


@dataclass(frozen=True)
class WheelOfCones:
    """Cyclically ordered cones in the dual lattice (covector side)."""

    cones: tuple

    def __init__(self, cones):
        object.__setattr__(self, "cones", tuple(c if isinstance(c, RationalCone) else RationalCone(c) for c in cones))


def _cone_meet_rows(C1: RationalCone, C2: RationalCone):
    return list(C1.inequalities) + list(C2.inequalities)


def _implicit_equality(rows, a, n) -> bool:
    # a.x >= 0 is tight on the whole cone {rows . x >= 0} iff a.x >= 1 is infeasible
    sys = [(r, ZERO) for r in rows] + [(a, ONE)]
    return not fm_feasible(sys, n)


def check_wheel_compatible(W: WheelOfCones, Z: CentralCharge, support) -> tuple[bool, dict]:
    """Conditions a) open rays in Z*(R^2), b) clockwise order, c) support in the duals of the walls."""
    if not Z.exact:
        raise GeometryError("wheel compatibility is checked exactly; give an exact central charge")
    if Z.rank != 2:
        raise GeometryError("wheel compatibility needs rank Z = 2")
    n = Z.n
    m = len(W.cones)
    if m < 3:
        raise GeometryError("a wheel needs at least three cones")
    for C in W.cones:
        if C.n != n:
            raise GeometryError("cone dimension mismatch")
        if len(C.generators) < n or rank([list(g) for g in C.generators]) < n:
            raise GeometryError("degenerate cone (empty interior)")
    re, im = Z.rows()
    diag = {"a": [], "b": None, "c": []}
    rays = []
    for i in range(m):
        rows = _cone_meet_rows(W.cones[i], W.cones[(i + 1) % m])
        # pull back to y in R^2: covector y1*Re + y2*Im
        pulled = [QQi(sum(r[k] * re[k] for k in range(n)), sum(r[k] * im[k] for k in range(n))) for r in rows]
        cands = []
        for p in pulled:
            if p:
                for d in (QQi(-p.im, p.re), QQi(p.im, -p.re)):
                    if all(dot(q, d) >= 0 for q in pulled) and not any(same_direction(d, e) for e in cands):
                        cands.append(d)
        ok = len(cands) == 1
        if ok:
            d = cands[0]
            x = [d.re * re[k] + d.im * im[k] for k in range(n)]
            for r in rows:
                if sum(a * b for a, b in zip(r, x)) == 0 and not _implicit_equality(rows, r, n):
                    ok = False
                    break
        diag["a"].append(ok)
        rays.append(cands[0] if len(cands) == 1 else None)
    if all(diag["a"]):
        total = 0.0
        distinct = True
        for i in range(m):
            d1, d2 = rays[i], rays[(i + 1) % m]
            if same_direction(d1, d2):
                distinct = False
            gap = (angle_of(d1) - angle_of(d2)) % (2 * math.pi)
            total += gap
        diag["b"] = distinct and abs(total - 2 * math.pi) < 1e-9
    else:
        diag["b"] = False
    for g in support:
        z = eval_charge(Z, g)
        inside = False
        if z:
            for i in range(m):
                rows = _cone_meet_rows(W.cones[i], W.cones[(i + 1) % m])
                # g in dual of the wall: no c in the wall with c.g <= -1
                if not fm_feasible([(r, ZERO) for r in rows] + [(tuple(-Q(x) for x in g), ONE)], n):
                    inside = True
                    break
        diag["c"].append((tuple(g), inside))
    ok = all(diag["a"]) and bool(diag["b"]) and all(v for _, v in diag["c"])
    return ok, diag
