"""Combinatorial cyclic covers, factorizable systems of groups and the rewrite engine.

Conventions.  The base cyclic set H has elements 0..k-1; hole h sits just
before element h.  An interval (f, a) holds holes f..f+a and elements
f..f+a-1 (mod k).  A cover element is a tuple (g_s in G_{I_s}); the gauge
group prod_s G_{I_s cap I_{s+1}} acts by g_s -> h_{s-1}^-1 g_s h_s.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class CoverError(ValueError):
    pass


# ---------------------------------------------------------------- intervals


@dataclass(frozen=True)
class CyclicSet:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise CoverError("cyclic set must be non-empty")

    def succ(self, i: int) -> int:
        return (i + 1) % self.size


@dataclass(frozen=True, order=True)
class Interval:
    first_hole: int
    length: int
    k: int

    def __post_init__(self):
        if not 0 <= self.length <= self.k - 1:
            raise CoverError(f"interval length {self.length} outside 0..{self.k - 1}")
        if not 0 <= self.first_hole < self.k:
            object.__setattr__(self, "first_hole", self.first_hole % self.k)

    @property
    def last_hole(self) -> int:
        return (self.first_hole + self.length) % self.k

    @property
    def elements(self) -> tuple:
        return tuple((self.first_hole + j) % self.k for j in range(self.length))

    @property
    def holes(self) -> tuple:
        return tuple((self.first_hole + j) % self.k for j in range(self.length + 1))

    def contains(self, other: "Interval") -> bool:
        off = (other.first_hole - self.first_hole) % self.k
        return off + other.length <= self.length

    def to_json(self) -> dict:
        return {"first_hole": self.first_hole, "length": self.length}

    def __repr__(self):
        return f"I({self.first_hole},{self.length})"


def all_intervals(k: int) -> list[Interval]:
    return [Interval(f, a, k) for f in range(k) for a in range(k)]


def interval_product(A: Interval, B: Interval) -> Interval | None:
    """A B when the last hole of A is the first hole of B (and the result fits), else None."""
    if A.k != B.k or A.last_hole != B.first_hole or A.length + B.length > A.k - 1:
        return None
    return Interval(A.first_hole, A.length + B.length, A.k)


def linked_decompose(I1: Interval, I2: Interval):
    """(A, B, C) with I1 = AB, I2 = BC, or None.

    ABC may close up into the whole circle (total length k); holes carry no
    group, so this only matters for covers by few intervals.
    """
    k = I1.k
    a = (I2.first_hole - I1.first_hole) % k
    b = I1.length - a
    if b < 0:
        return None
    c = I2.length - b
    if c < 0 or a + b + c > k:
        return None
    return (Interval(I1.first_hole, a, k), Interval(I2.first_hole, b, k),
            Interval((I2.first_hole + b) % k, c, k))


def is_adjacent(I1: Interval, I2: Interval) -> bool:
    """Linked with empty overlap: the last hole of I1 is the first hole of I2."""
    d = linked_decompose(I1, I2)
    return d is not None and d[1].length == 0


def intersection(I1: Interval, I2: Interval) -> Interval:
    d = linked_decompose(I1, I2)
    if d is None:
        raise CoverError(f"{I1} and {I2} are not linked")
    return d[1]


# ---------------------------------------------------------------- covers


def validate_cover(intervals, k: int | None = None) -> tuple[bool, str]:
    """Linked consecutive pairs and the degree-1 tiling condition."""
    ivs = list(intervals)
    if not ivs:
        return False, "empty cover"
    k = k or ivs[0].k
    m = len(ivs)
    count = [0] * k
    for s in range(m):
        prev, cur = ivs[s - 1], ivs[s]
        d = linked_decompose(prev, cur)
        if d is None:
            return False, f"pair ({s - 1 if s else m - 1}, {s}) is not linked"
        for i in d[2].elements:
            count[i] += 1
    if any(c != 1 for c in count):
        return False, f"degree condition fails: multiplicities {count}"
    return True, "ok"


@dataclass(frozen=True)
class CombCyclicCover:
    intervals: tuple

    def __init__(self, intervals):
        ivs = tuple(intervals)
        object.__setattr__(self, "intervals", ivs)
        ok, why = validate_cover(ivs)
        if not ok:
            raise CoverError(f"invalid cover: {why}")

    @property
    def k(self) -> int:
        return self.intervals[0].k

    def __len__(self):
        return len(self.intervals)

    def __getitem__(self, s):
        return self.intervals[s % len(self.intervals)]

    @property
    def is_disjoint(self) -> bool:
        m = len(self)
        return all(is_adjacent(self[s], self[s + 1]) for s in range(m))

    def overlaps(self) -> list[Interval]:
        """I_s cap I_{s+1} for each s."""
        return [intersection(self[s], self[s + 1]) for s in range(len(self))]

    def to_json(self) -> dict:
        return {"k": self.k, "intervals": [I.to_json() for I in self.intervals]}

    @staticmethod
    def from_json(d: dict) -> "CombCyclicCover":
        k = int(d["k"])
        return CombCyclicCover([Interval(int(x["first_hole"]), int(x["length"]), k) for x in d["intervals"]])

    @staticmethod
    def canonical(k: int) -> "CombCyclicCover":
        return CombCyclicCover([Interval(i, 1, k) for i in range(k)])


def min_subcover(kappa: CombCyclicCover) -> CombCyclicCover:
    """J_s = I_s minus I_{s+1}, closed off by the first hole of I_{s+1}."""
    k = kappa.k
    m = len(kappa)
    return CombCyclicCover([Interval(kappa[s].first_hole, (kappa[s + 1].first_hole - kappa[s].first_hole) % k, k)
                            for s in range(m)])


def disjoint_subcovers(kappa: CombCyclicCover):
    """Every disjoint cover (J_s) with J_s inside I_s, same index set."""
    k = kappa.k
    m = len(kappa)
    choices = [kappa[s].holes for s in range(m)]
    for starts in itertools.product(*choices):
        lens = [(starts[(s + 1) % m] - starts[s]) % k for s in range(m)]
        if sum(lens) != k:
            continue
        J = [Interval(starts[s], lens[s], k) for s in range(m)]
        if all(kappa[s].contains(J[s]) for s in range(m)):
            try:
                yield CombCyclicCover(J)
            except CoverError:
                continue


def enumerate_covers(k: int, m_max: int, up_to_rotation: bool = True):
    """All valid covers of the k-element cyclic set by m <= m_max intervals."""
    ivs = all_intervals(k)
    succ = {I: [J for J in ivs if linked_decompose(I, J) is not None] for I in ivs}
    seen = set()
    for m in range(1, m_max + 1):
        def extend(path, covered):
            if len(path) == m:
                d = linked_decompose(path[-1], path[0])
                if d is None:
                    return
                cnt = list(covered)
                for i in d[2].elements:
                    cnt[i] += 1
                if all(c == 1 for c in cnt):
                    t = tuple(path)
                    if up_to_rotation:
                        key = min(t[r:] + t[:r] for r in range(m))
                        if key in seen:
                            return
                        seen.add(key)
                    yield t
                return
            for J in succ[path[-1]]:
                d = linked_decompose(path[-1], J)
                cnt = list(covered)
                bad = False
                for i in d[2].elements:
                    cnt[i] += 1
                    if cnt[i] > 1:
                        bad = True
                if not bad:
                    yield from extend(path + [J], cnt)

        for I0 in ivs:
            yield from extend([I0], [0] * k)


# ---------------------------------------------------------------- group systems


class FactorizableSystem:
    """Interface: groups G_I for small intervals I of H, all inside one ambient group.

    Inclusions are identities on values.  Subclasses supply mul, inv, identity,
    member, factor and (for finite systems) elements.
    """

    k: int
    finite = False
    name = "abstract"

    def is_small(self, I: Interval) -> bool:
        return True

    def identity(self):
        raise NotImplementedError

    def mul(self, x, y):
        raise NotImplementedError

    def inv(self, x):
        raise NotImplementedError

    def eq(self, x, y) -> bool:
        return x == y

    def member(self, x, I: Interval) -> bool:
        raise NotImplementedError

    def factor(self, g, A: Interval, B: Interval):
        raise NotImplementedError

    def random_element(self, I: Interval, rng):
        raise NotImplementedError

    def prod(self, xs):
        out = self.identity()
        for x in xs:
            out = self.mul(out, x)
        return out

    def iso(self, I: Interval, comps):
        """iso_I: ordered product of the element components."""
        return self.prod(comps)

    def iso_inverse(self, I: Interval, g) -> list:
        """Components (g_i) for i in I with their ordered product equal to g."""
        k = I.k
        out = []
        cur, rest = g, I
        while rest.length > 1:
            head = Interval(rest.first_hole, 1, k)
            tail = Interval((rest.first_hole + 1) % k, rest.length - 1, k)
            a, cur = self.factor(cur, head, tail)
            out.append(a)
            rest = tail
        if rest.length == 1:
            out.append(cur)
        elif not self.eq(cur, self.identity()):
            raise CoverError("non-identity element in a length-0 interval group")
        return out

    def encode(self, x):
        return x

    def decode(self, x):
        return x


class CyclicProductSystem(FactorizableSystem):
    """G_i = Z/n_i, G_I = product over the elements of I (abelian)."""

    finite = True
    name = "cyclic"

    def __init__(self, orders):
        self.orders = tuple(int(n) for n in orders)
        self.k = len(self.orders)

    def identity(self):
        return (0,) * self.k

    def mul(self, x, y):
        return tuple((a + b) % n for a, b, n in zip(x, y, self.orders))

    def inv(self, x):
        return tuple((-a) % n for a, n in zip(x, self.orders))

    def member(self, x, I):
        inside = set(I.elements)
        return all(v == 0 for i, v in enumerate(x) if i not in inside)

    def factor(self, g, A, B):
        ea = set(A.elements)
        a = tuple(v if i in ea else 0 for i, v in enumerate(g))
        return a, self.mul(self.inv(a), g)

    def elements(self, I):
        els = I.elements
        for vals in itertools.product(*[range(self.orders[i]) for i in els]):
            x = [0] * self.k
            for i, v in zip(els, vals):
                x[i] = v
            yield tuple(x)

    def random_element(self, I, rng):
        x = [0] * self.k
        for i in I.elements:
            x[i] = int(rng.integers(0, self.orders[i]))
        return tuple(x)

    def encode(self, x):
        return list(x)

    def decode(self, x):
        return tuple(int(v) for v in x)


class BatchedCyclicSystem(FactorizableSystem):
    """Many cyclic-product systems at once: row r is an element of the system with orders[r].

    Elements are integer arrays of shape (rows, k); every operation acts row by
    row, so one pass through the rewrite engine checks all rows exactly.
    """

    name = "cyclic-batch"

    def __init__(self, orders):
        self.orders = np.asarray(orders, dtype=np.int64)
        self.rows, self.k = self.orders.shape

    @staticmethod
    def exhaustive(k: int, max_order: int) -> tuple["BatchedCyclicSystem", np.ndarray]:
        """All order vectors in {1..max_order}^k paired with all their global tuples."""
        ords, gs = [], []
        for o in itertools.product(range(1, max_order + 1), repeat=k):
            for g in itertools.product(*[range(n) for n in o]):
                ords.append(o)
                gs.append(g)
        return BatchedCyclicSystem(ords), np.asarray(gs, dtype=np.int64).reshape(len(gs), k)

    def identity(self):
        return np.zeros((self.rows, self.k), dtype=np.int64)

    def mul(self, x, y):
        return (x + y) % self.orders

    def inv(self, x):
        return (-x) % self.orders

    def eq(self, x, y) -> bool:
        return bool(np.array_equal(x, y))

    def member(self, x, I):
        mask = np.ones(self.k, dtype=bool)
        mask[list(I.elements)] = False
        return not x[:, mask].any()

    def factor(self, g, A, B):
        a = np.zeros_like(g)
        els = list(A.elements)
        a[:, els] = g[:, els]
        return a, self.mul(self.inv(a), g)

    def random_element(self, I, rng):
        x = self.identity()
        for i in I.elements:
            x[:, i] = rng.integers(0, 1 << 30, size=self.rows) % self.orders[:, i]
        return x

    def global_split(self, g) -> list:
        return [self.factor(g, Interval(i, 1, self.k), Interval((i + 1) % self.k, 0, self.k))[0]
                for i in range(self.k)]

    def global_join(self, comps) -> np.ndarray:
        return self.prod(comps)


class UnipotentSystem(FactorizableSystem):
    """Upper unitriangular m x m matrices over F_p; root (i, j) lives in G_{assign[(i, j)]}.

    Roots are binned monotonically in a clockwise order of their charges, so
    any interval avoiding the seam between elements k-1 and 0 carries a closed
    root set; those intervals are the small ones.
    """

    finite = True
    name = "unipotent"

    def __init__(self, m: int, p: int, k: int, assign: dict):
        self.m, self.p, self.k = m, p, k
        self.assign = {tuple(r): int(h) for r, h in assign.items()}
        self.roots = sorted(self.assign)
        if set(self.roots) != {(i, j) for i in range(m) for j in range(i + 1, m)}:
            raise CoverError("assignment must cover every positive root once")
        self._cache = {}

    @staticmethod
    def from_charges(m: int, p: int, k: int, z: list) -> "UnipotentSystem":
        """Bin the roots by the clockwise order of Z(e_i - e_j) = z_i + ... + z_{j-1}."""
        import cmath

        dirs = {}
        for i in range(m):
            for j in range(i + 1, m):
                dirs[(i, j)] = round(cmath.phase(sum(z[i:j])), 12)
        angles = sorted(set(dirs.values()), reverse=True)
        if len(angles) > k:
            raise CoverError("more charge directions than elements of H")
        # spread the directions over 0..k-1 keeping the order
        slots = [round(t * (k - 1) / max(len(angles) - 1, 1)) for t in range(len(angles))]
        pos = dict(zip(angles, slots))
        return UnipotentSystem(m, p, k, {r: pos[a] for r, a in dirs.items()})

    def is_small(self, I):
        els = I.elements
        return all(els[t] + 1 == els[t + 1] for t in range(len(els) - 1))

    def identity(self):
        return tuple(tuple(int(i == j) for j in range(self.m)) for i in range(self.m))

    def mul(self, x, y):
        m, p = self.m, self.p
        return tuple(tuple(sum(x[i][t] * y[t][j] for t in range(m)) % p for j in range(m)) for i in range(m))

    def inv(self, x):
        # unipotent: x^-1 = sum (1 - x)^j
        m, p = self.m, self.p
        N = tuple(tuple((int(i == j) - x[i][j]) % p for j in range(m)) for i in range(m))
        out = self.identity()
        pw = self.identity()
        for _ in range(m):
            pw = self.mul(pw, N)
            out = tuple(tuple((a + b) % p for a, b in zip(r1, r2)) for r1, r2 in zip(out, pw))
        return out

    def roots_in(self, I):
        els = set(I.elements)
        return [r for r in self.roots if self.assign[r] in els]

    def member(self, x, I):
        allowed = set(self.roots_in(I))
        return all(x[i][j] == 0 for (i, j) in self.roots if (i, j) not in allowed)

    def elements(self, I):
        key = (I.first_hole, I.length)
        if key not in self._cache:
            rs = self.roots_in(I)
            out = []
            for vals in itertools.product(range(self.p), repeat=len(rs)):
                M = [list(r) for r in self.identity()]
                for (i, j), v in zip(rs, vals):
                    M[i][j] = v
                # close up: the pattern set is closed, so the group is the set of such matrices
                out.append(tuple(tuple(r) for r in M))
            self._cache[key] = out
        return self._cache[key]

    def factor(self, g, A, B):
        for a in self.elements(A):
            b = self.mul(self.inv(a), g)
            if self.member(b, B):
                return a, b
        raise CoverError(f"element does not factor over {A}.{B}")

    def random_element(self, I, rng):
        els = self.elements(I)
        return els[int(rng.integers(0, len(els)))]

    def encode(self, x):
        return [list(r) for r in x]

    def decode(self, x):
        return tuple(tuple(int(v) for v in r) for r in x)


def verify_system(system: FactorizableSystem, max_size: int = 10_000) -> tuple[bool, str]:
    """Exhaustive check of G_A x G_B -> G_AB bijectivity on every small product (finite systems)."""
    if not system.finite:
        return True, "not finite; skipped"
    k = system.k
    for A in all_intervals(k):
        for B in all_intervals(k):
            C = interval_product(A, B)
            if C is None or not system.is_small(C):
                continue
            GA, GB, GC = list(system.elements(A)), list(system.elements(B)), list(system.elements(C))
            if len(GA) * len(GB) > max_size:
                continue
            prods = {system.mul(a, b) for a in GA for b in GB}
            if len(prods) != len(GA) * len(GB) or len(prods) != len(GC):
                return False, f"factorization fails for {A}.{B}"
            if not all(system.member(x, C) for x in prods):
                return False, f"product leaves G_{C}"
    return True, "ok"


# ---------------------------------------------------------------- cover elements


def check_element(system, kappa: CombCyclicCover, x) -> None:
    if len(x) != len(kappa):
        raise CoverError("cover element has the wrong number of components")
    for s, (I, g) in enumerate(zip(kappa.intervals, x)):
        if not system.is_small(I):
            raise CoverError(f"interval {I} at {s} is not small for this system")
        if not system.member(g, I):
            raise CoverError(f"component {s} is not in G_{I}")


def gauge_act(system, kappa: CombCyclicCover, x, h) -> list:
    """g_s -> h_{s-1}^-1 g_s h_s with h_s in G_{I_s cap I_{s+1}}."""
    m = len(kappa)
    return [system.mul(system.mul(system.inv(h[s - 1]), x[s]), h[s]) for s in range(m)]


def random_gauge(system, kappa: CombCyclicCover, rng) -> list:
    return [system.random_element(B, rng) for B in kappa.overlaps()]


def phi(system, kappa: CombCyclicCover, g, subcover: CombCyclicCover | None = None) -> list:
    """phi_{kappa, kappa'}: global tuple -> cover element through a disjoint subcover."""
    J = subcover or min_subcover(kappa)
    if len(J) != len(kappa) or not J.is_disjoint:
        raise CoverError("subcover must be disjoint with the same index set")
    for s in range(len(kappa)):
        if not kappa[s].contains(J[s]):
            raise CoverError(f"J_{s} is not inside I_{s}")
    return [system.iso(J[s], [g[i] for i in J[s].elements]) for s in range(len(kappa))]


iso_kappa = phi


# ---------------------------------------------------------------- rewriting


def _rot(lst, s):
    return lst[s:] + lst[:s]


def _strict_sub(I, J) -> bool:
    return I != J and J.contains(I)


# The interval-level rewrite does not depend on the group elements, so it is
# planned once per cover and replayed on elements.  An op records how the
# elements move; positions refer to the list rotated to start at s.


def _step_candidates(ivs, step):
    m = len(ivs)
    k = ivs[0].k
    for s in range(m):
        I0 = _rot(ivs, s)
        if step == 1 and m >= 2 and I0[0] == I0[1]:
            yield s, [I0[0]] + I0[2:], ("merge",)
        elif step == 2 and m >= 2 and I0[0].length == 0:
            yield s, I0[1:], ("drop",)
        elif step == 3 and m >= 2:
            A, B, C = linked_decompose(I0[0], I0[1])
            if A.length >= 1 and C.length >= 1 and B.length >= 1:
                yield s, [I0[0], B] + I0[1:], ("insert",)
        elif step == 4 and m >= 3:
            a, b, c = I0[0], I0[1], I0[2]
            if _strict_sub(a, b) and _strict_sub(b, c):
                yield s, [a, c] + I0[3:], ("up",)
            elif _strict_sub(b, a) and _strict_sub(c, b):
                yield s, [a, c] + I0[3:], ("down",)
        elif step in (5, 6, 7) and m >= 3:
            P, X, S = I0[0], I0[1], I0[2]
            if not (_strict_sub(P, X) and _strict_sub(S, X)):
                continue
            p, sl = P.length, S.length
            over = p + sl - X.length
            if step == 5 and over >= 1:
                # AB, ABC, BC -> AB, B, BC
                C = Interval((X.first_hole + p) % k, X.length - p, k)
                B = Interval(S.first_hole, over, k)
                yield s, [P, B, S] + I0[3:], ("peak_overlap", P, C)
            elif step == 6 and over < 0:
                # A, ABC, C -> A, B, C
                B = Interval((X.first_hole + p) % k, -over, k)
                BC = Interval(B.first_hole, B.length + sl, k)
                yield s, [P, B, S] + I0[3:], ("peak_gap", P, BC, B, S)
            elif step == 7 and over == 0:
                yield s, [P, S] + I0[3:], ("peak_adjacent", P, S)


def _plan_step(ivs, step):
    """Leftmost application of a step whose result is still a valid cover.

    Candidates are skipped when the rewritten intervals would not form a valid
    cover; this happens when neighbouring intervals wrap around the circle.
    """
    for hit in _step_candidates(ivs, step):
        if validate_cover(hit[1])[0]:
            return hit
    return None


def _plan_step8(ivs):
    """Split blocks between adjacent pairs: A | A,AB | AB,B | AB,B,BC."""
    m = len(ivs)
    k = ivs[0].k
    cuts = [s for s in range(m) if is_adjacent(ivs[s], ivs[(s + 1) % m])]
    if not cuts:
        raise CoverError("no adjacent pair after steps 1-7 (internal error)")
    start = (cuts[0] + 1) % m
    ivs = _rot(ivs, start)
    cuts = sorted((c - start) % m for c in cuts)
    out, blocks = [], []
    lo = 0
    for c in cuts:
        blk = ivs[lo:c + 1]
        lo = c + 1
        if len(blk) == 1:
            out += blk
            blocks.append(("keep",))
        elif len(blk) == 2 and _strict_sub(blk[0], blk[1]):
            A, AB = blk
            B = Interval(A.last_hole, AB.length - A.length, k)
            out += [A, B]
            blocks.append(("grow", A, B))
        elif len(blk) == 2 and _strict_sub(blk[1], blk[0]):
            AB, B = blk
            A = Interval(AB.first_hole, AB.length - B.length, k)
            out += [A, B]
            blocks.append(("shrink", A, B))
        elif len(blk) == 3 and _strict_sub(blk[1], blk[0]) and _strict_sub(blk[1], blk[2]):
            AB, B, BC = blk
            A = Interval(AB.first_hole, AB.length - B.length, k)
            C = Interval(B.last_hole, BC.length - B.length, k)
            out += [A, B, C]
            blocks.append(("valley", A, B, C))
        else:
            raise CoverError(f"unexpected block form {blk} at step 8")
    return start, out, ("split", tuple(blocks))


@dataclass
class TraceEntry:
    step: int
    position: int
    before: tuple
    after: tuple
    op: tuple = ()

    def to_json(self) -> dict:
        return {"step": self.step, "position": self.position,
                "before": [I.to_json() for I in self.before], "after": [I.to_json() for I in self.after]}


_PLANS: dict = {}


def rewrite_plan(kappa: CombCyclicCover) -> tuple:
    """The deterministic step sequence (leftmost applicable, priority 1..8) for a cover."""
    key = kappa.intervals
    if key in _PLANS:
        return _PLANS[key]
    ivs = list(kappa.intervals)
    plan: list[TraceEntry] = []
    limit = 20 * (len(ivs) + sum(I.length for I in ivs)) + 50
    while not all(is_adjacent(ivs[s], ivs[(s + 1) % len(ivs)]) for s in range(len(ivs))):
        if len(plan) > limit:
            raise CoverError("rewrite did not terminate (internal error)")
        for step in range(1, 8):
            hit = _plan_step(ivs, step)
            if hit is not None:
                s, new, op = hit
                plan.append(TraceEntry(step, s, tuple(ivs), tuple(new), op))
                ivs = new
                break
        else:
            s, new, op = _plan_step8(ivs)
            plan.append(TraceEntry(8, s, tuple(ivs), tuple(new), op))
            ivs = new
    if len(_PLANS) > 100_000:
        _PLANS.clear()
    _PLANS[key] = tuple(plan)
    return _PLANS[key]


def _replay(system, entry: TraceEntry, xs: list) -> list:
    mul = system.mul
    X = _rot(xs, entry.position)
    op = entry.op
    kind = op[0]
    if kind == "merge":
        return [mul(X[0], X[1])] + X[2:]
    if kind == "drop":
        return X[1:]
    if kind == "insert":
        return [X[0], system.identity()] + X[1:]
    if kind == "up":
        return [X[0], mul(X[1], X[2])] + X[3:]
    if kind == "down":
        return [mul(X[0], X[1]), X[2]] + X[3:]
    if kind == "peak_overlap":
        p, q = system.factor(X[1], op[1], op[2])
        return [mul(X[0], p), system.identity(), mul(q, X[2])] + X[3:]
    if kind == "peak_gap":
        a, bc = system.factor(X[1], op[1], op[2])
        b, c = system.factor(bc, op[3], op[4])
        return [mul(X[0], a), b, mul(c, X[2])] + X[3:]
    if kind == "peak_adjacent":
        a, c = system.factor(X[1], op[1], op[2])
        return [mul(X[0], a), mul(c, X[2])] + X[3:]
    if kind == "split":
        out = []
        i = 0
        for blk in op[1]:
            if blk[0] == "keep":
                out.append(X[i])
                i += 1
            elif blk[0] == "grow":
                a, b = system.factor(X[i + 1], blk[1], blk[2])
                out += [mul(X[i], a), b]
                i += 2
            elif blk[0] == "shrink":
                a, b = system.factor(X[i], blk[1], blk[2])
                out += [a, mul(b, X[i + 1])]
                i += 2
            else:
                a, b1 = system.factor(X[i], blk[1], blk[2])
                b3, c = system.factor(X[i + 2], blk[2], blk[3])
                out += [a, mul(mul(b1, X[i + 1]), b3), c]
                i += 3
        return out
    raise CoverError(f"unknown rewrite op {kind}")


def rewrite_to_disjoint(system, kappa: CombCyclicCover, x, check: bool = True):
    """Apply steps 1-8 with element transport; returns (disjoint cover, element, trace)."""
    if check:
        check_element(system, kappa, x)
    plan = rewrite_plan(kappa)
    xs = list(x)
    for e in plan:
        xs = _replay(system, e, xs)
    final = CombCyclicCover(plan[-1].after) if plan else kappa
    return final, xs, list(plan)


def apply_step(system, kappa: CombCyclicCover, x, step: int):
    """One application of the given step at its leftmost valid position, or None."""
    ivs = list(kappa.intervals)
    if step == 8:
        if kappa.is_disjoint or any(_plan_step(ivs, st) is not None for st in range(1, 8)):
            return None
        s, new, op = _plan_step8(ivs)
    else:
        hit = _plan_step(ivs, step)
        if hit is None:
            return None
        s, new, op = hit
    e = TraceEntry(step, s, tuple(ivs), tuple(new), op)
    return CombCyclicCover(new), _replay(system, e, list(x))


def canonicalize(system, kappa: CombCyclicCover, x, check: bool = True) -> list:
    """The unique global tuple g with phi_kappa(g) gauge-equivalent to x."""
    J, xs, _ = rewrite_to_disjoint(system, kappa, x, check)
    g = [None] * kappa.k
    for I, el in zip(J.intervals, xs):
        comps = system.iso_inverse(I, el)
        for i, c in zip(I.elements, comps):
            g[i] = c
    if any(c is None for c in g):
        raise CoverError("disjoint cover misses an element (internal error)")
    return g


def refine_map(system, kappa: CombCyclicCover, kappa2: CombCyclicCover, psi, x) -> list:
    """Induced map X_kappa -> X_kappa2 for a cyclically monotone psi with I_s inside I'_psi(s).

    Components landing on the same target multiply in cyclic order; targets
    hit by nothing get the identity.
    """
    m, m2 = len(kappa), len(kappa2)
    psi = [int(psi[s]) % m2 for s in range(m)]
    for s in range(m):
        if not kappa2[psi[s]].contains(kappa[s]):
            raise CoverError(f"I_{s} is not inside I'_{psi[s]}")
    # cyclic monotonicity: the steps psi(s+1) - psi(s) mod m2 wind around exactly once
    wind = sum((psi[(s + 1) % m] - psi[s]) % m2 for s in range(m))
    if wind not in (0, m2) or (wind == 0 and m2 > 1):
        raise CoverError("psi is not cyclically monotone of degree one")
    # start at an s whose predecessor maps elsewhere, so runs are contiguous
    start = next((s for s in range(m) if psi[s - 1] != psi[s]), 0)
    out = [system.identity() for _ in range(m2)]
    for t in range(m):
        s = (start + t) % m
        out[psi[s]] = system.mul(out[psi[s]], x[s])
    return out


# ---------------------------------------------------------------- brute force oracle


def gauge_orbits(system, kappa: CombCyclicCover) -> dict:
    """Map each cover element (as a tuple) to an orbit id, by exhaustive enumeration."""
    m = len(kappa)
    comps = [list(system.elements(kappa[s])) for s in range(m)]
    gauges = [list(system.elements(B)) for B in kappa.overlaps()]
    orbit = {}
    nid = 0
    for x in itertools.product(*comps):
        if x in orbit:
            continue
        for h in itertools.product(*gauges):
            y = tuple(gauge_act(system, kappa, list(x), list(h)))
            orbit.setdefault(y, nid)
        nid += 1
    return orbit


def global_elements(system) -> list:
    k = system.k
    per = [list(system.elements(Interval(i, 1, k))) for i in range(k)]
    return [list(t) for t in itertools.product(*per)]


# ---------------------------------------------------------------- geometric bridge


class GeometricSectorSystem(FactorizableSystem):
    """Truncated pronilpotent groups over a decomposition of the plane.

    Boundary rays b_0..b_{r-1} run clockwise; H has k = 2r elements with
    element 2j the ray b_j and element 2j+1 the open sector from b_j clockwise
    to b_{j+1}.  G_I is generated by the graded pieces whose charge lands in
    the union of I; an interval is small when that union is an admissible
    sector.  Elements are graded_lie group elements, combined with multiply.
    """

    name = "sectors"

    def __init__(self, Z, ctx, boundary):
        from .exact import QQi

        self.Z, self.ctx = Z, ctx
        bs = [QQi.coerce(b) for b in boundary]
        if len(bs) < 2:
            raise CoverError("need at least two boundary rays")
        self.boundary = bs
        self.r = len(bs)
        self.k = 2 * self.r
        rel = [self._rel(b) for b in bs]
        if any(rel[j] == rel[j + 1] for j in range(self.r - 1)) or any(
                not self._cw_lt(rel[j], rel[j + 1]) for j in range(self.r - 1)):
            raise CoverError("boundary rays must be distinct and listed clockwise")
        for j in range(self.r):
            if not self.is_small(Interval(2 * j + 1, 1, self.k)):
                raise CoverError(f"open sector after boundary ray {j} is wider than a half-plane")
        self._piece_cache: dict = {}

    # clockwise angle from b_0, represented as a direction whose ccw angle is that angle
    def _rel(self, z):
        from .exact import QQi

        return self.boundary[0] * QQi.coerce(z).conj()

    @staticmethod
    def _cw_lt(r1, r2) -> bool:
        from .lattice import ccw_less, same_direction

        return not same_direction(r1, r2) and ccw_less(r1, r2)

    def piece(self, z) -> int:
        """The element of H whose ray or open sector holds the direction z."""
        from .lattice import same_direction

        rz = self._rel(z)
        for j in range(self.r):
            rb = self._rel(self.boundary[j])
            if same_direction(rz, rb):
                return 2 * j
            nxt = self._rel(self.boundary[(j + 1) % self.r]) if j + 1 < self.r else None
            if self._cw_lt(rb, rz) and (nxt is None or self._cw_lt(rz, nxt)):
                return 2 * j + 1
        raise CoverError(f"direction {z} not classified (internal error)")

    def charge_piece(self, g) -> int:
        if g not in self._piece_cache:
            z = self.Z(g)
            if not z:
                raise CoverError(f"charge {g} has Z = 0")
            self._piece_cache[g] = self.piece(z)
        return self._piece_cache[g]

    def is_small(self, I: Interval) -> bool:
        if I.length <= 1 and (I.length == 0 or I.first_hole % 2 == 0):
            return True
        els = I.elements
        jl, jr = els[0] // 2, ((els[-1] + 1) // 2) % self.r
        if jl == jr:
            return False
        left_open, right_open = els[0] % 2 == 1, els[-1] % 2 == 1
        t = self.boundary[jl] * self.boundary[jr].conj()
        if t.im > 0:
            return True
        return t.im == 0 and t.re < 0 and left_open and right_open

    def pieces_sector(self, I: Interval):
        """The plane sector covered by the elements of I."""
        from .lattice import Sector

        els = I.elements
        jl, jr = els[0] // 2, ((els[-1] + 1) // 2) % self.r
        return Sector.between(self.boundary[jr], self.boundary[jl],
                              include_left=els[0] % 2 == 0, include_right=els[-1] % 2 == 0)

    def identity(self):
        from .lie import GroupElement

        return GroupElement.identity(self.ctx)

    def mul(self, x, y):
        from .lie import multiply

        return multiply(x, y)

    def inv(self, x):
        from .lie import inverse

        return inverse(x)

    def member(self, x, I):
        els = set(I.elements)
        return all(self.charge_piece(g) in els for g in x.log.terms)

    def factor(self, g, A, B):
        from .stability import StabilityError, factorize_ordered

        ea, eb = set(A.elements), set(B.elements)

        def classify(gamma):
            p = self.charge_piece(gamma)
            return 0 if p in ea else (1 if p in eb else None)

        try:
            a, b = factorize_ordered(g, classify, 2)
        except StabilityError as e:
            raise CoverError(f"element does not factor over {A}.{B}: {e}") from None
        return a, b

    def support_in(self, I: Interval) -> list:
        els = set(I.elements)
        return [g for g in self.ctx.points if any(g) and self.Z(g) and self.charge_piece(g) in els]

    def random_element(self, I, rng, density: float = 0.4):
        from .lie import GroupElement, random_field

        return GroupElement(random_field(self.ctx, rng, density=density, support=self.support_in(I)))

    def encode(self, x):
        return x.log.to_json()

    def decode(self, x):
        from .lie import GradedVectorField, GroupElement

        return GroupElement(GradedVectorField.from_json(x, self.ctx))

    def global_from_rays(self, rays) -> list:
        """Global tuple from ray elements: g_i is the clockwise product of the rays in piece i."""
        from .lie import product

        per = [[] for _ in range(self.k)]
        for ray in rays:
            per[self.piece(ray.direction)].append(ray)
        out = []
        for i, rs in enumerate(per):
            if not rs:
                out.append(self.identity())
                continue
            j = i // 2
            start = self.boundary[j]
            rs.sort(key=lambda r: _cw_angle(start, r.direction))
            out.append(product([r.element for r in rs]))
        return out


def _cw_angle(start, d) -> float:
    import cmath

    a = cmath.phase(complex(start) * complex(d).conjugate())
    return a if a >= 0 else a + 2 * cmath.pi


def sectors_to_combinatorial(sectors, sigma):
    """(H, system, cover) for a clockwise list of exact sectors covering the punctured plane."""
    from .lattice import same_direction

    bs = []
    for V in sectors:
        if not V.exact:
            raise CoverError("sector boundaries must be exact directions")
        for d in (V.dir_plus, V.dir_minus):
            if not any(same_direction(d, b) for b in bs):
                bs.append(d)
    start = sectors[0].dir_plus
    bs.sort(key=lambda d: (0 if same_direction(d, start) else 1, _cw_angle(start, d)))
    # exact tie-break is unnecessary: distinct directions have distinct angles at this precision
    system = GeometricSectorSystem(sigma.Z, sigma.ctx, bs)
    k = system.k

    def idx(d):
        return next(j for j, b in enumerate(bs) if same_direction(d, b))

    ivs = []
    for V in sectors:
        jl, jr = idx(V.dir_plus), idx(V.dir_minus)
        if V.is_ray:
            if not (V.include_left or V.include_right):
                raise CoverError("empty sector in cover")
            ivs.append(Interval(2 * jl, 1, k))
            continue
        first = 2 * jl if V.include_left else 2 * jl + 1
        last = 2 * jr if V.include_right else 2 * jr - 1
        ivs.append(Interval(first % k, (last - first) % k + 1, k))
    kappa = CombCyclicCover(ivs)
    for s, I in enumerate(ivs):
        if not system.is_small(I):
            raise CoverError(f"sector {s} is not admissible")
    for g in sigma.a.terms:
        system.charge_piece(g)
    return CyclicSet(k), system, kappa


def element_from_data(system: GeometricSectorSystem, kappa: CombCyclicCover, sigma) -> list:
    """Cover element of a stability datum: the clockwise product over V_s minus V_{s+1}.

    The full products A_{V_s} count each overlap twice under the fiber
    product action, so the minimal disjoint subcover is used instead.
    """
    from .stability import rays_from_data

    return phi(system, kappa, system.global_from_rays(rays_from_data(sigma)))


def random_sector_cover(rng, r: int = 5, den: int = 8, focus=None):
    """Random exact boundary rays b_0..b_{r-1} (clockwise) and the overlapping cover
    V_j = open sector from b_j clockwise to b_{j+2}.

    With focus = (theta_lo, theta_hi), r rays are drawn inside that arc and the
    rest of the circle is filled evenly, so the groups see most of the charges.
    """
    import math

    from .exact import QQi
    from .lattice import Sector

    two_pi = 2 * math.pi
    for _ in range(1000):
        if focus is None:
            if r < 5:
                raise CoverError("two-step sectors are admissible only with at least 5 rays")
            cuts = sorted(rng.choice(den * r, size=r, replace=False))
            angles = [-two_pi * c / (den * r) for c in cuts]
        else:
            lo, hi = focus
            inner = sorted(rng.uniform(lo, hi, size=r), reverse=True)
            rest = two_pi - (hi - lo)
            nout = max(2, math.ceil(rest / (math.pi / 2.2)))
            outer = [lo - rest * (t + 1) / (nout + 1) for t in range(nout)]
            angles = list(inner) + outer
        bs = [QQi(round(math.cos(a) * 256), round(math.sin(a) * 256)) for a in angles]
        m = len(bs)
        ang = [math.atan2(float(b.im), float(b.re)) for b in bs]
        steps = [(ang[j] - ang[(j + 1) % m]) % two_pi for j in range(m)]
        gaps = [steps[j] + steps[(j + 1) % m] for j in range(m)]
        if all(st > 1e-3 for st in steps) and abs(sum(steps) - two_pi) < 1e-9 \
                and all(g < math.pi - 0.05 for g in gaps):
            sectors = [Sector.between(bs[(j + 2) % m], bs[j], include_left=False, include_right=False)
                       for j in range(m)]
            return bs, sectors
    raise CoverError("could not draw an admissible random cover")


# ---------------------------------------------------------------- bijection checks


def same_tuple(system, xs, ys) -> bool:
    return len(xs) == len(ys) and all(system.eq(a, b) for a, b in zip(xs, ys))


def refinement_from_canonical(kappa: CombCyclicCover) -> list:
    """psi: H -> S sending element i to the index of the min-subcover interval holding it."""
    J = min_subcover(kappa)
    psi = [None] * kappa.k
    for s, I in enumerate(J.intervals):
        for i in I.elements:
            psi[i] = s
    return psi


def cover_checks(system, kappa: CombCyclicCover, g, rng, ngauge: int = 2) -> dict:
    """Exact checks of the cover bijection on one global tuple g.

    roundtrip: canonicalize(phi(g)) = g; gauge: the same after random gauges;
    subcover: phi through every disjoint subcover lands in the same class;
    steps: every intermediate of the rewrite (and each step applied alone)
    keeps the canonical tuple; refine: refine_map from the canonical cover and
    from the minimal subcover agree with phi.
    """
    x = phi(system, kappa, g)
    out = {"roundtrip": same_tuple(system, canonicalize(system, kappa, x), g)}
    ok = True
    ys = []
    for _ in range(ngauge):
        y = gauge_act(system, kappa, x, random_gauge(system, kappa, rng))
        ys.append(y)
        ok &= same_tuple(system, canonicalize(system, kappa, y), g)
    out["gauge"] = ok
    out["subcover"] = all(same_tuple(system, canonicalize(system, kappa, phi(system, kappa, g, J)), g)
                          for J in disjoint_subcovers(kappa))
    ok = True
    for y in [x] + ys[:1]:
        xs = list(y)
        for e in rewrite_plan(kappa):
            xs = _replay(system, e, xs)
            ok &= same_tuple(system, canonicalize(system, CombCyclicCover(e.after), xs, check=False), g)
        for step in range(1, 9):
            r = apply_step(system, kappa, y, step)
            if r is not None:
                ok &= same_tuple(system, canonicalize(system, r[0], r[1], check=False), g)
    out["steps"] = ok
    can = CombCyclicCover.canonical(kappa.k)
    r1 = refine_map(system, can, kappa, refinement_from_canonical(kappa), list(g))
    Jmin = min_subcover(kappa)
    r2 = refine_map(system, Jmin, kappa, list(range(len(kappa))), phi(system, Jmin, g))
    out["refine"] = (same_tuple(system, canonicalize(system, kappa, r1), g)
                     and same_tuple(system, canonicalize(system, kappa, r2), g))
    return out
