"""Root systems A1, A2, C2: apartment, affine roots, affine Weyl group,
Moy-Prasad lattice descriptors, reductive quotients, double cosets.

Coordinates: type A_{n-1} lives in Z^n (roots e_i - e_j, apartment points
have coordinate sum 0); C2 lives in Z^2 (roots +-e_i +- e_j, +-2e_i).  All
Weyl elements act by (signed) permutation matrices, so the Euclidean pairing
identifies characters and cocharacters.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .errors import UnsupportedGroup, UnsupportedWeylGroup


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def matvec(m, v):
    return tuple(sum(r[j] * v[j] for j in range(len(v))) for r in m)


def matmul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
                 for i in range(n))


def mat_transpose(m):
    return tuple(zip(*m))


def identity_matrix(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def reflection_matrix(root, n):
    """Orthogonal reflection in the hyperplane of an integer root vector."""
    rr = dot(root, root)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            val = Fraction(1 if i == j else 0) - Fraction(2 * root[i] * root[j], rr)
            row.append(val)
        rows.append(tuple(row))
    m = tuple(rows)
    out = tuple(tuple(int(x) for x in r) for r in m)
    assert all(x == y for r1, r2 in zip(m, out) for x, y in zip(r1, r2))
    return out


class RootSystem:
    """Split root datum of one of the supported desk-scale types."""

    def __init__(self, label: str):
        if label == "A1":
            n, self.rank = 2, 1
            simple = [(1, -1)]
        elif label == "A2":
            n, self.rank = 3, 2
            simple = [(1, -1, 0), (0, 1, -1)]
        elif label == "C2":
            n, self.rank = 2, 2
            simple = [(1, -1), (0, 2)]
        else:
            raise UnsupportedGroup(f"unsupported root system {label}")
        self.label = label
        self.n_amb = n
        self.simple_roots = [tuple(a) for a in simple]
        self.roots = self._generate_roots()
        self.positive_roots = [a for a in self.roots if self._is_positive(a)]
        self.highest_root = max(self.positive_roots, key=self._height)
        self.weyl = self._generate_weyl()
        self._weyl_index = {m: i for i, m in enumerate(self.weyl)}
        self.coxeter_number = (2 * len(self.positive_roots)) // self.rank
        self.weyl_order = len(self.weyl)

    def _generate_roots(self):
        n = self.n_amb
        roots = set(self.simple_roots) | {tuple(-x for x in a) for a in self.simple_roots}
        changed = True
        while changed:
            changed = False
            for a in list(roots):
                for b in self.simple_roots:
                    m = reflection_matrix(b, n)
                    c = matvec(m, a)
                    if c not in roots:
                        roots.add(c)
                        changed = True
        return sorted(roots)

    def _is_positive(self, root) -> bool:
        # positivity wrt the lexicographic functional matching our simple roots
        for x in root:
            if x > 0:
                return True
            if x < 0:
                return False
        return False

    def _height(self, root):
        # express in the simple-root basis by solving over Q (small systems)
        coords = self.simple_coordinates(root)
        return sum(coords)

    def simple_coordinates(self, root):
        """Coordinates of a root in the basis of simple roots (exact)."""
        basis = self.simple_roots
        gram = [[dot(a, b) for b in basis] for a in basis]
        rhs = [dot(root, a) for a in basis]
        coords = solve_rational(gram, rhs)
        return coords

    def _generate_weyl(self):
        n = self.n_amb
        gens = [reflection_matrix(a, n) for a in self.simple_roots]
        seen = {identity_matrix(n)}
        frontier = [identity_matrix(n)]
        order = [identity_matrix(n)]
        while frontier:
            new = []
            for m in frontier:
                for g in gens:
                    c = matmul(g, m)
                    if c not in seen:
                        seen.add(c)
                        new.append(c)
                        order.append(c)
            frontier = new
        return order

    def coroot(self, root):
        rr = dot(root, root)
        cr = tuple(Fraction(2 * x, rr) for x in root)
        out = tuple(int(x) for x in cr)
        assert all(x == y for x, y in zip(cr, out)), "coroot is integral here"
        return out

    def reflection(self, root):
        return reflection_matrix(root, self.n_amb)

    def finite_length(self, w) -> int:
        """Length of w in W: number of positive roots sent negative."""
        return sum(1 for a in self.positive_roots
                   if not self._is_positive(matvec(w, a)))

    def base_alcove_point(self):
        """A fixed interior point of the base alcove (all simple and the
        highest root take values in (0,1)); determines the Iwahori."""
        pts = {
            "A1": (Fraction(1, 4), Fraction(-1, 4)),
            "A2": (Fraction(1, 3), Fraction(0), Fraction(-1, 3)),
            "C2": (Fraction(2, 5), Fraction(1, 5)),
        }
        return ApartmentPoint(self, pts[self.label])

    def origin(self):
        return ApartmentPoint(self, tuple(Fraction(0) for _ in range(self.n_amb)))

    def __repr__(self):
        return f"RootSystem({self.label})"


def solve_rational(a, b):
    """Solve a x = b over Q for a small square system."""
    n = len(a)
    m = [[Fraction(a[i][j]) for j in range(n)] + [Fraction(b[i])] for i in range(n)]
    for col in range(n):
        piv = next(i for i in range(col, n) if m[i][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        d = m[col][col]
        m[col] = [x / d for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return [m[i][n] for i in range(n)]


@lru_cache(maxsize=None)
def root_system(label: str) -> RootSystem:
    return RootSystem(label)


class ApartmentPoint:
    """Rational point of the standard apartment, kept in the closed base alcove."""

    def __init__(self, rs: RootSystem, coords, denominator_limit: int | None = None):
        self.rs = rs
        self.coords = tuple(Fraction(c) for c in coords)
        if rs.label.startswith("A"):
            assert sum(self.coords) == 0, "type A apartment points have sum 0"
        limit = denominator_limit or 2 * rs.coxeter_number
        for c in self.coords:
            if c.denominator > limit:
                raise UnsupportedGroup(
                    f"apartment point denominator {c.denominator} exceeds {limit}")
        for a in rs.simple_roots:
            assert dot(a, self.coords) >= 0, "point outside closed base alcove"
        assert dot(rs.highest_root, self.coords) <= 1, "point outside closed base alcove"

    def pair(self, root) -> Fraction:
        return dot(root, self.coords)

    def __eq__(self, other):
        return isinstance(other, ApartmentPoint) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"ApartmentPoint({self.rs.label}, {self.coords})"


class AffineRoot:
    """Affine root (root, n) evaluating to <root, y> + n."""

    __slots__ = ("rs", "root", "n")

    def __init__(self, rs: RootSystem, root, n: int):
        self.rs = rs
        self.root = tuple(root)
        self.n = n

    def value(self, y: ApartmentPoint) -> Fraction:
        return y.pair(self.root) + self.n

    def is_positive(self) -> bool:
        """Positive on the interior of the base alcove."""
        if self.rs._is_positive(self.root):
            return self.n >= 0
        return self.n >= 1

    def key(self):
        return (self.root, self.n)

    def __eq__(self, other):
        return isinstance(other, AffineRoot) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AffineRoot({self.root}, {self.n})"


def vanishing_affine_roots(y: ApartmentPoint) -> set[AffineRoot]:
    """All affine roots vanishing at y; their gradients span the quotient system."""
    rs = y.rs
    out = set()
    for a in rs.roots:
        v = y.pair(a)
        if v.denominator == 1:
            out.add(AffineRoot(rs, a, -int(v)))
    return out


class MPLattice:
    """Symbolic descriptor of g_{y,>=r} (or g_{y,>r}): per root the minimal
    t-exponent of the affine root subspaces included, plus the toral floor."""

    def __init__(self, y: ApartmentPoint, r: Fraction, strict: bool = False):
        self.y = y
        self.r = Fraction(r)
        self.strict = strict
        rs = y.rs
        self.root_levels = {}
        for a in rs.roots:
            va = y.pair(a)
            # smallest integer n with va + n >= r (resp. > r)
            x = self.r - va
            n = -(-x.numerator // x.denominator)  # ceil
            if strict and va + n == self.r:
                n += 1
            self.root_levels[a] = n
        rr = self.r
        toral = -(-rr.numerator // rr.denominator)  # ceil(r)
        if strict and rr.denominator == 1:
            toral = int(rr) + 1
        self.toral_level = toral

    def graded_dim(self) -> int:
        """dim_k of the graded piece g_{y,r}: affine root count (+rank if r in Z)."""
        rs = self.y.rs
        count = 0
        for a in rs.roots:
            va = self.y.pair(a)
            if (self.r - va).denominator == 1:
                count += 1
        if self.r.denominator == 1:
            count += rs.rank
        return count

    def shifted(self, m: int) -> "MPLattice":
        """t^m * self = the descriptor at level r + m."""
        return MPLattice(self.y, self.r + m, self.strict)

    def __eq__(self, other):
        return (isinstance(other, MPLattice) and self.y == other.y
                and self.root_levels == other.root_levels
                and self.toral_level == other.toral_level)

    def __repr__(self):
        tag = ">" if self.strict else ">="
        return f"MPLattice(y={self.y.coords}, {tag}{self.r})"


def mp_lattice(y: ApartmentPoint, r, strict: bool = False) -> MPLattice:
    return MPLattice(y, Fraction(r), strict)


class IntPoly:
    """Integer-coefficient polynomial in q (dense, exact)."""

    def __init__(self, coeffs):
        cs = list(coeffs)
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = cs

    @staticmethod
    def monomial(c, e):
        return IntPoly([0] * e + [c])

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPoly([(self.coeffs[i] if i < len(self.coeffs) else 0)
                        + (other.coeffs[i] if i < len(other.coeffs) else 0)
                        for i in range(n)])

    def __mul__(self, other):
        out = [0] * (len(self.coeffs) + len(other.coeffs))
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return IntPoly(out)

    def __call__(self, q: int) -> int:
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * q + c
        return acc

    def __eq__(self, other):
        return isinstance(other, IntPoly) and self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for e in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[e]
            if c:
                terms.append(f"{c}" if e == 0 else (f"{c}*q^{e}" if e > 1 else f"{c}*q"))
        return " + ".join(terms)


class ReductiveQuotient:
    """The reductive quotient at y: equal-rank subsystem, its Weyl group W_y,
    and the exact order polynomial of its F_q-points."""

    def __init__(self, y: ApartmentPoint):
        self.y = y
        rs = y.rs
        self.vanishing = vanishing_affine_roots(y)
        self.sub_roots = sorted({ar.root for ar in self.vanishing})
        gens = [rs.reflection(a) for a in self.sub_roots]
        seen = {identity_matrix(rs.n_amb)}
        frontier = [identity_matrix(rs.n_amb)]
        while frontier:
            new = []
            for m in frontier:
                for g in gens:
                    c = matmul(g, m)
                    if c not in seen:
                        seen.add(c)
                        new.append(c)
            frontier = new
        self.weyl_elements = sorted(seen)
        self.positive_sub_roots = [a for a in self.sub_roots if rs._is_positive(a)]

    def sub_length(self, w) -> int:
        rs = self.y.rs
        return sum(1 for a in self.positive_sub_roots
                   if not rs._is_positive(matvec(w, a)))

    def order_polynomial(self) -> IntPoly:
        """|G_{y,0}(F_q)| = (q-1)^rank * q^N * sum_{w in W_y} q^{l(w)}."""
        rs = self.y.rs
        poincare = IntPoly([0])
        for w in self.weyl_elements:
            poincare = poincare + IntPoly.monomial(1, self.sub_length(w))
        qm1 = IntPoly([-1, 1])
        acc = IntPoly([1])
        for _ in range(rs.rank):
            acc = acc * qm1
        n_pos = len(self.positive_sub_roots)
        return acc * IntPoly.monomial(1, n_pos) * poincare

    def dimension(self) -> int:
        return self.y.rs.rank + len(self.sub_roots)

    def weyl_order(self) -> int:
        return len(self.weyl_elements)


def reductive_quotient(y: ApartmentPoint) -> ReductiveQuotient:
    return ReductiveQuotient(y)


# ---------------------------------------------------------------------------
# Affine Weyl group


class AffineWeylElt:
    """t_mu * w with mu in the coroot lattice and w in the finite Weyl group."""

    __slots__ = ("rs", "mu", "w", "_len", "_word")

    def __init__(self, rs: RootSystem, mu, w):
        self.rs = rs
        self.mu = tuple(mu)
        self.w = tuple(tuple(r) for r in w)
        self._len = None
        self._word = None

    @staticmethod
    def identity(rs: RootSystem) -> "AffineWeylElt":
        return AffineWeylElt(rs, (0,) * rs.n_amb, identity_matrix(rs.n_amb))

    @staticmethod
    def translation(rs: RootSystem, mu) -> "AffineWeylElt":
        return AffineWeylElt(rs, mu, identity_matrix(rs.n_amb))

    @staticmethod
    def affine_reflection(rs: RootSystem, aroot: AffineRoot) -> "AffineWeylElt":
        cr = rs.coroot(aroot.root)
        mu = tuple(-aroot.n * c for c in cr)
        return AffineWeylElt(rs, mu, rs.reflection(aroot.root))

    @staticmethod
    def simple_reflections(rs: RootSystem) -> list["AffineWeylElt"]:
        """s_0 (affine node), s_1, ..., s_rank."""
        out = [AffineWeylElt.affine_reflection(
            rs, AffineRoot(rs, tuple(-x for x in rs.highest_root), 1))]
        for a in rs.simple_roots:
            out.append(AffineWeylElt.affine_reflection(rs, AffineRoot(rs, a, 0)))
        return out

    def __mul__(self, other: "AffineWeylElt") -> "AffineWeylElt":
        mu = tuple(m + x for m, x in zip(self.mu, matvec(self.w, other.mu)))
        return AffineWeylElt(self.rs, mu, matmul(self.w, other.w))

    def inverse(self) -> "AffineWeylElt":
        wi = mat_transpose(self.w)  # orthogonal
        return AffineWeylElt(self.rs, tuple(-x for x in matvec(wi, self.mu)), wi)

    def apply_point(self, coords):
        return tuple(x + m for x, m in zip(matvec(self.w, coords), self.mu))

    def apply_affine_root(self, a: AffineRoot) -> AffineRoot:
        """The affine root alpha o self^{-1} (action on functions)."""
        nb = matvec(self.w, a.root)
        return AffineRoot(self.rs, nb, a.n - dot(nb, self.mu))

    def is_identity(self) -> bool:
        return all(m == 0 for m in self.mu) and self.w == identity_matrix(self.rs.n_amb)

    def length(self) -> int:
        if self._len is None:
            self._len = self._count_inversions()
        return self._len

    def _count_inversions(self) -> int:
        rs = self.rs
        total = 0
        bound = max((abs(dot(a, self.mu)) for a in rs.roots), default=0) + 2
        for a in rs.roots:
            lo = 0 if rs._is_positive(a) else 1
            for n in range(lo, lo + bound):
                ar = AffineRoot(rs, a, n)
                if not self.apply_affine_root(ar).is_positive():
                    total += 1
        return total

    def reduced_word(self) -> tuple[int, ...]:
        """Indices into simple_reflections(rs); empty for the identity."""
        if self._word is None:
            gens = AffineWeylElt.simple_reflections(self.rs)
            word = []
            cur = self
            n = cur.length()
            while n > 0:
                for i, s in enumerate(gens):
                    nxt = s * cur
                    if nxt.length() == n - 1:
                        word.append(i)
                        cur = nxt
                        n -= 1
                        break
                else:
                    raise AssertionError("no descent found; length function broken")
            self._word = tuple(word)
        return self._word

    def key(self):
        return (self.mu, self.w)

    def __eq__(self, other):
        return isinstance(other, AffineWeylElt) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"AffineWeylElt(mu={self.mu}, w={self.w})"


def affine_weyl_ball(rs: RootSystem, budget: int) -> list[AffineWeylElt]:
    """All affine Weyl elements of length <= budget, BFS order (length asc)."""
    gens = AffineWeylElt.simple_reflections(rs)
    e = AffineWeylElt.identity(rs)
    seen = {e.key(): e}
    frontier = [e]
    order = [e]
    for _ in range(budget):
        new = []
        for m in frontier:
            for s in gens:
                c = m * s
                if c.key() not in seen:
                    seen[c.key()] = c
                    new.append(c)
                    order.append(c)
        frontier = new
    return order


def double_cosets(rs: RootSystem, wy_elements, wp_elements) -> list:
    """One representative (a Weyl matrix) per W_y \\ W / W_P double coset.

    Representatives are chosen minimal in (finite length, list order), so the
    output is deterministic.  Matrix monomial lifts live in liemodel.
    """
    wy = list(wy_elements)
    wp = list(wp_elements)
    remaining = list(rs.weyl)
    reps = []
    seen = set()
    for w in remaining:
        if w in seen:
            continue
        coset = {matmul(a, matmul(w, b)) for a in wy for b in wp}
        seen |= coset
        rep = min(coset, key=lambda m: (rs.finite_length(m), rs.weyl.index(m)))
        reps.append(rep)
    return reps
