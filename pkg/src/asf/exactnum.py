"""Exact arithmetic substrate: F_q, truncated Laurent series, matrices, O-lattices.

All values are exact.  Laurent series carry a half-open precision window
[lo, hi); every operation narrows windows correctly and quantities that
cannot be certified inside the window raise InsufficientPrecision.  Measures
and integrals are exact elements of Q[sqrt(q)] at each concrete q.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .errors import (
    BadCharacteristic,
    DegenerateForm,
    InsufficientPrecision,
    RankDeficient,
)

# Fixed irreducible polynomials (Conway polynomials) per (p, m), m >= 2,
# encoded as tuples of F_p coefficients of x^0..x^(m-1); the x^m coefficient
# is 1.  Fixing these makes every run reproducible bit-for-bit.
IRREDUCIBLE_POLY = {
    (3, 2): (2, 2),
    (3, 3): (1, 2, 0),
    (5, 2): (2, 4),
    (7, 2): (3, 6),
    (11, 2): (2, 7),
    (13, 2): (2, 12),
}


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class GF:
    """The field F_q, q = p^m, elements encoded as ints in [0, q).

    An element a_0 + a_1*x + ... + a_{m-1}*x^(m-1) over F_p is encoded as
    the integer sum a_i * p^i.  Addition/multiplication tables are built
    once; all arithmetic is table lookups on ints.
    """

    def __init__(self, q: int):
        p, m = factor_prime_power(q)
        self.q = q
        self.p = p
        self.m = m
        if m > 1:
            if (p, m) not in IRREDUCIBLE_POLY:
                raise BadCharacteristic(f"no fixed modulus on record for q={q}")
            self.modulus = IRREDUCIBLE_POLY[(p, m)]
            self._check_modulus_irreducible()
        else:
            self.modulus = ()
        self._build_tables()

    def _check_modulus_irreducible(self):
        # Degrees 2 and 3 are irreducible iff they have no root in F_p.
        p, m = self.p, self.m
        assert m in (2, 3), "only degrees 2 and 3 are tabulated"
        for x in range(p):
            acc = 1
            val = 0
            for c in self.modulus:
                val = (val + c * acc) % p
                acc = (acc * x) % p
            val = (val + acc) % p
            if val == 0:
                raise BadCharacteristic(f"modulus for q={self.q} is reducible")

    def _poly(self, a: int) -> list[int]:
        out = []
        for _ in range(self.m):
            out.append(a % self.p)
            a //= self.p
        return out

    def _unpoly(self, cs) -> int:
        acc = 0
        for c in reversed(cs):
            acc = acc * self.p + (c % self.p)
        return acc

    def _mul_slow(self, a: int, b: int) -> int:
        p, m = self.p, self.m
        pa, pb = self._poly(a), self._poly(b)
        prod = [0] * (2 * m - 1)
        for i, x in enumerate(pa):
            if x:
                for j, y in enumerate(pb):
                    prod[i + j] = (prod[i + j] + x * y) % p
        # reduce by x^m = -modulus
        for k in range(2 * m - 2, m - 1, -1):
            c = prod[k]
            if c:
                prod[k] = 0
                for i, mc in enumerate(self.modulus):
                    prod[k - m + i] = (prod[k - m + i] - c * mc) % p
        return self._unpoly(prod[: m])

    def _build_tables(self):
        q = self.q
        if self.m == 1:
            self.add = [[(a + b) % q for b in range(q)] for a in range(q)]
            self.mul = [[(a * b) % q for b in range(q)] for a in range(q)]
        else:
            self.add = [
                [self._unpoly([(x + y) % self.p for x, y in zip(self._poly(a), self._poly(b))])
                 for b in range(q)]
                for a in range(q)
            ]
            self.mul = [[self._mul_slow(a, b) for b in range(q)] for a in range(q)]
        self.neg = [self.sub_int(0, a) for a in range(q)]
        self.inv = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self.mul[a][b] == 1:
                    self.inv[a] = b
                    break
        self.one = 1
        self.zero = 0

    def sub_int(self, a: int, b: int) -> int:
        if self.m == 1:
            return (a - b) % self.q
        return self._unpoly([(x - y) % self.p for x, y in zip(self._poly(a), self._poly(b))])

    def sub(self, a: int, b: int) -> int:
        return self.add[a][self.neg[b]]

    def from_int(self, n: int) -> int:
        """Reduce an ordinary integer into the prime field inside F_q."""
        return n % self.p

    def is_square(self, a: int) -> bool:
        """Whether a is a square in F_q (q odd); 0 counts as a square."""
        if a == 0:
            return True
        e = (self.q - 1) // 2
        acc, base = 1, a
        while e:
            if e & 1:
                acc = self.mul[acc][base]
            base = self.mul[base][base]
            e >>= 1
        return acc == 1

    def elements(self):
        return range(self.q)

    def __repr__(self):
        return f"GF({self.q})"


def factor_prime_power(q: int) -> tuple[int, int]:
    for p in range(2, q + 1):
        if q % p == 0:
            if not is_prime(p):
                raise BadCharacteristic(f"{q} is not a prime power")
            m = 0
            n = q
            while n % p == 0:
                n //= p
                m += 1
            if n != 1:
                raise BadCharacteristic(f"{q} is not a prime power")
            return p, m
    raise BadCharacteristic(f"{q} is not a prime power")


@lru_cache(maxsize=None)
def field(q: int) -> GF:
    return GF(q)


class FieldSpec:
    """Ground field data plus the characteristic guard for a group rank/|W|."""

    def __init__(self, q: int):
        self.K = field(q)
        self.q = q
        self.p = self.K.p
        self.m = self.K.m

    def check_group_guard(self, rank: int, weyl_order: int):
        if self.p <= rank + 1:
            raise BadCharacteristic(
                f"p={self.p} must exceed rank+1={rank + 1}")
        if weyl_order % self.p == 0:
            raise BadCharacteristic(
                f"p={self.p} divides the Weyl group order {weyl_order}")


DEFAULT_PRECISION = 32


class LaurentSeries:
    """Truncated Laurent series over F_q.

    coeffs[i] is the coefficient of t^(lo+i); the window is [lo, hi) with
    hi = lo + len(coeffs).  Coefficients outside the window are unknown.
    A series constructed from a Laurent polynomial is exact below hi and
    implicitly zero above every stored exponent, but we never rely on that:
    correctness only uses the window contract.
    """

    __slots__ = ("K", "lo", "coeffs")

    def __init__(self, K: GF, lo: int, coeffs):
        self.K = K
        cs = list(coeffs)
        # normalize: drop leading zeros so lo is the valuation when nonzero;
        # coefficients below lo are exactly zero, above hi unknown
        k = 0
        while k < len(cs) and cs[k] == 0:
            k += 1
        self.lo = lo + k
        self.coeffs = cs[k:]

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_dict(K: GF, d: dict, hi: int | None = None) -> "LaurentSeries":
        """Series from {exponent: int coefficient}; window [min expo, hi)."""
        if hi is None:
            hi = (max(d) + 1 if d else 0) + DEFAULT_PRECISION
        lo = min(d) if d else 0
        lo = min(lo, 0)
        cs = [0] * (hi - lo)
        for e, c in d.items():
            if e >= hi:
                raise InsufficientPrecision("coefficient beyond window")
            cs[e - lo] = c % K.p if isinstance(c, int) else c
        return LaurentSeries(K, lo, cs)

    @staticmethod
    def zero(K: GF, lo: int = 0, hi: int = DEFAULT_PRECISION) -> "LaurentSeries":
        return LaurentSeries(K, lo, [0] * (hi - lo))

    @staticmethod
    def const(K: GF, c: int, hi: int = DEFAULT_PRECISION) -> "LaurentSeries":
        cs = [0] * hi
        if hi > 0:
            cs[0] = c % K.p if c >= 0 or isinstance(c, int) else c
        return LaurentSeries(K, 0, cs)

    @staticmethod
    def t_power(K: GF, n: int, hi: int | None = None) -> "LaurentSeries":
        if hi is None:
            hi = n + DEFAULT_PRECISION
        cs = [0] * (hi - n)
        cs[0] = 1
        return LaurentSeries(K, n, cs)

    # -- window bookkeeping ------------------------------------------------

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs)

    def coeff(self, e: int) -> int:
        """Coefficient of t^e; exact only for e < hi."""
        if e >= self.hi:
            raise InsufficientPrecision(f"t^{e} outside window [{self.lo},{self.hi})")
        if e < self.lo:
            return 0
        return self.coeffs[e - self.lo]

    def truncate(self, hi: int) -> "LaurentSeries":
        if hi >= self.hi:
            return self
        return LaurentSeries(self.K, self.lo, self.coeffs[: hi - self.lo])

    def is_zero(self) -> bool:
        """True iff all known coefficients vanish (zero up to precision)."""
        return all(c == 0 for c in self.coeffs)

    def valuation(self) -> int:
        """Exact t-adic valuation; InsufficientPrecision if zero in window."""
        for i, c in enumerate(self.coeffs):
            if c:
                return self.lo + i
        raise InsufficientPrecision(
            f"series vanishes on its window [{self.lo},{self.hi})")

    def valuation_at_least(self, r: int) -> bool:
        """Exact test v >= r, usable even for the zero series."""
        for i, c in enumerate(self.coeffs):
            if c and self.lo + i < r:
                return False
        if self.hi < r:
            raise InsufficientPrecision("window too narrow to certify v >= r")
        return True

    def leading(self) -> tuple[int, int]:
        v = self.valuation()
        return v, self.coeffs[v - self.lo]

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        K = self.K
        lo = min(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        add = K.add
        cs = [0] * (hi - lo)
        for i in range(hi - lo):
            e = lo + i
            a = self.coeffs[e - self.lo] if self.lo <= e else 0
            b = other.coeffs[e - other.lo] if other.lo <= e else 0
            cs[i] = add[a][b]
        return LaurentSeries(K, lo, cs)

    def __neg__(self) -> "LaurentSeries":
        neg = self.K.neg
        return LaurentSeries(self.K, self.lo, [neg[c] for c in self.coeffs])

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        K = self.K
        # window of the product: a factor's unknown tail pollutes everything
        # above lo_self+hi_other and lo_other+hi_self
        lo = self.lo + other.lo
        hi = min(self.lo + other.hi, other.lo + self.hi)
        n = hi - lo
        if n <= 0:
            return LaurentSeries(K, lo, [])
        cs = [0] * n
        add, mul = K.add, K.mul
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            base = self.lo + i + other.lo - lo
            row = mul[a]
            for j, b in enumerate(other.coeffs):
                k = base + j
                if k >= n:
                    break
                if b:
                    cs[k] = add[cs[k]][row[b]]
        return LaurentSeries(K, lo, cs)

    def scale(self, c: int) -> "LaurentSeries":
        row = self.K.mul[c % self.K.q if c >= 0 else c]
        return LaurentSeries(self.K, self.lo, [row[x] for x in self.coeffs])

    def shift(self, n: int) -> "LaurentSeries":
        """Multiply by t^n."""
        return LaurentSeries(self.K, self.lo + n, list(self.coeffs))

    def inverse(self) -> "LaurentSeries":
        """Multiplicative inverse, window matched to the input's length."""
        v, lead = self.leading()
        K = self.K
        n = self.hi - v
        a = [self.coeffs[v - self.lo + i] if v - self.lo + i < len(self.coeffs) else 0
             for i in range(n)]
        ilead = K.inv[lead]
        out = [0] * n
        out[0] = ilead
        add, mul, neg = K.add, K.mul, K.neg
        for k in range(1, n):
            s = 0
            for j in range(1, k + 1):
                if a[j] and out[k - j]:
                    s = add[s][mul[a[j]][out[k - j]]]
            out[k] = mul[ilead][neg[s]]
        return LaurentSeries(K, -v, out)

    def __truediv__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self * other.inverse()

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentSeries):
            return NotImplemented
        hi = min(self.hi, other.hi)
        lo = min(self.lo, other.lo)
        for e in range(lo, hi):
            a = self.coeffs[e - self.lo] if self.lo <= e < self.hi else 0
            b = other.coeffs[e - other.lo] if other.lo <= e < other.hi else 0
            if a != b:
                return False
        return True

    def __hash__(self):
        v = None
        for i, c in enumerate(self.coeffs):
            if c:
                v = self.lo + i
                break
        items = tuple(c for c in self.coeffs if True)
        return hash((self.K.q, v, tuple(items)))

    def __repr__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                e = self.lo + i
                if e == 0:
                    terms.append(f"{c}")
                elif e == 1:
                    terms.append(f"{c}*t")
                else:
                    terms.append(f"{c}*t^{e}")
        body = " + ".join(terms) if terms else "0"
        return f"({body} + O(t^{self.hi}))"


class LaurentMatrix:
    """Dense matrix of LaurentSeries over a common GF."""

    __slots__ = ("K", "rows")

    def __init__(self, K: GF, rows):
        self.K = K
        self.rows = [list(r) for r in rows]

    @staticmethod
    def from_int_entries(K: GF, entries, hi: int = DEFAULT_PRECISION) -> "LaurentMatrix":
        """entries[i][j] is a dict {t-exponent: integer coefficient}."""
        return LaurentMatrix(
            K,
            [[LaurentSeries.from_dict(K, {e: c % K.p for e, c in d.items()}, hi=hi)
              for d in row] for row in entries],
        )

    @staticmethod
    def identity(K: GF, n: int, hi: int = DEFAULT_PRECISION) -> "LaurentMatrix":
        return LaurentMatrix(
            K,
            [[LaurentSeries.const(K, 1 if i == j else 0, hi=hi) for j in range(n)]
             for i in range(n)],
        )

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def ncols(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __add__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return LaurentMatrix(
            self.K,
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
        )

    def __sub__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return LaurentMatrix(
            self.K,
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)],
        )

    def __neg__(self) -> "LaurentMatrix":
        return LaurentMatrix(self.K, [[-a for a in r] for r in self.rows])

    def __mul__(self, other: "LaurentMatrix") -> "LaurentMatrix":
        n, m, k = self.n, other.ncols, self.ncols
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = self.rows[i][0] * other.rows[0][j]
                for s in range(1, k):
                    acc = acc + self.rows[i][s] * other.rows[s][j]
                row.append(acc)
            out.append(row)
        return LaurentMatrix(self.K, out)

    def scale(self, c: int) -> "LaurentMatrix":
        return LaurentMatrix(self.K, [[a.scale(c) for a in r] for r in self.rows])

    def shift(self, n: int) -> "LaurentMatrix":
        return LaurentMatrix(self.K, [[a.shift(n) for a in r] for r in self.rows])

    def transpose(self) -> "LaurentMatrix":
        return LaurentMatrix(self.K, [list(c) for c in zip(*self.rows)])

    def trace(self) -> LaurentSeries:
        acc = self.rows[0][0]
        for i in range(1, self.n):
            acc = acc + self.rows[i][i]
        return acc

    def bracket(self, other: "LaurentMatrix") -> "LaurentMatrix":
        return self * other - other * self

    def conjugate(self, g: "LaurentMatrix", ginv: "LaurentMatrix") -> "LaurentMatrix":
        """Ad(g) of self, i.e. g * self * ginv."""
        return g * self * ginv

    def det_valuation(self) -> int:
        """v(det) by Gaussian elimination with minimal-valuation pivoting."""
        n = self.n
        if n != self.ncols:
            raise RankDeficient("determinant of a non-square matrix")
        work = [row[:] for row in self.rows]
        total = 0
        for col in range(n):
            piv, pv = None, None
            for i in range(col, n):
                try:
                    v = work[i][col].valuation()
                except InsufficientPrecision:
                    continue
                if pv is None or v < pv:
                    piv, pv = i, v
            if piv is None:
                # whole column vanishes to working precision
                raise RankDeficient("matrix is singular to working precision")
            work[col], work[piv] = work[piv], work[col]
            total += pv
            pivot = work[col][col]
            for i in range(col + 1, n):
                entry = work[i][col]
                if entry.is_zero():
                    continue
                factor = entry / pivot
                work[i] = [a - factor * b for a, b in zip(work[i], work[col])]
        return total

    def det(self) -> LaurentSeries:
        """Exact determinant via cofactor expansion (small n only)."""
        n = self.n
        if n == 1:
            return self.rows[0][0]
        acc = None
        for j in range(n):
            a = self.rows[0][j]
            minor = LaurentMatrix(
                self.K, [r[:j] + r[j + 1:] for r in self.rows[1:]])
            term = a * minor.det()
            if j % 2 == 1:
                term = -term
            acc = term if acc is None else acc + term
        return acc

    def inverse(self) -> "LaurentMatrix":
        """Inverse by Gauss-Jordan with valuation pivoting."""
        n = self.n
        K = self.K
        hi = max(a.hi for r in self.rows for a in r)
        work = [row[:] + [LaurentSeries.const(K, 1 if i == j else 0, hi=hi)
                          for j in range(n)] for i, row in enumerate(self.rows)]
        for col in range(n):
            piv, pv = None, None
            for i in range(col, n):
                try:
                    v = work[i][col].valuation()
                except InsufficientPrecision:
                    continue
                if pv is None or v < pv:
                    piv, pv = i, v
            if piv is None:
                raise RankDeficient("matrix is singular to working precision")
            work[col], work[piv] = work[piv], work[col]
            inv_piv = work[col][col].inverse()
            work[col] = [a * inv_piv for a in work[col]]
            for i in range(n):
                if i == col:
                    continue
                f = work[i][col]
                if f.is_zero():
                    continue
                work[i] = [a - f * b for a, b in zip(work[i], work[col])]
        return LaurentMatrix(K, [r[n:] for r in work])

    def reduction(self) -> list[list[int]]:
        """The matrix of constant terms (reduction mod t); entries must have v >= 0."""
        out = []
        for r in self.rows:
            row = []
            for a in r:
                if not a.valuation_at_least(0):
                    raise InsufficientPrecision("entry has a pole; no reduction mod t")
                row.append(a.coeff(0))
            out.append(row)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, LaurentMatrix):
            return NotImplemented
        return all(a == b for r1, r2 in zip(self.rows, other.rows)
                   for a, b in zip(r1, r2))

    def __repr__(self):
        return "LaurentMatrix([" + ",\n               ".join(
            "[" + ", ".join(repr(a) for a in r) + "]" for r in self.rows) + "])"


# ---------------------------------------------------------------------------
# O-lattices and indices


class OLattice:
    """Full-rank O-lattice in F^n given by a basis matrix (columns span)."""

    def __init__(self, basis: LaurentMatrix):
        if basis.n != basis.ncols:
            raise RankDeficient("lattice basis must be square")
        self.basis = basis
        self.n = basis.n

    @property
    def K(self) -> GF:
        return self.basis.K

    def det_valuation(self) -> int:
        return self.basis.det_valuation()

    def contains(self, v: list[LaurentSeries]) -> bool:
        """Membership of a column vector: solve basis * x = v, test x integral."""
        col = LaurentMatrix(self.K, [[c] for c in v])
        x = self.basis.inverse() * col
        return all(x.rows[i][0].is_zero() or x.rows[i][0].valuation() >= 0
                   for i in range(self.n))

    def scaled(self, m: int) -> "OLattice":
        return OLattice(self.basis.shift(m))


def lattice_index(A: OLattice, B: OLattice) -> Fraction:
    """Generalized index [A:B] as an exact power of q.

    [A:B] = q^{v(det M)} where B = A*M; symmetric relative-index semantics,
    so the result may be a negative power of q.
    """
    if A.n != B.n:
        raise RankDeficient("lattices in different ambient spaces")
    q = A.K.q
    e = B.det_valuation() - A.det_valuation()
    return Fraction(q) ** e


def gram_matrix(L: OLattice, pairing) -> LaurentMatrix:
    cols = [[L.basis.rows[i][j] for i in range(L.n)] for j in range(L.n)]
    rows = []
    for bi in cols:
        rows.append([pairing(bi, bj) for bj in cols])
    return LaurentMatrix(L.K, rows)


def dual_lattice(L: OLattice, pairing) -> OLattice:
    """{Y : pairing(X, Y) in t*O for all X in L} for a nondegenerate pairing.

    pairing maps two coordinate vectors (lists of LaurentSeries) to a series.
    """
    G = gram_matrix(L, pairing)
    try:
        Ginv = G.inverse()
    except RankDeficient:
        raise DegenerateForm("pairing is degenerate on the ambient space")
    # columns of L.basis * Ginv^T * t satisfy pairing(b_i, d_j) = t*delta_ij
    D = L.basis * Ginv.transpose().shift(1)
    return OLattice(D)


def self_pairing_index(L: OLattice, pairing) -> Fraction:
    """[L^* : L] for the t*O-dual; equals q^{v det Gram - n}."""
    Ls = dual_lattice(L, pairing)
    return lattice_index(Ls, L)


def lattice_measure(L: OLattice, pairing) -> "Qsqrt":
    """Self-dual measure m with m(L) m(L^*) = 1: m(L) = [L^*:L]^(-1/2)."""
    idx = self_pairing_index(L, pairing)
    q = L.K.q
    e = power_of_q(idx, q)
    return Qsqrt.q_half_power(q, -e)


def power_of_q(x: Fraction, q: int) -> int:
    """Write x = q^e exactly, else raise."""
    e = 0
    if x == 1:
        return 0
    if x > 1:
        while x > 1:
            x /= q
            e += 1
    else:
        while x < 1:
            x *= q
            e -= 1
    if x != 1:
        raise ValueError("not a power of q")
    return e


class Qsqrt:
    """Exact number a + b*sqrt(q) with a, b rational, for a fixed q."""

    __slots__ = ("q", "a", "b")

    def __init__(self, q: int, a=0, b=0):
        self.q = q
        self.a = Fraction(a)
        self.b = Fraction(b)

    @staticmethod
    def q_half_power(q: int, k: int) -> "Qsqrt":
        """q^(k/2) for integer k."""
        if k % 2 == 0:
            return Qsqrt(q, Fraction(q) ** (k // 2), 0)
        return Qsqrt(q, 0, Fraction(q) ** ((k - 1) // 2))

    @staticmethod
    def rational(q: int, a) -> "Qsqrt":
        return Qsqrt(q, Fraction(a), 0)

    def _coerce(self, other) -> "Qsqrt":
        if isinstance(other, Qsqrt):
            assert other.q == self.q
            return other
        return Qsqrt(self.q, Fraction(other), 0)

    def __add__(self, other):
        o = self._coerce(other)
        return Qsqrt(self.q, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self):
        return Qsqrt(self.q, -self.a, -self.b)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return Qsqrt(self.q,
                     self.a * o.a + self.q * self.b * o.b,
                     self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def inverse(self) -> "Qsqrt":
        d = self.a * self.a - self.q * self.b * self.b
        if d == 0:
            raise ZeroDivisionError("Qsqrt zero divisor")
        return Qsqrt(self.q, self.a / d, -self.b / d)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __eq__(self, other):
        o = self._coerce(other)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.q, self.a, self.b))

    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if self.b != 0:
            raise ValueError(f"{self} is not rational")
        return self.a

    def __float__(self):
        return float(self.a) + float(self.b) * self.q ** 0.5

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        if self.a == 0:
            return f"{self.b}*sqrt({self.q})"
        return f"{self.a} + {self.b}*sqrt({self.q})"


def stabilized(compute, start_prec: int = DEFAULT_PRECISION, max_doublings: int = 4):
    """Run compute(prec) at doubling precisions until two results agree.

    The precision-widening policy for quantities built from truncated
    series: callers get an exact answer or TruncationUnstable.
    """
    from .errors import TruncationUnstable

    prev = None
    prec = start_prec
    for _ in range(max_doublings + 1):
        cur = compute(prec)
        if prev is not None and cur == prev:
            return cur
        prev = cur
        prec *= 2
    raise TruncationUnstable("result did not stabilize under precision doubling")
