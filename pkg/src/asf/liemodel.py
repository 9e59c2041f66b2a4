"""Matrix models of the supported groups: sl_n (n = 2, 3) and sp_4.

The model fixes a split Cartan of diagonal matrices, a Chevalley-style
pinning (root vectors derived from the defining equations, normalized so
that [X_a, X_{-a}] is the coroot), the trace form, and monomial lifts of
Weyl elements.  Group semantics for orbits are adjoint: conjugation by
GL_n for type A and by symplectic similitudes for C2.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from functools import lru_cache

from .errors import (
    BadCharacteristic,
    NotInLieAlgebra,
    NotRegularSemisimple,
    ParseError,
    UnsupportedCentralizer,
    UnsupportedGroup,
)
from .exactnum import (
    GF,
    LaurentMatrix,
    LaurentSeries,
    OLattice,
    field,
)
from .rootdata import (
    MPLattice,
    RootSystem,
    dot,
    identity_matrix,
    matvec,
    root_system,
    solve_rational,
)


def _mat_to_frac(m):
    return [[Fraction(x) for x in row] for row in m]


def _frac_matmul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    return [[sum(a[i][s] * b[s][j] for s in range(k)) for j in range(m)]
            for i in range(n)]


def _frac_bracket(a, b):
    ab = _frac_matmul(a, b)
    ba = _frac_matmul(b, a)
    return [[x - y for x, y in zip(r1, r2)] for r1, r2 in zip(ab, ba)]


class GroupModel:
    """One of the matrix models: "sl2", "sl3", "sp4"."""

    def __init__(self, label: str):
        if label == "sl2":
            self.rs = root_system("A1")
            self.n = 2
            self.rep_weights = [(1, -1)]  # completed below for type A
        elif label == "sl3":
            self.rs = root_system("A2")
            self.n = 3
        elif label == "sp4":
            self.rs = root_system("C2")
            self.n = 4
        else:
            raise UnsupportedGroup(f"unsupported model {label}")
        self.label = label
        n = self.n
        if label.startswith("sl"):
            # weight of e_i is the i-th coordinate functional
            self.rep_weights = [tuple(1 if j == i else 0 for j in range(n))
                                for i in range(n)]
            self.J = None
        else:
            self.rep_weights = [(1, 0), (0, 1), (0, -1), (-1, 0)]
            J = [[0] * 4 for _ in range(4)]
            J[0][3], J[1][2], J[2][1], J[3][0] = 1, 1, -1, -1
            self.J = J
        self.cartan_basis = self._cartan_basis()
        self.root_vectors = self._derive_root_vectors()
        self.basis_labels, self.basis_mats = self._assemble_basis()
        self.dim = len(self.basis_mats)
        self._coordinatizer = self._build_coordinatizer()
        self._check_pinning()

    # -- structure over Q ---------------------------------------------------

    def _cartan_basis(self):
        n = self.n
        out = []
        if self.label.startswith("sl"):
            for i in range(n - 1):
                h = [[0] * n for _ in range(n)]
                h[i][i], h[i + 1][i + 1] = 1, -1
                out.append(h)
        else:
            h1 = [[0] * 4 for _ in range(4)]
            h1[0][0], h1[3][3] = 1, -1
            h2 = [[0] * 4 for _ in range(4)]
            h2[1][1], h2[2][2] = 1, -1
            out = [h1, h2]
        return out

    def cartan_matrix_of_coweight(self, lam):
        """Diagonal matrix of a cocharacter, as integer diag entries."""
        return [dot(self.rep_weights[i], lam) for i in range(self.n)]

    def in_lie_algebra(self, m) -> bool:
        if self.label.startswith("sl"):
            return sum(Fraction(m[i][i]) for i in range(self.n)) == 0
        J = _mat_to_frac(self.J)
        mt = [list(c) for c in zip(*_mat_to_frac(m))]
        lhs = _frac_matmul(mt, J)
        rhs = _frac_matmul(J, _mat_to_frac(m))
        return all(a + b == 0 for r1, r2 in zip(lhs, rhs) for a, b in zip(r1, r2))

    def _derive_root_vectors(self):
        n = self.n
        out = {}
        for a in self.rs.roots:
            positions = [(i, j) for i in range(n) for j in range(n) if i != j
                         and tuple(x - y for x, y in zip(self.rep_weights[i],
                                                         self.rep_weights[j])) == a]
            assert positions, f"no matrix positions for root {a}"
            if self.label.startswith("sl"):
                (i, j), = positions
                m = [[0] * n for _ in range(n)]
                m[i][j] = 1
                out[a] = m
                continue
            # sp4: solve the symplectic condition on the span of the positions
            if len(positions) == 1:
                (i, j), = positions
                m = [[0] * n for _ in range(n)]
                m[i][j] = 1
                assert self.in_lie_algebra(m)
                out[a] = m
            else:
                (i1, j1), (i2, j2) = positions
                found = None
                for c in (1, -1):
                    m = [[0] * n for _ in range(n)]
                    m[i1][j1], m[i2][j2] = 1, c
                    if self.in_lie_algebra(m):
                        found = m
                        break
                assert found is not None, f"no symplectic generator for {a}"
                out[a] = found
        # normalize negatives so [X_a, X_{-a}] equals the coroot matrix
        for a in self.rs.positive_roots:
            na = tuple(-x for x in a)
            cr = self.rs.coroot(a)
            h = self._diag(self.cartan_matrix_of_coweight(cr))
            br = _frac_bracket(_mat_to_frac(out[a]), _mat_to_frac(out[na]))
            c = None
            for i in range(n):
                for j in range(n):
                    if h[i][j] != 0:
                        c = Fraction(br[i][j], h[i][j])
            assert c is not None and c != 0
            scaled = [[Fraction(x, 1) / c for x in row] for row in out[na]]
            out[na] = scaled
        return out

    def _diag(self, entries):
        n = self.n
        return [[entries[i] if i == j else 0 for j in range(n)] for i in range(n)]

    def _assemble_basis(self):
        labels, mats = [], []
        for a in self.rs.roots:
            labels.append(("root", a))
            mats.append(_mat_to_frac(self.root_vectors[a]))
        for k, h in enumerate(self.cartan_basis):
            labels.append(("cartan", k))
            mats.append(_mat_to_frac(h))
        return labels, mats

    def _build_coordinatizer(self):
        n2 = self.n * self.n
        cols = [[m[i][j] for i in range(self.n) for j in range(self.n)]
                for m in self.basis_mats]
        d = len(cols)
        gram = [[sum(cols[a][k] * cols[b][k] for k in range(n2)) for b in range(d)]
                for a in range(d)]
        # rows of C: solve gram * c_row = e_a, then C = c_row * M^T
        inv_rows = []
        for a in range(d):
            rhs = [1 if b == a else 0 for b in range(d)]
            inv_rows.append(solve_rational(gram, rhs))
        C = [[sum(inv_rows[a][b] * cols[b][k] for b in range(d)) for k in range(n2)]
             for a in range(d)]
        return C

    def _check_pinning(self):
        # bracket relations: [X_a, X_{-a}] = coroot; weights act correctly
        for a in self.rs.positive_roots:
            na = tuple(-x for x in a)
            cr = self.rs.coroot(a)
            h = _mat_to_frac(self._diag(self.cartan_matrix_of_coweight(cr)))
            br = _frac_bracket(self.root_vectors_frac(a), self.root_vectors_frac(na))
            assert br == h, f"pinning failed for {a}"

    def root_vectors_frac(self, a):
        return _mat_to_frac(self.root_vectors[a])

    # -- instantiation over F_q ------------------------------------------------

    @lru_cache(maxsize=None)
    def at(self, q: int) -> "ModelOverF":
        return ModelOverF(self, q)

    def weyl_lift_frac(self, w):
        """Monomial lift of a finite Weyl matrix via products of exp-triples."""
        rs = self.rs
        word = []
        cur = w
        while rs.finite_length(cur) > 0:
            for i, a in enumerate(rs.simple_roots):
                s = rs.reflection(a)
                from .rootdata import matmul
                nxt = matmul(s, cur)
                if rs.finite_length(nxt) < rs.finite_length(cur):
                    word.append(i)
                    cur = nxt
                    break
            else:
                raise AssertionError("descent not found in finite Weyl group")
        # cur is identity; w = s_{i1} * ... * s_{ik} reading word left to right
        n = self.n
        lift = _mat_to_frac(identity_matrix(n))
        for i in word:
            a = self.rs.simple_roots[i]
            lift = _frac_matmul(lift, self._simple_lift(a))
        return lift

    def _simple_lift(self, a):
        n = self.n
        X = self.root_vectors_frac(a)
        Y = self.root_vectors_frac(tuple(-x for x in a))
        ident = _mat_to_frac(identity_matrix(n))
        expX = [[ident[i][j] + X[i][j] for j in range(n)] for i in range(n)]
        expYm = [[ident[i][j] - Y[i][j] for j in range(n)] for i in range(n)]
        return _frac_matmul(_frac_matmul(expX, expYm), expX)

    def __repr__(self):
        return f"GroupModel({self.label})"


@lru_cache(maxsize=None)
def group_model(label: str) -> GroupModel:
    return GroupModel(label)


class ModelOverF:
    """The model instantiated over a concrete F_q."""

    def __init__(self, model: GroupModel, q: int):
        self.model = model
        self.q = q
        self.K = field(q)
        spec_guard(model, q)
        self._frac_cache = {}

    def frac_to_k(self, x: Fraction) -> int:
        K = self.K
        num = x.numerator % K.p
        den = x.denominator % K.p
        if den == 0:
            raise BadCharacteristic("denominator divisible by p")
        return K.mul[num][K.inv[den]]

    def int_matrix(self, m, hi=None) -> LaurentMatrix:
        """Constant LaurentMatrix from a rational matrix."""
        from .exactnum import DEFAULT_PRECISION
        hi = hi or DEFAULT_PRECISION
        K = self.K
        return LaurentMatrix(
            K,
            [[LaurentSeries.const(K, self.frac_to_k(Fraction(x)), hi=hi) for x in row]
             for row in m],
        )

    def k_matrix(self, m) -> list[list[int]]:
        return [[self.frac_to_k(Fraction(x)) for x in row] for row in m]

    def basis_matrices_k(self) -> list[list[list[int]]]:
        return [self.k_matrix(b) for b in self.model.basis_mats]

    def coordinates(self, mat: LaurentMatrix) -> list[LaurentSeries]:
        """Coordinates of a Lie algebra element in the fixed basis."""
        C = self.model._coordinatizer
        n = self.model.n
        out = []
        for row in C:
            acc = None
            for k, c in enumerate(row):
                if c == 0:
                    continue
                term = mat.rows[k // n][k % n].scale(self.frac_to_k(c))
                acc = term if acc is None else acc + term
            if acc is None:
                hi = min(e.hi for row in mat.rows for e in row)
                acc = LaurentSeries(self.K, hi, [])
            out.append(acc)
        return out

    def from_coordinates(self, coords) -> LaurentMatrix:
        n = self.model.n
        K = self.K
        rows = [[None] * n for _ in range(n)]
        for c, bm in zip(coords, self.model.basis_mats):
            for i in range(n):
                for j in range(n):
                    if bm[i][j] != 0:
                        term = c.scale(self.frac_to_k(bm[i][j]))
                        rows[i][j] = term if rows[i][j] is None else rows[i][j] + term
        hi = min(c.hi for c in coords)
        zero = LaurentSeries(K, hi, [])
        return LaurentMatrix(K, [[x if x is not None else zero for x in r]
                                 for r in rows])

    def weyl_lift(self, w, hi=None) -> LaurentMatrix:
        return self.int_matrix(self.model.weyl_lift_frac(w), hi=hi)

    def t_coweight(self, lam, hi=None) -> LaurentMatrix:
        """The torus element t^lam as a diagonal Laurent matrix."""
        from .exactnum import DEFAULT_PRECISION
        hi = hi or DEFAULT_PRECISION
        K = self.K
        exps = self.model.cartan_matrix_of_coweight(lam)
        rows = []
        for i, e in enumerate(exps):
            row = []
            for j in range(self.model.n):
                if i == j:
                    row.append(LaurentSeries.t_power(K, e, hi=e + hi))
                else:
                    row.append(LaurentSeries.zero(K, 0, hi))
            rows.append(row)
        return LaurentMatrix(K, rows)


def spec_guard(model: GroupModel, q: int):
    """Characteristic guard: p > rank+1 and p does not divide |W|."""
    from .exactnum import FieldSpec
    FieldSpec(q).check_group_guard(model.rs.rank, model.rs.weyl_order)


def valid_q_schedule(model_label: str, qs=(3, 5, 7, 9, 11, 13)) -> list[int]:
    model = group_model(model_label)
    out = []
    for q in qs:
        try:
            spec_guard(model, q)
        except BadCharacteristic:
            continue
        out.append(q)
    return out


# ---------------------------------------------------------------------------
# Lie elements


class LieElement:
    """Element of g(F) at a concrete q, with optional split-Cartan data.

    cartan: tuple of LaurentSeries, the coordinates along the ambient
    cocharacter space (n entries summing to 0 for sl_n; 2 entries for sp4).
    witness: an optional g with mat = Ad(g) (diagonal part); identity
    witnesses diagonal elements.
    """

    def __init__(self, model: GroupModel, q: int, mat: LaurentMatrix,
                 cartan=None, witness: LaurentMatrix | None = None):
        self.model = model
        self.q = q
        self.mat = mat
        self.cartan = tuple(cartan) if cartan is not None else None
        self.witness = witness

    @property
    def F(self) -> ModelOverF:
        return self.model.at(self.q)

    def is_cartan(self) -> bool:
        return self.cartan is not None

    def root_value(self, root) -> LaurentSeries:
        assert self.cartan is not None
        acc = None
        for c, x in zip(root, self.cartan):
            if c == 0:
                continue
            term = x.scale(self.F.frac_to_k(Fraction(c)))
            acc = term if acc is None else acc + term
        return acc

    def conjugated_by(self, g: LaurentMatrix) -> "LieElement":
        gi = g.inverse()
        mat = g * self.mat * gi
        wit = None
        if self.cartan is not None:
            wit = g if self.witness is None else g * self.witness
        return LieElement(self.model, self.q, mat, cartan=self.cartan, witness=wit)

    def scaled_by_t(self, m: int) -> "LieElement":
        cartan = None
        if self.cartan is not None:
            cartan = tuple(c.shift(m) for c in self.cartan)
        return LieElement(self.model, self.q, self.mat.shift(m),
                          cartan=cartan, witness=self.witness)

    def __repr__(self):
        return f"LieElement({self.model.label}, q={self.q}, {self.mat})"


def cartan_element(model_label: str, q: int, coeff_dicts, hi=None) -> LieElement:
    """Split Cartan element from per-coordinate Laurent polynomials.

    For sl_n, coeff_dicts has n entries (diagonal, must sum to zero); for
    sp4 it has 2 entries (a, b) giving diag(a, b, -b, -a).
    """
    from .exactnum import DEFAULT_PRECISION
    model = group_model(model_label)
    F = model.at(q)
    K = F.K
    hi = hi or DEFAULT_PRECISION
    if model.label.startswith("sl"):
        assert len(coeff_dicts) == model.n
        total = {}
        for d in coeff_dicts:
            for e, c in d.items():
                total[e] = total.get(e, 0) + c
        if any(v % K.p for v in total.values()):
            raise NotInLieAlgebra("diagonal entries must sum to zero")
        diag = [LaurentSeries.from_dict(K, d, hi=hi) for d in coeff_dicts]
        cartan = diag
    else:
        assert len(coeff_dicts) == 2
        a = LaurentSeries.from_dict(K, coeff_dicts[0], hi=hi)
        b = LaurentSeries.from_dict(K, coeff_dicts[1], hi=hi)
        diag = [a, b, -b, -a]
        cartan = [a, b]
    n = model.n
    zero = LaurentSeries.zero(K, 0, hi)
    mat = LaurentMatrix(K, [[diag[i] if i == j else zero for j in range(n)]
                            for i in range(n)])
    return LieElement(model, q, mat, cartan=cartan, witness=None)


def nilpotent_element(model_label: str, q: int, root_coeffs: dict, hi=None) -> LieElement:
    """Nilpotent element as an integer combination of root vectors,
    root_coeffs: {root tuple: {t-exponent: int coeff}}."""
    from .exactnum import DEFAULT_PRECISION
    model = group_model(model_label)
    F = model.at(q)
    K = F.K
    hi = hi or DEFAULT_PRECISION
    n = model.n
    acc = LaurentMatrix(K, [[LaurentSeries.zero(K, 0, hi)] * n for _ in range(n)])
    for root, d in root_coeffs.items():
        s = LaurentSeries.from_dict(K, d, hi=hi)
        xv = F.int_matrix(model.root_vectors_frac(tuple(root)), hi=hi)
        acc = acc + LaurentMatrix(K, [[xv.rows[i][j] * s for j in range(n)]
                                      for i in range(n)])
    return LieElement(model, q, acc, cartan=None, witness=None)


def is_regular_semisimple_cartan(elem: LieElement) -> bool:
    if not elem.is_cartan():
        return False
    for a in elem.model.rs.roots:
        if elem.root_value(a).is_zero():
            return False
    return True


def discriminant_valuation(elem: LieElement) -> int:
    """v(det ad(gamma) on g/Z(gamma)) = sum of root value valuations."""
    if not elem.is_cartan():
        raise UnsupportedCentralizer(
            "discriminant only for split-Cartan representatives")
    if not is_regular_semisimple_cartan(elem):
        raise NotRegularSemisimple("some root value vanishes")
    return sum(elem.root_value(a).valuation() for a in elem.model.rs.roots)


def depth(elem: LieElement) -> Fraction | float:
    """Depth; +inf for nilpotent elements, min root valuation for split Cartan."""
    if elem.is_cartan():
        if not is_regular_semisimple_cartan(elem):
            raise UnsupportedCentralizer("need regular split-Cartan input")
        return Fraction(min(elem.root_value(a).valuation()
                            for a in elem.model.rs.roots))
    if is_nilpotent_matrix(elem.mat, elem.model.n):
        return math.inf
    raise UnsupportedCentralizer(
        "depth implemented for split-Cartan or nilpotent inputs only")


def is_nilpotent_matrix(mat: LaurentMatrix, n: int) -> bool:
    p = mat
    for _ in range(n):
        p = p * mat
    # p = mat^(n+1); nilpotent iff mat^n = 0, test via the next power too
    acc = mat
    for _ in range(n - 1):
        acc = acc * mat
    return all(e.is_zero() for row in acc.rows for e in row)


def is_topologically_nilpotent(elem: LieElement) -> bool:
    """Reduction mod t is nilpotent (element must be integral)."""
    red = elem.mat.reduction()
    K = elem.F.K
    return k_is_nilpotent(K, red)


def ad_matrix(elem: LieElement) -> LaurentMatrix:
    """Matrix of ad(gamma) on the fixed basis of g."""
    F = elem.F
    cols = []
    for bm in elem.model.basis_mats:
        b = F.int_matrix(bm)
        br = elem.mat * b - b * elem.mat
        cols.append(F.coordinates(br))
    return LaurentMatrix(F.K, [[cols[j][i] for j in range(len(cols))]
                               for i in range(len(cols))])


def ad_power_decays(elem: LieElement, runs: int = 3) -> bool:
    """ad(gamma)^n -> 0 test up to the precision window (topological nilpotence)."""
    ad = ad_matrix(elem)
    p = ad
    prev_min = None
    for _ in range(runs):
        for _ in range(elem.model.dim):
            p = p * ad
        vals = []
        for row in p.rows:
            for e in row:
                if not e.is_zero():
                    vals.append(e.valuation())
        if not vals:
            return True
        cur = min(vals)
        if prev_min is not None and cur <= prev_min:
            return False
        prev_min = cur
    return True


# ---------------------------------------------------------------------------
# Realized Moy-Prasad lattices in g-coordinates


def mp_realize(model_label: str, q: int, L: MPLattice) -> OLattice:
    """The descriptor as an O-lattice in the coordinate space of g."""
    model = group_model(model_label)
    F = model.at(q)
    K = F.K
    d = model.dim
    rows = [[LaurentSeries.zero(K, 0, 32) for _ in range(d)] for _ in range(d)]
    for j, (kind, data) in enumerate(model.basis_labels):
        lvl = L.root_levels[data] if kind == "root" else L.toral_level
        rows[j][j] = LaurentSeries.t_power(K, lvl, hi=lvl + 32)
    return OLattice(LaurentMatrix(K, rows))


def trace_pairing(model_label: str, q: int):
    """B(X, Y) = tr(XY) as a pairing on coordinate vectors."""
    model = group_model(model_label)
    F = model.at(q)

    def pair(v, w):
        X = F.from_coordinates(v)
        Y = F.from_coordinates(w)
        return (X * Y).trace()

    return pair


def adjoint_pairing(model_label: str, elem: LieElement):
    """The symplectic pairing (X, Y) -> B(X, [Y, gamma]) on coordinates."""
    model = group_model(model_label)
    F = model.at(elem.q)

    def pair(v, w):
        X = F.from_coordinates(v)
        Y = F.from_coordinates(w)
        return (X * (Y * elem.mat - elem.mat * Y)).trace()

    return pair


# ---------------------------------------------------------------------------
# Linear algebra over the residue field


def k_rank(K: GF, rows) -> int:
    m = [list(r) for r in rows]
    nrows = len(m)
    ncols = len(m[0]) if m else 0
    rank = 0
    col = 0
    mul, add, neg, inv = K.mul, K.add, K.neg, K.inv
    for col in range(ncols):
        piv = None
        for i in range(rank, nrows):
            if m[i][col]:
                piv = i
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        ipiv = inv[m[rank][col]]
        m[rank] = [mul[x][ipiv] for x in m[rank]]
        for i in range(nrows):
            if i != rank and m[i][col]:
                f = m[i][col]
                m[i] = [add[x][neg[mul[f][y]]] for x, y in zip(m[i], m[rank])]
        rank += 1
        if rank == nrows:
            break
    return rank


def k_matmul(K: GF, a, b):
    n, k2, m = len(a), len(b), len(b[0])
    add, mul = K.add, K.mul
    out = [[0] * m for _ in range(n)]
    for i in range(n):
        ai = a[i]
        oi = out[i]
        for s in range(k2):
            x = ai[s]
            if x:
                row = mul[x]
                bs = b[s]
                for j in range(m):
                    if bs[j]:
                        oi[j] = add[oi[j]][row[bs[j]]]
    return out


def k_is_nilpotent(K: GF, m) -> bool:
    n = len(m)
    p = m
    for _ in range(n - 1):
        p = k_matmul(K, p, m)
    return all(x == 0 for row in p for x in row)


def jordan_type(K: GF, m) -> tuple[int, ...]:
    """Partition (Jordan type) of a nilpotent k-matrix via ranks of powers."""
    n = len(m)
    ranks = [n]
    p = [row[:] for row in m]
    while True:
        r = k_rank(K, p)
        ranks.append(r)
        if r == 0:
            break
        p = k_matmul(K, p, m)
    # number of blocks of size >= s is rank(m^{s-1}) - rank(m^s)
    sizes = []
    for s in range(1, len(ranks)):
        count = (ranks[s - 1] - ranks[s]) - (ranks[s] - ranks[s + 1]
                                             if s + 1 < len(ranks) else 0)
        sizes.extend([s] * count)
    parts = tuple(sorted(sizes, reverse=True))
    total = sum(parts)
    if total < n:
        parts = tuple(sorted(parts + (1,) * (n - total), reverse=True))
    return parts


def k_charpoly(K: GF, m) -> tuple[int, ...]:
    """Characteristic polynomial coefficients (x^n + c_{n-1}x^{n-1}+...+c_0),
    returned as (c_0, ..., c_{n-1})."""
    n = len(m)
    # Faddeev-LeVerrier over F_q is unsafe (divisions by small ints); expand
    # det(xI - m) with polynomial entries instead.
    polys = [[tuple(([K.neg[m[i][j]]] if True else []) + ([1] if i == j else []))
              for j in range(n)] for i in range(n)]

    def padd(a, b):
        la, lb = len(a), len(b)
        return tuple(K.add[a[i] if i < la else 0][b[i] if i < lb else 0]
                     for i in range(max(la, lb)))

    def pmul(a, b):
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                row = K.mul[x]
                for j, y in enumerate(b):
                    if y:
                        out[i + j] = K.add[out[i + j]][row[y]]
        return tuple(out)

    def pneg(a):
        return tuple(K.neg[x] for x in a)

    def det(rows):
        k = len(rows)
        if k == 1:
            return rows[0][0]
        acc = (0,)
        for j in range(k):
            minor = [r[:j] + r[j + 1:] for r in rows[1:]]
            term = pmul(rows[0][j], det(minor))
            acc = padd(acc, term if j % 2 == 0 else pneg(term))
        return acc

    cp = det([list(r) for r in polys])
    cp = list(cp) + [0] * (n + 1 - len(cp))
    # normalize leading coefficient to 1 (it is 1 by construction)
    assert cp[n] == 1
    return tuple(cp[:n])


def reduction_class_key(K: GF, m, symplectic_J=None) -> tuple:
    """Conjugacy-class key of a residue matrix: characteristic polynomial
    plus rank profiles of its powers, plus symplectic form invariants."""
    n = len(m)
    cp = k_charpoly(K, m)
    profile = []
    p = [row[:] for row in m]
    for _ in range(n):
        profile.append(k_rank(K, p))
        p = k_matmul(K, p, m)
    key = (cp, tuple(profile))
    if symplectic_J is not None and k_is_nilpotent(K, m):
        key = key + (sp_disc_classes(K, m, symplectic_J),)
    return key


def k_pair(K: GF, J, v, w) -> int:
    acc = 0
    add, mul = K.add, K.mul
    for i in range(len(v)):
        if v[i]:
            for j in range(len(w)):
                if J[i][j] and w[j]:
                    acc = add[acc][mul[v[i]][mul[J[i][j] % K.q][w[j]]]]
    return acc


def sp_disc_classes(K: GF, m, J) -> tuple:
    """Square-class data distinguishing rational forms of nilpotent sp4 orbits.

    For each odd power X^(2m-1) carrying an even Jordan block size 2m, the
    pairing v -> <X^(2m-1) v, v> induces a symmetric form; we record the
    square class of its discriminant on a complement of the kernel.
    """
    Jk = [[x % K.q for x in row] for row in J]
    jt = jordan_type(K, m)
    out = []
    for part in sorted(set(jt), reverse=True):
        if part % 2 == 1:
            continue
        # X^(part-1)
        p = [row[:] for row in m]
        for _ in range(part - 2):
            p = k_matmul(K, p, m)
        # symmetric bilinear form (v,w) -> <p v, w>
        n = len(m)
        gram = [[0] * n for _ in range(n)]
        for i in range(n):
            ei = [1 if s == i else 0 for s in range(n)]
            pei = [p_row_apply(K, p, ei, r) for r in range(n)]
            for j in range(n):
                ej = [1 if s == j else 0 for s in range(n)]
                gram[i][j] = k_pair(K, Jk, pei, ej)
        # discriminant on the non-degenerate quotient: product of pivots
        disc = _form_disc(K, gram)
        out.append((part, K.is_square(disc) if disc else None))
    return tuple(out)


def p_row_apply(K: GF, p, v, r) -> int:
    acc = 0
    add, mul = K.add, K.mul
    for j, x in enumerate(v):
        if x and p[r][j]:
            acc = add[acc][mul[p[r][j]][x]]
    return acc


def _form_disc(K: GF, gram) -> int:
    """Discriminant of a symmetric form modulo its radical: product of pivots
    under symmetric Gaussian elimination; 0 if the form is zero."""
    n = len(gram)
    g = [row[:] for row in gram]
    disc = 1
    used = [False] * n
    mul, add, neg, inv = K.mul, K.add, K.neg, K.inv
    for _ in range(n):
        piv = None
        for i in range(n):
            if not used[i] and g[i][i]:
                piv = i
                break
        if piv is None:
            # char != 2: a nonzero symmetric form has a nonzero diagonal
            # after the basis change v -> v+w; handle one hyperbolic step
            pair = None
            for i in range(n):
                if used[i]:
                    continue
                for j in range(n):
                    if not used[j] and i != j and g[i][j]:
                        pair = (i, j)
                        break
                if pair:
                    break
            if pair is None:
                break
            i, j = pair
            # replace e_i by e_i + e_j making the diagonal nonzero
            for s in range(n):
                g[i][s] = add[g[i][s]][g[j][s]]
            for s in range(n):
                g[s][i] = add[g[s][i]][g[s][j]]
            continue
        disc = mul[disc][g[piv][piv]]
        used[piv] = True
        ip = inv[g[piv][piv]]
        for i in range(n):
            if i != piv and not used[i] and g[i][piv]:
                f = mul[g[i][piv]][ip]
                for s in range(n):
                    g[i][s] = add[g[i][s]][neg[mul[f][g[piv][s]]]]
                for s in range(n):
                    g[s][i] = add[g[s][i]][neg[mul[f][g[s][piv]]]]
    return disc if any(used) else 0


# ---------------------------------------------------------------------------
# Element expression parsing (shared with the CLI)

_TERM_RE = re.compile(
    r"^\s*([+-]?\d*)\s*\*?\s*(t(\^\(?(-?\d+)\)?)?)?\s*$")


def parse_laurent_poly(text: str) -> dict[int, int]:
    """Parse "3t^2 - t^-1 + 5" into {2: 3, -1: -1, 0: 5}."""
    s = text.strip()
    if not s:
        raise ParseError("empty entry")
    # split into signed terms
    terms = re.findall(r"[+-]?[^+-]+(?:\^-\d+)?", s.replace(" ", ""))
    # the regex above can split t^-1 wrongly; do a manual scan instead
    terms = []
    cur = ""
    i = 0
    while i < len(s):
        c = s[i]
        if c in "+-" and cur.strip() and not cur.rstrip().endswith("^") \
                and not cur.rstrip().endswith("("):
            terms.append(cur)
            cur = c
        else:
            cur += c
        i += 1
    if cur.strip():
        terms.append(cur)
    out: dict[int, int] = {}
    for term in terms:
        m = _TERM_RE.match(term.replace(" ", ""))
        if not m:
            raise ParseError(f"bad term {term!r}")
        coeff_s, t_part, _, exp_s = m.groups()
        if coeff_s in ("", "+"):
            coeff = 1
        elif coeff_s == "-":
            coeff = -1
        else:
            coeff = int(coeff_s)
        if t_part:
            e = int(exp_s) if exp_s is not None else 1
        else:
            e = 0
        if coeff_s == "" and not t_part:
            raise ParseError(f"bad term {term!r}")
        out[e] = out.get(e, 0) + coeff
    return out


def parse_element(text: str, model_label: str, q: int, hi=None) -> LieElement:
    """Parse a matrix of integer-coefficient Laurent polynomials in t."""
    from .exactnum import DEFAULT_PRECISION
    model = group_model(model_label)
    F = model.at(q)
    K = F.K
    hi = hi or DEFAULT_PRECISION
    s = text.strip()
    if not (s.startswith("[[") and s.endswith("]]")):
        raise ParseError("expected [[...],[...]] matrix syntax")
    body = s[2:-2]
    rows = re.split(r"\]\s*,\s*\[", body)
    entries = []
    for row in rows:
        depth_p = 0
        cells, cur = [], ""
        for c in row:
            if c == "(":
                depth_p += 1
            if c == ")":
                depth_p -= 1
            if c == "," and depth_p == 0:
                cells.append(cur)
                cur = ""
            else:
                cur += c
        cells.append(cur)
        entries.append([parse_laurent_poly(c) for c in cells])
    n = model.n
    if len(entries) != n or any(len(r) != n for r in entries):
        raise ParseError(f"expected a {n}x{n} matrix for {model_label}")
    mat = LaurentMatrix.from_int_entries(K, entries, hi=hi)
    # defining conditions
    if model.label.startswith("sl"):
        tr = mat.trace()
        if not tr.is_zero():
            raise NotInLieAlgebra("trace is nonzero")
    else:
        J = F.int_matrix(model.J, hi=hi)
        cond = mat.transpose() * J + J * mat
        if not all(e.is_zero() for row in cond.rows for e in row):
            raise NotInLieAlgebra("symplectic condition fails")
    # detect split Cartan (diagonal) elements
    cartan = None
    if all(mat.rows[i][j].is_zero() for i in range(n) for j in range(n) if i != j):
        if model.label.startswith("sl"):
            cartan = tuple(mat.rows[i][i] for i in range(n))
        else:
            cartan = (mat.rows[0][0], mat.rows[1][1])
    return LieElement(model, q, mat, cartan=cartan, witness=None)


def standard_split_element(model_label: str, q: int, depth_exp: int) -> LieElement:
    """A regular split-Cartan element of the given integer depth: entries are
    fixed residues times t^depth, chosen per q so all root values are exactly
    of valuation depth.  Deterministic: first valid tuple in lex order."""
    model = group_model(model_label)
    K = field(q)
    p = K.p
    if model.label.startswith("sl"):
        n = model.n
        for combo in itertools.combinations(range(p), n):
            if sum(combo) % p:
                continue
            # distinct residues: all pairwise differences are units
            return cartan_element(model_label, q,
                                  [{depth_exp: c} for c in combo])
        raise UnsupportedGroup(f"no split element for {model_label} at q={q}")
    # sp4: coordinates (a, b) with a-b, a+b, 2a, 2b all units
    for a in range(1, p):
        for b in range(1, p):
            if a != b and (a + b) % p and (2 * a) % p and (2 * b) % p:
                return cartan_element(model_label, q,
                                      [{depth_exp: a}, {depth_exp: b}])
    raise UnsupportedGroup(f"no split element for {model_label} at q={q}")
