"""Point counts of Iwahori and parahoric affine Springer fibers.

A point of G/K for a parahoric K is a chain of lattices of the shape K
stabilizes.  For gamma in the standard split Cartan, stable chains are
enumerated exactly: the base lattice runs over Hermite normal forms whose
pivot exponents are pinned by a fundamental-domain window for the
translation action of the centralizer cocharacter lattice, and the digit
entries satisfy t-adically graded divisibility conditions whose solution
sets are enumerated directly (no search over non-solutions).  The Iwahori
count weights each base lattice by the number of stable (isotropic) flags
of the reduction, computed once per conjugacy class and memoized.

A brute-force per-cell counter over Iwahori-Bruhat cells provides an
independent cross-check at small q and budget.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import PoorFit, UnsupportedCentralizer, UnsupportedGroup
from .exactnum import GF, LaurentMatrix, LaurentSeries
from .liemodel import (
    GroupModel,
    LieElement,
    discriminant_valuation,
    group_model,
    is_regular_semisimple_cartan,
    jordan_type,
    k_is_nilpotent,
    k_matmul,
    k_pair,
    k_rank,
    mp_realize,
    reduction_class_key,
    sp_disc_classes,
)
from .rootdata import AffineRoot, AffineWeylElt, ApartmentPoint, mp_lattice


# ---------------------------------------------------------------------------
# Chain shapes: what a parahoric stabilizes


@dataclass
class ChainShape:
    model: GroupModel
    y: ApartmentPoint
    base: tuple[int, ...]            # pivot exponents of the standard base member
    members: tuple[tuple[int, ...], ...]  # proper intermediate members (0/1 offsets)
    kind: str                        # "plain" | "selfdual" | "paramodular" | "mid"

    @property
    def flag_subsets(self):
        """For each intermediate member, the slots where it agrees with the base."""
        return [tuple(i for i in range(len(self.base)) if m[i] == self.base[i])
                for m in self.members]


def standard_chain(model_label: str, y: ApartmentPoint) -> ChainShape:
    model = group_model(model_label)
    weights = model.rep_weights
    vals = [y.pair(w) for w in weights]
    classes = sorted({v - (v.numerator // v.denominator) for v in vals})
    raw = []
    for c in classes:
        m = tuple(-(-(c - v).numerator // (c - v).denominator) for v in vals)
        raw.append(m)
    # normalize by global t-shifts into {0,1} exponents and order by volume
    members = set()
    for m in raw:
        for shift in (-1, 0, 1):
            mm = tuple(x + shift for x in m)
            if all(0 <= x <= 1 for x in mm):
                members.add(mm)
    ones = tuple(1 for _ in weights)
    zeros = tuple(0 for _ in weights)
    if zeros in members and ones in members:
        members.discard(ones)
    ordered = sorted(members, key=sum)
    base = ordered[0]
    mids = tuple(ordered[1:])
    for m in mids:
        assert all(0 <= x - b <= 1 for x, b in zip(m, base)), "chain not nested"
    kind = "plain"
    if model.label == "sp4":
        floor = min(base[i] + base[j]
                    for i in range(4) for j in range(4) if model.J[i][j])
        vol = sum(base)
        if vol % 2 == 0 and floor == 0:
            kind = "selfdual"
        elif vol % 2 == 0 and floor == 1:
            kind = "paramodular"
        else:
            kind = "mid"
    return ChainShape(model, y, base, mids, kind)


# ---------------------------------------------------------------------------
# Truncated digit-series arithmetic on plain int lists (hot path)


class SeriesCtx:
    """Fixed-window series: index k <-> coefficient of t^(lo+k)."""

    def __init__(self, K: GF, lo: int, length: int):
        self.K = K
        self.lo = lo
        self.LL = length

    def zero(self):
        return [0] * self.LL

    def from_series(self, s: LaurentSeries):
        out = [0] * self.LL
        for i, c in enumerate(s.coeffs):
            k = s.lo + i - self.lo
            if 0 <= k < self.LL and c:
                out[k] = c
        return out

    def mul(self, a, b):
        add, mul = self.K.add, self.K.mul
        lo, LL = self.lo, self.LL
        out = [0] * LL
        for i, x in enumerate(a):
            if x:
                row = mul[x]
                base = i + lo
                for j, yb in enumerate(b):
                    if yb:
                        k = base + j
                        if 0 <= k < LL:
                            out[k] = add[out[k]][row[yb]]
        return out

    def sub(self, a, b):
        add, neg = self.K.add, self.K.neg
        return [add[x][neg[y]] for x, y in zip(a, b)]

    def add2(self, a, b):
        add = self.K.add
        return [add[x][y] for x, y in zip(a, b)]

    def neg2(self, a):
        neg = self.K.neg
        return [neg[x] for x in a]

    def shift_down(self, a, m: int):
        """Multiply by t^(-m): coefficient of t^e moves to t^(e-m)."""
        out = [0] * self.LL
        for k, c in enumerate(a):
            nk = k + m
            if 0 <= nk < self.LL and c:
                out[nk] = c
        return out

    def coeff_at(self, a, e: int) -> int:
        k = e - self.lo
        return a[k] if 0 <= k < self.LL else 0

    def val_at_least(self, a, e: int) -> bool:
        for i, c in enumerate(a):
            if c and (i + self.lo) < e:
                return False
        return True

    def truncate_below(self, a, bound: int):
        k = bound - self.lo
        out = list(a)
        for i in range(max(k, 0), self.LL):
            out[i] = 0
        return out


class DiagonalGamma:
    """Diagonal data of a split-Cartan regular semisimple element."""

    def __init__(self, elem: LieElement):
        if not elem.is_cartan():
            raise UnsupportedCentralizer("counting needs a split-Cartan element")
        if not is_regular_semisimple_cartan(elem):
            raise UnsupportedCentralizer("gamma must be regular semisimple")
        model = elem.model
        if model.label.startswith("sl"):
            diag = list(elem.cartan)
        else:
            a, b = elem.cartan
            diag = [a, b, -b, -a]
        self.model = model
        self.q = elem.q
        self.K = elem.F.K
        self.diag = diag
        self.n = model.n
        self.vals = [None if d.is_zero() else d.valuation() for d in diag]
        self.diff = {}
        self.diff_val = {}
        for i in range(self.n):
            for j in range(self.n):
                if i != j:
                    dd = diag[i] - diag[j]
                    self.diff[(i, j)] = dd
                    self.diff_val[(i, j)] = dd.valuation()
        self.max_v = max(self.diff_val.values())


def _make_ctx(gamma: DiagonalGamma, shape) -> SeriesCtx:
    lo_entries = min(shape) - (gamma.n - 1) * gamma.max_v - 2
    lo = 2 * min(lo_entries, 0) - 1
    hi = max(shape) + gamma.n * gamma.max_v + 6
    return SeriesCtx(gamma.K, lo, hi - lo)


def enumerate_stable_lattices(gamma: DiagonalGamma, shape, gram_floor=None,
                              need_adj=False, with_columns=False):
    """Yield (reduction matrix, gram mod-t data) per gamma-stable lattice of
    the given Hermite pivot shape (and symplectic profile when requested).

    The reduction matrix is gamma's action on L/tL in the Hermite column
    basis; gram data is the reduced Gram matrix (None for type A).
    """
    K = gamma.K
    n = gamma.n
    a = list(shape)
    for v in gamma.vals:
        if v is not None and v < 0:
            return
    ctx = _make_ctx(gamma, shape)
    J = gamma.model.J
    inv_diff = {k: ctx.from_series(s.inverse()) for k, s in gamma.diff.items()}
    diff_l = {k: ctx.from_series(s) for k, s in gamma.diff.items()}
    dbar = [ctx.coeff_at(ctx.from_series(d), 0) for d in gamma.diag]

    cols: dict = {}
    ms: dict = {}
    entry_order = [(i, j) for j in range(n) for i in range(j - 1, -1, -1)]

    def column_done(j):
        if gram_floor is None:
            return True
        for i in range(j + 1):
            g = _pair_columns(gamma, ctx, J, cols, a, i, j)
            if not ctx.val_at_least(g, gram_floor):
                return False
        return True

    def emit():
        mbar = [[0] * n for _ in range(n)]
        for j in range(n):
            mbar[j][j] = dbar[j]
        for (i, j), m in ms.items():
            mbar[i][j] = ctx.coeff_at(m, 0)
        gram = None
        if J is not None:
            gram = [[_pair_columns(gamma, ctx, J, cols, a, i, j)
                     for j in range(n)] for i in range(n)]
        if with_columns:
            return mbar, gram, dict(cols)
        return mbar, gram

    def rec(pos: int):
        if pos == len(entry_order):
            if need_adj and not _adjugate_ok(gamma, ctx, J, cols, a):
                return
            yield emit()
            return
        i, j = entry_order[pos]
        vij = gamma.diff_val[(i, j)]
        S = ctx.zero()
        for k in range(i + 1, j):
            S = ctx.add2(S, ctx.mul(cols[(i, k)], ms[(k, j)]))
        c0 = ctx.truncate_below(ctx.mul(S, inv_diff[(i, j)]), a[i] - vij)
        free_positions = [p - ctx.lo for p in range(a[i] - vij, a[i])
                          if 0 <= p - ctx.lo < ctx.LL]
        is_col_end = (i == 0)
        dl = diff_l[(i, j)]
        for digits in itertools.product(range(gamma.q), repeat=len(free_positions)):
            c = list(c0)
            for k, dig in zip(free_positions, digits):
                c[k] = dig
            cols[(i, j)] = c
            ms[(i, j)] = ctx.shift_down(ctx.sub(ctx.mul(dl, c), S), -a[i])
            if is_col_end and not column_done(j):
                continue
            yield from rec(pos + 1)
        cols.pop((i, j), None)
        ms.pop((i, j), None)

    # columns with no entries above them still need the gram check
    if n >= 1 and not entry_order:
        yield emit()
        return
    # check column 0 (no free entries) before starting
    if gram_floor is not None and not column_done(0):
        return
    yield from rec(0)


def _pair_columns(gamma, ctx, J, cols, a, i, j):
    n = gamma.n
    K = gamma.K
    acc = ctx.zero()
    for r in range(n):
        br = _column_entry(ctx, cols, a, r, i)
        if br is None:
            continue
        for s in range(n):
            if J[r][s] == 0:
                continue
            bs = _column_entry(ctx, cols, a, s, j)
            if bs is None:
                continue
            term = ctx.mul(br, bs)
            if J[r][s] == -1:
                term = ctx.neg2(term)
            acc = ctx.add2(acc, term)
    return acc


def _column_entry(ctx, cols, a, row, col):
    if row == col:
        out = ctx.zero()
        k = a[col] - ctx.lo
        if 0 <= k < ctx.LL:
            out[k] = 1
        return out
    if row < col:
        return cols.get((row, col))
    return None


def _adjugate_ok(gamma, ctx, J, cols, a) -> bool:
    """Mid-vertex condition t L^dual <= L: cofactors of Gram have v >= vol-1."""
    n = gamma.n
    gram = [[_pair_columns(gamma, ctx, J, cols, a, i, j) for j in range(n)]
            for i in range(n)]
    vol = sum(a)
    idx = list(range(n))
    for i in range(n):
        rows = [r for r in idx if r != i]
        for j in range(n):
            colsx = [c for c in idx if c != j]
            cof = _det3(ctx, [[gram[r][c] for c in colsx] for r in rows])
            if not ctx.val_at_least(cof, vol - 1):
                return False
    return True


def _det3(ctx, m):
    def d2(a, b, c, d):
        return ctx.sub(ctx.mul(a, d), ctx.mul(b, c))

    t1 = ctx.mul(m[0][0], d2(m[1][1], m[1][2], m[2][1], m[2][2]))
    t2 = ctx.mul(m[0][1], d2(m[1][0], m[1][2], m[2][0], m[2][2]))
    t3 = ctx.mul(m[0][2], d2(m[1][0], m[1][1], m[2][0], m[2][1]))
    return ctx.add2(ctx.sub(t1, t2), t3)


# ---------------------------------------------------------------------------
# Stable flags in the reduction


def stable_lines(K: GF, A):
    n = len(A)
    out = []
    for lead in range(n):
        for rest in itertools.product(range(K.q), repeat=n - lead - 1):
            v = [0] * lead + [1] + list(rest)
            if _in_span(K, [_apply(K, A, v)], [v]):
                out.append(v)
    return out


def _apply(K: GF, A, v):
    add, mul = K.add, K.mul
    out = []
    for row in A:
        acc = 0
        for j, x in enumerate(v):
            if x and row[j]:
                acc = add[acc][mul[row[j]][x]]
        out.append(acc)
    return out


def _in_span(K: GF, vectors, span) -> bool:
    base = [list(v) for v in span]
    r0 = k_rank(K, base) if base else 0
    r1 = k_rank(K, base + [list(v) for v in vectors])
    return r1 == r0


def count_stable_complete_flags(K: GF, A) -> int:
    """A-stable complete flags in k^n, n <= 3 (desk-scale type A)."""
    n = len(A)
    if n == 1:
        return 1
    if n == 2:
        return len(stable_lines(K, A))
    if n == 3:
        total = 0
        for v in stable_lines(K, A):
            for u in _plane_transversal(K, v):
                Au = _apply(K, A, u)
                if _in_span(K, [Au], [u, v]):
                    total += 1
        return total
    raise UnsupportedGroup("complete flags only implemented for n <= 3")


def _plane_transversal(K: GF, v):
    """Representatives of planes containing the line of v in k^3."""
    n = len(v)
    lead = next(i for i, x in enumerate(v) if x)
    others = [i for i in range(n) if i != lead]
    a, b = others
    out = []
    for c in range(K.q):
        u = [0] * n
        u[a] = 1
        u[b] = c
        out.append(u)
    u = [0] * n
    u[b] = 1
    out.append(u)
    return out


def count_stable_isotropic_flags(K: GF, A, J) -> int:
    """A-stable complete isotropic flags (line in Lagrangian plane) in (k^4, J)."""
    Jk = [[x % K.q for x in row] for row in J]
    total = 0
    for v in stable_lines(K, A):
        basis = _perp_basis(K, Jk, v)
        # transversal of planes containing v inside v-perp
        coords = _coords_in_basis(K, basis, v)
        lead = next(i for i, x in enumerate(coords) if x)
        rest = [basis[i] for i in range(len(basis)) if i != lead]
        b1, b2 = rest
        candidates = []
        for c in range(K.q):
            candidates.append([K.add[x][K.mul[c][y]] for x, y in zip(b1, b2)])
        candidates.append(list(b2))
        for u in candidates:
            Au = _apply(K, A, u)
            if _in_span(K, [Au], [u, v]):
                total += 1
    return total


def _perp_basis(K: GF, Jk, v):
    """Basis of the J-orthocomplement of the span of v (contains v)."""
    n = len(v)
    add, mul = K.add, K.mul
    w = [0] * n
    for j in range(n):
        acc = 0
        for i in range(n):
            if v[i] and Jk[i][j]:
                acc = add[acc][mul[v[i]][Jk[i][j]]]
        w[j] = acc
    lead = next(i for i, x in enumerate(w) if x)
    inv = K.inv[w[lead]]
    neg = K.neg
    basis = []
    for j in range(n):
        if j == lead:
            continue
        e = [0] * n
        e[j] = 1
        e[lead] = neg[mul[w[j]][inv]]
        basis.append(e)
    return basis


def _coords_in_basis(K: GF, basis, v):
    """Solve sum c_i basis_i = v."""
    m = len(basis)
    n = len(v)
    aug = [[basis[i][j] for i in range(m)] + [v[j]] for j in range(n)]
    mul, add, neg, inv = K.mul, K.add, K.neg, K.inv
    sol = [0] * m
    r = 0
    piv_of_col = {}
    for c in range(m):
        piv = next((i for i in range(r, n) if aug[i][c]), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        ip = inv[aug[r][c]]
        aug[r] = [mul[x][ip] for x in aug[r]]
        for i in range(n):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [add[x][neg[mul[f][y]]] for x, y in zip(aug[i], aug[r])]
        piv_of_col[c] = r
        r += 1
    for c, row in piv_of_col.items():
        sol[c] = aug[row][m]
    return sol


def sp_standardize(K: GF, A, gram_bar):
    """Conjugate A so the alternating Gram becomes the fixed standard form."""
    n = 4
    basis = _symplectic_basis(K, gram_bar)
    T = [[basis[j][i] for j in range(n)] for i in range(n)]
    Tinv = k_inverse(K, T)
    Jstd = [[0] * 4 for _ in range(4)]
    Jstd[0][3], Jstd[1][2] = 1, 1
    Jstd[2][1], Jstd[3][0] = K.neg[1], K.neg[1]
    return k_matmul(K, Tinv, k_matmul(K, A, T)), Jstd


def _symplectic_basis(K: GF, J):
    """Hyperbolic basis (v1, v2, w2, w1) with <v1,w1> = <v2,w2> = 1."""
    n = len(J)
    add, mul, neg, inv = K.add, K.mul, K.neg, K.inv

    def pair(u, v):
        return k_pair(K, J, u, v)

    space = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    pairs = []
    for _ in range(n // 2):
        v = space[0]
        w = next(u for u in space[1:] if pair(v, u) != 0)
        c = inv[pair(v, w)]
        w = [mul[c][x] for x in w]
        new_space = []
        for u in space:
            if u is v or u is w:
                continue
            a = pair(v, u)
            b = pair(w, u)
            # u' = u - a*w + b*v is orthogonal to both v and w
            u2 = [add[add[x][neg[mul[a][yw]]]][mul[b][yv]]
                  for x, yw, yv in zip(u, w, v)]
            if any(u2):
                new_space.append(u2)
        pairs.append((v, w))
        space = new_space
    (v1, w1), (v2, w2) = pairs
    return [v1, v2, w2, w1]


def k_inverse(K: GF, m):
    n = len(m)
    aug = [list(r) + [1 if i == j else 0 for j in range(n)]
           for i, r in enumerate(m)]
    mul, add, neg, inv = K.mul, K.add, K.neg, K.inv
    for col in range(n):
        piv = next(i for i in range(col, n) if aug[i][col])
        aug[col], aug[piv] = aug[piv], aug[col]
        ip = inv[aug[col][col]]
        aug[col] = [mul[x][ip] for x in aug[col]]
        for i in range(n):
            if i != col and aug[i][col]:
                f = aug[i][col]
                aug[i] = [add[x][neg[mul[f][y]]] for x, y in zip(aug[i], aug[col])]
    return [r[n:] for r in aug]


_FLAG_MEMO: dict = {}


def flag_factor(K: GF, model: GroupModel, mbar, gram_bar) -> int:
    """Number of stable chain refinements of a base lattice, by class memo."""
    if model.label.startswith("sl"):
        key = ("sl", K.q, reduction_class_key(K, mbar))
        if key not in _FLAG_MEMO:
            _FLAG_MEMO[key] = count_stable_complete_flags(K, mbar)
        return _FLAG_MEMO[key]
    Astd, Jstd = sp_standardize(K, mbar, gram_bar)
    key = ("sp", K.q, reduction_class_key(K, Astd, Jstd))
    if key not in _FLAG_MEMO:
        _FLAG_MEMO[key] = count_stable_isotropic_flags(K, Astd, Jstd)
    return _FLAG_MEMO[key]


# ---------------------------------------------------------------------------
# Count records and the survey driver


@dataclass
class CountRecord:
    q: int
    kind: str
    y_label: str
    budget: int
    total: int
    per_cell: dict
    stabilized: bool
    by_class: dict


def _stratum_label(K: GF, mbar) -> tuple | str:
    if not k_is_nilpotent(K, mbar):
        return "non-nilpotent"
    return jordan_type(K, mbar)


class LatticeSurvey:
    """All window-normalized gamma-stable base lattices for one (gamma, y).

    Aggregates (pivot shape, reduction class) -> multiplicity, remembering
    for each class its stratum label, rational invariants and flag factor.
    """

    def __init__(self, elem: LieElement, y: ApartmentPoint, window_shift=None,
                 radius: int | None = None):
        self.elem = elem
        self.gamma = DiagonalGamma(elem)
        self.model = elem.model
        self.K = elem.F.K
        self.y = y
        self.chain = standard_chain(self.model.label, y)
        self.window_shift = tuple(window_shift) if window_shift else (0,) * self.model.n
        self.kind = self.chain.kind
        if radius is None:
            radius = max(self.gamma.max_v, 1)
        self.radius = radius
        self._run()

    def _shapes(self):
        base = tuple(b + s for b, s in zip(self.chain.base, self.window_shift))
        if self.model.label.startswith("sl"):
            return [base], []
        shapes, boundary = [], []
        for s in range(-self.radius, self.radius + 1):
            sh = (base[0] + s, base[1] - s, base[2], base[3])
            shapes.append(sh)
            if abs(s) == self.radius:
                boundary.append(sh)
        return shapes, boundary

    def _run(self):
        model = self.model
        K = self.K
        gram_floor, need_adj = None, False
        if model.label == "sp4":
            if self.kind == "selfdual":
                gram_floor = 0
            elif self.kind == "paramodular":
                gram_floor = 1
            elif self.kind == "mid":
                gram_floor = 0
                need_adj = True
        shapes, boundary = self._shapes()
        agg: dict = {}
        class_info: dict = {}
        boundary_nonempty = False
        for shape in shapes:
            for mbar, gram in enumerate_stable_lattices(
                    self.gamma, shape, gram_floor=gram_floor, need_adj=need_adj):
                gram_bar = None
                if gram is not None and self.kind in ("selfdual", "paramodular"):
                    ctx = _make_ctx(self.gamma, shape)
                    lvl = gram_floor
                    gram_bar = [[ctx.coeff_at(g, lvl) for g in row] for row in gram]
                ckey, info = self._classify(mbar, gram_bar)
                agg[(shape, ckey)] = agg.get((shape, ckey), 0) + 1
                class_info.setdefault(ckey, info)
                if shape in boundary:
                    boundary_nonempty = True
        self.agg = agg
        self.class_info = class_info
        self.stabilized = (self.model.label.startswith("sl")
                           or not boundary_nonempty)
        self.budget = self.radius

    def _classify(self, mbar, gram_bar):
        """(class key, info dict with stratum label / flags / rational data)."""
        K = self.K
        if self.model.label.startswith("sl"):
            key = ("sl", reduction_class_key(K, mbar))
            info = {
                "stratum": _stratum_label(K, mbar),
                "rational": (),
                "flags": None,
                "witness": mbar,
                "gram": None,
            }
            return key, info
        if self.kind == "mid":
            key = ("spmid", reduction_class_key(K, mbar))
            info = {"stratum": None, "rational": None, "flags": None,
                    "witness": mbar, "gram": None}
            return key, info
        Astd, Jstd = sp_standardize(K, mbar, gram_bar)
        key = ("sp", reduction_class_key(K, Astd, Jstd))
        label = _stratum_label(K, Astd)
        rational = sp_disc_classes(K, Astd, Jstd) if label != "non-nilpotent" else ()
        info = {"stratum": label, "rational": rational, "flags": None,
                "witness": Astd, "gram": Jstd}
        return key, info

    def _flags(self, ckey) -> int:
        info = self.class_info[ckey]
        if info["flags"] is None:
            K = self.K
            memo_key = (ckey, K.q)
            if memo_key in _FLAG_MEMO:
                info["flags"] = _FLAG_MEMO[memo_key]
            else:
                if ckey[0] == "sl":
                    cnt = count_stable_complete_flags(K, info["witness"])
                elif ckey[0] == "sp":
                    cnt = count_stable_isotropic_flags(K, info["witness"],
                                                       info["gram"])
                else:
                    raise UnsupportedGroup("no flag structure at this vertex")
                _FLAG_MEMO[memo_key] = cnt
                info["flags"] = cnt
        return info["flags"]

    # -- totals ---------------------------------------------------------------

    def parahoric_total(self) -> int:
        return sum(self.agg.values())

    def iwahori_total(self) -> int:
        return sum(mult * self._flags(ckey)
                   for (shape, ckey), mult in self.agg.items())

    def strata_totals(self) -> dict:
        out: dict = {}
        for (shape, ckey), mult in self.agg.items():
            label = self.class_info[ckey]["stratum"]
            out[label] = out.get(label, 0) + mult
        return out

    def strata_weighted(self, weight_fn) -> dict:
        """Totals per stratum label with per-class weights (trace twists)."""
        out: dict = {}
        for (shape, ckey), mult in self.agg.items():
            info = self.class_info[ckey]
            label = info["stratum"]
            w = weight_fn(label, info["rational"])
            out[label] = out.get(label, 0) + mult * w
        return out

    def iwahori_strata_totals(self) -> dict:
        """Iwahori points per stratum label of the reduction at this vertex."""
        out: dict = {}
        for (shape, ckey), mult in self.agg.items():
            label = self.class_info[ckey]["stratum"]
            out[label] = out.get(label, 0) + mult * self._flags(ckey)
        return out

    def per_shape(self) -> dict:
        out: dict = {}
        for (shape, ckey), mult in self.agg.items():
            out[shape] = out.get(shape, 0) + mult
        return out


_SURVEY_CACHE: dict = {}


def _gamma_cache_key(elem: LieElement):
    if elem.cartan is None:
        raise UnsupportedCentralizer("counting needs a split-Cartan element")
    parts = []
    for c in elem.cartan:
        parts.append((c.lo, tuple(c.coeffs)))
    return (elem.model.label, elem.q, tuple(parts))


def survey(elem: LieElement, y: ApartmentPoint, window_shift=None) -> LatticeSurvey:
    key = (_gamma_cache_key(elem), y.coords, window_shift)
    if key in _SURVEY_CACHE:
        return _SURVEY_CACHE[key]
    radius = None
    for attempt in range(4):
        s = LatticeSurvey(elem, y, window_shift=window_shift, radius=radius)
        if s.stabilized:
            break
        radius = s.radius * 2
    _SURVEY_CACHE[key] = s
    return s


def count_asf(elem: LieElement, kind: str, y: ApartmentPoint | None = None,
              stratum=None, window_shift=None) -> CountRecord:
    """Fundamental-domain point count of the requested fiber.

    kind: "iwahori" | "parahoric" | "stratum".  For "iwahori" the base
    survey sits at the origin vertex (the Iwahori chain refines it by
    flags).  Strata are labelled by the Jordan type of the reduction.
    """
    model = elem.model
    rs = model.rs
    if kind == "iwahori":
        yy = rs.origin()
        s = survey(elem, yy, window_shift=window_shift)
        total = s.iwahori_total()
        per_cell = {str(k): v for k, v in sorted(s.per_shape().items())}
        return CountRecord(elem.q, kind, "o", s.budget, total, per_cell,
                           s.stabilized, {str(k): v for k, v in
                                          sorted(s.iwahori_strata_totals().items(),
                                                 key=lambda t: str(t[0]))})
    if y is None:
        raise UnsupportedGroup("parahoric/stratum counts need a point y")
    s = survey(elem, y, window_shift=window_shift)
    strata = s.strata_totals()
    by_class = {str(k): v for k, v in sorted(strata.items(), key=lambda t: str(t[0]))}
    per_cell = {str(k): v for k, v in sorted(s.per_shape().items())}
    if kind == "parahoric":
        return CountRecord(elem.q, kind, str(y.coords), s.budget,
                           s.parahoric_total(), per_cell, s.stabilized, by_class)
    if kind == "stratum":
        total = strata.get(stratum, 0)
        return CountRecord(elem.q, kind, str(y.coords), s.budget, total,
                           per_cell, s.stabilized, by_class)
    raise UnsupportedGroup(f"unknown fiber kind {kind}")


def lambda_window_shift(model_label: str, lam) -> tuple:
    """Pivot-shape shift of the translation by the cocharacter lam."""
    model = group_model(model_label)
    return tuple(model.cartan_matrix_of_coweight(lam))


def bezrukavnikov_dim(elem: LieElement) -> Fraction:
    """Dimension of the Iwahori fiber for split centralizers: v(D(gamma))/2."""
    return Fraction(discriminant_valuation(elem), 2)


# ---------------------------------------------------------------------------
# Growth fitting


@dataclass
class FitResult:
    d: Fraction
    C: Fraction
    residuals: dict
    c_bound: float


def fit_growth(records: list[CountRecord], snap_tol: float = 0.2) -> FitResult:
    """Fit counts ~ C q^d: d snapped to half-integers from log slopes, C
    extrapolated against a q^(-1/2) error model and snapped to a small
    rational; residuals must decay like q^(-1/2)."""
    if len(records) < 3:
        raise PoorFit("need at least 3 values of q")
    if not all(r.stabilized for r in records):
        raise PoorFit("unstabilized records")
    pts = sorted((r.q, r.total) for r in records)
    if any(n == 0 for _, n in pts):
        if all(n == 0 for _, n in pts):
            return FitResult(Fraction(0), Fraction(0), {q: 0.0 for q, _ in pts}, 0.0)
        raise PoorFit("zero counts mixed with nonzero counts")
    slopes = []
    for (q1, n1), (q2, n2) in zip(pts, pts[1:]):
        slopes.append(math.log(n2 / n1) / math.log(q2 / q1))
    slopes.sort()
    mid = slopes[len(slopes) // 2]
    d = Fraction(round(2 * mid), 2)
    if abs(float(d) - mid) > 0.35:
        raise PoorFit(f"slope {mid:.3f} too far from a half-integer")
    # extrapolate C from the two largest q under value = C + c q^(-1/2)
    (qa, na), (qb, nb) = pts[-2], pts[-1]
    va = na / qa ** float(d)
    vb = nb / qb ** float(d)
    sa, sb = qa ** -0.5, qb ** -0.5
    c_est = (va - vb) / (sa - sb)
    C_raw = vb - c_est * sb
    C = Fraction(C_raw).limit_denominator(8)
    if abs(float(C) - C_raw) > snap_tol:
        raise PoorFit(f"leading coefficient {C_raw:.3f} does not snap")
    if C <= 0:
        raise PoorFit("leading coefficient must be positive")
    residuals = {}
    c_bound = 0.0
    for q, n in pts:
        r = abs(n / q ** float(d) - float(C)) * q ** 0.5
        residuals[q] = r
        c_bound = max(c_bound, r)
    return FitResult(d, C, residuals, c_bound)


# ---------------------------------------------------------------------------
# Brute-force per-cell oracle


def enumerate_cells(model_label: str, budget: int):
    """Iwahori-Bruhat cells up to the length budget: AffineWeylElt list."""
    from .rootdata import affine_weyl_ball
    model = group_model(model_label)
    return affine_weyl_ball(model.rs, budget)


def affine_simple_data(model: GroupModel):
    """(root, offset) for the affine simple reflections s_0, ..., s_rank."""
    rs = model.rs
    out = [(tuple(-x for x in rs.highest_root), 1)]
    for a in rs.simple_roots:
        out.append((a, 0))
    return out


def _exp_root(modelF, root, offset, coeff_series):
    model = modelF.model
    n = model.n
    K = modelF.K
    X = modelF.int_matrix(model.root_vectors_frac(root))
    ident = LaurentMatrix.identity(K, n)
    scaled = LaurentMatrix(
        K, [[X.rows[i][j] * coeff_series for j in range(n)] for i in range(n)])
    return ident + scaled.shift(offset)


def affine_simple_lift(modelF, idx: int) -> LaurentMatrix:
    """Monomial lift of the affine simple reflection with index idx."""
    model = modelF.model
    root, off = affine_simple_data(model)[idx]
    K = modelF.K
    one = LaurentSeries.const(K, 1)
    neg_one = LaurentSeries.const(K, K.neg[1])
    xp = _exp_root(modelF, root, off, one)
    xm = _exp_root(modelF, tuple(-x for x in root), -off, neg_one)
    return xp * xm * xp


def cell_points(model_label: str, q: int, w: AffineWeylElt):
    """Bott-Samelson parametrization of the cell of w: yields matrices."""
    model = group_model(model_label)
    modelF = model.at(q)
    K = modelF.K
    word = w.reduced_word()
    # the reduced word multiplies as w = s_{i1} * ... * s_{ik}
    gens = AffineWeylElt.simple_reflections(model.rs)
    acc = AffineWeylElt.identity(model.rs)
    for i in word:
        acc = acc * gens[i]
    if acc != w:
        word = tuple(reversed(word))
    data = affine_simple_data(model)
    lifts = [affine_simple_lift(modelF, i) for i in range(len(data))]
    for coords in itertools.product(range(q), repeat=len(word)):
        g = LaurentMatrix.identity(K, model.n)
        for i, c in zip(word, coords):
            root, off = data[i]
            if c:
                x = _exp_root(modelF, root, off, LaurentSeries.const(K, c))
                g = g * x
            g = g * lifts[i]
        yield coords, g


def iwasawa_mu(model_label: str, g: LaurentMatrix) -> tuple:
    """Iwasawa cocharacter of g from bottom-row minor valuations."""
    model = group_model(model_label)
    n = model.n
    mus = []
    prev = 0
    for j in range(1, n + 1):
        rows = list(range(n - j, n))
        best = None
        for cols in itertools.combinations(range(n), j):
            sub = LaurentMatrix(g.K, [[g.rows[r][c] for c in cols] for r in rows])
            det = sub.det()
            if det.is_zero():
                continue
            v = det.valuation()
            best = v if best is None else min(best, v)
        assert best is not None, "rank-deficient group element"
        mus.append(best - prev)
        prev = best
    # mus[0] = mu_n, mus[1] = mu_{n-1}, ...
    return tuple(reversed(mus))


def point_base_shape(model_label: str, g: LaurentMatrix) -> tuple:
    """Hermite pivot exponents of g * O^n, derived from the Iwasawa data."""
    mu = iwasawa_mu(model_label, g)
    return mu


def cell_of_point(model_label: str, g: LaurentMatrix) -> AffineWeylElt:
    """Iwahori double coset of g via valuation-pivot elimination."""
    model = group_model(model_label)
    n = model.n
    work = [row[:] for row in g.rows]
    perm = [None] * n       # column -> pivot row
    exps = [None] * n
    done_rows, done_cols = set(), set()
    for _ in range(n):
        best = None
        for i in range(n):
            if i in done_rows:
                continue
            for j in range(n):
                if j in done_cols:
                    continue
                e = work[i][j]
                if e.is_zero():
                    continue
                v = e.valuation()
                # min valuation; ties: bottom-most, then left-most
                key = (v, -i, j)
                if best is None or key < best[0]:
                    best = (key, i, j)
        assert best is not None, "singular matrix"
        _, pi, pj = best
        piv = work[pi][pj]
        for i in range(n):
            if i != pi and not work[i][pj].is_zero():
                f = work[i][pj] / piv
                work[i] = [a - f * b for a, b in zip(work[i], work[pi])]
        for j in range(n):
            if j != pj and not work[pi][j].is_zero():
                f = work[pi][j] / piv
                for i in range(n):
                    work[i][j] = work[i][j] - f * work[i][pj]
        perm[pj] = pi
        exps[pj] = piv.valuation()
        done_rows.add(pi)
        done_cols.add(pj)
    # monomial matrix with t-exponent exps[j] in column j, row perm[j];
    # the torus element t^m acts on the apartment by translation by -m,
    # so the abstract translation part is the negated exponent vector
    wmat = tuple(tuple(1 if i == perm[j] else 0 for j in range(n))
                 for i in range(n))
    mu = [0] * n
    for j in range(n):
        mu[perm[j]] = -exps[j]
    rs = model.rs
    if model.label == "sp4":
        # ambient coordinates are rank 2: translation part (mu_1, mu_2)
        tr = (mu[0], mu[1])
        # finite part: image in the C2 Weyl group via its action on weights
        wfin = _sp4_weyl_from_perm(model, wmat)
        return AffineWeylElt(rs, tr, wfin)
    return AffineWeylElt(rs, tuple(mu), wmat)


def _sp4_weyl_from_perm(model: GroupModel, wmat):
    """The C2 Weyl matrix whose monomial lift has the same support pattern."""
    rs = model.rs
    for w in rs.weyl:
        lift = model.weyl_lift_frac(w)
        if all((lift[i][j] != 0) == (wmat[i][j] != 0)
               for i in range(4) for j in range(4)):
            return w
    raise AssertionError("monomial pattern is not symplectic")


def brute_count_iwahori(elem: LieElement, budget: int,
                        window_shift=None) -> CountRecord:
    """Per-cell brute force count over Bott-Samelson coordinates (small q)."""
    model = elem.model
    q = elem.q
    modelF = model.at(q)
    rs = model.rs
    x = rs.base_alcove_point()
    lie_i = mp_realize(model.label, q, mp_lattice(x, 0))
    chain = standard_chain(model.label, rs.origin())
    base = tuple(b + s for b, s in zip(
        chain.base, window_shift or (0,) * model.n))
    per_cell: dict = {}
    total = 0
    boundary_nonempty = False
    gmat = elem.mat
    for w in enumerate_cells(model.label, budget):
        cnt = 0
        for coords, g in cell_points(model.label, q, w):
            if iwasawa_mu(model.label, g) != base:
                continue
            gi = g.inverse()
            conj = gi * gmat * g
            if lie_i.contains(modelF.coordinates(conj)):
                cnt += 1
        if cnt:
            per_cell[str((w.mu, w.reduced_word()))] = cnt
            total += cnt
            if w.length() == budget:
                boundary_nonempty = True
    return CountRecord(q, "iwahori-brute", "o", budget, total, per_cell,
                       not boundary_nonempty, {})
