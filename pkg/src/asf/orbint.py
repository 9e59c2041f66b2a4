"""Regular semisimple orbital integrals in the self-dual normalization.

Two independent routes compute the same exact rational value:

* the point-count route: a fundamental-domain fiber count times the
  normalization factor |G_{y,0}|/|T_0| q^{(-v(D)-dim G_{y,0}+dim T_0)/2};
* the direct route: the orbit meets the support in finitely many
  parahoric-orbit pieces, one per fiber point; each piece's measure is an
  index of congruence subgroups times the self-dual measure of a tangent
  lattice.

Values are exact in Q[sqrt q]; the routes agreeing on acceptance inputs is
the strongest oracle of this module.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import NotStabilized, TruncationUnstable, UnsupportedCentralizer, \
    UnsupportedGroup
from .exactnum import (
    LaurentMatrix,
    LaurentSeries,
    OLattice,
    Qsqrt,
    lattice_index,
    dual_lattice,
)
from .flagcount import (
    DiagonalGamma,
    _make_ctx,
    count_asf,
    enumerate_stable_lattices,
    stable_lines,
    standard_chain,
    survey,
)
from .liemodel import LieElement, discriminant_valuation, group_model, mp_realize
from .rootdata import ApartmentPoint, mp_lattice, reductive_quotient


@dataclass
class TestFunction:
    """Indicator-type test function in the supported family.

    kind "mp": 1 on t^shift * g_{y,>=0}.
    kind "orbit": q^(scale_half_exponent/2) on the t^shift-scaled preimage of
    a nilpotent orbit of the reduction at y; geometric orbit when
    rational_key is None, the rational class otherwise; eta_weights maps
    rational keys to +-1 trace weights.
    """

    kind: str
    y: ApartmentPoint
    shift: int = 0
    orbit_label: tuple | None = None
    rational_key: tuple | None = None
    scale_half_exponent: int = 0
    eta_weights: dict | None = None
    name: str = ""

    def label(self) -> str:
        if self.name:
            return self.name
        if self.kind == "mp":
            return f"1[t^{self.shift}g({tuple(map(str, self.y.coords))},>=0)]"
        return f"orbit{self.orbit_label}@t^{self.shift}"


def mp_indicator(y: ApartmentPoint, shift: int = 0, name: str = "") -> TestFunction:
    return TestFunction("mp", y, shift=shift, name=name)


def iwahori_indicator(model_label: str, shift: int = 0) -> TestFunction:
    rs = group_model(model_label).rs
    tag = "1[Lie I]" if shift == 0 else f"1[t^{shift} Lie I]"
    return TestFunction("mp", rs.base_alcove_point(), shift=shift, name=tag)


@dataclass
class IntegralValue:
    q: int
    value: Qsqrt
    route: str

    def as_fraction(self) -> Fraction:
        return self.value.as_fraction()


def gkm_factor(model_label: str, q: int, y: ApartmentPoint, vD: int) -> Fraction:
    """|G_{y,0}|/|T_0| * q^((-vD - dim G_{y,0} + dim T_0)/2), exact."""
    model = group_model(model_label)
    quo = reductive_quotient(y)
    order = Fraction(quo.order_polynomial()(q))
    t0 = Fraction(q - 1) ** model.rs.rank
    e = -vD - quo.dimension() + model.rs.rank
    assert e % 2 == 0, "GKM exponent must be integral"
    return order / t0 * Fraction(q) ** (e // 2)


def orbit_dimension(model_label: str) -> int:
    """dim Ad(G)gamma for regular gamma: the number of roots."""
    return len(group_model(model_label).rs.roots)


def orbital_integral(elem: LieElement, f: TestFunction) -> IntegralValue:
    """I_gamma(f) (= the stable integral: split centralizer) via point counts."""
    if not elem.is_cartan():
        raise UnsupportedCentralizer("orbital integrals need split-Cartan input")
    q = elem.q
    model = elem.model
    shifted = elem.scaled_by_t(-f.shift)
    vDs = discriminant_valuation(shifted)
    half_shift = Qsqrt.q_half_power(
        q, -f.shift * orbit_dimension(model.label))
    if f.kind == "mp":
        rec = count_asf(shifted, _kind_for_y(model, f.y), y=f.y)
        if not rec.stabilized:
            raise NotStabilized("fiber count did not stabilize")
        factor = gkm_factor(model.label, q, f.y, vDs)
        val = half_shift * Qsqrt.rational(q, factor * rec.total)
        return IntegralValue(q, val, "gkm-count")
    if f.kind == "orbit":
        s = survey(shifted, f.y)
        if not s.stabilized:
            raise NotStabilized("fiber count did not stabilize")
        total = _orbit_support_count(s, f)
        factor = gkm_factor(model.label, q, f.y, vDs)
        val = (half_shift * Qsqrt.q_half_power(q, f.scale_half_exponent)
               * Qsqrt.rational(q, factor * total))
        return IntegralValue(q, val, "gkm-count")
    raise UnsupportedGroup(f"unsupported test function kind {f.kind}")


def _kind_for_y(model, y) -> str:
    return "iwahori" if y == model.rs.base_alcove_point() else "parahoric"


def _orbit_support_count(s, f: TestFunction):
    total = 0
    for (shape, ckey), mult in s.agg.items():
        info = s.class_info[ckey]
        if info["stratum"] != f.orbit_label:
            continue
        if f.rational_key is not None and info["rational"] != f.rational_key:
            continue
        w = 1
        if f.eta_weights is not None:
            w = f.eta_weights.get(info["rational"])
            if w is None:
                raise UnsupportedGroup(f"no eta weight for {info['rational']}")
        total += mult * w
    return total


def convert_normalization(value: Qsqrt, vD: int, model_label: str, q: int,
                          y: ApartmentPoint):
    """(DK value, GKM value) from the self-dual value."""
    dk = value * Qsqrt.q_half_power(q, vD)
    quo = reductive_quotient(y)
    model = group_model(model_label)
    order = Fraction(quo.order_polynomial()(q))
    t0 = Fraction(q - 1) ** model.rs.rank
    gkm = dk * Qsqrt.rational(q, t0 / order) * Qsqrt.q_half_power(
        q, quo.dimension() - model.rs.rank)
    return dk, gkm


def dilate_check(elem: LieElement, f: TestFunction):
    """(I_{t^{-1}gamma}(f_{t^{-1}}), q^{dim/2} I_gamma(f)): the dilation
    identity, both sides computed through their own normalizations."""
    q = elem.q
    fd = TestFunction(f.kind, f.y, shift=f.shift - 1,
                      orbit_label=f.orbit_label, rational_key=f.rational_key,
                      scale_half_exponent=f.scale_half_exponent,
                      eta_weights=f.eta_weights)
    left = orbital_integral(elem.scaled_by_t(-1), fd)
    right = orbital_integral(elem, f)
    half = Qsqrt.q_half_power(q, orbit_dimension(elem.model.label))
    return left.value, half * right.value


# ---------------------------------------------------------------------------
# Direct route


def _hermite_matrix(elem: LieElement, shape, cols) -> LaurentMatrix:
    F = elem.F
    K = F.K
    n = elem.model.n
    ctx = _make_ctx(DiagonalGamma(elem), shape)
    hi = ctx.lo + ctx.LL + 12
    rows = [[None] * n for _ in range(n)]
    for j in range(n):
        for i in range(n):
            if i == j:
                rows[i][j] = LaurentSeries.t_power(K, shape[j], hi=hi)
            elif i < j and (i, j) in cols:
                digits = cols[(i, j)]
                d = {ctx.lo + k: c for k, c in enumerate(digits) if c}
                rows[i][j] = (LaurentSeries.from_dict(K, d, hi=hi)
                              if d else LaurentSeries(K, hi, []))
            else:
                rows[i][j] = LaurentSeries(K, hi, [])
    return LaurentMatrix(K, rows)


def stable_points(elem: LieElement, y: ApartmentPoint, flags: bool):
    """Explicit group elements g, one per fundamental-domain fiber point."""
    model = elem.model
    gamma = DiagonalGamma(elem)
    chain = standard_chain(model.label, model.rs.origin() if flags else y)
    gram_floor, need_adj = None, False
    if model.label == "sp4":
        if chain.kind == "selfdual":
            gram_floor = 0
        elif chain.kind == "paramodular":
            gram_floor = 1
        else:
            gram_floor, need_adj = 0, True
    base = chain.base
    if model.label.startswith("sl"):
        shapes = [base]
    else:
        r = 2 * gamma.max_v + 2
        shapes = [(base[0] + s, base[1] - s, base[2], base[3])
                  for s in range(-r, r + 1)]
    for shape in shapes:
        for mbar, gram, cols in enumerate_stable_lattices(
                gamma, shape, gram_floor=gram_floor, need_adj=need_adj,
                with_columns=True):
            H = _hermite_matrix(elem, shape, cols)
            if not flags:
                yield H
                continue
            gram_bar = None
            if gram is not None:
                ctx = _make_ctx(gamma, shape)
                gram_bar = [[ctx.coeff_at(g, 0) for g in row] for row in gram]
            for u in _flag_lifts(elem, mbar, gram_bar):
                yield H * u


def _flag_lifts(elem: LieElement, mbar, gram_bar):
    model = elem.model
    K = elem.F.K
    n = model.n
    if model.label.startswith("sl"):
        bases = _complete_flag_bases(K, mbar)
    else:
        bases = _isotropic_flag_bases(K, mbar, gram_bar)
    for basis in bases:
        u = [[LaurentSeries.const(K, basis[j][i]) for j in range(n)]
             for i in range(n)]
        yield LaurentMatrix(K, u)


def _complete_flag_bases(K, A):
    """Bases (b_1..b_n) whose suffix spans are the stable flag members."""
    n = len(A)
    from .flagcount import _apply, _in_span, _plane_transversal
    if n == 2:
        for v in stable_lines(K, A):
            w = _complete_to_basis(K, [v])
            yield [v, w[0]]
    elif n == 3:
        for v in stable_lines(K, A):
            for u in _plane_transversal(K, v):
                if _in_span(K, [_apply(K, A, u)], [u, v]):
                    w = _complete_to_basis(K, [v, u])
                    yield [v, u, w[0]]
    else:
        raise UnsupportedGroup("flag lifts only for n <= 3 in type A")


def _isotropic_flag_bases(K, A, Jbar):
    from .flagcount import _apply, _coords_in_basis, _in_span, _perp_basis
    Jk = [[x % K.q for x in row] for row in Jbar]
    for v in stable_lines(K, A):
        perp = _perp_basis(K, Jk, v)
        coords = _coords_in_basis(K, perp, v)
        lead = next(i for i, x in enumerate(coords) if x)
        rest = [perp[i] for i in range(len(perp)) if i != lead]
        b1, b2 = rest
        candidates = [[K.add[x][K.mul[c][y]] for x, y in zip(b1, b2)]
                      for c in range(K.q)]
        candidates.append(list(b2))
        for u in candidates:
            if not _in_span(K, [_apply(K, A, u)], [u, v]):
                continue
            # chain members: V1 = <v> < V2 = <v,u> < V3 = v-perp
            extra = next(p for p in perp if not _in_span(K, [p], [v, u]))
            w0 = next(e for e in _unit_vectors(len(v))
                      if not _in_span(K, [e], [v, u, extra]))
            yield [v, u, extra, w0]


def _unit_vectors(n):
    for i in range(n):
        e = [0] * n
        e[i] = 1
        yield e


def _complete_to_basis(K, vectors):
    from .flagcount import _in_span
    n = len(vectors[0])
    out, cur = [], list(vectors)
    for e in _unit_vectors(n):
        if not _in_span(K, [e], cur):
            out.append(e)
            cur.append(e)
    return out


def parahoric_quotient_order(model_label: str, q: int, y: ApartmentPoint,
                             r: int) -> Fraction:
    """|G_{y,>=0} / G_{y,>=r}| for integer r >= 1."""
    quo = reductive_quotient(y)
    order = Fraction(quo.order_polynomial()(q))
    model = group_model(model_label)
    rs = model.rs
    levels = set()
    for a in rs.roots:
        v = y.pair(a)
        s = v - (v.numerator // v.denominator)
        if s == 0:
            s = Fraction(1)
        while s < r:
            levels.add(s)
            s += 1
    for s in range(1, r):
        levels.add(Fraction(s))
    dim_sum = sum(mp_lattice(y, s).graded_dim() for s in levels)
    return order * Fraction(q) ** dim_sum


def olattice_from_generators(K, vectors, hi_pad: int = 8) -> OLattice:
    """Column-span O-lattice from a redundant generating set."""
    vecs = [list(v) for v in vectors]
    d = len(vecs[0])
    cols = [v for v in vecs]
    basis = []
    # Gaussian column reduction with minimal-valuation pivoting
    remaining = cols
    used_rows = set()
    for _ in range(d):
        piv = None
        pv = None
        for ci, col in enumerate(remaining):
            for ri in range(d):
                if ri in used_rows:
                    continue
                e = col[ri]
                if e.is_zero():
                    continue
                v = e.valuation()
                if pv is None or v < pv:
                    piv, pv = (ci, ri), v
        if piv is None:
            break
        ci, ri = piv
        pivot_col = remaining[ci]
        new_remaining = []
        for cj, col in enumerate(remaining):
            if cj == ci:
                continue
            if col[ri].is_zero():
                new_remaining.append(col)
                continue
            fct = col[ri] / pivot_col[ri]
            new_remaining.append([a - fct * b for a, b in zip(col, pivot_col)])
        basis.append(pivot_col)
        used_rows.add(ri)
        remaining = new_remaining
    assert len(basis) == d, "generators do not span"
    return OLattice(LaurentMatrix(K, [[basis[j][i] for j in range(d)]
                                      for i in range(d)]))


class AdjointQuotient:
    """The space g/Z(gamma) in root coordinates, with its symplectic pairing
    B(., [., gamma]) and the self-dual measure."""

    def __init__(self, elem: LieElement):
        model = elem.model
        F = elem.F
        self.model = model
        self.F = F
        self.K = F.K
        self.roots = list(model.rs.roots)
        self.dim = len(self.roots)
        # pairing matrix P[b1][b2] = B(e_b1, [e_b2, gamma])
        gm = elem.mat
        mats = [F.int_matrix(model.root_vectors_frac(a)) for a in self.roots]
        self.P = []
        for X in mats:
            row = []
            for Y in mats:
                row.append((X * (Y * gm - gm * Y)).trace())
            self.P.append(row)
        self.root_index = {a: i for i, a in enumerate(self.roots)}

    def project(self, coords) -> list[LaurentSeries]:
        """Root components of a g-coordinate vector (drop the Cartan part)."""
        return list(coords[: self.dim])

    def pairing(self, v, w) -> LaurentSeries:
        acc = None
        for i, a in enumerate(v):
            if a.is_zero():
                continue
            for j, b in enumerate(w):
                if b.is_zero():
                    continue
                term = a * b * self.P[i][j]
                acc = term if acc is None else acc + term
        if acc is None:
            hi = min(x.hi for x in v) if v else 0
            return LaurentSeries(self.K, hi, [])
        return acc

    def measure(self, L: OLattice) -> Qsqrt:
        Ld = dual_lattice(L, self.pairing)
        idx = lattice_index(Ld, L)
        from .exactnum import power_of_q
        e = power_of_q(idx, self.K.q)
        return Qsqrt.q_half_power(self.K.q, -e)


def piece_measure(elem: LieElement, g: LaurentMatrix, y: ApartmentPoint,
                  quot: AdjointQuotient, r: int) -> Qsqrt:
    """Measure of the K-orbit piece through the point g (K the parahoric or
    Iwahori at y), via [K : Z_K(x) K_r] * m_x(im g_{y,>=r})."""
    model = elem.model
    q = elem.q
    F = elem.F
    iwahori = (y == model.rs.base_alcove_point())
    idx_order = parahoric_quotient_order(model.label, q, y, r)
    z_im = torus_stabilizer_image_order(elem, g, y, r, iwahori)
    # tangent lattice: image of Ad(g) g_{y,>=r} in g/Z(gamma)
    lat = mp_realize(model.label, q, mp_lattice(y, r))
    gi = g.inverse()
    gens = []
    for j in range(model.dim):
        col = [lat.basis.rows[i][j] for i in range(model.dim)]
        X = F.from_coordinates(col)
        Y = g * X * gi
        gens.append(quot.project(F.coordinates(Y)))
    L = olattice_from_generators(F.K, gens)
    m = quot.measure(L)
    return Qsqrt.rational(q, idx_order / z_im) * m


def orbital_integral_direct(elem: LieElement, f: TestFunction) -> IntegralValue:
    """The direct-route value: sum of orbit-piece measures.

    Pieces of the orbit inside the support are parahoric orbits; these
    biject with T(O)-orbits of fundamental-domain fiber points, so each
    point contributes its piece measure divided by its T(O)-orbit size.
    Supported: kind "mp" at the origin vertex or the Iwahori point.
    """
    model = elem.model
    q = elem.q
    shifted = elem.scaled_by_t(-f.shift)
    yy = f.y
    iwahori = (yy == model.rs.base_alcove_point())
    quot = AdjointQuotient(elem)
    total = Qsqrt.rational(q, 0)
    npts = 0
    for g in stable_points(shifted, yy, flags=iwahori):
        npts += 1
        prev = None
        for r in (1, 2, 3):
            cur = piece_measure(elem, g, yy, quot, r)
            if prev is not None and cur == prev:
                break
            prev = cur
        else:
            raise TruncationUnstable("piece measure did not stabilize in r")
        orb = torus_orbit_size(elem, g, yy, iwahori)
        total = total + cur * Qsqrt.rational(q, Fraction(1, orb))
    return IntegralValue(q, total, f"direct({npts} points)")


def torus_orbit_size(elem: LieElement, g: LaurentMatrix, y: ApartmentPoint,
                     iwahori: bool) -> int:
    """[T(O) : S] for S the stabilizer of the point's chain in T(O)."""
    model = elem.model
    q = elem.q
    rank = model.rs.rank
    spread = 0
    for row in g.rows:
        for e in row:
            if not e.is_zero():
                spread = max(spread, abs(e.valuation()))
    prev = None
    for s in range(2 * spread + 2, 2 * spread + 5):
        n_stab = _count_torus_solutions(elem, g, y, s, iwahori,
                                        congruence_r=None)
        t_order = (q - 1) ** rank * q ** (rank * (s - 1))
        assert t_order % n_stab == 0
        cur = t_order // n_stab
        if prev is not None and cur == prev:
            return cur
        prev = cur
    raise TruncationUnstable("torus orbit size did not stabilize")


# ---------------------------------------------------------------------------
# Torus chain-stabilizer counting


def torus_stabilizer_image_order(elem: LieElement, g: LaurentMatrix,
                                 y: ApartmentPoint, r: int,
                                 iwahori: bool) -> int:
    """|image of Z_K(x) in K/K_r| for x = Ad(g^{-1}) gamma: diagonal torus
    elements stabilizing the point's chain, counted modulo the level-r
    congruence ones."""
    spread = 0
    for row in g.rows:
        for e in row:
            if not e.is_zero():
                spread = max(spread, abs(e.valuation()))
    m = r + 2 * spread + 1
    n_stab = _count_torus_solutions(elem, g, y, m, iwahori, congruence_r=None)
    n_cong = _count_torus_solutions(elem, g, y, m, iwahori, congruence_r=r)
    assert n_stab % n_cong == 0
    return n_stab // n_cong


TORUS_COUNT_REFERENCE_MODE = False


def _count_torus_solutions(elem: LieElement, g: LaurentMatrix,
                           y: ApartmentPoint, m: int, iwahori: bool,
                           congruence_r) -> int:
    """Count torus elements tau mod t^m with W := g^{-1} tau g in the chain
    stabilizer (or in the level-congruence_r subgroup)."""
    model = elem.model
    K = elem.F.K
    q = K.q
    n = model.n
    gi = g.inverse()
    # A[i] = gi * E_ii * g as Laurent matrices: W = sum_i u_i A[i]
    A = []
    for i in range(n):
        Arows = []
        for a in range(n):
            row = []
            for b in range(n):
                row.append(gi.rows[a][i] * g.rows[i][b])
            Arows.append(row)
        A.append(Arows)
    # entry requirement levels
    lie0 = mp_realize(model.label, q, mp_lattice(y, 0)) if False else None
    req = [[0] * n for _ in range(n)]
    if iwahori:
        for a in range(n):
            for b in range(n):
                req[a][b] = 1 if a > b else 0
    if congruence_r is not None:
        base_shape = standard_chain(model.label, y).base
        for a in range(n):
            for b in range(n):
                # level-r congruence: W - 1 in t^r * stabilizer levels
                extra = req[a][b] if iwahori else 0
                req[a][b] = congruence_r + extra

    rank_free = model.rs.rank

    def diag_entries(freevals):
        """Full diagonal series (as digit lists up to m) from free data."""
        if model.label.startswith("sl"):
            units = [list(fv) for fv in freevals]
            last = _series_inverse_product(K, units, m)
            return units + [last]
        u1, u2 = (list(fv) for fv in freevals)
        return [u1, u2, _series_inverse(K, u2, m), _series_inverse(K, u1, m)]

    counter = (_count_digit_tree_full if TORUS_COUNT_REFERENCE_MODE
               else _count_digit_tree)
    count = 0
    lead_choices = itertools.product(range(1, q), repeat=rank_free)
    for leads in lead_choices:
        count += counter(elem, A, req, leads, m, diag_entries, congruence_r)
    return count


def _series_inverse(K, u, m):
    out = [0] * m
    inv0 = K.inv[u[0]]
    out[0] = inv0
    for k in range(1, m):
        s = 0
        for j in range(1, k + 1):
            if j < len(u) and u[j] and out[k - j]:
                s = K.add[s][K.mul[u[j]][out[k - j]]]
        out[k] = K.mul[inv0][K.neg[s]]
    return out


def _series_inverse_product(K, units, m):
    prod = [0] * m
    prod[0] = 1
    for u in units:
        new = [0] * m
        for i, x in enumerate(prod):
            if x:
                for j in range(m - i):
                    if j < len(u) and u[j]:
                        new[i + j] = K.add[new[i + j]][K.mul[x][u[j]]]
        prod = new
    return _series_inverse(K, prod, m)


def _count_digit_tree(elem, A, req, leads, m, diag_entries, congruence_r) -> int:
    """Count digit completions of a level-0 torus residue satisfying all
    conditions, walking levels 1..m-1.  At each level the valid digit
    vectors form an affine subspace over k (probed numerically); the count
    multiplies level dimensions along one representative branch.  The
    torsor structure of the solution tower is validated against the full
    enumeration in the test suite.
    """
    model = elem.model
    K = elem.F.K
    q = K.q
    n = model.n
    rank_free = model.rs.rank

    free = [[lv] + [0] * (m - 1) for lv in leads]

    def w_entry_coeff(a, b, level, diags):
        acc = 0
        for i in range(n):
            s = A[i][a][b]
            for k, cv in enumerate(s.coeffs):
                if not cv:
                    continue
                e = s.lo + k
                l = level - e
                if 0 <= l < m and diags[i][l]:
                    acc = K.add[acc][K.mul[cv][diags[i][l]]]
        return acc

    cond_by_level: dict = {}
    for a in range(n):
        for b in range(n):
            sp = _spread_bound(A, a, b)
            for e in range(-sp, req[a][b]):
                cond_by_level.setdefault(e + sp, []).append((a, b, e))

    def residuals(level):
        diags = diag_entries(free)
        out = []
        for (a, b, e) in cond_by_level.get(level, ()):
            c = w_entry_coeff(a, b, e, diags)
            if congruence_r is not None and a == b and e == 0:
                c = K.sub(c, 1)
            out.append(c)
        return out

    if any(c != 0 for c in residuals(0)):
        return 0

    total_dim = 0
    for level in range(1, m):
        conds = cond_by_level.get(level, ())
        if not conds:
            total_dim += rank_free
            continue
        base = residuals(level)
        cols = []
        for i in range(rank_free):
            free[i][level] = 1
            probe = residuals(level)
            free[i][level] = 0
            cols.append([K.sub(x, y) for x, y in zip(probe, base)])
        # solve sum_i cols[i] * eps_i = -base
        mat = [[cols[i][row] for i in range(rank_free)]
               for row in range(len(base))]
        rhs = [K.neg[x] for x in base]
        sol = _solve_affine(K, mat, rhs)
        if sol is None:
            return 0
        eps, dim = sol
        for i in range(rank_free):
            free[i][level] = eps[i]
        total_dim += dim
    # final sanity at the leaf representative
    for level in range(m):
        if any(c != 0 for c in residuals(level)):
            return 0
    return q ** total_dim


def _solve_affine(K, mat, rhs):
    """One solution plus kernel dimension of mat * x = rhs over k, or None."""
    nrows = len(mat)
    ncols = len(mat[0]) if mat else 0
    aug = [list(r) + [v] for r, v in zip(mat, rhs)]
    mul, add, neg, inv = K.mul, K.add, K.neg, K.inv
    piv_cols = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if aug[i][c]), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        ip = inv[aug[r][c]]
        aug[r] = [mul[x][ip] for x in aug[r]]
        for i in range(nrows):
            if i != r and aug[i][c]:
                f = aug[i][c]
                aug[i] = [add[x][neg[mul[f][y]]] for x, y in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
    for i in range(r, nrows):
        if aug[i][ncols] != 0:
            return None
    x = [0] * ncols
    for i, c in enumerate(piv_cols):
        x[c] = aug[i][ncols]
    return x, ncols - r


def _count_digit_tree_full(elem, A, req, leads, m, diag_entries,
                           congruence_r) -> int:
    """Reference implementation: full enumeration over digit vectors."""
    model = elem.model
    K = elem.F.K
    q = K.q
    n = model.n
    rank_free = model.rs.rank
    free = [[lv] + [0] * (m - 1) for lv in leads]

    def w_entry_coeff(a, b, level, diags):
        acc = 0
        for i in range(n):
            s = A[i][a][b]
            for k, cv in enumerate(s.coeffs):
                if not cv:
                    continue
                e = s.lo + k
                l = level - e
                if 0 <= l < m and diags[i][l]:
                    acc = K.add[acc][K.mul[cv][diags[i][l]]]
        return acc

    def check(level, final):
        diags = diag_entries(free)
        for a in range(n):
            for b in range(n):
                sp = _spread_bound(A, a, b)
                for e in range(-sp, req[a][b]):
                    if not final and e + sp > level:
                        continue
                    c = w_entry_coeff(a, b, e, diags)
                    if congruence_r is not None and a == b and e == 0:
                        c = K.sub(c, 1)
                    if c != 0:
                        return False
        return True

    def rec(level):
        if level == m:
            return 1 if check(m, final=True) else 0
        total = 0
        for digits in itertools.product(range(q), repeat=rank_free):
            for i, dgt in enumerate(digits):
                free[i][level] = dgt
            if check(level, final=False):
                total += rec(level + 1)
        for i in range(rank_free):
            free[i][level] = 0
        return total

    if not check(0, final=False):
        return 0
    return rec(1)


_SPREAD_CACHE = {}


def _spread_bound(A, a, b) -> int:
    lo = 0
    for Ai in A:
        s = Ai[a][b]
        if not s.is_zero():
            lo = min(lo, s.valuation())
    return -lo
