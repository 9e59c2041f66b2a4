import itertools
from fractions import Fraction

import pytest

from asf.errors import PoorFit, UnsupportedCentralizer
from asf.exactnum import field
from asf.flagcount import (
    CountRecord,
    bezrukavnikov_dim,
    brute_count_iwahori,
    cell_of_point,
    cell_points,
    count_asf,
    count_stable_complete_flags,
    count_stable_isotropic_flags,
    enumerate_cells,
    fit_growth,
    iwasawa_mu,
    lambda_window_shift,
    sp_standardize,
    standard_chain,
    survey,
)
from asf.liemodel import (
    cartan_element,
    group_model,
    parse_element,
    standard_split_element,
)
from asf.rootdata import ApartmentPoint, root_system


def sl2(q, e):
    return cartan_element("sl2", q, [{e: 1}, {e: -1}])


# -- chain shapes -------------------------------------------------------------

def test_standard_chains():
    rs = root_system("A1")
    c = standard_chain("sl2", rs.base_alcove_point())
    assert c.base == (0, 0)
    assert c.members == ((0, 1),)
    co = standard_chain("sl2", rs.origin())
    assert co.base == (0, 0) and co.members == ()

    rc = root_system("C2")
    cx = standard_chain("sp4", rc.base_alcove_point())
    assert cx.base == (0, 0, 0, 0) and cx.kind == "selfdual"
    cfar = standard_chain("sp4", ApartmentPoint(rc, (Fraction(1, 2), Fraction(1, 2))))
    assert cfar.kind == "paramodular" and sum(cfar.base) == 2
    cmid = standard_chain("sp4", ApartmentPoint(rc, (Fraction(1, 2), Fraction(0))))
    assert cmid.kind == "mid" and sum(cmid.base) % 2 == 1


# -- cells and the oracle -------------------------------------------------------

def test_enumerate_cells_counts():
    assert len(enumerate_cells("sl2", 0)) == 1
    assert len(enumerate_cells("sl2", 3)) == 7
    ball = enumerate_cells("sl3", 2)
    assert len(ball) == 10  # 1 + 3 + 6


def test_cell_points_count_and_distinctness():
    # q^l distinct points per cell, representative reduction recovers w
    q = 3
    for w in enumerate_cells("sl2", 2):
        pts = list(cell_points("sl2", q, w))
        assert len(pts) == q ** w.length()
        cells = {cell_of_point("sl2", g).key() for _, g in pts}
        assert cells == {w.key()}


def test_cell_partition_random_elements():
    # random-ish integral group elements fall into exactly one cell
    import random
    rnd = random.Random(7)
    q = 5
    model = group_model("sl2")
    F = model.at(q)
    from asf.exactnum import LaurentMatrix, LaurentSeries
    K = F.K
    for _ in range(12):
        while True:
            entries = [[{e: rnd.randrange(q) for e in range(3)} for _ in range(2)]
                       for _ in range(2)]
            g = LaurentMatrix.from_int_entries(K, entries, hi=24)
            try:
                if g.det_valuation() >= 0:
                    break
            except Exception:
                continue
        w = cell_of_point("sl2", g)
        assert w is not None


def test_iwasawa_mu_triangular():
    from asf.exactnum import LaurentMatrix
    K = field(5)
    g = LaurentMatrix.from_int_entries(
        K, [[{2: 1}, {0: 1}], [{}, {-2: 1}]], hi=24)
    assert iwasawa_mu("sl2", g) == (2, -2)


def test_brute_matches_production_sl2():
    q = 3
    for e, expect in ((0, 2), (1, 6), (2, 18)):
        g = sl2(q, e)
        assert count_asf(g, "iwahori").total == expect
        br = brute_count_iwahori(g, 6)
        assert br.total == expect
        assert br.stabilized


@pytest.mark.slow
def test_brute_lower_bound_sl3():
    # small budgets undercount but must stay consistent with production
    q = 5
    g = standard_split_element("sl3", q, 1)
    prod = count_asf(g, "iwahori").total
    br3 = brute_count_iwahori(g, 3)
    br4 = brute_count_iwahori(g, 4)
    assert br3.total <= br4.total <= prod
    assert not br4.stabilized  # boundary cells still populated


# -- production counts -----------------------------------------------------------

def test_sl2_exact_counts():
    for q in (3, 5, 7, 9):
        assert count_asf(sl2(q, 0), "iwahori").total == 2
        assert count_asf(sl2(q, 1), "iwahori").total == 2 * q
        assert count_asf(sl2(q, 2), "iwahori").total == 2 * q * q


def test_sl2_parahoric_and_strata():
    rs = root_system("A1")
    for q in (3, 5, 7):
        g = sl2(q, 2)
        p = count_asf(g, "parahoric", y=rs.origin())
        assert p.total == q * q
        s_reg = count_asf(g, "stratum", y=rs.origin(), stratum=(2,))
        s_zero = count_asf(g, "stratum", y=rs.origin(), stratum=(1, 1))
        assert s_reg.total == q * q - q
        assert s_zero.total == q
        assert s_reg.total + s_zero.total == p.total


def test_strata_sum_to_parahoric():
    rs = root_system("A2")
    q = 5
    g = standard_split_element("sl3", q, 1)
    p = count_asf(g, "parahoric", y=rs.origin())
    assert sum(p.by_class.values()) == p.total


def test_lambda_invariance():
    # translating the fundamental-domain window does not change totals
    q = 5
    g = sl2(q, 2)
    base = count_asf(g, "iwahori").total
    shift = lambda_window_shift("sl2", (1, -1))
    assert count_asf(g, "iwahori", window_shift=shift).total == base
    shift2 = lambda_window_shift("sl2", (-2, 2))
    assert count_asf(g, "iwahori", window_shift=shift2).total == base


def test_lambda_invariance_sp4():
    q = 5
    g = standard_split_element("sp4", q, 1)
    base = count_asf(g, "iwahori").total
    shift = lambda_window_shift("sp4", (1, 1))
    assert count_asf(g, "iwahori", window_shift=shift).total == base


def test_unsupported_centralizer():
    g = parse_element("[[0,1],[t,0]]", "sl2", 5)
    with pytest.raises(UnsupportedCentralizer):
        count_asf(g, "iwahori")


def test_sp4_vertex_counts_run():
    rc = root_system("C2")
    q = 5
    g = standard_split_element("sp4", q, 1)
    o = count_asf(g, "parahoric", y=rc.origin())
    far = count_asf(g, "parahoric",
                    y=ApartmentPoint(rc, (Fraction(1, 2), Fraction(1, 2))))
    mid = count_asf(g, "parahoric",
                    y=ApartmentPoint(rc, (Fraction(1, 2), Fraction(0))))
    assert o.total == q ** 4
    assert far.total > 0
    assert mid.total > 0


# -- flags in the reduction -------------------------------------------------------

def test_flag_counts_type_A():
    K = field(5)
    # regular nilpotent 2x2: unique Borel
    assert count_stable_complete_flags(K, [[0, 1], [0, 0]]) == 1
    # zero 2x2: all q+1 lines
    assert count_stable_complete_flags(K, [[0, 0], [0, 0]]) == 6
    # sl3: zero matrix = full flag variety (q^2+q+1)(q+1)
    q = 5
    assert count_stable_complete_flags(K, [[0] * 3 for _ in range(3)]) \
        == (q * q + q + 1) * (q + 1)
    # subregular sl3 (2,1): two P^1s meeting in a point: 2q+1
    assert count_stable_complete_flags(K, [[0, 1, 0], [0, 0, 0], [0, 0, 0]]) \
        == 2 * q + 1
    # regular sl3: single flag
    assert count_stable_complete_flags(K, [[0, 1, 0], [0, 0, 1], [0, 0, 0]]) == 1


def test_flag_counts_sp4():
    m = group_model("sp4")
    K = field(5)
    F = m.at(5)
    q = 5
    zero = [[0] * 4 for _ in range(4)]
    # full symplectic flag variety: (q+1)(q^2+1)(q+1)
    total = count_stable_isotropic_flags(K, zero, m.J)
    assert total == (q + 1) * (q * q + 1) * (q + 1)
    # regular nilpotent of sp4 stabilizes exactly one isotropic flag
    reg = F.k_matrix(m.root_vectors_frac((1, -1)))
    reg2 = F.k_matrix(m.root_vectors_frac((0, 2)))
    regfull = [[K.add[a][b] for a, b in zip(r1, r2)] for r1, r2 in zip(reg, reg2)]
    assert count_stable_isotropic_flags(K, regfull, m.J) == 1


def test_sp_standardize():
    m = group_model("sp4")
    K = field(7)
    # a scrambled alternating Gram
    gram = [[0, 2, 0, 3], [5, 0, 1, 0], [0, 6, 0, 4], [4, 0, 3, 0]]
    # make it antisymmetric over F_7
    for i in range(4):
        for j in range(i, 4):
            gram[j][i] = K.neg[gram[i][j]]
            gram[i][i] = 0
    A = [[1, 0, 0, 0], [0, 2, 0, 0], [0, 0, 4, 0], [0, 0, 0, 2]]
    A2, Jstd = sp_standardize(K, A, gram)
    assert Jstd[0][3] == 1 and Jstd[1][2] == 1
    # conjugation preserves the characteristic polynomial
    from asf.liemodel import k_charpoly
    assert k_charpoly(K, A2) == k_charpoly(K, A)


# -- dimension formula and fits ----------------------------------------------------

def test_bezrukavnikov_dim():
    assert bezrukavnikov_dim(sl2(5, 1)) == 1
    assert bezrukavnikov_dim(sl2(5, 2)) == 2
    assert bezrukavnikov_dim(sl2(5, 0)) == 0


def make_records(values):
    return [CountRecord(q, "iwahori", "o", 0, n, {}, True, {})
            for q, n in values]


def test_fit_growth_noiseless():
    recs = make_records([(q, 2 * q * q) for q in (3, 5, 7, 11)])
    fit = fit_growth(recs)
    assert fit.d == 2 and fit.C == 2
    assert all(r == 0 for r in fit.residuals.values())


def test_fit_growth_with_half_power_noise():
    recs = make_records([(q, 2 * q ** 2 + int(q ** 1.5)) for q in (9, 25, 49, 121)])
    fit = fit_growth(recs)
    assert fit.d == 2 and fit.C == 2
    for q, r in fit.residuals.items():
        assert r <= 1.5  # residuals * sqrt(q) stay bounded


def test_fit_growth_end_to_end_sl2():
    recs = [count_asf(sl2(q, 2), "iwahori") for q in (3, 5, 7, 11)]
    fit = fit_growth(recs)
    assert (fit.d, fit.C) == (2, 2)
    assert fit.c_bound == 0


def test_fit_growth_rejects_bad_slope():
    recs = make_records([(3, 10), (5, 11), (7, 1000)])
    with pytest.raises(PoorFit):
        fit_growth(recs)


def test_fit_zero_counts():
    recs = make_records([(q, 0) for q in (3, 5, 7)])
    fit = fit_growth(recs)
    assert fit.C == 0
