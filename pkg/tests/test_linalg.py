"""GF(q) linear algebra: elimination, symplectic form, MDS, completion."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmsplab import linalg as la
from mmsplab.errors import (
    IndexOutOfRange,
    NotSelfOrthogonal,
    OddLength,
    RankDeficient,
    TooManyColumns,
)
from mmsplab.fields import field_build, tower_build

F3 = field_build(3, 1)
F5 = field_build(5, 1)
F9 = field_build(3, 2, [2, 2, 1])

EX1_G1 = [[1, 0], [1, 0], [2, 2], [0, 1], [0, 1], [0, 2]]
EX1_F = [[2, 0], [1, 0], [1, 2], [1, 0], [0, 2], [1, 2]]


def g1_f():
    return (la.MatGF.from_ints(F3, EX1_G1), la.MatGF.from_ints(F3, EX1_F))


def test_bilinear_examples():
    x = la.VecGF.from_ints(F3, [1, 1, 2])
    assert la.bilinear(x, x) == 0              # tr(6) = 0
    z = la.VecGF.zeros(F3, 3)
    assert la.bilinear(z, x) == 0
    xe = la.VecGF.from_elements(F9, [F9.from_coeffs([0, 1])])
    assert la.bilinear(xe, xe) == F9.trace(F9.mul(F9.from_coeffs([0, 1]),
                                                  F9.from_coeffs([0, 1])))


def test_symp_canonical_pair():
    v = la.VecGF.from_ints(F3, [1, 0, 0, 0])
    w = la.VecGF.from_ints(F3, [0, 0, 1, 0])
    assert la.symp(v, w) == 1
    assert la.symp(w, v) == 2  # antisymmetry mod 3


def test_symp_antisymmetry_exhaustive():
    for vi in range(81):
        v = la.VecGF.from_ints(F3, [(vi // 3**k) % 3 for k in range(4)])
        assert la.symp(v, v) == 0


def test_symp_odd_length():
    v = la.VecGF.from_ints(F3, [1, 2, 0])
    with pytest.raises(OddLength):
        la.symp(v, v)


def test_restrict_paper_matrix():
    g1, f = g1_f()
    r = la.restrict(la.hstack([g1, f]), [1, 2, 4, 5])
    got = [[F3.coeffs(r.elt(i, j))[0] for j in range(4)] for i in range(4)]
    assert got == [[1, 0, 2, 0], [1, 0, 1, 0], [0, 1, 1, 0], [0, 1, 0, 2]]
    assert la.rank(r) == 4


def test_restrict_edge_cases():
    g1, _ = g1_f()
    assert la.restrict(g1, range(1, 7)) == g1
    empty = la.restrict(g1, [])
    assert empty.rows == 0 and empty.cols == 2
    with pytest.raises(IndexOutOfRange):
        la.restrict(g1, [7])


def test_restrict_commutes_with_concat():
    rng = np.random.default_rng(3)
    for _ in range(20):
        g = la.MatGF(F3, rng.integers(0, 3, size=(6, 2)))
        f = la.MatGF(F3, rng.integers(0, 3, size=(6, 3)))
        sub = sorted(set(rng.integers(1, 7, size=3).tolist()))
        lhs = la.restrict(la.hstack([g, f]), sub)
        rhs = la.hstack([la.restrict(g, sub), la.restrict(f, sub)])
        assert lhs == rhs


def test_rank_solve_in_span_quotient():
    assert la.rank(la.MatGF.identity(F3, 4)) == 4
    rng = np.random.default_rng(0)
    for _ in range(25):
        m = la.MatGF(F3, rng.integers(0, 3, size=(4, 2)))
        v = la.VecGF(F3, rng.integers(0, 3, size=4))
        qm = la.quotient(m)
        assert la.in_span(m, v) == qm.coset_coords(v).is_zero()
        x = la.VecGF(F3, rng.integers(0, 3, size=2))
        b = m @ x
        s = la.solve(m, b)
        assert s is not None and (m @ s) == b


def test_quotient_trivial_cases():
    sq = la.MatGF.from_ints(F3, [[1, 0], [1, 1]])
    qm = la.quotient(sq)
    v = la.VecGF.from_ints(F3, [2, 1])
    assert qm.coset_coords(v).is_zero()
    zero = la.MatGF.zeros(F3, 3, 2)
    qmz = la.quotient(zero)
    w = la.VecGF.from_ints(F3, [1, 0, 2])
    assert len(qmz.coset_coords(w)) == 3
    assert not qmz.coset_coords(w).is_zero()


def test_solve_deterministic_lex_first():
    m = la.MatGF.from_ints(F3, [[1, 1, 0], [0, 0, 1]])
    b = la.VecGF.from_ints(F3, [2, 1])
    s = la.solve(m, b)
    # free variable (column 2 of the pivot order) set to zero
    assert [F3.coeffs(s[i])[0] for i in range(3)] == [2, 0, 1]


def test_orthogonality_predicates():
    g1, f = g1_f()
    assert la.is_self_col_orth(g1)
    assert la.is_col_orth(f, g1)
    pair = la.MatGF.from_ints(F3, [[1, 0], [0, 0], [0, 1], [0, 0]])
    assert not la.is_self_col_orth(pair)


def test_is_mds_vandermonde_and_counterexample():
    v = la.MatGF.from_ints(F5, [[1, a % 5] for a in range(5)])
    assert la.is_mds(v)
    bad = la.MatGF.from_ints(F5, [[1, 1], [1, 1], [2, 3]])
    assert not la.is_mds(bad)
    with pytest.raises(TooManyColumns):
        la.is_mds(la.MatGF.zeros(F5, 2, 3))


def test_is_mds_matches_min_weight_oracle():
    rng = np.random.default_rng(7)
    for _ in range(40):
        m = la.MatGF(F3, rng.integers(0, 3, size=(5, 2)))
        if la.rank(m) < 2:
            continue
        brute = la.is_mds(m)
        oracle = la.min_weight_nonzero(m) == m.rows - m.cols + 1
        assert brute == oracle


def test_is_mds_poly_backend_dual_shortcut():
    t = tower_build(3, 4)  # GF(3^16): poly backend
    assert t.kind == "poly"
    rng = np.random.default_rng(5)
    for _ in range(8):
        ints = rng.integers(0, 3, size=(5, 3))
        m = la.MatGF.from_ints(t, ints.tolist())
        small = la.MatGF.from_ints(F3, ints.tolist())
        assert la.is_mds(m) == la.is_mds(small)


def test_dual_and_completion_trivial():
    n = 3
    g1 = la.MatGF.zeros(F3, 2 * n, n)
    for i in range(n):
        g1.a[i, i] = 1
    gbar, h1 = la.dual_and_completion(g1)
    assert gbar.cols == 0 and h1.cols == n
    for j in range(n):
        for jp in range(n):
            assert la.symp(h1.col(j), g1.col(jp)) == (1 if j == jp else 0)
            assert la.symp(h1.col(j), h1.col(jp)) == 0


def test_dual_and_completion_example1():
    g1, _ = g1_f()
    gbar, h1 = la.dual_and_completion(g1)
    assert gbar.cols == 1 and h1.cols == 2
    assert la.is_self_col_orth(la.hstack([g1, gbar]))
    for j in range(2):
        for jp in range(2):
            assert la.symp(h1.col(j), g1.col(jp)) == (1 if j == jp else 0)
            assert la.symp(h1.col(j), h1.col(jp)) == 0
        assert la.symp(h1.col(j), gbar.col(0)) == 0


def test_dual_and_completion_extension_field():
    g1 = la.MatGF.zeros(F9, 4, 1)
    g1.a[0, 0] = F9.from_coeffs([0, 1])
    gbar, h1 = la.dual_and_completion(g1)
    assert la.symp(h1.col(0), g1.col(0)) == 1
    assert la.is_self_col_orth(la.hstack([g1, gbar]))


def test_dual_and_completion_errors():
    g1, _ = g1_f()
    dep = la.MatGF(F3, np.concatenate([g1.a[:, :1], g1.a[:, :1]], axis=1))
    with pytest.raises(RankDeficient):
        la.dual_and_completion(dep)
    bad = la.MatGF.from_ints(F3, [[1, 0], [0, 0], [0, 1], [0, 0]])
    with pytest.raises(NotSelfOrthogonal):
        la.dual_and_completion(bad)


def test_matmul_and_json_round_trip():
    g1, f = g1_f()
    m = la.mat_from_json(la.mat_to_json(f))
    assert m == f
    t = tower_build(3, 2)
    big = la.MatGF.zeros(t, 2, 2)
    big.a[0, 0] = t.token_to_cell(t.level_gen(2))
    big.a[1, 1] = t.token_to_cell(t.one)
    m2 = la.mat_from_json(la.mat_to_json(big))
    assert m2 == big


@given(st.integers(0, 3**6 - 1), st.integers(0, 3**6 - 1))
@settings(max_examples=40, deadline=None)
def test_symp_bilinearity_property(ai, bi):
    v = la.VecGF.from_ints(F3, [(ai // 3**k) % 3 for k in range(6)])
    w = la.VecGF.from_ints(F3, [(bi // 3**k) % 3 for k in range(6)])
    assert la.symp(v, w) == (-la.symp(w, v)) % 3
