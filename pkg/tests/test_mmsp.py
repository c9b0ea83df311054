"""Span-program predicates, classification, and rate formulas."""

from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from mmsplab import mmsp
from mmsplab.access import make_explicit, make_threshold, symplectify, symplectify_structure
from mmsplab.errors import ClassInvariantViolated, DimensionMismatch, OutOfRange
from mmsplab.fields import field_build
from mmsplab.fixtures import example1, example2, example3
from mmsplab.linalg import MatGF, hstack

F3 = field_build(3, 1)


def test_example1_accepts_and_rejects():
    ex = example1()
    g1, f = ex.g1, ex.f
    assert mmsp.accepts_one(g1, f, symplectify([1, 2], 3))
    assert mmsp.accepts_one(g1, f, symplectify([2, 3], 3))
    assert mmsp.rejects_one(g1, f, symplectify([3], 3))
    assert mmsp.rejects_one(g1, f, frozenset())
    assert mmsp.is_mmsp(g1, f, symplectify_structure(ex.access))
    # swapped roles fail: a single symplectified player cannot accept
    assert not mmsp.accepts_one(g1, f, symplectify([1], 3))


def test_example2_mmsp():
    ex = example2()
    sfs = symplectify_structure(ex.access)
    assert mmsp.is_mmsp(ex.bundle.g_stack(), ex.f, sfs)
    assert mmsp.rejects_one(ex.g1, ex.f, symplectify([1, 3], 3))


def test_example3_mmsp():
    ex = example3(3)
    assert mmsp.is_mmsp(ex.g1, ex.f, symplectify_structure(ex.access))
    ex5 = example3(5)
    assert mmsp.is_mmsp(ex5.g1, ex5.f, symplectify_structure(ex5.access))


def test_trivial_predicates():
    empty = MatGF.zeros(F3, 3, 0)
    eye = MatGF.identity(F3, 3)
    assert mmsp.accepts_one(empty, eye, [1, 2, 3])
    zero_col = MatGF.zeros(F3, 3, 1)
    assert not mmsp.accepts_one(empty, zero_col, [1, 2, 3])
    assert mmsp.rejects_one(eye, zero_col, [])


def test_lemma1_agreement_on_example1_all_subsets():
    ex = example1()
    for k in range(7):
        for sub in combinations(range(1, 7), k):
            assert mmsp.a1_a2_agree(ex.g1, ex.f, sub)
            assert mmsp.b1_b2_agree(ex.g1, ex.f, sub)


@pytest.mark.parametrize("p,r", [(2, 1), (3, 1), (5, 1), (3, 2)])
def test_lemma1_agreement_random(p, r):
    ctx = field_build(p, r, [2, 2, 1] if (p, r) == (3, 2) else None)
    rng = np.random.default_rng(17)
    for _ in range(15):
        g = MatGF(ctx, rng.integers(0, ctx.q, size=(6, 2)).astype(np.int64))
        f = MatGF(ctx, rng.integers(0, ctx.q, size=(6, 2)).astype(np.int64))
        for k in range(0, 7, 2):
            for sub in combinations(range(1, 7), k):
                assert mmsp.a1_a2_agree(g, f, sub)
                assert mmsp.b1_b2_agree(g, f, sub)


def test_accept_reject_never_both():
    rng = np.random.default_rng(23)
    for _ in range(40):
        g = MatGF(F3, rng.integers(0, 3, size=(5, 2)))
        f = MatGF(F3, rng.integers(0, 3, size=(5, 1)))
        for k in range(6):
            for sub in combinations(range(1, 6), k):
                both = (mmsp.accepts_one(g, f, sub)
                        and mmsp.rejects_one(g, f, sub))
                assert not both


def test_monotonicity():
    rng = np.random.default_rng(29)
    for _ in range(25):
        g = MatGF(F3, rng.integers(0, 3, size=(5, 1)))
        f = MatGF(F3, rng.integers(0, 3, size=(5, 1)))
        for k in range(5):
            for sub in combinations(range(1, 6), k):
                bigger = set(sub) | {5}
                if mmsp.accepts_one(g, f, sub):
                    assert mmsp.accepts_one(g, f, bigger)
                if mmsp.rejects_one(g, f, bigger):
                    assert mmsp.rejects_one(g, f, sub)


def test_threshold_via_mds_cross_check():
    rng = np.random.default_rng(31)
    agreements = 0
    for _ in range(50):
        g = MatGF(F3, rng.integers(0, 3, size=(5, 1)))
        f = MatGF(F3, rng.integers(0, 3, size=(5, 1)))
        via = mmsp.is_threshold_mmsp_via_mds(g, f, 2, 1)
        direct = mmsp.is_mmsp(g, f, make_threshold(2, 1, 5))
        assert via == direct
        agreements += 1
    assert agreements == 50
    with pytest.raises(DimensionMismatch):
        mmsp.is_threshold_mmsp_via_mds(MatGF.zeros(F3, 5, 2),
                                       MatGF.zeros(F3, 5, 1), 2, 1)


def test_classify_example1_as_qq():
    ex = example1()
    b = mmsp.make_bundle("qq", ex.g1, None, ex.f, n=3)
    assert mmsp.classify(b, 2, 1, 3).ok


def test_classify_cq_violation_raises():
    ex = example1()
    with pytest.raises(ClassInvariantViolated):
        mmsp.classify(mmsp.make_bundle("cq", ex.g1, None, ex.f, n=3), 2, 1, 3)


def test_classify_ea_construction():
    from mmsplab.constructions import construct_eammsp

    b = construct_eammsp(2, 1, 2, 2)
    assert mmsp.classify(b, 2, 1, 2).ok


def test_eamds_qqmds_example1():
    ex = example1()
    assert mmsp.is_qqmds(ex.g1, ex.f)
    assert mmsp.is_eamds(ex.g1, ex.f)
    bad_f = MatGF.zeros(F3, 6, 2)
    assert not mmsp.is_eamds(ex.g1, bad_f)


def test_qqmds_degenerate_identity_case():
    # n = x' case: empty G1, F the identity frame; accepts only the full set
    g1 = MatGF.zeros(F3, 4, 0)
    f = MatGF.identity(F3, 4)
    assert mmsp.is_qqmds(g1, f)
    assert mmsp.accepts_one(g1, f, [1, 2, 3, 4])
    assert not mmsp.accepts_one(g1, f, [1, 3])


def test_rate_values():
    assert mmsp.rate("cqss", 2, 1, 3) == Fraction(1, 3)
    assert mmsp.rate("qqss", 2, 1, 3) == Fraction(1, 3)
    assert mmsp.rate("eass", 2, 1, 3) == Fraction(2, 3)
    assert mmsp.rate("easpir", 3, 1, 4) == Fraction(1, 1)
    assert mmsp.rate("css", 2, 1, 3) == Fraction(1, 3)
    assert mmsp.rate("cqspir", 3, 2, 4) == Fraction(1, 2)


def test_rate_out_of_range():
    with pytest.raises(OutOfRange):
        mmsp.rate("cqss", 2, 1, 5)       # r < n/2
    with pytest.raises(OutOfRange):
        mmsp.rate("qqss", 2, 1, 4)       # r < (n+1)/2
    with pytest.raises(OutOfRange):
        mmsp.rate("eass", 1, 1, 3)       # r > t violated
    with pytest.raises(OutOfRange):
        mmsp.rate("cqspir", 2, 1, 3)     # t < n/2


def test_bundle_json_round_trip():
    ex = example1()
    b = mmsp.make_bundle("qq", ex.g1, None, ex.f, n=3, r=2, t=1)
    b2 = mmsp.bundle_from_json(b.to_json())
    assert b2.cls == "qq" and b2.n == 3
    assert b2.g1 == b.g1 and b2.f == b.f
