"""Field tower arithmetic: construction, trace, levels, both backends."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmsplab import fields
from mmsplab.errors import (
    DivisionByZero,
    NoTower,
    NotPrime,
    ReduciblePolynomial,
    TowerTooShallow,
)
from mmsplab.fields import field_build, is_irreducible, tower_build


def test_prime_field_basics():
    f3 = field_build(3, 1)
    assert f3.q == 3
    assert f3.add(2, 2) == 1
    assert f3.mul(2, 2) == 1
    assert f3.modulus == (0, 1)


def test_not_prime_rejected():
    with pytest.raises(NotPrime):
        field_build(4, 1)


def test_explicit_modulus_f9():
    # x^2 - x - 1 has no root in F_3 (0,1,2 map to -1,-1,1)
    f9 = field_build(3, 2, [2, 2, 1])
    x = f9.from_coeffs([0, 1])
    assert f9.coeffs(f9.mul(x, x)) == (1, 1)  # x^2 = x + 1


def test_reducible_modulus_rejected():
    with pytest.raises(ReduciblePolynomial):
        field_build(3, 2, [0, 0, 1])  # x^2


def test_trace_paper_value():
    f9 = field_build(3, 2, [2, 2, 1])
    x = f9.from_coeffs([0, 1])
    assert f9.trace(x) == 1           # a_{r-1} of x^2 = x + 1
    assert f9.trace(f9.zero) == 0
    assert f9.trace(f9.one) == 2      # r mod p


def test_inverses_exhaustive_f9():
    f9 = field_build(3, 2, [2, 2, 1])
    for a in f9.elements():
        if a != f9.zero:
            assert f9.mul(a, f9.inv(a)) == f9.one
    with pytest.raises(DivisionByZero):
        f9.inv(f9.zero)


@pytest.mark.parametrize("p,r", [(2, 3), (3, 2), (5, 2)])
def test_trace_properties_exhaustive(p, r):
    ctx = field_build(p, r)
    elems = list(ctx.elements())
    # F_p-linearity
    for a in range(p):
        for b in range(p):
            for z in elems[:9]:
                for w in elems[:9]:
                    lhs = ctx.trace(ctx.add(ctx.mul(ctx.from_int(a), z),
                                            ctx.mul(ctx.from_int(b), w)))
                    rhs = (a * ctx.trace(z) + b * ctx.trace(w)) % p
                    assert lhs == rhs
    # Frobenius invariance
    for z in elems:
        assert ctx.trace(ctx.frobenius(z)) == ctx.trace(z)
    # nondegeneracy
    for z in elems:
        if z == ctx.zero:
            continue
        assert any(ctx.trace(ctx.mul(z, w)) != 0 for w in elems)


def test_tower_build_small():
    t = tower_build(3, 1)
    e1 = t.level_gen(1)
    assert t.tower_level(e1) == 1
    assert t.pow_(e1, 9) == e1  # fixed by Frobenius^2


def test_tower_chain_f16():
    t = tower_build(2, 2)
    assert t.q == 16
    assert list(t.tower_levels) == [1, 2, 4]
    e1, e2 = t.level_gen(1), t.level_gen(2)
    assert t.tower_level(e1) == 1
    assert t.tower_level(e2) == 2


def test_tower_depth_zero_rejected():
    with pytest.raises(TowerTooShallow):
        tower_build(3, 0)


def test_tower_level_monotone_under_ops():
    t = tower_build(3, 2)
    e1, e2 = t.level_gen(1), t.level_gen(2)
    assert t.tower_level(t.add(e1, e2)) == 2
    for z in [e1, e2, t.mul(e1, e2)]:
        for w in [e1, e2]:
            lz, lw = t.tower_level(z), t.tower_level(w)
            assert t.tower_level(t.mul(z, w)) <= max(lz, lw)


def test_no_tower_error():
    f9 = field_build(3, 2)
    with pytest.raises(NoTower):
        f9.tower_level(f9.one)


def test_poly_backend_arith():
    t = tower_build(2, 5)  # GF(2^32): beyond the table limit
    assert t.kind == "poly"
    a = t.level_gen(4)
    assert t.tower_level(a) == 4
    assert t.mul(a, t.inv(a)) == t.one
    b = t.add(a, t.one)
    assert t.sub(b, t.one) == a


def test_pick_fresh_levels_and_variants():
    t = tower_build(3, 3)
    for j in (1, 2, 3):
        capacity = 3 ** (2 ** (j - 1))  # shifts come from the level below
        seen = set()
        for v in range(min(4, capacity)):
            e = t.pick_fresh(j, v)
            assert t.tower_level(e) == j
            seen.add(e)
        assert len(seen) == min(4, capacity)


def test_canonical_moduli_table_is_irreducible():
    from mmsplab._moduli import CANONICAL_MODULI

    for (p, d), poly in CANONICAL_MODULI.items():
        assert len(poly) == d + 1 and poly[-1] == 1
        assert is_irreducible(poly, p), (p, d)


@pytest.mark.parametrize("p,d", [(2, 2), (2, 4), (2, 8), (3, 2), (3, 4), (5, 2)])
def test_canonical_moduli_lex_minimal(p, d):
    from mmsplab._moduli import CANONICAL_MODULI

    want = CANONICAL_MODULI[(p, d)]
    for code in range(p**d):
        low = tuple((code // p**i) % p for i in range(d))
        f = low + (1,)
        if is_irreducible(f, p):
            assert f == want
            break


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_field_axioms_f9(ai, bi, ci):
    f9 = field_build(3, 2, [2, 2, 1])
    a, b, c = f9.from_int(ai), f9.from_int(bi), f9.from_int(ci)
    assert f9.add(a, b) == f9.add(b, a)
    assert f9.mul(a, f9.add(b, c)) == f9.add(f9.mul(a, b), f9.mul(a, c))
    assert f9.mul(a, f9.mul(b, c)) == f9.mul(f9.mul(a, b), c)


def test_json_round_trip():
    t = tower_build(3, 2)
    d = t.to_json()
    t2 = fields.field_from_json(d)
    assert t2 is t  # registry returns the identical context
