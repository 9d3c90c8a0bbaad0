from itertools import product
from math import comb

import pytest
from hypothesis import given, strategies as st

from sofft.multiindex import (
    MultiIndex,
    enumerate_indices,
    ordered_pairs,
    sym_factor,
    unit,
    zero,
)


def brute_force_indices(m, k):
    """Independent enumeration: all exponent vectors of the right total order."""
    return {t for t in product(range(k + 1), repeat=m) if sum(t) == k}


def test_order():
    assert MultiIndex((0, 0)).order == 0
    assert MultiIndex((2, 0)).order == 2
    assert MultiIndex((1, 2)).order == 3


def test_entries_must_be_nonnegative():
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def test_add_unit():
    assert MultiIndex((1, 0)).add_unit(2) == MultiIndex((1, 1))
    assert MultiIndex((0, 0)).add_unit(1) == MultiIndex((1, 0))
    assert MultiIndex((1, 1)).add_unit(1) == MultiIndex((2, 1))
    with pytest.raises(IndexError):
        MultiIndex((1, 0)).add_unit(3)
    with pytest.raises(IndexError):
        MultiIndex((1, 0)).add_unit(0)


def test_enumerate_small():
    assert enumerate_indices(2, 2) == [
        MultiIndex((2, 0)),
        MultiIndex((1, 1)),
        MultiIndex((0, 2)),
    ]
    assert enumerate_indices(2, 0) == [MultiIndex((0, 0))]


def test_enumerate_m3_against_brute_force():
    got = enumerate_indices(3, 2)
    assert len(got) == 6
    assert {tuple(I) for I in got} == brute_force_indices(3, 2)


def test_enumerate_is_lexicographically_decreasing():
    for m in range(1, 5):
        for k in range(5):
            seq = [tuple(I) for I in enumerate_indices(m, k)]
            assert seq == sorted(seq, reverse=True)


def test_enumerate_count_matches_binomial():
    for m in range(1, 5):
        for k in range(5):
            assert len(enumerate_indices(m, k)) == comb(m + k - 1, k)
            assert len(brute_force_indices(m, k)) == comb(m + k - 1, k)


def test_sym_factor():
    assert sym_factor(1, 1) == 1
    assert sym_factor(1, 2) == 2
    assert sym_factor(2, 1) == 2


@given(st.integers(1, 4), st.integers(1, 4))
def test_sym_factor_symmetric(i, j):
    assert sym_factor(i, j) == sym_factor(j, i)


@given(
    st.lists(st.integers(0, 4), min_size=1, max_size=4),
    st.data(),
)
def test_add_unit_increments_order(entries, data):
    I = MultiIndex(entries)
    i = data.draw(st.integers(1, len(entries)))
    assert I.add_unit(i).order == I.order + 1


def test_ordered_pair_count_equals_sym_factor():
    # every order-2 index splits as 1_i + 1_j in exactly n(ij) ordered ways
    for m in (2, 3, 4):
        for I in enumerate_indices(m, 2):
            pairs = ordered_pairs(I)
            i, j = pairs[0]
            assert len(pairs) == sym_factor(i, j)
            for (a, b) in pairs:
                assert unit(m, a).add_unit(b) == I


def test_factorial():
    assert MultiIndex((3, 2)).factorial() == 12
    assert zero(3).factorial() == 1


def test_rendering():
    assert str(MultiIndex((2, 0))) == "[2,0]"
    assert str(MultiIndex((1,))) == "[1]"
