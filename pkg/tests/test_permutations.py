import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from updown import graphs, permutations as P
from updown.rng import SplitMix64


def perms(max_size=6):
    return st.integers(1, max_size).flatmap(
        lambda n: st.permutations(list(range(1, n + 1))).map(tuple)
    )


# --- encoding ---------------------------------------------------------------


def test_parse_format_roundtrip_digits():
    assert P.parse_permutation("2413") == (2, 4, 1, 3)
    assert P.format_permutation((2, 4, 1, 3)) == "2413"


def test_parse_format_comma_form_beyond_nine():
    sigma = tuple(range(10, 0, -1))
    text = P.format_permutation(sigma)
    assert "," in text
    assert P.parse_permutation(text) == sigma


def test_parse_rejects_non_permutations():
    for bad in ("1224", "103", "", "13"):
        with pytest.raises(ValueError):
            P.parse_permutation(bad)


def test_all_permutations_counts():
    for n in range(1, 6):
        seen = set(P.all_permutations(n))
        assert len(seen) == len(list(itertools.permutations(range(1, n + 1))))


# --- occurrences and densities ----------------------------------------------


def test_occ_hand_values():
    assert P.occ((1, 2), (2, 3, 1)) == 1
    assert P.occ((2, 1), (2, 3, 1)) == 2
    assert P.occ((1, 2, 3), (1, 2, 3, 4)) == 4
    assert P.occ((2, 4, 1, 3), (2, 4, 1, 3)) == 1
    assert P.occ((2, 4, 1, 3), (1, 2, 3)) == 0


@given(perms(5), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_density_partition_of_unity(sigma, k):
    if k > len(sigma):
        return
    total = sum(
        P.pattern_density(pi, sigma) for pi in P.all_permutations(k)
    )
    assert total == 1


def test_pattern_of():
    assert P.pattern_of((5, 1, 9), (0, 1, 2)) == (2, 1, 3)
    assert P.pattern_of((2, 4, 1, 3), (1, 3)) == (2, 1)


# --- inflation and deletion -------------------------------------------------


def test_inflate_hand_values():
    assert P.inflate((1, 2), 1, increasing=False) == (2, 1, 3)
    assert P.inflate((2, 1), 2, increasing=True) == (3, 1, 2)
    assert P.inflate((1,), 1, increasing=True) == (1, 2)
    assert P.inflate((1,), 1, increasing=False) == (2, 1)


@given(perms(5), st.integers(1, 5), st.booleans())
@settings(max_examples=80, deadline=None)
def test_delete_undoes_inflate(sigma, i, increasing):
    if i > len(sigma):
        return
    tau = P.inflate(sigma, i, increasing)
    assert len(tau) == len(sigma) + 1
    # deleting either copy restores sigma
    assert P.delete_point(tau, i) == sigma
    assert P.delete_point(tau, i + 1) == sigma


def test_step_samplers_follow_kernel_support():
    spec = P.chain(Fraction(1, 3))
    rng = SplitMix64(99)
    sigma = (2, 3, 1)
    row = spec.up_row(P.format_permutation(sigma))
    for _ in range(40):
        out = P.up_step_sample(sigma, Fraction(1, 3), rng)
        assert P.format_permutation(out) in row
    down_row = spec.down_row(P.format_permutation(sigma))
    for _ in range(40):
        out = P.down_step_sample(sigma, rng)
        assert P.format_permutation(out) in down_row


# --- separability -----------------------------------------------------------


def test_nonseparable_core_hand_values():
    assert P.nonseparable_core((2, 4, 1, 3)) == (2, 4, 1, 3)
    assert P.nonseparable_core((1, 2, 3, 4)) == (1,)
    assert P.nonseparable_core((3, 1, 4, 2)) == (3, 1, 4, 2)
    assert P.nonseparable_core((4, 3, 2, 1)) == (1,)


@given(perms(5), st.integers(1, 5), st.booleans())
@settings(max_examples=80, deadline=None)
def test_core_invariant_under_inflation(sigma, i, increasing):
    if i > len(sigma):
        return
    inflated = P.inflate(sigma, i, increasing)
    assert P.nonseparable_core(inflated) == P.nonseparable_core(sigma)


@given(perms(6))
@settings(max_examples=120, deadline=None)
def test_core_confluence(sigma):
    # shrinking adjacencies in any order reaches the same fixed point
    leftmost = P.nonseparable_core(sigma)
    rightmost = P.nonseparable_core(sigma, pick=lambda adjs: len(adjs) - 1)
    assert leftmost == rightmost


def test_is_separable_matches_pattern_avoidance():
    for n in range(1, 5):
        for sigma in P.all_permutations(n):
            avoids = (
                P.occ((2, 4, 1, 3), sigma) == 0
                and P.occ((3, 1, 4, 2), sigma) == 0
            )
            assert P.is_separable(sigma) == avoids


def test_recursive_separable_sample_is_separable():
    rng = SplitMix64(4)
    for _ in range(50):
        sigma = P.recursive_separable_sample(6, Fraction(1, 2), rng)
        assert len(sigma) == 6
        assert P.is_separable(sigma)


# --- monotone runs ----------------------------------------------------------


def test_run_insertion_sets_hand_values():
    inc, dec = P.run_insertion_sets((1, 2, 3), 2)
    assert set(inc) == {((1, 2), 1), ((1, 2), 2)}
    assert dec == ()
    inc1, dec1 = P.run_insertion_sets((2, 4, 1, 3), 1)
    assert set(inc1) == {((2, 4, 1, 3), i) for i in range(1, 5)}
    assert set(dec1) == set(inc1)
    inc2, dec2 = P.run_insertion_sets((2, 4, 1, 3), 2)
    assert inc2 == () and dec2 == ()


def test_run_insertion_sets_match_inflation():
    # (tau, i) is in the increasing m-set iff replacing tau's point i by an
    # increasing run of length m recovers pi
    pi = (1, 3, 2, 4)
    for m in (1, 2, 3):
        inc, dec = P.run_insertion_sets(pi, m)
        for tau, i in inc:
            assert P.replace_point_with_run(tau, i, m, increasing=True) == pi
        for tau, i in dec:
            assert P.replace_point_with_run(tau, i, m, increasing=False) == pi
    # exhaustive converse for m = 2
    inc, dec = P.run_insertion_sets(pi, 2)
    for tau in P.all_permutations(3):
        for i in range(1, 4):
            if P.replace_point_with_run(tau, i, 2, increasing=True) == pi:
                assert (tau, i) in inc
            if P.replace_point_with_run(tau, i, 2, increasing=False) == pi:
                assert (tau, i) in dec


# --- inversion graph --------------------------------------------------------


def test_inversion_graph_hand_values():
    assert P.inversion_graph((1, 2, 3)) == graphs.empty_graph(3)
    assert P.inversion_graph((3, 2, 1)) == graphs.complete_graph(3)
    assert P.inversion_graph((2, 4, 1, 3)) == graphs.path_graph(4)


@given(perms(6))
@settings(max_examples=80, deadline=None)
def test_inversion_graph_edge_count(sigma):
    inversions = sum(
        1
        for i, j in itertools.combinations(range(len(sigma)), 2)
        if sigma[i] > sigma[j]
    )
    assert len(P.inversion_graph(sigma).edges()) == inversions
