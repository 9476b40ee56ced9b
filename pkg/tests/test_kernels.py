import json
from fractions import Fraction as F

import pytest

from updown import graphs, kernels as K, permutations
from updown.kernels import LevelCapError


@pytest.fixture(scope="module")
def perm_third():
    return permutations.chain(F(1, 3))


@pytest.fixture(scope="module")
def graph_half():
    return graphs.chain(F(1, 2))


def test_rate_beta_omega():
    assert [K.rate(n) for n in range(5)] == [0, 2, 6, 12, 20]
    assert K.beta(1) == 0
    assert K.beta(2) == F(1, 3)
    assert K.beta(5) == F(2, 3)
    assert K.omega(1, 4) == 0
    assert K.omega(3, 4) == F(6, 20)
    assert K.omega(4, 4) == F(12, 20)


def test_fraction_str_and_parse():
    assert K.fraction_str(F(3, 6)) == "1/2"
    assert K.fraction_str(F(2)) == "2/1"
    assert K.parse_fraction("7/3") == F(7, 3)
    assert K.parse_fraction("4") == F(4)
    for bad in ("0.5", "1e-3", "a/b", "1/0"):
        with pytest.raises(ValueError):
            K.parse_fraction(bad)


def test_level_states_counts_and_cap(perm_third, graph_half):
    assert [len(K.level_states(perm_third, n)) for n in range(1, 5)] == [
        1, 2, 6, 24,
    ]
    assert [len(K.level_states(graph_half, n)) for n in range(1, 5)] == [
        1, 2, 4, 11,
    ]
    with pytest.raises(LevelCapError):
        K.level_states(perm_third, 7)


def test_up_rows_multiplicity(perm_third):
    # duplicating either point of 12 in increasing direction lands on 123,
    # so that entry carries the full probability p while the two
    # decreasing outcomes split 1 - p
    row = perm_third.up_row("12")
    assert row == {"123": F(1, 3), "213": F(1, 3), "132": F(1, 3)}
    row21 = perm_third.up_row("21")
    assert row21 == {"321": F(2, 3), "231": F(1, 6), "312": F(1, 6)}


def test_kernels_row_stochastic(perm_third, graph_half):
    for spec in (perm_third, graph_half):
        for n in range(1, 5):
            assert K.build_up_kernel(spec, n).is_row_stochastic()
            assert K.build_down_kernel(spec, n + 1).is_row_stochastic()


def test_down_kernel_uniform_deletion(perm_third):
    d = K.build_down_kernel(perm_third, 3)
    assert d.entry("231", "21") == F(2, 3)
    assert d.entry("231", "12") == F(1, 3)


def test_commutation_exact(perm_third, graph_half):
    for spec in (perm_third, graph_half):
        for n in (2, 3, 4):
            report = K.verify_commutation(spec, n)
            assert report.holds, report.first_violation


def test_commutation_fails_for_wrong_beta(perm_third):
    # beta_4 = 3/5; the identity must not also hold with 1/2
    t = K.updown_operator(perm_third, 4)
    du = K.build_down_kernel(perm_third, 4).compose(
        K.build_up_kernel(perm_third, 3)
    )
    ident = K.StochKernel.identity(4, K.level_states(perm_third, 4))
    wrong = du.scaled(F(1, 2)).plus(ident.scaled(F(1, 2)))
    assert t.entries != wrong.entries


def test_extended_commutation(perm_third, graph_half):
    for spec in (perm_third, graph_half):
        for n in (3, 4):
            for k in range(2, n + 1):
                assert K.extended_commutation_check(spec, n, k)


def test_kernel_json_roundtrip(perm_third):
    u = K.build_up_kernel(perm_third, 2)
    data = json.loads(u.to_json())
    assert set(data) == {
        "from_level", "to_level", "states_from", "states_to", "entries",
    }
    assert data["states_from"] == ["12", "21"]
    assert all("/" in e for row in data["entries"] for e in row)
    assert K.StochKernel.from_json(u.to_json()) == u


def test_density_vector_matches_brute_force(perm_third):
    col = K.density_vector(perm_third, "12", 3)
    states = K.level_states(perm_third, 3)
    for state, value in zip(states, col):
        sigma = permutations.parse_permutation(state)
        assert value == permutations.pattern_density((1, 2), sigma)


def test_density_vector_graph(graph_half):
    col = K.density_vector(graph_half, graphs.complete_graph(2).encode(), 4)
    states = K.level_states(graph_half, 4)
    for state, value in zip(states, col):
        g = graphs.parse_graph(state)
        assert value == graphs.graph_density(graphs.complete_graph(2), g)


def test_eta_theta_inversion(perm_third):
    for i in range(1, 7):
        for j in range(i, 7):
            total = sum(
                K.eta_coeff(perm_third, i, k) * K.theta_coeff(perm_third, k, j)
                for k in range(i, j + 1)
            )
            assert total == (1 if i == j else 0)
    assert K.theta_coeff(perm_third, 1, 5) == 1


def test_eigenvalue_formula(perm_third):
    assert K.eigenvalue(perm_third, 1, 4) == 1
    assert K.eigenvalue(perm_third, 2, 4) == F(9, 10)
    assert K.eigenvalue(perm_third, 3, 4) == F(7, 10)
    assert K.eigenvalue(perm_third, 4, 4) == F(2, 5)


def test_eigenfunctions_and_inversion(perm_third):
    n = 4
    t = K.updown_operator(perm_third, n)
    for s in K.level_states(perm_third, 2):
        h = K.eigenfunction(perm_third, s, n)
        th = t.apply(h)
        lam = K.eigenvalue(perm_third, 2, n)
        assert th == tuple(lam * v for v in h)
    # densities are recovered from eigenfunctions via the theta inversion
    for s in K.level_states(perm_third, 3):
        assert K.density_from_eigen(perm_third, s, n) == K.density_vector(
            perm_third, s, n
        )


def test_spectrum_report_small(perm_third, graph_half):
    rep = K.spectrum_report(perm_third, 3)
    assert [line.multiplicity for line in rep] == [1, 1, 4]
    assert [line.eigenvalue for line in rep] == [1, F(5, 6), F(1, 2)]
    assert all(line.eigen_identity_checked and line.rank_checked for line in rep)
    rep_g = K.spectrum_report(graph_half, 3)
    assert [line.multiplicity for line in rep_g] == [1, 1, 2]


def test_stationary_oracles(perm_third, graph_half):
    m3 = dict(zip(K.level_states(perm_third, 3), K.stationary(perm_third, 3)))
    assert m3["321"] == F(4, 9)
    for s in ("123", "132", "213", "231", "312"):
        assert m3[s] == F(1, 9)

    perm_half = permutations.chain(F(1, 2))
    m4 = dict(zip(K.level_states(perm_half, 4), K.stationary(perm_half, 4)))
    assert m4["1234"] == F(1, 8)
    assert m4["2134"] == F(1, 16)
    assert m4["4321"] == F(1, 8)
    assert m4["2413"] == 0
    assert m4["3142"] == 0
    assert sum(1 for v in m4.values() if v) == 22

    m2 = dict(zip(K.level_states(graphs.chain(F(1, 3)), 2),
                  K.stationary(graphs.chain(F(1, 3)), 2)))
    assert m2[graphs.empty_graph(2).encode()] == F(1, 3)
    assert m2[graphs.complete_graph(2).encode()] == F(2, 3)

    g4 = dict(zip(K.level_states(graph_half, 4), K.stationary(graph_half, 4)))
    assert g4[graphs.empty_graph(4).encode()] == F(1, 8)
    assert g4[graphs.complete_graph(4).encode()] == F(1, 8)
    assert g4[graphs.parse_graph("C4").encode()] == F(1, 24)
    assert g4[graphs.path_graph(4).encode()] == 0
    assert sum(g4.values()) == 1


def test_stationary_invariance(perm_third):
    for n in (2, 3):
        m = K.stationary(perm_third, n)
        t = K.updown_operator(perm_third, n)
        assert t.left_apply(m) == m
        u = K.build_up_kernel(perm_third, n)
        assert u.left_apply(m) == K.stationary(perm_third, n + 1)


def test_triangular_action(perm_third):
    for s in ("12", "21", "231", "2413"):
        assert K.triangular_action_check(perm_third, s, 4)


def test_verification_report_passes(perm_third, graph_half):
    for spec in (perm_third, graph_half):
        report = K.verification_report(spec, 3)
        assert report["all_passed"], report
        names = {c["name"] for c in report["checks"]}
        assert {
            "row_stochastic", "commutation", "extended_commutation",
            "stationarity", "eigen_relations", "triangular_action",
        } <= names


def test_verification_report_cap(perm_third):
    with pytest.raises(LevelCapError):
        K.verification_report(perm_third, 6)
