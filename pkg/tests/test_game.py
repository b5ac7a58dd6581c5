from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from aspire.errors import InputError, StructureError
from aspire.game import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    Game,
    better_replies,
    better_reply_path,
    equivalent_states,
    game_from_dict,
    game_to_dict,
    harmless_better_replies,
    is_coordination_game,
    is_symmetric_game,
    payoff_constants,
    pure_nash_set,
    sk_partition,
    utility,
)
from aspire.games import ChainWarning, CommonPoolSpec, common_pool, stag_hunt, successful_set

from conftest import random_cpg, small_games
from oracles import brute_cond_a, brute_cond_b, brute_cond_c, brute_nash, brute_symmetric, payoff_dict

A, B = 0, 1


def pennies() -> Game:
    return Game((2, 2), [[1, -1], [-1, 1], [-1, 1], [1, -1]], name="pennies")


def table2_game():
    # costs 0 < 0.1 < 0.2, bonuses chosen so the ordering chain holds
    return common_pool(CommonPoolSpec(2, (0.0, 0.1, 0.2), (0.5, 0.4, 0.3)))


# -- construction and lookup ----------------------------------------------


def test_stag_hunt_utilities():
    g = stag_hunt()
    assert utility(g, (A, A)) == (4, 4)
    assert utility(g, (A, B)) == (0, 2)
    assert utility(g, (B, A)) == (2, 0)
    assert utility(g, (B, B)) == (3, 3)


def test_single_profile_game_returns_stored_payoff():
    g = Game((1, 1, 1), [[0.5, -2.0, 7.0]])
    assert utility(g, (0, 0, 0)) == (0.5, -2.0, 7.0)
    assert better_replies(g, (0, 0, 0), 1) == set()


@pytest.mark.parametrize("bad", [(2, 0), (0, -1), (0,), (0, 0, 0)])
def test_out_of_range_action_rejected(bad):
    with pytest.raises(InputError):
        utility(stag_hunt(), bad)


def test_payoff_table_shape_and_finiteness_checked():
    with pytest.raises(InputError):
        Game((2, 2), np.zeros((3, 2)))
    with pytest.raises(InputError):
        Game((2, 2), [[0, 0], [0, np.nan], [0, 0], [0, 0]])
    with pytest.raises(InputError):
        Game((2,), [[0.0], [1.0]])


@given(small_games())
def test_index_joint_roundtrip(g):
    for k, a in enumerate(g.profiles()):
        assert g.index(a) == k
        assert g.joint(k) == a


def test_document_roundtrip_and_unknown_keys():
    g = stag_hunt()
    doc = game_to_dict(g)
    h = game_from_dict(doc)
    assert np.array_equal(h.table, g.table) and h.labels == g.labels
    with pytest.raises(InputError):
        game_from_dict({**doc, "payofs": []})
    with pytest.raises(InputError):
        game_from_dict({k: v for k, v in doc.items() if k != "version"})


# -- better replies and Nash ----------------------------------------------


def test_better_replies_examples():
    g = stag_hunt()
    assert better_replies(g, (A, B), 0) == {B}
    assert better_replies(g, (A, A), 0) == set()


@given(small_games())
def test_better_replies_exclude_current_action(g):
    for a in g.profiles():
        for i in range(g.n):
            br = better_replies(g, a, i)
            assert a[i] not in br
            assert br <= set(range(g.action_counts[i]))


def test_nash_examples():
    ns = pure_nash_set(stag_hunt())
    assert ns.profiles == {(A, A), (B, B)} and ns.strict == {(A, A), (B, B)}
    assert len(pure_nash_set(pennies())) == 0
    const = Game((2, 3, 2), np.ones((12, 3)))
    ns = pure_nash_set(const)
    assert len(ns) == 12 and not ns.strict


@settings(max_examples=300, suppress_health_check=[HealthCheck.too_slow])
@given(small_games(max_players=3, max_actions=4))
def test_nash_matches_brute_force(g):
    nash, strict = brute_nash(g.action_counts, payoff_dict(g))
    ns = pure_nash_set(g)
    assert ns.profiles == nash
    assert ns.strict == strict


def test_nash_exhaustive_on_4x4x4():
    rng = np.random.default_rng(5)
    for _ in range(25):
        g = Game((4, 4, 4), rng.integers(-2, 3, size=(64, 3)).astype(float))
        nash, strict = brute_nash(g.action_counts, payoff_dict(g))
        assert pure_nash_set(g).profiles == nash
        assert pure_nash_set(g).strict == strict


# -- coordination ---------------------------------------------------------


def test_stag_hunt_is_strict_coordination_game():
    rep = is_coordination_game(stag_hunt(), {(A, A)})
    assert rep.is_strict_coordination
    # one player leaves (B, B) for A and both end up worse off
    tilde, order = rep.cond_c.witnesses[(B, B)]
    assert sorted(order) == [0, 1]
    assert tilde[order[0]] == A and tilde[order[1]] == B
    assert all(x < 3 for x in utility(stag_hunt(), tilde))


def test_stag_hunt_both_equilibria_desirable_makes_c_vacuous():
    rep = is_coordination_game(stag_hunt(), {(A, A), (B, B)})
    assert rep.cond_a.passed and rep.cond_b.passed and rep.cond_c.passed
    assert "vacuous" in rep.cond_c.detail


@pytest.mark.parametrize("abar", [{(0, 0)}, {(0, 1)}, {(1, 0)}, {(1, 1)}])
def test_pennies_fails_condition_b(abar):
    rep = is_coordination_game(pennies(), abar)
    assert rep.cond_b.status == FAIL
    assert not rep.is_coordination


def test_condition_c_budget_is_reported_inconclusive():
    rep = is_coordination_game(stag_hunt(), {(A, A)}, budget=0)
    assert rep.cond_c.status == INCONCLUSIVE
    assert rep.status == INCONCLUSIVE


@settings(max_examples=200, suppress_health_check=[HealthCheck.too_slow])
@given(small_games(max_players=3, max_actions=3, values=(0, 3)), st.data())
def test_coordination_conditions_match_brute_force(g, data):
    ks = data.draw(st.sets(st.integers(0, g.size - 1), min_size=1, max_size=3))
    abar = {g.joint(k) for k in ks}
    u = payoff_dict(g)
    nash, _ = brute_nash(g.action_counts, u)
    rep = is_coordination_game(g, abar)
    assert rep.cond_a.passed == brute_cond_a(g.action_counts, u, abar)
    assert rep.cond_b.passed == brute_cond_b(g.action_counts, u, abar, nash)
    assert rep.cond_c.passed == brute_cond_c(g.action_counts, u, abar, nash)


def test_better_reply_path_examples():
    g = stag_hunt()
    assert better_reply_path(g, (A, B), {(A, A)}) == [(0, B)]
    assert better_reply_path(g, (A, A), {(A, A)}) == []
    t2 = table2_game()
    path = better_reply_path(t2, (1, 1), successful_set(t2))
    assert 1 <= len(path) <= 2
    a = [1, 1]
    for i, b in path:
        a[i] = b
    assert tuple(a) in successful_set(t2)


def test_better_reply_path_stuck_profile_named():
    with pytest.raises(StructureError, match=r"\(0,0\)|\(0,1\)|\(1,0\)|\(1,1\)"):
        better_reply_path(pennies(), (0, 0), {(0, 1)})


def test_better_reply_tie_break_prefers_largest_gain():
    # from (0,0) player 0 gains 1 by moving to 1 and 3 by moving to 2
    pay = np.zeros((9, 2))
    g0 = Game((3, 3), pay)
    pay[g0.index((1, 0))] = (1, 0)
    pay[g0.index((2, 0))] = (3, 0)
    pay[g0.index((0, 1))] = (0, 3)
    g = Game((3, 3), pay)
    assert harmless_better_replies(g, (0, 0))[0] == (0, 2, 3.0)
    assert harmless_better_replies(g, (0, 0))[1] == (1, 1, 3.0)


@settings(max_examples=100, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(2, 3), st.integers(2, 4), st.data())
def test_paths_increase_welfare_and_terminate(n, m, data):
    g = random_cpg(n, m, data)
    abar = successful_set(g)
    nash = pure_nash_set(g)
    for a0 in g.profiles():
        path = better_reply_path(g, a0, abar)
        assert len(path) <= g.size - 1
        a = list(a0)
        welfare = g.u(a).sum()
        for i, b in path:
            a[i] = b
            w = g.u(a).sum()
            assert w > welfare
            welfare = w
        assert tuple(a) in abar or tuple(a) in nash


# -- symmetry and equivalence ---------------------------------------------


def test_symmetry_examples():
    assert is_symmetric_game(stag_hunt())
    pay = stag_hunt().table.copy()
    pay[0, 0] = 5
    res = is_symmetric_game(Game((2, 2), pay))
    assert not res and res.counterexample[0] == (A, A)


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow])
@given(small_games(max_players=3, max_actions=3, values=(0, 1)))
def test_symmetry_matches_brute_force(g):
    assert bool(is_symmetric_game(g)) == brute_symmetric(g.action_counts, payoff_dict(g))


def test_equivalence_examples():
    g = stag_hunt()
    assert equivalent_states(g, (A, B), (B, A))
    assert not equivalent_states(g, (A, A), (B, B))
    with pytest.warns(ChainWarning):
        cpg = common_pool(CommonPoolSpec(2, (0, 0.1, 0.2, 0.3), (0.8,) * 4))
    assert equivalent_states(cpg, (2, 0), (0, 2))
    with pytest.raises(InputError):
        equivalent_states(g, (A, A), (A, A))


@given(small_games(max_players=3, max_actions=3, values=(0, 2)))
def test_equivalence_is_symmetric(g):
    profs = list(g.profiles())
    for a, b in itertools.combinations(profs, 2):
        assert equivalent_states(g, a, b) == equivalent_states(g, b, a)


# -- constants and layers -------------------------------------------------


def test_constants_stag_hunt():
    k = payoff_constants(stag_hunt(), {(A, A)})
    assert (k.delta_min, k.delta_max, k.delta_star) == (1.0, 4.0, 2.0)
    assert not k.h1_holds and k.h2_holds
    assert k.zeta_bound_h1 is None and k.zeta_bound_h2 == pytest.approx(1 / 16)


def test_constants_common_pool_reference_values():
    with pytest.warns(ChainWarning):
        g = common_pool(CommonPoolSpec(2, (0, 0.1, 0.2, 0.3), (0.8,) * 4))
    k = payoff_constants(g, successful_set(g))
    assert k.delta_star == pytest.approx(0.1)
    assert k.delta_min == pytest.approx(0.6)
    assert k.h1_holds and k.zeta_bound_h1 == pytest.approx(0.25)


def test_constants_h2_when_desirable_profiles_maximize_everyone():
    rng = np.random.default_rng(0)
    pay = rng.uniform(0, 1, size=(9, 2))
    pay[4] = (2.0, 2.0)
    k = payoff_constants(Game((3, 3), pay), {(1, 1)})
    assert k.h2_holds


def test_constants_reject_full_desirable_set():
    g = stag_hunt()
    with pytest.raises(InputError):
        payoff_constants(g, set(g.profiles()))


def test_sk_partition_stag_hunt():
    layers = sk_partition(stag_hunt(), {(A, A)})
    assert layers == [frozenset({(A, A), (B, B)}), frozenset({(A, B), (B, A)})]


def test_sk_partition_single_layer_when_everything_terminal():
    g = stag_hunt()
    assert sk_partition(g, set(g.profiles())) == [frozenset(g.profiles())]


def test_sk_partition_table2():
    g = table2_game()
    layers = sk_partition(g, successful_set(g))
    assert layers[0] == successful_set(g) and len(layers[0]) == 6
    assert layers[1] == {(0, 0), (1, 1), (2, 2)}


def test_sk_partition_names_orphan():
    with pytest.raises(StructureError):
        sk_partition(pennies(), {(0, 1)})


@settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
@given(st.integers(2, 3), st.integers(2, 4), st.data())
def test_layers_partition_every_profile(n, m, data):
    g = random_cpg(n, m, data)
    layers = sk_partition(g, successful_set(g))
    seen = set()
    for layer in layers:
        assert not (seen & layer)
        seen |= layer
    assert len(seen) == g.size
    k = payoff_constants(g, successful_set(g))
    assert k.delta_min > 0 and k.delta_max >= k.delta_min


def test_status_constants_are_distinct():
    assert len({PASS, FAIL, INCONCLUSIVE}) == 3
