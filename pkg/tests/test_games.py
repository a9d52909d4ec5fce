import numpy as np
import pytest

from offfsp.exceptions import IllegalActionError, PreconditionError, ValidationError
from offfsp.games import CHANCE, GAMES, make_game
from offfsp.games.rps import PAPER, ROCK, ROCK2, SCISSORS, rps_payoff
from offfsp.tree import get_tree


def test_make_game_rejects_unknown_name():
    with pytest.raises(ValidationError, match="supported games"):
        make_game("chess")


def test_make_game_rejects_unknown_parameter():
    with pytest.raises(ValidationError):
        make_game("kuhn", pot=3)


@pytest.mark.parametrize(
    "a0, a1, expected",
    [(ROCK, SCISSORS, 1.0), (SCISSORS, PAPER, 1.0), (PAPER, ROCK, 1.0), (ROCK, PAPER, -1.0), (ROCK, ROCK, 0.0)],
)
def test_rps_payoffs(a0, a1, expected):
    assert rps_payoff(a0, a1) == expected
    game = make_game("rps")
    assert game.returns(game.play([a0, a1])) == (expected, -expected)


def test_rock2_pays_like_rock():
    game = make_game("rps_asym")
    for a0 in range(3):
        assert game.returns(game.play([a0, ROCK2])) == game.returns(game.play([a0, ROCK]))
    assert game.action_names(game.play([0])) == ["Rock", "Paper", "Scissors", "Rock2"]
    assert game.action_names(game.initial_state()) == ["Rock", "Paper", "Scissors"]


def test_rps_players_do_not_see_each_other():
    game = make_game("rps")
    keys = {game.infostate_key(game.play([a]), 1) for a in range(3)}
    assert keys == {"p1"}


def test_illegal_action_names_infostate_and_legal_moves():
    game = make_game("kuhn")
    state = game.play([0, 0])
    with pytest.raises(IllegalActionError, match=r"p0\|J\|.*Pass"):
        game.apply(state, 2)
    with pytest.raises(IllegalActionError):
        game.apply(state, True)
    assert game.apply(state, np.int64(1)).bets == "b"


def test_terminal_preconditions():
    game = make_game("rps")
    end = game.play([0, 1])
    with pytest.raises(PreconditionError):
        game.current_player(end)
    with pytest.raises(PreconditionError):
        game.returns(game.initial_state())
    with pytest.raises(PreconditionError):
        game.infostate_key(game.initial_state(), CHANCE)


@pytest.mark.parametrize(
    "cards, bets, expected",
    [
        ((2, 0), "pp", 1.0),  # K vs J, checked down
        ((0, 1), "bb", -2.0),  # J vs K (P1 dealt the second remaining card)
        ((1, 0), "bp", 1.0),  # fold to a bet
        ((1, 0), "pbp", -1.0),
        ((2, 1), "pbb", 2.0),
    ],
)
def test_kuhn_returns(cards, bets, expected):
    game = make_game("kuhn")
    state = game.play([cards[0], cards[1]] + ["pb".index(c) for c in bets])
    assert game.returns(state)[0] == expected


def test_kuhn_chance_deals_without_replacement():
    game = make_game("kuhn")
    s = game.apply(game.initial_state(), 1)
    assert game.chance_outcomes(s) == [(0, 0.5), (1, 0.5)]
    assert game.action_names(s) == ["J", "K"]


def test_large_kuhn_raise_window_and_pot():
    game = make_game("large_kuhn")
    s = game.play([2, 0])
    assert game.action_names(s) == ["Check", "Raise"]
    for _ in range(8):
        s = game.apply(s, game.action_names(s).index("Raise"))
    assert "Raise" not in game.action_names(s)
    assert s.contrib == (12, 13)
    s = game.apply(s, game.action_names(s).index("Call"))
    # player 0 holds K, player 1 holds J
    assert game.returns(s) == (13.0, -13.0)


def test_large_kuhn_fold_loses_own_stake():
    game = make_game("large_kuhn")
    s = game.play([0, 1, 1])  # P0 raises with J
    s = game.apply(s, 0)  # P1 folds
    assert game.returns(s) == (5.0, -5.0)


def test_leduc_round_structure():
    game = make_game("leduc")
    s = game.play([0, 2])  # J and Q privately
    assert game.current_player(s) == 0
    assert game.action_names(s) == ["Call", "Raise"]
    s = game.play([0, 2, 1])  # player 0 raises
    assert game.action_names(s) == ["Fold", "Call", "Raise"]
    s = game.apply(s, 2)  # re-raise uses up the two raises
    assert game.action_names(s) == ["Fold", "Call"]
    s = game.apply(s, 1)  # call ends round one
    assert game.current_player(s) == CHANCE
    assert len(game.chance_outcomes(s)) == 4
    assert s.contrib == (5, 5)
    s = game.apply(s, 0)  # public card is the other J
    assert game.infostate_key(s, 0) == "p0|J|J|rrc/"
    assert game.infostate_key(s, 1) == "p1|Q|J|rrc/"
    s = game.play(list(s.history) + [0, 0])  # check, check
    assert game.returns(s) == (5.0, -5.0)


def test_leduc_pair_of_ranks_splits():
    game = make_game("leduc")
    s = game.play([0, 0, 0, 0, 1])  # J(s) and J(h) vs each other
    assert game.returns(game.play(list(s.history) + [0, 0])) == (0.0, 0.0)


def test_oshi_zumo_push_and_payment():
    game = make_game("oshi_zumo")
    s = game.play([3, 1])  # bids 3 vs 1
    assert s.position == 4 and s.coins == (1, 3)
    assert game.infostate_key(s, 1) == "p1|3-1"
    pending = game.apply(s, 1)
    assert game.infostate_key(pending, 1) == "p1|3-1"


def test_oshi_zumo_wins_when_pushed_off():
    game = make_game("oshi_zumo", coins=10, size=1, horizon=5)
    s = game.play([2, 0, 2, 0])
    assert game.is_terminal(s)
    assert game.returns(s) == (1.0, -1.0)


@pytest.mark.parametrize("name", sorted(GAMES))
def test_every_game_is_zero_sum_with_consistent_infostates(name):
    # tree construction checks zero-sum terminals and per-infostate consistency
    game = make_game(name)
    tree = get_tree(game)
    for t in tree.terminals[:: max(1, len(tree.terminals) // 200)]:
        history = []
        node = t
        while tree.parent[node] >= 0:
            history.append(int(tree.action[node]))
            node = tree.parent[node]
        r = game.returns(game.play(history[::-1]))
        assert r[0] + r[1] == 0.0 and r[0] == tree.returns0[t]
    for idx in tree.players:
        assert idx.n_states > 0
        assert len(set(idx.keys)) == idx.n_states


def test_games_compare_by_parameters():
    assert make_game("leduc") == make_game("leduc")
    assert make_game("leduc") != make_game("leduc", max_raises=1)
    assert hash(make_game("leduc")) == hash(make_game("leduc"))
