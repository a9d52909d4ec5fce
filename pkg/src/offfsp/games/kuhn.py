"""Kuhn Poker and the Large Kuhn Poker variant.

Both deal one card each from {J, Q, K}; chance first deals player 0's card
(3 outcomes, ids index the deck J, Q, K), then player 1's (2 outcomes, ids
index the remaining cards in rank order).

Kuhn action order: Pass=0, Bet=1 (Pass doubles as check/fold, Bet as
bet/call). Ante 1, bet size 1.

Large Kuhn: each player starts with 5 in the pot. The legal list keeps the
global order Fold, Check, Call, Raise restricted to what is legal: facing a
raise it is [Fold, Call, Raise], otherwise [Check, Raise]. A raise matches the
outstanding amount and adds one more chip. Raising is only allowed during the
first ``raise_steps`` betting actions (default 8).
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import CHANCE, Game, GameState

CARDS = "JQK"


@dataclass(frozen=True)
class KuhnState(GameState):
    cards: tuple = ()
    bets: str = ""


def _deal(cards, action):
    remaining = [c for c in range(3) if c not in cards]
    return cards + (remaining[action],)


def _showdown(cards, stake):
    v = float(stake) if cards[0] > cards[1] else -float(stake)
    return (v, -v)


class KuhnPoker(Game):
    name = "kuhn"

    def __init__(self):
        super().__init__()

    def initial_state(self):
        return KuhnState()

    def is_terminal(self, state):
        return state.bets in ("pp", "bp", "bb", "pbp", "pbb")

    def _current_player(self, state):
        if len(state.cards) < 2:
            return CHANCE
        return len(state.bets) % 2

    def _action_names(self, state):
        if len(state.cards) < 2:
            return [CARDS[c] for c in range(3) if c not in state.cards]
        return ["Pass", "Bet"]

    def _next(self, state, action):
        history = state.history + (action,)
        if len(state.cards) < 2:
            return KuhnState(history, _deal(state.cards, action), "")
        return KuhnState(history, state.cards, state.bets + "pb"[action])

    def _returns(self, state):
        bets = state.bets
        if bets == "bp":
            return (1.0, -1.0)
        if bets == "pbp":
            return (-1.0, 1.0)
        return _showdown(state.cards, 2 if bets.endswith("bb") else 1)

    def _infostate_key(self, state, player):
        card = CARDS[state.cards[player]] if len(state.cards) > player else "?"
        return f"p{player}|{card}|{state.bets}"


@dataclass(frozen=True)
class LargeKuhnState(GameState):
    cards: tuple = ()
    bets: str = ""
    contrib: tuple = (5, 5)
    done: bool = False


class LargeKuhnPoker(Game):
    """Kuhn Poker with a bigger pot, check/call distinction and re-raising."""

    name = "large_kuhn"
    ACTIONS = ("Fold", "Check", "Call", "Raise")
    _LETTER = {"Fold": "f", "Check": "k", "Call": "c", "Raise": "r"}

    def __init__(self, initial_pot=5, raise_steps=8):
        super().__init__(initial_pot=initial_pot, raise_steps=raise_steps)
        self.initial_pot = initial_pot
        self.raise_steps = raise_steps

    def initial_state(self):
        return LargeKuhnState(contrib=(self.initial_pot, self.initial_pot))

    def is_terminal(self, state):
        return state.done

    def _current_player(self, state):
        if len(state.cards) < 2:
            return CHANCE
        return len(state.bets) % 2

    def _action_names(self, state):
        if len(state.cards) < 2:
            return [CARDS[c] for c in range(3) if c not in state.cards]
        me = len(state.bets) % 2
        facing = state.contrib[1 - me] > state.contrib[me]
        names = ["Fold", "Call"] if facing else ["Check"]
        if len(state.bets) < self.raise_steps:
            names.append("Raise")
        return names

    def _next(self, state, action):
        history = state.history + (action,)
        if len(state.cards) < 2:
            return LargeKuhnState(history, _deal(state.cards, action), "", state.contrib)
        name = self._action_names(state)[action]
        me = len(state.bets) % 2
        contrib = list(state.contrib)
        done = False
        if name == "Fold":
            done = True
        elif name == "Check":
            done = state.bets.endswith("k")
        elif name == "Call":
            contrib[me] = contrib[1 - me]
            done = True
        else:
            contrib[me] = contrib[1 - me] + 1
        return LargeKuhnState(history, state.cards, state.bets + self._LETTER[name], tuple(contrib), done)

    def _returns(self, state):
        if state.bets.endswith("f"):
            folder = (len(state.bets) - 1) % 2
            v = float(state.contrib[folder])
            return (-v, v) if folder == 0 else (v, -v)
        return _showdown(state.cards, state.contrib[0])

    def _infostate_key(self, state, player):
        card = CARDS[state.cards[player]] if len(state.cards) > player else "?"
        return f"p{player}|{card}|{state.bets}"
