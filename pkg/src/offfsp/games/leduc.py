"""Leduc Poker, the standard two-round research variant.

Deck of six cards J, J, Q, Q, K, K (card id // 2 is the rank). Each player
antes 1 and receives one private card, then a betting round, a public card
and a second betting round. Bets are 2 in round one and 4 in round two with at
most two raises per round; player 0 opens both rounds.

Action order: Fold, Call, Raise restricted to legal moves. Fold is only legal
when facing a raise; Call doubles as check. Chance ids index the undealt
cards in ascending card-id order.

Infostate keys carry ranks only: suits never affect payoffs, so histories
that differ only by suit are strategically identical and share a key.
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import CHANCE, Game, GameState

RANKS = "JQK"


@dataclass(frozen=True)
class LeducState(GameState):
    private: tuple = ()
    public: int | None = None
    bets: tuple = ("",)
    contrib: tuple = (1, 1)
    done: bool = False


class LeducPoker(Game):
    name = "leduc"

    def __init__(self, bet_sizes=(2, 4), max_raises=2):
        super().__init__(bet_sizes=list(bet_sizes), max_raises=max_raises)
        self.bet_sizes = tuple(bet_sizes)
        self.max_raises = max_raises

    def initial_state(self):
        return LeducState()

    def is_terminal(self, state):
        return state.done

    def _awaiting_public(self, state):
        return len(state.bets) == 2 and state.public is None

    def _current_player(self, state):
        if len(state.private) < 2 or self._awaiting_public(state):
            return CHANCE
        return len(state.bets[-1]) % 2

    def _undealt(self, state):
        used = set(state.private)
        if state.public is not None:
            used.add(state.public)
        return [c for c in range(6) if c not in used]

    def _action_names(self, state):
        if self._current_player(state) == CHANCE:
            return [RANKS[c // 2] + "sh"[c % 2] for c in self._undealt(state)]
        me = len(state.bets[-1]) % 2
        facing = state.contrib[1 - me] > state.contrib[me]
        names = ["Fold", "Call"] if facing else ["Call"]
        if state.bets[-1].count("r") < self.max_raises:
            names.append("Raise")
        return names

    def _next(self, state, action):
        history = state.history + (action,)
        if self._current_player(state) == CHANCE:
            card = self._undealt(state)[action]
            if len(state.private) < 2:
                return LeducState(history, state.private + (card,), None, state.bets, state.contrib)
            return LeducState(history, state.private, card, state.bets, state.contrib)

        name = self._action_names(state)[action]
        me = len(state.bets[-1]) % 2
        contrib = list(state.contrib)
        round_bets = state.bets[-1] + name[0].lower()
        bets = state.bets[:-1] + (round_bets,)
        done = False
        if name == "Fold":
            done = True
        elif name == "Call":
            facing = state.contrib[1 - me] > state.contrib[me]
            contrib[me] = contrib[1 - me]
            if facing or round_bets == "cc":
                if len(bets) == 2:
                    done = True
                else:
                    bets = bets + ("",)
        else:
            contrib[me] = contrib[1 - me] + self.bet_sizes[len(bets) - 1]
        return LeducState(history, state.private, state.public, bets, tuple(contrib), done)

    def _returns(self, state):
        last = state.bets[-1]
        if last.endswith("f"):
            folder = (len(last) - 1) % 2
            v = float(state.contrib[folder])
            return (-v, v) if folder == 0 else (v, -v)
        r0, r1, rp = state.private[0] // 2, state.private[1] // 2, state.public // 2
        if r0 == rp:
            winner = 0
        elif r1 == rp:
            winner = 1
        elif r0 != r1:
            winner = 0 if r0 > r1 else 1
        else:
            return (0.0, 0.0)
        v = float(state.contrib[1 - winner])
        return (v, -v) if winner == 0 else (-v, v)

    def _infostate_key(self, state, player):
        own = RANKS[state.private[player] // 2] if len(state.private) > player else "?"
        public = RANKS[state.public // 2] if state.public is not None else "-"
        return f"p{player}|{own}|{public}|{'/'.join(state.bets)}"
