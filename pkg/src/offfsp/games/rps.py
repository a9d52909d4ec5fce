"""Rock-Paper-Scissors and its asymmetric Rock2 variant.

Action order (ids): Rock=0, Paper=1, Scissors=2; in ``rps_asym`` player 1
additionally has Rock2=3, which pays exactly like Rock.
"""

from __future__ import annotations

from .base import Game, GameState

ROCK, PAPER, SCISSORS, ROCK2 = range(4)
NAMES = ["Rock", "Paper", "Scissors", "Rock2"]
# beats[a] is the move that a defeats
_BEATS = {ROCK: SCISSORS, PAPER: ROCK, SCISSORS: PAPER}


def _canonical(a):
    return ROCK if a == ROCK2 else a


def rps_payoff(a0, a1):
    """Payoff of player 0 when the players choose ``a0`` and ``a1``."""
    a0, a1 = _canonical(a0), _canonical(a1)
    if a0 == a1:
        return 0.0
    return 1.0 if _BEATS[a0] == a1 else -1.0


class RockPaperScissors(Game):
    name = "rps"
    _extra_p1 = False

    def __init__(self):
        super().__init__()

    def initial_state(self):
        return GameState(())

    def is_terminal(self, state):
        return len(state.history) >= 2

    def _current_player(self, state):
        return len(state.history)

    def _action_names(self, state):
        if len(state.history) == 1 and self._extra_p1:
            return NAMES[:4]
        return NAMES[:3]

    def _next(self, state, action):
        return GameState(state.history + (action,))

    def _returns(self, state):
        v = rps_payoff(*state.history)
        return (v, -v) if v else (0.0, 0.0)

    def _infostate_key(self, state, player):
        # Neither player observes the other's throw.
        return f"p{player}"


class AsymmetricRPS(RockPaperScissors):
    name = "rps_asym"
    _extra_p1 = True
