"""Extensive-form game abstraction shared by all concrete games.

Every game is two-player zero-sum. Chance is a distinguished actor whose
moves are ordinary action ids with explicit probabilities, so traversal and
sampling treat all nodes alike. Simultaneous moves are sequentialized: player
0 acts first and player 1's infostate key does not reveal that action.
"""

from __future__ import annotations

import numbers
from abc import ABC, abstractmethod
from dataclasses import dataclass

from ..exceptions import IllegalActionError, PreconditionError

CHANCE = -1
TERMINAL = -2
PLAYERS = (0, 1)


@dataclass(frozen=True)
class GameState:
    """Immutable game state; ``history`` holds every action id, chance included."""

    history: tuple = ()


class Game(ABC):
    """Rules engine for one two-player zero-sum extensive-form game.

    Subclasses implement the underscored hooks; the public methods add the
    precondition checks so each game only encodes its rules.
    """

    name: str = ""
    num_players = 2

    def __init__(self, **params):
        # concrete games with parameters pass them up; parameterless ones take none
        self.params = dict(params)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in sorted(self.params.items()))
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash(repr(self))

    # -- hooks ---------------------------------------------------------------

    @abstractmethod
    def initial_state(self) -> GameState: ...

    @abstractmethod
    def is_terminal(self, state: GameState) -> bool: ...

    @abstractmethod
    def _current_player(self, state: GameState) -> int: ...

    @abstractmethod
    def _action_names(self, state: GameState) -> list[str]: ...

    @abstractmethod
    def _next(self, state: GameState, action: int) -> GameState: ...

    @abstractmethod
    def _returns(self, state: GameState) -> tuple[float, float]: ...

    @abstractmethod
    def _infostate_key(self, state: GameState, player: int) -> str: ...

    def _chance_probs(self, state: GameState) -> list[float]:
        n = len(self._action_names(state))
        return [1.0 / n] * n

    # -- public API ------------------------------------------------------------

    def current_player(self, state: GameState) -> int:
        """Acting identity: 0, 1 or ``CHANCE``."""
        if self.is_terminal(state):
            raise PreconditionError(f"{self.name}: current_player of terminal state {state.history}")
        return self._current_player(state)

    def legal_actions(self, state: GameState) -> list[int]:
        return list(range(len(self.action_names(state))))

    def action_names(self, state: GameState) -> list[str]:
        if self.is_terminal(state):
            raise PreconditionError(f"{self.name}: no actions at terminal state {state.history}")
        return self._action_names(state)

    def chance_outcomes(self, state: GameState) -> list[tuple[int, float]]:
        if self.current_player(state) != CHANCE:
            raise PreconditionError(f"{self.name}: not a chance node: {state.history}")
        return list(enumerate(self._chance_probs(state)))

    def apply(self, state: GameState, action: int) -> GameState:
        names = self.action_names(state)
        if not isinstance(action, numbers.Integral) or isinstance(action, bool) or not 0 <= action < len(names):
            player = self._current_player(state)
            where = "chance" if player == CHANCE else self._infostate_key(state, player)
            raise IllegalActionError(
                f"{self.name}: action {action!r} is not legal at {where!r} (legal: {names})"
            )
        return self._next(state, int(action))

    def returns(self, state: GameState) -> tuple[float, float]:
        if not self.is_terminal(state):
            raise PreconditionError(f"{self.name}: returns of non-terminal state {state.history}")
        return self._returns(state)

    def infostate_key(self, state: GameState, player: int) -> str:
        if player not in PLAYERS:
            raise PreconditionError(f"infostate keys exist only for players 0 and 1, got {player}")
        return self._infostate_key(state, player)

    def play(self, actions) -> GameState:
        """Apply a sequence of action ids from the initial state."""
        state = self.initial_state()
        for a in actions:
            state = self.apply(state, a)
        return state
