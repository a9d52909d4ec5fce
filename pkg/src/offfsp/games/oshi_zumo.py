"""Oshi-Zumo, a simultaneous coin-bidding game rendered sequentially.

A wrestler starts in the middle of a board with ``2 * size + 1`` cells. Each
round both players secretly bid coins; the higher bidder pushes the wrestler
one cell toward the opponent (player 0 pushes toward higher cells) and both
bids are paid. Ties pay but do not move. The game ends when the wrestler
leaves the board or after ``horizon`` rounds; the player whose opponent's side
holds the wrestler wins 1.

Action ids index the bids ``min_bid..coins`` in ascending order; a player who
cannot afford ``min_bid`` may only bid 0. Player 1's infostate does not
include player 0's pending bid.
"""

from __future__ import annotations

from dataclasses import dataclass

from .base import Game, GameState


@dataclass(frozen=True)
class OshiZumoState(GameState):
    coins: tuple = (0, 0)
    position: int = 0
    rounds: tuple = ()
    pending: int | None = None


class OshiZumo(Game):
    name = "oshi_zumo"

    def __init__(self, coins=4, size=3, horizon=6, min_bid=0):
        super().__init__(coins=coins, size=size, horizon=horizon, min_bid=min_bid)
        self.coins = coins
        self.size = size
        self.horizon = horizon
        self.min_bid = min_bid

    def initial_state(self):
        return OshiZumoState((), (self.coins, self.coins), self.size, (), None)

    def is_terminal(self, state):
        return (
            len(state.rounds) >= self.horizon
            or state.position < 0
            or state.position > 2 * self.size
        )

    def _current_player(self, state):
        return 0 if state.pending is None else 1

    def bids(self, coins):
        if coins < self.min_bid:
            return [0]
        return list(range(self.min_bid, coins + 1))

    def _action_names(self, state):
        player = self._current_player(state)
        return [str(b) for b in self.bids(state.coins[player])]

    def _next(self, state, action):
        player = self._current_player(state)
        bid = self.bids(state.coins[player])[action]
        history = state.history + (action,)
        if player == 0:
            return OshiZumoState(history, state.coins, state.position, state.rounds, bid)
        b0, b1 = state.pending, bid
        step = (b0 > b1) - (b1 > b0)
        coins = (state.coins[0] - b0, state.coins[1] - b1)
        return OshiZumoState(history, coins, state.position + step, state.rounds + ((b0, b1),), None)

    def _returns(self, state):
        if state.position > self.size:
            return (1.0, -1.0)
        if state.position < self.size:
            return (-1.0, 1.0)
        return (0.0, 0.0)

    def _infostate_key(self, state, player):
        past = ",".join(f"{a}-{b}" for a, b in state.rounds)
        return f"p{player}|{past}"
