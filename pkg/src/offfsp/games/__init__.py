"""Concrete games and the ``make_game`` factory."""

from __future__ import annotations

from ..exceptions import ValidationError
from .base import CHANCE, PLAYERS, TERMINAL, Game, GameState
from .kuhn import KuhnPoker, LargeKuhnPoker
from .leduc import LeducPoker
from .oshi_zumo import OshiZumo
from .rps import AsymmetricRPS, RockPaperScissors

GAMES = {
    "rps": RockPaperScissors,
    "rps_asym": AsymmetricRPS,
    "kuhn": KuhnPoker,
    "large_kuhn": LargeKuhnPoker,
    "leduc": LeducPoker,
    "oshi_zumo": OshiZumo,
}


def make_game(name, **params):
    """Build a game by name; parameters default to the published settings."""
    try:
        cls = GAMES[name]
    except KeyError:
        raise ValidationError(
            f"unknown game {name!r}; supported games: {', '.join(sorted(GAMES))}"
        ) from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {name!r}: {exc}") from None


__all__ = [
    "CHANCE",
    "GAMES",
    "PLAYERS",
    "TERMINAL",
    "AsymmetricRPS",
    "Game",
    "GameState",
    "KuhnPoker",
    "LargeKuhnPoker",
    "LeducPoker",
    "OshiZumo",
    "RockPaperScissors",
    "make_game",
]
