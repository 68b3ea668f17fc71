"""Behaviors for Byzantine nodes.

A faulty node never runs algorithm rules; when the daemon activates it, its
strategy rewrites the node's own s (and x) arbitrarily. Strategies only read
local state, so they stay within the model's information access.
"""

from __future__ import annotations

from .engine import Configuration
from .errors import ConfigError
from .graphs import Graph

#: x values are capped machine integers; the candidacy formula only ever puts
#: them in a probability denominator, so any cap is safe.
DEFAULT_X_CAP = 2**32 - 1

STRATEGY_KINDS = ("silent", "always_top", "oscillate", "degree_liar", "uniform_random")


def _x_of(cfg: Configuration, u: int) -> int | None:
    return cfg.x[u] if cfg.x is not None else None


class Silent:
    """Keeps its state unchanged; disruption by pure scheduling pressure."""

    kind = "silent"

    def act(self, g: Graph, cfg: Configuration, u: int, rng):
        return cfg.s[u], _x_of(cfg, u)


class AlwaysTop:
    """Claims set membership forever, pinning neighbors out of candidacy."""

    kind = "always_top"

    def act(self, g: Graph, cfg: Configuration, u: int, rng):
        return True, _x_of(cfg, u)


class Oscillate:
    """Toggles its s-flag on every activation."""

    kind = "oscillate"

    def act(self, g: Graph, cfg: Configuration, u: int, rng):
        return (not cfg.s[u]), _x_of(cfg, u)


class DegreeLiar:
    """Advertises a huge degree to depress neighbors' candidacy probability."""

    kind = "degree_liar"

    def __init__(self, x_cap: int = DEFAULT_X_CAP):
        self.x_cap = x_cap

    def act(self, g: Graph, cfg: Configuration, u: int, rng):
        return False, self.x_cap


class UniformRandom:
    """Fresh uniform s and x on every activation."""

    kind = "uniform_random"

    def __init__(self, x_cap: int = DEFAULT_X_CAP):
        self.x_cap = x_cap

    def act(self, g: Graph, cfg: Configuration, u: int, rng):
        s = rng.random() < 0.5
        x = rng.randint(0, self.x_cap) if cfg.x is not None else None
        return s, x


def make_strategy(kind: str, x_cap: int = DEFAULT_X_CAP):
    """Fresh per-trial strategy instance."""
    if kind == "silent":
        return Silent()
    if kind == "always_top":
        return AlwaysTop()
    if kind == "oscillate":
        return Oscillate()
    if kind == "degree_liar":
        return DegreeLiar(x_cap)
    if kind == "uniform_random":
        return UniformRandom(x_cap)
    raise ConfigError(
        f"unknown Byzantine strategy {kind!r}; expected one of {STRATEGY_KINDS}")
