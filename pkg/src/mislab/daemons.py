"""Scheduler policies: which activable nodes fire in the next transition.

The genuinely worst-case adversary is not computable, so the adversarial
kinds here are heuristics; bounds that hold against any daemon hold against
them in particular. Fair kinds carry a bound F: no node stays continuously
activable for more than F consecutive transitions without being activated.
"""

from __future__ import annotations

from typing import Sequence

from .engine import Configuration, Move, Rule
from .errors import ConfigError, EngineError, ScriptError
from .graphs import Graph

DAEMON_KINDS = ("synchronous", "aged_fair", "random_subset",
                "singleton", "conflict_greedy", "scripted")


def _moves_for(nodes, activable) -> set[Move]:
    return {Move(u, activable[u][0]) for u in nodes}


class Daemon:
    """Base policy. fair_bound is F for fair kinds, None for adversarial ones."""

    kind = "base"
    fair_bound: int | None = None

    def select(self, g: Graph, cfg: Configuration,
               activable: dict[int, tuple[Rule, ...]],
               ages: Sequence[int], rng) -> set[Move]:
        raise NotImplementedError


class SynchronousDaemon(Daemon):
    """Every activable node fires, every transition."""

    kind = "synchronous"
    fair_bound = 1

    def select(self, g, cfg, activable, ages, rng):
        return _moves_for(activable, activable)


class AgedFairDaemon(Daemon):
    """Random subsets, but any node whose age reaches F-1 is forcibly included."""

    kind = "aged_fair"

    def __init__(self, fairness: int):
        if fairness < 1:
            raise ConfigError(f"fairness bound must be >= 1, got {fairness}")
        self.fair_bound = fairness

    def select(self, g, cfg, activable, ages, rng):
        chosen = []
        for u in sorted(activable):
            if ages[u] >= self.fair_bound - 1 or rng.random() < 0.5:
                chosen.append(u)
        if not chosen:
            chosen = [rng.choice(sorted(activable))]
        return _moves_for(chosen, activable)


class RandomSubsetDaemon(Daemon):
    """Each activable node independently with the given density; redrawn if empty."""

    kind = "random_subset"

    def __init__(self, density: float = 0.5):
        if not (0.0 < density <= 1.0):
            raise ConfigError(f"density must be in (0,1], got {density}")
        self.density = density

    def select(self, g, cfg, activable, ages, rng):
        nodes = sorted(activable)
        for _ in range(10_000):
            chosen = [u for u in nodes if rng.random() < self.density]
            if chosen:
                return _moves_for(chosen, activable)
        raise EngineError("random subset selection failed to produce a node")


class SingletonDaemon(Daemon):
    """One node per transition, round-robin over indices, skipping inactive ones."""

    kind = "singleton"

    def __init__(self):
        self._cursor = 0

    def select(self, g, cfg, activable, ages, rng):
        for offset in range(g.n):
            u = (self._cursor + offset) % g.n
            if u in activable:
                self._cursor = (u + 1) % g.n
                return _moves_for([u], activable)
        raise EngineError("singleton daemon called with nothing activable")


class ConflictGreedyDaemon(Daemon):
    """Prefers adjacent activable nodes with equal s-values, to force candidacy
    collisions and simultaneous withdrawals, then pads randomly."""

    kind = "conflict_greedy"

    def select(self, g, cfg, activable, ages, rng):
        s = cfg.s
        core = [u for u in sorted(activable)
                if any(v in activable and s[v] == s[u] for v in g.adjacency[u])]
        in_core = set(core)
        chosen = list(core)
        for u in sorted(activable):
            if u not in in_core and rng.random() < 0.5:
                chosen.append(u)
        if not chosen:
            chosen = [rng.choice(sorted(activable))]
        return _moves_for(chosen, activable)


class ScriptedDaemon(Daemon):
    """Replays an explicit list of move sets; fails if a move is not enabled."""

    kind = "scripted"

    def __init__(self, script: Sequence[Sequence[tuple[int, Rule]]]):
        self._script = [list(step) for step in script]
        self._next = 0

    def select(self, g, cfg, activable, ages, rng):
        if self._next >= len(self._script):
            raise ScriptError("scripted daemon ran out of transitions")
        step = self._script[self._next]
        self._next += 1
        moves = set()
        for node, rule in step:
            if node not in activable or rule not in activable[node]:
                raise ScriptError(
                    f"scripted move ({node},{rule.value}) not enabled "
                    f"at transition {self._next}")
            moves.add(Move(node, rule))
        if not moves:
            raise ScriptError(f"scripted transition {self._next} is empty")
        return moves


def make_daemon(kind: str, n: int, *, fairness: int | None = None,
                density: float = 0.5, script=None) -> Daemon:
    """Fresh policy instance for one trial. fairness defaults to n."""
    if kind == "synchronous":
        return SynchronousDaemon()
    if kind == "aged_fair":
        return AgedFairDaemon(fairness if fairness is not None else n)
    if kind == "random_subset":
        return RandomSubsetDaemon(density)
    if kind in ("singleton", "singleton_roundrobin_adversarial"):
        return SingletonDaemon()
    if kind == "conflict_greedy":
        return ConflictGreedyDaemon()
    if kind == "scripted":
        if script is None:
            raise ConfigError("scripted daemon needs a script")
        return ScriptedDaemon(script)
    raise ConfigError(f"unknown daemon kind {kind!r}; expected one of {DAEMON_KINDS}")
