"""Execution core: configurations, transitions, round accounting, seeded randomness.

Semantics fixed here, shared by every run:
  - guards are evaluated against the pre-transition configuration; commands
    write into a fresh one (simultaneous activation);
  - one Bernoulli draw per executed probabilistic rule, consumed in ascending
    node order within a transition, so a seed fully determines an execution.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple, Sequence

from .errors import ConfigError, EngineError, ScriptError
from .graphs import Graph

_MASK64 = (1 << 64) - 1


class Rule(enum.Enum):
    """Rule identifiers across both algorithms, plus the faulty-node marker."""

    REFRESH = "refresh"
    TRY_CANDIDACY = "candidacy?"
    WITHDRAW = "withdrawal"
    CANDIDACY = "candidacy"
    TRY_WITHDRAW = "withdrawal?"
    BYZ = "byz"


_RULE_BY_VALUE = {r.value: r for r in Rule}


def rule_from_name(name: str) -> Rule:
    try:
        return _RULE_BY_VALUE[name]
    except KeyError:
        raise ConfigError(f"unknown rule name {name!r}") from None


class Move(NamedTuple):
    node: int
    rule: Rule


@dataclass(frozen=True)
class Configuration:
    """Per-node local state: s flags, and x counters when the algorithm uses them.

    Values are unconstrained on purpose: runs must recover from anything.
    """

    s: tuple[bool, ...]
    x: tuple[int, ...] | None = None

    def top_count(self) -> int:
        return sum(1 for v in self.s if v)


def derive_seed(master_seed: int, index: int) -> int:
    """Fixed splitting rule (splitmix64 finalizer) giving one stream per trial."""
    z = (master_seed + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


class RngStream:
    """Seeded random stream; identical seed means identical draw sequence."""

    def __init__(self, seed: int):
        self.seed = seed
        self.position = 0
        self._rng = random.Random(seed)

    def bernoulli(self, p: float) -> int:
        """1 with probability p, else 0."""
        self.position += 1
        return 1 if self._rng.random() < p else 0

    def random(self) -> float:
        self.position += 1
        return self._rng.random()

    def randint(self, lo: int, hi: int) -> int:
        self.position += 1
        return self._rng.randint(lo, hi)

    def choice(self, seq: Sequence):
        self.position += 1
        return seq[self._rng.randrange(len(seq))]


class FixedDraws:
    """Stands in for RngStream when a script dictates every random outcome."""

    def __init__(self, outcomes: Iterable[int]):
        self._queue = deque(outcomes)

    def bernoulli(self, p: float) -> int:
        if not self._queue:
            raise ScriptError("scripted draw sequence exhausted")
        return self._queue.popleft()


def enabled_rules(algo, g: Graph, cfg: Configuration, u: int) -> tuple[Rule, ...]:
    """Rules whose guard holds on a non-faulty node u."""
    return algo.enabled_rules(g, cfg, u)


def activable_map(algo, g: Graph, cfg: Configuration,
                  byz: frozenset[int] = frozenset()) -> dict[int, tuple[Rule, ...]]:
    """Enabled rules per activable node; faulty nodes are always activable."""
    out = {}
    for u in range(g.n):
        if u in byz:
            out[u] = (Rule.BYZ,)
        else:
            rules = algo.enabled_rules(g, cfg, u)
            if rules:
                out[u] = rules
    return out


def validate_move_set(algo, g: Graph, cfg: Configuration, moves: Iterable[Move],
                      byz_strategies: dict | None = None) -> tuple[Move, ...]:
    """Check move-set invariants and return the moves sorted by node.

    Violations are engine errors: daemons must only emit valid sets.
    """
    ordered = sorted(moves, key=lambda m: (m.node, m.rule.value))
    if not ordered:
        raise EngineError("move set must be nonempty")
    nodes = [m.node for m in ordered]
    if len(set(nodes)) != len(nodes):
        raise EngineError(f"move set targets a node twice: {ordered}")
    byz_strategies = byz_strategies or {}
    for node, rule in ordered:
        if not (0 <= node < g.n):
            raise EngineError(f"move on node {node} outside graph of size {g.n}")
        if rule is Rule.BYZ:
            if node not in byz_strategies:
                raise EngineError(f"byz move on non-faulty node {node}")
        elif node in byz_strategies:
            raise EngineError(f"faulty node {node} may not execute algorithm rules")
        elif rule not in algo.enabled_rules(g, cfg, node):
            raise EngineError(f"rule {rule.value} not enabled on node {node}")
    return tuple(ordered)


def apply_transition(algo, g: Graph, cfg: Configuration, moves: Iterable[Move],
                     rng, byz_strategies: dict | None = None,
                     ) -> tuple[Configuration, tuple[int | None, ...]]:
    """Execute a valid move set simultaneously and return (next config, draws).

    Draws align with the node-sorted move tuple; None for deterministic rules
    and faulty-node actions.
    """
    ordered = validate_move_set(algo, g, cfg, moves, byz_strategies)
    s = list(cfg.s)
    x = list(cfg.x) if cfg.x is not None else None
    draws: list[int | None] = []
    for node, rule in ordered:
        if rule is Rule.BYZ:
            new_s, new_x = byz_strategies[node].act(g, cfg, node, rng)
            draws.append(None)
        else:
            p = algo.rule_probability(g, cfg, node, rule)
            draw = rng.bernoulli(p) if p is not None else None
            draws.append(draw)
            new_s, new_x = algo.apply(g, cfg, node, rule, draw)
        s[node] = new_s
        if x is not None and new_x is not None:
            x[node] = new_x
    return Configuration(tuple(s), tuple(x) if x is not None else None), tuple(draws)


def is_stable(algo, g: Graph, cfg: Configuration,
              byz: frozenset[int] = frozenset()) -> bool:
    """True iff no node is activable. Meaningless with faulty nodes present."""
    if byz:
        raise ConfigError("stability is undefined while Byzantine nodes exist: "
                          "they are always activable")
    return all(not algo.enabled_rules(g, cfg, u) for u in range(g.n))


class RoundTracker:
    """Round accounting: a round ends once every node was activated at least
    once or was non-activable in some configuration of the round. Faulty nodes
    are never non-activable, so only activation satisfies them."""

    def __init__(self, n: int, byz: frozenset[int] = frozenset()):
        self.n = n
        self.byz = byz
        self.rounds_completed = 0
        self.transitions_in_round = 0
        self._satisfied = [False] * n

    def advance(self, activable_before: Iterable[int], moved: Iterable[int],
                activable_after: Iterable[int]) -> bool:
        """Account one transition; True when it closes the current round."""
        before = set(activable_before)
        after = set(activable_after)
        moved = set(moved)
        self.transitions_in_round += 1
        for u in range(self.n):
            if self._satisfied[u]:
                continue
            if u in moved:
                self._satisfied[u] = True
            elif u not in self.byz and (u not in before or u not in after):
                self._satisfied[u] = True
        if all(self._satisfied):
            self.rounds_completed += 1
            self.transitions_in_round = 0
            self._satisfied = [False] * self.n
            return True
        return False

    @property
    def rounds_elapsed(self) -> int:
        """Completed rounds, counting a started partial round as one."""
        return self.rounds_completed + (1 if self.transitions_in_round else 0)


@dataclass(frozen=True)
class TraceStep:
    moves: tuple[Move, ...]
    draws: tuple[int | None, ...]
    config: Configuration


@dataclass
class Trace:
    """Full record of one execution, sufficient to replay it exactly."""

    initial: Configuration
    steps: list[TraceStep] = field(default_factory=list)
    round_ends: list[int] = field(default_factory=list)
    seed: int | None = None

    @property
    def final(self) -> Configuration:
        return self.steps[-1].config if self.steps else self.initial

    def total_moves(self) -> int:
        return sum(len(step.moves) for step in self.steps)


def _config_fields(cfg: Configuration) -> str:
    s_text = "".join("1" if v else "0" for v in cfg.s)
    if cfg.x is None:
        return s_text
    return s_text + " " + ",".join(str(v) for v in cfg.x)


def dump_trace(trace: Trace, fh: IO[str]) -> None:
    """One line per transition: index, node:rule:draw entries, s-vector as
    0/1 (plus comma-separated x-vector when present). Line 0 carries the
    initial configuration with a '-' move field."""
    fh.write(f"0 - {_config_fields(trace.initial)}\n")
    for i, step in enumerate(trace.steps, start=1):
        entries = ",".join(
            f"{m.node}:{m.rule.value}:{'-' if d is None else d}"
            for m, d in zip(step.moves, step.draws)
        )
        fh.write(f"{i} {entries} {_config_fields(step.config)}\n")


def run_script(algo, g: Graph, cfg: Configuration,
               steps: Sequence[Sequence[tuple[int, Rule, int | None]]]) -> Trace:
    """Replay an explicit schedule with forced draws.

    Each step lists (node, rule, draw) with draw None for deterministic rules.
    A move that is not enabled fails the script.
    """
    trace = Trace(initial=cfg)
    tracker = RoundTracker(g.n)
    for step in steps:
        moves = [Move(node, rule) for node, rule, _ in step]
        forced = []
        for node, rule, d in sorted(step, key=lambda e: e[0]):
            if rule not in algo.enabled_rules(g, cfg, node):
                raise ScriptError(
                    f"scripted move ({node},{rule.value}) not enabled at "
                    f"transition {len(trace.steps) + 1}")
            if algo.rule_probability(g, cfg, node, rule) is not None:
                if d not in (0, 1):
                    raise ScriptError(
                        f"move ({node},{rule.value}) needs a scripted 0/1 draw")
                forced.append(d)
        # draw feeder must follow the engine's ascending-node order
        feeder = FixedDraws(forced)
        before_act = set(activable_map(algo, g, cfg))
        cfg_after, draws = apply_transition(algo, g, cfg, moves, feeder)
        after_act = set(activable_map(algo, g, cfg_after))
        sorted_moves = tuple(sorted(moves, key=lambda m: m.node))
        trace.steps.append(TraceStep(sorted_moves, draws, cfg_after))
        if tracker.advance(before_act, (m.node for m in sorted_moves), after_act):
            trace.round_ends.append(len(trace.steps))
        cfg = cfg_after
    return trace


INITIAL_PRESETS = ("random", "all_bot", "all_top", "adversarial_x")


def initial_configuration(g: Graph, uses_x: bool, preset: str, rng) -> Configuration:
    """Starting configuration per preset.

    "random" covers the arbitrary-start requirement: s uniform per node and
    x uniform over [0, n]. The fixed presets give reproducible corner starts;
    all_bot/all_top use degree-correct x, adversarial_x plants x = n everywhere.
    """
    n = g.n
    if preset == "random":
        s = tuple(rng.random() < 0.5 for _ in range(n))
        x = tuple(rng.randint(0, n) for _ in range(n)) if uses_x else None
        return Configuration(s, x)
    if preset == "all_bot":
        return Configuration((False,) * n,
                             tuple(g.degree(u) for u in range(n)) if uses_x else None)
    if preset == "all_top":
        return Configuration((True,) * n,
                             tuple(g.degree(u) for u in range(n)) if uses_x else None)
    if preset == "adversarial_x":
        s = tuple(rng.random() < 0.5 for _ in range(n))
        return Configuration(s, (n,) * n if uses_x else None)
    raise ConfigError(f"unknown initial preset {preset!r}; "
                      f"expected one of {INITIAL_PRESETS}")
