"""Correctness predicates, a brute-force enumeration oracle, and the color
ledger that attributes every move of an anonymous run to the batch of
simultaneous candidacies it descends from."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable

from .engine import Configuration, Move, Rule, Trace
from .errors import ConfigError, InvariantViolation
from .graphs import Graph, safe_zone


def is_independent(g: Graph, nodes: Iterable[int]) -> bool:
    chosen = set(nodes)
    return all(v not in chosen for u in chosen for v in g.adjacency[u])


def locally_alone_set(g: Graph, cfg: Configuration) -> frozenset[int]:
    """Nodes that are candidates with an all-clear neighborhood.

    These are settled: no rule of either algorithm can ever dislodge them,
    so this set is the independent set under construction.
    """
    s = cfg.s
    alone = frozenset(
        u for u in range(g.n)
        if s[u] and not any(s[v] for v in g.adjacency[u])
    )
    assert is_independent(g, alone)
    return alone


def safe_alone_set(g: Graph, byz: frozenset[int], cfg: Configuration) -> frozenset[int]:
    """Locally alone nodes beyond direct Byzantine influence (distance > 1)."""
    result = locally_alone_set(g, cfg) & safe_zone(g, byz, 1)
    assert is_independent(g, result)
    return result


def is_legitimate(g: Graph, byz: frozenset[int], cfg: Configuration,
                  zone1: frozenset[int] | None = None,
                  zone2: frozenset[int] | None = None) -> bool:
    """The containment target: the safe alone set is a maximal independent
    set of (distance-2 safe zone) union itself.

    Concretely: (i) independent in G, and (ii) every ground-set node outside
    it has a neighbor inside it. Zones can be passed in to avoid re-running
    BFS when the Byzantine set is fixed.
    """
    if zone1 is None:
        zone1 = safe_zone(g, byz, 1)
    if zone2 is None:
        zone2 = safe_zone(g, byz, 2)
    s = cfg.s
    alone = frozenset(
        u for u in zone1
        if s[u] and not any(s[v] for v in g.adjacency[u])
    )
    if not is_independent(g, alone):
        return False
    for u in zone2:
        if u not in alone and not any(v in alone for v in g.adjacency[u]):
            return False
    return True


def is_candidate_set(g: Graph, cfg: Configuration, nodes: Iterable[int]) -> bool:
    """Candidate set: all members up, and every up neighbor of a member is
    itself a member."""
    group = set(nodes)
    s = cfg.s
    for u in group:
        if not s[u]:
            return False
        for v in g.adjacency[u]:
            if s[v] and v not in group:
                return False
    return True


MAX_ORACLE_NODES = 16


def all_maximal_independent_sets(g: Graph) -> set[frozenset[int]]:
    """Exhaustive subset scan; refused above MAX_ORACLE_NODES nodes."""
    if g.n > MAX_ORACLE_NODES:
        raise ConfigError(
            f"brute-force enumeration limited to {MAX_ORACLE_NODES} nodes, got {g.n}")
    out = set()
    for mask in range(1 << g.n):
        members = [u for u in range(g.n) if mask >> u & 1]
        if not is_independent(g, members):
            continue
        chosen = set(members)
        maximal = all(
            any(v in chosen for v in g.adjacency[u])
            for u in range(g.n) if u not in chosen
        )
        if maximal:
            out.add(frozenset(members))
    return out


@dataclass
class ColorRecord:
    """Lifetime accounting for one color: the batch of nodes that came up
    together at transition `color` (or were up initially, for color 0)."""

    color: int
    members: frozenset[int]
    died: int | None = None
    withdrawal_moves: int = 0
    success: bool | None = None
    tainted: set[int] = field(default_factory=set)

    @property
    def size(self) -> int:
        return len(self.members)


class ColorLedger:
    """Instrumentation for anonymous runs.

    Tracks per transition i: the freshly-up set A_i, the color of every
    executed candidacy/try-withdrawal move (candidacy moves take their own
    index; a try-withdrawal takes the index since when its node has been
    continuously up), which colors still have possible withdrawal moves and
    by which nodes, and, at each color's death, whether some member it never
    shared with another color ended up settled.
    """

    def __init__(self, g: Graph, algo, initial: Configuration):
        if algo.uses_x:
            raise ConfigError("color instrumentation applies to anonymous runs only")
        self.g = g
        self.algo = algo
        self.index = 0
        self._top_since: list[int | None] = [
            0 if up else None for up in initial.s]
        self.fresh_sets: dict[int, frozenset[int]] = {}
        self.records: dict[int, ColorRecord] = {}
        self.move_colors: list[tuple[int, ...]] = []
        self.live_history: list[dict[int, frozenset[int]]] = []
        a0 = frozenset(u for u in range(g.n) if initial.s[u])
        if a0:
            self.fresh_sets[0] = a0
            self.records[0] = ColorRecord(0, a0)
        self._scan_possible_moves(initial)

    def record(self, cfg_before: Configuration, moves: tuple[Move, ...],
               cfg_after: Configuration) -> None:
        """Account one executed transition. Moves must be node-sorted."""
        self.index += 1
        i = self.index
        fresh = frozenset(
            u for u in range(self.g.n) if not cfg_before.s[u] and cfg_after.s[u])
        candidates = frozenset(m.node for m in moves if m.rule is Rule.CANDIDACY)
        if fresh != candidates:
            raise InvariantViolation(
                f"transition {i}: fresh-up set {sorted(fresh)} does not match "
                f"candidacy movers {sorted(candidates)}")
        if fresh:
            if not is_candidate_set(self.g, cfg_after, fresh):
                raise InvariantViolation(
                    f"transition {i}: fresh-up set {sorted(fresh)} is not a "
                    "candidate set")
            self.fresh_sets[i] = fresh
            self.records[i] = ColorRecord(i, fresh)

        colors = []
        for node, rule in moves:
            if rule is Rule.CANDIDACY:
                color = i
            elif rule is Rule.TRY_WITHDRAW:
                color = self._top_since[node]
                if color is None:
                    raise InvariantViolation(
                        f"transition {i}: withdrawal on node {node} that was "
                        "not up")
                record = self.records.get(color)
                if record is None or node not in record.members:
                    raise InvariantViolation(
                        f"transition {i}: move on node {node} resolved to "
                        f"color {color} it does not belong to")
                record.withdrawal_moves += 1
            else:
                raise InvariantViolation(
                    f"transition {i}: rule {rule.value} has no color")
            colors.append(color)
            for other in self.records.values():
                if (other.died is None and other.color != color
                        and node in other.members):
                    other.tainted.add(node)
        self.move_colors.append(tuple(colors))

        for u in range(self.g.n):
            if cfg_after.s[u] and not cfg_before.s[u]:
                self._top_since[u] = i
            elif not cfg_after.s[u]:
                self._top_since[u] = None
        self._scan_possible_moves(cfg_after)

    def _scan_possible_moves(self, cfg: Configuration) -> None:
        """Recompute, from scratch, which colors still have possible
        withdrawal moves, then settle the accounts of colors that just lost
        their last one."""
        i = self.index
        possible: dict[int, set[int]] = {}
        for u in range(self.g.n):
            if Rule.TRY_WITHDRAW in self.algo.enabled_rules(self.g, cfg, u):
                color = self._top_since[u]
                record = self.records.get(color)
                if record is None:
                    raise InvariantViolation(
                        f"index {i}: possible withdrawal on node {u} has no "
                        f"color record for {color}")
                if record.died is not None:
                    raise InvariantViolation(
                        f"index {i}: color {color} died at {record.died} but "
                        f"node {u} can still move with it")
                possible.setdefault(color, set()).add(u)
        live = {color: frozenset(nodes) for color, nodes in possible.items()}
        self.live_history.append(live)
        settled = None
        for record in self.records.values():
            if record.died is None and record.color not in live:
                record.died = i
                if settled is None:
                    settled = locally_alone_set(self.g, cfg)
                record.success = any(
                    u in settled for u in record.members - record.tainted)

    @property
    def live_colors(self) -> frozenset[int]:
        return frozenset(self.live_history[-1])

    def all_dead(self) -> bool:
        return all(r.died is not None for r in self.records.values())

    def report_rows(self) -> list[tuple]:
        rows = []
        for color in sorted(self.records):
            r = self.records[color]
            rows.append((color, r.size, color, r.died, r.withdrawal_moves,
                         r.success))
        return rows

    def write_report(self, fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ("color", "size", "born", "died", "withdrawal_moves", "success"))
        for row in self.report_rows():
            writer.writerow(row)


def ledger_from_trace(g: Graph, algo, trace: Trace) -> ColorLedger:
    """Run the full instrumentation over an already-recorded execution."""
    ledger = ColorLedger(g, algo, trace.initial)
    cfg = trace.initial
    for step in trace.steps:
        ledger.record(cfg, step.moves, step.config)
        cfg = step.config
    return ledger
