"""Simulation lab for randomized self-stabilizing maximal-independent-set
algorithms: a state-model engine with pluggable daemons and Byzantine
strategies, correctness predicates, move-attribution instrumentation, and a
trial/sweep experiment harness."""

from .algorithms import AnonymousMIS, ByzantineMIS, candidacy_probability, get_algorithm
from .analysis import (
    ColorLedger,
    all_maximal_independent_sets,
    is_candidate_set,
    is_independent,
    is_legitimate,
    ledger_from_trace,
    locally_alone_set,
    safe_alone_set,
)
from .byzantine import DEFAULT_X_CAP, STRATEGY_KINDS, make_strategy
from .daemons import DAEMON_KINDS, make_daemon
from .engine import (
    Configuration,
    FixedDraws,
    Move,
    RngStream,
    RoundTracker,
    Rule,
    Trace,
    activable_map,
    apply_transition,
    derive_seed,
    dump_trace,
    enabled_rules,
    initial_configuration,
    is_stable,
    run_script,
)
from .errors import ConfigError, EngineError, InvariantViolation, ScriptError
from .graphs import (
    GRAPH_KINDS,
    UNREACHABLE,
    Graph,
    distances_from,
    generate_graph,
    make_graph,
    read_graph,
    safe_zone,
    write_graph,
)
from .harness import (
    RunSpec,
    TrialRecord,
    parse_run_spec,
    reference_replay,
    run_sweep,
    run_trial,
    run_trials,
    spec_hash,
)

__version__ = "0.1.0"
