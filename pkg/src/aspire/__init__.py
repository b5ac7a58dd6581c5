"""Aspiration learning in finite games.

Game construction and structural checks, the learning process with a
compiled or pure-Python kernel, estimation of the equivalent chain over
pure-strategy states, and trajectory statistics.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import AspireError, BudgetError, EstimationError, InputError, StructureError
from .game import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    Game,
    better_replies,
    better_reply_path,
    equivalent_states,
    game_from_dict,
    game_to_dict,
    harmless_better_replies,
    is_coordination_game,
    is_symmetric_game,
    payoff_constants,
    pure_nash_set,
    sk_partition,
    utility,
)
from .games import (
    ChainWarning,
    CommonPoolSpec,
    DegenerateGameWarning,
    NetworkSpec,
    common_pool,
    inverse_total_distance,
    is_critically_connected,
    network_formation,
    payoff_dominant_networks,
    stag_hunt,
    successful_set,
)
from .learning import LearnerState, Params, TremblePolicy, absorption_check, make_rng, phi, run, sat, step
from .markov import (
    PhatMatrix,
    ReducibleChainWarning,
    equivalent_pairs,
    estimate_phat,
    fairness_report,
    fw_invariant,
    invariant_distribution,
    pair_stderr,
    pi_stderr,
    pure_states,
    w_graphs,
)
from .metrics import (
    CommonPoolObserver,
    NetworkObserver,
    OccupancyObserver,
    PurityObserver,
    TraceObserver,
    common_pool_frequencies,
    network_series,
    occupancy,
)
