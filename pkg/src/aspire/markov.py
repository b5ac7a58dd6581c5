"""The equivalent finite chain over pure-strategy states.

A pure-strategy state pairs a joint action with aspirations equal to its
payoffs. Starting from one, a single agent trembles and the unperturbed
process then runs until it settles on some joint action; the distribution
of that landing point is a row of the estimated chain. Its stationary
distribution describes the long-run share of time spent at each profile
when trembles are rare.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from . import kernels
from .errors import BudgetError, EstimationError, InputError
from .game import Game, equivalent_states
from .games import CommonPoolGame, success_owner
from .learning import Params, make_rng

MAX_STATES = 8192


class ReducibleChainWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PureStateIndex:
    game: Game

    def __len__(self) -> int:
        return self.game.size

    def joint(self, s: int) -> tuple:
        return self.game.joint(s)

    def index(self, a) -> int:
        return self.game.index(a)

    def aspiration(self, s: int) -> np.ndarray:
        return self.game.table[s]

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.game.profiles())


def pure_states(game: Game) -> PureStateIndex:
    return PureStateIndex(game)


@dataclass
class PhatMatrix:
    entries: np.ndarray
    stderr: np.ndarray
    samples_per_row: int
    params_used: Params | None = None
    seed: int | None = None
    counts: np.ndarray | None = None
    unresolved: np.ndarray | None = None
    residual: float = 0.0  # bound on the chance a certified sample would still have moved
    steps: int = 0

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.entries)
        self.stderr = np.asarray(self.stderr, dtype=np.float64)

    @classmethod
    def exact(cls, matrix) -> "PhatMatrix":
        m = np.asarray(matrix, dtype=np.float64)
        return cls(m, np.zeros_like(m), 0)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _as_matrix(phat) -> np.ndarray:
    m = phat.entries if isinstance(phat, PhatMatrix) else np.asarray(phat, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"transition matrix must be square, got shape {m.shape}")
    if np.any(m < 0):
        raise InputError("transition probabilities must be non-negative")
    if not np.allclose(m.sum(axis=1), 1.0, atol=1e-9, rtol=0):
        raise InputError("transition matrix rows must sum to 1")
    return m


def _estimate_rows(game: Game, params: Params, rows: Sequence[int], samples: int, seed,
                   max_steps: int, backend: str | None):
    k = kernels.get(backend)
    tb = k.prepare(game.table, np.asarray(game.action_counts, dtype=np.int64), game.strides)
    out = []
    for s in rows:
        counts = np.zeros(game.size, dtype=np.int64)
        unresolved, residual, steps = k.absorb_row(
            tb, np.array(game.joint(s), dtype=np.int64), params.epsilon, params.zeta, params.c_phi,
            params.h, params.rho_lo, params.rho_hi, samples, max_steps, make_rng(seed, s), counts,
        )
        out.append((s, counts, unresolved, residual, steps))
    return out


def estimate_phat(game: Game, params: Params, samples_per_row: int, seed: int,
                  index: PureStateIndex | None = None, max_steps: int = 10**7,
                  max_unresolved: float = 1e-3, workers: int = 1,
                  backend: str | None = None) -> PhatMatrix:
    """Monte-Carlo estimate of the one-tremble landing distribution from every pure state.

    Row ``s`` uses its own random stream derived from ``(seed, s)``, so the
    result does not depend on ``workers``. Samples still moving after
    ``max_steps`` unperturbed steps are counted as unresolved and excluded
    from the row; more than ``max_unresolved`` of them in any row is an error.
    ``params.lam`` is ignored.
    """
    if samples_per_row < 1:
        raise InputError("samples_per_row must be at least 1")
    index = index or pure_states(game)
    if len(index) > MAX_STATES:
        raise BudgetError(f"{len(index)} pure states exceed the cap of {MAX_STATES}")
    params.check(game)
    rows = list(range(game.size))
    if workers > 1:
        chunks = [rows[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(
                _estimate_rows, *zip(*[(game, params, c, samples_per_row, seed, max_steps, backend) for c in chunks])
            )
            results = [r for part in parts for r in part]
    else:
        results = _estimate_rows(game, params, rows, samples_per_row, seed, max_steps, backend)

    size = game.size
    counts = np.zeros((size, size), dtype=np.int64)
    unresolved = np.zeros(size, dtype=np.int64)
    residual, steps = 0.0, 0
    for s, c, u, r, st in results:
        counts[s] = c
        unresolved[s] = u
        residual = max(residual, r)
        steps += st
    bad = np.flatnonzero(unresolved > max_unresolved * samples_per_row)
    if len(bad):
        s = int(bad[0])
        raise EstimationError(
            f"{unresolved[s]} of {samples_per_row} samples from {game.label(game.joint(s))} "
            f"did not settle within {max_steps} steps ({len(bad)} rows affected); raise max_steps"
        )
    resolved = counts.sum(axis=1, keepdims=True)
    entries = counts / resolved
    stderr = np.sqrt(entries * (1 - entries) / resolved)
    return PhatMatrix(entries, stderr, samples_per_row, params, seed, counts, unresolved, residual, steps)


@dataclass
class StationaryDistribution:
    pi: np.ndarray
    residual: float
    method: str = "solve"
    classes: list = field(default_factory=list)  # communicating classes
    closed: list = field(default_factory=list)  # the closed (recurrent) ones

    @property
    def reducible(self) -> bool:
        return len(self.classes) > 1

    @property
    def unique(self) -> bool:
        return len(self.closed) == 1


def communicating_classes(matrix: np.ndarray) -> list[list[int]]:
    n, labels = connected_components(matrix > 0, directed=True, connection="strong")
    return [np.flatnonzero(labels == c).tolist() for c in range(n)]


def closed_classes(matrix: np.ndarray, classes: list[list[int]] | None = None) -> list[list[int]]:
    """Communicating classes with no transition leaving them."""
    classes = communicating_classes(matrix) if classes is None else classes
    out = []
    for c in classes:
        rest = np.ones(len(matrix), dtype=bool)
        rest[c] = False
        if not np.any(matrix[np.ix_(c, np.flatnonzero(rest))] > 0):
            out.append(c)
    return out


def _power(m: np.ndarray, tol: float = 1e-15, maxiter: int = 10**6) -> np.ndarray:
    lazy = 0.5 * (m + np.eye(len(m)))  # aperiodic, same stationary vectors
    pi = np.full(len(m), 1.0 / len(m))
    for _ in range(maxiter):
        nxt = pi @ lazy
        if np.max(np.abs(nxt - pi)) < tol:
            return nxt
        pi = nxt
    return pi


def invariant_distribution(phat, cond_limit: float = 1e12) -> StationaryDistribution:
    """Stationary vector by a dense solve, falling back to power iteration."""
    m = _as_matrix(phat)
    n = len(m)
    classes = communicating_classes(m)
    closed = closed_classes(m, classes)
    if len(closed) > 1:
        warnings.warn(
            f"chain has {len(closed)} closed classes {closed}; the stationary vector is not unique",
            ReducibleChainWarning,
            stacklevel=2,
        )
    a = m.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    method = "solve"
    try:
        if np.linalg.cond(a) > cond_limit:
            raise np.linalg.LinAlgError("ill-conditioned")
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        pi = _power(m)
        method = "power"
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ m - pi)))
    return StationaryDistribution(pi, residual, method, classes, closed)


def pi_stderr(phat: PhatMatrix, pi: np.ndarray, groups: Sequence[Sequence[int]] | None = None,
              weights: np.ndarray | None = None) -> np.ndarray:
    """First-order standard errors of stationary masses from row-sampling noise.

    Each estimated row is a multinomial average; a perturbation ``E`` of the
    matrix moves the stationary vector by ``pi E Z`` with ``Z`` the
    fundamental matrix. ``groups`` gives index sets whose summed mass is of
    interest, ``weights`` an ``(n, k)`` array of linear functionals such as
    the difference of two states; by default every state on its own.
    """
    m = phat.entries
    n = len(m)
    if phat.counts is not None:
        resolved = phat.counts.sum(axis=1).astype(float)
    else:
        resolved = np.full(n, float(phat.samples_per_row))
    if np.any(resolved <= 0):
        raise InputError("standard errors need sampled rows")
    if groups is not None and weights is not None:
        raise InputError("pass groups or weights, not both")
    if groups is not None:
        weights = np.zeros((n, len(groups)))
        for j, g in enumerate(groups):
            weights[list(g), j] = 1.0
    elif weights is None:
        weights = np.eye(n)
    weights = np.asarray(weights, dtype=float).reshape(n, -1)
    z = np.linalg.inv(np.eye(n) - m + np.outer(np.ones(n), pi))
    zg = z @ weights
    # Var_s(row_s . zg_j) = sum_k p_sk zg_kj^2 - (sum_k p_sk zg_kj)^2
    var_rows = m @ zg**2 - (m @ zg) ** 2
    var = (pi**2 / resolved) @ np.clip(var_rows, 0.0, None)
    return np.sqrt(var)


def pair_stderr(phat: PhatMatrix, pi: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Standard error of ``pi[s] - pi[t]`` for each pair, covariance included."""
    w = np.zeros((len(pi), len(pairs)))
    for j, (s, t) in enumerate(pairs):
        w[s, j] += 1.0
        w[t, j] -= 1.0
    return pi_stderr(phat, pi, weights=w)


# -- W-graphs -------------------------------------------------------------


def w_graphs(states: Sequence, w: Iterable, budget: int = 12) -> Iterator[dict]:
    """Every arrow assignment from states outside ``w`` that leads into ``w`` without cycles.

    Yields ``{source: target}`` dicts.
    """
    states = list(states)
    w = set(w)
    if not w or not w <= set(states):
        raise InputError("w must be a non-empty subset of the states")
    free = [s for s in states if s not in w]
    if len(free) > budget:
        raise BudgetError(f"{len(free)} states outside w exceed the enumeration budget of {budget}")
    arrows: dict = {}

    def closes_cycle(src, dst) -> bool:
        x = dst
        while x in arrows:
            x = arrows[x]
            if x == src:
                return True
        return x == src

    def extend(pos: int):
        if pos == len(free):
            yield dict(arrows)
            return
        src = free[pos]
        for dst in states:
            if dst == src or closes_cycle(src, dst):
                continue
            arrows[src] = dst
            yield from extend(pos + 1)
            del arrows[src]

    yield from extend(0)


def fw_invariant(phat, budget: int = 9) -> StationaryDistribution:
    """Stationary vector from sums over in-trees, independent of any linear solve."""
    m = _as_matrix(phat)
    n = len(m)
    if n > budget:
        raise BudgetError(f"{n} states exceed the tree-enumeration budget of {budget}; use invariant_distribution")
    weights = np.zeros(n)
    for s in range(n):
        total = 0.0
        for g in w_graphs(range(n), {s}, budget=budget):
            prod = 1.0
            for src, dst in g.items():
                prod *= m[src, dst]
            total += prod
        weights[s] = total
    if weights.sum() <= 0:
        raise InputError("every in-tree has zero weight; the chain is not irreducible")
    pi = weights / weights.sum()
    classes = communicating_classes(m)
    return StationaryDistribution(pi, float(np.max(np.abs(pi @ m - pi))), "trees", classes, closed_classes(m, classes))


# -- fairness -------------------------------------------------------------


@dataclass
class FairnessReport:
    agent_mass: np.ndarray
    collision_mass: float
    agent_stderr: np.ndarray | None = None
    collision_stderr: float | None = None

    @property
    def max_gap(self) -> float:
        return float(self.agent_mass.max() - self.agent_mass.min())


def success_classes(game: CommonPoolGame) -> tuple[list[list[int]], list[int]]:
    """State indices where each agent succeeds, and the collision states."""
    per_agent: list[list[int]] = [[] for _ in range(game.n)]
    collisions = []
    for s, a in enumerate(game.profiles()):
        w = success_owner(a)
        (collisions if w is None else per_agent[w]).append(s)
    return per_agent, collisions


def fairness_report(pi: StationaryDistribution | np.ndarray, game: CommonPoolGame,
                    phat: PhatMatrix | None = None) -> FairnessReport:
    vec = pi.pi if isinstance(pi, StationaryDistribution) else np.asarray(pi, dtype=float)
    if len(vec) != game.size:
        raise InputError("distribution length differs from the number of pure states")
    per_agent, collisions = success_classes(game)
    mass = np.array([vec[idx].sum() for idx in per_agent])
    report = FairnessReport(mass, float(vec[collisions].sum()))
    if phat is not None and phat.samples_per_row:
        se = pi_stderr(phat, vec, per_agent + [collisions])
        report.agent_stderr, report.collision_stderr = se[:-1], float(se[-1])
    return report


def equivalent_pairs(game: Game) -> list[tuple[int, int]]:
    """All unordered pairs of distinct pure states related by a payoff-consistent transposition."""
    pairs = set()
    for s, a in enumerate(game.profiles()):
        for i in range(game.n):
            for j in range(i + 1, game.n):
                if a[i] == a[j] or a[i] >= game.action_counts[j] or a[j] >= game.action_counts[i]:
                    continue
                b = list(a)
                b[i], b[j] = a[j], a[i]
                if equivalent_states(game, a, b):
                    pairs.add(tuple(sorted((s, game.index(b)))))
    return sorted(pairs)
