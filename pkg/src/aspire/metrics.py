"""Occupancy, common-pool and network statistics of learning trajectories.

Each report has two entry points: a function over an explicit stream of
``(t, alpha)`` or ``(t, alpha, rho)`` items, and an :class:`Observer` that
builds the same report from the runner's occupancy tallies without storing
the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InputError
from .game import Game
from .games import CommonPoolGame, NetworkGame, inverse_total_distance, payoff_dominant_networks, success_owner
from .learning import Observer, RunResult


def _index_of(game: Game, a) -> int:
    if isinstance(a, (int, np.integer)):
        if not 0 <= a < game.size:
            raise InputError(f"joint-action index {a} out of range")
        return int(a)
    return game.index(a)


# -- occupancy ------------------------------------------------------------


@dataclass
class OccupancyReport:
    total_steps: int
    counts: np.ndarray
    game: Game
    window: tuple | None = None

    @property
    def freq(self) -> np.ndarray:
        if self.total_steps == 0:
            return np.zeros(len(self.counts))
        return self.counts / self.total_steps

    def as_dict(self) -> dict:
        f = self.freq
        return {self.game.joint(int(k)): float(f[k]) for k in np.flatnonzero(self.counts)}

    def mass(self, profiles: Iterable) -> float:
        f = self.freq
        return float(sum(f[_index_of(self.game, a)] for a in profiles))

    def top(self, k: int = 10) -> list[tuple]:
        order = np.argsort(-self.counts, kind="stable")[:k]
        return [(self.game.joint(int(j)), float(self.freq[j])) for j in order if self.counts[j] > 0]

    def merge(self, other: "OccupancyReport") -> "OccupancyReport":
        return OccupancyReport(self.total_steps + other.total_steps, self.counts + other.counts, self.game, None)


def occupancy(stream: Iterable, game: Game, window: tuple | None = None) -> OccupancyReport:
    """Fraction of steps spent at each joint action, optionally over ``[start, end)``."""
    counts = np.zeros(game.size, dtype=np.int64)
    total = 0
    for item in stream:
        t, a = item[0], item[1]
        if window is not None and not window[0] <= t < window[1]:
            continue
        counts[_index_of(game, a)] += 1
        total += 1
    return OccupancyReport(total, counts, game, window)


# -- common pool ----------------------------------------------------------


@dataclass
class CommonPoolReport:
    total_steps: int
    success: np.ndarray  # per-agent fraction of steps with a strictly highest level
    collision: float

    @property
    def fairness_gap(self) -> float:
        if len(self.success) < 2:
            return 0.0
        return float(self.success.max() - self.success.min())


def _owners(game: CommonPoolGame) -> np.ndarray:
    return np.array([-1 if (w := success_owner(a)) is None else w for a in game.profiles()])


def common_pool_from_counts(game: CommonPoolGame, counts: np.ndarray) -> CommonPoolReport:
    total = int(counts.sum())
    owners = _owners(game)
    if total == 0:
        return CommonPoolReport(0, np.zeros(game.n), 0.0)
    success = np.array([counts[owners == i].sum() for i in range(game.n)]) / total
    return CommonPoolReport(total, success, float(counts[owners == -1].sum() / total))


def common_pool_frequencies(stream: Iterable, game: CommonPoolGame) -> CommonPoolReport:
    if not isinstance(game, CommonPoolGame):
        raise InputError("common-pool frequencies need a game built by common_pool")
    counts = np.zeros(game.size, dtype=np.int64)
    for item in stream:
        a = item[1]
        if not isinstance(a, (int, np.integer)) and len(a) != game.n:
            raise InputError(f"joint action {a} does not match a {game.n}-player game")
        counts[_index_of(game, a)] += 1
    return common_pool_from_counts(game, counts)


# -- network --------------------------------------------------------------


class _DistanceTable:
    """Per-profile inverse total distance, filled in as profiles are visited."""

    def __init__(self, game: NetworkGame):
        self.game = game
        self.values = np.zeros((game.size, game.n))
        self.filled = np.zeros(game.size, dtype=bool)

    def _fill(self, ks) -> None:
        for k in ks:
            self.values[k] = inverse_total_distance(self.game.graph(self.game.joint(int(k))))
            self.filled[k] = True

    def __getitem__(self, k: int) -> np.ndarray:
        if not self.filled[k]:
            self._fill((k,))
        return self.values[k]

    def average(self, counts: np.ndarray) -> np.ndarray:
        total = counts.sum()
        if total == 0:
            return np.zeros(self.game.n)
        self._fill(np.flatnonzero((counts > 0) & ~self.filled))
        return counts @ self.values / total


@dataclass
class NetworkReport:
    total_steps: int
    mean_inverse_distance: np.ndarray  # running average at the end of the run
    wheel_frequency: float
    window_wheel_frequency: float | None = None
    series: list = field(default_factory=list)  # (t, running-average itd, instantaneous itd, rho)

    def final_rho(self) -> np.ndarray | None:
        return self.series[-1][3] if self.series and self.series[-1][3] is not None else None


def network_series(stream: Iterable, game: NetworkGame, stride: int = 1000) -> NetworkReport:
    """Running-average inverse total distance and subsampled aspirations."""
    if not isinstance(game, NetworkGame):
        raise InputError("network statistics need a game built by network_formation")
    table = _DistanceTable(game)
    dominant = {game.index(a) for a in payoff_dominant_networks(game)}
    acc = np.zeros(game.n)
    total = wheel = 0
    series = []
    for item in stream:
        t, a = item[0], item[1]
        rho = np.asarray(item[2], dtype=float) if len(item) > 2 else None
        k = _index_of(game, a)
        inst = table[k]
        if t % stride == 0:
            running = acc / total if total else np.zeros(game.n)
            series.append((t, running, inst, rho))
        acc += inst
        total += 1
        wheel += k in dominant
    mean = acc / total if total else np.zeros(game.n)
    return NetworkReport(total, mean, wheel / total if total else 0.0, None, series)


# -- observers ------------------------------------------------------------


class OccupancyObserver(Observer):
    def __init__(self):
        self.report: OccupancyReport | None = None
        self.window_report: OccupancyReport | None = None

    def finish(self, result: RunResult) -> None:
        self.report = OccupancyReport(result.horizon, result.counts, result.game)
        if result.window is not None:
            lo, hi = result.window
            self.window_report = OccupancyReport(hi - lo, result.window_counts, result.game, result.window)


class CommonPoolObserver(Observer):
    def __init__(self, game: CommonPoolGame):
        if not isinstance(game, CommonPoolGame):
            raise InputError("common-pool observer needs a game built by common_pool")
        self.game = game
        self.report: CommonPoolReport | None = None
        self.window_report: CommonPoolReport | None = None

    def finish(self, result: RunResult) -> None:
        if result.game is not self.game:
            raise InputError("observer attached to a run on a different game")
        self.report = common_pool_from_counts(self.game, result.counts)
        if result.window_counts is not None:
            self.window_report = common_pool_from_counts(self.game, result.window_counts)


class NetworkObserver(Observer):
    def __init__(self, game: NetworkGame, stride: int = 1000):
        if not isinstance(game, NetworkGame):
            raise InputError("network observer needs a game built by network_formation")
        self.game = game
        self.stride = stride
        self.table = _DistanceTable(game)
        self.dominant = np.array(sorted(game.index(a) for a in payoff_dominant_networks(game)), dtype=np.int64)
        self.series: list = []
        self.report: NetworkReport | None = None

    def snapshot(self, t, action_index, rho, counts) -> None:
        self.series.append((t, self.table.average(counts), self.table[action_index], rho))

    def finish(self, result: RunResult) -> None:
        total = result.horizon
        wheel = result.counts[self.dominant].sum() / total if total else 0.0
        win = None
        if result.window_counts is not None:
            span = result.window[1] - result.window[0]
            win = result.window_counts[self.dominant].sum() / span if span else 0.0
        self.report = NetworkReport(total, self.table.average(result.counts), float(wheel), win, self.series)


class TraceObserver(Observer):
    """Subsampled ``(t, joint-action index, aspiration vector)`` records."""

    def __init__(self, stride: int = 1000):
        self.stride = stride
        self.records: list = []

    def snapshot(self, t, action_index, rho, counts) -> None:
        self.records.append((t, action_index, rho))


class PurityObserver(Observer):
    """Share of sampled steps at which the state sits near a pure-strategy state.

    A snapshot counts as near-pure when every aspiration is within ``tol`` of
    the payoff its agent currently receives. Sampling every ``stride`` steps
    keeps the cost independent of the horizon.
    """

    def __init__(self, game: Game, tol: float, stride: int = 100):
        if tol < 0:
            raise InputError("tol must be non-negative")
        self.game = game
        self.tol = tol
        self.stride = stride
        self.near = 0
        self.samples = 0

    def snapshot(self, t, action_index, rho, counts) -> None:
        gap = np.abs(rho - self.game.table[action_index])
        self.near += bool(np.all(gap <= self.tol))
        self.samples += 1

    @property
    def off_pure(self) -> float:
        return 1.0 - self.near / self.samples if self.samples else 0.0
