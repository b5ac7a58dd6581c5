"""Aspiration learning: the per-step update and a trajectory runner.

Every agent keeps an aspiration level, a fading average of its own payoffs
that is occasionally perturbed ("trembles"). An agent whose payoff meets its
aspiration repeats its action; a dissatisfied agent keeps it only with
probability ``phi(payoff - aspiration)`` and otherwise switches uniformly to
one of its other actions.

Random draws come from a ``numpy.random.Generator`` in a fixed order per
step: in forced-single mode the trembling agent and its tremble first; then,
for each agent in turn, the tremble indicator and value (spontaneous mode,
value only when trembling), the keep/switch uniform, and the replacement
uniform (only when switching).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .errors import AspireError, InputError
from .game import Game


class TremblePolicy(enum.Enum):
    SPONTANEOUS = kernels.SPONTANEOUS  # each agent trembles w.p. lambda
    FORCED_SINGLE = kernels.FORCED  # exactly one uniformly chosen agent trembles
    NONE = kernels.NONE  # unperturbed process

    @classmethod
    def parse(cls, name: str) -> "TremblePolicy":
        try:
            return cls[name.upper().replace("-", "_")]
        except KeyError:
            raise InputError(f"unknown tremble policy {name!r}") from None


@dataclass(frozen=True)
class Params:
    epsilon: float
    lam: float
    zeta: float
    c_phi: float
    h: float
    rho_lo: float
    rho_hi: float

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InputError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.lam <= 1:
            raise InputError(f"lambda must lie in [0, 1], got {self.lam}")
        if not self.zeta > 0:
            raise InputError(f"zeta must be positive, got {self.zeta}")
        if not self.c_phi > 0:
            raise InputError(f"c_phi must be positive, got {self.c_phi}")
        if not 0 < self.h < 1:
            raise InputError(f"h must lie in (0, 1), got {self.h}")
        if not self.rho_lo < self.rho_hi:
            raise InputError("rho_lo must be below rho_hi")

    @classmethod
    def for_game(cls, game: Game, *, epsilon, lam, zeta, c_phi, h, rho_lo=None, rho_hi=None) -> "Params":
        """Build params, bracketing the payoff range by one unit when bounds are omitted."""
        if rho_lo is None:
            rho_lo = float(game.table.min()) - 1.0
        if rho_hi is None:
            rho_hi = float(game.table.max()) + 1.0
        p = cls(epsilon, lam, zeta, c_phi, h, float(rho_lo), float(rho_hi))
        p.check(game)
        return p

    def check(self, game: Game) -> None:
        lo, hi = float(game.table.min()), float(game.table.max())
        if not (self.rho_lo < lo and hi < self.rho_hi):
            raise InputError(
                f"aspiration bounds [{self.rho_lo}, {self.rho_hi}] must strictly bracket "
                f"the payoff range [{lo}, {hi}]"
            )

    def with_(self, **changes) -> "Params":
        return replace(self, **changes)


def phi(z: float, params: Params) -> float:
    """Probability of keeping the current action at payoff-minus-aspiration ``z``."""
    if z >= 0:
        return 1.0
    return max(params.h, 1.0 + params.c_phi * z)


def sat(rho: float, params: Params) -> float:
    return min(max(rho, params.rho_lo), params.rho_hi)


@dataclass(frozen=True)
class LearnerState:
    action: tuple
    aspiration: tuple

    @classmethod
    def pure(cls, game: Game, a: Sequence[int]) -> "LearnerState":
        a = game.check(a)
        return cls(a, tuple(float(x) for x in game.u(a)))

    @classmethod
    def random(cls, game: Game, rng: np.random.Generator) -> "LearnerState":
        a = tuple(int(rng.integers(m)) for m in game.action_counts)
        return cls.pure(game, a)

    def validate(self, game: Game, params: Params | None = None) -> None:
        game.check(self.action)
        if len(self.aspiration) != game.n:
            raise InputError("aspiration vector length differs from the player count")
        if params is not None and any(not params.rho_lo <= r <= params.rho_hi for r in self.aspiration):
            raise InputError("aspiration outside [rho_lo, rho_hi]")


def absorption_check(state: LearnerState, game: Game) -> tuple | None:
    """Return the joint action if no agent is dissatisfied, else None.

    With every aspiration at or below its payoff the unperturbed process never
    changes action again, and aspirations relax geometrically to the payoffs.
    """
    u = game.u(state.action)
    if all(r <= ui for r, ui in zip(state.aspiration, u)):
        return tuple(state.action)
    return None


def make_rng(seed, *spawn_key: int) -> np.random.Generator:
    """Generator for ``seed``; ``spawn_key`` derives independent per-task streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(spawn_key))))


class _Engine:
    """Mutable simulation state bound to one game and one kernel backend."""

    def __init__(self, game: Game, params: Params, policy: TremblePolicy, backend=None):
        self.game = game
        self.params = params
        self.policy = policy
        self.k = kernels.get(backend)
        self.tables = self.k.prepare(game.table, np.asarray(game.action_counts, dtype=np.int64), game.strides)
        self.lam = params.lam if policy is TremblePolicy.SPONTANEOUS else 0.0

    def advance(self, action, rho, n_steps, rng, occ=None):
        p = self.params
        self.k.advance(
            self.tables, action, rho, p.epsilon, self.lam, p.zeta, p.c_phi, p.h,
            p.rho_lo, p.rho_hi, self.policy.value, int(n_steps), rng, occ,
        )


def step(state: LearnerState, game: Game, params: Params, policy: TremblePolicy,
         rng: np.random.Generator, backend: str | None = None) -> LearnerState:
    state.validate(game)
    action = np.array(state.action, dtype=np.int64)
    rho = np.array(state.aspiration, dtype=np.float64)
    _Engine(game, params, policy, backend).advance(action, rho, 1, rng)
    return LearnerState(tuple(int(x) for x in action), tuple(float(x) for x in rho))


class ObserverError(AspireError):
    pass


class Observer:
    """Base class for trajectory observers.

    ``stride`` requests ``snapshot`` calls at t = 0, stride, 2*stride, ...
    with the state at time t and the occupancy counts over [0, t). ``finish``
    receives the completed :class:`RunResult`.
    """

    stride: int | None = None

    def snapshot(self, t: int, action_index: int, rho: np.ndarray, counts: np.ndarray) -> None:
        pass

    def finish(self, result: "RunResult") -> None:
        pass


@dataclass
class RunResult:
    game: Game
    final: LearnerState
    horizon: int
    counts: np.ndarray  # visits of alpha(t), t in [0, horizon)
    window: tuple | None = None
    window_counts: np.ndarray | None = None
    observers: list = field(default_factory=list)


def run(game: Game, params: Params, policy: TremblePolicy, x0: LearnerState, horizon: int, seed,
        observers: Sequence[Observer] = (), window: tuple | None = None,
        backend: str | None = None) -> RunResult:
    """Iterate the learning step ``horizon`` times from ``x0``.

    Only occupancy counts and the snapshots requested by observers are kept;
    the trajectory itself is never stored.
    """
    if horizon < 0:
        raise InputError("horizon must be non-negative")
    x0.validate(game, params)
    if window is not None:
        lo, hi = int(window[0]), int(window[1])
        if not 0 <= lo <= hi <= horizon:
            raise InputError(f"window {window} must lie inside [0, {horizon}]")
        window = (lo, hi)
    engine = _Engine(game, params, policy, backend)
    rng = make_rng(seed)
    action = np.array(x0.action, dtype=np.int64)
    rho = np.array(x0.aspiration, dtype=np.float64)
    # visits outside and inside the window are tallied separately and summed
    outside = np.zeros(game.size, dtype=np.int64)
    window_counts = np.zeros(game.size, dtype=np.int64) if window else None

    stops = {horizon}
    if window:
        stops |= set(window)
    for s in {o.stride for o in observers if o.stride}:
        stops |= set(range(0, horizon + 1, s))
    t = 0
    for stop in sorted(stops):
        if stop > t:
            inside = window is not None and window[0] <= t < window[1]
            engine.advance(action, rho, stop - t, rng, window_counts if inside else outside)
            t = stop
        due = [o for o in observers if o.stride and t % o.stride == 0]
        if due:
            so_far = outside if window_counts is None else outside + window_counts
            for o in due:
                try:
                    o.snapshot(t, int(action @ game.strides), rho.copy(), so_far)
                except Exception as exc:
                    raise ObserverError(f"{type(o).__name__} failed at t={t}: {exc}") from exc
    counts = outside if window_counts is None else outside + window_counts
    final = LearnerState(tuple(int(x) for x in action), tuple(float(x) for x in rho))
    result = RunResult(game, final, horizon, counts, window, window_counts, list(observers))
    for o in observers:
        try:
            o.finish(result)
        except Exception as exc:
            raise ObserverError(f"{type(o).__name__} failed at t={horizon}: {exc}") from exc
    return result
