"""Finite strategic-form games and structural verifiers.

A :class:`Game` stores a dense payoff table indexed by the mixed-radix joint
action index (player 0 is the most significant digit), so ``table[k, i]`` is
player ``i``'s payoff at joint action number ``k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BudgetError, InputError, StructureError

GAME_FORMAT_VERSION = 1

JointAction = tuple  # tuple[int, ...], one 0-based action index per player

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"


class Game:
    """A finite game with ``n`` players and a total payoff table.

    Parameters
    ----------
    action_counts : sequence of int
        Size of each player's action set.
    payoffs : array_like, shape (prod(action_counts), n)
        Row ``k`` holds the payoff vector of joint action ``k`` in
        mixed-radix (row-major) order.
    labels : sequence of sequence of str, optional
        Display names per player and action.
    name : str, optional
    """

    def __init__(self, action_counts, payoffs, labels=None, name: str = "game"):
        counts = tuple(int(m) for m in action_counts)
        if len(counts) < 2:
            raise InputError(f"a game needs at least 2 players, got {len(counts)}")
        if any(m < 1 for m in counts):
            raise InputError(f"every action set needs at least one action: {counts}")
        size = int(np.prod(counts, dtype=np.int64))
        table = np.array(payoffs, dtype=np.float64)
        if table.shape != (size, len(counts)):
            raise InputError(
                f"payoff table has shape {table.shape}, expected {(size, len(counts))}"
            )
        if not np.all(np.isfinite(table)):
            raise InputError("payoffs must be finite")
        table.flags.writeable = False
        self.action_counts = counts
        self.n = len(counts)
        self.size = size
        self.table = table
        self.name = name
        strides = np.ones(self.n, dtype=np.int64)
        for i in range(self.n - 2, -1, -1):
            strides[i] = strides[i + 1] * counts[i + 1]
        strides.flags.writeable = False
        self.strides = strides
        if labels is None:
            labels = [[str(a) for a in range(m)] for m in counts]
        labels = tuple(tuple(str(x) for x in row) for row in labels)
        if len(labels) != self.n or any(len(l) != m for l, m in zip(labels, counts)):
            raise InputError("labels must list one name per action of every player")
        self.labels = labels

    def __repr__(self) -> str:
        return f"Game({self.name!r}, action_counts={self.action_counts})"

    # -- indexing ---------------------------------------------------------

    def check(self, a: Sequence[int]) -> JointAction:
        a = tuple(int(x) for x in a)
        if len(a) != self.n:
            raise InputError(f"joint action {a} has {len(a)} entries, game has {self.n} players")
        for i, (ai, m) in enumerate(zip(a, self.action_counts)):
            if not 0 <= ai < m:
                raise InputError(f"action {ai} of player {i} out of range [0, {m})")
        return a

    def index(self, a: Sequence[int]) -> int:
        a = self.check(a)
        return int(sum(ai * int(s) for ai, s in zip(a, self.strides)))

    def joint(self, k: int) -> JointAction:
        if not 0 <= k < self.size:
            raise InputError(f"joint-action index {k} out of range [0, {self.size})")
        out = []
        for s in self.strides:
            q, k = divmod(k, int(s))
            out.append(q)
        return tuple(out)

    def profiles(self) -> Iterator[JointAction]:
        return itertools.product(*(range(m) for m in self.action_counts))

    def label(self, a: Sequence[int]) -> str:
        return "(" + ",".join(self.labels[i][ai] for i, ai in enumerate(a)) + ")"

    def u(self, a: Sequence[int]) -> np.ndarray:
        return self.table[self.index(a)]

    def tensor(self) -> np.ndarray:
        """Payoffs reshaped to ``action_counts + (n,)``."""
        return self.table.reshape(self.action_counts + (self.n,))


def utility(game: Game, a: Sequence[int]) -> tuple[float, ...]:
    """Payoff vector at joint action ``a``, exactly as stored."""
    return tuple(float(x) for x in game.u(a))


def deviate(a: Sequence[int], i: int, ai: int) -> JointAction:
    a = list(a)
    a[i] = ai
    return tuple(a)


def better_replies(game: Game, a: Sequence[int], i: int) -> set[int]:
    """Actions of player ``i`` that strictly raise her payoff against ``a_{-i}``."""
    a = game.check(a)
    if not 0 <= i < game.n:
        raise InputError(f"player {i} out of range")
    current = game.table[game.index(a), i]
    return {
        b
        for b in range(game.action_counts[i])
        if game.table[game.index(deviate(a, i, b)), i] > current
    }


@dataclass(frozen=True)
class NashSet:
    """Pure Nash equilibria, with the strict ones flagged."""

    profiles: frozenset
    strict: frozenset

    def __contains__(self, a) -> bool:
        return tuple(a) in self.profiles

    def __iter__(self):
        return iter(sorted(self.profiles))

    def __len__(self) -> int:
        return len(self.profiles)


def pure_nash_set(game: Game) -> NashSet:
    t = game.tensor()
    is_nash = np.ones(game.action_counts, dtype=bool)
    is_strict = np.ones(game.action_counts, dtype=bool)
    for i in range(game.n):
        ui = t[..., i]
        best = ui.max(axis=i, keepdims=True)
        is_nash &= ui >= best
        if game.action_counts[i] > 1:
            # strict: every other action of i does strictly worse
            top2 = np.sort(ui, axis=i).take([-2], axis=i)
            is_strict &= ui > top2
    profiles = frozenset(tuple(int(x) for x in a) for a in zip(*np.nonzero(is_nash)))
    strict = frozenset(a for a in profiles if is_strict[a])
    return NashSet(profiles, strict)


def _as_profile_set(game: Game, abar: Iterable) -> frozenset:
    members = frozenset(game.check(a) for a in abar)
    if not members:
        raise InputError("the desirable set must be non-empty")
    return members


def harmless_better_replies(game: Game, a: Sequence[int]) -> list[tuple[int, int, float]]:
    """All ``(i, b, gain)`` where ``b`` is a better reply of ``i`` that hurts nobody else.

    Sorted by the tie-breaking rule: largest gain of the mover first, then
    lowest ``(player, action)``.
    """
    k = game.index(a)
    base = game.table[k]
    out = []
    for i in range(game.n):
        for b in range(game.action_counts[i]):
            if b == a[i]:
                continue
            new = game.table[k + (b - a[i]) * int(game.strides[i])]
            if new[i] > base[i] and all(new[j] >= base[j] for j in range(game.n) if j != i):
                out.append((i, b, float(new[i] - base[i])))
    out.sort(key=lambda w: (-w[2], w[0], w[1]))
    return out


@dataclass
class Check:
    status: str
    witnesses: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == PASS


@dataclass
class CoordinationReport:
    cond_a: Check
    cond_b: Check
    cond_c: Check
    strict: bool

    @property
    def status(self) -> str:
        states = {self.cond_a.status, self.cond_b.status, self.cond_c.status}
        if FAIL in states:
            return FAIL
        if INCONCLUSIVE in states:
            return INCONCLUSIVE
        return PASS

    @property
    def is_coordination(self) -> bool:
        return self.status == PASS

    @property
    def is_strict_coordination(self) -> bool:
        return self.is_coordination and self.strict


def _check_dominance(game: Game, abar: frozenset) -> tuple[Check, bool]:
    inside = np.zeros(game.size, dtype=bool)
    for a in abar:
        inside[game.index(a)] = True
    if inside.all():
        return Check(PASS, detail="vacuous: desirable set is the whole action space"), True
    lo = game.table[inside].min(axis=0)
    hi = game.table[~inside].max(axis=0)
    bad = [i for i in range(game.n) if lo[i] < hi[i]]
    strict = bool(np.all(lo > hi))
    if not bad:
        return Check(PASS), strict
    witnesses = {}
    for i in bad:
        worst = game.joint(int(np.flatnonzero(inside)[game.table[inside, i].argmin()]))
        best = game.joint(int(np.flatnonzero(~inside)[game.table[~inside, i].argmax()]))
        witnesses[i] = (worst, best)
    return Check(FAIL, witnesses, "player -> (desirable profile, dominating outsider)"), False


def _check_harmless_replies(game: Game, abar: frozenset, nash: NashSet) -> Check:
    witnesses, stuck = {}, {}
    for a in game.profiles():
        if a in abar or a in nash:
            continue
        found = harmless_better_replies(game, a)
        if found:
            witnesses[a] = found[0][:2]
        else:
            stuck[a] = None
    if stuck:
        return Check(FAIL, stuck, "profiles without a better reply that hurts nobody")
    return Check(PASS, witnesses, "profile -> (player, action)")


class _Budget(Exception):
    pass


def _escape_sequence(game: Game, star: JointAction, budget: list[int]):
    """DFS for a profile and agent order whose deviations hurt every agent involved."""
    target = game.table[game.index(star)]
    n = game.n
    failed: set = set()

    def worse(profile, agents) -> bool:
        row = game.table[game.index(profile)]
        return all(row[i] < target[i] for i in agents)

    def search(profile, order):
        key = (frozenset(order), profile)
        if key in failed:
            return None
        budget[0] -= 1
        if budget[0] < 0:
            raise _Budget
        remaining = [j for j in range(n) if j not in order]
        if len(order) == n - 1:
            return (profile, order + remaining) if worse(profile, remaining) else None
        for j in remaining:
            if order and not worse(profile, [j]):
                continue
            for b in range(game.action_counts[j]):
                nxt = deviate(profile, j, b)
                if not worse(nxt, order + [j]):
                    continue
                hit = search(nxt, order + [j])
                if hit is not None:
                    return hit
        failed.add(key)
        return None

    return search(star, [])


def is_coordination_game(game: Game, abar: Iterable, budget: int = 10**7) -> CoordinationReport:
    """Check the three coordination-game conditions for the desirable set ``abar``.

    Condition (c) is an existential search; when its node budget runs out
    the check is reported ``inconclusive`` rather than guessed.
    """
    abar = _as_profile_set(game, abar)
    nash = pure_nash_set(game)
    cond_a, strict = _check_dominance(game, abar)
    cond_b = _check_harmless_replies(game, abar, nash)

    outside = sorted(a for a in nash.profiles if a not in abar)
    if not outside:
        cond_c = Check(PASS, detail="vacuous: every Nash profile is desirable")
    else:
        left = [budget]
        witnesses, failures = {}, {}
        try:
            for star in outside:
                hit = _escape_sequence(game, star, left)
                if hit is None:
                    failures[star] = None
                else:
                    witnesses[star] = hit
        except _Budget:
            cond_c = Check(INCONCLUSIVE, witnesses, f"search budget of {budget} expansions exhausted")
        else:
            if failures:
                cond_c = Check(FAIL, failures, "Nash profiles without an escape sequence")
            else:
                cond_c = Check(PASS, witnesses, "Nash profile -> (deviation profile, agent order)")
    return CoordinationReport(cond_a, cond_b, cond_c, strict)


def better_reply_path(game: Game, a0: Sequence[int], abar: Iterable) -> list[tuple[int, int]]:
    """Harmless better-reply steps from ``a0`` until reaching a Nash or desirable profile."""
    abar = _as_profile_set(game, abar)
    nash = pure_nash_set(game)
    a = game.check(a0)
    path: list[tuple[int, int]] = []
    while a not in abar and a not in nash:
        found = harmless_better_replies(game, a)
        if not found:
            raise StructureError(
                f"no better reply that hurts nobody exists at {game.label(a)}; "
                "the game is not a coordination game for this desirable set"
            )
        i, b, _ = found[0]
        path.append((i, b))
        a = deviate(a, i, b)
        if len(path) >= game.size:
            raise StructureError("better-reply path failed to terminate")  # pragma: no cover
    return path


@dataclass(frozen=True)
class SymmetryResult:
    holds: bool
    counterexample: tuple | None = None  # (profile, i, j)

    def __bool__(self) -> bool:
        return self.holds


def _transpose(a: JointAction, i: int, j: int) -> JointAction:
    b = list(a)
    b[i], b[j] = a[j], a[i]
    return tuple(b)


def _swap_matches(game: Game, a, b, i: int, j: int, tol: float) -> bool:
    ua, ub = game.table[game.index(a)], game.table[game.index(b)]
    if abs(ub[i] - ua[j]) > tol or abs(ua[i] - ub[j]) > tol:
        return False
    return all(abs(ub[k] - ua[k]) <= tol for k in range(game.n) if k not in (i, j))


def is_symmetric_game(game: Game, tol: float = 1e-12) -> SymmetryResult:
    if len(set(game.action_counts)) != 1:
        return SymmetryResult(False, None)
    for a in game.profiles():
        row = game.table[game.index(a)]
        for i, j in itertools.combinations(range(game.n), 2):
            if a[i] == a[j]:
                if abs(row[i] - row[j]) > tol:
                    return SymmetryResult(False, (a, i, j))
            elif not _swap_matches(game, a, _transpose(a, i, j), i, j, tol):
                return SymmetryResult(False, (a, i, j))
    return SymmetryResult(True)


def equivalent_states(game: Game, a: Sequence[int], b: Sequence[int], tol: float = 1e-12) -> bool:
    """Whether ``b`` is a payoff-consistent two-player transposition of ``a``."""
    a, b = game.check(a), game.check(b)
    if a == b:
        raise InputError("equivalence is defined for distinct states")
    diff = [k for k in range(game.n) if a[k] != b[k]]
    if len(diff) != 2:
        return False
    i, j = diff
    if a[i] != b[j] or a[j] != b[i]:
        return False
    return _swap_matches(game, a, b, i, j, tol)


@dataclass(frozen=True)
class PayoffConstants:
    delta_min: float
    delta_max: float
    delta_star: float
    h1_holds: bool
    h2_holds: bool
    zeta_bound_h1: float | None
    zeta_bound_h2: float | None

    def zeta_bound(self) -> float | None:
        """The most permissive tremble-magnitude bound among the hypotheses that hold."""
        bounds = [b for b in (self.zeta_bound_h1, self.zeta_bound_h2) if b is not None]
        return max(bounds) if bounds else None


def payoff_constants(game: Game, abar: Iterable) -> PayoffConstants:
    abar = _as_profile_set(game, abar)
    if len(abar) == game.size:
        raise InputError("minimum payoff gap is undefined when every profile is desirable")
    inside = np.zeros(game.size, dtype=bool)
    for a in abar:
        inside[game.index(a)] = True
    t = game.table
    delta_min = float(np.min(t[inside].min(axis=0) - t[~inside].max(axis=0)))
    delta_max = float(np.max(t.max(axis=0) - t.min(axis=0)))
    delta_star = float(np.max(t.max(axis=1) - t.min(axis=1)))
    h1 = delta_star < delta_min
    maximizers = np.all(t == t.max(axis=0), axis=1)
    h2 = bool(np.array_equal(maximizers, inside))
    return PayoffConstants(
        delta_min=delta_min,
        delta_max=delta_max,
        delta_star=delta_star,
        h1_holds=h1,
        h2_holds=h2,
        zeta_bound_h1=0.5 * (delta_min - delta_star) if h1 else None,
        zeta_bound_h2=delta_min**2 / (4 * delta_max) if h2 else None,
    )


def sk_partition(game: Game, abar: Iterable) -> list[frozenset]:
    """Layers of profiles by harmless-better-reply distance to Nash or desirable profiles."""
    abar = _as_profile_set(game, abar)
    nash = pure_nash_set(game)
    layers = [frozenset(abar | nash.profiles)]
    placed = set(layers[0])
    rest = [a for a in game.profiles() if a not in placed]
    moves = {a: [deviate(a, i, b) for i, b, _ in harmless_better_replies(game, a)] for a in rest}
    while rest:
        prev = layers[-1]
        layer = frozenset(a for a in rest if any(b in prev for b in moves[a]))
        if not layer:
            raise StructureError(
                f"profile {game.label(rest[0])} is not reachable by harmless better replies; "
                "the game is not a coordination game for this desirable set"
            )
        layers.append(layer)
        placed |= layer
        rest = [a for a in rest if a not in layer]
    return layers


# -- document form --------------------------------------------------------


def game_to_dict(game: Game) -> dict:
    return {
        "version": GAME_FORMAT_VERSION,
        "players": game.n,
        "action_counts": list(game.action_counts),
        "payoffs": [[float(x) for x in row] for row in game.table],
        "labels": [list(l) for l in game.labels],
    }


def game_from_dict(doc: dict, name: str = "table") -> Game:
    allowed = {"version", "players", "action_counts", "payoffs", "labels", "name"}
    unknown = set(doc) - allowed
    if unknown:
        raise InputError(f"unknown game keys: {sorted(unknown)}")
    for key in ("version", "players", "action_counts", "payoffs"):
        if key not in doc:
            raise InputError(f"game document is missing {key!r}")
    if doc["version"] != GAME_FORMAT_VERSION:
        raise InputError(f"unsupported game format version {doc['version']!r}")
    if int(doc["players"]) != len(doc["action_counts"]):
        raise InputError("'players' disagrees with the length of 'action_counts'")
    return Game(doc["action_counts"], doc["payoffs"], doc.get("labels"), doc.get("name", name))


def check_table_budget(action_counts: Sequence[int], budget: int) -> int:
    size = 1
    for m in action_counts:
        size *= int(m)
        if size > budget:
            raise BudgetError(f"joint action space exceeds the budget of {budget} profiles")
    return size
