"""Constructors for stag-hunt, common-pool and network-formation games."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .game import Game, check_table_budget


class DegenerateGameWarning(UserWarning):
    pass


class ChainWarning(UserWarning):
    """The last link of the common-pool payoff chain (every loser below every winner) fails."""


def stag_hunt() -> Game:
    payoffs = [
        (4, 4),  # (A, A)
        (0, 2),  # (A, B)
        (2, 0),  # (B, A)
        (3, 3),  # (B, B)
    ]
    return Game((2, 2), payoffs, labels=[["A", "B"], ["A", "B"]], name="stag_hunt")


# -- common-pool ----------------------------------------------------------


@dataclass(frozen=True)
class CommonPoolSpec:
    n: int
    costs: tuple
    taus: tuple
    levels: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if self.levels is None:
            object.__setattr__(self, "levels", tuple(float(j) for j in range(len(self.costs))))
        else:
            object.__setattr__(self, "levels", tuple(float(p) for p in self.levels))

    @property
    def m(self) -> int:
        return len(self.costs)

    def chain(self) -> list[float]:
        """The payoff chain -c_0 < -c_{m-1}+tau_{m-1} < ... < -c_0+tau_0 < 1-c_{m-1}."""
        c, t, m = self.costs, self.taus, self.m
        return [-c[0]] + [-c[j] + t[j] for j in range(m - 1, -1, -1)] + [1 - c[m - 1]]

    def validate(self, strict_chain: bool = False) -> bool:
        """Raise on invalid specs; return whether the final chain link holds.

        The final link (every loser's payoff below every winner's) is not
        needed for the coordination structure, so by default its failure only
        warns. ``strict_chain=True`` makes it an error as well.
        """
        c, t, p, m = self.costs, self.taus, self.levels, self.m
        if self.n < 2:
            raise InputError(f"common-pool game needs n >= 2, got {self.n}")
        if m < 1:
            raise InputError("common-pool game needs at least one level")
        if len(t) != m or len(p) != m:
            raise InputError(f"need {m} levels, costs and taus; got {len(p)}, {len(c)}, {len(t)}")
        if p[0] < 0 or any(p[j] >= p[j + 1] for j in range(m - 1)):
            raise InputError(f"levels must satisfy 0 <= p_0 < ... < p_(m-1): {p}")
        if c[0] < 0 or c[-1] >= 1 or any(c[j] >= c[j + 1] for j in range(m - 1)):
            raise InputError(f"costs must satisfy 0 <= c_0 < ... < c_(m-1) < 1: {c}")
        if any(x <= 0 for x in t):
            raise InputError(f"bonuses tau_j must be positive: {t}")
        chain = self.chain()
        names = ["-c_0"] + [f"-c_{j}+tau_{j}" for j in range(m - 1, -1, -1)] + [f"1-c_{m-1}"]
        for k in range(len(chain) - 2):
            if not chain[k] < chain[k + 1]:
                raise InputError(
                    f"payoff chain violated: {names[k]} = {chain[k]:g} "
                    f"is not below {names[k + 1]} = {chain[k + 1]:g}"
                )
        last = chain[-2] < chain[-1]
        if not last:
            msg = (
                f"payoff chain violated: {names[-2]} = {chain[-2]:g} "
                f"is not below {names[-1]} = {chain[-1]:g}"
            )
            if strict_chain:
                raise InputError(msg)
            warnings.warn(msg, ChainWarning, stacklevel=3)
        return last


class CommonPoolGame(Game):
    def __init__(self, spec: CommonPoolSpec, payoffs, labels):
        super().__init__((spec.m,) * spec.n, payoffs, labels, name="common_pool")
        self.spec = spec


def _unique_top(a: Sequence[int]) -> int | None:
    top = max(a)
    holders = [i for i, x in enumerate(a) if x == top]
    return holders[0] if len(holders) == 1 else None


def common_pool(spec: CommonPoolSpec, strict_chain: bool = False, budget: int = 2**20) -> CommonPoolGame:
    spec.validate(strict_chain)
    n, m, c, t = spec.n, spec.m, spec.costs, spec.taus
    check_table_budget((m,) * n, budget)
    grid = np.indices((m,) * n).reshape(n, -1).T
    payoffs = np.empty(grid.shape, dtype=np.float64)
    for k, a in enumerate(grid):
        winner = _unique_top(a)
        for i, j in enumerate(a):
            if winner is None:
                payoffs[k, i] = -c[j]
            elif winner == i:
                payoffs[k, i] = 1 - c[j]
            else:
                payoffs[k, i] = -c[j] + t[j]
    labels = [[f"p{j}" for j in range(m)] for _ in range(n)]
    return CommonPoolGame(spec, payoffs, labels)


def successful_set(game: CommonPoolGame) -> frozenset:
    """Profiles in which a single agent holds the strictly highest level."""
    members = frozenset(a for a in game.profiles() if _unique_top(a) is not None)
    if not members:
        warnings.warn("degenerate common-pool game: no successful profile exists", DegenerateGameWarning, stacklevel=2)
    return members


def success_owner(a: Sequence[int]) -> int | None:
    """The agent that succeeds at ``a``, or None on a collision."""
    return _unique_top(a)


# -- network formation ----------------------------------------------------


@dataclass(frozen=True)
class Digraph:
    """Directed graph on nodes ``0..n-1``; edge ``(s, i)`` points from s to i."""

    n: int
    edges: frozenset

    def in_neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for s, i in self.edges:
            adj[i].append(s)
        return adj

    def out_neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for s, i in self.edges:
            adj[s].append(i)
        return adj


def _bfs(adj: list[list[int]], src: int, skip: tuple | None = None) -> list[int]:
    """Hop distances from ``src`` following ``adj`` (-1 when unreachable)."""
    dist = [-1] * len(adj)
    dist[src] = 0
    queue = deque([src])
    while queue:
        x = queue.popleft()
        for y in adj[x]:
            if dist[y] < 0 and (x, y) != skip:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


@dataclass(frozen=True)
class NetworkSpec:
    n: int
    neighborhoods: tuple
    c_link: float

    def __post_init__(self):
        hoods = tuple(tuple(sorted(set(int(s) for s in nb))) for nb in self.neighborhoods)
        object.__setattr__(self, "neighborhoods", hoods)
        if self.n < 2 or len(hoods) != self.n:
            raise InputError(f"need one neighborhood for each of n >= 2 nodes, got {len(hoods)} for n={self.n}")
        for i, nb in enumerate(hoods):
            if i in nb:
                raise InputError(f"node {i} lists itself as a neighbor")
            if any(not 0 <= s < self.n for s in nb):
                raise InputError(f"node {i} has a neighbor outside 0..{self.n - 1}")
        if not 0 < self.c_link < 1:
            raise InputError(f"link cost must lie in (0, 1), got {self.c_link}")

    @classmethod
    def ring(cls, n: int, c_link: float) -> "NetworkSpec":
        return cls(n, [((i - 1) % n, (i + 1) % n) for i in range(n)], c_link)

    @classmethod
    def complete(cls, n: int, c_link: float) -> "NetworkSpec":
        return cls(n, [[s for s in range(n) if s != i] for i in range(n)], c_link)

    @classmethod
    def parse(cls, text: str, c_link: float) -> "NetworkSpec":
        """Adjacency-list block, one ``node: neighbor neighbor ...`` line per node."""
        hoods: dict[int, list[int]] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            head, _, tail = line.partition(":")
            try:
                node = int(head)
                hoods[node] = [int(x) for x in tail.replace(",", " ").split()]
            except ValueError:
                raise InputError(f"bad adjacency line: {raw!r}") from None
        n = len(hoods)
        if sorted(hoods) != list(range(n)):
            raise InputError(f"adjacency block must list nodes 0..{n - 1} exactly once")
        return cls(n, [hoods[i] for i in range(n)], c_link)

    def links(self, i: int, action: int) -> tuple:
        """Neighbors from which node ``i`` buys an in-link under action ``action`` (a bitmask)."""
        nb = self.neighborhoods[i]
        return tuple(s for k, s in enumerate(nb) if action >> k & 1)

    def action_for(self, i: int, sources: Iterable[int]) -> int:
        nb = self.neighborhoods[i]
        return sum(1 << nb.index(s) for s in sources)

    def graph(self, a: Sequence[int]) -> Digraph:
        return Digraph(self.n, frozenset((s, i) for i in range(self.n) for s in self.links(i, a[i])))


class NetworkGame(Game):
    def __init__(self, spec: NetworkSpec, payoffs, labels):
        counts = [2 ** len(nb) for nb in spec.neighborhoods]
        super().__init__(counts, payoffs, labels, name="network_formation")
        self.spec = spec

    def graph(self, a: Sequence[int]) -> Digraph:
        return self.spec.graph(self.check(a))


def _reach_counts(g: Digraph) -> list[int]:
    """For each node i, how many other nodes have a path into i."""
    inn = g.in_neighbors()
    return [sum(1 for d in _bfs(inn, i) if d > 0) for i in range(g.n)]


def network_formation(spec: NetworkSpec, budget: int = 2**20) -> NetworkGame:
    counts = [2 ** len(nb) for nb in spec.neighborhoods]
    size = check_table_budget(counts, budget)
    n = spec.n
    payoffs = np.empty((size, n), dtype=np.float64)
    grid = np.indices(counts).reshape(n, -1).T
    for k, a in enumerate(grid):
        reach = _reach_counts(spec.graph(a))
        for i in range(n):
            payoffs[k, i] = reach[i] - spec.c_link * bin(int(a[i])).count("1")
    labels = [
        ["{" + ",".join(str(s) for s in spec.links(i, b)) + "}" for b in range(counts[i])]
        for i in range(n)
    ]
    return NetworkGame(spec, payoffs, labels)


@dataclass(frozen=True)
class ConnectivityResult:
    holds: bool
    violating_edge: tuple | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.holds


def is_critically_connected(g: Digraph) -> ConnectivityResult:
    """Connected, and every edge is the only path between its endpoints."""
    out = g.out_neighbors()
    for s in range(g.n):
        if min(_bfs(out, s)) < 0:
            return ConnectivityResult(False, None, f"node {s} does not reach every node")
    for edge in sorted(g.edges):
        s, i = edge
        # any second s->i path survives removal of the edge itself
        if _bfs(out, s, skip=edge)[i] >= 0:
            return ConnectivityResult(False, edge, "edge endpoints joined by another path")
    return ConnectivityResult(True)


def payoff_dominant_networks(game: Game) -> frozenset:
    """Profiles at which every player gets her maximum payoff over the whole game."""
    t = game.table
    rows = np.flatnonzero(np.all(t == t.max(axis=0), axis=1))
    members = frozenset(game.joint(int(k)) for k in rows)
    if not members:
        warnings.warn("no payoff-dominant profile exists", DegenerateGameWarning, stacklevel=2)
    return members


def inverse_total_distance(g: Digraph) -> np.ndarray:
    """Per node i, ``1 / sum_j dist(j, i)``; zero when some node cannot reach i."""
    inn = g.in_neighbors()
    out = np.zeros(g.n)
    for i in range(g.n):
        dist = _bfs(inn, i)
        if min(dist) >= 0 and sum(dist) > 0:
            out[i] = 1.0 / sum(dist)
    return out
