"""Independent brute-force references used by the test-suite.

Nothing here imports the package's algorithms; only plain Python loops over
explicit payoff dictionaries.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def profiles(counts):
    return list(itertools.product(*[range(m) for m in counts]))


def payoff_dict(game) -> dict:
    """Joint action -> payoff tuple, read through the public ``utility`` accessor only."""
    return {a: tuple(float(x) for x in game.u(a)) for a in profiles(game.action_counts)}


def brute_nash(counts, u: dict) -> tuple[set, set]:
    nash, strict = set(), set()
    for a in profiles(counts):
        ok = strict_ok = True
        for i, m in enumerate(counts):
            for b in range(m):
                if b == a[i]:
                    continue
                dev = a[:i] + (b,) + a[i + 1:]
                if u[dev][i] > u[a][i]:
                    ok = False
                if u[dev][i] >= u[a][i]:
                    strict_ok = False
        if ok:
            nash.add(a)
            if strict_ok:
                strict.add(a)
    return nash, strict


def brute_cond_a(counts, u, abar) -> bool:
    n = len(counts)
    return all(
        u[x][i] >= u[y][i]
        for x in abar for y in profiles(counts) if y not in abar for i in range(n)
    )


def brute_cond_b(counts, u, abar, nash) -> bool:
    n = len(counts)
    for a in profiles(counts):
        if a in abar or a in nash:
            continue
        found = False
        for i in range(n):
            for b in range(counts[i]):
                dev = a[:i] + (b,) + a[i + 1:]
                if u[dev][i] > u[a][i] and all(u[dev][j] >= u[a][j] for j in range(n) if j != i):
                    found = True
        if not found:
            return False
    return True


def brute_cond_c(counts, u, abar, nash) -> bool:
    """Every Nash profile outside ``abar`` admits some profile and agent permutation
    whose successive partial deviations hurt every agent named so far plus the next."""
    n = len(counts)
    for star in nash:
        if star in abar:
            continue
        ok = False
        for tilde in profiles(counts):
            for perm in itertools.permutations(range(n)):
                good = True
                for ell in range(1, n):
                    prof = list(star)
                    for j in perm[:ell]:
                        prof[j] = tilde[j]
                    prof = tuple(prof)
                    if not all(u[prof][i] < u[star][i] for i in perm[: ell + 1]):
                        good = False
                        break
                if good:
                    ok = True
                    break
            if ok:
                break
        if not ok:
            return False
    return True


def brute_symmetric(counts, u, tol=1e-12) -> bool:
    if len(set(counts)) != 1:
        return False
    n = len(counts)
    for a in profiles(counts):
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                if a[i] == a[j] and abs(u[a][i] - u[a][j]) > tol:
                    return False
                b = list(a)
                b[i], b[j] = a[j], a[i]
                b = tuple(b)
                if abs(u[b][i] - u[a][j]) > tol or abs(u[b][j] - u[a][i]) > tol:
                    return False
                if any(abs(u[b][k] - u[a][k]) > tol for k in range(n) if k not in (i, j)):
                    return False
    return True


def cpg_utility(levels_idx, costs, taus):
    """Common-pool payoff vector straight from the three-case definition."""
    n = len(levels_idx)
    out = []
    for i, ai in enumerate(levels_idx):
        top = max(levels_idx)
        winners = [k for k in range(n) if levels_idx[k] == top]
        if len(winners) == 1 and winners[0] == i:
            out.append(1 - costs[ai])
        elif len(winners) == 1:
            out.append(-costs[ai] + taus[ai])
        else:
            out.append(-costs[ai])
    return tuple(out)


def stationary_eig(p: np.ndarray) -> np.ndarray:
    """Left Perron vector via a dense eigen-decomposition."""
    w, v = np.linalg.eig(p.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    x = np.real(v[:, k])
    return x / x.sum()


def count_in_trees(n: int, roots: set) -> int:
    """Number of forests on K_n where every non-root node points to one other node
    and all arrows lead into ``roots``; by brute force over all assignments."""
    free = [s for s in range(n) if s not in roots]
    total = 0
    for targets in itertools.product(range(n), repeat=len(free)):
        arrow = dict(zip(free, targets))
        if any(s == t for s, t in arrow.items()):
            continue
        ok = True
        for s in free:
            seen, x = set(), s
            while x in arrow:
                if x in seen:
                    ok = False
                    break
                seen.add(x)
                x = arrow[x]
            if not ok:
                break
        total += ok
    return total


# -- reference learning step -----------------------------------------------


def ref_phi(z, c_phi, h):
    return 1.0 if z >= 0 else max(h, 1.0 + c_phi * z)


def ref_run(u: dict, counts, action, rho, eps, lam, zeta, c_phi, h, lo, hi, mode, steps, rng):
    """Step-by-step reference of the learning rule with the documented draw order.

    ``mode`` is one of "spontaneous", "forced", "none". Returns the list of
    visited joint actions (before each step) and the final state.
    """
    n = len(counts)
    a = list(action)
    r = [float(x) for x in rho]
    visited = []
    for _ in range(steps):
        visited.append(tuple(a))
        pay = u[tuple(a)]
        trem = [0.0] * n
        if mode == "forced":
            who = int(rng.random() * n)
            trem[who] = -zeta + 2.0 * zeta * rng.random()
        new_a = list(a)
        new_r = list(r)
        for i in range(n):
            if mode == "spontaneous" and rng.random() < lam:
                trem[i] = -zeta + 2.0 * zeta * rng.random()
            new_r[i] = min(max(r[i] + eps * (pay[i] - r[i]) + trem[i], lo), hi)
            keep = rng.random() < ref_phi(pay[i] - r[i], c_phi, h)
            if not keep and counts[i] > 1:
                b = int(rng.random() * (counts[i] - 1))
                if b >= a[i]:
                    b += 1
                new_a[i] = b
        a, r = new_a, new_r
    return visited, tuple(a), tuple(r)


def ref_absorb(u: dict, counts, start, eps, zeta, c_phi, h, lo, hi, rng, tol=1e-9, cap=10**6):
    """One landing point of a forced single tremble followed by unperturbed steps.

    Stops when every agent is satisfied, or when the summed bound
    ``c_phi * gap / eps`` on any further switching drops below ``tol``.
    """
    n = len(counts)
    a = tuple(start)
    _, a, r = ref_run(u, counts, a, u[a], eps, 0.0, zeta, c_phi, h, lo, hi, "forced", 1, rng)
    for _ in range(cap):
        pay = u[a]
        gaps = [max(0.0, r[i] - pay[i]) for i in range(n)]
        if sum(c_phi * g / eps for g in gaps) < tol:
            return a
        _, a, r = ref_run(u, counts, a, r, eps, 0.0, zeta, c_phi, h, lo, hi, "none", 1, rng)
    return None


def binom_se(p, n):
    return math.sqrt(max(p * (1 - p), 1e-12) / n)
