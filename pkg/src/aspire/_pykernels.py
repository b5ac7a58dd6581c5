"""Pure-Python aspiration-learning kernels.

Reference implementation of the compiled kernels in ``_kernels.pyx``. Both
consume uniforms from a ``numpy.random.Generator`` in the same order and use
the same floating-point expressions, so they produce bit-identical
trajectories.
"""

from __future__ import annotations

import numpy as np

NAME = "python"

NONE, SPONTANEOUS, FORCED = 0, 1, 2


class Tables:
    __slots__ = ("rows", "counts", "strides", "n")

    def __init__(self, table: np.ndarray, counts: np.ndarray, strides: np.ndarray):
        self.rows = table.tolist()
        self.counts = [int(m) for m in counts]
        self.strides = [int(s) for s in strides]
        self.n = len(self.counts)


def prepare(table, counts, strides) -> Tables:
    return Tables(table, counts, strides)


def _step(tb, a, rho, eps, lam, zeta, c_phi, h, lo, hi, mode, rand):
    n = tb.n
    k = 0
    for i in range(n):
        k += a[i] * tb.strides[i]
    u = tb.rows[k]
    who = -1
    val = 0.0
    if mode == FORCED:
        who = int(rand() * n)
        val = -zeta + 2.0 * zeta * rand()
    for i in range(n):
        ui = u[i]
        ri = rho[i]
        r = 0.0
        if mode == SPONTANEOUS:
            if rand() < lam:
                r = -zeta + 2.0 * zeta * rand()
        elif mode == FORCED and i == who:
            r = val
        gap = ui - ri
        x = ri + eps * (ui - ri) + r
        if x > hi:
            x = hi
        elif x < lo:
            x = lo
        rho[i] = x
        if gap >= 0.0:
            phi = 1.0
        else:
            phi = 1.0 + c_phi * gap
            if phi < h:
                phi = h
        if not rand() < phi:
            m = tb.counts[i]
            if m > 1:
                b = int(rand() * (m - 1))
                if b >= a[i]:
                    b += 1
                a[i] = b


def advance(tb, action, rho, eps, lam, zeta, c_phi, h, lo, hi, mode, n_steps, rng, occ=None):
    """Run ``n_steps`` steps in place on ``action``/``rho``; tally visited joint actions into ``occ``."""
    a = [int(x) for x in action]
    r = [float(x) for x in rho]
    rand = rng.random
    strides = tb.strides
    n = tb.n
    for _ in range(n_steps):
        if occ is not None:
            k = 0
            for i in range(n):
                k += a[i] * strides[i]
            occ[k] += 1
        _step(tb, a, r, eps, lam, zeta, c_phi, h, lo, hi, mode, rand)
    action[:] = a
    rho[:] = r


def absorb_row(tb, start, eps, zeta, c_phi, h, lo, hi, samples, max_steps, rng, out):
    """One-tremble-then-unperturbed samples from the pure state ``start``.

    Adds the absorbing joint action of every resolved sample to ``out`` and
    returns ``(unresolved, residual, steps)``; ``residual`` bounds the
    probability that a certified sample would still have moved.
    """
    rand = rng.random
    n = tb.n
    strides = tb.strides
    k0 = 0
    for i in range(n):
        k0 += int(start[i]) * strides[i]
    unresolved = 0
    residual = 0.0
    steps = 0
    for _ in range(samples):
        a = [int(x) for x in start]
        rho = list(tb.rows[k0])
        _step(tb, a, rho, eps, 0.0, zeta, c_phi, h, lo, hi, FORCED, rand)
        taken = 0
        while True:
            k = 0
            for i in range(n):
                k += a[i] * strides[i]
            u = tb.rows[k]
            ok = True
            bound = 0.0
            for i in range(n):
                g = rho[i] - u[i]
                if g > 0.0:
                    # relaxation stalled in floating point: only a switch could still move it
                    if rho[i] + eps * (u[i] - rho[i]) == rho[i]:
                        bound += c_phi * g / eps
                    else:
                        ok = False
                        break
            if ok:
                out[k] += 1
                if bound > residual:
                    residual = bound
                break
            if taken >= max_steps:
                unresolved += 1
                break
            _step(tb, a, rho, eps, 0.0, zeta, c_phi, h, lo, hi, NONE, rand)
            taken += 1
        steps += taken
    return unresolved, residual, steps
