from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from aspire.game import Game  # noqa: E402
from aspire import kernels  # noqa: E402


@st.composite
def small_games(draw, max_players=3, max_actions=4, values=(-3, 3)):
    """Games up to 3 players x 4 actions with small integer payoffs (ties are common)."""
    n = draw(st.integers(2, max_players))
    counts = tuple(draw(st.integers(1, max_actions)) for _ in range(n))
    size = int(np.prod(counts))
    flat = draw(st.lists(st.integers(*values), min_size=size * n, max_size=size * n))
    return Game(counts, np.array(flat, dtype=float).reshape(size, n))


BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def cpg_spec_from_unit(n, m, cost_marks, bonus_marks):
    """Valid common-pool spec built from sorted numbers in (0, 1).

    Costs are scaled into [0, 0.95); the loser payoffs -c_j + tau_j are then
    spread increasingly (in decreasing j) strictly inside (-c_0, 1 - c_(m-1)).
    """
    from aspire.games import CommonPoolSpec

    costs = [0.95 * x for x in sorted(cost_marks)]
    lo, hi = -costs[0], 1 - costs[-1]
    vals = [lo + (hi - lo) * t for t in sorted(bonus_marks)]
    taus = [0.0] * m
    for k in range(m):
        j = m - 1 - k
        taus[j] = vals[k] + costs[j]
    return CommonPoolSpec(n, tuple(costs), tuple(taus))


def random_cpg(n, m, data):
    from hypothesis import assume

    from aspire.errors import InputError
    from aspire.games import common_pool

    marks = st.lists(st.floats(0.0, 0.999), min_size=m, max_size=m, unique=True)
    bonus = st.lists(st.floats(0.05, 0.95), min_size=m, max_size=m, unique=True)
    spec = cpg_spec_from_unit(n, m, data.draw(marks), data.draw(bonus))
    try:
        return common_pool(spec, strict_chain=True)
    except InputError:
        assume(False)
