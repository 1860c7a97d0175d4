"""Shared fixtures: independent brute-force inference and the model battery.

``brute_joint`` recomputes joint probabilities with plain ``itertools`` and
``math.exp`` so the package's enumeration kernels are checked against an
implementation that shares no code with them.
"""
import itertools
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import mrfstruct as mf

settings.register_profile(
    "ci", deadline=None, derandomize=True, max_examples=50,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def brute_joint(model):
    """Joint distribution by direct per-state evaluation (no shared code)."""
    n, A = model.n, model.alphabet_size
    weights = []
    for state in itertools.product(range(A), repeat=n):
        total = 0.0
        for p in model.potentials:
            idx = 0
            for v in p.clique:
                idx = idx * A + state[v]
            total += float(p.table[idx])
        weights.append(math.exp(total) if total != -math.inf else 0.0)
    z = sum(weights)
    return np.array([w / z for w in weights])


def brute_marginal(model, U, x_U):
    probs = brute_joint(model)
    n, A = model.n, model.alphabet_size
    total = 0.0
    for idx, state in enumerate(itertools.product(range(A), repeat=n)):
        if all(state[u] == x for u, x in zip(U, x_U)):
            total += probs[idx]
    return total


def ctp_battery():
    """25 condition-satisfying models: paths, cycles, the cube, random graphs."""
    models = []
    for n in (3, 4, 5, 6):
        models.append((f"path{n}", mf.ising_on_graph(mf.path_graph(n), 0.8)))
    for n in (4, 5, 6, 7, 8):
        models.append((f"cycle{n}", mf.ising_on_graph(mf.cycle_graph(n), 1.0)))
    models.append(("cube", mf.ising_on_graph(mf.cube_graph(), 0.9)))
    got = 0
    for s in range(1, 30):
        if got >= 15:
            break
        n = 7 + (s % 4)
        m = mf.random_ising(n, 3, seed=s, low=0.6, high=1.0, random_sign=True)
        if not m.graph.edges:
            continue
        models.append((f"rand{n}_s{s}", m))
        got += 1
    assert len(models) == 25
    return models


def battery_degree(model) -> int:
    return 3 if model.n > 6 else 2


@pytest.fixture(scope="session")
def battery():
    return ctp_battery()


def q3_hidden0_expected_edges():
    """Cube edges relabeled for observation of vertices 1..7 (hidden 0 -> 7)."""
    exp = set()
    for u, v in mf.cube_graph().edge_list():
        uu = 7 if u == 0 else u - 1
        vv = 7 if v == 0 else v - 1
        exp.add((min(uu, vv), max(uu, vv)))
    return frozenset(exp)


def q3_hidden0_gstar():
    """Observed graph left by hiding cube vertex 0: induced part plus the
    clique over its neighbors {1, 2, 4} (relabeled to 0..6)."""
    edges = set()
    for u, v in mf.cube_graph().edge_list():
        if u != 0 and v != 0:
            edges.add((u - 1, v - 1))
    for a, b in itertools.combinations([0, 1, 3], 2):  # orig {1, 2, 4}
        edges.add((a, b))
    return mf.Graph.from_edges(7, edges)
