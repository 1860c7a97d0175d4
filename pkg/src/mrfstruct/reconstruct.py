"""Graph reconstruction from an estimator, plus sample-size calculators.

Two per-vertex neighborhood tests are implemented:

* conditional two-point (``ctp``): accept the smallest candidate set U such
  that no outside vertex w moves the conditional of v once U is fixed;
* general score: accept the largest U whose perturbed-neighbor score stays
  above threshold for every perturbed coordinate and every side set W.

A correlation-pruned variant restricts both searches to each vertex's
correlation neighborhood, and hidden-vertex recovery contracts the spurious
maximal cliques left by an unobserved vertex.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import (CliqueOverlapError, CorrelationNeighborhoodError,
                     EmptyNeighborhoodWarning, ReconstructionError)
from .estimator import Estimator
from .model import Graph


@dataclass(frozen=True)
class ReconConfig:
    """Thresholds driving the neighborhood tests.

    ``epsilon`` is the gap threshold (tests use epsilon/2), ``delta`` the
    conditioning-mass threshold (gates use delta/2), ``kappa`` the correlation
    threshold for the pruned variant, and ``c1`` the confidence exponent in
    the sample-size formulas.
    """

    d: int
    epsilon: float
    delta: float
    kappa: float | None = None
    c1: float = 1.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"degree bound must be >= 0, got {self.d}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")
        if self.kappa is not None and not self.kappa > 0:
            raise ValueError(f"kappa must be > 0 when set, got {self.kappa}")
        if self.c1 < 0:
            raise ValueError(f"c1 must be >= 0, got {self.c1}")

    @property
    def gamma(self) -> float:
        """Uniform estimation tolerance under which the tests are reliable."""
        return self.epsilon * self.delta ** 2 / 9.0

    def to_dict(self) -> dict:
        return {"d": self.d, "epsilon": self.epsilon, "delta": self.delta,
                "gamma": self.gamma, "kappa": self.kappa, "c1": self.c1}


@dataclass
class PerVertex:
    neighborhood: tuple[int, ...]
    candidates_checked: int
    ambiguous: bool = False
    failed: bool = False

    def to_dict(self) -> dict:
        return {"neighborhood": list(self.neighborhood),
                "candidates_checked": self.candidates_checked,
                "ambiguous": self.ambiguous, "failed": self.failed}


@dataclass
class ReconResult:
    graph: Graph
    per_vertex: dict[int, PerVertex]
    symmetrized: bool
    inconsistencies: list[tuple[int, int]]
    config: ReconConfig

    @property
    def ok(self) -> bool:
        return not any(p.failed or p.ambiguous for p in self.per_vertex.values())

    def to_dict(self) -> dict:
        return {
            "edges": [list(e) for e in self.graph.edge_list()],
            "per_vertex": {str(v): p.to_dict() for v, p in sorted(self.per_vertex.items())},
            "inconsistencies": [list(p) for p in self.inconsistencies],
            "config": self.config.to_dict(),
        }


def _gap_tensors(est: Estimator, v: int, cond: tuple[int, ...], i_pos: int):
    """Perturbed-conditional gaps and conditioning masses for one (v, cond, i).

    Returns ``(g, mass)`` where ``g[x_v, rest..., x_i, x_i']`` is the absolute
    conditional change when coordinate ``i_pos`` of ``cond`` flips from x_i to
    x_i', and ``mass[rest..., x_i, x_i']`` is the smaller of the two
    conditioning-event estimates.
    """
    tv = est.prob_table((v,) + cond)
    tq = est.prob_table(cond)
    safe = np.where(tq > 0.0, tq, 1.0)
    cnd = np.where(tq > 0.0, tv / safe, 0.0)
    cm = np.moveaxis(cnd, 1 + i_pos, -1)
    qm = np.moveaxis(tq, i_pos, -1)
    g = np.abs(cm[..., :, None] - cm[..., None, :])
    mass = np.minimum(qm[..., :, None], qm[..., None, :])
    return g, mass


def _ctp_accepts(est: Estimator, v: int, U: tuple[int, ...], cfg: ReconConfig) -> bool:
    """True iff no outside vertex w shows a gated conditional gap >= epsilon/2."""
    off = ~np.eye(est.A, dtype=bool)
    for w in range(est.n):
        if w == v or w in U:
            continue
        g, mass = _gap_tensors(est, v, U + (w,), len(U))
        gate = (mass > cfg.delta / 2.0) & off
        if ((g >= cfg.epsilon / 2.0).any(axis=0) & gate).any():
            return False
    return True


def neighborhood_ctp(est: Estimator, v: int, cfg: ReconConfig) -> tuple[int, ...]:
    """Smallest candidate set (size then lexicographic order) passing the
    conditional two-point screen; raises :class:`ReconstructionError` if none."""
    nb, _ = _neighborhood_ctp_traced(est, v, cfg)
    if nb is None:
        raise ReconstructionError(f"no candidate neighborhood accepted for vertex {v}")
    return nb


def _neighborhood_ctp_traced(est, v, cfg):
    others = [u for u in range(est.n) if u != v]
    checked = 0
    for size in range(0, min(cfg.d, len(others)) + 1):
        for U in itertools.combinations(others, size):
            checked += 1
            if _ctp_accepts(est, v, U, cfg):
                return U, checked
    return None, checked


def neighborhood_score(est: Estimator, v: int, U: tuple[int, ...], cfg: ReconConfig,
                       pool=None, cutoff: float | None = None) -> float:
    """Min over (W, i) of the max gated conditional change when one element
    of U is perturbed.

    ``U`` empty has no coordinate to perturb and scores ``+inf`` (the sentinel
    is never matched against the acceptance threshold).  The max over an
    empty gated assignment set is 0.  With ``cutoff`` set, returns early once
    the running min is <= cutoff (enough to decide rejection).
    """
    U = tuple(int(u) for u in U)
    if not U:
        return math.inf
    if pool is None:
        pool = range(est.n)
    wpool = [u for u in pool if u != v and u not in U]
    off = ~np.eye(est.A, dtype=bool)
    half = cfg.delta / 2.0
    best = math.inf
    for size in range(0, min(cfg.d, len(wpool)) + 1):
        for W in itertools.combinations(wpool, size):
            for i in range(len(U)):
                g, mass = _gap_tensors(est, v, U + W, i)
                gate = (mass > half) & off
                if gate.any():
                    val = float(np.where(gate, g, -np.inf).max())
                else:
                    val = 0.0
                if val < best:
                    best = val
                    if cutoff is not None and best <= cutoff:
                        return best
    return best


def neighborhood_general(est: Estimator, v: int, cfg: ReconConfig, pool=None):
    """Largest candidate set with score above epsilon/2.

    Ties among largest passing sets are flagged as ambiguous and resolved to
    the lexicographically smallest.  Returns (neighborhood, checked, ambiguous).
    """
    if pool is None:
        pool = range(est.n)
    others = [u for u in pool if u != v]
    checked = 0
    threshold = cfg.epsilon / 2.0
    for size in range(min(cfg.d, len(others)), 0, -1):
        passing = []
        for U in itertools.combinations(others, size):
            checked += 1
            f = neighborhood_score(est, v, U, cfg, pool=pool, cutoff=threshold)
            if f > threshold:
                passing.append(U)
        if passing:
            return passing[0], checked, len(passing) > 1
    return (), checked, False


def _assemble(n: int, claims: dict[int, tuple[int, ...]],
              per_vertex: dict[int, PerVertex], cfg: ReconConfig) -> ReconResult:
    """Union symmetrization; directed claims without a partner are recorded."""
    edges = set()
    inconsistencies = []
    for v, nb in claims.items():
        for u in nb:
            edges.add((min(u, v), max(u, v)))
            if v not in claims.get(u, ()):
                inconsistencies.append((u, v))
    graph = Graph.from_edges(n, edges)
    return ReconResult(graph, per_vertex, True, sorted(inconsistencies), cfg)


def reconstruct_ctp(est: Estimator, cfg: ReconConfig) -> ReconResult:
    """Per-vertex conditional two-point reconstruction with union symmetrization."""
    claims = {}
    per_vertex = {}
    for v in range(est.n):
        nb, checked = _neighborhood_ctp_traced(est, v, cfg)
        if nb is None:
            per_vertex[v] = PerVertex((), checked, failed=True)
            claims[v] = ()
        else:
            per_vertex[v] = PerVertex(nb, checked)
            claims[v] = nb
    return _assemble(est.n, claims, per_vertex, cfg)


def reconstruct_general(est: Estimator, cfg: ReconConfig) -> ReconResult:
    """Per-vertex largest-passing-score reconstruction."""
    claims = {}
    per_vertex = {}
    for v in range(est.n):
        nb, checked, ambiguous = neighborhood_general(est, v, cfg)
        per_vertex[v] = PerVertex(nb, checked, ambiguous=ambiguous)
        claims[v] = nb
    return _assemble(est.n, claims, per_vertex, cfg)


def reconstruct_decay(est: Estimator, cfg: ReconConfig, nc_cap: int = 16) -> ReconResult:
    """Score reconstruction restricted to correlation neighborhoods.

    Candidate sets and side sets are drawn only from
    ``N_C(v) = {u : corr(u, v) > kappa/2}``.  A correlation neighborhood
    larger than ``nc_cap`` aborts (kappa too small for this model); all-empty
    neighborhoods warn (kappa too large).
    """
    if cfg.kappa is None:
        raise ValueError("reconstruct_decay requires cfg.kappa")
    corr = est.corr_matrix()
    pools = {}
    for v in range(est.n):
        nc = [u for u in range(est.n) if u != v and corr[u, v] > cfg.kappa / 2.0]
        if len(nc) > nc_cap:
            raise CorrelationNeighborhoodError(
                f"correlation neighborhood of vertex {v} has {len(nc)} vertices "
                f"(cap {nc_cap}); kappa={cfg.kappa} looks too small for this model")
        pools[v] = nc
    if all(not nc for nc in pools.values()) and est.n > 1:
        warnings.warn("all correlation neighborhoods are empty; kappa too large",
                      EmptyNeighborhoodWarning, stacklevel=2)
    claims = {}
    per_vertex = {}
    for v in range(est.n):
        nb, checked, ambiguous = neighborhood_general(est, v, cfg, pool=pools[v])
        per_vertex[v] = PerVertex(nb, checked, ambiguous=ambiguous)
        claims[v] = nb
    return _assemble(est.n, claims, per_vertex, cfg)


# ---------------------------------------------------------------------------
# Hidden-vertex recovery.

def maximal_cliques(graph: Graph) -> list[tuple[int, ...]]:
    """All maximal cliques (Bron-Kerbosch with pivoting), sorted."""
    out = []

    def expand(r: set, p: set, x: set):
        if not p and not x:
            out.append(tuple(sorted(r)))
            return
        pivot = max(p | x, key=lambda u: len(graph.neighbors(u) & p))
        for u in sorted(p - graph.neighbors(pivot)):
            nu = graph.neighbors(u)
            expand(r | {u}, p & nu, x & nu)
            p.remove(u)
            x.add(u)

    expand(set(), set(range(graph.n)), set())
    return sorted(out)


def _triangle_free(edges) -> bool:
    adj: dict[int, set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return not any(adj[u] & adj[v] for u, v in edges)


def recover_hidden(gstar: Graph, dprime: int) -> Graph:
    """Contract the hidden-vertex cliques of a reconstructed observed graph.

    Each unobserved vertex shows up as a clique over its neighbors.  In
    graphs with 4-cycles the clique edges also close *spurious* maximal
    triangles (two clique members plus a second common neighbor), so the
    contraction set is chosen, not taken wholesale: among all pairwise
    disjoint selections of maximal cliques of size 3..dprime, exactly one
    must leave a triangle-free graph after contraction (the model class is
    triangle-free).  No such selection, or more than one, means hidden
    vertices are too close or reconstruction erred, and is reported via
    :class:`CliqueOverlapError` rather than resolved silently.
    """
    cands = [c for c in maximal_cliques(gstar) if len(c) >= 3]
    if len(cands) > 16:
        raise CliqueOverlapError(
            f"{len(cands)} candidate cliques; graph is nowhere near triangle-free")

    def internal(clique):
        return set(itertools.combinations(clique, 2))

    valid = []
    for mask in range(2 ** len(cands)):
        sel = [cands[i] for i in range(len(cands)) if mask >> i & 1]
        if any(len(c) > dprime for c in sel):
            continue
        if any(set(a) & set(b) for a, b in itertools.combinations(sel, 2)):
            continue
        edges = set(gstar.edges)
        for c in sel:
            edges -= internal(c)
        if _triangle_free(edges):
            valid.append(sel)
    if not valid:
        raise CliqueOverlapError(
            "no disjoint clique selection leaves a triangle-free graph; "
            "hidden vertices too close or reconstruction errors present")
    if len(valid) > 1:
        raise CliqueOverlapError(
            f"{len(valid)} clique selections are consistent; recovery is ambiguous")
    edges = set(gstar.edges)
    n = gstar.n
    for c in valid[0]:
        edges -= internal(c)
        for u in c:
            edges.add((u, n))
        n += 1
    return Graph.from_edges(n, edges)


def reconstruct_with_hidden(est: Estimator, dprime: int, cfg: ReconConfig) -> Graph:
    """Score reconstruction over observed vertices at degree bound 2*dprime,
    then clique contraction.  The estimator must already be restricted to the
    observed vertices."""
    res = reconstruct_general(est, replace(cfg, d=2 * dprime))
    return recover_hidden(res.graph, dprime)


# ---------------------------------------------------------------------------
# Sample-size and counting calculators.  Logs are natural; the constants in
# the formulas absorb the base choice.

class SampleBudget(NamedTuple):
    k: int
    failure_bound: float


class CountBound(NamedTuple):
    log_count: float
    formula_valid: bool


def _required_samples(cfg: ReconConfig, n: int, subset_size: int,
                      alphabet_size: int, coefficient: float | None) -> SampleBudget:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    coef = coefficient if coefficient is not None else 81.0 / (cfg.epsilon ** 2 * cfg.delta ** 4)
    k = math.ceil((coef * subset_size / (2.0 * cfg.d) + cfg.c1) * cfg.d * math.log(n))
    fail = 2.0 * alphabet_size ** subset_size / n ** cfg.c1
    return SampleBudget(k, fail)


def required_samples_ctp(cfg: ReconConfig, n: int, alphabet_size: int = 2,
                         coefficient: float | None = None) -> SampleBudget:
    """Samples sufficient for the two-point test, and its failure bound.

    ``coefficient`` replaces the worst-case 81/(epsilon^2 delta^4) factor,
    e.g. with an empirically calibrated value.
    """
    return _required_samples(cfg, n, cfg.d + 2, alphabet_size, coefficient)


def required_samples_general(cfg: ReconConfig, n: int, alphabet_size: int = 2,
                             coefficient: float | None = None) -> SampleBudget:
    """Samples sufficient for the score test, and its failure bound."""
    return _required_samples(cfg, n, 2 * cfg.d + 1, alphabet_size, coefficient)


def calibrated_coefficient(k_target: int, cfg: ReconConfig, n: int,
                           variant: str = "general") -> float:
    """Coefficient that makes the sample formula output ``k_target``."""
    subset = cfg.d + 2 if variant == "ctp" else 2 * cfg.d + 1
    return (k_target / (cfg.d * math.log(n)) - cfg.c1) * 2.0 * cfg.d / subset


def graph_count_lower_bound(n: int, d: int) -> CountBound:
    """Log lower bound on the number of max-degree-d graphs on n vertices.

    The product construction needs an even vertex count of at least 2d + 4;
    below that the bound is reported as 0 with the validity flag cleared.
    Odd n falls back to n - 1.
    """
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    m = n if n % 2 == 0 else n - 1
    if m < 2 * d + 4:
        return CountBound(0.0, False)
    value = (m / 4.0) * (math.log(math.comb(m // 2, d)) - math.log(math.factorial(d)))
    return CountBound(value, True)


def error_lower_bound(n: int, d: int, A: int, k: int) -> float:
    """Lower bound on reconstruction error probability for any estimator fed
    k samples, when the graph is uniform over the max-degree-d class."""
    bound = graph_count_lower_bound(n, d).log_count
    exponent = n * k * math.log(A) - bound
    if exponent >= 0:
        return 0.0
    return 1.0 - math.exp(exponent)
