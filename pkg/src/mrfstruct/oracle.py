"""Exact inference by full state enumeration, plus non-degeneracy verification.

Everything here is exact at small scale: the joint table is materialized for
all ``A**n`` states (capped, see ``enum_cap``), and marginals, conditionals,
correlation distances and condition witnesses are computed from it.  The
verifiers report the largest gap/mass thresholds a concrete model actually
realizes, so experiments can be driven by measured values instead of assumed
ones.
"""
from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import MRFError, StateSpaceError, ZeroProbabilityError
from .model import Graph, Model

DEFAULT_ENUM_CAP = 2 ** 24


def enum_cap() -> int:
    """State-count cap for exact enumeration; env MRF_ENUM_CAP overrides."""
    return int(os.environ.get("MRF_ENUM_CAP", DEFAULT_ENUM_CAP))


def flatten_potentials(model: Model):
    """Flat (clique, clique_ptr, table, table_ptr) arrays for the kernels."""
    clique_flat, clique_ptr = [], [0]
    table_flat, table_ptr = [], [0]
    for p in model.potentials:
        clique_flat.extend(p.clique)
        clique_ptr.append(len(clique_flat))
        table_flat.extend(p.table.tolist())
        table_ptr.append(len(table_flat))
    return (np.array(clique_flat, dtype=np.int64),
            np.array(clique_ptr, dtype=np.int64),
            np.array(table_flat, dtype=np.float64),
            np.array(table_ptr, dtype=np.int64))


def site_incidence(model: Model):
    """CSR-style (ptr, idx) of which potentials touch each site."""
    per_site = [[] for _ in range(model.n)]
    for pi, p in enumerate(model.potentials):
        for v in p.clique:
            per_site[v].append(pi)
    ptr = [0]
    idx = []
    for s in range(model.n):
        idx.extend(per_site[s])
        ptr.append(len(idx))
    return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


@dataclass(frozen=True)
class DistTable:
    """Exact joint distribution over ``A**n`` states (vertex 0 most significant)."""

    probs: np.ndarray
    n: int
    A: int
    model: Model | None = field(default=None, compare=False)

    def tensor(self) -> np.ndarray:
        return self.probs.reshape((self.A,) * self.n)


def joint_distribution(model: Model, cap: int | None = None) -> DistTable:
    """Enumerate and normalize the Gibbs distribution of ``model``.

    States touching a ``-inf`` potential entry get probability zero.  Raises
    :class:`StateSpaceError` when ``A**n`` exceeds the cap.
    """
    n, A = model.n, model.alphabet_size
    states = A ** n
    limit = enum_cap() if cap is None else cap
    if states > limit:
        raise StateSpaceError(
            f"state space {A}^{n} = {states} exceeds enumeration cap {limit}")
    cf, cp, tf, tp = flatten_potentials(model)
    lw = kernels.enum_log_weights(n, A, cf, cp, tf, tp)
    top = float(np.max(lw))
    if math.isinf(top) and top < 0:
        raise MRFError("all states have zero probability (hard constraints exclude everything)")
    w = np.exp(lw - top)
    z = float(w.sum())
    return DistTable(w / z, n, A, model)


def _check_vertices(dist: DistTable, vertices) -> tuple[int, ...]:
    vs = tuple(int(v) for v in vertices)
    if len(set(vs)) != len(vs):
        raise ValueError(f"vertices must be distinct: {vs}")
    for v in vs:
        if not 0 <= v < dist.n:
            raise ValueError(f"vertex {v} out of range for n={dist.n}")
    return vs


def marginal_table(dist: DistTable, vertices) -> np.ndarray:
    """Marginal probability table with axes in the given vertex order."""
    vs = _check_vertices(dist, vertices)
    others = tuple(a for a in range(dist.n) if a not in set(vs))
    reduced = dist.tensor().sum(axis=others) if others else dist.tensor()
    # reduced axes are the kept vertices in ascending order
    ascending = sorted(vs)
    perm = tuple(ascending.index(v) for v in vs)
    return np.transpose(reduced, perm)


class TableCache:
    """Caches marginal tables of a DistTable, keyed by sorted vertex tuple."""

    def __init__(self, dist: DistTable):
        self.dist = dist
        self.A = dist.A
        self._tables: dict[tuple[int, ...], np.ndarray] = {}

    def table(self, vertices) -> np.ndarray:
        vs = tuple(int(v) for v in vertices)
        key = tuple(sorted(vs))
        base = self._tables.get(key)
        if base is None:
            base = marginal_table(self.dist, key)
            self._tables[key] = base
        perm = tuple(key.index(v) for v in vs)
        return np.transpose(base, perm)


def marginal(dist: DistTable, U, x_U) -> float:
    """P(X(U) = x_U); the empty event has probability 1."""
    vs = _check_vertices(dist, U)
    xs = tuple(int(x) for x in x_U)
    if len(xs) != len(vs):
        raise ValueError(f"assignment length {len(xs)} != |U| = {len(vs)}")
    for x in xs:
        if not 0 <= x < dist.A:
            raise ValueError(f"symbol {x} out of range for A={dist.A}")
    if not vs:
        return 1.0
    return float(marginal_table(dist, vs)[xs])


def conditional(dist: DistTable, v: int, x_v: int, U, x_U) -> float:
    """P(X(v) = x_v | X(U) = x_U); conditioning on a null event is an error."""
    vs = _check_vertices(dist, U)
    if int(v) in vs:
        raise ValueError(f"vertex {v} cannot be conditioned on itself")
    den = marginal(dist, vs, x_U)
    if den <= 0.0:
        raise ZeroProbabilityError(
            f"conditioning event X({list(vs)}) = {list(x_U)} has probability 0")
    num = marginal(dist, (int(v),) + vs, (int(x_v),) + tuple(x_U))
    return num / den


def correlation_distance(dist: DistTable, u: int, v: int) -> float:
    """Total deviation of the pair (u, v) from independence."""
    if int(u) == int(v):
        raise ValueError("correlation distance needs two distinct vertices")
    joint = marginal_table(dist, (int(u), int(v)))
    pu = joint.sum(axis=1)
    pv = joint.sum(axis=0)
    return float(np.abs(joint - np.outer(pu, pv)).sum())


def marginalize(dist: DistTable, keep) -> DistTable:
    """Restrict the joint to the given vertices (renumbered 0..m-1 in order)."""
    vs = _check_vertices(dist, keep)
    if not vs:
        raise ValueError("keep must be non-empty")
    table = marginal_table(dist, vs)
    return DistTable(np.ascontiguousarray(table).reshape(-1), len(vs), dist.A, None)


# ---------------------------------------------------------------------------
# Condition verification.
#
# Each verifier enumerates the constraint family of its test and searches all
# witnesses exhaustively.  The realized thresholds are extracted in two
# passes so that every constraint ends up with a *joint* witness:
#   epsilon_star = min over constraints of the best gap (positive-mass
#                  witnesses only);
#   delta_star   = min over constraints of the best mass among witnesses
#                  whose gap is >= epsilon_star.
# With (epsilon, delta) = (epsilon_star, delta_star), each constraint has a
# witness with gap >= epsilon_star and mass >= delta_star, which is exactly
# what the reconstruction thresholds (epsilon/2 gap, delta/2 mass gate) need.


@dataclass
class Witness:
    v: int
    U: tuple[int, ...]
    w: int
    assignment: dict
    gap: float
    mass: float

    def to_dict(self) -> dict:
        return {"v": self.v, "U": list(self.U), "w": self.w,
                "assignment": self.assignment, "gap": self.gap, "mass": self.mass}


@dataclass
class ConditionReport:
    holds: bool
    epsilon_star: float
    delta_star: float
    witnesses: list[Witness]
    failures: list[dict]
    constraint_count: int = 0

    def to_dict(self) -> dict:
        def enc(x: float):
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
        return {
            "holds": self.holds,
            "epsilon_star": enc(self.epsilon_star),
            "delta_star": enc(self.delta_star),
            "failures": self.failures,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _scan_perturbed(cache: TableCache, target: int, cond: tuple[int, ...],
                    i_pos: int, gate: float | None, mass_gate: float = 0.0):
    """Best witness for one perturbed-conditional constraint.

    The constraint compares P(X(target) | X(cond)) before and after replacing
    the symbol at position ``i_pos`` of ``cond``.  A witness's mass is the
    smaller of the two conditioning-event probabilities.  With ``gate=None``
    the best witness maximizes the gap over witnesses with mass > mass_gate;
    otherwise it maximizes the mass among witnesses with gap >= gate.
    Returns (score, info) with info = (x_target, x_rest, x_i, x_i', gap, mass),
    or (-1.0, None) when no admissible witness exists.
    """
    A = cache.A
    tv = cache.table((target,) + cond)
    tq = cache.table(cond)
    safe = np.where(tq > 0.0, tq, 1.0)
    cnd = np.where(tq > 0.0, tv / safe, 0.0)
    cm = np.moveaxis(cnd, 1 + i_pos, -1)
    qm = np.moveaxis(tq, i_pos, -1)
    g = np.abs(cm[..., :, None] - cm[..., None, :])
    mass = np.minimum(qm[..., :, None], qm[..., None, :])
    off = ~np.eye(A, dtype=bool)
    if gate is None:
        scored = np.where((mass > mass_gate) & off, g, -1.0)
    else:
        scored = np.where((mass > 0.0) & off & (g >= gate),
                          np.broadcast_to(mass, g.shape), -1.0)
    flat = int(np.argmax(scored))
    best = float(scored.reshape(-1)[flat])
    if best < 0.0:
        return -1.0, None
    loc = np.unravel_index(flat, scored.shape)
    info = (int(loc[0]), tuple(int(z) for z in loc[1:-2]), int(loc[-2]), int(loc[-1]),
            float(g[loc]), float(mass[loc[1:]]))
    return best, info


def _stars_from_scans(constraints, scan_one, make_witness):
    """Two-pass epsilon/delta extraction over a list of constraints."""
    gaps = []
    for c in constraints:
        val, _ = scan_one(c, None)
        gaps.append(val)
    failures = [i for i, gp in enumerate(gaps) if gp <= 0.0]
    if failures:
        return 0.0, 0.0, [], failures
    eps = min(gaps)
    delta = math.inf
    witnesses = []
    for c in constraints:
        val, info = scan_one(c, eps)
        delta = min(delta, val)
        witnesses.append(make_witness(c, info))
    return eps, delta, witnesses, []


def verify_ctp_conditions(model: Model, d: int, cap: int | None = None) -> ConditionReport:
    """Verify the conditional two-point test's gap/mass conditions of a model."""
    return verify_ctp_conditions_dist(joint_distribution(model, cap), model.graph, d)


def verify_ctp_conditions_dist(dist: DistTable, g: Graph, d: int) -> ConditionReport:
    """Verify the conditional two-point test's gap/mass conditions.

    Constraints: every (v, U) with |U| <= d and N(v) not contained in U must
    have some w outside U+{v} and assignments with both conditioning masses
    positive and a conditional two-point gap.  A model with no edges has
    nothing to witness and is reported as not holding.
    """
    cache = TableCache(dist)
    n = dist.n
    constraints = []
    for v in range(n):
        nb = set(g.neighbors(v))
        others = [u for u in range(n) if u != v]
        for size in range(0, min(d, n - 1) + 1):
            for U in itertools.combinations(others, size):
                if not nb.issubset(U):
                    constraints.append((v, U))
    if not constraints:
        return ConditionReport(False, 0.0, 0.0, [], [], 0)

    def scan_one(c, gate):
        v, U = c
        pool = [w for w in range(n) if w != v and w not in U]
        best, best_info = -1.0, None
        for w in pool:
            val, info = _scan_perturbed(cache, v, U + (w,), len(U), gate)
            if val > best:
                best, best_info = val, (w, info)
        return best, best_info

    def make_witness(c, winfo):
        v, U = c
        w, (x_v, rest, x_w, x_wp, gap, mass) = winfo
        return Witness(v, U, w,
                       {"x_v": x_v, "x_U": list(rest), "x_w": x_w, "x_w_prime": x_wp},
                       gap, mass)

    eps, delta, wits, fail_idx = _stars_from_scans(constraints, scan_one, make_witness)
    failures = [{"v": constraints[i][0], "U": list(constraints[i][1])} for i in fail_idx]
    holds = not failures and eps > 0.0 and delta > 0.0
    return ConditionReport(holds, eps, delta, wits, failures, len(constraints))


def verify_general_conditions(model: Model, d: int, cap: int | None = None) -> ConditionReport:
    """Verify the perturbed-neighbor score conditions of a model."""
    return verify_general_conditions_dist(joint_distribution(model, cap), model.graph, d)


def verify_general_conditions_dist(dist: DistTable, g: Graph, d: int) -> ConditionReport:
    """Verify the perturbed-neighbor score conditions.

    Constraints: for every v with neighbors u_1..u_l, every i, and every
    W <= d disjoint from {v} and N(v), some assignment must separate the
    conditional of v under a flip of u_i, with both conditioning events
    (including W) carrying mass.  Vertices with no neighbors impose no
    constraint; a model with no constraints holds vacuously.
    """
    cache = TableCache(dist)
    n = dist.n
    constraints = []
    for v in range(n):
        nb = tuple(sorted(g.neighbors(v)))
        if not nb:
            continue
        pool = [u for u in range(n) if u != v and u not in nb]
        for i in range(len(nb)):
            for size in range(0, min(d, len(pool)) + 1):
                for W in itertools.combinations(pool, size):
                    constraints.append((v, nb, i, W))
    if not constraints:
        return ConditionReport(True, math.inf, math.inf, [], [], 0)

    def scan_one(c, gate):
        v, nb, i, W = c
        return _scan_perturbed(cache, v, nb + W, i, gate)

    def make_witness(c, info):
        v, nb, i, W = c
        x_v, rest, x_i, x_ip, gap, mass = info
        l = len(nb)
        x_nb = list(rest[:i]) + [x_i] + list(rest[i:l - 1])
        x_w = list(rest[l - 1:])
        return Witness(v, nb, nb[i],
                       {"x_v": x_v, "x_U": x_nb, "x_u_prime": x_ip,
                        "W": list(W), "x_W": x_w},
                       gap, mass)

    eps, delta, wits, fail_idx = _stars_from_scans(constraints, scan_one, make_witness)
    failures = [{"v": constraints[i][0], "U": list(constraints[i][1]),
                 "i": constraints[i][2], "W": list(constraints[i][3])}
                for i in fail_idx]
    holds = not failures and eps > 0.0 and delta > 0.0
    return ConditionReport(holds, eps, delta, wits, failures, len(constraints))


def verify_hidden_conditions(model: Model, dprime: int, cap: int | None = None) -> ConditionReport:
    """Verify the hidden-vertex recovery conditions of a model."""
    return verify_hidden_conditions_dist(joint_distribution(model, cap), model.graph, dprime)


def verify_hidden_conditions_dist(dist: DistTable, g: Graph, dprime: int) -> ConditionReport:
    """Verify the hidden-vertex recovery conditions.

    For every v and ordered neighbor pair (v1, v2), flipping v2 must move the
    conditional of v1 given U = N(v) + N(v1) - {v, v1, v2} and any
    W <= 2*dprime outside N(v) + N(v1), with both events carrying mass.
    """
    cache = TableCache(dist)
    n = dist.n
    constraints = []
    for v in range(n):
        nb = sorted(g.neighbors(v))
        for v1 in nb:
            for v2 in nb:
                if v2 == v1:
                    continue
                union = set(nb) | set(g.neighbors(v1))
                U = tuple(sorted(union - {v, v1, v2}))
                pool = [u for u in range(n) if u not in union and u != v and u != v1]
                for size in range(0, min(2 * dprime, len(pool)) + 1):
                    for W in itertools.combinations(pool, size):
                        constraints.append((v, v1, v2, U, W))
    if not constraints:
        return ConditionReport(True, math.inf, math.inf, [], [], 0)

    def scan_one(c, gate):
        v, v1, v2, U, W = c
        return _scan_perturbed(cache, v1, U + (v2,) + W, len(U), gate)

    def make_witness(c, info):
        v, v1, v2, U, W = c
        x_v1, rest, x_v2, x_v2p, gap, mass = info
        return Witness(v, U, v2,
                       {"v1": v1, "x_v1": x_v1, "x_v2": x_v2, "x_v2_prime": x_v2p,
                        "x_U": list(rest[:len(U)]), "W": list(W),
                        "x_W": list(rest[len(U):])},
                       gap, mass)

    eps, delta, wits, fail_idx = _stars_from_scans(constraints, scan_one, make_witness)
    failures = [{"v": constraints[i][0], "U": list(constraints[i][3])} for i in fail_idx]
    holds = not failures and eps > 0.0 and delta > 0.0
    return ConditionReport(holds, eps, delta, wits, failures, len(constraints))


def markov_residual_ctp(dist: DistTable, g: Graph, d: int, mass_gate: float) -> float:
    """Largest gated two-point gap that survives conditioning on a superset
    of the true neighborhood.

    Zero (up to rounding) whenever ``dist`` is Markov with respect to ``g``.
    Under observation noise it is positive and measures the acceptance-side
    floor: the two-point test accepts true neighborhoods only if epsilon/2
    exceeds this value at the same delta/2 mass gate.
    """
    cache = TableCache(dist)
    n = dist.n
    worst = 0.0
    for v in range(n):
        nb = set(g.neighbors(v))
        others = [u for u in range(n) if u != v]
        for size in range(len(nb), min(d, len(others)) + 1):
            for U in itertools.combinations(others, size):
                if not nb.issubset(U):
                    continue
                for w in others:
                    if w in U:
                        continue
                    val, _ = _scan_perturbed(cache, v, U + (w,), len(U), None, mass_gate)
                    if val > worst:
                        worst = val
    return worst


def robust_ctp_thresholds(dist: DistTable, g: Graph, d: int):
    """Two-point thresholds for a distribution that is only approximately
    Markov with respect to ``g`` (e.g. the exact noisy-observation law).

    Returns ``(epsilon, delta, report, residual)``: the verified rejection
    gaps must clear the acceptance residual, and epsilon is placed between
    them (epsilon = epsilon_star + residual, so epsilon/2 separates the two).
    Raises :class:`MRFError` when the conditions fail or leave no separation.
    """
    report = verify_ctp_conditions_dist(dist, g, d)
    if not report.holds:
        raise MRFError("two-point conditions do not hold for this distribution")
    residual = markov_residual_ctp(dist, g, d, report.delta_star / 2.0)
    if residual >= report.epsilon_star:
        raise MRFError(
            f"no usable gap threshold: acceptance residual {residual:.4g} >= "
            f"rejection gap {report.epsilon_star:.4g} (noise too strong)")
    return report.epsilon_star + residual, report.delta_star, report, residual


# ---------------------------------------------------------------------------
# Closed-form threshold bounds for Ising families.

def ising_condition_bounds(c: float, C: float, d: int,
                           stated_form: bool = False) -> tuple[float, float]:
    """Lower bounds (epsilon, delta) for Ising couplings with c < |beta| < C.

    The default epsilon form is tanh(2c) / (2 e^{2C} + 2 e^{-2C}); pass
    ``stated_form=True`` for the weaker-looking variant
    tanh(2c) / (2 C^2 + 2 C^{-2}) (the two circulate side by side; the
    default is the one the derivation actually yields).
    """
    if not 0 < c < C:
        raise ValueError(f"need 0 < c < C, got c={c}, C={C}")
    if stated_form:
        eps = math.tanh(2 * c) / (2 * C ** 2 + 2 * C ** -2)
    else:
        eps = math.tanh(2 * c) / (2 * math.exp(2 * C) + 2 * math.exp(-2 * C))
    delta = math.exp(-4 * d * C) / 2 ** (2 * d)
    return eps, delta


def hidden_condition_bounds(c: float, C: float, d: int) -> tuple[float, float]:
    """Lower bounds (epsilon, delta) for ferromagnetic hidden-vertex recovery."""
    if not 0 < c < C:
        raise ValueError(f"need 0 < c < C, got c={c}, C={C}")
    if d < 3:
        raise ValueError(f"hidden-vertex recovery needs degree bound >= 3, got {d}")
    eps = math.tanh(2 * c) / (32 * math.exp(2 * (d + 1) * C) * (C ** 2 + C ** -2))
    delta = math.exp(-4 * d * C) / 2 ** (2 * d)
    return eps, delta


def soft_constraint_feasible(model: Model, K: float, gamma: float) -> bool:
    """True iff every pairwise potential is K-bounded with a four-point gap > gamma."""
    A = model.alphabet_size
    for p in model.potentials:
        if len(p.clique) != 2:
            raise MRFError(f"soft-constraint check needs pairwise potentials only, "
                           f"found clique of size {len(p.clique)}")
        t = p.table.reshape(A, A)
        if np.abs(t).max() > K:
            return False
        combo = (t[:, None, :, None] - t[None, :, :, None]
                 - t[:, None, None, :] + t[None, :, None, :])
        if np.abs(combo).max() <= gamma:
            return False
    return True


# ---------------------------------------------------------------------------
# The 3-vertex noisy-observation map and its Jacobian.

def _h(beta: float) -> float:
    # e^b / (e^b + e^-b), numerically stable
    return 1.0 / (1.0 + math.exp(-2.0 * beta))


def nonid_map(b11p: float, b12: float, b13: float) -> tuple[float, float, float]:
    """Pairwise agreement probabilities of the noisy 3-vertex star model.

    Returns (p12, p13, p23) with p_ij = h(b_i) h(b_j) + h(-b_i) h(-b_j),
    where the noisy copy's coupling is b11p and h is the logistic spin
    marginal.
    """
    def p(a, b):
        return _h(a) * _h(b) + _h(-a) * _h(-b)
    return p(b11p, b12), p(b11p, b13), p(b12, b13)


def nonid_jacobian_det(point, step: float = 1e-5) -> float:
    """|det| of the Jacobian of :func:`nonid_map` by central differences.

    The magnitude is the orientation-free non-singularity measure; a positive
    value means the map carries an open neighborhood onto one, which is what
    the non-identifiability construction needs.
    """
    x = np.asarray(point, dtype=np.float64)
    jac = np.empty((3, 3))
    for b in range(3):
        hi = x.copy()
        lo = x.copy()
        hi[b] += step
        lo[b] -= step
        fhi = np.array(nonid_map(*hi))
        flo = np.array(nonid_map(*lo))
        jac[:, b] = (fhi - flo) / (2.0 * step)
    return float(abs(np.linalg.det(jac)))
