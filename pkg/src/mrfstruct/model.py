"""Graphs and clique-factorized Markov random fields.

A model is a bounded-degree undirected graph plus potential tables on its
cliques; the induced distribution is proportional to ``exp(sum of potential
entries)`` over the alphabet ``{0, ..., A-1}``.  Ising instances map spin
values as 0 -> +1 and 1 -> -1.

Assignment-to-index convention (used for every potential table and for the
JSON file format): mixed radix with the *first* clique vertex most
significant, i.e. ``index = sum_j x[j] * A**(m-1-j)``.
"""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import HardConstraintWarning, ModelFormatError


def assignment_to_index(assignment, A: int) -> int:
    """Flat table index of an assignment (first position most significant)."""
    idx = 0
    for x in assignment:
        idx = idx * A + int(x)
    return idx


def index_to_assignment(idx: int, m: int, A: int) -> tuple[int, ...]:
    """Inverse of :func:`assignment_to_index` for a length-``m`` clique."""
    out = [0] * m
    for j in range(m - 1, -1, -1):
        out[j] = idx % A
        idx //= A
    return tuple(out)


@dataclass(frozen=True)
class Graph:
    """Undirected graph on vertices ``0..n-1`` with adjacency-set access."""

    n: int
    edges: frozenset[tuple[int, int]]
    adjacency: tuple[frozenset[int], ...] = field(compare=False)

    @staticmethod
    def from_edges(n: int, edges) -> "Graph":
        if n < 0:
            raise ValueError(f"vertex count must be >= 0, got {n}")
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            e = (u, v) if u < v else (v, u)
            if e in canon:
                raise ValueError(f"duplicate edge {e}")
            canon.add(e)
        adj = [set() for _ in range(n)]
        for u, v in canon:
            adj[u].add(v)
            adj[v].add(u)
        return Graph(n, frozenset(canon), tuple(frozenset(s) for s in adj))

    def neighbors(self, v: int) -> frozenset[int]:
        return self.adjacency[v]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def max_degree(self) -> int:
        return max((len(s) for s in self.adjacency), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_clique(self, vertices) -> bool:
        vs = list(vertices)
        return all(self.has_edge(a, b) for a, b in itertools.combinations(vs, 2))


@dataclass(frozen=True)
class Potential:
    """A real table over assignments of an ordered clique (``-inf`` allowed)."""

    clique: tuple[int, ...]
    table: np.ndarray  # shape (A**len(clique),), float64

    def __post_init__(self):
        object.__setattr__(self, "clique", tuple(int(v) for v in self.clique))
        t = np.asarray(self.table, dtype=np.float64)
        object.__setattr__(self, "table", t)
        if len(self.clique) < 1:
            raise ValueError("clique must contain at least one vertex")
        if len(set(self.clique)) != len(self.clique):
            raise ValueError(f"clique vertices must be distinct: {self.clique}")
        if np.isnan(t).any() or np.isposinf(t).any():
            raise ValueError("potential entries must be finite or -inf")

    def size(self) -> int:
        return len(self.clique)


@dataclass(frozen=True)
class Model:
    """A graph, an alphabet size, and the potentials defining the distribution."""

    graph: Graph
    alphabet_size: int
    potentials: tuple[Potential, ...]

    def __post_init__(self):
        object.__setattr__(self, "potentials", tuple(self.potentials))
        if self.alphabet_size < 2:
            raise ValueError(f"alphabet size must be >= 2, got {self.alphabet_size}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def A(self) -> int:
        return self.alphabet_size


def spin(x: int) -> int:
    """Map an alphabet symbol to an Ising spin: 0 -> +1, 1 -> -1."""
    return 1 - 2 * x


def new_ising(n: int, couplings) -> Model:
    """Pairwise binary model with potential ``beta * spin(x_u) * spin(x_v)`` per edge.

    ``couplings`` is an iterable of ``(u, v, beta)``.  Raises on duplicate
    pairs and out-of-range or equal endpoints.
    """
    edges = []
    pots = []
    seen = set()
    for u, v, beta in couplings:
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"coupling endpoints equal: {u}")
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"coupling ({u},{v}) out of range for n={n}")
        key = (min(u, v), max(u, v))
        if key in seen:
            raise ValueError(f"duplicate coupling pair {key}")
        seen.add(key)
        edges.append((u, v))
        table = np.empty(4)
        for xu in (0, 1):
            for xv in (0, 1):
                table[assignment_to_index((xu, xv), 2)] = beta * spin(xu) * spin(xv)
        pots.append(Potential((u, v), table))
    graph = Graph.from_edges(n, edges)
    return Model(graph, 2, tuple(pots))


def random_bounded_graph(n: int, d: int, seed: int) -> Graph:
    """Random graph with max degree <= d.

    Deterministic for a fixed seed: shuffle the full candidate-edge stream,
    then accept each edge iff both endpoints currently have degree < d.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if d < 0:
        raise ValueError(f"degree bound must be >= 0, got {d}")
    candidates = list(itertools.combinations(range(n), 2))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))
    rng.shuffle(candidates)
    deg = [0] * n
    edges = []
    for u, v in candidates:
        if deg[u] < d and deg[v] < d:
            edges.append((u, v))
            deg[u] += 1
            deg[v] += 1
    return Graph.from_edges(n, edges)


def validate(model: Model) -> list[str]:
    """Check Model invariants; return one message per violation (empty if valid).

    Presence of ``-inf`` entries is legal but triggers a
    :class:`HardConstraintWarning`, since the neighborhood tests are not
    guaranteed under hard constraints.
    """
    out = []
    g = model.graph
    A = model.alphabet_size
    has_hard = False
    for p in model.potentials:
        if any(not 0 <= v < g.n for v in p.clique):
            out.append(f"potential clique out of range: {p.clique}")
            continue
        if len(p.table) != A ** len(p.clique):
            out.append(f"potential table length {len(p.table)} != A^{len(p.clique)} "
                       f"for clique {p.clique}")
        if not g.is_clique(p.clique):
            out.append(f"potential clique not in graph: {tuple(sorted(p.clique))}")
        if np.isneginf(p.table).any():
            has_hard = True
    covered = set()
    for p in model.potentials:
        if len(p.clique) >= 2:
            for a, b in itertools.combinations(sorted(p.clique), 2):
                covered.add((a, b))
    for e in sorted(g.edges):
        if e not in covered:
            out.append(f"uncovered edge: {e}")
    if has_hard:
        warnings.warn("model contains -inf (hard constraint) potentials; "
                      "neighborhood-test guarantees are not claimed",
                      HardConstraintWarning, stacklevel=2)
    return out


# ---------------------------------------------------------------------------
# Named test graphs and model builders.

def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def cube_graph() -> Graph:
    """The 3-dimensional hypercube on vertices 0..7 (bit-flip adjacency)."""
    edges = [(u, u ^ (1 << b)) for u in range(8) for b in range(3) if u < u ^ (1 << b)]
    return Graph.from_edges(8, edges)


def ising_on_graph(graph: Graph, beta) -> Model:
    """Ising model on ``graph``; ``beta`` is a constant or an ``{edge: value}`` map."""
    if isinstance(beta, dict):
        couplings = [(u, v, beta[(u, v)]) for u, v in graph.edge_list()]
    else:
        couplings = [(u, v, float(beta)) for u, v in graph.edge_list()]
    return new_ising(graph.n, couplings)


def random_ising(n: int, d: int, seed: int, low: float = 0.6, high: float = 1.0,
                 random_sign: bool = False) -> Model:
    """Ising model on a random bounded-degree graph with |beta| in [low, high]."""
    g = random_bounded_graph(n, d, seed)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) + 1)))
    couplings = []
    for u, v in g.edge_list():
        b = float(rng.uniform(low, high))
        if random_sign and rng.random() < 0.5:
            b = -b
        couplings.append((u, v, b))
    return new_ising(n, couplings)


def xor_triple(strength: float = 1.0) -> Model:
    """Three binary vertices coupled only through a parity (3-clique) potential.

    Every pairwise marginal is uniform, so pairwise two-point tests are blind
    to the structure while the perturbed-neighbor score is not.
    """
    table = np.empty(8)
    for x0, x1, x2 in itertools.product((0, 1), repeat=3):
        table[assignment_to_index((x0, x1, x2), 2)] = (
            strength if (x0 ^ x1 ^ x2) == 0 else 0.0)
    graph = Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    return Model(graph, 2, (Potential((0, 1, 2), table),))


# ---------------------------------------------------------------------------
# JSON model files.
#
# {"n": int, "alphabet": int,
#  "potentials": [{"clique": [int...], "table": [float | "-inf", ...]}]}
#
# Table order follows the mixed-radix convention above.  The graph is the one
# implied by the potentials: an edge per vertex pair sharing a clique.

def _encode_table(table: np.ndarray) -> list:
    return [("-inf" if math.isinf(v) and v < 0 else float(v)) for v in table]

def _decode_table(values) -> np.ndarray:
    out = []
    for v in values:
        if v == "-inf":
            out.append(-math.inf)
        elif isinstance(v, (int, float)):
            out.append(float(v))
        else:
            raise ModelFormatError(f"bad table entry {v!r}")
    return np.array(out, dtype=np.float64)


def model_to_dict(model: Model) -> dict:
    return {
        "n": model.n,
        "alphabet": model.alphabet_size,
        "potentials": [
            {"clique": list(p.clique), "table": _encode_table(p.table)}
            for p in model.potentials
        ],
    }


def model_from_dict(doc: dict) -> Model:
    try:
        n = int(doc["n"])
        A = int(doc["alphabet"])
        raw = doc["potentials"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad model document: {exc}") from exc
    pots = []
    edges = set()
    for entry in raw:
        try:
            clique = tuple(int(v) for v in entry["clique"])
            table = _decode_table(entry["table"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"bad potential entry: {exc}") from exc
        if len(table) != A ** len(clique):
            raise ModelFormatError(
                f"table length {len(table)} != A^{len(clique)} for clique {clique}")
        if any(not 0 <= v < n for v in clique):
            raise ModelFormatError(f"clique {clique} out of range for n={n}")
        pots.append(Potential(clique, table))
        for a, b in itertools.combinations(sorted(clique), 2):
            edges.add((a, b))
    return Model(Graph.from_edges(n, edges), A, tuple(pots))


def save_model(model: Model, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON in {path}: {exc}") from exc
    return model_from_dict(doc)
