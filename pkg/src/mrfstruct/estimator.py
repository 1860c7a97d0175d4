"""Probability provider consumed by the reconstruction tests.

An :class:`Estimator` answers subset-marginal queries either from sample
counts (empirical) or by exact pass-through to an enumerated joint.  Counting
is single-pass per queried subset, with the full assignment table cached per
sorted vertex tuple, since the neighborhood searches revisit the same subsets
many times.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import ZeroProbabilityError
from .oracle import DistTable, TableCache
from .sampler import SampleMatrix


class Estimator:
    """Subset-probability queries over either samples or an exact joint."""

    def __init__(self, n: int, A: int):
        self.n = n
        self.A = A
        self.nsamples: int | None = None
        self._tables: dict[tuple[int, ...], np.ndarray] = {}

    @classmethod
    def from_samples(cls, samples: SampleMatrix) -> "Estimator":
        est = cls(samples.n, samples.A)
        est.nsamples = samples.k
        est._data = samples.data
        est._exact = None
        return est

    @classmethod
    def from_dist(cls, dist: DistTable) -> "Estimator":
        est = cls(dist.n, dist.A)
        est._data = None
        est._exact = TableCache(dist)
        return est

    @property
    def is_exact(self) -> bool:
        return self._exact is not None

    def prob_table(self, vertices) -> np.ndarray:
        """Probability table over the given vertices, axes in the given order."""
        vs = tuple(int(v) for v in vertices)
        if len(set(vs)) != len(vs):
            raise ValueError(f"vertices must be distinct: {vs}")
        for v in vs:
            if not 0 <= v < self.n:
                raise ValueError(f"vertex {v} out of range for n={self.n}")
        if self._exact is not None:
            return self._exact.table(vs)
        key = tuple(sorted(vs))
        base = self._tables.get(key)
        if base is None:
            cols = np.array(key, dtype=np.int64)
            counts = kernels.count_subset(self._data, cols, self.A)
            base = (counts / self.nsamples).reshape((self.A,) * len(key))
            self._tables[key] = base
        perm = tuple(key.index(v) for v in vs)
        return np.transpose(base, perm)

    def prob(self, U, x_U) -> float:
        """P(X(U) = x_U); 1.0 for the empty event."""
        vs = tuple(int(v) for v in U)
        xs = tuple(int(x) for x in x_U)
        if len(vs) != len(xs):
            raise ValueError(f"assignment length {len(xs)} != |U| = {len(vs)}")
        if not vs:
            return 1.0
        return float(self.prob_table(vs)[xs])

    def cond_prob(self, v: int, x_v: int, U, x_U) -> float:
        """P(X(v) = x_v | X(U) = x_U); zero conditioning mass is an error."""
        den = self.prob(U, x_U)
        if den <= 0.0:
            raise ZeroProbabilityError(
                f"conditioning event X({list(U)}) = {list(x_U)} has zero estimate")
        num = self.prob((int(v),) + tuple(int(u) for u in U),
                        (int(x_v),) + tuple(int(x) for x in x_U))
        return num / den

    def corr(self, u: int, v: int) -> float:
        """Correlation distance: total deviation of (u, v) from independence."""
        if int(u) == int(v):
            raise ValueError("correlation needs two distinct vertices")
        joint = self.prob_table((int(u), int(v)))
        pu = joint.sum(axis=1)
        pv = joint.sum(axis=0)
        return float(np.abs(joint - np.outer(pu, pv)).sum())

    def corr_matrix(self) -> np.ndarray:
        """All pairwise correlation distances as a symmetric (n, n) array.

        Empirical mode runs a single pass over the sample matrix, which is
        the quadratic-in-n stage of the pruned reconstruction.
        """
        n, A = self.n, self.A
        out = np.zeros((n, n))
        if self._exact is None:
            counts = kernels.pair_counts(self._data, A)
            for u in range(n):
                for v in range(u + 1, n):
                    joint = counts[u, v] / self.nsamples
                    pu = joint.sum(axis=1)
                    pv = joint.sum(axis=0)
                    out[u, v] = out[v, u] = float(np.abs(joint - np.outer(pu, pv)).sum())
        else:
            for u in range(n):
                for v in range(u + 1, n):
                    out[u, v] = out[v, u] = self.corr(u, v)
        return out
