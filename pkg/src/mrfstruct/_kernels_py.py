"""Pure-Python / numpy implementations of the hot kernels.

Mirrors the compiled module ``mrfstruct._kernels`` operation for operation;
the two are interchangeable and (for the Gibbs sweep, which consumes a shared
uniform stream) produce bit-identical output.  Loop and accumulation order is
part of the contract: keep it in sync with the .pyx file.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def count_subset(data: np.ndarray, cols: np.ndarray, A: int) -> np.ndarray:
    """Counts of every assignment of the ``cols`` columns over the rows of ``data``.

    Returned flat table is mixed radix, first column most significant.
    """
    k = data.shape[0]
    m = len(cols)
    if m == 0:
        return np.array([k], dtype=np.int64)
    weights = A ** np.arange(m - 1, -1, -1, dtype=np.int64)
    codes = data[:, cols].astype(np.int64) @ weights
    return np.bincount(codes, minlength=A ** m).astype(np.int64)


def pair_counts(data: np.ndarray, A: int) -> np.ndarray:
    """Joint counts for every vertex pair: shape (n, n, A, A), filled for u < v."""
    k, n = data.shape
    out = np.zeros((n, n, A, A), dtype=np.int64)
    cols = data.astype(np.int64)
    for u in range(n):
        for v in range(u + 1, n):
            codes = cols[:, u] * A + cols[:, v]
            out[u, v] = np.bincount(codes, minlength=A * A).reshape(A, A)
    return out


def enum_log_weights(n: int, A: int,
                     clique_flat: np.ndarray, clique_ptr: np.ndarray,
                     table_flat: np.ndarray, table_ptr: np.ndarray) -> np.ndarray:
    """Sum of potential entries for every global state, as a flat (A**n,) array.

    States are indexed mixed radix with vertex 0 most significant.
    """
    lw = np.zeros((A,) * n, dtype=np.float64) if n > 0 else np.zeros((), dtype=np.float64)
    P = len(clique_ptr) - 1
    for p in range(P):
        clique = clique_flat[clique_ptr[p]:clique_ptr[p + 1]]
        m = len(clique)
        table = table_flat[table_ptr[p]:table_ptr[p + 1]].reshape((A,) * m)
        order = np.argsort(clique, kind="stable")
        table_sorted = np.transpose(table, tuple(order))
        shape = [1] * n
        for c in clique[order]:
            shape[c] = A
        lw += table_sorted.reshape(shape)
    return lw.reshape(-1)


def gibbs_sweeps(state: np.ndarray, uniforms: np.ndarray, A: int,
                 site_pot_ptr: np.ndarray, site_pot_idx: np.ndarray,
                 clique_flat: np.ndarray, clique_ptr: np.ndarray,
                 table_flat: np.ndarray, table_ptr: np.ndarray,
                 record_every: int, out: np.ndarray, out_start: int) -> int:
    """Systematic-scan Gibbs sweeps; consumes one uniform per site update.

    ``uniforms`` has shape (n_sweeps, n).  When ``record_every > 0`` the state
    is copied into ``out`` after every ``record_every``-th sweep, starting at
    row ``out_start``.  Returns the number of rows written, or -1 if some site
    had no positive-probability symbol (hard-constraint deadlock).
    """
    n_sweeps, n = uniforms.shape
    row = out_start
    w = [0.0] * A
    for sweep in range(n_sweeps):
        for s in range(n):
            for a in range(A):
                w[a] = 0.0
            for t in range(site_pot_ptr[s], site_pot_ptr[s + 1]):
                p = site_pot_idx[t]
                lo = clique_ptr[p]
                m = clique_ptr[p + 1] - lo
                base = 0
                stride_s = 0
                weight = 1
                for j in range(m - 1, -1, -1):
                    c = clique_flat[lo + j]
                    if c == s:
                        stride_s = weight
                    else:
                        base += weight * int(state[c])
                    weight *= A
                toff = table_ptr[p]
                for a in range(A):
                    w[a] += table_flat[toff + base + stride_s * a]
            # max over finite entries for a stable softmax
            wmax = -math.inf
            for a in range(A):
                if w[a] > wmax:
                    wmax = w[a]
            if wmax == -math.inf:
                return -1
            total = 0.0
            for a in range(A):
                w[a] = math.exp(w[a] - wmax)
                total += w[a]
            target = uniforms[sweep, s] * total
            acc = 0.0
            pick = A - 1
            for a in range(A):
                acc += w[a]
                if target < acc:
                    pick = a
                    break
            state[s] = pick
        if record_every > 0 and (sweep + 1) % record_every == 0:
            out[row, :] = state
            row += 1
    return row - out_start
