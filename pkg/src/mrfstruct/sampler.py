"""Sample generation (exact inverse-CDF or Gibbs MCMC) and observation noise.

All randomness is derived from one integer seed via :mod:`mrfstruct.seeds`;
outputs are reproducible bit for bit, including across kernel backends for
the Gibbs sampler (both consume the same uniform stream).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, seeds
from .errors import HardConstraintDeadlock, ModelFormatError
from .model import Model
from .oracle import DistTable, flatten_potentials, site_incidence


@dataclass(frozen=True)
class SampleMatrix:
    """k samples of n symbols each, with generation provenance."""

    k: int
    n: int
    A: int
    data: np.ndarray  # (k, n) uint8
    provenance: str
    seed: int

    def __post_init__(self):
        d = np.ascontiguousarray(self.data, dtype=np.uint8)
        object.__setattr__(self, "data", d)
        if d.shape != (self.k, self.n):
            raise ValueError(f"data shape {d.shape} != (k={self.k}, n={self.n})")
        if d.size and int(d.max()) >= self.A:
            raise ValueError(f"symbol {int(d.max())} out of range for A={self.A}")


@dataclass(frozen=True)
class NoiseChannel:
    """Symmetric per-site corruption: with probability ``flip_prob`` a symbol
    is replaced by a uniform draw among the other A-1 symbols.  ``sites`` is
    an explicit vertex subset, or None for all vertices."""

    flip_prob: float
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 <= self.flip_prob < 1.0:
            raise ValueError(f"flip_prob must be in [0, 1), got {self.flip_prob}")
        if self.sites is not None:
            object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))

    def matrix(self, A: int) -> np.ndarray:
        """Column-stochastic transition matrix M[y, x] = P(y | x)."""
        q = self.flip_prob
        m = np.full((A, A), q / (A - 1))
        np.fill_diagonal(m, 1.0 - q)
        return m


def _decode_states(idx: np.ndarray, n: int, A: int) -> np.ndarray:
    out = np.empty((len(idx), n), dtype=np.uint8)
    for v in range(n):
        out[:, v] = (idx // A ** (n - 1 - v)) % A
    return out


def sample_exact(dist: DistTable, k: int, seed: int) -> SampleMatrix:
    """k iid draws by inverse CDF over the enumerated joint."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    rng = seeds.derived_rng(seed, seeds.EXACT_ROWS)
    u = rng.random(k)
    cum = np.cumsum(dist.probs)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, u, side="right")
    return SampleMatrix(k, dist.n, dist.A, _decode_states(idx, dist.n, dist.A),
                        "exact", int(seed))


def gibbs_sample(model: Model, k: int, burn_in: int = 1000, thinning: int = 10,
                 seed: int = 0, chains: int = 1) -> SampleMatrix:
    """Systematic-scan Gibbs: one sample every ``thinning`` sweeps after burn-in.

    With ``chains > 1`` the rows interleave round-robin by chain index; each
    chain has its own derived stream, so the output does not depend on how
    chains are scheduled.  Raises :class:`HardConstraintDeadlock` if a site
    update finds no positive-probability symbol.
    """
    if k < 1 or thinning < 1 or burn_in < 0 or chains < 1:
        raise ValueError("need k >= 1, thinning >= 1, burn_in >= 0, chains >= 1")
    n, A = model.n, model.alphabet_size
    cf, cp, tf, tp = flatten_potentials(model)
    sp_ptr, sp_idx = site_incidence(model)
    data = np.empty((k, n), dtype=np.uint8)
    dummy = np.empty((1, n), dtype=np.uint8)
    for c in range(chains):
        rows = len(range(c, k, chains))
        if rows == 0:
            continue
        init_rng = seeds.derived_rng(seed, seeds.GIBBS_INIT, c)
        state = np.minimum((init_rng.random(n) * A).astype(np.uint8), A - 1)
        stream = seeds.derived_rng(seed, seeds.GIBBS_CHAIN, c)
        chain_out = np.empty((rows, n), dtype=np.uint8)

        def run(n_sweeps: int, record_every: int, out, out_start: int) -> int:
            written = 0
            left = n_sweeps
            # block the uniform stream so memory stays bounded
            per_block = max(record_every, 1) * max(1, 65536 // (max(record_every, 1) * n) + 1)
            while left > 0:
                b = min(left, per_block)
                if record_every > 0:
                    b = max(record_every, (b // record_every) * record_every)
                    b = min(b, left)
                u = stream.random((b, n))
                got = kernels.gibbs_sweeps(state, u, A, sp_ptr, sp_idx, cf, cp, tf, tp,
                                           record_every, out, out_start + written)
                if got < 0:
                    raise HardConstraintDeadlock(
                        "a site update found no positive-probability symbol")
                written += got
                left -= b
            return written

        if burn_in:
            run(burn_in, 0, dummy, 0)
        got = run(rows * thinning, thinning, chain_out, 0)
        assert got == rows
        data[c::chains] = chain_out
    prov = f"gibbs(burn_in={burn_in},thinning={thinning},chains={chains})"
    return SampleMatrix(k, n, A, data, prov, int(seed))


def apply_noise(samples: SampleMatrix, channel: NoiseChannel, seed: int) -> SampleMatrix:
    """Corrupt sites independently; randomness is derived per site index, so
    applying channels over disjoint site sets commutes for a fixed seed."""
    sites = channel.sites if channel.sites is not None else tuple(range(samples.n))
    for s in sites:
        if not 0 <= s < samples.n:
            raise ValueError(f"noise site {s} out of range for n={samples.n}")
    data = samples.data.copy()
    A = samples.A
    for s in sites:
        rng = seeds.derived_rng(seed, seeds.NOISE_SITE, s)
        flips = rng.random(samples.k) < channel.flip_prob
        draws = rng.integers(0, A - 1, size=samples.k, dtype=np.uint8)
        cur = data[:, s]
        replacement = draws + (draws >= cur)  # uniform over the other A-1 symbols
        data[:, s] = np.where(flips, replacement, cur)
    site_str = "all" if channel.sites is None else ";".join(map(str, sites))
    prov = f"noisy(q={channel.flip_prob},sites={site_str},base={samples.provenance})"
    return SampleMatrix(samples.k, samples.n, A, data, prov, int(seed))


def restrict_sites(samples: SampleMatrix, sites) -> SampleMatrix:
    """Keep only the given columns (renumbered 0..m-1 in the order given)."""
    cols = [int(s) for s in sites]
    for s in cols:
        if not 0 <= s < samples.n:
            raise ValueError(f"site {s} out of range for n={samples.n}")
    data = np.ascontiguousarray(samples.data[:, cols])
    prov = f"{samples.provenance}|restricted({';'.join(map(str, cols))})"
    return SampleMatrix(samples.k, len(cols), samples.A, data, prov, samples.seed)


def channel_compose_exact(dist: DistTable, channel: NoiseChannel) -> DistTable:
    """Exact distribution of the noisy observation Y given the clean joint."""
    sites = channel.sites if channel.sites is not None else tuple(range(dist.n))
    t = dist.tensor().copy()
    m = channel.matrix(dist.A)
    for s in sites:
        t = np.moveaxis(np.tensordot(t, m, axes=([s], [1])), -1, s)
    return DistTable(np.ascontiguousarray(t).reshape(-1), dist.n, dist.A, None)


# ---------------------------------------------------------------------------
# Samples CSV: one row per sample, n integer columns, and a single header
# comment line:
#   #mrf-samples n=<n> A=<A> k=<k> seed=<seed> provenance=<...>

def save_samples_csv(samples: SampleMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"#mrf-samples n={samples.n} A={samples.A} k={samples.k} "
                 f"seed={samples.seed} provenance={samples.provenance}\n")
        np.savetxt(fh, samples.data, fmt="%d", delimiter=",")


def load_samples_csv(path) -> SampleMatrix:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#mrf-samples"):
            raise ModelFormatError(f"{path}: missing #mrf-samples header")
        fields = {}
        for token in header.split()[1:]:
            key, _, value = token.partition("=")
            fields[key] = value
        try:
            n = int(fields["n"])
            A = int(fields["A"])
            k = int(fields["k"])
            seed = int(fields.get("seed", "0"))
        except (KeyError, ValueError) as exc:
            raise ModelFormatError(f"{path}: bad header ({exc})") from exc
        data = np.loadtxt(fh, dtype=np.int64, delimiter=",", ndmin=2)
    if data.shape != (k, n):
        raise ModelFormatError(f"{path}: data shape {data.shape} != (k={k}, n={n})")
    if data.size and (data.min() < 0 or data.max() >= A):
        raise ModelFormatError(f"{path}: symbol out of range for A={A}")
    return SampleMatrix(k, n, A, data.astype(np.uint8),
                        fields.get("provenance", "unknown"), seed)
