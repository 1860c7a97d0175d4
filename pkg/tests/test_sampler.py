import math

import numpy as np
import pytest

import mrfstruct as mf
from mrfstruct.errors import HardConstraintDeadlock, ModelFormatError
from mrfstruct.oracle import DistTable

E = math.e
P_PP = E / (2 * E + 2 / E)


@pytest.fixture(scope="module")
def two_spin():
    m = mf.new_ising(2, [(0, 1, 1.0)])
    return m, mf.joint_distribution(m)


def test_exact_point_mass_table():
    probs = np.zeros(8)
    probs[5] = 1.0  # state (1, 0, 1)
    d = DistTable(probs, 3, 2)
    s = mf.sample_exact(d, 50, seed=1)
    assert np.array_equal(s.data, np.tile([1, 0, 1], (50, 1)))


def test_exact_deterministic_per_seed(two_spin):
    _, d = two_spin
    a = mf.sample_exact(d, 1000, seed=5)
    b = mf.sample_exact(d, 1000, seed=5)
    c = mf.sample_exact(d, 1000, seed=6)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)


def test_exact_empirical_marginal(two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 200_000, seed=42)
    # binomial 4-sigma band around the enumerated value
    assert np.mean((s.data[:, 0] == 0) & (s.data[:, 1] == 0)) == pytest.approx(
        P_PP, abs=0.005)


def test_gibbs_independent_sites_uniform():
    m = mf.new_ising(3, [])
    s = mf.gibbs_sample(m, 100_000, burn_in=10, thinning=1, seed=3)
    for v in range(3):
        assert np.mean(s.data[:, v]) == pytest.approx(0.5, abs=4 * 0.5 / math.sqrt(100_000))


def test_gibbs_two_spin_agrees_with_oracle(two_spin):
    m, _ = two_spin
    s = mf.gibbs_sample(m, 100_000, burn_in=100, thinning=10, seed=7)
    assert np.mean((s.data[:, 0] == 0) & (s.data[:, 1] == 0)) == pytest.approx(
        P_PP, abs=0.01)


def test_gibbs_deterministic_and_chain_interleaving(two_spin):
    m, _ = two_spin
    a = mf.gibbs_sample(m, 500, burn_in=20, thinning=2, seed=11)
    b = mf.gibbs_sample(m, 500, burn_in=20, thinning=2, seed=11)
    assert np.array_equal(a.data, b.data)
    c2 = mf.gibbs_sample(m, 500, burn_in=20, thinning=2, seed=11, chains=4)
    # chain 0 of the multi-chain run is the single-chain stream
    assert np.array_equal(c2.data[0::4], a.data[:125])
    assert "gibbs(burn_in=20,thinning=2,chains=4)" == c2.provenance


def test_empirical_marginals_track_oracle_across_sample_sizes():
    m = mf.random_ising(5, 2, seed=29, low=0.4, high=0.9, random_sign=True)
    d = mf.joint_distribution(m)
    for k in (10 ** 3, 10 ** 4, 10 ** 5):
        s = mf.sample_exact(d, k, seed=k)
        band = 4 * math.sqrt(math.log(k) / k)
        worst = 0.0
        for u in range(5):
            for xu in (0, 1):
                emp = np.mean(s.data[:, u] == xu)
                worst = max(worst, abs(emp - mf.marginal(d, [u], [xu])))
            for v in range(u + 1, 5):
                for xv in (0, 1):
                    emp = np.mean((s.data[:, u] == 0) & (s.data[:, v] == xv))
                    worst = max(worst, abs(emp - mf.marginal(d, [u, v], [0, xv])))
        assert worst < band


def test_gibbs_matches_exact_sampler_on_pairs():
    m = mf.random_ising(5, 2, seed=31, low=0.4, high=0.9)
    d = mf.joint_distribution(m)
    se = mf.sample_exact(d, 40_000, seed=1)
    sg = mf.gibbs_sample(m, 40_000, burn_in=200, thinning=5, seed=2)
    for u in range(5):
        for v in range(u + 1, 5):
            pe = np.mean((se.data[:, u] == 0) & (se.data[:, v] == 0))
            pg = np.mean((sg.data[:, u] == 0) & (sg.data[:, v] == 0))
            assert pe == pytest.approx(pg, abs=0.02)


def test_gibbs_deadlock():
    pot = mf.Potential((0,), np.array([-math.inf, -math.inf]))
    m = mf.Model(mf.path_graph(1), 2, (pot,))
    with pytest.raises(HardConstraintDeadlock):
        mf.gibbs_sample(m, 10, burn_in=1, thinning=1, seed=0)


def test_noise_zero_is_identity(two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 5000, seed=9)
    out = mf.apply_noise(s, mf.NoiseChannel(0.0), seed=4)
    assert np.array_equal(out.data, s.data)
    assert out.provenance.startswith("noisy(q=0.0,sites=all,base=exact")


def test_noise_half_erases_binary_input(two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 100_000, seed=10)
    out = mf.apply_noise(s, mf.NoiseChannel(0.5), seed=5)
    band = 4 / math.sqrt(100_000)
    # output sites uniform and uncorrelated with the (strongly correlated) input
    for v in (0, 1):
        assert np.mean(out.data[:, v]) == pytest.approx(0.5, abs=band)
        agree = np.mean(out.data[:, v] == s.data[:, v])
        assert agree == pytest.approx(0.5, abs=band)
    assert np.mean(out.data[:, 0] == out.data[:, 1]) == pytest.approx(0.5, abs=band)


def test_noise_composition_matches_exact_channel(two_spin):
    _, d = two_spin
    q = 0.05
    s = mf.sample_exact(d, 200_000, seed=12)
    noisy = mf.apply_noise(s, mf.NoiseChannel(q), seed=13)
    exact = mf.channel_compose_exact(d, mf.NoiseChannel(q))
    expected_agree = mf.marginal(exact, [0, 1], [0, 0]) + mf.marginal(exact, [0, 1], [1, 1])
    got = np.mean(noisy.data[:, 0] == noisy.data[:, 1])
    assert got == pytest.approx(expected_agree, abs=0.005)
    # analytic cross-check of the composition itself
    keep = (1 - q) ** 2 + q ** 2
    manual = P_PP * 2 * keep + (1 - 2 * P_PP) * (1 - keep)
    assert expected_agree == pytest.approx(manual, abs=1e-12)


def test_noise_disjoint_sites_commute(two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 2000, seed=14)
    a = mf.apply_noise(mf.apply_noise(s, mf.NoiseChannel(0.3, (0,)), 77),
                       mf.NoiseChannel(0.3, (1,)), 77)
    b = mf.apply_noise(mf.apply_noise(s, mf.NoiseChannel(0.3, (1,)), 77),
                       mf.NoiseChannel(0.3, (0,)), 77)
    both = mf.apply_noise(s, mf.NoiseChannel(0.3), 77)
    assert np.array_equal(a.data, b.data)
    assert np.array_equal(a.data, both.data)


def test_noise_channel_validation():
    with pytest.raises(ValueError):
        mf.NoiseChannel(1.0)
    with pytest.raises(ValueError, match="range"):
        mf.apply_noise(mf.SampleMatrix(1, 1, 2, np.zeros((1, 1), np.uint8), "x", 0),
                       mf.NoiseChannel(0.1, (3,)), 0)


def test_channel_compose_half_is_uniform(two_spin):
    _, d = two_spin
    out = mf.channel_compose_exact(d, mf.NoiseChannel(0.5))
    assert np.allclose(out.probs, 0.25, atol=1e-15)


def test_restrict_sites(two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 100, seed=15)
    r = mf.restrict_sites(s, [1])
    assert r.n == 1 and r.k == 100
    assert np.array_equal(r.data[:, 0], s.data[:, 1])


def test_csv_round_trip_and_determinism(tmp_path, two_spin):
    _, d = two_spin
    s = mf.sample_exact(d, 200, seed=16)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    mf.save_samples_csv(s, p1)
    mf.save_samples_csv(mf.sample_exact(d, 200, seed=16), p2)
    assert p1.read_bytes() == p2.read_bytes()
    loaded = mf.load_samples_csv(p1)
    assert np.array_equal(loaded.data, s.data)
    assert (loaded.k, loaded.n, loaded.A, loaded.seed) == (200, 2, 2, 16)
    assert loaded.provenance == "exact"


def test_csv_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("0,1\n1,0\n")
    with pytest.raises(ModelFormatError, match="header"):
        mf.load_samples_csv(p)
    p.write_text("#mrf-samples n=2 A=2 k=3 seed=0 provenance=exact\n0,1\n")
    with pytest.raises(ModelFormatError, match="shape"):
        mf.load_samples_csv(p)
    p.write_text("#mrf-samples n=2 A=2 k=1 seed=0 provenance=exact\n0,7\n")
    with pytest.raises(ModelFormatError, match="range"):
        mf.load_samples_csv(p)


def test_sample_matrix_validation():
    with pytest.raises(ValueError, match="shape"):
        mf.SampleMatrix(2, 2, 2, np.zeros((1, 2), np.uint8), "x", 0)
    with pytest.raises(ValueError, match="range"):
        mf.SampleMatrix(1, 1, 2, np.array([[5]], np.uint8), "x", 0)
