import math

import numpy as np
import pytest
from scipy.stats import chisquare

from tapt.exact import boltzmann_distribution, brute_force_thermo
from tapt.exceptions import ClampedSiteError, FormatError
from tapt.mcmc import (
    ChainConfig, SampleDataset, decode_dataset, encode_dataset, generate_training_corpus,
    gibbs_sweep, gibbs_sweeps, gibbs_update, heat_bath_probability, load_dataset, run_chain,
    save_dataset,
)
from tapt.spin_model import CouplingGraph, energies, grid2d

from conftest import empirical, total_variation

# |m| of the open 3x3 ferromagnet, by independent enumeration
ABS_M_3X3 = {0.3: 0.4467377310213237, 0.6: 0.7524164387668478}


def test_heat_bath_probability():
    assert heat_bath_probability(1.0, 0.0) == 0.5
    assert heat_bath_probability(0.0, 5.0) == 0.5
    assert heat_bath_probability(1.0, 1.0) == pytest.approx(0.8807970779778823, abs=1e-12)


def test_gibbs_update_only_touches_site(rng):
    g = grid2d(3, 3)
    s = np.ones(9, np.int8)
    for _ in range(50):
        before = s.copy()
        gibbs_update(g, s, 4, 0.5, rng)
        mask = np.arange(9) != 4
        assert np.array_equal(before[mask], s[mask])


def test_gibbs_update_clamped(rng):
    g = CouplingGraph(2, [(0, 1, 1.0)], clamp={0: 1})
    with pytest.raises(ClampedSiteError):
        gibbs_update(g, np.ones(2, np.int8), 0, 1.0, rng)


def test_gibbs_update_frequency():
    g = CouplingGraph(2, [(0, 1, 1.0)])
    rng = np.random.default_rng(0)
    ups = 0
    for _ in range(20000):
        s = np.array([-1, 1], np.int8)
        ups += gibbs_update(g, s, 0, 1.0, rng)[0] == 1
    assert ups / 20000 == pytest.approx(1 / (1 + math.exp(-2)), abs=0.01)


def test_sweep_all_clamped(rng):
    g = CouplingGraph(3, [(0, 1, 1.0)], clamp={0: 1, 1: -1, 2: 1})
    s = np.array([1, -1, 1], np.int8)
    assert gibbs_sweep(g, s, 1.0, rng).tolist() == [1, -1, 1]


def test_sweep_one_free_spin_equals_update():
    g = CouplingGraph(3, [(0, 1, 1.0), (1, 2, 1.0)], clamp={0: 1, 2: 1})
    a = np.array([1, -1, 1], np.int8)
    b = a.copy()
    gibbs_sweep(g, a, 0.7, np.random.default_rng(5))
    gibbs_update(g, b, 1, 0.7, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_cold_ferromagnet_orders():
    g = grid2d(3, 3)
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        s = (2 * rng.integers(0, 2, 9) - 1).astype(np.int8)
        gibbs_sweeps(g, s, 3.0, 50, rng)
        hits += abs(s.mean()) > 0.9
    assert hits > 95


def test_empty_chain():
    ds = run_chain(grid2d(2, 2), ChainConfig(beta=0.5, n_samples=0, thinning=1))
    assert len(ds) == 0


def test_chain_reproducible():
    cfg = ChainConfig(beta=0.4, n_samples=50, mixing_sweeps=10, thinning=2, seed=9, n_chains=3)
    a = run_chain(grid2d(3, 3), cfg)
    b = run_chain(grid2d(3, 3), cfg)
    assert np.array_equal(a.spins, b.spins)


def test_chain_distribution_3x3():
    g = grid2d(3, 3)
    ds = run_chain(g, ChainConfig(beta=0.3, n_samples=200_000, mixing_sweeps=100, seed=1))
    p = boltzmann_distribution(g, 0.3)
    q = empirical(g, ds.spins)
    assert total_variation(p, q) < 0.02


def test_detailed_balance_chi_square():
    """Stationary distribution on a 6-spin frustrated graph with fields and a clamp."""
    g = CouplingGraph(7, [(0, 1, 1.0), (1, 2, -0.8), (2, 3, 0.6), (3, 4, -1.1), (4, 5, 0.9),
                          (0, 5, 0.4), (1, 6, 0.7)],
                      [0.3, 0, -0.2, 0, 0.1, 0, 0], clamp={6: -1})
    ds = run_chain(g, ChainConfig(beta=0.8, n_samples=60_000, mixing_sweeps=50, thinning=3,
                                  seed=2))
    p = boltzmann_distribution(g, 0.8)
    counts = np.bincount(empirical_index(g, ds.spins), minlength=p.size)
    assert chisquare(counts, p * counts.sum()).pvalue > 0.01
    assert np.all(ds.spins[:, 6] == -1)


def empirical_index(g, S):
    from tapt.exact import state_index
    return state_index(g, S)


def test_energy_mean_4x4():
    g = grid2d(4, 4)
    ds = run_chain(g, ChainConfig(beta=0.2, n_samples=20_000, mixing_sweeps=100, thinning=2,
                                  seed=3))
    E = energies(g, ds.spins)
    exact = brute_force_thermo(g, 0.2).E_avg
    # thinned records are close to independent at this temperature
    assert abs(E.mean() - exact) < 3 * E.std() / math.sqrt(E.size) * 2


def test_corpus_bookkeeping():
    g = grid2d(2, 2)
    ds = generate_training_corpus(g, [0.1, 0.2, 0.3, 0.4], 10, ChainConfig(beta=1.0, seed=4))
    assert len(ds) == 40
    assert sorted(set(ds.betas.tolist())) == [0.1, 0.2, 0.3, 0.4]
    assert [int((ds.betas == b).sum()) for b in (0.1, 0.2, 0.3, 0.4)] == [10] * 4
    assert ds.graph_digest == g.digest()
    assert len(generate_training_corpus(g, [], 10, ChainConfig(beta=1.0))) == 0


def test_corpus_magnetization_3x3():
    g = grid2d(3, 3)
    ds = generate_training_corpus(g, [0.3, 0.6], 20_000,
                                  ChainConfig(beta=1.0, mixing_sweeps=100, thinning=2,
                                              n_chains=4, seed=6))
    for b, ref in ABS_M_3X3.items():
        m = np.abs(ds.spins[ds.betas == b].mean(axis=1))
        assert abs(m.mean() - ref) < 3 * 2 * m.std() / math.sqrt(m.size)


def test_dataset_round_trip(tmp_path, rng):
    S = (2 * rng.integers(0, 2, (7, 13)) - 1).astype(np.int8)
    ds = SampleDataset(np.linspace(0.1, 0.7, 7), S)
    blob = encode_dataset(ds)
    assert blob[:5] == b"ISFD1"
    # one record: 8 byte beta + 4 byte count + 2 bytes of bits
    assert len(blob) == 5 + 7 * (8 + 4 + 2)
    back = decode_dataset(blob)
    assert np.array_equal(back.spins, S) and np.array_equal(back.betas, ds.betas)
    save_dataset(ds, tmp_path / "d.isfd")
    assert np.array_equal(load_dataset(tmp_path / "d.isfd").spins, S)


def test_dataset_bit_order():
    ds = SampleDataset([0.5], np.array([[1, -1, -1, -1, -1, -1, -1, -1, 1]], np.int8))
    blob = encode_dataset(ds)
    assert blob[5 + 12:] == bytes([0b00000001, 0b00000001])


def test_dataset_bad_magic():
    with pytest.raises(FormatError):
        decode_dataset(b"XXXXX")
