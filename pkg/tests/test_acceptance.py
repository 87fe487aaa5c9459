"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are printed in the terminal summary (see ``conftest.py``). Training
runs live in module fixtures so that criteria sharing a model train it once.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import itertools
import math
import shutil
import time

import numpy as np
import pytest
from scipy.stats import chisquare

from tapt import experiments as X
from tapt.cli import main as cli_main
from tapt.exact import (
    boltzmann_distribution, brute_force_thermo, critical_beta, kac_ward_logZ, kac_ward_thermo,
    state_index, thermo_integration_F, transfer_matrix_logZ,
)
from tapt.generator import (
    GeneratorConfig, TokenLayout, TrainHyper, build_model, decode_checkpoint,
    encode_checkpoint, forward_logits, gradient_check, log_prob, randomize_, train,
)
from tapt.mcmc import ChainConfig, run_chain
from tapt.problems import (
    and_gate, build_multiplier, enumerate_semiprimes, forward_multiply, full_adder,
)
from tapt.spin_model import CouplingGraph, grid2d, top_rows_clamp
from tapt.tempering import (
    BetaLadder, GeneratorProposal, TableProposal, TAPTConfig, UniformProposal, move_kind,
    run_pt, run_tapt,
)

from conftest import ACCEPTANCE, total_variation

pytestmark = pytest.mark.acceptance


def record(n, ok, detail):
    ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def all_states(n):
    return np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int8)


# -- 1, 2: exact oracles ----------------------------------------------------------------

def top_patterns(Lx):
    alt = [1 if c % 2 == 0 else -1 for c in range(Lx)]
    half = [1 if c < (Lx + 1) // 2 else -1 for c in range(Lx)]
    rand = np.where(np.random.default_rng(Lx).random(Lx) < 0.5, 1, -1).tolist()
    return [[1] * Lx, alt, half, rand]


def test_c01_kac_ward_vs_enumeration():
    t0 = time.perf_counter()
    worst, cases = 0.0, 0
    for Ly, Lx in itertools.product(range(1, 5), range(1, 6)):
        for beta in (0.2, 0.44, 0.8, 1.2):
            for pat in [None] + top_patterns(Lx):
                clamp = None if pat is None else top_rows_clamp(Lx, pat)
                ref = brute_force_thermo(grid2d(Ly, Lx, clamp=clamp), beta).logZ
                worst = max(worst, abs(kac_ward_logZ(Ly, Lx, beta, clamp=pat) - ref))
                cases += 1
    dt = time.perf_counter() - t0
    record(1, worst < 1e-9 and dt < 60,
           f"{cases} cases on grids up to 4x5, max |dlogZ| = {worst:.2e} (< 1e-9), {dt:.1f} s")


def test_c02_kac_ward_vs_transfer_matrix():
    t0 = time.perf_counter()
    worst = 0.0
    for Ly, Lx in ((8, 8), (8, 16)):
        for beta in (0.2, 0.35, critical_beta(), 0.6, 1.0):
            worst = max(worst, abs(kac_ward_logZ(Ly, Lx, beta) - transfer_matrix_logZ(Ly, Lx, beta)))
    dt = time.perf_counter() - t0
    record(2, worst < 1e-8 and dt < 120,
           f"8x8 and 8x16 at 5 betas, max |dlogZ| = {worst:.2e} (< 1e-8), {dt:.1f} s")


# -- 3: thermodynamic integration ---------------------------------------------------------

def test_c03_thermodynamic_integration():
    t0 = time.perf_counter()
    g = grid2d(16, 16)
    exact_f = kac_ward_thermo(16, 16, 0.2).f
    f_gibbs = thermo_integration_F(X.gibbs_energy_source(g, 1), 0.2, g.n_free, 25, 100) / g.n_free
    ds = X.gibbs_corpus(g, [0.0, 0.05, 0.1, 0.15, 0.2], 4000, seed=3, mixing_sweeps=500,
                        thinning=5, n_chains=10)
    model, _ = train(ds, TokenLayout.for_graph(g), GeneratorConfig(beta_frequencies=1),
                     TrainHyper(max_epochs=8, seed=3))
    f_gen = thermo_integration_F(X.generator_energy_source(model, g, 2), 0.2, g.n_free, 25,
                                 200) / g.n_free
    dt = time.perf_counter() - t0
    dg, dm = abs(f_gibbs - exact_f), abs(f_gen - exact_f)
    record(3, dg < 0.01 and dm < 0.02 and dt < 1800,
           f"exact F/N {exact_f:.5f}; Gibbs {f_gibbs:.5f} (|d| {dg:.4f} < 0.01); "
           f"generator {f_gen:.5f} (|d| {dm:.4f} < 0.02); {dt / 60:.1f} min")


# -- 4: Gibbs sampler ---------------------------------------------------------------------

def test_c04_gibbs_sampler_correctness():
    t0 = time.perf_counter()
    g = grid2d(3, 3)
    parts, ok = [], True
    for k, beta in enumerate((0.3, 0.6)):
        ds = run_chain(g, ChainConfig(beta=beta, n_samples=10**6, mixing_sweeps=1000,
                                      thinning=10, seed=40 + k))
        p = boltzmann_distribution(g, beta)
        counts = np.bincount(state_index(g, ds.spins), minlength=p.size)
        tv = total_variation(counts / counts.sum(), p)
        pval = chisquare(counts, p * counts.sum()).pvalue
        ok &= tv < 0.01 and pval > 0.01
        parts.append(f"beta {beta}: TV {tv:.4f}, chi2 p {pval:.3f}")
    dt = time.perf_counter() - t0
    record(4, ok and dt < 300, f"3x3, 1e6 records each; {'; '.join(parts)}; {dt:.1f} s")


# -- 5: generator integrity ---------------------------------------------------------------

def test_c05_generator_integrity():
    t0 = time.perf_counter()
    lay20 = TokenLayout(20, (), tuple(range(20)))
    m = randomize_(build_model(GeneratorConfig(), lay20, seed=1), seed=2)
    rng = np.random.default_rng(3)
    base = rng.integers(0, 2, 20)
    ref = forward_logits(m, base, 0.5)
    causal = True
    for t in range(19):
        other = base.copy()
        other[t + 1:] = rng.integers(0, 2, 19 - t)
        causal &= bool(np.array_equal(forward_logits(m, other, 0.5)[:t + 1], ref[:t + 1]))

    norm_err = 0.0
    for n in (10, 11, 12):
        mn = randomize_(build_model(GeneratorConfig(), TokenLayout(n, (), tuple(range(n))),
                                    seed=n), seed=n)
        norm_err = max(norm_err, abs(math.fsum(np.exp(log_prob(mn, all_states(n), 0.6))) - 1))

    m12 = randomize_(build_model(GeneratorConfig(), TokenLayout(12, (), tuple(range(12))),
                                 seed=0), seed=0)
    tokens = np.random.default_rng(1).integers(0, 2, (6, 12))
    grad = gradient_check(m12, tokens, np.linspace(0.2, 1.0, 6), n_params=200, seed=2)

    blob = encode_checkpoint(m)
    back = decode_checkpoint(blob)
    round_trip = encode_checkpoint(back) == blob and np.array_equal(
        forward_logits(back, base, 0.5), ref)
    dt = time.perf_counter() - t0
    ok = causal and norm_err < 1e-8 and grad.max_rel_error < 1e-4 and round_trip and dt < 300
    record(5, ok, f"causal {causal}; max |sum p - 1| {norm_err:.1e} at 10-12 spins; "
                  f"grad rel err {grad.max_rel_error:.1e}; checkpoint bit-exact {round_trip}; "
                  f"{dt:.1f} s")


# -- 6: temperature generalisation --------------------------------------------------------

def test_c06_temperature_generalisation():
    t0 = time.perf_counter()
    g = grid2d(16, 16)
    ds = X.gibbs_corpus(g, [0.2, 0.3, 0.5, 0.7], 2000, seed=6, mixing_sweeps=2000,
                        thinning=10, n_chains=20, init="ordered")
    model, _ = train(ds, TokenLayout.for_graph(g), GeneratorConfig(beta_frequencies=1),
                     TrainHyper(max_epochs=15, seed=6))
    m_gibbs = float(X.gibbs_magnetization(g, [0.4], 2000, 1)[0])
    m_gen = float(X.generator_magnetization(model, [0.4], 2000, 8)[0])
    betas = np.round(np.arange(0.30, 0.62, 0.02), 2)
    cross = X.crossover_beta(betas, X.generator_magnetization(model, betas, 400, 7))
    dt = time.perf_counter() - t0
    bc = critical_beta()
    ok = abs(m_gen - m_gibbs) < 0.05 and abs(cross - bc) < 0.05 and dt < 3600
    record(6, ok, f"|m|(0.4) generator {m_gen:.3f} vs Gibbs {m_gibbs:.3f} (< 0.05); "
                  f"crossover {cross:.3f} vs {bc:.4f} (+-0.05); {dt / 60:.1f} min")


# -- 7: stationarity ----------------------------------------------------------------------

FRUSTRATED = CouplingGraph(5, [(0, 1, 1.0), (1, 2, -0.7), (2, 3, 0.5), (3, 4, 1.2),
                               (0, 4, -0.4), (1, 3, 0.3)], [0.2, -0.1, 0.0, 0.3, 0.0])
RING = CouplingGraph(5, [(i, (i + 1) % 5, 1.0) for i in range(5)], [0.3, 0.0, -0.2, 0.0, 0.1])


def slot_histograms(g, ladder, config, proposal=None):
    hist = np.zeros((len(ladder), 2 ** g.n_free))

    def cb(k, S, E):
        hist[np.arange(len(ladder)), state_index(g, S)] += 1

    run_tapt(g, ladder, config, proposal, cb)
    return hist / hist.sum(axis=1, keepdims=True)


def test_c07_pt_stationarity_and_mh_bias():
    t0 = time.perf_counter()
    worst = 0.0
    for k, (g, ladder) in enumerate(itertools.product(
            (FRUSTRATED, RING), (BetaLadder((0.4, 1.0)), BetaLadder((0.2, 0.5, 0.8, 1.2))))):
        q = slot_histograms(g, ladder, TAPTConfig(n_moves=100_000, sweeps_per_move=1, seed=k))
        for r, b in enumerate(ladder.betas):
            worst = max(worst, total_variation(q[r], boltzmann_distribution(g, b)))

    biased = TableProposal.boltzmann(FRUSTRATED, field_bias=0.6)
    target = boltzmann_distribution(FRUSTRATED, 1.0)
    tv = {}
    for mh in (False, True):
        cfg = TAPTConfig(n_moves=150_000, sweeps_per_move=1, n_augmented=1, mh_corrected=mh,
                         seed=21)
        tv[mh] = total_variation(slot_histograms(FRUSTRATED, BetaLadder((1.0,)), cfg, biased)[0],
                                 target)
    dt = time.perf_counter() - t0
    ok = worst < 0.02 and tv[False] > 0.05 and tv[True] < 0.02 and dt < 600
    record(7, ok, f"2- and 4-replica PT max TV {worst:.4f} (< 0.02); planted bias TV "
                  f"uncorrected {tv[False]:.4f} (> 0.05), corrected {tv[True]:.4f} (< 0.02); "
                  f"{dt:.0f} s")


# -- 8: algorithm fidelity ----------------------------------------------------------------

def test_c08_algorithm_fidelity():
    g = X.parse_problem("ea3d:L=3,seed=1").graph
    lad = BetaLadder.geometric(0.2, 2.0, 6)
    tr = run_tapt(g, lad, TAPTConfig(n_moves=301, sweeps_per_move=2, n_augmented=3, seed=8),
                  UniformProposal(g))
    cycle = tr.move_kinds == [(k - 1) % 3 + 1 for k in range(1, 302)] and \
        tr.move_kinds == [move_kind(k) for k in range(1, 302)]
    written = {}
    for ln in tr.to_csv().split("\r\n")[1:]:
        if ln:
            k, kind = ln.split(",")[:2]
            written.setdefault(int(k), set()).add(int(kind))
    cycle &= all(written[k] == {(k - 1) % 3 + 1} for k in range(1, 302))
    monotone = all(b <= a for a, b in zip(tr.best_energy, tr.best_energy[1:]))
    cfg = TAPTConfig(n_moves=90, sweeps_per_move=2, seed=8)
    reduces = run_tapt(g, lad, cfg, UniformProposal(g)).to_csv() == run_pt(g, lad, cfg).to_csv()
    record(8, cycle and monotone and reduces,
           f"move kinds cycle 1,2,3 over 301 moves {cycle}; N_T=0 trace identical to PT "
           f"{reduces}; best-so-far monotone {monotone}")


# -- 9: circuits --------------------------------------------------------------------------

def test_c09_circuit_suite():
    gaps = (and_gate().verify(), full_adder().verify())
    counts = (build_multiplier(4).n_spins, build_multiplier(8).n_spins)
    n_semi = len(enumerate_semiprimes(4))
    c = build_multiplier(4)
    hits = sum(forward_multiply(c, 6, 5, rng=np.random.default_rng(s)) == 30 for s in range(100))
    ok = gaps == (4.0, 4.0) and counts == (52, 200) and n_semi == 21 and hits >= 95
    record(9, ok, f"AND/FA gaps {gaps}; multiplier spins {counts}; 4-bit semiprimes {n_semi}; "
                  f"forward 6 x 5 = 30 in {hits}/100 seeds")


# -- 10, 11: optimisation benefit and ablations ---------------------------------------------

EA_LADDER = BetaLadder.geometric(0.125, 2.0, 10)
FACTOR_LADDER = BetaLadder.geometric(0.3, 3.0, 8)
FACTOR_BETAS = [0.3, 0.5, 0.75, 1.0]


@pytest.fixture(scope="module")
def ea_model():
    t0 = time.perf_counter()
    problem = X.parse_problem("ea3d:L=4,seed=0")
    ds = X.pt_corpus(problem.graph, EA_LADDER, 1200, seed=100)
    model, _ = train(ds, problem.layout(), hyper=TrainHyper(max_epochs=20))
    return problem, model, time.perf_counter() - t0


@pytest.fixture(scope="module")
def factor_model():
    t0 = time.perf_counter()
    circuit = build_multiplier(4)
    products = [sp.C for sp in enumerate_semiprimes(4)]
    ds = X.factor_corpus(circuit, products, FACTOR_BETAS, 400, seed=0)
    layout = X.parse_problem(f"factor:n=4,C={products[0]}").layout()
    model, _ = train(ds, layout, hyper=TrainHyper(max_epochs=15, batch_size=128))
    return products, model, time.perf_counter() - t0


def test_c10_optimisation_benefit(ea_model, factor_model):
    t0 = time.perf_counter()
    problem, model, t_ea = ea_model
    runs = X.paired_comparison(problem, EA_LADDER, TAPTConfig(9, 2, 10), GeneratorProposal(
        model, problem.graph), reps=40, seed=0)
    st_a = X.sign_test(runs.pt_best, runs.tapt_best)
    med = (float(np.median(runs.pt_best)), float(np.median(runs.tapt_best)))
    ok_a = med[1] < med[0] and st_a.p_value < 0.05

    products, fmodel, t_f = factor_model
    wins = losses = disc_w = disc_l = 0
    for key, C in enumerate(products):
        prob = X.parse_problem(f"factor:n=4,C={C}")
        r = X.paired_comparison(prob, FACTOR_LADDER, TAPTConfig(15, 10, 6),
                                GeneratorProposal(fmodel, prob.graph), reps=40, seed=0, key=key)
        pt_rate, tapt_rate = r.success_rates()
        wins += tapt_rate > pt_rate
        losses += tapt_rate < pt_rate
        a, b = np.array(r.pt_success, bool), np.array(r.tapt_success, bool)
        disc_w += int(np.sum(b & ~a))
        disc_l += int(np.sum(a & ~b))
    st_b = X.sign_test(np.r_[np.zeros(disc_w), np.ones(disc_l)],
                       np.r_[np.ones(disc_w), np.zeros(disc_l)], lower_is_better=False)
    ok_b = wins > len(products) / 2 and st_b.p_value < 0.05
    dt = time.perf_counter() - t0 + t_ea + t_f
    record(10, ok_a and ok_b and dt < 7200,
           f"(a) EA L=4: median best PT {med[0]:g} vs TAPT {med[1]:g}, paired wins "
           f"{st_a.wins}/{st_a.losses} (ties {st_a.ties}), p {st_a.p_value:.1e}; "
           f"(b) TAPT higher success on {wins}/{len(products)} semiprimes (PT higher on "
           f"{losses}), discordant pairs {disc_w}/{disc_l}, p {st_b.p_value:.1e}; "
           f"{dt / 60:.1f} min with training")


def test_c11_ablation_directions(factor_model):
    products, fmodel, _ = factor_model
    problems = [X.parse_problem(f"factor:n=4,C={C}") for C in products[::3]]
    rows = X.ablate(problems, FACTOR_LADDER, TAPTConfig(15, 10, len(FACTOR_LADDER)),
                    lambda p: GeneratorProposal(fmodel, p.graph), reps=20, seed=11,
                    contexts=(), n_augmented=(), sweeps=(0, 10))
    by_m = {r.sweeps_per_move: r for r in rows}
    s0, s10 = by_m[0].success_rate, by_m[10].success_rate
    acc = by_m[10].generator_acceptance
    ok = s0 < s10 and acc[-1] < acc[0]
    record(11, ok, f"success M=0 {s0:.3f} vs M=10 {s10:.3f}; generator acceptance at beta "
                   f"{FACTOR_LADDER.betas[-1]:g} {acc[-1]:.3f} vs beta {FACTOR_LADDER.betas[0]:g} "
                   f"{acc[0]:.3f} (training betas up to {max(FACTOR_BETAS)})")


# -- 12: reproducibility ------------------------------------------------------------------

def _cli(*argv):
    code = cli_main([str(a) for a in argv])
    assert code == 0, argv
    return code


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def _pipeline(d, workers):
    # same paths every time: input paths are part of each file's config digest
    if d.exists():
        shutil.rmtree(d)
    d.mkdir()
    grid = "grid2d:L=4"
    _cli("sample", "--problem", grid, "--betas", "0.3,0.6", "--per-beta", 200, "--chains", 2,
         "--mixing-sweeps", 100, "--seed", 5, "--out", d / "g.isfd", "--summary-out", d / "g.csv")
    _cli("train", "--dataset", d / "g.isfd", "--problem", grid, "--d-model", 16, "--ffn-dim",
         32, "--layers", 1, "--epochs", 2, "--seed", 1, "--out", d / "g.isfw",
         "--loss-out", d / "loss.csv")
    _cli("exact", "--problem", grid, "--betas", "0.2,0.4", "--gibbs-samples", 10,
         "--checkpoint", d / "g.isfw", "--generator-samples", 10, "--segments", 4, "--seed", 2,
         "--out", d / "exact.csv")
    _cli("ladder", "--problem", grid, "--ladder", "adaptive", "--beta-min", 0.1, "--beta-max",
         1.0, "--probe-sweeps", 50, "--seed", 3, "--out", d / "ladder.txt")
    run_args = ("--problem", grid, "--ladder-file", d / "ladder.txt", "--global-moves", 9,
                "--sweeps-per-move", 2, "--augmented", 2, "--checkpoint", d / "g.isfw",
                "--repetitions", 3, "--seed", 4, "--workers", workers)
    _cli("run", *run_args, "--compare-pt", "--trace-out", d / "trace.csv", "--out", d / "run.csv")
    _cli("ablate", *run_args, "--contexts", "0,0.5", "--sweeps-grid", "0,2",
         "--out", d / "ablate.csv")
    _cli("sample", "--problem", "factor:n=2,C=6", "--betas", "0.5,1.0", "--per-beta", 100,
         "--mixing-sweeps", 100, "--seed", 6, "--out", d / "f.isfd", "--summary-out",
         d / "f.csv")
    _cli("train", "--dataset", d / "f.isfd", "--problem", "factor:n=2", "--d-model", 16,
         "--ffn-dim", 32, "--layers", 1, "--epochs", 2, "--seed", 1, "--out", d / "f.isfw",
         "--loss-out", d / "floss.csv")
    _cli("factorize", "--bits", 2, "--checkpoint", d / "f.isfw", "--augmented", 2,
         "--replicas", 4, "--beta-min", 0.3, "--beta-max", 3.0, "--global-moves", 6,
         "--repetitions", 3, "--seed", 7, "--workers", workers, "--out", d / "factor.csv")
    return _snapshot(d)


def test_c12_cli_reproducibility(tmp_path, capsys):
    first = _pipeline(tmp_path / "w", 1)
    second = _pipeline(tmp_path / "w", 1)
    threaded = _pipeline(tmp_path / "w", 3)
    capsys.readouterr()
    differ = sorted(k for k in first if first[k] != second.get(k) or first[k] != threaded.get(k))
    ok = not differ and first.keys() == second.keys() == threaded.keys()
    record(12, ok, f"{len(first)} output files from sample/train/exact/ladder/run/ablate/"
                   f"factorize byte-identical across two runs and workers 1 vs 3"
                   + (f"; differing: {differ}" if differ else ""))
