"""Experiment recipes shared by the command line and the acceptance suite.

Seeds: every random quantity derives from one root seed. ``derive_seed(root,
*keys)`` hashes the root with a spawn key (instance, repetition, ...) into a
64-bit integer, so repetition ``k`` of instance ``i`` gets the same stream no
matter how many repetitions run or in what order. PT and TAPT runs of the same
repetition share the seed, which pairs them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from ._validation import check_count
from .exceptions import ConfigError, DomainError
from .mcmc import ChainConfig, SampleDataset, generate_training_corpus, run_chain
from .problems import (
    MultiplierCircuit, build_multiplier, clamp_product, decode_and_check, gen_ea3d,
)
from .spin_model import CouplingGraph, energies, grid2d, read_instance, top_rows_clamp
from .tempering import BetaLadder, Proposal, RunTrace, TAPTConfig, run_tapt


def derive_seed(root: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(root), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


# -- problems -----------------------------------------------------------------------

@dataclass
class Problem:
    """A graph plus what is needed to judge and describe runs on it."""

    kind: str
    graph: CouplingGraph
    label: str
    circuit: MultiplierCircuit | None = None
    C: int | None = None
    params: dict = field(default_factory=dict)

    def success(self, s) -> bool | None:
        if self.circuit is None or self.C is None:
            return None
        return bool(decode_and_check(self.circuit, s, self.C).success)

    def nontrivial_success(self, s) -> bool | None:
        """Success with neither factor equal to 1."""
        if self.circuit is None or self.C is None:
            return None
        return bool(decode_and_check(self.circuit, s, self.C).nontrivial)

    def layout(self):
        from .generator import TokenLayout

        if self.circuit is not None:
            return TokenLayout(self.graph.n_spins,
                               tuple(int(i) for i in self.circuit.prefix_indices()),
                               tuple(int(i) for i in self.circuit.free_order()))
        return TokenLayout.for_graph(self.graph)


def _parse_kv(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ConfigError(f"expected key=value in problem spec, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_problem(spec: str) -> Problem:
    """Build a problem from ``kind:key=value,...``.

    Kinds: ``grid2d`` (``L`` or ``Ly``/``Lx``, ``J``, ``clamp`` = none, top,
    semicircle, or a +/- string for the top row), ``ea3d`` (``L``, ``seed``,
    ``disorder``), ``factor`` (``n``, ``C``; ``C`` omitted leaves the product
    free) and ``instance`` (``path`` to an instance file).
    """
    kind, _, rest = spec.partition(":")
    kv = _parse_kv(rest)
    try:
        if kind == "grid2d":
            L = kv.pop("L", None)
            Ly = int(kv.pop("Ly", L if L is not None else 0))
            Lx = int(kv.pop("Lx", L if L is not None else 0))
            J = float(kv.pop("J", 1.0))
            clamp_kind = kv.pop("clamp", "none")
            pattern = None
            if clamp_kind == "top":
                pattern = np.ones(Lx, dtype=np.int8)
            elif clamp_kind == "semicircle":
                from .exact import semicircle_defect_clamp

                if Ly != Lx:
                    raise ConfigError("semicircle clamp needs a square grid")
                pattern = semicircle_defect_clamp(Lx)
            elif clamp_kind != "none":
                pat = np.array([1 if ch == "+" else -1 for ch in clamp_kind], dtype=np.int8)
                if pat.size != Lx or set(clamp_kind) - {"+", "-"}:
                    raise ConfigError(f"clamp pattern must be {Lx} characters of +/-")
                pattern = pat
            clamp = None if pattern is None else top_rows_clamp(Lx, pattern)
            graph = grid2d(Ly, Lx, J=J, clamp=clamp)
            params = dict(Ly=Ly, Lx=Lx, J=J, clamp=clamp_kind, pattern=pattern)
            prob = Problem("grid2d", graph, f"grid2d {Ly}x{Lx}", params=params)
        elif kind == "ea3d":
            L, seed = int(kv.pop("L")), int(kv.pop("seed", 0))
            disorder = kv.pop("disorder", "bimodal")
            inst = gen_ea3d(L, disorder, seed)
            prob = Problem("ea3d", inst.graph, f"ea3d L={L} seed={seed}",
                           params=dict(L=L, seed=seed, disorder=disorder))
        elif kind == "factor":
            n = int(kv.pop("n", 4))
            circuit = build_multiplier(n)
            C = kv.pop("C", None)
            if C is None:
                prob = Problem("factor", circuit.graph, f"multiplier n={n}", circuit, None,
                               dict(n=n))
            else:
                C = int(C)
                prob = Problem("factor", clamp_product(circuit, C), f"factor C={C}", circuit, C,
                               dict(n=n, C=C))
        elif kind == "instance":
            path = kv.pop("path")
            prob = Problem("instance", read_instance(path), f"instance {path}",
                           params=dict(path=path))
        else:
            raise ConfigError(f"unknown problem kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"problem spec {spec!r} is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad problem spec {spec!r}: {exc}") from None
    if kv:
        raise ConfigError(f"unknown keys in problem spec: {sorted(kv)}")
    return prob


# -- training corpora -----------------------------------------------------------------

def gibbs_corpus(graph: CouplingGraph, betas: Sequence[float], per_beta: int, seed: int,
                 mixing_sweeps: int = 2000, thinning: int = 10, n_chains: int = 10,
                 init: str = "random") -> SampleDataset:
    cfg = ChainConfig(beta=1.0, mixing_sweeps=mixing_sweeps, thinning=thinning,
                      n_chains=n_chains, seed=seed, init=init)
    return generate_training_corpus(graph, betas, per_beta, cfg)


def pt_corpus(graph: CouplingGraph, ladder: BetaLadder, per_slot: int, seed: int,
              runs: int = 8, sweeps_per_move: int = 5, burn_moves: int = 150,
              every: int = 2) -> SampleDataset:
    """Records of every ladder slot from ``runs`` independent PT runs.

    Each run records ``ceil(per_slot / runs)`` states per slot, one every
    ``every`` global moves after ``burn_moves``; the total is cut to
    ``per_slot`` per slot.
    """
    per_run = -(-per_slot // runs)
    S, B = [], []
    for run in range(runs):
        def grab(k, states, E):
            if k > burn_moves and (k - burn_moves) % every == 0:
                S.append(states.copy())
                B.append(ladder.array)

        run_tapt(graph, ladder, TAPTConfig(n_moves=burn_moves + every * per_run,
                                           sweeps_per_move=sweeps_per_move,
                                           seed=derive_seed(seed, run)), None, grab)
    S = np.concatenate(S[:per_slot]) if S else np.zeros((0, graph.n_spins), np.int8)
    B = np.concatenate(B[:per_slot]) if B else np.zeros(0)
    return SampleDataset(B, S, graph.digest(), {"sampler": "pt", "seed": seed})


def factor_corpus(circuit: MultiplierCircuit, products: Sequence[int], betas: Sequence[float],
                  per_beta: int, seed: int, mixing_sweeps: int = 2000, thinning: int = 10,
                  n_chains: int = 10) -> SampleDataset:
    """Gibbs samples of the multiplier clamped to each product, pooled."""
    parts = [gibbs_corpus(clamp_product(circuit, C), betas, per_beta, derive_seed(seed, i),
                          mixing_sweeps, thinning, n_chains)
             for i, C in enumerate(products)]
    return SampleDataset.concatenate(parts, circuit.n_spins)


# -- thermodynamic integration and magnetisation ------------------------------------------

def gibbs_energy_source(graph: CouplingGraph, seed: int, mixing_sweeps: int = 1000,
                        ) -> Callable[[float, int], np.ndarray]:
    """``source(w, n)``: final energies of ``n`` independent Gibbs chains at ``w``.

    Call ``j`` of the source uses stream ``derive_seed(seed, j)``.
    """
    calls = [0]

    def source(w: float, n: int) -> np.ndarray:
        ds = run_chain(graph, ChainConfig(beta=float(w), n_samples=n, mixing_sweeps=mixing_sweeps,
                                          n_chains=n, seed=derive_seed(seed, calls[0])))
        calls[0] += 1
        return energies(graph, ds.spins)

    return source


def generator_energy_source(model, graph: CouplingGraph, seed: int,
                            prefix=None) -> Callable[[float, int], np.ndarray]:
    from .generator import sample

    calls = [0]

    def source(w: float, n: int) -> np.ndarray:
        S, _ = sample(model, w, n, prefix, np.random.default_rng(derive_seed(seed, calls[0])))
        calls[0] += 1
        return energies(graph, S)

    return source


def gibbs_magnetization(graph: CouplingGraph, betas: Sequence[float], n_samples: int, seed: int,
                        mixing_sweeps: int = 2000, thinning: int = 10,
                        n_chains: int = 8) -> np.ndarray:
    """Mean ``|m|`` per beta from ordered-start Gibbs chains (random sign per chain)."""
    out = []
    for j, b in enumerate(betas):
        ds = run_chain(graph, ChainConfig(beta=float(b), n_samples=n_samples,
                                          mixing_sweeps=mixing_sweeps, thinning=thinning,
                                          n_chains=n_chains, seed=derive_seed(seed, j),
                                          init="ordered"))
        out.append(np.abs(ds.spins[:, graph.free_idx].mean(axis=1)).mean())
    return np.array(out)


def generator_magnetization(model, betas: Sequence[float], n_samples: int, seed: int,
                            free_idx=None, prefix=None) -> np.ndarray:
    from .generator import sample

    out = []
    for j, b in enumerate(betas):
        S, _ = sample(model, float(b), n_samples, prefix, np.random.default_rng(derive_seed(seed, j)))
        cols = S if free_idx is None else S[:, free_idx]
        out.append(np.abs(cols.mean(axis=1)).mean())
    return np.array(out)


def crossover_beta(betas, mags, level: float = 0.5) -> float:
    """First beta where ``mags`` rises through ``level`` (linear interpolation)."""
    betas, mags = np.asarray(betas, float), np.asarray(mags, float)
    for k in range(betas.size - 1):
        a, b = mags[k] - level, mags[k + 1] - level
        if a <= 0 < b or a < 0 <= b:
            return float(betas[k] + (betas[k + 1] - betas[k]) * (-a) / (b - a))
    return math.nan


# -- paired PT / TAPT comparisons ----------------------------------------------------------

@dataclass
class PairedRuns:
    label: str
    pt: list[RunTrace]
    tapt: list[RunTrace]
    pt_success: list[bool | None]
    tapt_success: list[bool | None]

    @property
    def pt_best(self) -> np.ndarray:
        return np.array([t.best for t in self.pt])

    @property
    def tapt_best(self) -> np.ndarray:
        return np.array([t.best for t in self.tapt])

    def success_rates(self) -> tuple[float, float]:
        return float(np.mean(self.pt_success)), float(np.mean(self.tapt_success))


def run_repetitions(problem: Problem, ladder: BetaLadder, config: TAPTConfig,
                    proposal: Proposal | None, reps: int, seed: int, key: int = 0,
                    workers: int = 1) -> list[RunTrace]:
    """``reps`` runs; repetition ``k`` uses ``derive_seed(seed, key, k)``."""
    reps = check_count(reps, "repetitions", minimum=1)

    def one(k):
        cfg = TAPTConfig(config.n_moves, config.sweeps_per_move, config.n_augmented,
                         config.context_fraction, config.mh_corrected,
                         derive_seed(seed, key, k), 1)
        tr = run_tapt(problem.graph, ladder, cfg, proposal if cfg.n_augmented else None)
        tr.metadata.update(root_seed=seed, instance_key=key, repetition=k)
        return tr

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, range(reps)))
    return [one(k) for k in range(reps)]


def success_of(problem: Problem, trace: RunTrace) -> bool | None:
    """Factorisation success is read from the coldest slot's final state."""
    return problem.success(trace.final_state)


def paired_comparison(problem: Problem, ladder: BetaLadder, config: TAPTConfig,
                      proposal: Proposal, reps: int, seed: int, key: int = 0,
                      workers: int = 1) -> PairedRuns:
    pt_cfg = TAPTConfig(config.n_moves, config.sweeps_per_move, 0, 0.0, False, config.seed)
    pt = run_repetitions(problem, ladder, pt_cfg, None, reps, seed, key, workers)
    tapt = run_repetitions(problem, ladder, config, proposal, reps, seed, key, workers)
    return PairedRuns(problem.label, pt, tapt, [success_of(problem, t) for t in pt],
                      [success_of(problem, t) for t in tapt])


@dataclass(frozen=True)
class SignTest:
    wins: int
    losses: int
    ties: int
    p_value: float


def sign_test(a, b, lower_is_better: bool = True) -> SignTest:
    """One-sided paired sign test that ``b`` beats ``a`` (ties dropped)."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    better = b < a if lower_is_better else b > a
    worse = b > a if lower_is_better else b < a
    w, l = int(better.sum()), int(worse.sum())
    p = binomtest(w, w + l, 0.5, alternative="greater").pvalue if w + l else 1.0
    return SignTest(w, l, int(a.size - w - l), float(p))


# -- ablations ------------------------------------------------------------------------------

@dataclass(frozen=True)
class AblationRow:
    context_fraction: float
    n_augmented: int
    sweeps_per_move: int
    success_rate: float
    median_best: float
    mean_final: float
    generator_acceptance: tuple[float, ...]


def ablate(problems: Sequence[Problem], ladder: BetaLadder, base: TAPTConfig,
           proposal_for: Callable[[Problem], Proposal], reps: int, seed: int,
           contexts=(0.0, 0.25, 0.5, 1.0), n_augmented=None, sweeps=(0, 1, 10),
           workers: int = 1) -> list[AblationRow]:
    """One row per setting: vary context, then N_T, then M, each around ``base``.

    Success rate is pooled over problems and repetitions (None for problems
    without a success notion); generator acceptance is per slot, pooled.
    """
    if n_augmented is None:
        n_augmented = sorted({0, base.n_augmented, max(len(ladder) - 2, 0)})
    settings = [(c, base.n_augmented, base.sweeps_per_move) for c in contexts]
    settings += [(base.context_fraction, n, base.sweeps_per_move) for n in n_augmented]
    settings += [(base.context_fraction, base.n_augmented, m) for m in sweeps]
    rows, seen = [], set()
    props = {id(p): proposal_for(p) for p in problems}
    for c, n, m in settings:
        if (c, n, m) in seen:
            continue
        seen.add((c, n, m))
        cfg = TAPTConfig(base.n_moves, m, n, c, base.mh_corrected, base.seed)
        succ, best, final = [], [], []
        att = np.zeros(len(ladder))
        acc = np.zeros(len(ladder))
        for key, prob in enumerate(problems):
            traces = run_repetitions(prob, ladder, cfg, props[id(prob)], reps, seed, key, workers)
            for t in traces:
                s = success_of(prob, t)
                if s is not None:
                    succ.append(s)
                best.append(t.best)
                final.append(t.coldest_energies[-1])
                att += t.gen_attempts
                acc += t.gen_accepts
        with np.errstate(invalid="ignore", divide="ignore"):
            rates = tuple(float(x) for x in acc / att)
        rows.append(AblationRow(c, n, m, float(np.mean(succ)) if succ else math.nan,
                                float(np.median(best)), float(np.mean(final)), rates))
    return rows


def check_positive_budget(**budgets) -> None:
    for name, v in budgets.items():
        if v is None or v <= 0:
            raise DomainError(f"{name} must be positive, got {v}")
