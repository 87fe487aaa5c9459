"""Parallel tempering and its generator-augmented variant.

Replica slot 0 is the hottest. Swaps exchange configurations between adjacent
slots; each slot keeps its beta and its own random stream for local sweeps.
A run cycles three global moves (1: generator proposals to the ``n_augmented``
hottest slots, 2: even-odd swaps, 3: odd-even swaps), each followed by ``M``
Gibbs sweeps of every replica. Plain PT is the same loop with no proposals, so
both spend exactly ``n_moves * M`` sweeps per replica.

Random streams: the root seed spawns a coordinator stream (swap uniforms,
proposals, acceptance tests) and one stream per slot (initial state and
sweeps). Results therefore do not depend on how many worker threads run the
sweeps.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np
from scipy.special import erfcinv, logsumexp
from scipy.stats import norm
from sklearn.base import BaseEstimator

from ._validation import (
    as_seed_sequence, check_beta, check_count, check_fraction, check_random_state,
)
from .exceptions import DimensionError, DomainError, LayoutError, SizeError
from .mcmc import gibbs_sweeps
from .spin_model import CouplingGraph, energies, energy, random_configuration

MOVE_GENERATOR, MOVE_EVEN, MOVE_ODD = 1, 2, 3
TRACE_COLUMNS = ("move_index", "move_kind", "replica", "beta", "energy", "accepted")


# -- ladder and config ---------------------------------------------------------------

@dataclass(frozen=True)
class BetaLadder:
    betas: tuple[float, ...]

    def __post_init__(self):
        b = tuple(check_beta(float(x)) for x in self.betas)
        if not b:
            raise DomainError("a ladder needs at least one beta")
        if any(y <= x for x, y in zip(b, b[1:])):
            raise DomainError("ladder betas must be strictly increasing")
        object.__setattr__(self, "betas", b)

    def __len__(self) -> int:
        return len(self.betas)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.betas)

    @classmethod
    def geometric(cls, beta_min: float, beta_max: float, n: int) -> "BetaLadder":
        n = check_count(n, "n_replicas", minimum=1)
        if n == 1:
            return cls((float(beta_max),))
        if beta_min <= 0:
            return cls(tuple(np.linspace(beta_min, beta_max, n)))
        return cls(tuple(np.geomspace(beta_min, beta_max, n)))

    @classmethod
    def linear(cls, beta_min: float, beta_max: float, n: int) -> "BetaLadder":
        n = check_count(n, "n_replicas", minimum=1)
        return cls(tuple(np.linspace(beta_min, beta_max, n)) if n > 1 else (float(beta_max),))

    def to_text(self) -> str:
        return "".join(f"{b!r}\n" for b in self.betas)

    @classmethod
    def from_text(cls, text: str) -> "BetaLadder":
        vals = [float(t) for line in text.splitlines()
                if (t := line.split("#", 1)[0].strip())]
        return cls(tuple(vals))

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> "BetaLadder":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class TAPTConfig:
    n_moves: int = 30
    sweeps_per_move: int = 5
    n_augmented: int = 0
    context_fraction: float = 0.0
    mh_corrected: bool = False
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        check_count(self.n_moves, "n_moves")
        check_count(self.sweeps_per_move, "sweeps_per_move")
        check_count(self.n_augmented, "n_augmented")
        check_fraction(self.context_fraction, "context_fraction")
        check_count(self.workers, "workers", minimum=1)


# -- acceptance rules ---------------------------------------------------------------

def swap_probability(dbeta: float, dE: float) -> float:
    """``min(1, exp(dbeta * dE))`` with ``dbeta = b[r+1]-b[r]``, ``dE = E[r+1]-E[r]``."""
    x = dbeta * dE
    return 1.0 if x >= 0 else math.exp(x)


def generator_acceptance(beta: float, E_current: float, E_proposal: float,
                         logq_current: float = 0.0, logq_proposal: float = 0.0) -> float:
    """``min(1, exp(beta (E_cur - E_prop) + logq_cur - logq_prop))``.

    Leaving both log-probabilities at 0 gives the uncorrected rule.
    """
    x = beta * (E_current - E_proposal) + (logq_current - logq_proposal)
    return 1.0 if x >= 0 else math.exp(x)


def _accept(x: float, u: float) -> bool:
    return x >= 0 or u < math.exp(x)


# -- proposals --------------------------------------------------------------------------

class Proposal(Protocol):
    """Global-move source: whole configurations at given betas.

    ``current`` rows supply the first ``n_context`` free spins (in the
    proposal's layout order); the rest are drawn. ``log_q`` covers only the
    drawn positions.
    """

    def propose(self, betas: np.ndarray, current: np.ndarray, n_context: int,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]: ...

    def log_prob(self, S: np.ndarray, betas: np.ndarray, n_context: int) -> np.ndarray: ...


class UniformProposal:
    """Independent fair coins on every free spin."""

    def __init__(self, graph: CouplingGraph):
        self.graph = graph

    def propose(self, betas, current, n_context, rng):
        g = self.graph
        current = np.atleast_2d(current)
        S = current.copy()
        draw = g.free_idx[n_context:]
        S[:, draw] = np.where(rng.random((S.shape[0], draw.size)) < 0.5, 1, -1)
        return S, self.log_prob(S, betas, n_context)

    def log_prob(self, S, betas, n_context):
        n = self.graph.n_free - n_context
        return np.full(np.atleast_2d(S).shape[0], -n * math.log(2.0))


class TableProposal:
    """Exact distribution over all free-spin states, given as log-weights per beta.

    ``log_weights(beta)`` returns unnormalised log-probabilities in
    :func:`tapt.exact.enumerate_states` order. Context is not supported.
    """

    def __init__(self, graph: CouplingGraph, log_weights):
        from .exact import enumerate_states

        self.graph = graph
        self.log_weights = log_weights
        self._states = np.concatenate([S for _, S in enumerate_states(graph)])
        self._cache: dict[float, np.ndarray] = {}

    @classmethod
    def boltzmann(cls, graph: CouplingGraph, beta_scale: float = 1.0, field_bias: float = 0.0):
        """Boltzmann at ``beta_scale * beta`` with an extra uniform field (a planted bias)."""
        from .exact import enumerate_states, state_energies

        E = state_energies(graph)
        m = np.concatenate([S[:, graph.free_idx].sum(axis=1) for _, S in enumerate_states(graph)])
        return cls(graph, lambda b: -beta_scale * b * E + field_bias * m)

    def _logp(self, beta: float) -> np.ndarray:
        key = float(beta)
        if key not in self._cache:
            lw = np.asarray(self.log_weights(key), dtype=np.float64)
            self._cache[key] = lw - logsumexp(lw)
        return self._cache[key]

    def propose(self, betas, current, n_context, rng):
        if n_context:
            raise DomainError("TableProposal does not support context")
        betas = np.atleast_1d(betas)
        idx = np.array([rng.choice(self._states.shape[0], p=np.exp(self._logp(b))) for b in betas])
        S = self._states[idx].copy()
        return S, np.array([self._logp(b)[k] for b, k in zip(betas, idx)])

    def log_prob(self, S, betas, n_context):
        from .exact import state_index

        if n_context:
            raise DomainError("TableProposal does not support context")
        idx = state_index(self.graph, S)
        betas = np.broadcast_to(np.atleast_1d(betas), idx.shape)
        return np.array([self._logp(b)[k] for b, k in zip(betas, idx)])


class GeneratorProposal:
    """Adapter from a trained :class:`~tapt.generator.IsingFormerNet` to the proposal protocol."""

    def __init__(self, model, graph: CouplingGraph):
        from .generator import TokenLayout

        layout = model.layout
        if not isinstance(layout, TokenLayout):
            raise LayoutError("generator has no token layout")
        layout.check_graph(graph)
        self.model, self.graph, self.layout = model, graph, layout
        clamp = graph.clamp
        self.prefix = np.array([clamp[i] for i in layout.prefix_idx], dtype=np.int8)
        # context spins are the first free spins of the layout order
        self.free_order = np.array(layout.free_idx, dtype=np.int64)

    def propose(self, betas, current, n_context, rng):
        from .generator import sample

        betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
        ctx = np.atleast_2d(current) if n_context else None
        return sample(self.model, betas, betas.size, self.prefix if self.prefix.size else None,
                      rng, context=ctx, n_context=n_context)

    def log_prob(self, S, betas, n_context):
        from .generator import log_prob

        S = np.atleast_2d(S)
        return np.atleast_1d(log_prob(self.model, S, np.broadcast_to(betas, (S.shape[0],)),
                                      n_context))


# -- replica state and trace ----------------------------------------------------------------

@dataclass
class RunTrace:
    """Everything recorded by one PT/TAPT run.

    ``energies[k]`` holds slot energies after global move ``k`` and its sweeps
    (row 0 is the initial state). ``best_energy[k]`` is the lowest energy seen in
    any slot up to that point.
    """

    betas: np.ndarray
    move_kinds: list[int] = field(default_factory=list)
    energies: list[np.ndarray] = field(default_factory=list)
    accepted: list[np.ndarray] = field(default_factory=list)
    best_energy: list[float] = field(default_factory=list)
    swap_attempts: np.ndarray | None = None
    swap_accepts: np.ndarray | None = None
    gen_attempts: np.ndarray | None = None
    gen_accepts: np.ndarray | None = None
    best_state: np.ndarray | None = None
    final_states: np.ndarray | None = None
    sweeps_per_replica: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        R = len(self.betas)
        self.swap_attempts = np.zeros(max(R - 1, 0), dtype=np.int64)
        self.swap_accepts = np.zeros(max(R - 1, 0), dtype=np.int64)
        self.gen_attempts = np.zeros(R, dtype=np.int64)
        self.gen_accepts = np.zeros(R, dtype=np.int64)

    @property
    def n_replicas(self) -> int:
        return len(self.betas)

    @property
    def final_state(self) -> np.ndarray:
        """Configuration in the coldest slot at the end of the run."""
        return self.final_states[-1]

    @property
    def best(self) -> float:
        return self.best_energy[-1]

    @property
    def energy_array(self) -> np.ndarray:
        return np.array(self.energies)

    @property
    def coldest_energies(self) -> np.ndarray:
        return self.energy_array[:, -1]

    def swap_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.swap_accepts / self.swap_attempts

    def generator_rates(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.gen_accepts / self.gen_attempts

    def rows(self):
        """Trace table rows; ``accepted`` is '' where the slot had no attempt in that move."""
        for k, kind in enumerate(self.move_kinds, start=1):
            E, acc = self.energies[k], self.accepted[k - 1]
            for r in range(self.n_replicas):
                flag = "" if acc[r] < 0 else int(acc[r])
                yield (k, kind, r, float(self.betas[r]), float(E[r]), flag)

    def to_csv(self, stream=None, comments: Sequence[str] = ()) -> str:
        buf = stream if stream is not None else io.StringIO()
        for c in comments:
            buf.write(f"# {c}\r\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(TRACE_COLUMNS)
        for k, kind, r, b, e, flag in self.rows():
            w.writerow((k, kind, r, repr(b), repr(e + 0.0), flag))
        return buf.getvalue() if stream is None else ""

    def write_csv(self, path, comments: Sequence[str] = ()) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            self.to_csv(fh, comments)


class _Replicas:
    def __init__(self, graph: CouplingGraph, betas: np.ndarray, seed, workers: int):
        root = as_seed_sequence(seed)
        coord_ss, slots_ss = root.spawn(2)
        self.coord = np.random.Generator(np.random.PCG64(coord_ss))
        self.rngs = [np.random.Generator(np.random.PCG64(s)) for s in slots_ss.spawn(len(betas))]
        self.graph, self.betas, self.workers = graph, betas, workers
        self.states = np.stack([random_configuration(graph, g) for g in self.rngs])
        self.E = energies(graph, self.states)

    def sweep(self, M: int) -> None:
        if M == 0:
            return
        R = len(self.betas)

        def one(r):
            gibbs_sweeps(self.graph, self.states[r], self.betas[r], M, self.rngs[r])

        if self.workers > 1 and R > 1:
            with ThreadPoolExecutor(self.workers) as pool:
                list(pool.map(one, range(R)))
        else:
            for r in range(R):
                one(r)
        self.E = energies(self.graph, self.states)


# -- global moves -------------------------------------------------------------------------

def swap_pass(states: np.ndarray, E: np.ndarray, betas, parity: str, rng) -> np.ndarray:
    """Attempt every adjacent pair of one parity; configurations and energies move together.

    ``parity`` is ``"even"`` (pairs 0-1, 2-3, ...) or ``"odd"`` (1-2, 3-4, ...).
    Pairs are disjoint, so they are attempted simultaneously with one uniform
    each, drawn in pair order. Returns a per-pair array: 1 swapped, 0 rejected,
    -1 not attempted.
    """
    betas = np.asarray(betas, dtype=np.float64)
    R = betas.size
    if states.shape[0] != R or E.shape[0] != R:
        raise DimensionError("states, energies and betas disagree on the replica count")
    first = {"even": 0, "odd": 1}.get(parity)
    if first is None:
        raise DomainError(f"parity must be 'even' or 'odd', got {parity!r}")
    out = np.full(max(R - 1, 0), -1, dtype=np.int8)
    pairs = np.arange(first, R - 1, 2)
    u = rng.random(pairs.size)
    for r, ur in zip(pairs, u):
        ok = _accept((betas[r + 1] - betas[r]) * (E[r + 1] - E[r]), ur)
        out[r] = ok
        if ok:
            states[[r, r + 1]] = states[[r + 1, r]]
            E[r], E[r + 1] = E[r + 1], E[r]
    return out


def generator_moves(graph: CouplingGraph, states: np.ndarray, E: np.ndarray, betas,
                    n_augmented: int, proposal: Proposal, rng, context_fraction: float = 0.0,
                    mh_corrected: bool = False) -> np.ndarray:
    """Generator proposals for slots ``0..n_augmented-1``, one batched draw.

    Proposal ``r`` is sampled at ``betas[r]`` and accepted with
    ``min(1, exp(beta_r (E_r - E_r^T)))``, times ``q(current)/q(proposal)``
    when ``mh_corrected``. Returns 1/0 per augmented slot.
    """
    betas = np.asarray(betas, dtype=np.float64)
    if n_augmented == 0:
        return np.zeros(0, dtype=np.int8)
    if n_augmented > betas.size:
        raise DomainError(f"n_augmented={n_augmented} exceeds {betas.size} replicas")
    n_context = int(math.floor(context_fraction * graph.n_free))
    b = betas[:n_augmented]
    prop, lq_prop = proposal.propose(b, states[:n_augmented], n_context, rng)
    prop = np.asarray(prop, dtype=np.int8)
    if prop.shape != (n_augmented, graph.n_spins):
        raise LayoutError(f"proposal returned shape {prop.shape}, expected "
                          f"{(n_augmented, graph.n_spins)}")
    if graph.clamp_idx.size and np.any(prop[:, graph.clamp_idx] != graph.clamp_val):
        raise LayoutError("proposal does not respect the graph clamps")
    E_prop = energies(graph, prop)
    lq_cur = proposal.log_prob(states[:n_augmented], b, n_context) if mh_corrected else None
    u = rng.random(n_augmented)
    out = np.zeros(n_augmented, dtype=np.int8)
    for r in range(n_augmented):
        x = b[r] * (E[r] - E_prop[r])
        if mh_corrected:
            x += lq_cur[r] - lq_prop[r]
        if _accept(x, u[r]):
            out[r] = 1
            states[r] = prop[r]
            E[r] = E_prop[r]
    return out


def generator_move(graph, states, E, r: int, betas, proposal: Proposal, rng,
                   context_fraction: float = 0.0) -> bool:
    """Single-slot uncorrected generator move (slot ``r`` only)."""
    sub_s, sub_E = states[r:r + 1], E[r:r + 1]
    ok = generator_moves(graph, sub_s, sub_E, np.asarray(betas)[r:r + 1], 1, proposal, rng,
                         context_fraction, False)
    return bool(ok[0])


def mh_corrected_move(graph, states, E, r: int, betas, proposal: Proposal, rng,
                      context_fraction: float = 0.0) -> bool:
    """Single-slot generator move with the independence-sampler correction."""
    sub_s, sub_E = states[r:r + 1], E[r:r + 1]
    ok = generator_moves(graph, sub_s, sub_E, np.asarray(betas)[r:r + 1], 1, proposal, rng,
                         context_fraction, True)
    return bool(ok[0])


# -- the loop ------------------------------------------------------------------------------

def move_kind(k: int) -> int:
    """Kind of global move ``k`` (1-based): 1, 2, 3, 1, 2, 3, ..."""
    return (k - 1) % 3 + 1


def run_tapt(graph: CouplingGraph, ladder: BetaLadder, config: TAPTConfig,
             proposal: Proposal | None = None, callback=None) -> RunTrace:
    """Generator-augmented parallel tempering.

    ``callback(k, states, energies)`` (optional) sees the replicas after each
    global move and its sweeps; it must not modify them.
    """
    betas = ladder.array
    R = betas.size
    if config.n_augmented > R:
        raise DomainError(f"n_augmented={config.n_augmented} exceeds {R} replicas")
    if config.n_augmented and proposal is None:
        raise DomainError("n_augmented > 0 requires a proposal")
    reps = _Replicas(graph, betas, config.seed, config.workers)
    trace = RunTrace(betas)
    trace.energies.append(reps.E.copy())
    best_i = int(np.argmin(reps.E))
    best_E, best_state = float(reps.E[best_i]), reps.states[best_i].copy()
    trace.best_energy.append(best_E)
    M = config.sweeps_per_move
    for k in range(1, config.n_moves + 1):
        kind = move_kind(k)
        acc = np.full(R, -1, dtype=np.int8)
        if kind == MOVE_GENERATOR:
            if config.n_augmented:
                res = generator_moves(graph, reps.states, reps.E, betas, config.n_augmented,
                                      proposal, reps.coord, config.context_fraction,
                                      config.mh_corrected)
                acc[:config.n_augmented] = res
                trace.gen_attempts[:config.n_augmented] += 1
                trace.gen_accepts[:config.n_augmented] += res
        else:
            res = swap_pass(reps.states, reps.E, betas, "even" if kind == MOVE_EVEN else "odd",
                            reps.coord)
            tried = res >= 0
            trace.swap_attempts += tried
            trace.swap_accepts += res > 0
            # a slot's flag is the outcome of the pair it took part in
            for r in np.flatnonzero(tried):
                acc[r] = acc[r + 1] = res[r]
        reps.sweep(M)
        i = int(np.argmin(reps.E))
        if reps.E[i] < best_E:
            best_E, best_state = float(reps.E[i]), reps.states[i].copy()
        trace.move_kinds.append(kind)
        trace.accepted.append(acc)
        trace.energies.append(reps.E.copy())
        trace.best_energy.append(best_E)
        if callback is not None:
            callback(k, reps.states, reps.E)
    trace.best_state = best_state
    trace.final_states = reps.states.copy()
    trace.sweeps_per_replica = config.n_moves * M
    trace.metadata.update(seed=config.seed, n_moves=config.n_moves, sweeps_per_move=M,
                          n_augmented=config.n_augmented,
                          context_fraction=config.context_fraction,
                          mh_corrected=config.mh_corrected)
    return trace


def run_pt(graph: CouplingGraph, ladder: BetaLadder, config: TAPTConfig, callback=None) -> RunTrace:
    """Plain parallel tempering: the same loop with no generator proposals."""
    if config.n_augmented:
        config = TAPTConfig(config.n_moves, config.sweeps_per_move, 0, config.context_fraction,
                            config.mh_corrected, config.seed, config.workers)
    return run_tapt(graph, ladder, config, None, callback)


# -- adaptive ladder -------------------------------------------------------------------------

def predicted_swap_acceptance(mean: float, std: float) -> float:
    """``E[min(1, e^x)]`` for ``x ~ N(mean, std^2)``."""
    if std <= 0:
        return 1.0 if mean >= 0 else math.exp(mean)
    a = mean / std
    return float(norm.cdf(a) + math.exp(mean + 0.5 * std * std) * norm.cdf(-a - std))


def _probe(graph, s, beta, sweeps, rng) -> tuple[float, float]:
    burn = sweeps // 2
    gibbs_sweeps(graph, s, beta, burn, rng)
    Es = np.empty(max(sweeps - burn, 1))
    for t in range(Es.size):
        gibbs_sweeps(graph, s, beta, 1, rng)
        Es[t] = energy(graph, s)
    return float(Es.mean()), float(Es.var())


def adaptive_ladder(graph: CouplingGraph, beta_min: float, beta_max: float,
                    target_acceptance: float = 0.3, probe_sweeps: int = 200, rng=None,
                    max_replicas: int = 128, fallback_replicas: int = 8) -> BetaLadder:
    """Greedy ladder with roughly constant predicted neighbour swap acceptance.

    At each rung a short Gibbs probe estimates the energy variance s2. With
    Gaussian energies whose mean shifts by ``-s2 * dbeta``, the exponent in the
    swap rule is ``N(-s2 dbeta^2, 2 s2 dbeta^2)``, whose expected acceptance is
    ``erfc(sqrt(s2) dbeta / 2)``; the step solves that for the target. The probe
    chain carries over from rung to rung. A zero variance at ``beta_min``
    (constant energy) gives a geometric ladder of ``fallback_replicas`` rungs.
    """
    target = float(target_acceptance)
    if not 0.0 < target < 1.0:
        raise DomainError(f"target_acceptance must lie in (0, 1), got {target}")
    beta_min, beta_max = check_beta(beta_min), check_beta(beta_max)
    if beta_max <= beta_min:
        raise DomainError("beta_max must exceed beta_min")
    probe_sweeps = check_count(probe_sweeps, "probe_sweeps", minimum=2)
    rng = check_random_state(rng)
    s = random_configuration(graph, rng)
    _, var = _probe(graph, s, beta_min, probe_sweeps, rng)
    if var <= 0:
        return BetaLadder.geometric(beta_min, beta_max, fallback_replicas)
    step_scale = 2.0 * float(erfcinv(target))
    betas = [beta_min]
    while True:
        b = betas[-1]
        nxt = b + step_scale / math.sqrt(var) if var > 0 else math.inf
        if nxt >= beta_max:
            betas.append(beta_max)
            break
        betas.append(nxt)
        if len(betas) >= max_replicas:
            raise SizeError(f"ladder needs more than {max_replicas} replicas for target {target}")
        _, var = _probe(graph, s, nxt, probe_sweeps, rng)
    return BetaLadder(tuple(betas))


# -- analysis -------------------------------------------------------------------------------

def residual_energy(traces: RunTrace | Sequence[RunTrace], E_gnd: float, n_spins: int,
                    best_so_far: bool = False) -> np.ndarray:
    """``rho(t) = (<E_coldest(t)> - E_gnd) / N`` averaged over runs.

    With ``best_so_far`` the running minimum over all slots is used instead of
    the coldest-slot energy.
    """
    if isinstance(traces, RunTrace):
        traces = [traces]
    if not traces:
        raise DomainError("no traces given")
    n_spins = check_count(n_spins, "n_spins", minimum=1)
    rows = [np.asarray(t.best_energy) if best_so_far else t.coldest_energies for t in traces]
    if len({r.size for r in rows}) != 1:
        raise DimensionError("traces have different lengths")
    return (np.mean(rows, axis=0) - E_gnd) / n_spins


# -- estimator facade -------------------------------------------------------------------------

class TemperingSampler(BaseEstimator):
    """Estimator-style wrapper: ``fit(graph)`` runs PT or TAPT and stores ``trace_``.

    ``betas`` is a sequence of inverse temperatures (hottest first). A proposal
    passed to ``fit`` is used for the ``n_augmented`` hottest slots.
    """

    def __init__(self, betas=(0.1, 0.5, 1.0), n_moves=30, sweeps_per_move=5, n_augmented=0,
                 context_fraction=0.0, mh_corrected=False, random_state=0, workers=1):
        self.betas = betas
        self.n_moves = n_moves
        self.sweeps_per_move = sweeps_per_move
        self.n_augmented = n_augmented
        self.context_fraction = context_fraction
        self.mh_corrected = mh_corrected
        self.random_state = random_state
        self.workers = workers

    def fit(self, graph: CouplingGraph, proposal: Proposal | None = None):
        config = TAPTConfig(self.n_moves, self.sweeps_per_move, self.n_augmented,
                            self.context_fraction, self.mh_corrected, self.random_state,
                            self.workers)
        self.trace_ = run_tapt(graph, BetaLadder(tuple(self.betas)), config, proposal)
        self.best_energy_ = self.trace_.best
        self.best_state_ = self.trace_.best_state
        return self

    def predict(self, graph: CouplingGraph | None = None) -> np.ndarray:
        """Best configuration found by the last ``fit``."""
        if not hasattr(self, "trace_"):
            raise DomainError("TemperingSampler is not fitted yet")
        return self.best_state_
