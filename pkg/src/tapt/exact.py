"""Exact thermodynamics: enumeration, transfer matrix and Kac-Ward determinants.

Also hosts the sample-based free-energy estimator (thermodynamic
integration of the mean energy) and the variance-from-free-energy identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid
from scipy.special import logsumexp

from ._validation import check_beta
from .exceptions import DomainError, GeometryError, NumericError, SizeError
from .spin_model import CouplingGraph

MAX_BRUTE_FORCE_FREE = 24
MAX_TRANSFER_WIDTH = 20
_DENSE_LIMIT = 2500  # directed edges; above this the sparse LU is used


@dataclass(frozen=True)
class ExactThermo:
    """Thermodynamics at one inverse temperature.

    ``f`` is the free energy per free spin and ``f_all`` per spin including
    clamped ones; they coincide when nothing is clamped.
    """

    beta: float
    logZ: float
    F: float
    f: float
    f_all: float
    E_avg: float
    var_E: float
    n_free: int
    n_spins: int


def critical_beta() -> float:
    """Critical inverse temperature of the square-lattice ferromagnet, 0.5 ln(1 + sqrt 2)."""
    return 0.5 * math.log(1.0 + math.sqrt(2.0))


def _free_energy(logZ: float, beta: float) -> float:
    return -logZ / beta if beta > 0 else math.nan


def _thermo(beta, logZ, E_avg, var_E, n_free, n_spins) -> ExactThermo:
    F = _free_energy(logZ, beta)
    return ExactThermo(beta, logZ, F, F / n_free if n_free else math.nan,
                       F / n_spins if n_spins else math.nan, E_avg, max(var_E, 0.0),
                       n_free, n_spins)


# -- enumeration -----------------------------------------------------------------

def enumerate_states(graph: CouplingGraph, chunk: int = 1 << 16):
    """Yield ``(start, S)`` blocks covering every free-spin assignment.

    State number ``k`` sets free spin ``free_idx[b]`` to +1 iff bit ``b`` of
    ``k`` is 1. Clamped spins hold their clamp values.
    """
    n_free = graph.n_free
    if n_free > MAX_BRUTE_FORCE_FREE:
        raise SizeError(f"{n_free} free spins exceeds the enumeration limit "
                        f"{MAX_BRUTE_FORCE_FREE}")
    total = 1 << n_free
    base = np.ones(graph.n_spins, dtype=np.int8)
    base[graph.clamp_idx] = graph.clamp_val
    shifts = np.arange(n_free, dtype=np.int64)
    for start in range(0, total, chunk):
        k = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = (k[:, None] >> shifts) & 1
        S = np.repeat(base[None, :], k.size, axis=0)
        S[:, graph.free_idx] = (2 * bits - 1).astype(np.int8)
        yield start, S


def state_energies(graph: CouplingGraph) -> np.ndarray:
    """Energies of all ``2**n_free`` states in enumeration order."""
    from .spin_model import energies

    out = np.empty(1 << graph.n_free, dtype=np.float64)
    for start, S in enumerate_states(graph):
        out[start:start + S.shape[0]] = energies(graph, S)
    return out


def state_index(graph: CouplingGraph, S) -> np.ndarray:
    """Enumeration index of each configuration (row) of ``S``."""
    S = np.atleast_2d(np.asarray(S))
    bits = (S[:, graph.free_idx] > 0).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(graph.n_free, dtype=np.int64))


def boltzmann_distribution(graph: CouplingGraph, beta: float) -> np.ndarray:
    """Exact Boltzmann probabilities of all states in enumeration order."""
    beta = check_beta(beta)
    logw = -beta * state_energies(graph)
    return np.exp(logw - logsumexp(logw))


def brute_force_thermo(graph: CouplingGraph, beta: float) -> ExactThermo:
    """Exact ``logZ``, mean and variance of the energy by enumeration."""
    beta = check_beta(beta)
    E = state_energies(graph)
    logw = -beta * E
    logZ = float(logsumexp(logw))
    p = np.exp(logw - logZ)
    mean = float(p @ E)
    var = float(p @ (E - mean) ** 2)
    return _thermo(beta, logZ, mean, var, graph.n_free, graph.n_spins)


# -- transfer matrix ---------------------------------------------------------------

def _clamp_rows(clamp, Lx: int) -> np.ndarray:
    if clamp is None:
        return np.zeros((0, Lx), dtype=np.int8)
    pat = np.atleast_2d(np.asarray(clamp, dtype=np.int64))
    if pat.shape[1] != Lx:
        raise DomainError(f"clamp pattern width {pat.shape[1]} != Lx={Lx}")
    if not np.all(np.abs(pat) == 1):
        raise DomainError("clamp values must be +1 or -1")
    return pat.astype(np.int8)


def transfer_matrix_logZ(Ly: int, Lx: int, beta: float, J: float = 1.0, clamp=None) -> float:
    """Exact ``logZ`` of an open ``Ly x Lx`` grid by column-to-column contraction.

    The state of one column is its ``Ly`` spins (``2**Ly`` states, so
    ``Ly <= 20``). ``clamp`` fixes the first rows: a row pattern of length
    ``Lx`` or an array of shape ``(k, Lx)``; clamped rows are handled by
    zeroing column states whose top bits disagree with the pattern.
    """
    beta = check_beta(beta)
    if Ly > MAX_TRANSFER_WIDTH:
        raise SizeError(f"column height {Ly} exceeds transfer-matrix limit {MAX_TRANSFER_WIDTH}")
    if Ly < 1 or Lx < 1:
        raise DomainError("lattice sides must be >= 1")
    pat = _clamp_rows(clamp, Lx)
    k = pat.shape[0]
    if k > Ly:
        raise DomainError("more clamped rows than lattice rows")
    K = beta * J
    n_states = 1 << Ly
    states = np.arange(n_states, dtype=np.int64)
    # spins[y, state] = +-1 for row y (bit y)
    spins = (2 * ((states[None, :] >> np.arange(Ly)[:, None]) & 1) - 1).astype(np.float64)
    intra = K * np.sum(spins[:-1] * spins[1:], axis=0) if Ly > 1 else np.zeros(n_states)

    def column_log_weight(x):
        lw = intra.copy()
        if k:
            ok = np.all(spins[:k] == pat[:k, x][:, None], axis=0)
            lw[~ok] = -np.inf
        return lw

    # Bond between neighbouring columns: elementwise over rows, so apply a
    # 2x2 kernel along each bit axis of the state tensor.
    bond = np.array([[math.exp(K), math.exp(-K)], [math.exp(-K), math.exp(K)]])
    lw = column_log_weight(0)
    shift = np.max(lw)
    log_scale = shift
    v = np.exp(lw - shift)
    for x in range(1, Lx):
        t = v.reshape((2,) * Ly)  # axis order: bit Ly-1 ... bit 0 (C order)
        for axis in range(Ly):
            t = np.moveaxis(np.tensordot(bond, t, axes=([1], [axis])), 0, axis)
        v = t.reshape(n_states) * np.exp(column_log_weight(x))
        norm = v.max()
        if not norm > 0:
            raise NumericError(f"transfer vector vanished at beta={beta}")
        v /= norm
        log_scale += math.log(norm)
    return float(log_scale + math.log(v.sum()))


# -- Kac-Ward -------------------------------------------------------------------

@dataclass
class PlanarEmbedding:
    """Straight-line planar embedding of the free sublattice plus ghost vertex.

    ``coords`` has one row per vertex; the ghost, when present, is the last
    vertex. ``edges`` holds undirected edges ``(u, v)`` with weights
    ``weights`` (the Kac-Ward edge activities ``tanh(K_e)``).
    """

    coords: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    ghost: int | None = None

    def directed(self):
        """Directed edges (both orientations) with their direction angles."""
        u = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        v = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        w = np.concatenate([self.weights, self.weights])
        d = self.coords[v] - self.coords[u]
        theta = np.arctan2(d[:, 1], d[:, 0])
        return u, v, w, theta

    def check_planar(self) -> None:
        """Reject embeddings in which a ghost edge touches another edge.

        Lattice edges are unit axis-aligned and cannot cross each other, so
        only ghost edges are tested, against every other edge.
        """
        if self.ghost is None or len(self.edges) == 0:
            return
        ghost_edges = np.flatnonzero((self.edges == self.ghost).any(axis=1))
        for a in ghost_edges:
            for b in range(len(self.edges)):
                if a != b and _edges_conflict(self.coords, self.edges[a], self.edges[b]):
                    raise GeometryError(f"ghost edge {tuple(self.edges[a])} meets "
                                        f"edge {tuple(self.edges[b])}")


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _edges_conflict(coords, e, f) -> bool:
    """True if two straight edges meet anywhere other than a shared endpoint."""
    shared = set(e.tolist()) & set(f.tolist())
    if shared:
        (s,) = shared
        a = coords[e[0] if e[1] == s else e[1]]
        b = coords[f[0] if f[1] == s else f[1]]
        o = coords[s]
        # Overlap only if collinear and leaving the shared vertex the same way.
        return abs(_cross(o, a, b)) < 1e-12 and np.dot(a - o, b - o) > 0
    p1, p2 = coords[e[0]], coords[e[1]]
    q1, q2 = coords[f[0]], coords[f[1]]
    d1, d2 = _cross(p1, p2, q1), _cross(p1, p2, q2)
    d3, d4 = _cross(q1, q2, p1), _cross(q1, q2, p2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True

    def on_segment(a, b, c, d):
        return abs(d) < 1e-12 and (min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12
                                   and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12)

    return bool(on_segment(p1, p2, q1, d1) or on_segment(p1, p2, q2, d2)
                or on_segment(q1, q2, p1, d3) or on_segment(q1, q2, p2, d4))


def grid_embedding(Ly: int, Lx: int, beta: float, J: float = 1.0, clamp=None):
    """Embedding of the free rows of an open grid, plus the constant terms.

    Returns ``(embedding, const)`` where ``const`` collects the clamped-clamped
    couplings and every ``log cosh`` prefactor, so that
    ``logZ = const + n_free*log 2 + 0.5*log det(I - Q)``.
    """
    pat = _clamp_rows(clamp, Lx)
    k = pat.shape[0]
    if k > Ly:
        raise DomainError("more clamped rows than lattice rows")
    K = beta * J
    const = 0.0
    # Clamped-clamped couplings: constant Boltzmann factor.
    if k:
        const += K * float(np.sum(pat[:, :-1] * pat[:, 1:]))
        const += K * float(np.sum(pat[:-1, :] * pat[1:, :]))
    rows = Ly - k
    n_free = rows * Lx
    if n_free == 0:
        return PlanarEmbedding(np.zeros((0, 2)), np.zeros((0, 2), int), np.zeros(0)), const

    def vid(r, c):
        return r * Lx + c  # r counts free rows from the clamp boundary

    coords = np.array([(c, -(r + k)) for r in range(rows) for c in range(Lx)], dtype=float)
    edges, weights = [], []
    t = math.tanh(K)
    lc = _log_cosh(K)
    for r in range(rows):
        for c in range(Lx):
            if c + 1 < Lx:
                edges.append((vid(r, c), vid(r, c + 1)))
                weights.append(t)
                const += lc
            if r + 1 < rows:
                edges.append((vid(r, c), vid(r + 1, c)))
                weights.append(t)
                const += lc
    ghost = None
    if k:
        # Each boundary free spin sees exactly one clamped neighbour sigma_x,
        # an effective field converted into an edge to the ghost spin.
        ghost = n_free
        L = max(Ly, Lx)
        gx = (Lx - 1) / 2.0
        gy = -k + 10.0 * L
        coords = np.vstack([coords, [gx, gy]])
        for c in range(Lx):
            edges.append((vid(0, c), ghost))
            weights.append(math.tanh(K * pat[k - 1, c]))
            const += lc
    emb = PlanarEmbedding(coords, np.asarray(edges, dtype=np.int64).reshape(-1, 2),
                          np.asarray(weights, dtype=np.float64), ghost)
    return emb, const


def _log_cosh(x: float) -> float:
    x = abs(x)
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def kac_ward_matrix(emb: PlanarEmbedding):
    """Sparse ``Q`` over directed edges.

    ``Q[e, e'] = w(e') exp(i/2 * turn(e, e'))`` when ``e = (u->v)`` and
    ``e' = (v->w)`` with ``w != u``; zero otherwise (no backtracking).
    """
    u, v, w, theta = emb.directed()
    m = u.size
    by_tail: dict[int, list[int]] = {}
    for e in range(m):
        by_tail.setdefault(int(u[e]), []).append(e)
    rows, cols, vals = [], [], []
    for e in range(m):
        for f in by_tail.get(int(v[e]), ()):
            if v[f] == u[e]:
                continue
            turn = theta[f] - theta[e]
            turn = (turn + math.pi) % (2.0 * math.pi) - math.pi
            rows.append(e)
            cols.append(f)
            vals.append(w[f] * complex(math.cos(turn / 2.0), math.sin(turn / 2.0)))
    return sp.csc_matrix((np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(m, m))


def _perm_parity(perm: np.ndarray) -> int:
    seen = np.zeros(perm.size, dtype=bool)
    parity = 0
    for i in range(perm.size):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def complex_logdet(M) -> tuple[float, float]:
    """``(log|det M|, arg det M)`` by LU with partial pivoting.

    Log-magnitude and phase are accumulated separately so large lattices do
    not overflow. Small matrices go through dense LAPACK, large ones through
    SuperLU.
    """
    n = M.shape[0]
    if n == 0:
        return 0.0, 0.0
    if n <= _DENSE_LIMIT:
        dense = M.toarray() if sp.issparse(M) else np.asarray(M)
        sign, logabs = np.linalg.slogdet(dense)
        if sign == 0:
            return -math.inf, 0.0
        return float(logabs), float(np.angle(sign))
    lu = spla.splu(sp.csc_matrix(M), permc_spec="COLAMD")
    d = lu.U.diagonal()
    if np.any(d == 0):
        return -math.inf, 0.0
    logabs = float(np.sum(np.log(np.abs(d))))
    phase = float(np.sum(np.angle(d)))
    phase += math.pi * (_perm_parity(lu.perm_r) ^ _perm_parity(lu.perm_c))
    phase = (phase + math.pi) % (2.0 * math.pi) - math.pi
    return logabs, phase


def kac_ward_logZ(Ly: int, Lx: int, beta: float, J: float = 1.0, clamp=None, *,
                  return_phase: bool = False, check_geometry: bool = True):
    """Exact ``logZ`` of an open grid via the Kac-Ward determinant.

    ``clamp`` fixes the first ``k`` rows (a length-``Lx`` row or a ``(k, Lx)``
    array). The couplings from the clamped rows into the free region act as
    fields on the boundary free row; these are turned back into edges to a
    single ghost vertex placed far above the lattice, which keeps the graph
    planar. Then

        logZ = const + |U| log 2 + 1/2 log det(I - Q)

    with ``const`` the clamped-clamped couplings and all ``log cosh`` terms.
    With ``return_phase`` the argument of ``det(I - Q)`` is returned as well
    (it must vanish up to round-off).
    """
    beta = check_beta(beta)
    emb, const = grid_embedding(Ly, Lx, beta, J, clamp)
    n_free = emb.coords.shape[0] - (1 if emb.ghost is not None else 0)
    if check_geometry and emb.ghost is not None:
        emb.check_planar()
    Q = kac_ward_matrix(emb)
    I = sp.identity(Q.shape[0], dtype=np.complex128, format="csc")
    logabs, phase = complex_logdet(I - Q)
    if not math.isfinite(logabs):
        raise NumericError(f"det(I - Q) vanished at beta={beta}")
    logZ = const + n_free * math.log(2.0) + 0.5 * logabs
    if return_phase:
        return logZ, phase
    return logZ


def kac_ward_thermo(Ly: int, Lx: int, beta: float, J: float = 1.0, clamp=None,
                    step: float = 1e-3) -> ExactThermo:
    """:class:`ExactThermo` with ``E_avg`` and ``var_E`` from central differences of logZ."""
    beta = check_beta(beta)
    k = 0 if clamp is None else np.atleast_2d(clamp).shape[0]
    n_spins = Ly * Lx

    def lz(b):
        return kac_ward_logZ(Ly, Lx, b, J, clamp, check_geometry=False)

    logZ = kac_ward_logZ(Ly, Lx, beta, J, clamp)
    lo = max(beta - step, 0.0)
    hi = lo + 2 * step
    mid = lo + step
    zl, zm, zh = lz(lo), (logZ if mid == beta else lz(mid)), lz(hi)
    E = -(zh - zl) / (2 * step)
    var = (zh - 2 * zm + zl) / step**2
    return _thermo(beta, logZ, E, var, n_spins - k * Lx, n_spins)


def semicircle_defect_clamp(L: int, radius: float | None = None) -> np.ndarray:
    """Top-half clamp for an ``L x L`` grid with a semicircular defect.

    The top ``L // 2`` rows are clamped to +1 except a half-disc of radius
    ``L/5`` (default) centred on the midpoint of the clamp boundary, which is
    clamped to -1.
    """
    k = L // 2
    r = L / 5.0 if radius is None else float(radius)
    cx = (L - 1) / 2.0
    pat = np.ones((k, L), dtype=np.int8)
    for row in range(k):
        for col in range(L):
            if (col - cx) ** 2 + (row - (k - 0.5)) ** 2 <= r * r:
                pat[row, col] = -1
    return pat


# -- sample-based estimators -------------------------------------------------------

def thermo_integration_F(sample_source: Callable[[float, int], np.ndarray], beta: float,
                         n_free: int, segments: int = 25, samples_per_point: int = 100,
                         beta_start: float = 1e-3, return_curve: bool = False):
    """Free energy from the integrated mean energy.

    ``beta F(beta) = -n_free log 2 + int E_avg(w) dw`` with the integral
    taken by the trapezoid rule on ``segments`` equal pieces of
    ``[beta_start, beta]``. ``sample_source(w, n)`` returns ``n`` energies
    sampled at inverse temperature ``w`` (or their mean as a scalar).
    """
    if not (isinstance(beta, (int, float, np.floating)) and beta > 0):
        raise DomainError(f"beta must be positive, got {beta!r}")
    if segments < 1:
        raise DomainError("segments must be >= 1")
    if beta <= beta_start:
        grid = np.array([beta])
        means = np.array([float(np.mean(sample_source(beta, samples_per_point)))])
        integral = 0.0
    else:
        grid = np.linspace(beta_start, beta, segments + 1)
        means = np.array([float(np.mean(sample_source(float(w), samples_per_point)))
                          for w in grid])
        integral = float(trapezoid(means, grid))
    F = (-n_free * math.log(2.0) + integral) / beta
    if return_curve:
        return F, grid, means
    return F


def variance_from_F(betas, F_values) -> np.ndarray:
    """Energy variance ``-d^2(beta F)/d beta^2`` by central second differences.

    ``betas`` must be a uniform grid of at least 3 points; the result is
    aligned with ``betas[1:-1]``.
    """
    betas = np.asarray(betas, dtype=np.float64)
    F_values = np.asarray(F_values, dtype=np.float64)
    if betas.size < 3 or betas.shape != F_values.shape:
        raise DomainError("need at least 3 matching beta / F values")
    steps = np.diff(betas)
    h = steps[0]
    if h <= 0 or not np.allclose(steps, h, rtol=1e-6, atol=0):
        raise DomainError("beta grid must be uniform and increasing")
    g = betas * F_values
    return -(g[2:] - 2.0 * g[1:-1] + g[:-2]) / h**2


def variance_from_logZ(logZ_fn: Callable[[float], float], beta: float,
                       step: float = 1e-3) -> float:
    """``var(E) = d^2 logZ / d beta^2`` on the grid ``beta +- step``."""
    grid = np.array([beta - step, beta, beta + step])
    F = np.array([-logZ_fn(b) / b for b in grid])
    return float(variance_from_F(grid, F)[0])


def mean_energy_from_logZ(logZ_fn: Callable[[float], float], beta: float,
                          step: float = 1e-3) -> float:
    """``E_avg = -d logZ / d beta`` by a central difference."""
    return -(logZ_fn(beta + step) - logZ_fn(beta - step)) / (2.0 * step)
