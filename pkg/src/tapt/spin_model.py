"""Ising problems: couplings, fields, clamps and exact energy arithmetic.

Spins are stored as int8 +-1 everywhere. A configuration's energy is

    E(s) = - sum_{i<j} J_ij s_i s_j - sum_i h_i s_i

and is evaluated in float64 with a fixed summation order, so it is a pure,
reproducible function of its inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from ._validation import check_spin_batch, check_spins
from .exceptions import ClampedSiteError, DimensionError, DomainError, FormatError

INSTANCE_HEADER = "isingmodel v1"


class CouplingGraph:
    """Sparse symmetric couplings ``J_ij``, fields ``h_i`` and clamps.

    Parameters
    ----------
    n_spins : int
    couplings : iterable of (i, j, J)
        Pairs are normalised to ``i < j``. Duplicates and self-couplings are
        rejected.
    fields : array-like of shape (n_spins,), optional
    clamp : mapping {index: +-1}, optional

    The object is immutable after construction; derived graphs are built with
    :meth:`with_clamp` / :meth:`without_clamp`.
    """

    __slots__ = (
        "n_spins", "edges_i", "edges_j", "edges_J", "fields",
        "clamp_idx", "clamp_val", "indptr", "nbr", "nbr_J",
        "free_mask", "free_idx", "_digest",
    )

    def __init__(self, n_spins: int, couplings: Iterable = (), fields=None,
                 clamp: Mapping[int, int] | None = None):
        if n_spins < 0:
            raise DomainError("n_spins must be non-negative")
        n_spins = int(n_spins)
        rows = [(int(i), int(j), float(J)) for i, j, J in couplings]
        seen = set()
        ei, ej, eJ = [], [], []
        for i, j, J in rows:
            if i == j:
                raise DomainError(f"self-coupling on spin {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i and j < n_spins):
                raise DomainError(f"coupling ({i}, {j}) out of range for {n_spins} spins")
            if (i, j) in seen:
                raise DomainError(f"duplicate coupling ({i}, {j})")
            seen.add((i, j))
            ei.append(i)
            ej.append(j)
            eJ.append(J)
        order = np.lexsort((np.asarray(ej, dtype=np.int64), np.asarray(ei, dtype=np.int64)))
        self.edges_i = np.asarray(ei, dtype=np.int64)[order]
        self.edges_j = np.asarray(ej, dtype=np.int64)[order]
        self.edges_J = np.asarray(eJ, dtype=np.float64)[order]

        if fields is None:
            h = np.zeros(n_spins, dtype=np.float64)
        else:
            h = np.array(fields, dtype=np.float64)
            if h.shape != (n_spins,):
                raise DimensionError(f"fields must have shape ({n_spins},), got {h.shape}")
        self.fields = h
        self.n_spins = n_spins

        clamp = dict(clamp or {})
        idx = np.array(sorted(clamp), dtype=np.int64)
        if idx.size and (idx[0] < 0 or idx[-1] >= n_spins):
            raise DomainError("clamped index out of range")
        val = np.array([clamp[k] for k in idx.tolist()], dtype=np.int8)
        if val.size and not np.all((val == 1) | (val == -1)):
            raise DomainError("clamp values must be +1 or -1")
        self.clamp_idx = idx
        self.clamp_val = val

        free = np.ones(n_spins, dtype=bool)
        free[idx] = False
        self.free_mask = free
        self.free_idx = np.flatnonzero(free).astype(np.int64)

        # CSR adjacency: O(degree) local fields in the sweep kernels.
        both_i = np.concatenate([self.edges_i, self.edges_j])
        both_j = np.concatenate([self.edges_j, self.edges_i])
        both_J = np.concatenate([self.edges_J, self.edges_J])
        perm = np.lexsort((both_j, both_i))
        self.nbr = both_j[perm].astype(np.int64)
        self.nbr_J = both_J[perm]
        counts = np.bincount(both_i, minlength=n_spins) if n_spins else np.zeros(0, np.int64)
        self.indptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self._digest = None
        for name in ("edges_i", "edges_j", "edges_J", "fields", "clamp_idx",
                     "clamp_val", "indptr", "nbr", "nbr_J", "free_mask", "free_idx"):
            getattr(self, name).setflags(write=False)

    # -- construction helpers ------------------------------------------------
    @property
    def n_edges(self) -> int:
        return int(self.edges_i.size)

    @property
    def n_free(self) -> int:
        return int(self.free_idx.size)

    @property
    def clamp(self) -> dict[int, int]:
        return {int(i): int(v) for i, v in zip(self.clamp_idx, self.clamp_val)}

    def couplings(self) -> list[tuple[int, int, float]]:
        return list(zip(self.edges_i.tolist(), self.edges_j.tolist(), self.edges_J.tolist()))

    def with_clamp(self, clamp: Mapping[int, int]) -> "CouplingGraph":
        """Copy of the graph with ``clamp`` merged into the existing clamps."""
        merged = self.clamp
        merged.update({int(k): int(v) for k, v in clamp.items()})
        return CouplingGraph(self.n_spins, self.couplings(), self.fields, merged)

    def without_clamp(self) -> "CouplingGraph":
        return CouplingGraph(self.n_spins, self.couplings(), self.fields, None)

    def neighbors(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.nbr[lo:hi], self.nbr_J[lo:hi]

    def digest(self) -> str:
        """SHA-256 of the canonical instance-file text."""
        if self._digest is None:
            text = "\n".join(_instance_lines(self))
            object.__setattr__(self, "_digest", hashlib.sha256(text.encode()).hexdigest())
        return self._digest

    def __repr__(self) -> str:
        return (f"CouplingGraph(n_spins={self.n_spins}, n_edges={self.n_edges}, "
                f"n_clamped={self.clamp_idx.size})")

    def __eq__(self, other) -> bool:
        if not isinstance(other, CouplingGraph):
            return NotImplemented
        return self.digest() == other.digest()

    def __hash__(self) -> int:
        return hash(self.digest())


@dataclass(frozen=True)
class LatticeSpec:
    """Regular lattice with uniform coupling.

    ``kind="grid2d"`` uses ``shape=(L_y, L_x)`` and row-major indices
    ``y * L_x + x``; ``kind="grid3d"`` uses ``shape=(L,)`` and x-fastest
    indices ``x + L * (y + L * z)``.
    """

    kind: str
    shape: tuple
    boundary: str = "open"
    J: float = 1.0

    def __post_init__(self):
        if self.kind not in ("grid2d", "grid3d"):
            raise DomainError(f"unknown lattice kind {self.kind!r}")
        if self.boundary not in ("open", "periodic"):
            raise DomainError(f"unknown boundary {self.boundary!r}")
        expected = 2 if self.kind == "grid2d" else 1
        if len(self.shape) != expected or min(self.shape) < 1:
            raise DomainError(f"bad shape {self.shape} for {self.kind}")
        if self.boundary == "periodic" and min(self.shape) < 3:
            raise DomainError("periodic lattices need every side >= 3")

    @property
    def n_sites(self) -> int:
        if self.kind == "grid2d":
            return self.shape[0] * self.shape[1]
        return self.shape[0] ** 3

    def index(self, *coords) -> int:
        if self.kind == "grid2d":
            y, x = coords
            return y * self.shape[1] + x
        x, y, z = coords
        L = self.shape[0]
        return x + L * (y + L * z)

    def site(self, index: int) -> tuple:
        if self.kind == "grid2d":
            return divmod(index, self.shape[1])
        L = self.shape[0]
        z, rem = divmod(index, L * L)
        y, x = divmod(rem, L)
        return (x, y, z)

    def bonds(self) -> list[tuple[int, int]]:
        """Nearest-neighbour pairs, each listed once."""
        periodic = self.boundary == "periodic"
        out = []
        if self.kind == "grid2d":
            Ly, Lx = self.shape
            for y in range(Ly):
                for x in range(Lx):
                    if x + 1 < Lx or periodic:
                        out.append((self.index(y, x), self.index(y, (x + 1) % Lx)))
                    if y + 1 < Ly or periodic:
                        out.append((self.index(y, x), self.index((y + 1) % Ly, x)))
        else:
            (L,) = self.shape
            for z in range(L):
                for y in range(L):
                    for x in range(L):
                        i = self.index(x, y, z)
                        if x + 1 < L or periodic:
                            out.append((i, self.index((x + 1) % L, y, z)))
                        if y + 1 < L or periodic:
                            out.append((i, self.index(x, (y + 1) % L, z)))
                        if z + 1 < L or periodic:
                            out.append((i, self.index(x, y, (z + 1) % L)))
        return out

    def build(self, clamp: Mapping[int, int] | None = None) -> CouplingGraph:
        return CouplingGraph(self.n_sites, [(i, j, self.J) for i, j in self.bonds()],
                             None, clamp)


def grid2d(Ly: int, Lx: int, J: float = 1.0, boundary: str = "open",
           clamp: Mapping[int, int] | None = None) -> CouplingGraph:
    """Uniform-coupling square lattice (row-major site order)."""
    return LatticeSpec("grid2d", (Ly, Lx), boundary, J).build(clamp)


def top_rows_clamp(Lx: int, pattern) -> dict[int, int]:
    """Clamp map for the first rows of a row-major grid.

    ``pattern`` is a sequence of length ``Lx`` (one row) or a 2-D array of
    shape ``(k, Lx)``.
    """
    pat = np.atleast_2d(np.asarray(pattern, dtype=np.int64))
    if pat.shape[1] != Lx:
        raise DimensionError(f"clamp pattern width {pat.shape[1]} != Lx={Lx}")
    return {int(r * Lx + c): int(pat[r, c]) for r in range(pat.shape[0]) for c in range(Lx)}


# -- energy arithmetic ------------------------------------------------------

def energy(graph: CouplingGraph, s) -> float:
    """Exact energy of one configuration."""
    s = check_spins(s, graph.n_spins)
    sf = s.astype(np.float64)
    pair = graph.edges_J * sf[graph.edges_i] * sf[graph.edges_j]
    return float(-pair.sum() - np.dot(graph.fields, sf))


def energies(graph: CouplingGraph, S) -> np.ndarray:
    """Energies of a batch of configurations (rows)."""
    S = check_spin_batch(S, graph.n_spins).astype(np.float64)
    pair = (S[:, graph.edges_i] * S[:, graph.edges_j]) @ graph.edges_J
    return -pair - S @ graph.fields


def _check_free(graph: CouplingGraph, i: int) -> int:
    i = int(i)
    if not 0 <= i < graph.n_spins:
        raise DimensionError(f"spin index {i} out of range")
    if not graph.free_mask[i]:
        raise ClampedSiteError(f"spin {i} is clamped")
    return i


def local_field(graph: CouplingGraph, s, i: int) -> float:
    """``l_i = sum_j J_ij s_j + h_i`` for a free spin ``i``."""
    s = check_spins(s, graph.n_spins)
    i = _check_free(graph, i)
    nbr, J = graph.neighbors(i)
    return float(np.dot(J, s[nbr].astype(np.float64)) + graph.fields[i])


def flip_delta(graph: CouplingGraph, s, i: int) -> float:
    """Energy change ``E(s with i flipped) - E(s) = 2 s_i l_i``."""
    s = check_spins(s, graph.n_spins)
    return 2.0 * float(s[i]) * local_field(graph, s, i)


def apply_clamps(graph: CouplingGraph, s) -> np.ndarray:
    """Copy of ``s`` with clamped entries overwritten by their clamp values."""
    out = np.array(check_spins(s, graph.n_spins), copy=True)
    out[graph.clamp_idx] = graph.clamp_val
    return out


def magnetization(s) -> float:
    """Mean spin over all sites (clamped included)."""
    s = np.asarray(s)
    if s.size == 0:
        raise DimensionError("empty configuration")
    return float(s.mean(dtype=np.float64))


def random_configuration(graph: CouplingGraph, rng) -> np.ndarray:
    s = (2 * rng.integers(0, 2, size=graph.n_spins) - 1).astype(np.int8)
    s[graph.clamp_idx] = graph.clamp_val
    return s


# -- instance file format ----------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def _instance_lines(graph: CouplingGraph) -> list[str]:
    lines = [INSTANCE_HEADER, f"n {graph.n_spins}"]
    for i, j, J in graph.couplings():
        lines.append(f"c {i} {j} {_fmt(J)}")
    for i in np.flatnonzero(graph.fields).tolist():
        lines.append(f"f {i} {_fmt(graph.fields[i])}")
    for i, v in graph.clamp.items():
        lines.append(f"x {i} {'+1' if v > 0 else '-1'}")
    return lines


def write_instance(graph: CouplingGraph, path, comments: Iterable[str] = ()) -> None:
    """Write ``graph`` in the ``isingmodel v1`` text format."""
    lines = _instance_lines(graph)
    body = [lines[0]] + [f"# {c}" for c in comments] + lines[1:]
    Path(path).write_text("\n".join(body) + "\n", encoding="utf-8")


def parse_instance(text: str) -> CouplingGraph:
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [r for r in rows if r and not r.startswith("#")]
    if not rows or rows[0] != INSTANCE_HEADER:
        raise FormatError(f"missing '{INSTANCE_HEADER}' header")
    n = None
    couplings, fields, clamp = [], {}, {}
    for lineno, row in enumerate(rows[1:], start=2):
        tok = row.split()
        try:
            if tok[0] == "n" and len(tok) == 2:
                n = int(tok[1])
            elif tok[0] == "c" and len(tok) == 4:
                couplings.append((int(tok[1]), int(tok[2]), float(tok[3])))
            elif tok[0] == "f" and len(tok) == 3:
                fields[int(tok[1])] = float(tok[2])
            elif tok[0] == "x" and len(tok) == 3:
                clamp[int(tok[1])] = int(tok[2])
            else:
                raise FormatError(f"unrecognised line {lineno}: {row!r}")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"bad number on line {lineno}: {row!r}") from exc
    if n is None:
        raise FormatError("missing 'n <N>' line")
    h = np.zeros(n)
    for i, v in fields.items():
        if not 0 <= i < n:
            raise FormatError(f"field index {i} out of range")
        h[i] = v
    try:
        return CouplingGraph(n, couplings, h, clamp)
    except DomainError as exc:
        raise FormatError(str(exc)) from exc


def read_instance(path) -> CouplingGraph:
    return parse_instance(Path(path).read_text(encoding="utf-8"))
