"""Single-site heat-bath (Gibbs) dynamics and equilibrium datasets.

A *sweep* updates every free spin once, in ascending index order. Uniform
variates are drawn from a numpy Generator in the caller and handed to the
compiled kernels, so a chain is a deterministic function of its stream.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from ._validation import (check_beta, check_count, check_random_state, check_spins,
                          spawn_generators)
from .exceptions import DimensionError, FormatError
from .spin_model import CouplingGraph, _check_free, local_field, random_configuration

DATASET_MAGIC = b"ISFD1"
_CHUNK = 1 << 16  # max uniforms drawn at once per chain


@numba.njit(cache=True, nogil=True)
def _sweep_kernel(s, indptr, nbr, nbr_J, h, free_idx, beta, u):
    """Run ``u.shape[0]`` sweeps in place; ``u`` holds one uniform per update."""
    n_free = free_idx.shape[0]
    for t in range(u.shape[0]):
        for k in range(n_free):
            i = free_idx[k]
            ell = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                ell += nbr_J[p] * s[nbr[p]]
            if u[t, k] * (1.0 + math.exp(-2.0 * beta * ell)) < 1.0:
                s[i] = 1
            else:
                s[i] = -1


@numba.njit(cache=True, nogil=True)
def _record_kernel(s, indptr, nbr, nbr_J, h, free_idx, beta, u, thinning, out, start):
    """Sweeps with recording of every ``thinning``-th state into ``out``.

    ``start`` is the number of sweeps already done in this recording phase;
    returns the number of rows written.
    """
    n_free = free_idx.shape[0]
    written = 0
    for t in range(u.shape[0]):
        for k in range(n_free):
            i = free_idx[k]
            ell = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                ell += nbr_J[p] * s[nbr[p]]
            if u[t, k] * (1.0 + math.exp(-2.0 * beta * ell)) < 1.0:
                s[i] = 1
            else:
                s[i] = -1
        if (start + t + 1) % thinning == 0:
            out[written, :] = s
            written += 1
    return written


@numba.njit(cache=True, nogil=True)
def _anneal_kernel(s, indptr, nbr, nbr_J, h, free_idx, betas, u):
    """One sweep per entry of ``betas`` (an annealing schedule)."""
    n_free = free_idx.shape[0]
    for t in range(betas.shape[0]):
        beta = betas[t]
        for k in range(n_free):
            i = free_idx[k]
            ell = h[i]
            for p in range(indptr[i], indptr[i + 1]):
                ell += nbr_J[p] * s[nbr[p]]
            if u[t, k] * (1.0 + math.exp(-2.0 * beta * ell)) < 1.0:
                s[i] = 1
            else:
                s[i] = -1


def heat_bath_probability(beta: float, ell: float) -> float:
    """``P(s_i = +1 | rest) = 1 / (1 + exp(-2 beta l_i))``."""
    x = -2.0 * beta * ell
    if x > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(x))


def gibbs_update(graph: CouplingGraph, s: np.ndarray, i: int, beta: float, rng) -> np.ndarray:
    """Resample spin ``i`` of ``s`` in place from its heat-bath conditional."""
    beta = check_beta(beta)
    s = check_spins(s, graph.n_spins)
    _check_free(graph, i)
    rng = check_random_state(rng)
    x = -2.0 * beta * local_field(graph, s, i)
    # Same comparison as the compiled kernels so both paths agree bit for bit.
    u = rng.random()
    s[i] = 1 if u * (1.0 + math.exp(min(x, 709.0))) < 1.0 else -1
    return s


def gibbs_sweeps(graph: CouplingGraph, s: np.ndarray, beta: float, n_sweeps: int,
                 rng) -> np.ndarray:
    """``n_sweeps`` index-ascending sweeps of ``s`` in place."""
    beta = check_beta(beta)
    s = check_spins(s, graph.n_spins)
    n_sweeps = check_count(n_sweeps, "n_sweeps")
    rng = check_random_state(rng)
    n_free = graph.n_free
    if n_free == 0 or n_sweeps == 0:
        return s
    per_chunk = max(1, _CHUNK // n_free)
    done = 0
    while done < n_sweeps:
        m = min(per_chunk, n_sweeps - done)
        u = rng.random((m, n_free))
        _sweep_kernel(s, graph.indptr, graph.nbr, graph.nbr_J, graph.fields,
                      graph.free_idx, beta, u)
        done += m
    return s


def gibbs_sweep(graph: CouplingGraph, s: np.ndarray, beta: float, rng) -> np.ndarray:
    """One sweep: every free spin updated once, index-ascending."""
    return gibbs_sweeps(graph, s, beta, 1, rng)


def anneal(graph: CouplingGraph, s: np.ndarray, betas: np.ndarray, rng) -> np.ndarray:
    """One sweep at each inverse temperature of ``betas``, in order."""
    s = check_spins(s, graph.n_spins)
    rng = check_random_state(rng)
    betas = np.ascontiguousarray(betas, dtype=np.float64)
    n_free = graph.n_free
    if n_free == 0:
        return s
    per_chunk = max(1, _CHUNK // n_free)
    for lo in range(0, betas.size, per_chunk):
        b = betas[lo:lo + per_chunk]
        u = rng.random((b.size, n_free))
        _anneal_kernel(s, graph.indptr, graph.nbr, graph.nbr_J, graph.fields,
                       graph.free_idx, b, u)
    return s


@dataclass(frozen=True)
class ChainConfig:
    """Settings of a recorded Gibbs chain.

    ``n_samples`` records are spread over ``n_chains`` independent chains
    (stream ``k`` of the root ``seed``). ``init`` is ``"random"`` or
    ``"ordered"`` (all free spins set to one random common sign).
    """

    beta: float
    n_samples: int = 0
    mixing_sweeps: int = 0
    thinning: int = 1
    seed: int = 0
    n_chains: int = 1
    init: str = "random"

    def __post_init__(self):
        check_beta(self.beta)
        check_count(self.n_samples, "n_samples")
        check_count(self.mixing_sweeps, "mixing_sweeps")
        check_count(self.thinning, "thinning", minimum=1)
        check_count(self.n_chains, "n_chains", minimum=1)
        if self.init not in ("random", "ordered"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class SampleDataset:
    """Recorded configurations tagged with the inverse temperature they came from."""

    betas: np.ndarray
    spins: np.ndarray
    graph_digest: str = ""
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.betas = np.asarray(self.betas, dtype=np.float64).reshape(-1)
        self.spins = np.asarray(self.spins, dtype=np.int8)
        if self.spins.ndim != 2:
            self.spins = self.spins.reshape(len(self.betas), -1)
        if self.spins.shape[0] != self.betas.shape[0]:
            raise DimensionError("betas and spins disagree on the number of records")

    def __len__(self) -> int:
        return int(self.betas.shape[0])

    @property
    def n_spins(self) -> int:
        return int(self.spins.shape[1])

    def records(self):
        return list(zip(self.betas.tolist(), self.spins))

    def select(self, mask) -> "SampleDataset":
        return SampleDataset(self.betas[mask], self.spins[mask], self.graph_digest,
                             dict(self.provenance))

    @classmethod
    def concatenate(cls, parts: Sequence["SampleDataset"], n_spins: int = 0) -> "SampleDataset":
        parts = list(parts)
        if not parts:
            return cls(np.zeros(0), np.zeros((0, n_spins), dtype=np.int8))
        digests = {p.graph_digest for p in parts}
        digest = digests.pop() if len(digests) == 1 else "mixed"
        return cls(np.concatenate([p.betas for p in parts]),
                   np.concatenate([p.spins for p in parts]), digest,
                   {"parts": [p.provenance for p in parts]})


def _initial_state(graph, init, rng):
    s = random_configuration(graph, rng)
    if init == "ordered":
        sign = 1 if rng.random() < 0.5 else -1
        s[graph.free_idx] = sign
    return s


def _run_one_chain(graph: CouplingGraph, config: ChainConfig, n_record: int, rng) -> np.ndarray:
    out = np.empty((n_record, graph.n_spins), dtype=np.int8)
    s = _initial_state(graph, config.init, rng)
    gibbs_sweeps(graph, s, config.beta, config.mixing_sweeps, rng)
    if n_record == 0:
        return out
    n_free = graph.n_free
    if n_free == 0:
        out[:] = s
        return out
    total = n_record * config.thinning
    per_chunk = max(config.thinning, (_CHUNK // n_free) // config.thinning * config.thinning)
    done = written = 0
    while done < total:
        m = min(per_chunk, total - done)
        u = rng.random((m, n_free))
        written += _record_kernel(s, graph.indptr, graph.nbr, graph.nbr_J, graph.fields,
                                  graph.free_idx, config.beta, u, config.thinning,
                                  out[written:], done)
        done += m
    return out


def run_chain(graph: CouplingGraph, config: ChainConfig) -> SampleDataset:
    """Burn in ``mixing_sweeps`` sweeps, then record every ``thinning``-th sweep.

    Records are split as evenly as possible over ``config.n_chains``
    independent chains; chain ``k`` uses stream ``k`` of ``config.seed``.
    """
    n = config.n_samples
    counts = [n // config.n_chains + (1 if k < n % config.n_chains else 0)
              for k in range(config.n_chains)]
    streams = spawn_generators(config.seed, config.n_chains)
    blocks = [_run_one_chain(graph, config, c, rng) for c, rng in zip(counts, streams)]
    spins = np.concatenate(blocks) if blocks else np.zeros((0, graph.n_spins), np.int8)
    return SampleDataset(np.full(n, config.beta), spins, graph.digest(),
                         {"chain_config": asdict(config)})


def generate_training_corpus(graph: CouplingGraph, betas: Sequence[float], per_beta: int,
                             config: ChainConfig) -> SampleDataset:
    """Union of :func:`run_chain` outputs at each beta, tagged with that beta.

    The chain at ``betas[k]`` is seeded with stream ``k`` derived from
    ``config.seed``.
    """
    betas = [check_beta(b) for b in betas]
    if not betas:
        return SampleDataset.concatenate([], graph.n_spins)
    seeds = np.random.SeedSequence(config.seed).spawn(len(betas))
    parts = []
    for b, ss in zip(betas, seeds):
        sub = ChainConfig(beta=b, n_samples=per_beta, mixing_sweeps=config.mixing_sweeps,
                          thinning=config.thinning,
                          seed=int(ss.generate_state(1, np.uint64)[0]),
                          n_chains=config.n_chains, init=config.init)
        parts.append(run_chain(graph, sub))
    return SampleDataset.concatenate(parts, graph.n_spins)


# -- dataset file format ---------------------------------------------------

def encode_dataset(ds: SampleDataset) -> bytes:
    """``ISFD1`` then per record: float64 beta, uint32 count, packed bits.

    Bits are packed index-ascending, least significant bit first within each
    byte, +1 -> 1 and -1 -> 0, padded with zeros to a whole byte.
    """
    chunks = [DATASET_MAGIC]
    n = ds.n_spins
    head = struct.pack("<I", n)
    bits = np.packbits(ds.spins > 0, axis=1, bitorder="little") if len(ds) else None
    for r in range(len(ds)):
        chunks.append(struct.pack("<d", ds.betas[r]))
        chunks.append(head)
        chunks.append(bits[r].tobytes())
    return b"".join(chunks)


def decode_dataset(blob: bytes) -> SampleDataset:
    if not blob.startswith(DATASET_MAGIC):
        raise FormatError("not an ISFD1 dataset (bad magic)")
    pos = len(DATASET_MAGIC)
    betas, rows = [], []
    n_ref = None
    while pos < len(blob):
        if pos + 12 > len(blob):
            raise FormatError("truncated record header")
        beta, n = struct.unpack_from("<dI", blob, pos)
        pos += 12
        nbytes = (n + 7) // 8
        if pos + nbytes > len(blob):
            raise FormatError("truncated record body")
        if n_ref is None:
            n_ref = n
        elif n != n_ref:
            raise FormatError("records have different spin counts")
        raw = np.frombuffer(blob, dtype=np.uint8, count=nbytes, offset=pos)
        pos += nbytes
        bits = np.unpackbits(raw, bitorder="little")[:n]
        betas.append(beta)
        rows.append(np.where(bits == 1, 1, -1).astype(np.int8))
    spins = np.stack(rows) if rows else np.zeros((0, 0), np.int8)
    return SampleDataset(np.asarray(betas), spins)


def save_dataset(ds: SampleDataset, path, metadata: dict | None = None) -> None:
    """Write the binary dataset plus a ``.json`` provenance sidecar."""
    path = Path(path)
    blob = encode_dataset(ds)
    path.write_bytes(blob)
    side = {"format": "ISFD1", "records": len(ds), "n_spins": ds.n_spins,
            "graph_digest": ds.graph_digest, "provenance": ds.provenance,
            "sha256": hashlib.sha256(blob).hexdigest()}
    if metadata:
        side.update(metadata)
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(side, indent=2, sort_keys=True, default=_json_default) + "\n",
        encoding="utf-8")


def load_dataset(path) -> SampleDataset:
    path = Path(path)
    ds = decode_dataset(path.read_bytes())
    side = path.with_suffix(path.suffix + ".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        ds.graph_digest = meta.get("graph_digest", "")
        ds.provenance = meta.get("provenance", {})
    return ds


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
