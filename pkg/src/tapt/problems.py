"""Benchmark instances: 3D Edwards-Anderson glasses and factorization circuits.

Logical 1 is spin +1 and logical 0 is spin -1 throughout.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_count, check_random_state
from .exceptions import DomainError
from .mcmc import anneal, gibbs_sweeps
from .spin_model import CouplingGraph, LatticeSpec, energy, random_configuration, write_instance


# -- spin glasses ----------------------------------------------------------------

@dataclass(frozen=True)
class SpinGlassInstance:
    graph: CouplingGraph
    L: int
    disorder: str
    seed: int

    @property
    def n_spins(self) -> int:
        return self.graph.n_spins


def gen_ea3d(L: int, disorder: str = "bimodal", seed: int = 0) -> SpinGlassInstance:
    """Open-boundary ``L^3`` Edwards-Anderson glass with i.i.d. couplings.

    ``disorder="bimodal"`` draws J = +-1 with equal probability,
    ``"gaussian"`` draws J ~ N(0, 1). Site order is x-fastest.
    """
    if L < 2:
        raise DomainError(f"L must be >= 2, got {L}")
    if disorder not in ("bimodal", "gaussian"):
        raise DomainError(f"unknown disorder {disorder!r}")
    lattice = LatticeSpec("grid3d", (L,))
    bonds = lattice.bonds()
    rng = np.random.default_rng(seed)
    if disorder == "bimodal":
        J = np.where(rng.random(len(bonds)) < 0.5, -1.0, 1.0)
    else:
        J = rng.standard_normal(len(bonds))
    graph = CouplingGraph(lattice.n_sites, [(i, j, w) for (i, j), w in zip(bonds, J)])
    return SpinGlassInstance(graph, L, disorder, seed)


# -- invertible gates -----------------------------------------------------------------

@dataclass(frozen=True)
class GateHamiltonian:
    """Ising Hamiltonian whose ground states are a gate's truth table.

    ``couplings`` uses local wire positions; ``truth_table`` lists the valid
    rows as tuples of logical bits in ``wires`` order.
    """

    name: str
    wires: tuple
    couplings: tuple
    fields: tuple
    truth_table: tuple

    def graph(self) -> CouplingGraph:
        return CouplingGraph(len(self.wires), self.couplings, self.fields)

    def spectrum(self):
        """``{logical row: energy}`` over all ``2**n`` wire assignments."""
        g = self.graph()
        out = {}
        for bits in itertools.product((0, 1), repeat=len(self.wires)):
            out[bits] = energy(g, [1 if b else -1 for b in bits])
        return out

    def verify(self) -> float:
        """Check ground manifold == truth table with a positive gap; returns the gap."""
        spec = self.spectrum()
        valid = set(self.truth_table)
        ground = {spec[r] for r in valid}
        if len(ground) != 1:
            raise AssertionError(f"{self.name}: truth-table rows are not degenerate")
        e0 = ground.pop()
        excited = [e for r, e in spec.items() if r not in valid]
        gap = min(excited) - e0
        if gap <= 0:
            raise AssertionError(f"{self.name}: invalid state at or below the ground energy")
        return gap

    @property
    def ground_energy(self) -> float:
        return self.spectrum()[self.truth_table[0]]


def and_gate() -> GateHamiltonian:
    """Invertible AND on wires (A, B, C) with C = A and B."""
    table = tuple((a, b, a & b) for a, b in itertools.product((0, 1), repeat=2))
    return GateHamiltonian("AND", ("A", "B", "C"),
                           ((0, 1, -1.0), (0, 2, 2.0), (1, 2, 2.0)),
                           (1.0, 1.0, -2.0), table)


def full_adder() -> GateHamiltonian:
    """Invertible full adder on wires (A, B, Cin, S, Cout).

    The energy is the penalty ``(a + b + cin - s - 2 cout)**2 - 8`` in spin
    variables: zero field, valid rows at -8, every invalid row at -4 or above.
    """
    table = tuple((a, b, c, (a + b + c) & 1, (a + b + c) >> 1)
                  for a, b, c in itertools.product((0, 1), repeat=3))
    J = ((0, 1, -2.0), (0, 2, -2.0), (1, 2, -2.0),
         (0, 3, 2.0), (1, 3, 2.0), (2, 3, 2.0),
         (0, 4, 4.0), (1, 4, 4.0), (2, 4, 4.0),
         (3, 4, -4.0))
    return GateHamiltonian("FA", ("A", "B", "Cin", "S", "Cout"), J,
                           (0.0, 0.0, 0.0, 0.0, 0.0), table)


# -- multiplier circuit --------------------------------------------------------------

@dataclass
class MultiplierCircuit:
    """Array multiplier ``A * B = C`` built from invertible AND and FA gates.

    Spin index ranges: ``a_bits`` (n), ``b_bits`` (n), ``c_bits`` (2n, each an
    alias of an existing wire), ``carry_bits`` (n constant-zero inputs).
    ``wires`` maps every wire name to its spin index.
    """

    n: int
    graph: CouplingGraph
    a_bits: np.ndarray
    b_bits: np.ndarray
    c_bits: np.ndarray
    carry_bits: np.ndarray
    wires: dict
    gates: list = field(default_factory=list)

    @property
    def n_spins(self) -> int:
        return self.graph.n_spins

    @property
    def ground_energy(self) -> float:
        """Energy of any logically consistent assignment."""
        e = {"AND": and_gate().ground_energy, "FA": full_adder().ground_energy}
        return float(sum(e[kind] for kind, _ in self.gates))

    def prefix_indices(self) -> np.ndarray:
        """Clamped spins in token order: product bits C_0.., then carry-ins."""
        return np.concatenate([self.c_bits, self.carry_bits])

    def free_order(self) -> np.ndarray:
        clamped = set(self.prefix_indices().tolist())
        return np.array([i for i in range(self.n_spins) if i not in clamped], dtype=np.int64)

    def forward_assignment(self, a: int, b: int) -> np.ndarray:
        """Logically consistent values of every wire for inputs ``a``, ``b``."""
        n = self.n
        if not (0 <= a < 2**n and 0 <= b < 2**n):
            raise DomainError(f"inputs must fit in {n} bits")
        val = {}
        for i in range(n):
            val[f"A_{i}"] = (a >> i) & 1
            val[f"B_{i}"] = (b >> i) & 1
            val[f"carry_{i}"] = 0
        for kind, names in self.gates:
            if kind == "AND":
                x, y, z = names
                val[z] = val[x] & val[y]
            else:
                x, y, cin, s, cout = names
                tot = val[x] + val[y] + val[cin]
                val[s] = tot & 1
                val[cout] = tot >> 1
        spins = np.empty(self.n_spins, dtype=np.int8)
        for name, idx in self.wires.items():
            if name.startswith("C_"):
                continue
            spins[idx] = 1 if val[name] else -1
        return spins

    def sidecar(self) -> dict:
        return {"format": "multiplier-wires v1", "n": self.n, "n_spins": self.n_spins,
                "wires": dict(sorted(self.wires.items(), key=lambda kv: (kv[1], kv[0])))}

    def write(self, path, clamp_C: int | None = None) -> None:
        """Write the circuit as an instance file plus a ``.wires.json`` sidecar."""
        path = Path(path)
        g = self.graph if clamp_C is None else clamp_product(self, clamp_C)
        write_instance(g, path, comments=[f"{self.n}-bit array multiplier"])
        Path(str(path) + ".wires.json").write_text(
            json.dumps(self.sidecar(), indent=2) + "\n", encoding="utf-8")


def build_multiplier(n: int) -> MultiplierCircuit:
    """n-bit array multiplier with ``3n^2 + n`` spins.

    Partial products ``and_{i}_{j} = A_i & B_j`` (weight ``i + j``) feed
    ``n - 1`` ripple rows of ``n`` full adders. Row ``j`` adds partial
    products ``and_{i}_{j}`` to the running sum; adder ``fa_{j}_{i}`` takes
    the running-sum bit of weight ``i + j``, the partial product and the
    carry of ``fa_{j}_{i-1}`` (``carry_{j}`` for ``i = 0``). The top running
    sum bit before row 1 is the constant ``carry_0``. Wires are shared by
    identifying spins, so every logical wire is exactly one spin.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    wires: dict[str, int] = {}

    def new(name):
        wires[name] = len(wires)
        return name

    for i in range(n):
        new(f"A_{i}")
    for i in range(n):
        new(f"B_{i}")
    for i in range(n):
        new(f"carry_{i}")
    gates = []
    for j in range(n):
        for i in range(n):
            gates.append(("AND", (f"A_{i}", f"B_{j}", new(f"and_{i}_{j}"))))
    # running sum: weight -> wire name
    acc = {i: f"and_{i}_0" for i in range(n)}
    acc[n] = "carry_0"
    product = {0: "and_0_0"}
    for j in range(1, n):
        carry = f"carry_{j}"
        for i in range(n):
            s = new(f"fa_{j}_{i}_S")
            cout = new(f"fa_{j}_{i}_Cout")
            gates.append(("FA", (acc[i + j], f"and_{i}_{j}", carry, s, cout)))
            acc[i + j] = s
            carry = cout
        acc[j + n] = carry
        product[j] = acc[j]
    for w in range(n, 2 * n):
        product[w] = acc[w]
    assert len(wires) == 3 * n * n + n
    # Sum the gate Hamiltonians onto shared spins.
    J: dict[tuple, float] = {}
    h = np.zeros(len(wires))
    templates = {"AND": and_gate(), "FA": full_adder()}
    for kind, names in gates:
        t = templates[kind]
        idx = [wires[nm] for nm in names]
        for a, b, w in t.couplings:
            key = tuple(sorted((idx[a], idx[b])))
            J[key] = J.get(key, 0.0) + w
        for a, w in enumerate(t.fields):
            h[idx[a]] += w
    couplings = [(i, j, w) for (i, j), w in sorted(J.items()) if w != 0.0]
    graph = CouplingGraph(len(wires), couplings, h)
    c_bits = np.array([wires[product[w]] for w in range(2 * n)], dtype=np.int64)
    for w in range(2 * n):
        wires[f"C_{w}"] = wires[product[w]]
    return MultiplierCircuit(
        n=n, graph=graph,
        a_bits=np.array([wires[f"A_{i}"] for i in range(n)], dtype=np.int64),
        b_bits=np.array([wires[f"B_{i}"] for i in range(n)], dtype=np.int64),
        c_bits=c_bits,
        carry_bits=np.array([wires[f"carry_{i}"] for i in range(n)], dtype=np.int64),
        wires=wires, gates=gates)


# -- semiprimes ---------------------------------------------------------------------

def is_prime(k: int) -> bool:
    if k < 2:
        return False
    if k % 2 == 0:
        return k == 2
    d = 3
    while d * d <= k:
        if k % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class SemiprimeInstance:
    C: int
    p: int
    q: int
    n: int


def enumerate_semiprimes(n: int) -> list[SemiprimeInstance]:
    """All ``C = p * q`` with primes ``p <= q < 2**n``, ascending in C."""
    n = check_count(n, "n", minimum=1)
    primes = [k for k in range(2, 2**n) if is_prime(k)]
    out = [SemiprimeInstance(p * q, p, q, n)
           for a, p in enumerate(primes) for q in primes[a:]]
    return sorted(out, key=lambda s: s.C)


def product_clamp(circuit: MultiplierCircuit, C: int) -> dict[int, int]:
    n = circuit.n
    if not 0 <= C < 2 ** (2 * n):
        raise DomainError(f"C={C} does not fit in {2 * n} bits")
    clamp = {int(idx): (1 if (C >> w) & 1 else -1) for w, idx in enumerate(circuit.c_bits)}
    clamp.update({int(idx): -1 for idx in circuit.carry_bits})
    return clamp


def clamp_product(circuit: MultiplierCircuit, C: int) -> CouplingGraph:
    """Circuit graph with product bits clamped to ``C`` (LSB at C_0) and carry-ins to 0."""
    return circuit.graph.with_clamp(product_clamp(circuit, C))


@dataclass(frozen=True)
class FactorCheck:
    success: bool
    a: int
    b: int
    product: int

    @property
    def nontrivial(self) -> bool:
        return self.success and self.a > 1 and self.b > 1


def _bits_to_int(spins, idx) -> int:
    return int(sum(1 << k for k, i in enumerate(idx) if spins[i] > 0))


def decode_and_check(circuit: MultiplierCircuit, s, C: int) -> FactorCheck:
    """Read A and B off the spins; success iff ``A * B == C``."""
    s = np.asarray(s)
    a = _bits_to_int(s, circuit.a_bits)
    b = _bits_to_int(s, circuit.b_bits)
    return FactorCheck(a * b == C, a, b, a * b)


def input_clamp(circuit: MultiplierCircuit, a: int, b: int) -> dict[int, int]:
    """Clamp the A and B registers (and carry-ins) for forward evaluation."""
    n = circuit.n
    if not (0 <= a < 2**n and 0 <= b < 2**n):
        raise DomainError(f"operands must fit in {n} bits")
    clamp = {int(i): (1 if (a >> k) & 1 else -1) for k, i in enumerate(circuit.a_bits)}
    clamp.update({int(i): (1 if (b >> k) & 1 else -1) for k, i in enumerate(circuit.b_bits)})
    clamp.update({int(i): -1 for i in circuit.carry_bits})
    return clamp


def forward_multiply(circuit: MultiplierCircuit, a: int, b: int, beta: float = 3.0,
                     n_sweeps: int = 1000, rng=None) -> int:
    """Run the circuit forwards with Gibbs sampling and read the product register.

    Free wires start from the logical-0 reset state (all -1). A uniformly random
    start freezes into gate-level defects at beta=3 and rarely relaxes.
    """
    graph = circuit.graph.with_clamp(input_clamp(circuit, a, b))
    s = np.full(circuit.n_spins, -1, dtype=np.int8)
    s[graph.clamp_idx] = graph.clamp_val
    gibbs_sweeps(graph, s, beta, n_sweeps, check_random_state(rng))
    return _bits_to_int(s, circuit.c_bits)


# -- ground-state estimation -----------------------------------------------------------

def estimate_ground_energy(graph: CouplingGraph, restarts: int = 100, sweeps: int = 10_000,
                           rng=None, beta_min: float = 0.1, beta_max: float = 5.0,
                           return_state: bool = False):
    """Best energy over ``restarts`` geometric simulated-annealing runs."""
    restarts = check_count(restarts, "restarts", minimum=1)
    sweeps = check_count(sweeps, "sweeps", minimum=1)
    rng = check_random_state(rng)
    schedule = np.geomspace(beta_min, beta_max, sweeps)
    best_e, best_s = math.inf, None
    for _ in range(restarts):
        s = random_configuration(graph, rng)
        anneal(graph, s, schedule, rng)
        e = energy(graph, s)
        if e < best_e:
            best_e, best_s = e, s.copy()
    if return_state:
        return best_e, best_s
    return best_e
