import itertools
import json

import numpy as np
import pytest

from tapt.exact import state_energies
from tapt.exceptions import DomainError
from tapt.problems import (
    and_gate, build_multiplier, clamp_product, decode_and_check, enumerate_semiprimes,
    estimate_ground_energy, forward_multiply, full_adder, gen_ea3d, is_prime,
)
from tapt.spin_model import CouplingGraph, energy, grid2d, read_instance

SEMIPRIMES_4 = [4, 6, 9, 10, 14, 15, 21, 22, 25, 26, 33, 35, 39, 49, 55, 65, 77, 91, 121, 143,
                169]


def test_ea_small():
    inst = gen_ea3d(2, seed=1)
    assert inst.n_spins == 8 and inst.graph.n_edges == 12
    with pytest.raises(DomainError):
        gen_ea3d(1)


def test_ea_bimodal_frequency():
    inst = gen_ea3d(12, seed=3)
    J = inst.graph.edges_J
    assert J.size == 3 * 144 * 11
    assert set(np.unique(J)) == {-1.0, 1.0}
    assert abs((J > 0).mean() - 0.5) < 0.02


def test_ea_seeded():
    assert gen_ea3d(4, seed=5).graph.digest() == gen_ea3d(4, seed=5).graph.digest()
    assert gen_ea3d(4, seed=5).graph.digest() != gen_ea3d(4, seed=6).graph.digest()
    g = gen_ea3d(3, "gaussian", 2).graph
    assert len(set(g.edges_J.tolist())) == g.n_edges


def test_and_gate():
    gate = and_gate()
    assert gate.verify() == 4.0
    spec = gate.spectrum()
    assert spec[(1, 1, 1)] == -3 and spec[(1, 1, 0)] == 1
    assert {spec[r] for r in gate.truth_table} == {-3.0}


def test_full_adder():
    fa = full_adder()
    assert fa.verify() == 4.0
    spec = fa.spectrum()
    assert len(fa.truth_table) == 8
    assert all(spec[r] == fa.ground_energy for r in fa.truth_table)
    assert spec[(1, 1, 1, 1, 0)] > fa.ground_energy
    invalid = [e for r, e in spec.items() if r not in set(fa.truth_table)]
    assert min(invalid) - fa.ground_energy == 4.0


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_multiplier_spin_count(n):
    assert build_multiplier(n).n_spins == 3 * n * n + n


def test_multiplier_exact_counts():
    assert build_multiplier(4).n_spins == 52
    assert build_multiplier(8).n_spins == 200
    with pytest.raises(DomainError):
        build_multiplier(1)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_forward_assignment_is_ground(n):
    c = build_multiplier(n)
    for a, b in itertools.product(range(1 << n), repeat=2):
        s = c.forward_assignment(a, b)
        assert energy(c.graph, s) == c.ground_energy
        chk = decode_and_check(c, s, a * b)
        assert chk.success and chk.product == a * b


def test_multiplier_ground_manifold_n2():
    """For n=2 the unclamped ground states are exactly the 16 consistent assignments."""
    c = build_multiplier(2)
    g = c.graph.with_clamp({int(i): -1 for i in c.carry_bits})
    E = state_energies(g)
    assert E.min() == c.ground_energy
    assert int((E == E.min()).sum()) == 16


def test_semiprimes():
    inst = enumerate_semiprimes(4)
    assert [s.C for s in inst] == SEMIPRIMES_4
    assert len(enumerate_semiprimes(2)) == 3
    assert [s.C for s in enumerate_semiprimes(2)] == [4, 6, 9]
    for s in inst:
        assert s.p <= s.q and s.p * s.q == s.C and is_prime(s.p) and is_prime(s.q)


def test_clamp_product_bits():
    c = build_multiplier(4)
    g = clamp_product(c, 0)
    assert all(g.clamp[int(i)] == -1 for i in c.c_bits)
    g = clamp_product(c, 15)
    assert [g.clamp[int(i)] for i in c.c_bits] == [1, 1, 1, 1, -1, -1, -1, -1]
    assert all(g.clamp[int(i)] == -1 for i in c.carry_bits)
    with pytest.raises(DomainError):
        clamp_product(c, 256)


def test_clamp_44969():
    c = build_multiplier(8)
    g = clamp_product(c, 44969)
    bits = [(44969 >> k) & 1 for k in range(16)]
    assert [g.clamp[int(i)] for i in c.c_bits] == [1 if b else -1 for b in bits]
    s = c.forward_assignment(193, 233)
    assert decode_and_check(c, s, 44969).success
    assert decode_and_check(c, s, 44969).nontrivial
    divisors = [d for d in range(2, 256) if 44969 % d == 0 and 44969 // d < 256]
    assert sorted(divisors) == [193, 233]


def test_decode_planted_and_trivial():
    c = build_multiplier(4)
    assert decode_and_check(c, c.forward_assignment(3, 5), 15).success
    trivial = decode_and_check(c, c.forward_assignment(1, 15), 15)
    assert trivial.success and not trivial.nontrivial
    assert not decode_and_check(c, c.forward_assignment(3, 4), 15).success


def test_forward_multiply():
    c = build_multiplier(4)
    hits = sum(forward_multiply(c, 6, 5, rng=np.random.default_rng(s)) == 30 for s in range(40))
    assert hits >= 38


def test_sidecar(tmp_path):
    c = build_multiplier(3)
    c.write(tmp_path / "m.txt", clamp_C=15)
    side = json.loads((tmp_path / "m.txt.json").read_text()) if (tmp_path / "m.txt.json").exists() \
        else json.loads(next(tmp_path.glob("*.json")).read_text())
    names = json.dumps(side)
    for w in ("A_0", "B_0", "C_0", "carry_0", "and_0_0", "fa_1_0_S", "fa_1_0_Cout"):
        assert w in names
    g = read_instance(tmp_path / "m.txt")
    assert g.n_spins == c.n_spins and len(g.clamp) == 2 * 3 + 3


def test_ground_energy_ferromagnet():
    g = grid2d(4, 4)
    assert estimate_ground_energy(g, 5, 500, np.random.default_rng(0)) == -24.0


def test_ground_energy_small_glass():
    inst = gen_ea3d(3, seed=4)
    sub = CouplingGraph(12, [(i, j, J) for i, j, J in inst.graph.couplings() if j < 12])
    exact = state_energies(sub).min()
    assert estimate_ground_energy(sub, 20, 2000, np.random.default_rng(1)) == exact


def test_ground_energy_monotone():
    g = gen_ea3d(3, seed=2).graph
    a = estimate_ground_energy(g, 2, 300, np.random.default_rng(9))
    b = estimate_ground_energy(g, 8, 300, np.random.default_rng(9))
    assert b <= a
