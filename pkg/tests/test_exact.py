import math

import numpy as np
import pytest

from tapt.exact import (
    brute_force_thermo, complex_logdet, critical_beta, grid_embedding, kac_ward_logZ,
    kac_ward_matrix, kac_ward_thermo, semicircle_defect_clamp, thermo_integration_F,
    transfer_matrix_logZ, variance_from_F, variance_from_logZ,
)
from tapt.exceptions import DomainError, SizeError
from tapt.spin_model import CouplingGraph, grid2d, top_rows_clamp

# logZ of open grids by an independent pure-python enumeration
LOGZ_4X4 = {0.2: 11.5815769093409, 0.44: 13.667552384220281, 1.0: 24.81764441041271}
LOGZ_4X4_CLAMPED_08 = 14.048689826719993  # top row (+,-,-,+) at beta=0.8
PATTERN = [1, -1, -1, 1]


def test_brute_force_closed_forms():
    assert brute_force_thermo(CouplingGraph(1), 0.7).logZ == pytest.approx(math.log(2), abs=1e-14)
    bond = CouplingGraph(2, [(0, 1, 1.0)])
    assert brute_force_thermo(bond, 0.9).logZ == pytest.approx(math.log(4 * math.cosh(0.9)),
                                                                abs=1e-13)
    assert brute_force_thermo(grid2d(3, 3), 1e-9).logZ == pytest.approx(9 * math.log(2), abs=1e-7)


def test_brute_force_size_limit():
    with pytest.raises(SizeError):
        brute_force_thermo(grid2d(5, 5), 0.3)


@pytest.mark.parametrize("beta", sorted(LOGZ_4X4))
def test_enumeration_oracle(beta):
    assert brute_force_thermo(grid2d(4, 4), beta).logZ == pytest.approx(LOGZ_4X4[beta], abs=1e-10)


def test_transfer_matrix_chain():
    n, b = 7, 0.6
    expected = n * math.log(2) + (n - 1) * math.log(math.cosh(b))
    assert transfer_matrix_logZ(1, n, b) == pytest.approx(expected, abs=1e-12)


def test_transfer_matrix_4x4():
    assert transfer_matrix_logZ(4, 4, 0.44) == pytest.approx(LOGZ_4X4[0.44], abs=1e-10)
    assert transfer_matrix_logZ(4, 4, 0.8, clamp=PATTERN) == pytest.approx(LOGZ_4X4_CLAMPED_08,
                                                                          abs=1e-10)


def test_transfer_matrix_width_limit():
    with pytest.raises(SizeError):
        transfer_matrix_logZ(21, 2, 0.3)


def test_kac_ward_single_bond():
    assert kac_ward_logZ(1, 2, 0.8) == pytest.approx(math.log(4 * math.cosh(0.8)), abs=1e-12)


@pytest.mark.parametrize("beta", sorted(LOGZ_4X4))
def test_kac_ward_4x4(beta):
    assert kac_ward_logZ(4, 4, beta) == pytest.approx(LOGZ_4X4[beta], abs=1e-9)


def test_kac_ward_clamped():
    assert kac_ward_logZ(4, 4, 0.8, clamp=PATTERN) == pytest.approx(LOGZ_4X4_CLAMPED_08, abs=1e-9)


def test_kac_ward_phase_vanishes():
    _, phase = kac_ward_logZ(8, 8, 0.44, return_phase=True)
    assert abs(phase) < 1e-8


def test_kac_ward_no_backtracking():
    emb, _ = grid_embedding(3, 4, 0.5, clamp=[1, -1, 1, 1])
    Q = kac_ward_matrix(emb)
    Q = Q.toarray() if hasattr(Q, "toarray") else np.asarray(Q)
    u, v, _, _ = emb.directed()
    for a in range(u.size):
        back = np.flatnonzero((u == v[a]) & (v == u[a]))
        assert back.size == 1 and Q[a, back[0]] == 0
    assert np.abs(Q).max() <= np.abs(emb.weights).max() + 1e-15


def test_complex_logdet_matches_numpy(rng):
    M = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    la, ph = complex_logdet(M)
    d = np.linalg.det(M)
    assert la == pytest.approx(math.log(abs(d)), abs=1e-9)
    assert ph == pytest.approx(np.angle(d), abs=1e-9)


def test_kac_ward_large_sparse_branch():
    # 8x16 has enough directed edges to take the sparse LU route
    assert kac_ward_logZ(8, 16, 0.5) == pytest.approx(transfer_matrix_logZ(8, 16, 0.5), abs=1e-8)


def test_thermo_relations():
    t = kac_ward_thermo(4, 4, 0.3)
    bf = brute_force_thermo(grid2d(4, 4), 0.3)
    assert t.F == pytest.approx(-t.logZ / 0.3)
    assert t.E_avg == pytest.approx(bf.E_avg, abs=1e-5)
    assert t.var_E == pytest.approx(bf.var_E, abs=1e-4)
    assert t.var_E >= 0


def test_clamped_normalisations():
    t = kac_ward_thermo(4, 4, 0.5, clamp=PATTERN)
    assert t.n_free == 12 and t.n_spins == 16
    assert t.f == pytest.approx(t.F / 12) and t.f_all == pytest.approx(t.F / 16)


def test_critical_beta():
    assert critical_beta() == pytest.approx(0.44068679350977147, abs=1e-15)


def test_ti_zero_source():
    F = thermo_integration_F(lambda w, n: np.zeros(n), 0.5, 10)
    assert F == pytest.approx(-10 * math.log(2) / 0.5)


def test_ti_exact_source_4x4():
    g = grid2d(4, 4)
    F = thermo_integration_F(lambda w, n: brute_force_thermo(g, w).E_avg, 0.44, 16)
    assert F == pytest.approx(-LOGZ_4X4[0.44] / 0.44, abs=1e-3)


def test_ti_domain():
    with pytest.raises(DomainError):
        thermo_integration_F(lambda w, n: np.zeros(n), 0.0, 4)


def test_variance_from_F():
    betas = np.linspace(0.5, 0.7, 5)
    assert np.allclose(variance_from_F(betas, (2.0 * betas + 1.0) / betas), 0, atol=1e-8)
    # single spin with h=1: logZ = ln(2 cosh beta)
    b = np.array([1 - 1e-3, 1, 1 + 1e-3])
    F = -np.log(2 * np.cosh(b)) / b
    assert variance_from_F(b, F)[0] == pytest.approx(1 - math.tanh(1) ** 2, abs=1e-6)
    assert 1 - math.tanh(1) ** 2 == pytest.approx(0.41997, abs=1e-5)
    with pytest.raises(DomainError):
        variance_from_F([0.1, 0.2], [1, 2])


def test_variance_4x4():
    g = grid2d(4, 4)
    v = variance_from_logZ(lambda b: kac_ward_logZ(4, 4, b), 0.3, step=1e-3)
    assert v == pytest.approx(brute_force_thermo(g, 0.3).var_E, abs=1e-4)


def test_semicircle_geometry():
    pat = semicircle_defect_clamp(10)
    assert pat.shape == (5, 10)
    assert pat[0, 0] == 1 and pat[-1, 4] == -1 and pat[-1, 5] == -1
    # Kac-Ward with the defect clamp agrees with transfer matrix
    b = 0.6
    assert kac_ward_logZ(10, 10, b, clamp=pat) == pytest.approx(
        transfer_matrix_logZ(10, 10, b, clamp=pat), abs=1e-8)
    g = grid2d(10, 10, clamp=top_rows_clamp(10, pat))
    assert g.n_free == 50


def test_kac_ward_single_site():
    # no edges at all: logZ = log 2
    assert kac_ward_logZ(1, 1, 0.7) == pytest.approx(math.log(2.0), abs=1e-15)
    assert kac_ward_logZ(2, 1, 0.7, clamp=[-1]) == pytest.approx(math.log(2 * math.cosh(0.7)))
