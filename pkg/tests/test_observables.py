import numpy as np
import pytest

from fermieq import derive
from fermieq.observables import (
    WindowFunction, box_moments, density_expectation, density_momentum_form,
    delta_rho_sq_expectation, f_matrix_elements, level_differences, w, w1,
)
from fermieq.states import (
    concentrated_state, correlation, evolve_fock, evolve_slater, momentum_filled_state,
    random_fock, random_slater, slater_to_fock,
)
from fermieq.fockspace import hopping_matrix

from conftest import expm_evolve


def test_w1_values():
    assert w1(0, 15, 5) == 1.0
    assert w1(3, 15, 5) == pytest.approx(0.0, abs=1e-15)
    # mpmath reference and the finite-sum form agree on this value
    assert w1(1, 15, 5) == pytest.approx(0.83307042560058364, abs=1e-14)


def test_w1_finite_sum():
    L, l = 21, 7
    x = np.arange(-(l // 2), l // 2 + 1)
    for k in range(-10, 11):
        direct = np.sum(np.exp(-2j * np.pi * k * x / L)) / l
        assert w1(k, L, l) == pytest.approx(direct.real, abs=1e-13)
        assert abs(direct.imag) < 1e-13


def test_w_product():
    cfg = derive(2, 15, 5, 0.5, 0.1)
    assert w([0, 0], cfg) == 1.0
    assert w([3, 0], cfg) == pytest.approx(0.0, abs=1e-15)
    assert w([1], derive(1, 15, 5, 0.5, 0.1)) == pytest.approx(w1(1, 15, 5))


@pytest.mark.parametrize("L,l", [(15, 5), (101, 33), (1001, 91), (31, 31)])
def test_window_bound(L, l):
    wf = WindowFunction(derive(1, L, l, 0.5, 0.1))
    vals = wf.values
    k = np.arange(-(L // 2), L // 2 + 1)
    n = -(-L // l)
    cap = np.minimum(1.0, np.where(k == 0, 1.0, n / (2.0 * np.maximum(np.abs(k), 1))))
    assert np.all(np.abs(vals) <= cap + 1e-12)
    assert np.allclose(vals, vals[::-1])


def test_density_examples():
    cfg = derive(1, 9, 3, 1 / 3, 0.5)
    conc = concentrated_state(cfg)
    assert density_expectation(conc, 0) == pytest.approx(1.0)
    assert density_expectation(conc, 3) == pytest.approx(0.0)
    mf = momentum_filled_state(cfg)
    for c, _ in cfg.boxes:
        assert density_expectation(mf, c) == pytest.approx(3 / 9, abs=1e-14)


def test_full_band_zero_fluctuation():
    cfg = derive(1, 9, 3, 1.0, 0.5)
    s = concentrated_state(cfg)
    for c, _ in cfg.boxes:
        assert delta_rho_sq_expectation(s, c, 1.7) == pytest.approx(0.0, abs=1e-14)


def test_stationary_fluctuation(small):
    mf = momentum_filled_state(small)
    vals = [delta_rho_sq_expectation(mf, 3, t) for t in (0.0, 1.0, 9.0)]
    assert np.allclose(vals, vals[0], atol=1e-13)


@pytest.mark.parametrize("seed", range(4))
def test_slater_fock_moments(small, seed):
    s = random_slater(small, seed)
    times = [0.0, 0.7, 3.1]
    r1, q1 = box_moments(s, times)
    r2, q2 = box_moments(slater_to_fock(s), times)
    assert np.allclose(r1, r2, atol=1e-12)
    assert np.allclose(q1, q2, atol=1e-12)


def test_wick_formula_direct(small):
    # the V x V Wick double sum written out against the batched route
    s = evolve_slater(random_slater(small, 9), 1.1)
    G = correlation(s).G
    rho_bar = small.N / small.V
    for c, sites in small.boxes:
        Gb = G[np.ix_(sites, sites)]
        d = np.real(np.diag(Gb))
        quart = np.outer(d, d) + Gb * (np.eye(len(sites)) - Gb.T)
        expect_sq = np.real(quart.sum()) / 9
        rho = d.sum() / 3
        ref = expect_sq - 2 * rho_bar * rho + rho_bar**2
        assert delta_rho_sq_expectation(s, c, 0.0) == pytest.approx(ref, abs=1e-13)


def test_site_momentum_density_agree():
    cfg = derive(1, 15, 5, 0.4, 0.5)
    for seed in range(3):
        s = random_slater(cfg, seed)
        for c, _ in cfg.boxes:
            assert density_momentum_form(s, c) == pytest.approx(density_expectation(s, c), abs=1e-9)
    cfg2 = derive(2, 9, 3, 1 / 3, 0.5)
    s = random_slater(cfg2, 1)
    for c, _ in cfg2.boxes[:4]:
        assert density_momentum_form(s, c) == pytest.approx(density_expectation(s, c), abs=1e-9)


def test_box_sum_conserves_particles(small):
    rho, _ = box_moments(random_slater(small, 2), np.linspace(0, 5, 7))
    assert np.allclose(rho.sum(axis=1) * small.l, small.N)


def test_heisenberg_identity(small):
    """<psi(t)|X^2|psi(t)> against <psi|U(t)^+ X^2 U(t)|psi> with X built as a dense matrix."""
    from scipy.linalg import expm
    from conftest import site_hamiltonian
    psi = random_fock(small, 7)
    fb = psi.basis
    c, sites = small.boxes[1]
    occ = fb.occupation()[:, sites].sum(axis=1) / 3.0
    X = np.diag(occ - small.N / small.V)
    U = expm(-1j * 2.4 * hopping_matrix(fb, site_hamiltonian(small)))
    XH = U.conj().T @ X @ U
    rhs = np.vdot(psi.amplitudes, XH @ XH @ psi.amplitudes).real
    assert delta_rho_sq_expectation(psi, c, 2.4) == pytest.approx(rhs, abs=1e-12)
    ref = expm_evolve(small, psi.amplitudes, 2.4)
    assert np.allclose(evolve_fock(psi, 2.4).amplitudes, ref, atol=1e-10)


def test_level_differences_d1():
    cfg = derive(1, 9, 3, 1 / 3, 0.5)
    beta, shifted, et, phases = f_matrix_elements(1, 0.0, cfg)
    cm = 4 * np.sin(np.pi / 9)
    ref = cm * np.sin(2 * np.pi * (cfg.coords[:, 0] + 0.5) / 9)
    assert np.allclose(et, ref, atol=1e-14)
    assert et[cfg.flat_index([4])[0]] == pytest.approx(0.0, abs=1e-14)
    assert np.all(phases == 1)
    assert np.allclose(level_differences(0, cfg), 0.0)


def test_f_zero_is_number(small):
    # F_t(0) = sum_beta a+_beta a_beta has expectation N on any state
    s = random_slater(small, 1)
    from fermieq.states import momentum_correlation
    assert np.trace(momentum_correlation(s)).real == pytest.approx(small.N, abs=1e-12)
