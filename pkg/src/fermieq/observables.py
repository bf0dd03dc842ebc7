"""Coarse-grained box densities in site and momentum form, and their moments."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fermieq.lattice import LatticeConfig, canonical
from fermieq.states import (
    FockState, SlaterState, box_counts, evolve_orbitals, fock_trajectory, momentum_correlation,
    neq_flags,
)


def w1(k, L: int, l: int):
    """Box window in one direction: sin(pi k l / L) / (l sin(pi k / L)), 1 at k = 0."""
    k = np.asarray(k)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.sin(np.pi * k * l / L) / (l * np.sin(np.pi * k / L))
    val = np.where(k == 0, 1.0, val)
    return float(val) if val.ndim == 0 else val


def w(m, cfg: LatticeConfig):
    """Product window over the components of ``m`` (a d-vector or an (M, d) array)."""
    m = np.asarray(m)
    vals = w1(m, cfg.L, cfg.l)
    return float(np.prod(vals)) if m.ndim <= 1 else np.prod(vals, axis=-1)


@dataclass(frozen=True)
class WindowFunction:
    cfg: LatticeConfig

    @property
    def values(self) -> np.ndarray:
        h = self.cfg.half
        return w1(np.arange(-h, h + 1), self.cfg.L, self.cfg.l)

    def __call__(self, m):
        return w(m, self.cfg)


@dataclass(frozen=True)
class DensityObservable:
    cfg: LatticeConfig
    center: tuple

    @property
    def sites(self) -> np.ndarray:
        return self.cfg.box(np.array(self.center))


# -- box moments over time ---------------------------------------------------

def _slater_box_moments(s: SlaterState, times, chunk=64):
    cfg = s.cfg
    times = np.atleast_1d(np.asarray(times, dtype=float))
    pk = s.momentum_orbitals()
    vol = cfg.l ** cfg.d
    nb = len(cfg.boxes)
    rho = np.empty((len(times), nb))
    var = np.empty((len(times), nb))
    if s.N == cfg.V:
        # full band: G = identity at all times
        rho.fill(1.0)
        var.fill(0.0)
        return rho, var
    for start in range(0, len(times), chunk):
        phis = evolve_orbitals(cfg, pk, times[start:start + chunk])
        for j, (_, sites) in enumerate(cfg.boxes):
            B = phis[:, sites, :]
            dens = np.sum(np.abs(B) ** 2, axis=(1, 2))
            if B.shape[1] <= B.shape[2]:
                M = B @ np.conj(np.swapaxes(B, 1, 2))
            else:
                M = np.conj(np.swapaxes(B, 1, 2)) @ B
            sq = np.sum(np.abs(M) ** 2, axis=(1, 2))
            rho[start:start + chunk, j] = dens / vol
            var[start:start + chunk, j] = (dens - sq) / vol**2
    return rho, var


def _fock_box_moments(psi: FockState, times, chunk=2048):
    cfg = psi.cfg
    times = np.atleast_1d(np.asarray(times, dtype=float))
    counts = box_counts(cfg, psi.capacity) / cfg.l ** cfg.d
    rho = np.empty((len(times), counts.shape[1]))
    sq = np.empty_like(rho)
    for start in range(0, len(times), chunk):
        amp = fock_trajectory(psi, times[start:start + chunk])
        prob = np.abs(amp) ** 2
        rho[start:start + chunk] = prob.T @ counts
        sq[start:start + chunk] = prob.T @ (counts - cfg.density) ** 2
    return rho, sq


def box_moments(state, times):
    """Per-box ``<rho_c>`` and ``<(Delta rho_c)^2>`` at each time, arrays (nt, n_boxes)."""
    if isinstance(state, SlaterState):
        rho, var = _slater_box_moments(state, times)
        dev = (rho - state.cfg.density) ** 2 + var
        return rho, np.maximum(dev, 0.0)
    if isinstance(state, FockState):
        return _fock_box_moments(state, times)
    raise TypeError(f"unsupported state type {type(state).__name__}")


def _box_column(cfg: LatticeConfig, c) -> int:
    c = canonical(np.asarray(c).reshape(-1), cfg.L)
    for j, (center, _) in enumerate(cfg.boxes):
        if np.array_equal(center, c):
            return j
    raise ValueError(f"{tuple(c)} is not a box center")


def density_expectation(state, c) -> float:
    """<rho_c> for the state as given (no evolution)."""
    rho, _ = box_moments(state, [0.0])
    return float(rho[0, _box_column(state.cfg, c)])


def delta_rho_sq_expectation(state, c, t: float = 0.0) -> float:
    """<(Delta rho_c)^2> after evolving the state for time ``t``."""
    _, sq = box_moments(state, [t])
    return float(sq[0, _box_column(state.cfg, c)])


def p_neq_trajectory(psi: FockState, times, chunk=2048) -> np.ndarray:
    flags = neq_flags(psi.cfg, psi.capacity)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty(len(times))
    for start in range(0, len(times), chunk):
        amp = fock_trajectory(psi, times[start:start + chunk])
        out[start:start + chunk] = np.sum(np.abs(amp[flags]) ** 2, axis=0)
    return np.clip(out, 0.0, 1.0)


# -- momentum representation -------------------------------------------------

@lru_cache(maxsize=32)
def momentum_shift_table(cfg: LatticeConfig) -> np.ndarray:
    """shift[beta, m] = flat index of beta + m (both flat momentum indices)."""
    k = cfg.coords
    total = canonical(k[:, None, :] + k[None, :, :], cfg.L)
    return cfg.flat_index(total.reshape(-1, cfg.d)).reshape(cfg.V, cfg.V)


def level_differences(m, cfg: LatticeConfig) -> np.ndarray:
    """E_beta - E_{beta+m} for every flat beta."""
    m = np.asarray(m).reshape(1, -1)
    k = cfg.coords
    shifted = canonical(k + m, cfg.L)
    return cfg.energies - np.sum(2.0 * np.cos(2.0 * np.pi * shifted / cfg.L), axis=1)


def f_matrix_elements(m, t: float, cfg: LatticeConfig):
    """Phases of F_t(m) = sum_beta exp(-i t Et_{beta,m}) a+_{beta+m} a_beta.

    Returns ``(beta_index, shifted_index, Et, phases)``.
    """
    et = level_differences(m, cfg)
    m = np.asarray(m).reshape(1, -1)
    shifted = cfg.flat_index(canonical(cfg.coords + m, cfg.L))
    return np.arange(cfg.V), shifted, et, np.exp(-1j * t * et)


def box_phase(m, c, L: int):
    """Translation phase exp(-2 pi i m.c / L) that moves the window from B(0) to B(c)."""
    return np.exp(-2j * np.pi * (np.asarray(m) @ np.asarray(c).reshape(-1)) / L)


def density_momentum_form(s: SlaterState, c) -> float:
    """<rho_c> from (1/V) sum_{alpha,beta} w(alpha - beta) phase <a+_alpha a_beta>."""
    cfg = s.cfg
    G = momentum_correlation(s)
    k = cfg.coords
    diff = canonical(k[:, None, :] - k[None, :, :], cfg.L)
    weights = w(diff, cfg) * box_phase(diff, c, cfg.L)
    return float(np.real(np.sum(weights * G)) / cfg.V)
