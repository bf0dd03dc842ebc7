"""N-fermion pure states: an exact Fock-space engine and a Slater-determinant engine.

Both engines share one plane-wave convention,
``a+_alpha = V**-1/2 sum_x exp(2 pi i alpha.x / L) c+_x``, so a site-basis
orbital ``phi`` has momentum components given by the unitary forward DFT.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fermieq import fockspace
from fermieq.fockspace import DEFAULT_CAPACITY, CapacityError, FockBasis
from fermieq.lattice import LatticeConfig, canonical

__all__ = [
    "CapacityError", "FockState", "SlaterState", "CorrelationMatrix",
    "to_momentum", "to_sites", "evolve_fock", "evolve_slater", "correlation",
    "p_neq_expectation", "neq_flags", "concentrated_state", "uniform_product_state",
    "momentum_filled_state", "random_slater", "random_fock", "slater_to_fock",
    "make_state",
]


# -- plane-wave transforms on (V, ...) arrays in flat centered order ---------

def _grid(cfg, arr):
    return arr.reshape((cfg.L,) * cfg.d + arr.shape[1:])


def to_momentum(cfg: LatticeConfig, phi: np.ndarray) -> np.ndarray:
    axes = tuple(range(cfg.d))
    g = np.fft.ifftshift(_grid(cfg, phi), axes=axes)
    g = np.fft.fftn(g, axes=axes, norm="ortho")
    return np.fft.fftshift(g, axes=axes).reshape(phi.shape)


def to_sites(cfg: LatticeConfig, phi_k: np.ndarray) -> np.ndarray:
    axes = tuple(range(cfg.d))
    g = np.fft.ifftshift(_grid(cfg, phi_k), axes=axes)
    g = np.fft.ifftn(g, axes=axes, norm="ortho")
    return np.fft.fftshift(g, axes=axes).reshape(phi_k.shape)


@lru_cache(maxsize=16)
def plane_wave_matrix(cfg: LatticeConfig) -> np.ndarray:
    """U[x, alpha] = exp(2 pi i alpha.x / L) / sqrt(V)."""
    x = cfg.coords
    return np.exp(2j * np.pi * (x @ x.T) / cfg.L) / np.sqrt(cfg.V)


# -- Slater engine -----------------------------------------------------------

@dataclass(frozen=True)
class SlaterState:
    """Slater determinant prod_k (sum_x orbitals[x, k] c+_x)|vac>."""

    cfg: LatticeConfig
    orbitals: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.orbitals, dtype=complex)
        if phi.shape[0] != self.cfg.V:
            raise ValueError("orbitals must have V rows")
        overlap = phi.conj().T @ phi
        if not np.allclose(overlap, np.eye(phi.shape[1]), atol=1e-10):
            raise ValueError("orbitals are not orthonormal")
        phi.setflags(write=False)
        object.__setattr__(self, "orbitals", phi)

    @property
    def N(self) -> int:
        return self.orbitals.shape[1]

    def momentum_orbitals(self) -> np.ndarray:
        return to_momentum(self.cfg, self.orbitals)


@dataclass(frozen=True)
class CorrelationMatrix:
    """G[x, y] = <c+_x c_y>."""

    G: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.G).real)


def evolve_slater(s: SlaterState, t: float) -> SlaterState:
    if t == 0:
        return s
    phase = np.exp(-1j * t * s.cfg.energies)[:, None]
    phi = to_sites(s.cfg, phase * s.momentum_orbitals())
    return SlaterState(s.cfg, phi)


def evolve_orbitals(cfg: LatticeConfig, phi_k: np.ndarray, times) -> np.ndarray:
    """Site orbitals at each time from momentum orbitals: array (nt, V, N)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    phases = np.exp(-1j * times[:, None] * cfg.energies[None, :])
    stacked = phases[:, :, None] * phi_k[None, :, :]
    moved = np.moveaxis(stacked, 0, -1)  # (V, N, nt)
    return np.moveaxis(to_sites(cfg, moved), -1, 0)


def correlation(s: SlaterState) -> CorrelationMatrix:
    phi = s.orbitals
    return CorrelationMatrix(phi.conj() @ phi.T)


def momentum_correlation(s: SlaterState) -> np.ndarray:
    """Gt[alpha, beta] = <a+_alpha a_beta> in flat momentum order."""
    pk = s.momentum_orbitals()
    return pk.conj() @ pk.T


# -- Fock engine -------------------------------------------------------------

@dataclass(frozen=True)
class FockState:
    """Amplitudes over the sorted N-particle bitmask basis of the site modes."""

    cfg: LatticeConfig
    amplitudes: np.ndarray
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        psi = np.asarray(self.amplitudes, dtype=complex)
        if psi.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got {psi.shape}")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
            raise ValueError("Fock state is not normalized")
        psi.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)

    @property
    def basis(self) -> FockBasis:
        return fockspace.basis(self.cfg.V, self.cfg.N, self.capacity)

    def momentum_amplitudes(self) -> np.ndarray:
        """Amplitudes on products of a+_alpha (same bitmask basis, momentum modes)."""
        return fockspace.lift(self.basis, _factors(self.cfg)[1], self.amplitudes)

    def energy(self) -> float:
        phi = self.momentum_amplitudes()
        return float(np.real(np.vdot(phi, _mode_energies(self.cfg, self.basis) * phi)))


@lru_cache(maxsize=16)
def _factors(cfg: LatticeConfig):
    U = plane_wave_matrix(cfg)
    return fockspace.givens_factor(U), fockspace.givens_factor(U.conj().T)


def _mode_energies(cfg: LatticeConfig, fb: FockBasis) -> np.ndarray:
    return fb.occupation() @ cfg.energies


def fock_trajectory(psi: FockState, times) -> np.ndarray:
    """Site-basis amplitudes at each time, shape (dim, nt)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    fb = psi.basis
    phi = psi.momentum_amplitudes()
    energy = _mode_energies(psi.cfg, fb)
    batch = phi[:, None] * np.exp(-1j * energy[:, None] * times[None, :])
    return fockspace.lift(fb, _factors(psi.cfg)[0], batch)


def evolve_fock(psi: FockState, t: float) -> FockState:
    if t == 0:
        return psi
    amp = fock_trajectory(psi, [t])[:, 0]
    amp = amp / np.linalg.norm(amp)
    return FockState(psi.cfg, amp, psi.capacity)


@lru_cache(maxsize=16)
def box_counts(cfg: LatticeConfig, capacity: int = DEFAULT_CAPACITY) -> np.ndarray:
    """(dim, n_boxes) particle counts per box for every occupation basis state."""
    occ = fockspace.basis(cfg.V, cfg.N, capacity).occupation()
    counts = np.empty((occ.shape[0], len(cfg.boxes)), dtype=np.int64)
    for j, (_, sites) in enumerate(cfg.boxes):
        counts[:, j] = occ[:, sites].sum(axis=1)
    return counts


def neq_flags(cfg: LatticeConfig, capacity: int = DEFAULT_CAPACITY) -> np.ndarray:
    """True where some box has |count/l^d - N/V| > epsilon * rho_bar."""
    vol = cfg.l ** cfg.d
    # integer numerator of count/l^d - N/V over the common denominator vol * V
    dev = np.abs(box_counts(cfg, capacity) * cfg.V - cfg.N * vol)
    return np.any(dev > cfg.epsilon * cfg.rho_bar * vol * cfg.V, axis=1)


def p_neq_expectation(psi: FockState) -> float:
    prob = np.abs(psi.amplitudes) ** 2
    return float(np.clip(prob[neq_flags(psi.cfg, psi.capacity)].sum(), 0.0, 1.0))


def slater_to_fock(s: SlaterState, capacity: int = DEFAULT_CAPACITY) -> FockState:
    fb = fockspace.basis(s.cfg.V, s.N, capacity)
    amp = fockspace.slater_amplitudes(fb, s.orbitals)
    return FockState(s.cfg, amp / np.linalg.norm(amp), capacity)


# -- initial states ----------------------------------------------------------

def _sites_state(cfg: LatticeConfig, sites) -> SlaterState:
    sites = np.asarray(sites)
    phi = np.zeros((cfg.V, len(sites)), dtype=complex)
    phi[np.sort(sites), np.arange(len(sites))] = 1.0
    return SlaterState(cfg, phi)


def _wrap_order(cfg: LatticeConfig, x: np.ndarray) -> np.ndarray:
    """Lexicographic rank of coordinates taken in [0, L)."""
    key = np.zeros(len(x), dtype=np.int64)
    for mu in range(cfg.d):
        key = key * cfg.L + (x[:, mu] % cfg.L)
    return key


def concentrated_state(cfg: LatticeConfig) -> SlaterState:
    """The N sites nearest the origin; ties go to the lexicographically smaller [0, L) coordinates."""
    x = cfg.coords
    r2 = np.sum(x * x, axis=1)
    order = np.lexsort((_wrap_order(cfg, x), r2))
    return _sites_state(cfg, order[: cfg.N])


def uniform_product_state(cfg: LatticeConfig) -> SlaterState:
    """Deal fermions round-robin over boxes, nearest-to-center free site first."""
    slots = []
    for c, sites in cfg.boxes:
        diff = canonical(cfg.coords[sites] - c, cfg.L)
        order = np.lexsort((_wrap_order(cfg, diff), np.sum(diff * diff, axis=1)))
        slots.append(list(sites[order]))
    taken, chosen = set(), []
    depth = 0
    while len(chosen) < cfg.N:
        for box_sites in slots:
            while depth < len(box_sites) and box_sites[depth] in taken:
                box_sites.pop(depth)
            if depth < len(box_sites) and len(chosen) < cfg.N:
                taken.add(box_sites[depth])
                chosen.append(box_sites[depth])
        depth += 1
        if depth > cfg.V:
            break
    return _sites_state(cfg, chosen)


def momentum_filled_state(cfg: LatticeConfig) -> SlaterState:
    """Plane waves on the N modes of smallest |E_alpha| (ties: flat momentum order)."""
    modes = np.sort(np.argsort(np.abs(cfg.energies), kind="stable")[: cfg.N])
    x, k = cfg.coords, cfg.coords[modes]
    return SlaterState(cfg, np.exp(2j * np.pi * (x @ k.T) / cfg.L) / np.sqrt(cfg.V))


def random_slater(cfg: LatticeConfig, seed: int) -> SlaterState:
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(cfg.V, cfg.N)) + 1j * rng.normal(size=(cfg.V, cfg.N))
    q, _ = np.linalg.qr(z)
    return SlaterState(cfg, q)


def random_fock(cfg: LatticeConfig, seed: int, capacity: int = DEFAULT_CAPACITY) -> FockState:
    fb = fockspace.basis(cfg.V, cfg.N, capacity)
    rng = np.random.default_rng(seed)
    z = rng.normal(size=fb.dim) + 1j * rng.normal(size=fb.dim)
    return FockState(cfg, z / np.linalg.norm(z), capacity)


INITIAL_STATES = ("concentrated", "uniform_product", "momentum_filled", "random_slater", "random_fock")


def make_state(cfg: LatticeConfig, spec: str, engine: str = "slater", seed: int = 0,
               capacity: int = DEFAULT_CAPACITY):
    """Build an initial state from a specifier such as ``"random_slater(7)"``."""
    name, arg = spec.strip(), None
    if "(" in name:
        name, rest = name.split("(", 1)
        arg = rest.rstrip(")").strip()
        name = name.strip()
    if name not in INITIAL_STATES:
        raise ValueError(f"unknown initial state {spec!r}")
    s = int(arg) if arg else seed
    if engine not in ("slater", "fock"):
        raise ValueError(f"unknown engine {engine!r}")
    if name == "random_fock":
        if engine != "fock":
            raise ValueError("random_fock requires the fock engine")
        return random_fock(cfg, s, capacity)
    builders = {
        "concentrated": lambda: concentrated_state(cfg),
        "uniform_product": lambda: uniform_product_state(cfg),
        "momentum_filled": lambda: momentum_filled_state(cfg),
        "random_slater": lambda: random_slater(cfg, s),
    }
    if engine == "fock":
        # check capacity before building any determinant table
        fockspace.basis(cfg.V, cfg.N, capacity)
        return slater_to_fock(builders[name](), capacity)
    return builders[name]()
