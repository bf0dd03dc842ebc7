"""Periodic hypercubic lattice, momentum labels, dispersion and coarse-graining boxes.

Coordinates (sites and momenta alike) use the centered representative
``-L/2 < x < L/2``.  Flat indices enumerate coordinates lexicographically with
the first axis slowest, starting from ``-(L-1)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class ConfigError(ValueError):
    """Invalid lattice or run configuration."""


def canonical(x, L: int):
    """Wrap integer coordinates into ``(-L/2, L/2)``; the only place wrapping happens."""
    h = (L - 1) // 2
    return (np.asarray(x) + h) % L - h


@dataclass(frozen=True)
class LatticeConfig:
    d: int
    L: int
    l: int
    rho_bar: float
    epsilon: float
    V: int = field(init=False)
    N: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        d, L, l = self.d, self.L, self.l
        if int(d) != d or d < 1:
            raise ConfigError(f"d must be a positive integer, got {d}")
        if int(L) != L or L < 3 or L % 2 == 0:
            raise ConfigError(f"L must be an odd integer >= 3, got {L}")
        if int(l) != l or l < 1 or l % 2 == 0:
            raise ConfigError(f"l must be a positive odd integer, got {l}")
        if l > L:
            raise ConfigError(f"box side l={l} exceeds L={L}")
        if not 0.0 < self.rho_bar <= 1.0:
            raise ConfigError(f"rho_bar must lie in (0, 1], got {self.rho_bar}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        V = L**d
        # 1e-9 absorbs binary representation error, e.g. rho_bar=1/3 with V=9
        N = int(math.floor(self.rho_bar * V + 1e-9))
        if N < 1:
            raise ConfigError(f"rho_bar={self.rho_bar} gives N=0 on V={V} sites")
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "L", int(L))
        object.__setattr__(self, "l", int(l))
        object.__setattr__(self, "V", V)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "n", -(-L // l))

    @property
    def half(self) -> int:
        return (self.L - 1) // 2

    @property
    def density(self) -> float:
        """Actual mean density N/V."""
        return self.N / self.V

    @cached_property
    def coords(self) -> np.ndarray:
        """(V, d) array of centered coordinates in flat order."""
        h = self.half
        axes = [np.arange(-h, h + 1)] * self.d
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def flat_index(self, x) -> np.ndarray:
        x = canonical(np.atleast_2d(x), self.L) + self.half
        idx = np.zeros(x.shape[0], dtype=np.int64)
        for mu in range(self.d):
            idx = idx * self.L + x[:, mu]
        return idx

    @cached_property
    def centers(self) -> np.ndarray:
        """Box centers ``j*l`` with ``-n/2 < j <= n/2`` in every direction, wrapped mod L."""
        n = self.n
        js = [j for j in range(-n, n + 1) if -n / 2 < j <= n / 2]
        one = canonical(np.array(js) * self.l, self.L)
        grid = np.meshgrid(*([one] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def box(self, c) -> np.ndarray:
        """Sorted flat site indices of B(c) = {x : ||x - c||_inf < l/2}."""
        c = np.asarray(c).reshape(1, -1)
        diff = canonical(self.coords - c, self.L)
        inside = np.all(np.abs(diff) < self.l / 2, axis=1)
        return np.nonzero(inside)[0]

    @cached_property
    def boxes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(c, self.box(c)) for c in self.centers]

    @cached_property
    def energies(self) -> np.ndarray:
        """Single-particle energies E_alpha in flat momentum order."""
        return dispersion(self.coords, self)

    def describe(self) -> dict:
        return {
            "d": self.d, "L": self.L, "l": self.l, "rho_bar": self.rho_bar,
            "epsilon": self.epsilon, "V": self.V, "N": self.N, "n": self.n,
        }


def derive(d: int, L: int, l: int, rho_bar: float, epsilon: float) -> LatticeConfig:
    return LatticeConfig(d=d, L=L, l=l, rho_bar=rho_bar, epsilon=epsilon)


def dispersion(alpha, cfg: LatticeConfig):
    """E_alpha = sum_mu 2 cos(2 pi alpha^mu / L).

    Accepts a single momentum (length-d) or an (M, d) array.
    """
    a = np.asarray(alpha)
    if np.any(np.abs(a) >= cfg.L / 2):
        raise ValueError("momentum component outside (-L/2, L/2)")
    if a.ndim <= 1:
        a = a.reshape(1, -1) if a.ndim == 1 else a.reshape(1, 1)
        return float(np.sum(2.0 * np.cos(2.0 * np.pi * a / cfg.L)))
    return np.sum(2.0 * np.cos(2.0 * np.pi * a / cfg.L), axis=1)


def box_side_for(L: int, n: int) -> int:
    """Smallest odd l with ceil(L/l) == n."""
    l = max(1, L // n)
    l += (l % 2 == 0)
    while l >= 3 and -(-L // (l - 2)) == n:
        l -= 2
    while -(-L // l) > n:
        l += 2
    if -(-L // l) != n:
        raise ConfigError(f"no odd box side gives n={n} for L={L}")
    return l


def largest_odd_at_most(x: float) -> int:
    k = int(math.floor(x))
    return k if k % 2 else k - 1
