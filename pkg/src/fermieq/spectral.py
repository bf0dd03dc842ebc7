"""Level sets of single-particle energy differences and their exact DOS integrals.

For a fixed nonzero ``m`` the levels are ``Et_{beta,m} = E_beta - E_{beta+m}``.
The count ``|Omega_m(E)|`` of levels within ``1/tau`` of ``E`` is a step function
whose breakpoints are the levels shifted by ``+-1/tau``; every integral of it is
taken exactly over those breakpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from fermieq import kernels
from fermieq.lattice import LatticeConfig

HYPOTHESIS_L = 10_000
HYPOTHESIS_TAU_RATIO = 2.0


def c_m(m: int, L: int) -> float:
    """Amplitude 4 sin(pi m / L) of the d=1 level differences."""
    return 4.0 * math.sin(math.pi * m / L)


def _levels_1d(m: int, L: int) -> np.ndarray:
    h = (L - 1) // 2
    beta = np.arange(-h, h + 1)
    return c_m(m, L) * np.sin(2.0 * np.pi * (beta + m / 2.0) / L)


@dataclass(frozen=True)
class LevelSet:
    m: tuple
    values: np.ndarray  # sorted, with multiplicity

    def __len__(self):
        return len(self.values)


def levels(m, cfg: LatticeConfig) -> LevelSet:
    m = tuple(int(v) for v in np.atleast_1d(m))
    if len(m) != cfg.d:
        raise ValueError(f"m must have {cfg.d} components")
    if all(v == 0 for v in m):
        raise ValueError("m must be nonzero")
    vals = np.zeros(1)
    for mu in m:
        # zero components contribute 0 to every level
        comp = _levels_1d(mu, cfg.L) if mu else np.zeros(cfg.L)
        vals = (vals[:, None] + comp[None, :]).ravel()
    return LevelSet(m, np.sort(vals))


def omega_count(m, E: float, tau: float, cfg: LatticeConfig) -> int:
    """|Omega_m(E)|: levels strictly within 1/tau of E."""
    v = levels(m, cfg).values
    return _window_count(v, E, 1.0 / tau)


def _window_count(sorted_vals, E, half):
    lo = np.searchsorted(sorted_vals, np.asarray(E) - half, side="right")
    hi = np.searchsorted(sorted_vals, np.asarray(E) + half, side="left")
    out = np.maximum(hi - lo, 0)
    return int(out) if np.ndim(out) == 0 else out


def omega_scaled_count(m: int, x, delta: float, L: int):
    """|omega_m(x, delta)|: beta with |x - sin(2 pi (beta + m/2) / L)| <= delta (closed)."""
    h = (L - 1) // 2
    s = np.sort(np.sin(2.0 * np.pi * (np.arange(-h, h + 1) + m / 2.0) / L))
    x = np.asarray(x, dtype=float)
    lo = np.searchsorted(s, x - delta, side="left")
    hi = np.searchsorted(s, x + delta, side="right")
    out = hi - lo
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SpectralProfile:
    """Breakpoints and the step value of |Omega_m(E)| on each gap between them."""

    breakpoints: np.ndarray
    counts: np.ndarray  # len(breakpoints) - 1

    @classmethod
    def from_levels(cls, values, tau: float) -> "SpectralProfile":
        half = 1.0 / tau
        pos = np.concatenate([values - half, values + half])
        step = np.concatenate([np.ones(len(values), np.int64), -np.ones(len(values), np.int64)])
        order = np.argsort(pos, kind="stable")
        return cls(pos[order], np.cumsum(step[order])[:-1])

    def __call__(self, E):
        i = np.searchsorted(self.breakpoints, E, side="right") - 1
        inside = (i >= 0) & (i < len(self.counts))
        return np.where(inside, self.counts[np.clip(i, 0, len(self.counts) - 1)], 0)

    def integral(self, power: int = 1) -> float:
        return float(np.sum(self.counts.astype(float) ** power * np.diff(self.breakpoints)))

    def total_variation(self) -> int:
        full = np.concatenate([[0], self.counts, [0]])
        return int(np.sum(np.abs(np.diff(full))))


def profile(m, tau: float, cfg: LatticeConfig) -> SpectralProfile:
    return SpectralProfile.from_levels(levels(m, cfg).values, tau)


@dataclass(frozen=True)
class JmValue:
    m: tuple
    tau: float
    value: float
    levels_integral: float  # (tau/2) int |Omega| dE, equal to the number of levels

    @property
    def sum_rule_error(self) -> float:
        return abs(self.levels_integral - round(self.levels_integral)) / max(1.0, self.levels_integral)


def _jm_from_sorted(vals: np.ndarray, tau: float, backend=None):
    impl = backend if backend is not None else kernels
    i1, i2 = impl.window_profile_integrals(vals, 1.0 / tau)
    return tau / 2.0 * i2, tau / 2.0 * i1


@lru_cache(maxsize=8)
def _sorted_sines(L: int, parity: int) -> np.ndarray:
    h = (L - 1) // 2
    return np.sort(np.sin(2.0 * np.pi * (np.arange(-h, h + 1) + parity / 2.0) / L))


def jm_1d(m: int, tau: float, L: int, backend=None) -> JmValue:
    """Exact J_m for d=1 using the rescaled sine set shared by all m of one parity."""
    if m == 0:
        raise ValueError("m must be nonzero")
    cm = abs(c_m(m, L))
    s = _sorted_sines(L, m % 2)
    # |Omega_m(E)| = |omega(E/|C_m|, 1/(|C_m| tau))|; J is invariant under the rescaling
    J, I1 = _jm_from_sorted(s, cm * tau, backend)
    return JmValue((m,), tau, J, I1)


def jm_exact(m, tau: float, cfg: LatticeConfig, backend=None) -> JmValue:
    """J_m = (tau/2) int |Omega_m(E)|^2 dE, exact over the breakpoints."""
    m = tuple(int(v) for v in np.atleast_1d(m))
    if cfg.d == 1:
        return jm_1d(m[0], tau, cfg.L, backend)
    vals = levels(m, cfg).values
    J, I1 = _jm_from_sorted(vals, tau, backend)
    return JmValue(m, tau, J, I1)


def jm_pairwise(values, tau: float) -> float:
    """O(K^2) oracle: (tau/2) sum_{i,j} overlap of the two windows of width 2/tau."""
    v = np.asarray(values, dtype=float)
    overlap = np.maximum(0.0, 2.0 / tau - np.abs(v[:, None] - v[None, :]))
    return tau / 2.0 * float(overlap.sum())


def cross_integral(vals_m, vals_n, tau: float) -> float:
    """(tau/2) int |Omega_m(E)| |Omega_n(E)| dE, exact via pairwise overlaps."""
    vm = np.asarray(vals_m)[:, None]
    vn = np.asarray(vals_n)[None, :]
    return tau / 2.0 * float(np.maximum(0.0, 2.0 / tau - np.abs(vm - vn)).sum())


# -- bound evaluators --------------------------------------------------------

def lemma5_bound(x, delta: float, L: int):
    """L delta / sqrt(1 - min(|x|, 1-delta)^2) + 2 for |x| <= 1 + delta, else 0."""
    if not 0 < delta <= 0.5:
        raise ValueError("delta must lie in (0, 1/2]")
    x = np.abs(np.asarray(x, dtype=float))
    val = L * delta / np.sqrt(1.0 - np.minimum(x, 1.0 - delta) ** 2) + 2.0
    val = np.where(x <= 1.0 + delta, val, 0.0)
    return float(val) if val.ndim == 0 else val


def hypothesis_ok(L: int, tau: float) -> bool:
    return L > HYPOTHESIS_L and tau > HYPOTHESIS_TAU_RATIO * L


def lemma6_bound(m: int, tau: float, L: int) -> float:
    """L^2 log(|C_m| tau) / (|C_m| tau) + 4L."""
    x = abs(c_m(m, L)) * tau
    return L * L * math.log(x) / x + 4.0 * L


def lemma7_rhs(m, tau: float, cfg: LatticeConfig, backend=None) -> float:
    """(V^2 / L^2) J_{||m||_inf} with the right-hand J taken in d=1."""
    top = int(np.max(np.abs(np.atleast_1d(m))))
    return (cfg.V / cfg.L) ** 2 * jm_1d(top, tau, cfg.L, backend).value


def leading_component(m) -> int:
    """Index of the largest-magnitude component; ties go to the smallest index."""
    m = np.abs(np.atleast_1d(m))
    return int(np.argmax(m))


def log_delta_sum(delta):
    """log(delta) + log(2 - delta) + 4/(2 - delta)."""
    delta = np.asarray(delta, dtype=float)
    return np.log(delta) + np.log(2.0 - delta) + 4.0 / (2.0 - delta)


def arcsin_gap(x, delta):
    """Arcsin(x + delta) - Arcsin(x - delta) and its bound 2 sqrt(2) delta / sqrt(1 - x^2)."""
    x = np.asarray(x, dtype=float)
    gap = np.arcsin(x + delta) - np.arcsin(x - delta)
    return gap, 2.0 * math.sqrt(2.0) * delta / np.sqrt(1.0 - x * x)


def y_function(theta, eps):
    """8 (sin th - sin(th - e))^2 / (4 - (sin th + sin(th - e))^2) - e^2."""
    s1, s2 = np.sin(theta), np.sin(theta - eps)
    return 8.0 * (s1 - s2) ** 2 / (4.0 - (s1 + s2) ** 2) - eps**2


def y_derivative(theta, eps):
    """Closed-form d Y / d theta."""
    s1, s2 = np.sin(theta), np.sin(theta - eps)
    return -128.0 * np.sin(eps / 2.0) ** 4 * np.sin(2.0 * theta - eps) / (4.0 - (s1 + s2) ** 2) ** 2
