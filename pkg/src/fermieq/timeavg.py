"""Sinc-squared time averages, the tent closed form, delta_a and time-fraction sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import sici

from fermieq import kernels
from fermieq.lattice import LatticeConfig, canonical
from fermieq.observables import box_moments, box_phase, momentum_shift_table, p_neq_trajectory, w
from fermieq.states import FockState, SlaterState, momentum_correlation

SIN1_SQ = math.sin(1.0) ** 2


@dataclass(frozen=True)
class AveragingKernel:
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")

    def __call__(self, t):
        return kernel(t, self.tau)

    @property
    def floor(self) -> float:
        """Minimum of the kernel on [-tau, tau], attained at the endpoints."""
        return SIN1_SQ / (math.pi * self.tau)


def kernel(t, tau: float):
    """f_tau(t) = (1/(pi tau)) (sin(t/tau) / (t/tau))^2."""
    s = np.asarray(t, dtype=float) / tau
    return np.sinc(s / np.pi) ** 2 / (np.pi * tau)


def tent(omega, tau: float):
    """Exact sinc^2 average of exp(-i omega t): max(0, 1 - tau |omega| / 2)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    val = np.maximum(0.0, 1.0 - tau * np.abs(np.asarray(omega, dtype=float)) / 2.0)
    return float(val) if np.ndim(val) == 0 else val


def kernel_tail(omega: float, tau: float, t_cut: float) -> float:
    """Exact value of int_{|t| > t_cut} f_tau(t) cos(omega t) dt via sine/cosine integrals.

    Used to close the truncated quadrature for pure phases; independent of ``tent``.
    """
    T = t_cut / tau
    k = abs(omega) * tau

    # I(a) = int_T^inf cos(a s) / s^2 ds
    def I(a):
        a = abs(a)
        if a == 0:
            return 1.0 / T
        si, _ = sici(a * T)
        return math.cos(a * T) / T - a * (math.pi / 2 - si)

    # sin^2(s) cos(k s) = cos(k s)/2 - cos((k+2)s)/4 - cos((k-2)s)/4
    inner = 0.5 * I(k) - 0.25 * I(k + 2.0) - 0.25 * I(k - 2.0)
    return 2.0 * inner / math.pi


@dataclass
class QuadratureResult:
    value: float
    truncation_bound: float
    stability: float
    dt: float
    t_cut: float


def time_average_quadrature(X, tau: float, bound: float, t_cut: float | None = None,
                            dt: float | None = None, stable_tol: float = 1e-6,
                            max_halvings: int = 12) -> QuadratureResult:
    """Composite midpoint rule for int_{-t_cut}^{t_cut} f_tau(t) X(t) dt.

    ``X`` takes an array of times and returns values (real or complex).
    ``bound`` is a sup-norm bound on |X|; the reported truncation bound is
    ``bound * 2 tau / (pi t_cut)``.  The step is halved until two successive
    estimates agree to ``stable_tol``.
    """
    if t_cut is None:
        t_cut = 50.0 * tau
    if t_cut < tau:
        raise ValueError("t_cut must be at least tau")
    if dt is None:
        dt = tau / 8.0

    def estimate(h):
        n = max(2, int(math.ceil(2 * t_cut / h)))
        h = 2 * t_cut / n
        t = -t_cut + h * (np.arange(n) + 0.5)
        return np.sum(kernel(t, tau) * X(t)) * h, h

    prev, h = estimate(dt)
    diff = math.inf
    for _ in range(max_halvings):
        cur, h = estimate(h / 2)
        diff = abs(cur - prev)
        prev = cur
        if diff < stable_tol:
            break
    return QuadratureResult(prev, bound * 2 * tau / (math.pi * t_cut), diff, h, t_cut)


# -- spectral evaluation of the averaged squared deviation --------------------

@dataclass
class SpectralAverage:
    value: float
    truncation_bound: float
    m_cut: int
    pairs: int


def _pair_table(cfg: LatticeConfig, c, m_cut: int):
    """All (beta, m) with 0 < ||m||_inf <= m_cut: indices, frequencies, coefficients."""
    k = cfg.coords
    norm = np.max(np.abs(k), axis=1)
    ms = np.nonzero((norm > 0) & (norm <= m_cut))[0]
    shift = momentum_shift_table(cfg)
    coef_m = w(k[ms], cfg) * box_phase(k[ms], c, cfg.L) / cfg.V
    b = np.repeat(np.arange(cfg.V)[None, :], len(ms), axis=0).ravel()
    a = shift[:, ms].T.ravel()
    freq = cfg.energies[b] - cfg.energies[a]
    coef = np.repeat(coef_m, cfg.V)
    return a, b, freq, coef


def _truncation_bound(cfg: LatticeConfig, m_cut: int) -> float:
    k = cfg.coords
    norm = np.max(np.abs(k), axis=1)
    dropped = norm > m_cut
    if not np.any(dropped):
        return 0.0
    # ||F(m)|| <= N on the N-particle space; ||Delta rho|| <= 1
    r = cfg.N * np.sum(np.abs(w(k[dropped], cfg))) / cfg.V
    return float(2.0 * (1.0 + r) * r + r * r)


def default_m_cut(cfg: LatticeConfig) -> int:
    """Smallest m with n/(2m) < 1e-3, capped at (L-1)/2."""
    return min(cfg.half, int(math.floor(cfg.n / 2e-3)) + 1)


def _fock_quartic(psi: FockState):
    """Q(A,B,C,D) = <a+_A a_B a+_C a_D> as a Gram matrix over hopped vectors."""
    fb = psi.basis
    phi = psi.momentum_amplitudes()
    V = psi.cfg.V
    hopped = np.empty((V, V, fb.dim), dtype=complex)
    for C in range(V):
        for D in range(V):
            hopped[C, D] = fb.hop(C, D, phi)
    flat = hopped.reshape(V * V, fb.dim)
    return (flat.conj() @ flat.T).reshape(V, V, V, V)  # [B, A, C, D]


def time_average_spectral(state, c, tau: float, m_cut: int | None = None,
                          backend=None) -> SpectralAverage:
    """[<(Delta rho_c)^2>]_tau as a tent-weighted sum over pairs of level differences."""
    cfg = state.cfg
    if m_cut is None:
        m_cut = default_m_cut(cfg)
    if m_cut <= 0:
        raise ValueError("m_cut must be positive")
    m_cut = min(int(m_cut), cfg.half)
    c = canonical(np.asarray(c).reshape(-1), cfg.L)
    a, b, freq, coef = _pair_table(cfg, c, m_cut)
    if isinstance(state, SlaterState):
        order = np.argsort(freq, kind="stable")
        impl = backend if backend is not None else kernels
        total = impl.tent_pair_sum(freq[order], a[order], b[order], coef[order],
                                   momentum_correlation(state), tau)
    elif isinstance(state, FockState):
        Q = _fock_quartic(state)
        T = tent(freq[:, None] - freq[None, :], tau)
        quart = Q[b[:, None], a[:, None], b[None, :], a[None, :]]
        total = np.sum(T * coef[:, None] * np.conj(coef)[None, :] * quart)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return SpectralAverage(float(np.real(total)), _truncation_bound(cfg, m_cut), m_cut, len(freq))


# -- delta_a and time fractions ----------------------------------------------

def delta_a(a: float, tau: float, L: float, d: int) -> float:
    """(log(tau/L)/(tau/L))^a + ((log L)^(2d)/L)^a, defined for tau > L > 1."""
    if not L > 1:
        raise ValueError("L must exceed 1")
    if not tau > L:
        raise ValueError("delta_a needs tau > L")
    r = tau / L
    return (math.log(r) / r) ** a + (math.log(L) ** (2 * d) / L) ** a


@dataclass(frozen=True)
class TimeFractionReport:
    tau: float
    delta: float
    dt: float
    fraction: float
    surrogate: bool
    samples: int


def sample_grid(tau: float, dt: float) -> np.ndarray:
    """Uniform grid on [-tau, tau]; mirror-symmetric whenever the step count is even."""
    n = int(round(2 * tau / dt))
    if n % 2:
        return np.linspace(-tau, tau, n + 1)
    h = np.linspace(0.0, tau, n // 2 + 1)
    return np.concatenate([-h[:0:-1], h])


def _real_initial_state(state) -> bool:
    data = state.amplitudes if isinstance(state, FockState) else state.orbitals
    return not np.any(np.imag(data))


def _signal(state, times):
    if isinstance(state, FockState):
        return p_neq_trajectory(state, times), False
    cfg = state.cfg
    _, sq = box_moments(state, times)
    return sq.sum(axis=1) / (cfg.epsilon * cfg.rho_bar) ** 2, True


def noneq_signal(state, times) -> tuple[np.ndarray, bool]:
    """<P_neq>(t) for Fock states, the box-fluctuation surrogate for Slater states.

    A real initial state evolves under the real hopping matrix as
    psi(-t) = conj(psi(t)), so every box observable is even in t; on a
    symmetric grid only t >= 0 is evaluated.
    """
    times = np.asarray(times, dtype=float)
    if len(times) > 2 and np.array_equal(times, -times[::-1]) and _real_initial_state(state):
        half = len(times) // 2
        X, surrogate = _signal(state, times[half:])
        return np.concatenate([X[1:][::-1] if len(times) % 2 else X[::-1], X]), surrogate
    return _signal(state, times)


def noneq_fraction(state, tau: float, delta: float, dt: float | None = None) -> TimeFractionReport:
    if dt is None:
        dt = tau / 1e4
    if dt > tau / 1e3 * (1 + 1e-12):
        raise ValueError("dt must not exceed tau/1000")
    times = sample_grid(tau, dt)
    X, surrogate = noneq_signal(state, times)
    return TimeFractionReport(tau, delta, dt, float(np.mean(X > delta)), surrogate, len(times))
