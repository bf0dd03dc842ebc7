import numpy as np
import pytest
from scipy.linalg import expm

from fermieq import derive
from fermieq.fockspace import basis, hopping_matrix
from fermieq.kernels import backends


def site_hamiltonian(cfg):
    """Nearest-neighbour hopping on the periodic lattice, built from coordinates."""
    x = cfg.coords
    h = np.zeros((cfg.V, cfg.V))
    for mu in range(cfg.d):
        step = np.zeros(cfg.d, dtype=int)
        step[mu] = 1
        for s in (step, -step):
            h[np.arange(cfg.V), cfg.flat_index(x + s)] = 1.0
    return h


def expm_evolve(cfg, amplitudes, t):
    """Brute-force e^{-iHt} on the full many-body matrix."""
    fb = basis(cfg.V, cfg.N)
    H = hopping_matrix(fb, site_hamiltonian(cfg))
    return expm(-1j * t * H) @ amplitudes


@pytest.fixture
def small():
    return derive(1, 9, 3, 1 / 3, 0.5)


@pytest.fixture(params=sorted(backends()))
def backend(request):
    return backends()[request.param]
