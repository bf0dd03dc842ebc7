import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermieq import ConfigError, derive, dispersion
from fermieq.lattice import box_side_for, canonical, largest_odd_at_most


def test_derive_d1_divisible():
    cfg = derive(1, 9, 3, 1 / 3, 0.1)
    assert (cfg.V, cfg.N, cfg.n) == (9, 3, 3)
    assert sorted(cfg.centers.ravel().tolist()) == [-3, 0, 3]


def test_derive_d2():
    cfg = derive(2, 9, 3, 1 / 3, 0.1)
    assert (cfg.V, cfg.N, cfg.n) == (81, 27, 3)
    assert len(cfg.centers) == 9


def test_derive_overlapping():
    cfg = derive(1, 15, 7, 0.4, 0.1)
    # brute force over N
    assert cfg.N == max(N for N in range(16) if N / 15 <= 0.4) == 6
    assert cfg.n == 3


@pytest.mark.parametrize("args", [
    (1, 8, 3, 0.5, 0.1),   # even L
    (1, 9, 2, 0.5, 0.1),   # even l
    (1, 9, 11, 0.5, 0.1),  # l > L
    (1, 9, 3, 0.05, 0.1),  # N = 0
    (1, 9, 3, 0.5, 1.0),   # epsilon out of range
    (0, 9, 3, 0.5, 0.1),
])
def test_derive_rejects(args):
    with pytest.raises(ConfigError):
        derive(*args)


def test_density_bracket():
    for rho in (0.1, 1 / 3, 0.37, 0.5, 1.0):
        cfg = derive(1, 101, 11, rho, 0.2)
        assert cfg.N / cfg.V <= rho + 1e-12 < (cfg.N + 1) / cfg.V


def test_dispersion_values():
    assert dispersion(0, derive(1, 7, 1, 0.5, 0.1)) == 2.0
    assert dispersion([0, 0], derive(2, 7, 1, 0.5, 0.1)) == 4.0
    assert dispersion(2, derive(1, 5, 1, 0.5, 0.1)) == pytest.approx(-1.6180339887498948, abs=1e-14)
    with pytest.raises(ValueError):
        dispersion(3, derive(1, 5, 1, 0.5, 0.1))


def test_dispersion_symmetric_and_bounded():
    cfg = derive(2, 11, 3, 0.5, 0.1)
    k = cfg.coords
    assert np.allclose(dispersion(k, cfg), dispersion(-k, cfg))
    assert np.all(np.abs(cfg.energies) <= 2 * cfg.d)


def test_boxes_divisible(small):
    assert small.box([0]).tolist() == small.flat_index([[-1], [0], [1]]).tolist()
    cover = np.zeros(small.V, int)
    for _, sites in small.boxes:
        cover[sites] += 1
    assert np.all(cover == 1)


def test_boxes_overlap():
    cfg = derive(1, 15, 7, 0.4, 0.1)
    cover = np.zeros(cfg.V, int)
    for _, sites in cfg.boxes:
        assert len(sites) == 7
        cover[sites] += 1
    assert np.all(cover >= 1)
    assert np.sum(cover == 2) == 21 - 15


def test_box_cardinality_d3():
    cfg = derive(3, 7, 3, 0.5, 0.1)
    assert len(cfg.boxes) == 27
    assert all(len(s) == 27 for _, s in cfg.boxes)


@given(st.integers(-50, 50), st.sampled_from([3, 5, 9, 11]), st.integers(-3, 3))
def test_canonical_periodic(x, L, shift):
    a = canonical(np.array([x]), L)
    b = canonical(np.array([x + shift * L]), L)
    assert a == b and abs(int(a[0])) < L / 2


def test_flat_index_bijective():
    cfg = derive(2, 5, 1, 0.5, 0.1)
    assert sorted(cfg.flat_index(cfg.coords).tolist()) == list(range(cfg.V))


@pytest.mark.parametrize("L,n", [(201, 3), (10001, 5), (20001, 3), (40001, 5), (31, 3)])
def test_box_side_for(L, n):
    l = box_side_for(L, n)
    assert l % 2 == 1 and math.ceil(L / l) == n
    assert l == 1 or math.ceil(L / (l - 2)) != n


def test_largest_odd():
    assert largest_odd_at_most(67) == 67
    assert largest_odd_at_most(133.67) == 133
    assert largest_odd_at_most(8) == 7
