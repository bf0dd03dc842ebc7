"""Fixed-particle-number Fock space on bitmask occupation states.

Mode ``k`` is bit ``k``.  A basis state ``S = {s1 < s2 < ... < sN}`` stands for
``c+_{s1} c+_{s2} ... c+_{sN}|vac>``.  Single-particle unitaries are lifted to
the many-body space through an adjacent-mode Givens factorization, so no
determinant table is ever formed.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

DEFAULT_CAPACITY = 1_000_000


class CapacityError(RuntimeError):
    """Requested Fock space dimension exceeds the configured cap."""


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


class FockBasis:
    """Sorted N-particle bitmask basis over V modes with cached index tables."""

    def __init__(self, V: int, N: int, capacity: int = DEFAULT_CAPACITY):
        if V > 62:
            raise CapacityError(f"V={V} modes do not fit a 64-bit mask")
        dim = comb(V, N)
        if dim > capacity:
            raise CapacityError(f"C({V},{N}) = {dim} exceeds capacity {capacity}")
        self.V, self.N, self.dim = V, N, dim
        masks = np.fromiter(
            (sum(1 << k for k in c) for c in combinations(range(V), N)),
            dtype=np.int64, count=dim,
        )
        masks.sort()
        self.masks = masks
        self._pairs: dict[int, tuple] = {}
        self._occupied: dict[int, np.ndarray] = {}

    def index(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        idx = np.searchsorted(self.masks, masks)
        if np.any(idx >= self.dim) or np.any(self.masks[np.minimum(idx, self.dim - 1)] != masks):
            raise KeyError("mask not in basis")
        return idx

    def occupation(self) -> np.ndarray:
        """(dim, V) boolean occupation table."""
        bits = 1 << np.arange(self.V, dtype=np.int64)
        return (self.masks[:, None] & bits[None, :]) != 0

    def occupied(self, k: int) -> np.ndarray:
        if k not in self._occupied:
            self._occupied[k] = np.nonzero(self.masks & (1 << k))[0]
        return self._occupied[k]

    def adjacent(self, k: int):
        """Index tables for modes (k, k+1): (only k, partner with only k+1, both)."""
        if k not in self._pairs:
            bk, bk1 = 1 << k, 1 << (k + 1)
            has_k = (self.masks & bk) != 0
            has_k1 = (self.masks & bk1) != 0
            only_k = np.nonzero(has_k & ~has_k1)[0]
            partner = self.index(self.masks[only_k] ^ (bk | bk1))
            both = np.nonzero(has_k & has_k1)[0]
            self._pairs[k] = (only_k, partner, both)
        return self._pairs[k]

    def hop(self, i: int, j: int, vec: np.ndarray) -> np.ndarray:
        """Apply c+_i c_j to ``vec`` (first axis indexes the basis)."""
        out = np.zeros_like(vec)
        bi, bj = 1 << i, 1 << j
        if i == j:
            src = self.occupied(j)
            out[src] = vec[src]
            return out
        src = np.nonzero((self.masks & bj) != 0)[0]
        src = src[(self.masks[src] & bi) == 0]
        new = (self.masks[src] ^ bj) | bi
        lo, hi = min(i, j), max(i, j)
        between = ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)
        sign = 1 - 2 * (_popcount(self.masks[src] & between) % 2)
        dst = self.index(new)
        shape = (-1,) + (1,) * (vec.ndim - 1)
        out[dst] = sign.reshape(shape) * vec[src]
        return out


@lru_cache(maxsize=32)
def basis(V: int, N: int, capacity: int = DEFAULT_CAPACITY) -> FockBasis:
    return FockBasis(V, N, capacity)


def givens_factor(U: np.ndarray):
    """Factor a unitary as ``U = R_1 R_2 ... R_K D`` with adjacent-mode rotations.

    Returns ``(rotations, diag)`` where each rotation is ``(k, block)`` acting on
    modes ``(k, k+1)`` with a 2x2 unitary ``block``.
    """
    W = np.array(U, dtype=complex)
    V = W.shape[0]
    rotations = []
    for j in range(V - 1):
        for r in range(V - 1, j, -1):
            a, b = W[r - 1, j], W[r, j]
            if b == 0:
                continue
            nu = np.hypot(abs(a), abs(b))
            g = np.array([[a.conjugate(), b.conjugate()], [-b, a]]) / nu
            W[[r - 1, r], :] = g @ W[[r - 1, r], :]
            rotations.append((r - 1, g.conj().T))
    diag = np.diag(W).copy()
    return rotations, diag


def lift(fb: FockBasis, factor, vec: np.ndarray) -> np.ndarray:
    """Apply the Fock-space image of a factored single-particle unitary to ``vec``."""
    rotations, diag = factor
    out = np.array(vec, dtype=complex, copy=True)
    for k in range(fb.V):
        if diag[k] != 1:
            out[fb.occupied(k)] *= diag[k]
    for k, g in reversed(rotations):
        only_k, partner, both = fb.adjacent(k)
        a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
        xa = out[only_k]
        xb = out[partner]
        out[only_k] = a * xa + b * xb
        out[partner] = c * xa + d * xb
        if len(both):
            out[both] *= a * d - b * c
    return out


def slater_amplitudes(fb: FockBasis, orbitals: np.ndarray) -> np.ndarray:
    """Occupation-basis amplitudes of a Slater determinant: det of the occupied rows."""
    occ = fb.occupation()
    rows = np.nonzero(occ)[1].reshape(fb.dim, fb.N)
    return np.linalg.det(orbitals[rows, :])


def hopping_matrix(fb: FockBasis, h: np.ndarray) -> np.ndarray:
    """Dense many-body matrix of sum_ij h_ij c+_i c_j (small systems only)."""
    H = np.zeros((fb.dim, fb.dim), dtype=complex)
    eye = np.eye(fb.dim)
    for i in range(fb.V):
        for j in range(fb.V):
            if h[i, j] != 0:
                H += h[i, j] * fb.hop(i, j, eye)
    return H
