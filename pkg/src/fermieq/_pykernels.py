"""Pure numpy implementations of the hot kernels (fallback for ``_ckernels``)."""

import numpy as np

_CHUNK = 1 << 21


def window_profile_integrals(levels, halfwidth):
    """Integrals of the window count ``E -> #{i : |E - levels[i]| < halfwidth}``.

    ``levels`` must be sorted.  Returns ``(int count dE, int count**2 dE)``.
    """
    s = np.ascontiguousarray(levels, dtype=np.float64)
    K = s.shape[0]
    if K == 0:
        return 0.0, 0.0
    pos = np.concatenate([s - halfwidth, s + halfwidth])
    step = np.concatenate([np.ones(K, np.int64), -np.ones(K, np.int64)])
    # both halves are already sorted, so the stable sort is a linear merge
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    counts = np.cumsum(step[order])[:-1].astype(np.float64)
    width = np.diff(pos)
    return float(np.dot(counts, width)), float(np.dot(counts * counts, width))


def tent_pair_sum(freq, a_idx, b_idx, coef, gamma, tau):
    """Sum over pairs (p, q) of tent(f_p - f_q) * c_p * conj(c_q) * W_pq.

    ``W_pq = G[a_p, b_p] conj(G[a_q, b_q]) + G[a_p, a_q] (delta(b_p, b_q) - G[b_q, b_p])``
    is the Wick contraction of <a+_{a_p} a_{b_p} a+_{b_q} a_{a_q}> for a
    Gaussian state with ``G[i, j] = <a+_i a_j>``.  ``freq`` must be sorted.
    """
    f = np.ascontiguousarray(freq, dtype=np.float64)
    a = np.ascontiguousarray(a_idx, dtype=np.int64)
    b = np.ascontiguousarray(b_idx, dtype=np.int64)
    c = np.ascontiguousarray(coef, dtype=np.complex128)
    G = np.ascontiguousarray(gamma, dtype=np.complex128)
    P = f.shape[0]
    width = 2.0 / tau
    u = c * G[a, b]
    hi = np.searchsorted(f, f + width, side="left")
    lo = np.searchsorted(f, f - width, side="right")
    total = 0.0 + 0.0j
    start = 0
    while start < P:
        # grow the block of p's until its pair count reaches the chunk size
        cum = np.cumsum(hi[start:] - lo[start:])
        stop = start + max(1, int(np.searchsorted(cum, _CHUNK, side="right")))
        stop = min(stop, P)
        ps = np.arange(start, stop)
        cnt = hi[ps] - lo[ps]
        p = np.repeat(ps, cnt)
        offs = np.arange(p.shape[0]) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        q = lo[p] + offs
        t = 1.0 - np.abs(f[p] - f[q]) * (tau / 2.0)
        np.maximum(t, 0.0, out=t)
        w = u[p] * np.conj(u[q])
        w = w + c[p] * np.conj(c[q]) * G[a[p], a[q]] * ((b[p] == b[q]) - G[b[q], b[p]])
        total += np.dot(t, w)
        start = stop
    return complex(total)
