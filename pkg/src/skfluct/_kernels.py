"""Numba enumeration kernels.

Conventions shared by every kernel: bit ``i`` of a mask set means spin ``i`` is
+1, the walk starts at mask 0 (all spins -1) and step ``k -> k+1`` flips the bit
at position ``ctz(k+1)`` (binary-reflected Gray code).

Log-sum-exp uses a running maximum that is rescaled lazily: accumulators are
only renormalised when an exponent exceeds the current reference by more than
``_LAZY``. Terms are then bounded by ``exp(_LAZY)`` which cannot overflow for
the sizes we allow, and rescales become rare along correlated Gray paths.
"""

import numpy as np
from numba import njit

_LAZY = 32.0


@njit(cache=True, nogil=True)
def ctz(x):
    b = 0
    while (x & 1) == 0:
        x >>= 1
        b += 1
    return b


@njit(cache=True, nogil=True)
def gray_masks(n):
    total = 1 << n
    out = np.empty(total, dtype=np.int64)
    mask = 0
    for step in range(total):
        out[step] = mask
        if step + 1 < total:
            mask ^= 1 << ctz(step + 1)
    return out


@njit(cache=True, nogil=True)
def _initial_energy(j, diag_sum):
    # all spins -1, so every s_a s_b = +1
    n = j.shape[0]
    e = diag_sum
    for a in range(n):
        for b in range(a + 1, n):
            e += j[a, b]
    return e


@njit(cache=True, nogil=True)
def energies_by_mask(j, diag_sum):
    """Energy ``H`` (normalised by sqrt(n)) of every configuration, indexed by mask."""
    n = j.shape[0]
    total = 1 << n
    scale = 1.0 / np.sqrt(n)
    out = np.empty(total)
    s = -np.ones(n)
    e = _initial_energy(j, diag_sum)
    mask = 0
    for step in range(total):
        out[mask] = e * scale
        if step + 1 < total:
            k = ctz(step + 1)
            h = 0.0
            for i in range(n):
                h += j[k, i] * s[i]
            e -= 2.0 * s[k] * h
            s[k] = -s[k]
            mask ^= 1 << k
    return out


@njit(cache=True, nogil=True)
def gibbs_gray(j, diag_sum, beta, want_corr):
    """Single-system enumeration.

    Returns ``(log_z, corr_upper, mean_energy)`` where ``corr_upper`` holds the
    Kahan-summed ``<s_a s_b>`` for ``a < b`` in row-major order.
    """
    n = j.shape[0]
    total = 1 << n
    scale = beta / np.sqrt(n)
    npair = n * (n - 1) // 2
    s = -np.ones(n)
    e = _initial_energy(j, diag_sum)

    m = scale * e
    z = 0.0
    zc = 0.0
    en = 0.0
    enc = 0.0
    c = np.zeros(npair)
    cc = np.zeros(npair)

    for step in range(total):
        x = scale * e
        if x > m + _LAZY:
            f = np.exp(m - x)
            z *= f
            zc *= f
            en *= f
            enc *= f
            for p in range(npair):
                c[p] *= f
                cc[p] *= f
            m = x
        w = np.exp(x - m)

        y = w - zc
        t = z + y
        zc = (t - z) - y
        z = t

        y = w * e - enc
        t = en + y
        enc = (t - en) - y
        en = t

        if want_corr:
            p = 0
            for a in range(n):
                wa = w * s[a]
                for b in range(a + 1, n):
                    y = wa * s[b] - cc[p]
                    t = c[p] + y
                    cc[p] = (t - c[p]) - y
                    c[p] = t
                    p += 1

        if step + 1 < total:
            k = ctz(step + 1)
            h = 0.0
            for i in range(n):
                h += j[k, i] * s[i]
            e -= 2.0 * s[k] * h
            s[k] = -s[k]

    for p in range(npair):
        c[p] /= z
    return m + np.log(z), c, en / z / np.sqrt(n)


@njit(cache=True, nogil=True)
def coupled_gray(e1, e2, n, beta, coef):
    """Two-replica enumeration over all ``4**n`` pairs.

    ``e1``/``e2`` are the per-mask energies of the two replicas and ``coef``
    multiplies ``d**2`` where ``d = n R`` is the integer overlap dot product,
    maintained by ±2 updates and never accumulated in floating point.

    Returns ``(log_z, r2, p_sigma, p_rho)`` with the two marginal laws indexed
    by mask.
    """
    total = 1 << n
    s = -np.ones(n, dtype=np.int64)
    r = -np.ones(n, dtype=np.int64)
    d = n
    smask = 0
    rmask = 0

    m = beta * (e1[0] + e2[0]) + coef * d * d
    z = 0.0
    zc = 0.0
    q = 0.0
    qc = 0.0
    p1 = np.zeros(total)
    p2 = np.zeros(total)

    for sa in range(total):
        base = beta * e1[smask]
        row = 0.0
        for rb in range(total):
            x = base + beta * e2[rmask] + coef * (d * d)
            if x > m + _LAZY:
                f = np.exp(m - x)
                z *= f
                zc *= f
                q *= f
                qc *= f
                row *= f
                for i in range(total):
                    p1[i] *= f
                    p2[i] *= f
                m = x
            w = np.exp(x - m)
            row += w
            p2[rmask] += w

            y = w * (d * d) - qc
            t = q + y
            qc = (t - q) - y
            q = t

            if rb + 1 < total:
                k = ctz(rb + 1)
                r[k] = -r[k]
                d += 2 * s[k] * r[k]
                rmask ^= 1 << k

        # the inner walk ends one flip (bit n-1) away from its start
        k = n - 1
        r[k] = -r[k]
        d += 2 * s[k] * r[k]
        rmask ^= 1 << k

        p1[smask] += row
        y = row - zc
        t = z + y
        zc = (t - z) - y
        z = t

        if sa + 1 < total:
            k = ctz(sa + 1)
            s[k] = -s[k]
            d += 2 * s[k] * r[k]
            smask ^= 1 << k

    for i in range(total):
        p1[i] /= z
        p2[i] /= z
    return m + np.log(z), q / z / (n * n), p1, p2
