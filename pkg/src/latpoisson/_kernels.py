"""Compiled inner loops: Gram-Schmidt, LLL, Fincke-Pohst enumeration, SL_n walk.

Bases are stored column-wise (``B[:, i]`` is the i-th basis vector).
"""

import numpy as np
from numba import njit

WALK_OK = -1
DET_TOL = 1e-6


@njit(cache=True)
def gram_schmidt(B):
    n = B.shape[1]
    Bt = np.ascontiguousarray(B.T)
    Bs = np.zeros_like(Bt)
    mu = np.eye(n)
    bb = np.zeros(n)
    for i in range(n):
        v = Bt[i].copy()
        for j in range(i):
            mu[i, j] = np.dot(Bt[i], Bs[j]) / bb[j]
            v -= mu[i, j] * Bs[j]
        Bs[i] = v
        bb[i] = np.dot(v, v)
    return Bs.T, mu, bb


@njit(cache=True)
def lll(B, delta):
    """Returns (reduced basis, integer transform U) with reduced = B @ U.

    det(U) = +1: an odd number of swaps is compensated by negating the last
    column, which keeps the reduction conditions intact.
    """
    B = B.copy()
    n = B.shape[1]
    U = np.eye(n, dtype=np.int64)
    Bs, mu, bb = gram_schmidt(B)
    k = 1
    flips = 0
    guard = 0
    while k < n:
        guard += 1
        if guard > 100000:
            break
        for j in range(k - 1, -1, -1):
            q = np.rint(mu[k, j])
            if q != 0.0:
                qi = np.int64(q)
                B[:, k] -= q * B[:, j]
                U[:, k] -= qi * U[:, j]
                for l in range(j):
                    mu[k, l] -= q * mu[j, l]
                mu[k, j] -= q
        if bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            for r in range(B.shape[0]):
                t = B[r, k]
                B[r, k] = B[r, k - 1]
                B[r, k - 1] = t
            for r in range(n):
                ti = U[r, k]
                U[r, k] = U[r, k - 1]
                U[r, k - 1] = ti
            flips += 1
            Bs, mu, bb = gram_schmidt(B)
            k = max(k - 1, 1)
    if flips % 2 == 1:
        B[:, n - 1] = -B[:, n - 1]
        U[:, n - 1] = -U[:, n - 1]
    return B, U


@njit(cache=True)
def det(A):
    n = A.shape[0]
    M = A.copy()
    d = 1.0
    for c in range(n):
        p = c
        big = abs(M[c, c])
        for r in range(c + 1, n):
            if abs(M[r, c]) > big:
                big = abs(M[r, c])
                p = r
        if big == 0.0:
            return 0.0
        if p != c:
            for j in range(n):
                t = M[c, j]
                M[c, j] = M[p, j]
                M[p, j] = t
            d = -d
        d *= M[c, c]
        for r in range(c + 1, n):
            f = M[r, c] / M[c, c]
            for j in range(c, n):
                M[r, j] -= f * M[c, j]
    return d


@njit(cache=True)
def _lex_less(a, b):
    for i in range(a.shape[0]):
        if a[i] < b[i]:
            return True
        if a[i] > b[i]:
            return False
    return False


@njit(cache=True)
def enumerate_ball(B, radius, cap, delta):
    """All nonzero c with |B c| <= radius, coefficients w.r.t. B, lexicographic.

    Returns (coeffs, coords, count); count == -1 signals the cap was exceeded.
    """
    n = B.shape[1]
    R, U = lll(B, delta)
    _, mu, bb = gram_schmidt(R)
    r2 = radius * radius
    bound = r2 * (1.0 + 1e-9) + 1e-12
    size = 16
    coeffs = np.zeros((size, n), dtype=np.int64)
    coords = np.zeros((size, B.shape[0]))
    count = 0
    c = np.zeros(n, dtype=np.int64)
    hi = np.zeros(n, dtype=np.int64)
    center = np.zeros(n)
    partial = np.zeros(n + 1)
    level = n - 1
    rem = bound
    half = np.sqrt(rem / bb[level])
    c[level] = np.int64(np.ceil(-half))
    hi[level] = np.int64(np.floor(half))
    while True:
        if c[level] > hi[level]:
            level += 1
            if level == n:
                break
            c[level] += 1
            continue
        d = c[level] - center[level]
        partial[level] = partial[level + 1] + bb[level] * d * d
        if level == 0:
            nonzero = False
            for i in range(n):
                if c[i] != 0:
                    nonzero = True
                    break
            if nonzero:
                x = np.zeros(R.shape[0])
                for q in range(n):
                    if c[q] != 0:
                        x += c[q] * R[:, q]
                if np.dot(x, x) <= r2:
                    if count >= cap:
                        return coeffs[:0], coords[:0], -1
                    if count == size:
                        size *= 2
                        nc = np.zeros((size, n), dtype=np.int64)
                        nx = np.zeros((size, B.shape[0]))
                        nc[:count] = coeffs[:count]
                        nx[:count] = coords[:count]
                        coeffs = nc
                        coords = nx
                    for r in range(n):
                        acc = np.int64(0)
                        for q in range(n):
                            acc += U[r, q] * c[q]
                        coeffs[count, r] = acc
                    coords[count] = x
                    count += 1
            c[0] += 1
            continue
        level -= 1
        s = 0.0
        for j in range(level + 1, n):
            s += mu[j, level] * c[j]
        center[level] = -s
        rem = bound - partial[level + 1]
        if rem < 0.0:
            rem = 0.0
        half = np.sqrt(rem / bb[level])
        c[level] = np.int64(np.ceil(center[level] - half))
        hi[level] = np.int64(np.floor(center[level] + half))
    # insertion sort: point counts are small
    for i in range(1, count):
        j = i
        while j > 0 and _lex_less(coeffs[j], coeffs[j - 1]):
            tc = coeffs[j].copy()
            coeffs[j] = coeffs[j - 1]
            coeffs[j - 1] = tc
            tx = coords[j].copy()
            coords[j] = coords[j - 1]
            coords[j - 1] = tx
            j -= 1
    return coeffs[:count], coords[:count], count


@njit(cache=True)
def enumerate_batch(bases, radius, cap, delta):
    """Enumeration over a stack of bases; CSR output (offsets, coeffs, coords).

    Returns index of the first lattice that overflowed ``cap`` or -1.
    """
    T = bases.shape[0]
    n = bases.shape[2]
    offsets = np.zeros(T + 1, dtype=np.int64)
    size = max(16, 4 * T)
    all_c = np.zeros((size, n), dtype=np.int64)
    all_x = np.zeros((size, n))
    total = 0
    for t in range(T):
        cc, xx, m = enumerate_ball(bases[t], radius, cap, delta)
        if m < 0:
            return offsets, all_c[:total], all_x[:total], t
        if total + m > size:
            while total + m > size:
                size *= 2
            nc = np.zeros((size, n), dtype=np.int64)
            nx = np.zeros((size, n))
            nc[:total] = all_c[:total]
            nx[:total] = all_x[:total]
            all_c = nc
            all_x = nx
        all_c[total:total + m] = cc
        all_x[total:total + m] = xx
        total += m
        offsets[t + 1] = total
    return offsets, all_c[:total], all_x[:total], -1


@njit(cache=True)
def walk(B, z, burnin, thin, nout, reduce_every, delta, scale):
    """Random walk L -> g L on covolume-one lattices.

    Step s reads row ``z[s]`` of 2n+1 standard normals. The first 2n give a
    uniformly random orthonormal pair (u, v), i.e. a random rotation k with
    u = k e_1, v = k e_2; the last gives t = scale * z. The step applies the
    rotated elementary shear ``k E_12(t) k^-1 = I + t u v^T``, which has
    determinant one. The basis is renormalised to determinant one after
    every step and LLL-reduced every ``reduce_every`` steps and at outputs.

    Returns (outputs, final basis, status); status is the failing step index
    when the determinant drifted past DET_TOL, else WALK_OK.
    """
    n = B.shape[0]
    B = B.copy()
    out = np.empty((nout, n, n))
    total = burnin + thin * nout
    k = 0
    inv_n = 1.0 / n
    w = np.zeros(n)
    for s in range(total):
        u = z[s, :n].copy()
        u /= np.sqrt(np.dot(u, u))
        v = z[s, n:2 * n].copy()
        v -= np.dot(v, u) * u
        v /= np.sqrt(np.dot(v, v))
        t = scale * z[s, 2 * n]
        for c in range(n):
            acc = 0.0
            for r in range(n):
                acc += v[r] * B[r, c]
            w[c] = t * acc
        for r in range(n):
            for c in range(n):
                B[r, c] += u[r] * w[c]
        d = det(B)
        if not abs(d - 1.0) <= DET_TOL:
            return out[:k], B, s
        B /= d ** inv_n
        emit = s + 1 > burnin and (s + 1 - burnin) % thin == 0
        if emit or (s + 1) % reduce_every == 0:
            B, _ = lll(B, delta)
        if emit:
            out[k] = B
            k += 1
    return out, B, WALK_OK
