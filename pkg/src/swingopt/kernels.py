"""Hot numeric kernels, in two lanes.

Every kernel has a pure-numpy implementation (``*_np``) and, when numba is
available, a jitted twin (``*_nb``). The public names dispatch on the lane
selected in :mod:`swingopt.backend`. Algorithms are identical across lanes;
within a lane results are independent of thread count (parallel loops only
fill per-path slots, reductions happen in numpy afterwards).

Kernels:

* counter-based Philox4x32-10 streams -> uniforms / Box-Muller normals
* monotone-cubic (PCHIP) slope construction and evaluation
* implicit finite-difference stepping for the forward call-price PDE
* Euler path simulation of the normalized spot
* LSMC backward maximization and forward policy walk
"""

from __future__ import annotations

import math

import numpy as np

from .backend import USE_NUMBA

_M32 = np.uint64(0xFFFFFFFF)
_PHILOX_M0 = np.uint64(0xD2511F53)
_PHILOX_M1 = np.uint64(0xCD9E8D57)
_PHILOX_W0 = np.uint64(0x9E3779B9)
_PHILOX_W1 = np.uint64(0xBB67AE85)
_INV53 = float(2.0 ** -53)
_TWOPI = 2.0 * np.pi

# ---------------------------------------------------------------------------
# Philox4x32-10 counter-based RNG
#
# Block layout: counter = (draw_lo, draw_hi, path_lo, path_hi),
# key = (seed_lo, seed_hi ^ stream). One block -> two uint64 words -> one
# uniform pair -> one normal (Box-Muller cosine branch) or two uniforms.
# ---------------------------------------------------------------------------


def _philox_block_np(c0, c1, c2, c3, k0, k1):
    """One 10-round Philox4x32 pass over parallel uint64 arrays (32-bit values)."""
    for _ in range(10):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        hi0, lo0 = p0 >> np.uint64(32), p0 & _M32
        hi1, lo1 = p1 >> np.uint64(32), p1 & _M32
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        k0 = (k0 + _PHILOX_W0) & _M32
        k1 = (k1 + _PHILOX_W1) & _M32
    return c0, c1, c2, c3


def _philox_words_np(seed_lo, seed_hi, stream, path0, n_paths, n_draws):
    """uint64 word pair per (path, draw); shape (n_paths, n_draws) each."""
    paths = np.arange(path0, path0 + n_paths, dtype=np.uint64)[:, None]
    draws = np.arange(n_draws, dtype=np.uint64)[None, :]
    c0 = np.broadcast_to(draws & _M32, (n_paths, n_draws)).copy()
    c1 = np.broadcast_to(draws >> np.uint64(32), (n_paths, n_draws)).copy()
    c2 = np.broadcast_to(paths & _M32, (n_paths, n_draws)).copy()
    c3 = np.broadcast_to(paths >> np.uint64(32), (n_paths, n_draws)).copy()
    k0 = np.full((n_paths, n_draws), np.uint64(seed_lo) & _M32, dtype=np.uint64)
    k1 = np.full((n_paths, n_draws), (np.uint64(seed_hi) ^ np.uint64(stream)) & _M32, dtype=np.uint64)
    x0, x1, x2, x3 = _philox_block_np(c0, c1, c2, c3, k0, k1)
    w0 = (x0 << np.uint64(32)) | x1
    w1 = (x2 << np.uint64(32)) | x3
    return w0, w1


def _to_open_unit(w):
    # uint64 -> double in (0,1): 53 mantissa bits, offset half-ulp away from 0
    return ((w >> np.uint64(11)).astype(np.float64) + 0.5) * _INV53


def philox_normals_np(seed_lo, seed_hi, stream, path0, n_paths, n_draws):
    out = np.empty((n_paths, n_draws), dtype=np.float64)
    # slab over draws to bound transient memory on large path blocks
    slab = max(1, int(4e6) // max(n_paths, 1))
    for j0 in range(0, n_draws, slab):
        j1 = min(n_draws, j0 + slab)
        paths = np.arange(path0, path0 + n_paths, dtype=np.uint64)[:, None]
        draws = np.arange(j0, j1, dtype=np.uint64)[None, :]
        shape = (n_paths, j1 - j0)
        c0 = np.broadcast_to(draws & _M32, shape).copy()
        c1 = np.broadcast_to(draws >> np.uint64(32), shape).copy()
        c2 = np.broadcast_to(paths & _M32, shape).copy()
        c3 = np.broadcast_to(paths >> np.uint64(32), shape).copy()
        k0 = np.full(shape, np.uint64(seed_lo) & _M32, dtype=np.uint64)
        k1 = np.full(shape, (np.uint64(seed_hi) ^ np.uint64(stream)) & _M32, dtype=np.uint64)
        x0, x1, x2, x3 = _philox_block_np(c0, c1, c2, c3, k0, k1)
        u1 = _to_open_unit((x0 << np.uint64(32)) | x1)
        u2 = _to_open_unit((x2 << np.uint64(32)) | x3)
        out[:, j0:j1] = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWOPI * u2)
    return out


def philox_uniforms_np(seed_lo, seed_hi, stream, path0, n_paths, n_draws):
    """Two independent uniforms per (path, draw): shape (n_paths, n_draws, 2)."""
    w0, w1 = _philox_words_np(seed_lo, seed_hi, stream, path0, n_paths, n_draws)
    return np.stack([_to_open_unit(w0), _to_open_unit(w1)], axis=-1)


# ---------------------------------------------------------------------------
# PCHIP slopes (Fritsch-Carlson, same construction scipy uses)
# ---------------------------------------------------------------------------


def pchip_slopes(x, y):
    """Knot derivatives for a monotone cubic interpolant through (x, y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n == 1:
        return np.zeros(1)
    h = np.diff(x)
    m = np.diff(y) / h
    if n == 2:
        return np.array([m[0], m[0]])
    d = np.zeros(n)
    w1 = 2.0 * h[1:] + h[:-1]
    w2 = h[1:] + 2.0 * h[:-1]
    prod = m[:-1] * m[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        whmean = (w1 + w2) / (w1 / m[:-1] + w2 / m[1:])
    d[1:-1] = np.where(prod > 0.0, whmean, 0.0)
    d[0] = _pchip_edge(h[0], h[1], m[0], m[1])
    d[-1] = _pchip_edge(h[-1], h[-2], m[-1], m[-2])
    return d


def _pchip_edge(h0, h1, m0, m1):
    d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1)
    if np.sign(d) != np.sign(m0):
        return 0.0
    if np.sign(m0) != np.sign(m1) and abs(d) > 3.0 * abs(m0):
        return 3.0 * m0
    return d


def pchip_eval_np(xk, yk, dk, xq):
    """Hermite evaluation with flat extrapolation; vectorized over xq."""
    xq = np.asarray(xq, dtype=np.float64)
    if xk.size == 1:
        return np.full(xq.shape, yk[0])
    v = np.clip(xq, xk[0], xk[-1])
    i = np.clip(np.searchsorted(xk, v, side="right") - 1, 0, xk.size - 2)
    h = xk[i + 1] - xk[i]
    s = v - xk[i]
    mi = (yk[i + 1] - yk[i]) / h
    c2 = (3.0 * mi - 2.0 * dk[i] - dk[i + 1]) / h
    c3 = (dk[i] + dk[i + 1] - 2.0 * mi) / (h * h)
    return yk[i] + s * (dk[i] + s * (c2 + s * c3))


# ---------------------------------------------------------------------------
# Implicit PDE stepping (backward Euler in t, central/upwinded in k)
# ---------------------------------------------------------------------------


def dupire_solve_np(c0, k, dt, drift, vol2):
    """Solve the forward call-price PDE on a uniform k grid.

    c0:    (J+1,) initial slice
    k:     (J+1,) uniform nodes, k[0]=0
    dt:    scalar step
    drift: (S,) mean-reversion coefficient per step
    vol2:  (S, J+1) squared local vol at nodes per step
    returns (S+1, J+1)
    """
    from scipy.linalg import solve_banded

    J = k.size - 1
    S = drift.shape[0]
    out = np.empty((S + 1, J + 1))
    out[0] = c0
    dk = k[1] - k[0]
    ki = k[1:J]
    cur = c0.copy()
    for n in range(S):
        a = drift[n]
        sig = 0.5 * ki * ki * vol2[n, 1:J]
        w = a * (1.0 - ki)
        diffu = sig / (dk * dk)
        central = np.abs(w) * dk <= 2.0 * sig
        wpos = w >= 0.0
        # central rows
        lo = -diffu - w / (2.0 * dk)
        dgn = a + 2.0 * diffu
        up = -diffu + w / (2.0 * dk)
        # upwinded rows
        lo_u = -diffu - np.where(wpos, w / dk, 0.0)
        dg_u = a + 2.0 * diffu + np.abs(w) / dk
        up_u = -diffu + np.where(wpos, 0.0, w / dk)
        lo = np.where(central, lo, lo_u)
        dgn = np.where(central, dgn, dg_u)
        up = np.where(central, up, up_u)
        ab = np.zeros((3, J + 1))
        ab[1, 0] = 1.0
        ab[1, J] = 1.0
        ab[0, 2 : J + 1] = dt * up
        ab[0, 1] = 0.0
        ab[1, 1:J] = 1.0 + dt * dgn
        ab[2, 0 : J - 1] = dt * lo
        ab[2, J - 1] = 0.0
        rhs = cur.copy()
        rhs[0] = 1.0
        rhs[J] = 0.0
        cur = solve_banded((1, 1), ab, rhs)
        out[n + 1] = cur
    return out


# ---------------------------------------------------------------------------
# numpy-lane Euler simulation
# ---------------------------------------------------------------------------


def euler_paths_np(seed_lo, seed_hi, stream, path0, n_paths, dt_arr, sqdt_arr,
                   a, kx, vol_vals, vol_slopes, slice_idx, rec_idx, floor):
    normals = philox_normals_np(seed_lo, seed_hi, stream, path0, n_paths, dt_arr.shape[0])
    S = dt_arr.shape[0]
    out = np.empty((n_paths, rec_idx.shape[0]))
    s = np.ones(n_paths)
    r = 0
    for n in range(S):
        li = slice_idx[n]
        eta = pchip_eval_np(kx, vol_vals[li], vol_slopes[li], s)
        s = s + a * (1.0 - s) * dt_arr[n] + eta * s * sqdt_arr[n] * normals[:, n]
        s = np.maximum(s, floor)
        if r < rec_idx.shape[0] and rec_idx[r] == n:
            out[:, r] = s
            r += 1
    return out


# ---------------------------------------------------------------------------
# numpy-lane LSMC kernels
# ---------------------------------------------------------------------------


def _poly_eval_np(coeff, muF, sgF, muK, sgK, F, K):
    if coeff.shape[0] == 3:
        z = (F - muF) / sgF
        return coeff[0] + z * (coeff[1] + z * coeff[2])
    zf = (F - muF) / sgF
    zk = (K - muK) / sgK
    return (coeff[0] + coeff[1] * zf + coeff[2] * zk
            + coeff[3] * zf * zf + coeff[4] * zk * zk + coeff[5] * zf * zk)


def lsmc_backward_max_np(coeffs, nbasis, muF, sgF, muK, sgK, F, K, Ci, Cprev,
                         lo, hi, bb_lo, bb_hi, bang, df):
    """One backward maximization sweep; returns W at the previous date's grid."""
    n_prev = Cprev.shape[0]
    P = F.shape[0]
    polyv = np.empty((Ci.shape[0], P))
    for j in range(Ci.shape[0]):
        polyv[j] = _poly_eval_np(coeffs[j, :nbasis], muF, sgF, muK, sgK, F, K)
    payoff = F - K
    W_out = np.full((n_prev, P), -np.inf)
    for l in range(n_prev):
        if bang:
            cand = (bb_lo[l], bb_hi[l]) if bb_hi[l] != bb_lo[l] else (bb_lo[l],)
        else:
            cand = range(lo[l], hi[l] + 1)
        for j in cand:
            v = (Ci[j] - Cprev[l]) * payoff + df * polyv[j]
            np.maximum(W_out[l], v, out=W_out[l])
    return W_out


def lsmc_forward_np(F, K, grids, glen, lo2, hi2, bb_lo2, bb_hi2, bang,
                    coeffs, muF, sgF, muK, sgK, nbasis, df_cont, df_pay,
                    Nm, NM, tol, want_cons):
    """Forward greedy walk under fitted continuation values.

    F: (P, n_f) fixings; K: (P,) strikes. Returns (rewards, cons, extremes,
    violations) where cons is (P, n_f) consumption or a (0,0) array.
    """
    P, n_f = F.shape
    rewards = np.zeros(P)
    cons = np.empty((P, n_f)) if want_cons else np.empty((0, 0))
    extreme = np.zeros(P, dtype=np.int64)
    violations = 0
    lvl = np.zeros(P, dtype=np.int64)
    Ccur = np.zeros(P)
    for i in range(1, n_f + 1):
        gi = grids[i][: glen[i]]
        Fi = F[:, i - 1]
        pay = Fi - K
        if i < n_f:
            polyv = np.empty((glen[i], P))
            for j in range(glen[i]):
                polyv[j] = df_cont[i] * _poly_eval_np(
                    coeffs[i][j, :nbasis], muF[i], sgF[i], muK[i], sgK[i], Fi, K)
        best_val = np.full(P, -np.inf)
        best_j = np.zeros(P, dtype=np.int64)
        # iterate candidate targets ascending; ties resolved to larger consumption
        for l in np.unique(lvl):
            mask = lvl == l
            if bang:
                cand = [bb_lo2[i][l], bb_hi2[i][l]]
                cand = sorted(set(cand))
            else:
                cand = range(lo2[i][l], hi2[i][l] + 1)
            for j in cand:
                v = (gi[j] - Ccur[mask]) * pay[mask]
                if i < n_f:
                    v = v + polyv[j][mask]
                sel = v >= best_val[mask]
                bv = best_val[mask]
                bj = best_j[mask]
                bv[sel] = v[sel]
                bj[sel] = j
                best_val[mask] = bv
                best_j[mask] = bj
        act = grids[i][best_j] - Ccur
        if np.any(act < Nm - tol) or np.any(act > NM + tol):
            violations += int(np.sum((act < Nm - tol) | (act > NM + tol)))
        rewards += act * pay * df_pay[i]
        extreme += ((np.abs(act - Nm) <= 1e-2) | (np.abs(act - NM) <= 1e-2)).astype(np.int64)
        if want_cons:
            cons[:, i - 1] = act
        Ccur = grids[i][best_j]
        lvl = best_j
    return rewards, cons, extreme, violations


# ---------------------------------------------------------------------------
# numba lane
# ---------------------------------------------------------------------------

if USE_NUMBA:
    import numba
    from numba import njit, prange

    @njit(cache=True, inline="always")
    def _philox_one(c0, c1, c2, c3, k0, k1):
        M32 = np.uint64(0xFFFFFFFF)
        M0 = np.uint64(0xD2511F53)
        M1 = np.uint64(0xCD9E8D57)
        W0 = np.uint64(0x9E3779B9)
        W1 = np.uint64(0xBB67AE85)
        for _ in range(10):
            p0 = M0 * c0
            p1 = M1 * c2
            hi0 = p0 >> np.uint64(32)
            lo0 = p0 & M32
            hi1 = p1 >> np.uint64(32)
            lo1 = p1 & M32
            nc0 = hi1 ^ c1 ^ k0
            nc1 = lo1
            nc2 = hi0 ^ c3 ^ k1
            nc3 = lo0
            c0, c1, c2, c3 = nc0, nc1, nc2, nc3
            k0 = (k0 + W0) & M32
            k1 = (k1 + W1) & M32
        return c0, c1, c2, c3

    @njit(cache=True, inline="always")
    def _philox_normal(seed_lo, seed_hi, stream, path, draw):
        M32 = np.uint64(0xFFFFFFFF)
        c0 = np.uint64(draw) & M32
        c1 = np.uint64(draw) >> np.uint64(32)
        c2 = np.uint64(path) & M32
        c3 = np.uint64(path) >> np.uint64(32)
        k0 = np.uint64(seed_lo) & M32
        k1 = (np.uint64(seed_hi) ^ np.uint64(stream)) & M32
        x0, x1, x2, x3 = _philox_one(c0, c1, c2, c3, k0, k1)
        w0 = (x0 << np.uint64(32)) | x1
        w1 = (x2 << np.uint64(32)) | x3
        u1 = (np.float64(w0 >> np.uint64(11)) + 0.5) * (2.0 ** -53)
        u2 = (np.float64(w1 >> np.uint64(11)) + 0.5) * (2.0 ** -53)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    @njit(cache=True, parallel=True)
    def philox_normals_nb(seed_lo, seed_hi, stream, path0, n_paths, n_draws):
        out = np.empty((n_paths, n_draws))
        for p in prange(n_paths):
            pid = path0 + p
            for j in range(n_draws):
                out[p, j] = _philox_normal(seed_lo, seed_hi, stream, pid, j)
        return out

    @njit(cache=True, inline="always")
    def _pchip_scalar(xk, yk, dk, v):
        n = xk.shape[0]
        if n == 1:
            return yk[0]
        if v <= xk[0]:
            return yk[0]
        if v >= xk[n - 1]:
            return yk[n - 1]
        i = np.searchsorted(xk, v, side="right") - 1
        if i > n - 2:
            i = n - 2
        h = xk[i + 1] - xk[i]
        s = v - xk[i]
        mi = (yk[i + 1] - yk[i]) / h
        c2 = (3.0 * mi - 2.0 * dk[i] - dk[i + 1]) / h
        c3 = (dk[i] + dk[i + 1] - 2.0 * mi) / (h * h)
        return yk[i] + s * (dk[i] + s * (c2 + s * c3))

    @njit(cache=True)
    def pchip_eval_nb(xk, yk, dk, xq):
        out = np.empty(xq.shape[0])
        for i in range(xq.shape[0]):
            out[i] = _pchip_scalar(xk, yk, dk, xq[i])
        return out

    @njit(cache=True)
    def dupire_solve_nb(c0, k, dt, drift, vol2):
        J = k.shape[0] - 1
        S = drift.shape[0]
        out = np.empty((S + 1, J + 1))
        for j in range(J + 1):
            out[0, j] = c0[j]
        dk = k[1] - k[0]
        lo = np.empty(J + 1)
        dg = np.empty(J + 1)
        up = np.empty(J + 1)
        rhs = np.empty(J + 1)
        cp = np.empty(J + 1)
        dp = np.empty(J + 1)
        cur = c0.copy()
        for n in range(S):
            a = drift[n]
            lo[0] = 0.0
            dg[0] = 1.0
            up[0] = 0.0
            rhs[0] = 1.0
            for j in range(1, J):
                kj = k[j]
                sig = 0.5 * kj * kj * vol2[n, j]
                w = a * (1.0 - kj)
                diffu = sig / (dk * dk)
                if abs(w) * dk <= 2.0 * sig:
                    l_ = -diffu - w / (2.0 * dk)
                    d_ = a + 2.0 * diffu
                    u_ = -diffu + w / (2.0 * dk)
                else:
                    if w >= 0.0:
                        l_ = -diffu - w / dk
                        d_ = a + 2.0 * diffu + w / dk
                        u_ = -diffu
                    else:
                        l_ = -diffu
                        d_ = a + 2.0 * diffu - w / dk
                        u_ = -diffu + w / dk
                lo[j] = dt * l_
                dg[j] = 1.0 + dt * d_
                up[j] = dt * u_
                rhs[j] = cur[j]
            lo[J] = 0.0
            dg[J] = 1.0
            up[J] = 0.0
            rhs[J] = 0.0
            # Thomas solve
            cp[0] = up[0] / dg[0]
            dp[0] = rhs[0] / dg[0]
            for j in range(1, J + 1):
                den = dg[j] - lo[j] * cp[j - 1]
                cp[j] = up[j] / den
                dp[j] = (rhs[j] - lo[j] * dp[j - 1]) / den
            cur[J] = dp[J]
            for j in range(J - 1, -1, -1):
                cur[j] = dp[j] - cp[j] * cur[j + 1]
            for j in range(J + 1):
                out[n + 1, j] = cur[j]
        return out

    @njit(cache=True, parallel=True)
    def euler_paths_nb(seed_lo, seed_hi, stream, path0, n_paths, dt_arr, sqdt_arr,
                       a, kx, vol_vals, vol_slopes, slice_idx, rec_idx, floor):
        S = dt_arr.shape[0]
        R = rec_idx.shape[0]
        out = np.empty((n_paths, R))
        for p in prange(n_paths):
            pid = path0 + p
            s = 1.0
            r = 0
            for n in range(S):
                li = slice_idx[n]
                eta = _pchip_scalar(kx, vol_vals[li], vol_slopes[li], s)
                z = _philox_normal(seed_lo, seed_hi, stream, pid, n)
                s = s + a * (1.0 - s) * dt_arr[n] + eta * s * sqdt_arr[n] * z
                if s < floor:
                    s = floor
                if r < R and rec_idx[r] == n:
                    out[p, r] = s
                    r += 1
        return out

    @njit(cache=True, inline="always")
    def _poly_eval_scalar(coeff, nbasis, muF, sgF, muK, sgK, F, K):
        if nbasis == 3:
            z = (F - muF) / sgF
            return coeff[0] + z * (coeff[1] + z * coeff[2])
        zf = (F - muF) / sgF
        zk = (K - muK) / sgK
        return (coeff[0] + coeff[1] * zf + coeff[2] * zk
                + coeff[3] * zf * zf + coeff[4] * zk * zk + coeff[5] * zf * zk)

    @njit(cache=True, parallel=True)
    def lsmc_backward_max_nb(coeffs, nbasis, muF, sgF, muK, sgK, F, K, Ci, Cprev,
                             lo, hi, bb_lo, bb_hi, bang, df):
        n_prev = Cprev.shape[0]
        n_j = Ci.shape[0]
        P = F.shape[0]
        polyv = np.empty((n_j, P))
        for j in prange(n_j):
            for p in range(P):
                polyv[j, p] = _poly_eval_scalar(coeffs[j], nbasis, muF, sgF, muK, sgK, F[p], K[p])
        W_out = np.empty((n_prev, P))
        for l in prange(n_prev):
            for p in range(P):
                pay = F[p] - K[p]
                best = -1.0e300
                if bang:
                    for j in (bb_lo[l], bb_hi[l]):
                        v = (Ci[j] - Cprev[l]) * pay + df * polyv[j, p]
                        if v >= best:
                            best = v
                else:
                    for j in range(lo[l], hi[l] + 1):
                        v = (Ci[j] - Cprev[l]) * pay + df * polyv[j, p]
                        if v >= best:
                            best = v
                W_out[l, p] = best
        return W_out

    @njit(cache=True, parallel=True)
    def lsmc_forward_nb(F, K, G, glen, lo2, hi2, bb_lo2, bb_hi2, bang,
                        coeffs, muF, sgF, muK, sgK, nbasis, df_cont, df_pay,
                        Nm, NM, tol, want_cons):
        P, n_f = F.shape
        rewards = np.zeros(P)
        cons = np.empty((P, n_f)) if want_cons else np.empty((0, 0))
        extreme = np.zeros(P, dtype=np.int64)
        viol = np.zeros(P, dtype=np.int64)
        for p in prange(P):
            lvl = 0
            Ccur = 0.0
            for i in range(1, n_f + 1):
                Fi = F[p, i - 1]
                pay = Fi - K[p]
                best = -1.0e300
                bestj = -1
                if bang:
                    j0 = bb_lo2[i, lvl]
                    j1 = bb_hi2[i, lvl]
                else:
                    j0 = lo2[i, lvl]
                    j1 = hi2[i, lvl]
                for j in range(j0, j1 + 1):
                    if bang and j != j0 and j != j1:
                        continue
                    v = (G[i, j] - Ccur) * pay
                    if i < n_f:
                        v += df_cont[i] * _poly_eval_scalar(
                            coeffs[i, j], nbasis, muF[i], sgF[i], muK[i], sgK[i], Fi, K[p])
                    if v >= best:
                        best = v
                        bestj = j
                act = G[i, bestj] - Ccur
                if act < Nm - tol or act > NM + tol:
                    viol[p] += 1
                rewards[p] += act * pay * df_pay[i]
                if abs(act - Nm) <= 1e-2 or abs(act - NM) <= 1e-2:
                    extreme[p] += 1
                if want_cons:
                    cons[p, i - 1] = act
                Ccur = G[i, bestj]
                lvl = bestj
        return rewards, cons, extreme, viol


if USE_NUMBA:

    @njit(cache=True, inline="always")
    def _pad_fwd(W, b, sizes, X, H, nb):
        """Padded-MLP forward: H[l] filled in place, tanh hidden, linear out."""
        L = sizes.shape[0] - 1
        for i in range(nb):
            for j in range(sizes[0]):
                H[0, i, j] = X[i, j]
        for l in range(L):
            din = sizes[l]
            dout = sizes[l + 1]
            last = l == L - 1
            for i in range(nb):
                for o in range(dout):
                    acc = b[l, o]
                    for k in range(din):
                        acc += H[l, i, k] * W[l, k, o]
                    H[l + 1, i, o] = acc if last else math.tanh(acc)

    @njit(cache=True, inline="always")
    def _pad_bwd(W, sizes, H, delta, scratch, gW, gb, nb):
        """Accumulate padded-MLP gradients; delta holds d(out) on entry."""
        L = sizes.shape[0] - 1
        for l in range(L - 1, -1, -1):
            din = sizes[l]
            dout = sizes[l + 1]
            for i in range(nb):
                for o in range(dout):
                    dlt = delta[i, o]
                    gb[l, o] += dlt
                    for k in range(din):
                        gW[l, k, o] += H[l, i, k] * dlt
            if l > 0:
                for i in range(nb):
                    for k in range(din):
                        acc = 0.0
                        for o in range(dout):
                            acc += delta[i, o] * W[l, k, o]
                        hv = H[l, i, k]
                        scratch[i, k] = acc * (1.0 - hv * hv)
                for i in range(nb):
                    for k in range(din):
                        delta[i, k] = scratch[i, k]
                    for k in range(din, delta.shape[1]):
                        delta[i, k] = 0.0

    @njit(cache=True, inline="always")
    def _adam_apply(p, g, m, v, lr, b1, b2, eps, b1c, b2c):
        pf = p.ravel()
        gf = g.ravel()
        mf = m.ravel()
        vf = v.ravel()
        for i in range(pf.shape[0]):
            gv = gf[i]
            mf[i] = b1 * mf[i] + (1.0 - b1) * gv
            vf[i] = b2 * vf[i] + (1.0 - b2) * gv * gv
            pf[i] += lr * (mf[i] / b1c) / (math.sqrt(vf[i] / b2c) + eps)

    @njit(cache=True, inline="always")
    def _sgd_apply(p, g, lr):
        pf = p.ravel()
        gf = g.ravel()
        for i in range(pf.shape[0]):
            pf[i] += lr * gf[i]

    @njit(cache=True, inline="always")
    def _all_finite(arr):
        f = arr.ravel()
        for i in range(f.shape[0]):
            if not np.isfinite(f[i]):
                return False
        return True

    @njit(cache=True)
    def ppo_epochs_nb(Wa, ba, Wv, bv, log_std, sizes_a, sizes_v,
                      states, actions, old_logp, adv_in, vtarg, date_idx,
                      orders, minibatch, clip_eps, value_coef, lr,
                      continuous, shared_xi, normalize_adv,
                      mWa, vWa, mba, vba, mWv, vWv, mbv, vbv, mxi, vxi,
                      adam_t0, use_adam):
        N = states.shape[0]
        d = states.shape[1]
        La = sizes_a.shape[0] - 1
        Lv = sizes_v.shape[0] - 1
        P = Wa.shape[1]
        Ha = np.zeros((La + 1, minibatch, P))
        Hv = np.zeros((Lv + 1, minibatch, P))
        delta = np.zeros((minibatch, P))
        scratch = np.zeros((minibatch, P))
        gWa = np.zeros(Wa.shape)
        gba = np.zeros(ba.shape)
        gWv = np.zeros(Wv.shape)
        gbv = np.zeros(bv.shape)
        gxi = np.zeros(log_std.shape)
        Xb = np.zeros((minibatch, P))
        b1, b2, eps = 0.9, 0.999, 1e-8
        t = adam_t0
        LOG2PI = math.log(2.0 * math.pi)
        for e in range(orders.shape[0]):
            for m0 in range(0, N, minibatch):
                m1 = min(N, m0 + minibatch)
                nb = m1 - m0
                # gather
                amean = 0.0
                for r in range(nb):
                    s = orders[e, m0 + r]
                    for c in range(d):
                        Xb[r, c] = states[s, c]
                    amean += adv_in[s]
                amean /= nb
                astd = 0.0
                for r in range(nb):
                    s = orders[e, m0 + r]
                    diff = adv_in[s] - amean
                    astd += diff * diff
                astd = math.sqrt(astd / nb)
                gWa[:] = 0.0
                gba[:] = 0.0
                gWv[:] = 0.0
                gbv[:] = 0.0
                gxi[:] = 0.0
                _pad_fwd(Wa, ba, sizes_a, Xb, Ha, nb)
                _pad_fwd(Wv, bv, sizes_v, Xb, Hv, nb)
                for r in range(nb):
                    delta[r, :] = 0.0
                # policy gradient terms
                for r in range(nb):
                    s = orders[e, m0 + r]
                    a = adv_in[s]
                    if normalize_adv:
                        a = (a - amean) / (astd + 1e-8)
                    if continuous:
                        xi_i = 0 if shared_xi else date_idx[s]
                        xi = log_std[xi_i]
                        sd = math.exp(xi)
                        z = (actions[s] - Ha[La, r, 0]) / sd
                        logp = -0.5 * z * z - xi - 0.5 * LOG2PI
                        ratio = math.exp(logp - old_logp[s])
                        unclipped = ratio * a
                        rc = ratio
                        if rc < 1.0 - clip_eps:
                            rc = 1.0 - clip_eps
                        elif rc > 1.0 + clip_eps:
                            rc = 1.0 + clip_eps
                        clipped = rc * a
                        dlogp = (a if unclipped <= clipped else 0.0) * ratio / nb
                        delta[r, 0] = dlogp * z / sd
                        gxi[xi_i] += dlogp * (z * z - 1.0)
                    else:
                        l0 = Ha[La, r, 0]
                        l1 = Ha[La, r, 1]
                        mx = l0 if l0 > l1 else l1
                        e0 = math.exp(l0 - mx)
                        e1 = math.exp(l1 - mx)
                        tot = e0 + e1
                        p0 = e0 / tot
                        p1 = e1 / tot
                        sel = int(actions[s])
                        psel = p1 if sel == 1 else p0
                        logp = math.log(psel)
                        ratio = math.exp(logp - old_logp[s])
                        unclipped = ratio * a
                        rc = ratio
                        if rc < 1.0 - clip_eps:
                            rc = 1.0 - clip_eps
                        elif rc > 1.0 + clip_eps:
                            rc = 1.0 + clip_eps
                        clipped = rc * a
                        dlogp = (a if unclipped <= clipped else 0.0) * ratio / nb
                        delta[r, 0] = -p0 * dlogp
                        delta[r, 1] = -p1 * dlogp
                        delta[r, sel] += dlogp
                _pad_bwd(Wa, sizes_a, Ha, delta, scratch, gWa, gba, nb)
                # value loss
                for r in range(nb):
                    s = orders[e, m0 + r]
                    verr = Hv[Lv, r, 0] - vtarg[s]
                    delta[r, :] = 0.0
                    delta[r, 0] = -value_coef * 2.0 * verr / nb
                _pad_bwd(Wv, sizes_v, Hv, delta, scratch, gWv, gbv, nb)
                ok = (_all_finite(gWa) and _all_finite(gba) and _all_finite(gWv)
                      and _all_finite(gbv) and _all_finite(gxi))
                if not ok:
                    continue
                t += 1
                if use_adam:
                    b1c = 1.0 - b1 ** t
                    b2c = 1.0 - b2 ** t
                    _adam_apply(Wa, gWa, mWa, vWa, lr, b1, b2, eps, b1c, b2c)
                    _adam_apply(ba, gba, mba, vba, lr, b1, b2, eps, b1c, b2c)
                    _adam_apply(Wv, gWv, mWv, vWv, lr, b1, b2, eps, b1c, b2c)
                    _adam_apply(bv, gbv, mbv, vbv, lr, b1, b2, eps, b1c, b2c)
                    if continuous:
                        _adam_apply(log_std, gxi, mxi, vxi, lr, b1, b2, eps, b1c, b2c)
                else:
                    _sgd_apply(Wa, gWa, lr)
                    _sgd_apply(ba, gba, lr)
                    _sgd_apply(Wv, gWv, lr)
                    _sgd_apply(bv, gbv, lr)
                    if continuous:
                        _sgd_apply(log_std, gxi, lr)
        return t


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    philox_normals = philox_normals_nb
    pchip_eval = pchip_eval_nb
    dupire_solve = dupire_solve_nb
else:
    philox_normals = philox_normals_np
    pchip_eval = pchip_eval_np
    dupire_solve = dupire_solve_np

philox_uniforms = philox_uniforms_np
