"""Dense simplex kernels for the minmax (Chebyshev) linear fit.

The subset feasibility test and the minmax fit both reduce to

    minimise over theta of  max_i |x_i . theta - y_i|

restricted to the rows a mask selects.  This file solves that program
through its LP dual

    maximise   sum_i y_i (lam_i^- - lam_i^+)
    subject to sum_i x_i (lam_i^+ - lam_i^-) = 0,
               sum_i (lam_i^+ + lam_i^-) = 1,   lam >= 0,

with a two-phase revised simplex.  The dual has only d+1 rows (d =
number of coefficients), every basic feasible solution touches at most
d+1 points (exactly the support the greedy solver wants), and weak
duality makes the running objective a certified lower bound on the
minmax value while the simplex multipliers give a certified upper
bound.  Pure feasibility queries return as soon as either bound decides
the comparison against the tolerance, with the same outcome a full
solve would reach.

Everything here is numba-compiled; callers are expected to pre-scale
the data to order-one magnitudes (see feasibility._scaled_arrays).
"""

from __future__ import annotations

import numpy as np
from numba import njit

OPTIMAL = 0
EARLY_FEASIBLE = 1
EARLY_INFEASIBLE = 2
STALLED = 3
FAILED = 4

UNDECIDED = 2  # batch-cell sentinel, distinct from the 0/1 verdicts


@njit(cache=True)
def _lu_factor(M, piv):
    """In-place LU with partial pivoting; False on a numerically singular M."""
    n = M.shape[0]
    for k in range(n):
        p = k
        best = abs(M[k, k])
        for r in range(k + 1, n):
            v = abs(M[r, k])
            if v > best:
                best = v
                p = r
        piv[k] = p
        if best < 1e-14:
            return False
        if p != k:
            for c in range(n):
                t = M[k, c]
                M[k, c] = M[p, c]
                M[p, c] = t
        mkk = M[k, k]
        for r in range(k + 1, n):
            f = M[r, k] / mkk
            M[r, k] = f
            if f != 0.0:
                for c in range(k + 1, n):
                    M[r, c] -= f * M[k, c]
    return True


@njit(cache=True)
def _lu_solve(M, piv, b, x):
    """Solve A x = b given the factorisation P A = L U stored in (M, piv)."""
    n = M.shape[0]
    for k in range(n):
        x[k] = b[k]
    for k in range(n):
        p = piv[k]
        if p != k:
            t = x[k]
            x[k] = x[p]
            x[p] = t
    for r in range(1, n):
        s = x[r]
        for c in range(r):
            s -= M[r, c] * x[c]
        x[r] = s
    for r in range(n - 1, -1, -1):
        s = x[r]
        for c in range(r + 1, n):
            s -= M[r, c] * x[c]
        x[r] = s / M[r, r]


@njit(cache=True)
def _lu_solve_t(M, piv, b, x):
    """Solve A^T x = b given P A = L U (so A^T = U^T L^T P)."""
    n = M.shape[0]
    for k in range(n):
        x[k] = b[k]
    for r in range(n):
        s = x[r]
        for c in range(r):
            s -= M[c, r] * x[c]
        x[r] = s / M[r, r]
    for r in range(n - 1, -1, -1):
        s = x[r]
        for c in range(r + 1, n):
            s -= M[c, r] * x[c]
        x[r] = s
    for k in range(n - 1, -1, -1):
        p = piv[k]
        if p != k:
            t = x[k]
            x[k] = x[p]
            x[p] = t


@njit(cache=True)
def cheb_solve(X, y, eps_limit, bland_from_start):
    """Solve the dual LP for the rows of (X, y).

    eps_limit < 0 runs to optimality.  eps_limit >= 0 allows an early
    return once max|x_i.theta - y_i| <= eps_limit is provably true
    (EARLY_FEASIBLE) or provably false (EARLY_INFEASIBLE).

    Returns (status, g, theta, support, nsup, niter).  On OPTIMAL, g is
    the minmax value, theta an optimal coefficient vector and
    support[:nsup] the point indices with positive dual weight.  On
    EARLY_FEASIBLE g is an upper bound on the true value attained by
    theta; on EARLY_INFEASIBLE g is a lower bound above eps_limit.
    """
    s, d = X.shape
    m = d + 1
    nreal = 2 * s

    basis = np.empty(m, np.int64)
    for k in range(m):
        basis[k] = nreal + k
    B = np.empty((m, m))
    piv = np.empty(m, np.int64)
    xb = np.empty(m)
    w = np.empty(m)
    cb = np.empty(m)
    z = np.empty(m)
    acol = np.empty(m)
    b_rhs = np.zeros(m)
    b_rhs[m - 1] = 1.0
    u = np.empty(s)
    theta = np.zeros(d)
    support = np.empty(m, np.int64)

    tol_enter = 1e-13
    tol_piv = 1e-11
    tol_zero = 1e-10
    tol_ratio = 1e-12
    itmax = 300 + 25 * s + 25 * d

    bland = bland_from_start
    niter = 0
    g_best = 1e300
    theta_best = np.zeros(d)

    for phase in range(1, 3):
        stall = 0
        last_obj = -1e300
        while True:
            niter += 1
            if niter > itmax:
                return STALLED, g_best, theta, support, 0, niter

            for k in range(m):
                j = basis[k]
                if j < nreal:
                    i = j >> 1
                    if j & 1 == 0:
                        for r in range(d):
                            B[r, k] = X[i, r]
                    else:
                        for r in range(d):
                            B[r, k] = -X[i, r]
                    B[d, k] = 1.0
                else:
                    for r in range(m):
                        B[r, k] = 0.0
                    B[j - nreal, k] = 1.0
            if not _lu_factor(B, piv):
                return FAILED, g_best, theta, support, 0, niter
            _lu_solve(B, piv, b_rhs, xb)

            for k in range(m):
                j = basis[k]
                if phase == 1:
                    cb[k] = -1.0 if j >= nreal else 0.0
                else:
                    if j < nreal:
                        i = j >> 1
                        cb[k] = -y[i] if j & 1 == 0 else y[i]
                    else:
                        cb[k] = 0.0
            _lu_solve_t(B, piv, cb, w)

            obj = 0.0
            for k in range(m):
                obj += cb[k] * xb[k]
            for i in range(s):
                acc = 0.0
                for r in range(d):
                    acc += X[i, r] * w[r]
                u[i] = acc
            wd = w[d]

            if phase == 2:
                H = 0.0
                for i in range(s):
                    v = abs(u[i] + y[i])
                    if v > H:
                        H = v
                if H < g_best:
                    g_best = H
                    for r in range(d):
                        theta_best[r] = -w[r]
                if eps_limit >= 0.0:
                    if obj > eps_limit:
                        return EARLY_INFEASIBLE, obj, theta_best, support, 0, niter
                    if H <= eps_limit:
                        for r in range(d):
                            theta[r] = -w[r]
                        return EARLY_FEASIBLE, H, theta, support, 0, niter

            enter = -1
            if bland:
                for i in range(s):
                    cp = 0.0 if phase == 1 else -y[i]
                    if cp - (u[i] + wd) > tol_enter:
                        enter = 2 * i
                        break
                    cm = 0.0 if phase == 1 else y[i]
                    if cm - (-u[i] + wd) > tol_enter:
                        enter = 2 * i + 1
                        break
            else:
                best_r = tol_enter
                for i in range(s):
                    cp = 0.0 if phase == 1 else -y[i]
                    rp = cp - (u[i] + wd)
                    if rp > best_r:
                        best_r = rp
                        enter = 2 * i
                    cm = 0.0 if phase == 1 else y[i]
                    rm = cm - (-u[i] + wd)
                    if rm > best_r:
                        best_r = rm
                        enter = 2 * i + 1

            if enter < 0:
                if phase == 1:
                    if obj < -1e-9:
                        return FAILED, g_best, theta, support, 0, niter
                    break
                # Report the best primal-achieved bound: g is then the
                # exact maximum residual of the returned theta, so the
                # pair stays self-consistent at any data scale.
                g = g_best
                for r in range(d):
                    theta[r] = theta_best[r]
                nsup = 0
                for k in range(m):
                    j = basis[k]
                    if j < nreal and xb[k] > 1e-12:
                        pt = j >> 1
                        seen = False
                        for t in range(nsup):
                            if support[t] == pt:
                                seen = True
                                break
                        if not seen:
                            support[nsup] = pt
                            nsup += 1
                return OPTIMAL, g, theta, support, nsup, niter

            i = enter >> 1
            if enter & 1 == 0:
                for r in range(d):
                    acol[r] = X[i, r]
            else:
                for r in range(d):
                    acol[r] = -X[i, r]
            acol[d] = 1.0
            _lu_solve(B, piv, acol, z)

            leave = -1
            bestz = tol_piv
            for k in range(m):
                if basis[k] >= nreal and xb[k] <= tol_zero and abs(z[k]) > bestz:
                    leave = k
                    bestz = abs(z[k])
            if leave < 0:
                best_ratio = 1e300
                leave_label = np.int64(1) << 62
                for k in range(m):
                    if z[k] > tol_piv:
                        ratio = xb[k] / z[k]
                        if ratio < best_ratio - tol_ratio or (
                            ratio <= best_ratio + tol_ratio and basis[k] < leave_label
                        ):
                            best_ratio = ratio
                            leave = k
                            leave_label = basis[k]
                if leave < 0:
                    return FAILED, g_best, theta, support, 0, niter
            basis[leave] = enter

            if obj <= last_obj + 1e-13:
                stall += 1
                if stall > 60:
                    bland = True
            else:
                stall = 0
            last_obj = obj

    return FAILED, g_best, theta, support, 0, niter


@njit(cache=True)
def feas_batch(X, y, bits, thr, out):
    """Feasibility verdicts for a batch of masks over one dataset.

    bits is (B, n) boolean, out is (B,) uint8 receiving 0 feasible /
    1 infeasible / UNDECIDED for cells the kernel could not settle
    (caller re-solves those robustly).  Masks with popcount <= d are
    feasible by the interpolation convention.
    """
    nb, n = bits.shape
    d = X.shape[1]
    Xbuf = np.empty((n, d))
    ybuf = np.empty(n)
    for t in range(nb):
        s = 0
        for i in range(n):
            if bits[t, i]:
                for c in range(d):
                    Xbuf[s, c] = X[i, c]
                ybuf[s] = y[i]
                s += 1
        if s <= d:
            out[t] = 0
            continue
        status, g, theta, support, nsup, niter = cheb_solve(
            Xbuf[:s], ybuf[:s], thr, False
        )
        if status == EARLY_FEASIBLE:
            out[t] = 0
        elif status == EARLY_INFEASIBLE:
            out[t] = 1
        elif status == OPTIMAL:
            out[t] = 1 if g > thr else 0
        else:
            out[t] = UNDECIDED
