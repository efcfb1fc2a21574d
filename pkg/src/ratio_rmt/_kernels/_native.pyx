# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Native kernel backend: scalar C loops for the hot paths.

Mirrors pure.py exactly: same panel-plan contract, same Jacobi rotation
sequence, same tie-breaking and degeneracy rules, same Bessel split and
coefficients.  Differences between backends are limited to floating-point
summation order.
"""

from libc.math cimport cos, exp, fabs, log, sqrt

import numpy as np

from ..numerics import _I0_ASYMP_COEF, _I0_SERIES_COEF, _I0_SPLIT
from .common import gauss_legendre, scaled_entries_herm, scaled_entries_real

BACKEND = "native"

DEF NSER = 48
DEF NASY = 26

cdef double I0_SER[NSER]
cdef double I0_ASY[NASY]
cdef double I0_SPLIT = 15.0
cdef double TWO_PI = 6.283185307179586476925287

_ser = np.asarray(_I0_SERIES_COEF, dtype=np.float64)
_asy = np.asarray(_I0_ASYMP_COEF, dtype=np.float64)
assert _ser.shape[0] == NSER and _asy.shape[0] == NASY
I0_SPLIT = float(_I0_SPLIT)
cdef Py_ssize_t _i
for _i in range(NSER):
    I0_SER[_i] = _ser[_i]
for _i in range(NASY):
    I0_ASY[_i] = _asy[_i]

cdef double DEGENERACY_REL = 1e-12
cdef double ENTROPY_TIE = 1e-12
cdef double JACOBI_TOL = 1e-13
cdef int MAX_SWEEPS = 30


cdef inline double i0e_c(double z) noexcept nogil:
    cdef double az = fabs(z)
    cdef double acc, w
    cdef int i
    if az < I0_SPLIT:
        w = 0.25 * az * az
        acc = I0_SER[0]
        for i in range(1, NSER):
            acc = acc * w + I0_SER[i]
        return acc * exp(-az)
    w = 1.0 / az
    acc = I0_ASY[0]
    for i in range(1, NASY):
        acc = acc * w + I0_ASY[i]
    return acc / sqrt(TWO_PI * az)


def bessel_i0_scaled_scalar(double z):
    """Scalar e^{-|z|} I0(z) via the C kernel (for cross-backend tests)."""
    return i0e_c(z)


def eval_beta1_panels(double[::1] lo, double[::1] hi, double[::1] lin,
                      double[::1] cst, double[::1] w2, double[::1] t0,
                      double[::1] pref, double A, int n_lam):
    gx_np, gw_np = gauss_legendre(n_lam)
    cdef double[::1] gx = np.ascontiguousarray(gx_np)
    cdef double[::1] gw = np.ascontiguousarray(gw_np)
    cdef Py_ssize_t n = lo.shape[0]
    cdef Py_ssize_t i, j
    cdef double total = 0.0, acc, mid, hw, t, z, e
    with nogil:
        for i in range(n):
            mid = 0.5 * (hi[i] + lo[i])
            hw = 0.5 * (hi[i] - lo[i])
            acc = 0.0
            for j in range(n_lam):
                t = mid + hw * gx[j]
                z = w2[i] * (t - t0[i])
                e = (-A * t + lin[i]) * t + cst[i] + fabs(z)
                acc += gw[j] * exp(e) * i0e_c(z)
            total += pref[i] * hw * acc
    return total


# ---------------------------------------------------------------------------
# cyclic Jacobi, 3x3
# ---------------------------------------------------------------------------

cdef inline void rot_real(double[3][3] a, double[3][3] v, int p, int q) noexcept nogil:
    cdef double apq = a[p][q]
    cdef double tau, t, c, s, xp, xq
    cdef int i
    if apq == 0.0:
        return
    tau = (a[q][q] - a[p][p]) / (2.0 * apq)
    if tau == 0.0:
        t = 1.0
    elif tau > 0.0:
        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
    c = 1.0 / sqrt(1.0 + t * t)
    s = t * c
    for i in range(3):
        xp = a[i][p]; xq = a[i][q]
        a[i][p] = c * xp - s * xq
        a[i][q] = s * xp + c * xq
    for i in range(3):
        xp = a[p][i]; xq = a[q][i]
        a[p][i] = c * xp - s * xq
        a[q][i] = s * xp + c * xq
    a[p][q] = 0.0
    a[q][p] = 0.0
    for i in range(3):
        xp = v[i][p]; xq = v[i][q]
        v[i][p] = c * xp - s * xq
        v[i][q] = s * xp + c * xq


cdef void jacobi3_real(double[3][3] a, double[3][3] v) noexcept nogil:
    cdef double norm2 = 0.0, thr, off2
    cdef int i, j, sweep
    for i in range(3):
        for j in range(3):
            norm2 += a[i][j] * a[i][j]
            v[i][j] = 1.0 if i == j else 0.0
    thr = JACOBI_TOL * sqrt(norm2)
    if thr < 1e-300:
        thr = 1e-300
    for sweep in range(MAX_SWEEPS):
        off2 = 2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2])
        if off2 <= thr * thr:
            break
        rot_real(a, v, 0, 1)
        rot_real(a, v, 0, 2)
        rot_real(a, v, 1, 2)


cdef inline void rot_herm(double complex[3][3] a, double complex[3][3] v,
                          int p, int q) noexcept nogil:
    cdef double complex apq = a[p][q]
    cdef double aab = sqrt(apq.real * apq.real + apq.imag * apq.imag)
    cdef double tau, t, c
    cdef double complex phase, sp, xp, xq
    cdef int i
    if aab == 0.0:
        return
    phase = apq / aab
    tau = (a[q][q].real - a[p][p].real) / (2.0 * aab)
    if tau == 0.0:
        t = 1.0
    elif tau > 0.0:
        t = 1.0 / (tau + sqrt(1.0 + tau * tau))
    else:
        t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
    c = 1.0 / sqrt(1.0 + t * t)
    sp = t * c * phase
    for i in range(3):
        xp = a[i][p]; xq = a[i][q]
        a[i][p] = c * xp - sp.conjugate() * xq
        a[i][q] = sp * xp + c * xq
    for i in range(3):
        xp = a[p][i]; xq = a[q][i]
        a[p][i] = c * xp - sp * xq
        a[q][i] = sp.conjugate() * xp + c * xq
    a[p][q] = 0.0
    a[q][p] = 0.0
    for i in range(3):
        xp = v[i][p]; xq = v[i][q]
        v[i][p] = c * xp - sp.conjugate() * xq
        v[i][q] = sp * xp + c * xq


cdef void jacobi3_herm(double complex[3][3] a, double complex[3][3] v) noexcept nogil:
    cdef double norm2 = 0.0, thr, off2
    cdef int i, j, sweep
    for i in range(3):
        for j in range(3):
            norm2 += a[i][j].real * a[i][j].real + a[i][j].imag * a[i][j].imag
            v[i][j] = 1.0 if i == j else 0.0
    thr = JACOBI_TOL * sqrt(norm2)
    if thr < 1e-300:
        thr = 1e-300
    for sweep in range(MAX_SWEEPS):
        off2 = 2.0 * (a[0][1].real * a[0][1].real + a[0][1].imag * a[0][1].imag
                      + a[0][2].real * a[0][2].real + a[0][2].imag * a[0][2].imag
                      + a[1][2].real * a[1][2].real + a[1][2].imag * a[1][2].imag)
        if off2 <= thr * thr:
            break
        rot_herm(a, v, 0, 1)
        rot_herm(a, v, 0, 2)
        rot_herm(a, v, 1, 2)


cdef inline double entropy3(double w0, double w1, double w2) noexcept nogil:
    cdef double s = 0.0
    if w0 > 0.0:
        s -= w0 * log(w0)
    if w1 > 0.0:
        s -= w1 * log(w1)
    if w2 > 0.0:
        s -= w2 * log(w2)
    return s


cdef inline void sort3(double* ev, int* order) noexcept nogil:
    cdef int tmp
    order[0] = 0; order[1] = 1; order[2] = 2
    if ev[order[0]] > ev[order[1]]:
        tmp = order[0]; order[0] = order[1]; order[1] = tmp
    if ev[order[1]] > ev[order[2]]:
        tmp = order[1]; order[1] = order[2]; order[2] = tmp
    if ev[order[0]] > ev[order[1]]:
        tmp = order[0]; order[0] = order[1]; order[1] = tmp


def ratios_real(double[:, ::1] normals, double k):
    """Batch of beta=1 draws; see pure.ratios_real for the contract."""
    sd_np = scaled_entries_real(k)
    cdef double[::1] sd = np.ascontiguousarray(sd_np)
    cdef Py_ssize_t n = normals.shape[0]
    out_r = np.empty(n); out_e = np.empty(n); out_s = np.empty(n); out_w = np.empty(n)
    cdef double[::1] rr = out_r
    cdef double[::1] re_ = out_e
    cdef double[::1] rs = out_s
    cdef double[::1] rw = out_w
    cdef double[3][3] a
    cdef double[3][3] v
    cdef double ev[3]
    cdef double S[3]
    cdef int order[3]
    cdef Py_ssize_t i
    cdef int j, loc
    cdef double lower, spread, best, nan = float("nan")
    with nogil:
        for i in range(n):
            a[0][0] = normals[i, 0] * sd[0]
            a[1][1] = normals[i, 1] * sd[1]
            a[2][2] = normals[i, 2] * sd[2]
            a[0][1] = a[1][0] = normals[i, 3] * sd[3]
            a[0][2] = a[2][0] = normals[i, 4] * sd[4]
            a[1][2] = a[2][1] = normals[i, 5] * sd[5]
            jacobi3_real(a, v)
            ev[0] = a[0][0]; ev[1] = a[1][1]; ev[2] = a[2][2]
            sort3(ev, order)
            for j in range(3):
                S[j] = entropy3(v[0][order[j]] * v[0][order[j]],
                                v[1][order[j]] * v[1][order[j]],
                                v[2][order[j]] * v[2][order[j]])
            loc = 0
            best = S[0]
            for j in range(1, 3):
                if S[j] < best - ENTROPY_TIE:
                    best = S[j]; loc = j
            lower = ev[order[1]] - ev[order[0]]
            spread = ev[order[2]] - ev[order[0]]
            if lower > DEGENERACY_REL * spread:
                rr[i] = (ev[order[2]] - ev[order[1]]) / lower
            else:
                rr[i] = nan
            re_[i] = ev[order[loc]]
            rs[i] = S[loc]
            rw[i] = v[2][order[loc]] * v[2][order[loc]]
    return out_r, out_e, out_s, out_w


def ratios_herm(double[:, ::1] normals, double k):
    """Batch of beta=2 draws; see pure.ratios_herm for the contract."""
    sd_np = scaled_entries_herm(k)
    cdef double[::1] sd = np.ascontiguousarray(sd_np)
    cdef Py_ssize_t n = normals.shape[0]
    out_r = np.empty(n); out_e = np.empty(n); out_s = np.empty(n); out_w = np.empty(n)
    cdef double[::1] rr = out_r
    cdef double[::1] re_ = out_e
    cdef double[::1] rs = out_s
    cdef double[::1] rw = out_w
    cdef double complex[3][3] a
    cdef double complex[3][3] v
    cdef double ev[3]
    cdef double S[3]
    cdef int order[3]
    cdef Py_ssize_t i
    cdef int j, loc
    cdef double lower, spread, best, w0, w1, w2c, nan = float("nan")
    with nogil:
        for i in range(n):
            a[0][0] = normals[i, 0] * sd[0]
            a[1][1] = normals[i, 1] * sd[1]
            a[2][2] = normals[i, 2] * sd[2]
            a[0][1] = normals[i, 3] * sd[3] + 1j * normals[i, 4] * sd[4]
            a[1][0] = a[0][1].conjugate()
            a[0][2] = normals[i, 5] * sd[5] + 1j * normals[i, 6] * sd[6]
            a[2][0] = a[0][2].conjugate()
            a[1][2] = normals[i, 7] * sd[7] + 1j * normals[i, 8] * sd[8]
            a[2][1] = a[1][2].conjugate()
            jacobi3_herm(a, v)
            ev[0] = a[0][0].real; ev[1] = a[1][1].real; ev[2] = a[2][2].real
            sort3(ev, order)
            for j in range(3):
                w0 = v[0][order[j]].real * v[0][order[j]].real + v[0][order[j]].imag * v[0][order[j]].imag
                w1 = v[1][order[j]].real * v[1][order[j]].real + v[1][order[j]].imag * v[1][order[j]].imag
                w2c = v[2][order[j]].real * v[2][order[j]].real + v[2][order[j]].imag * v[2][order[j]].imag
                S[j] = entropy3(w0, w1, w2c)
            loc = 0
            best = S[0]
            for j in range(1, 3):
                if S[j] < best - ENTROPY_TIE:
                    best = S[j]; loc = j
            lower = ev[order[1]] - ev[order[0]]
            spread = ev[order[2]] - ev[order[0]]
            if lower > DEGENERACY_REL * spread:
                rr[i] = (ev[order[2]] - ev[order[1]]) / lower
            else:
                rr[i] = nan
            re_[i] = ev[order[loc]]
            rs[i] = S[loc]
            rw[i] = (v[2][order[loc]].real * v[2][order[loc]].real
                     + v[2][order[loc]].imag * v[2][order[loc]].imag)
    return out_r, out_e, out_s, out_w
