"""Pure-numpy kernel backend.

Implements the same three hot kernels as the native extension:

* ``eval_beta1_panels`` - crunch a flattened triple-integral panel plan
* ``ratios_real`` / ``ratios_herm`` - matrices from standard normals,
  cyclic Jacobi eigensolve, eigenvector entropies, spacing ratio

The Jacobi sweeps run vectorized over the whole batch; the rotation
sequence per matrix is identical to the native scalar loop.
"""

import numpy as np

from ..numerics import _I0_ASYMP_COEF, _I0_SERIES_COEF, _I0_SPLIT
from .common import scaled_entries_herm, scaled_entries_real, gauss_legendre

BACKEND = "pure"

_DEGENERACY_REL = 1e-12        # lower spacing below this x spectral range -> discard
_ENTROPY_TIE = 1e-12
_JACOBI_TOL = 1e-13
_MAX_SWEEPS = 30


def _i0e(z):
    """Vectorized exp(-|z|) I0(z); same split and coefficients as numerics."""
    az = np.abs(z)
    small = az < _I0_SPLIT
    out = np.empty_like(az)
    if small.any():
        w = 0.25 * az[small] ** 2
        out[small] = np.polyval(_I0_SERIES_COEF, w) * np.exp(-az[small])
    big = ~small
    if big.any():
        out[big] = np.polyval(_I0_ASYMP_COEF, 1.0 / az[big]) / np.sqrt(2.0 * np.pi * az[big])
    return out


def eval_beta1_panels(lo, hi, lin, cst, w2, t0, pref, A, n_lam):
    gx, gw = gauss_legendre(n_lam)
    total = 0.0
    # slabs bound the size of the temporaries
    step = max(1, (1 << 19) // n_lam)
    for s in range(0, lo.size, step):
        sl = slice(s, s + step)
        hw = 0.5 * (hi[sl] - lo[sl])[:, None]
        t = 0.5 * (hi[sl] + lo[sl])[:, None] + hw * gx[None, :]
        z = w2[sl][:, None] * (t - t0[sl][:, None])
        e = (-A * t + lin[sl][:, None]) * t + cst[sl][:, None] + np.abs(z)
        vals = np.exp(e) * _i0e(z)
        total += float(np.sum((pref[sl][:, None] * hw) * (gw[None, :] * vals)))
    return total


# ---------------------------------------------------------------------------
# batched cyclic Jacobi, real symmetric and complex Hermitian 3x3
# ---------------------------------------------------------------------------

def _jacobi_real(H):
    A = H.copy()
    n = A.shape[0]
    V = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
    thresh = _JACOBI_TOL * np.maximum(np.sqrt(np.sum(H * H, axis=(1, 2))), 1e-300)
    for _ in range(_MAX_SWEEPS):
        off2 = 2.0 * (A[:, 0, 1] ** 2 + A[:, 0, 2] ** 2 + A[:, 1, 2] ** 2)
        act = off2 > thresh * thresh
        if not act.any():
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            rot = act & (A[:, p, q] != 0.0)
            if not rot.any():
                continue
            i = np.flatnonzero(rot)
            apq = A[i, p, q]
            tau = (A[i, q, q] - A[i, p, p]) / (2.0 * apq)
            t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(tau == 0.0, 1.0, t)
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = t[:, None] * c
            Ap, Aq = A[i, :, p].copy(), A[i, :, q].copy()
            A[i, :, p] = c * Ap - s * Aq
            A[i, :, q] = s * Ap + c * Aq
            Ap, Aq = A[i, p, :].copy(), A[i, q, :].copy()
            A[i, p, :] = c * Ap - s * Aq
            A[i, q, :] = s * Ap + c * Aq
            A[i, p, q] = 0.0
            A[i, q, p] = 0.0
            Vp, Vq = V[i, :, p].copy(), V[i, :, q].copy()
            V[i, :, p] = c * Vp - s * Vq
            V[i, :, q] = s * Vp + c * Vq
    ev = np.stack([A[:, 0, 0], A[:, 1, 1], A[:, 2, 2]], axis=1)
    order = np.argsort(ev, axis=1, kind="stable")
    return (np.take_along_axis(ev, order, axis=1),
            np.take_along_axis(V, order[:, None, :], axis=2))


def _jacobi_herm(H):
    A = H.copy()
    n = A.shape[0]
    V = np.broadcast_to(np.eye(3, dtype=complex), (n, 3, 3)).copy()
    thresh = _JACOBI_TOL * np.maximum(
        np.sqrt(np.sum((H * H.conj()).real, axis=(1, 2))), 1e-300)
    for _ in range(_MAX_SWEEPS):
        off2 = 2.0 * (np.abs(A[:, 0, 1]) ** 2 + np.abs(A[:, 0, 2]) ** 2
                      + np.abs(A[:, 1, 2]) ** 2)
        act = off2 > thresh * thresh
        if not act.any():
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq_all = A[:, p, q]
            rot = act & (np.abs(apq_all) != 0.0)
            if not rot.any():
                continue
            i = np.flatnonzero(rot)
            apq = A[i, p, q]
            aab = np.abs(apq)
            phase = apq / aab
            tau = (A[i, q, q].real - A[i, p, p].real) / (2.0 * aab)
            t = np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(tau == 0.0, 1.0, t)
            c = (1.0 / np.sqrt(1.0 + t * t))
            sp = (t * c * phase)[:, None]
            c = c[:, None]
            Ap, Aq = A[i, :, p].copy(), A[i, :, q].copy()
            A[i, :, p] = c * Ap - sp.conj() * Aq
            A[i, :, q] = sp * Ap + c * Aq
            Ap, Aq = A[i, p, :].copy(), A[i, q, :].copy()
            A[i, p, :] = c * Ap - sp * Aq
            A[i, q, :] = sp.conj() * Ap + c * Aq
            A[i, p, q] = 0.0
            A[i, q, p] = 0.0
            Vp, Vq = V[i, :, p].copy(), V[i, :, q].copy()
            V[i, :, p] = c * Vp - sp.conj() * Vq
            V[i, :, q] = sp * Vp + c * Vq
    ev = np.stack([A[:, 0, 0], A[:, 1, 1], A[:, 2, 2]], axis=1).real
    order = np.argsort(ev, axis=1, kind="stable")
    return (np.take_along_axis(ev, order, axis=1),
            np.take_along_axis(V, order[:, None, :], axis=2))


def _entropies(prob):
    """Shannon entropies of eigenvector component weights, 0 ln 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(prob > 0.0, prob * np.log(prob), 0.0)
    return -np.sum(term, axis=1)


def _finish(ev, prob):
    """Shared tail: entropies, localized pick, ratio, degeneracy mask."""
    S = np.stack([_entropies(prob[:, :, j]) for j in range(3)], axis=1)
    best = S.min(axis=1)
    loc = np.argmax(S <= best[:, None] + _ENTROPY_TIE, axis=1)
    lower = ev[:, 1] - ev[:, 0]
    upper = ev[:, 2] - ev[:, 1]
    spread = ev[:, 2] - ev[:, 0]
    good = lower > _DEGENERACY_REL * spread
    ratios = np.full(ev.shape[0], np.nan)
    ratios[good] = upper[good] / lower[good]
    rows = np.arange(ev.shape[0])
    return ratios, ev[rows, loc], S[rows, loc], prob[rows, 2, loc]


def ratios_real(normals, k):
    """Ratios and localized-state diagnostics for a batch of beta=1 draws.

    ``normals``: (n, 6) standard normals in the entry order
    (H11, H22, H33, H12, H13, H23).  Returns (ratios, loc_eigenvalue,
    loc_entropy, loc_axis3_weight); degenerate draws carry NaN ratios.
    """
    sd = scaled_entries_real(k)
    e = normals * sd[None, :]
    n = normals.shape[0]
    H = np.empty((n, 3, 3))
    H[:, 0, 0] = e[:, 0]
    H[:, 1, 1] = e[:, 1]
    H[:, 2, 2] = e[:, 2]
    H[:, 0, 1] = H[:, 1, 0] = e[:, 3]
    H[:, 0, 2] = H[:, 2, 0] = e[:, 4]
    H[:, 1, 2] = H[:, 2, 1] = e[:, 5]
    ev, V = _jacobi_real(H)
    return _finish(ev, V * V)


def ratios_herm(normals, k):
    """Same as ratios_real for the beta=2 class; ``normals`` is (n, 9)."""
    sd = scaled_entries_herm(k)
    e = normals * sd[None, :]
    n = normals.shape[0]
    H = np.zeros((n, 3, 3), dtype=complex)
    H[:, 0, 0] = e[:, 0]
    H[:, 1, 1] = e[:, 1]
    H[:, 2, 2] = e[:, 2]
    H[:, 0, 1] = e[:, 3] + 1j * e[:, 4]
    H[:, 1, 0] = np.conj(H[:, 0, 1])
    H[:, 0, 2] = e[:, 5] + 1j * e[:, 6]
    H[:, 2, 0] = np.conj(H[:, 0, 2])
    H[:, 1, 2] = e[:, 7] + 1j * e[:, 8]
    H[:, 2, 1] = np.conj(H[:, 1, 2])
    ev, V = _jacobi_herm(H)
    return _finish(ev, (V * V.conj()).real)
