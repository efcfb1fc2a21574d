"""Shared machinery for the kernel backends.

The coupled-ensemble density for the time-reversal-invariant class is a
triple integral: an angular variable on [0, pi/4], a spacing scale x on
[0, inf) and a center coordinate on the real line.  For every (angle, x)
pair the innermost integrand is a Gaussian times a scaled Bessel factor
whose exponent envelope has at most two peaks.  ``beta1_panel_plan``
reduces the whole domain to a flat list of Gauss-Legendre panels over the
center coordinate, with all outer weights folded in, so a backend only has
to evaluate

    sum over panels, nodes of  pref * w_gl * exp(-A t^2 + lin t + cst + |z|) * i0e(z),
    z = w2 * (t - t0)

Both backends consume the identical plan; they differ only in how fast
they crunch it.
"""

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "beta1_panel_plan",
    "beta1_prefactor",
    "gauss_legendre",
    "normals_per_draw",
    "scaled_entries_real",
    "scaled_entries_herm",
]


@lru_cache(maxsize=64)
def gauss_legendre(n):
    x, w = leggauss(n)
    return x.copy(), w.copy()


def _angle_edges(k, extra_levels=4):
    """Dyadic panel edges in v = sqrt(pi/4 - phi), refined toward both ends.

    Toward v = 0 the integrand's 1/sqrt(pi/4 - phi) growth cancels against
    the Jacobian 2v, leaving a smooth crossover on the scale v ~ k; toward
    v_max (phi = 0) the near-decoupled contribution turns on over an
    angular scale ~ k as well.  Both features get their own dyadic ladder.
    """
    vmax = math.sqrt(math.pi / 4.0)
    levels = max(6, int(math.ceil(math.log2(1.0 / min(max(k, 1e-6), 0.5))))
                 + extra_levels)
    lower = [vmax * 2.0 ** -j for j in range(levels, 1, -1)]
    upper = [vmax * (1.0 - 2.0 ** -j) for j in range(2, levels + 1)]
    return np.array([0.0] + lower + [0.5 * vmax] + upper + [vmax])


def beta1_prefactor(k, r):
    return math.sqrt(2.0 - k * k) / (math.pi * k ** 3) * r * (r + 1.0)


def beta1_panel_plan(k, r, trunc_sigmas=8.0, n_phi=8, n_x=16, n_lam=8):
    """Build the flattened panel plan for the triple integral at (k, r).

    Returns (lo, hi, lin, cst, w2, t0, pref, A, n_lam); the plan value times
    ``beta1_prefactor(k, r)`` is the density.
    """
    k2 = k * k
    A = (2.0 + k2) / (2.0 * k2)
    h = 1.0 / k2 - 1.0
    sig = 1.0 / math.sqrt(2.0 * A)
    T = trunc_sigmas

    # angular nodes: dyadic panels in v = sqrt(pi/4 - phi)
    edges = _angle_edges(k)
    gx, gw = gauss_legendre(n_phi)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    v = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    phi = math.pi / 4.0 - v * v
    wphi = (half[:, None] * gw[None, :]).ravel() * 2.0 * v * np.cos(phi)

    c2 = np.cos(2.0 * phi)
    g = h * c2 + 1.0

    # x window per angle, from the two branch envelopes E(t) <= x^2 * v±
    lin_p = g * (1.0 - r) + h * c2 * (r + 1.0)
    lin_m = g * (1.0 - r) - h * c2 * (r + 1.0)
    vp = lin_p ** 2 / (4.0 * A) - 0.5 * g * (1.0 + r * r) + 0.5 * h * c2 * (r + 1.0) * (r - 1.0)
    vm = lin_m ** 2 / (4.0 * A) - 0.5 * g * (1.0 + r * r) - 0.5 * h * c2 * (r + 1.0) * (r - 1.0)
    m = np.maximum(vp, vm)
    if not np.all(m < 0):
        raise FloatingPointError("integrand envelope not decaying; k outside (0, 1)?")
    xstar = np.sqrt(2.0 / np.abs(m))
    xmax = (0.55 * T + 1.0) * xstar

    gxx, gwx = gauss_legendre(n_x)
    xs, ws = [], []
    for f0, f1 in ((0.0, 1.0), (1.0, 2.2), (2.2, None)):
        a = f0 * xstar
        b = xmax if f1 is None else np.minimum(f1 * xstar, xmax)
        hw = 0.5 * (b - a)
        xs.append(0.5 * (a + b)[:, None] + hw[:, None] * gxx[None, :])
        ws.append(hw[:, None] * gwx[None, :])
    x = np.concatenate(xs, axis=1)                    # (nphi_tot, 3*n_x)
    wx = np.concatenate(ws, axis=1)

    pair_pref = (wphi[:, None] * wx * x ** 4).ravel()
    xf = x.ravel()
    gf = np.repeat(g, x.shape[1])
    w2 = xf * np.repeat(h * c2, x.shape[1]) * (r + 1.0)   # slope of the Bessel argument
    lin = gf * xf * (1.0 - r)
    cst = -0.5 * gf * xf * xf * (1.0 + r * r)
    t0 = 0.5 * (1.0 - r) * xf                             # Bessel argument zero

    # center-coordinate windows around the two envelope peaks
    lam_m = (lin - w2) / (2.0 * A)
    lam_p = (lin + w2) / (2.0 * A)
    merged = (lam_p - lam_m) <= 2.0 * T * sig

    win_lo, win_hi, win_parent, win_width = [], [], [], []
    idx = np.arange(xf.size)
    win_lo.append(lam_m[merged] - T * sig)
    win_hi.append(lam_p[merged] + T * sig)
    win_parent.append(idx[merged])
    # Merged windows contain the Bessel-argument zero with weight up to
    # O(1) (the separation bound gives w2*sig <= 2T there), so the panel
    # width must track the corner scale 1/w2 as well as the Gaussian scale.
    # Split windows never need this: their corner weight is exp(-(w2*sig)^2/2)
    # <= exp(-2 T^2).
    win_width.append(np.minimum(4.0 * sig,
                                np.maximum(0.25 * sig, 3.0 / np.maximum(w2[merged], 1e-300))))
    for lam_c in (lam_m, lam_p):
        win_lo.append(lam_c[~merged] - T * sig)
        win_hi.append(lam_c[~merged] + T * sig)
        win_parent.append(idx[~merged])
        win_width.append(np.full((~merged).sum(), 4.0 * sig))
    wlo = np.concatenate(win_lo)
    whi = np.concatenate(win_hi)
    parent = np.concatenate(win_parent)
    pan_width = np.concatenate(win_width)

    width = whi - wlo
    npan = np.maximum(1, np.ceil(width / pan_width).astype(np.intp))
    total = int(npan.sum())
    wrep = np.repeat(np.arange(wlo.size), npan)
    offs = np.arange(total) - np.repeat(np.cumsum(npan) - npan, npan)
    frac0 = offs / npan[wrep]
    frac1 = (offs + 1) / npan[wrep]
    lo = wlo[wrep] + width[wrep] * frac0
    hi = wlo[wrep] + width[wrep] * frac1
    par = parent[wrep]

    # prune panels whose envelope bound cannot matter: each exponent branch
    # is a concave parabola, so its panel maximum sits at an endpoint or at
    # the vertex; a panel 20 decades under the global leader is dead weight
    keep = _panel_keep_mask(lo, hi, lin[par], cst[par], w2[par], t0[par],
                            pair_pref[par], A)
    lo, hi, par = lo[keep], hi[keep], par[keep]

    return (
        np.ascontiguousarray(lo),
        np.ascontiguousarray(hi),
        np.ascontiguousarray(lin[par]),
        np.ascontiguousarray(cst[par]),
        np.ascontiguousarray(w2[par]),
        np.ascontiguousarray(t0[par]),
        np.ascontiguousarray(pair_pref[par]),
        A,
        n_lam,
    )


def _panel_keep_mask(lo, hi, lin, cst, w2, t0, pref, A, decades=46.0):
    def branch_max(sign):
        slope = lin + sign * w2
        const = cst - sign * w2 * t0
        vertex = slope / (2.0 * A)
        tstar = np.clip(vertex, lo, hi)
        vals = (-A * tstar + slope) * tstar + const
        e_lo = (-A * lo + slope) * lo + const
        e_hi = (-A * hi + slope) * hi + const
        return np.maximum(vals, np.maximum(e_lo, e_hi))

    env = np.maximum(branch_max(1.0), branch_max(-1.0))
    with np.errstate(divide="ignore"):
        bound = env + np.log(np.maximum(pref, 1e-300) * np.maximum(hi - lo, 1e-300))
    return bound > bound.max() - decades


# ---------------------------------------------------------------------------
# ensemble sampling layout
# ---------------------------------------------------------------------------

def normals_per_draw(beta):
    """Independent standard normals consumed per matrix draw."""
    return 6 if beta == 1 else 9


def scaled_entries_real(k):
    """Std deviations for (H11, H22, H33, H12, H13, H23) at coupling k, beta=1."""
    k2 = k * k
    return np.array([
        1.0,
        1.0,
        math.sqrt(k2 / (2.0 - k2)),
        math.sqrt(0.5),
        math.sqrt(0.5 * k2),
        math.sqrt(0.5 * k2),
    ])


def scaled_entries_herm(k):
    """Std deviations for (H11, H22, H33, Re12, Im12, Re13, Im13, Re23, Im23), beta=2."""
    k2 = k * k
    d3 = math.sqrt(0.5 * k2 / (2.0 - k2))
    off = 0.5 * k
    return np.array([
        math.sqrt(0.5),
        math.sqrt(0.5),
        d3,
        0.5,
        0.5,
        off,
        off,
        off,
        off,
    ])
