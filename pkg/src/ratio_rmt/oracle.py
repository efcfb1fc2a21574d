"""Independent brute-force validators for the closed-form densities.

Every closed form is pinned against a representation it was not derived
from in this codebase: a two-dimensional quadrature over the joint
eigenvalue density (after reducing the ratio delta function), or a seeded
Monte Carlo run.  For the unitary class the quadrature always integrates
the summed, manifestly regular joint density, never the individually
singular pieces it decomposes into.

First-run oracle values are pinned into a versioned fixtures file together
with the quadrature settings that produced them; later runs compare
against the fixtures and re-derive on demand.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .analytic import (DEFAULT_THRESHOLDS, DensityGrid, joint_density_beta1,
                       joint_density_beta2, pdf_beta1, pdf_beta2)
from .ensemble import SymmetryClass, sample_ratios
from .exceptions import ConvergenceError, DomainError
from .numerics import DEFAULT_QUAD, bessel_i0_scaled
from ._kernels.common import gauss_legendre

__all__ = [
    "ComparisonReport",
    "compare_densities",
    "default_fixture_path",
    "load_fixtures",
    "pdf_via_joint_quadrature",
    "pdf_via_monte_carlo",
    "save_fixtures",
    "verify_fixtures",
]

FIXTURE_VERSION = 1


@dataclass
class ComparisonReport:
    """Pointwise comparison of two density estimates on a common grid."""

    grid: np.ndarray
    reference: np.ndarray
    candidate: np.ndarray
    sup_norm: float
    ks_distance: float | None = None
    n_samples: int | None = None
    details: dict = field(default_factory=dict)


def compare_densities(f, g, r_grid):
    """Evaluate two densities on a grid and report the sup-norm distance."""
    grid = np.asarray(r_grid, dtype=float)
    ref = np.asarray([f(r) for r in grid], dtype=float)
    cand = np.asarray([g(r) for r in grid], dtype=float)
    return ComparisonReport(grid=grid, reference=ref, candidate=cand,
                            sup_norm=float(np.max(np.abs(ref - cand))) if grid.size else 0.0)


# ---------------------------------------------------------------------------
# joint-density quadrature route
# ---------------------------------------------------------------------------

def _panels(segments, n_nodes):
    """Gauss-Legendre nodes/weights over a list of (lo, hi) segments."""
    gx, gw = gauss_legendre(n_nodes)
    xs, ws = [], []
    for lo, hi in segments:
        if hi <= lo:
            continue
        half = 0.5 * (hi - lo)
        xs.append(0.5 * (lo + hi) + half * gx)
        ws.append(half * gw)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def _x_segments(xstar, xmax):
    return [(0.0, xstar), (xstar, min(2.2 * xstar, xmax)), (min(2.2 * xstar, xmax), xmax)]


def _ridge_segments(centers, half_width, panel_width, outer_margin):
    """Merged panel edges covering +-half_width around each ridge center."""
    centers = np.sort(np.asarray(centers, dtype=float))
    lo = centers[0] - half_width - outer_margin
    hi = centers[-1] + half_width + outer_margin
    edges = {lo, hi}
    n_per = max(3, int(math.ceil(2.0 * half_width / panel_width)))
    for c in centers:
        for e in np.linspace(c - half_width, c + half_width, n_per + 1):
            if lo < e < hi:
                edges.add(float(e))
    edges = sorted(edges)
    return list(zip(edges[:-1], edges[1:]))


def _joint_quad_beta2(k, r, quad, n_x, n_lam):
    if r == 0.0:
        return 0.0
    T = quad.truncation_sigmas
    k2 = k * k
    sig_ridge = 0.5 * k / math.sqrt(1.0 - k2)
    sig_x = 1.0 / math.sqrt(2.0 * (1.0 + r * r))
    xstar = 2.0 * sig_x
    xmax = (T + 4.0) * sig_x
    x, wx = _panels(_x_segments(xstar, xmax), n_x)
    total = 0.0
    half = T * sig_ridge + 0.35
    for xi, wxi in zip(x, wx):
        segs = _ridge_segments([0.0, xi, -r * xi], half, 3.0 * sig_ridge, 0.6 * T)
        lam, wl = _panels(segs, n_lam)
        vals = joint_density_beta2(k, lam - xi, lam + r * xi, lam)
        total += wxi * xi * 6.0 * float(np.sum(wl * vals))
    return total


def _dyadic_both_ends(lo, hi, levels, n_nodes):
    mid = 0.5 * (lo + hi)
    edges = [lo] + [lo + (mid - lo) * 2.0 ** -j for j in range(levels, 0, -1)]
    edges += [hi - (hi - mid) * 2.0 ** -j for j in range(1, levels + 1)] + [hi]
    return _panels(list(zip(edges[:-1], edges[1:])), n_nodes)


def _plo_log_u_rows(k, S, D, n_t=10, levels=9):
    """Row-vectorized log of the joint-density auxiliary integral.

    Same integrand as joint_density_beta1's internal integral (after the
    endpoint desingularization u = U - t^2), evaluated for whole arrays of
    (S, D) at once with per-row max subtraction; the integrand ramps
    monotonically in t^2, so panels refined toward both ends suffice.
    """
    U = 2.0 / (k * k) - 1.0
    t, wt = _dyadic_both_ends(0.0, math.sqrt(U - 1.0), levels, n_t)
    u = U - t * t
    arg = 0.25 * (u - 1.0)[None, :] * D[:, None]
    G = -0.25 * (u + 1.0)[None, :] * S[:, None] + np.abs(arg)
    M = np.max(G, axis=1)
    vals = np.exp(G - M[:, None]) * bessel_i0_scaled(arg)
    return M + np.log(2.0 * np.sum(wt[None, :] * vals, axis=1))


def _joint_quad_beta1(k, r, quad, n_x, n_lam):
    if r == 0.0:
        return 0.0
    T = quad.truncation_sigmas
    k2 = k * k
    A = (2.0 + k2) / (2.0 * k2)
    U = 2.0 / k2 - 1.0
    sig = 1.0 / math.sqrt(2.0 * A)
    # branch envelopes are convex in the auxiliary integration variable, so
    # the x decay rate and center-coordinate extremes sit at its endpoints
    uds = np.array([1.0, U])
    gg = 0.5 * (uds + 1.0)
    hh = 0.5 * (uds - 1.0)
    lin_p = gg * (1.0 - r) + hh * (1.0 + r)
    lin_m = gg * (1.0 - r) - hh * (1.0 + r)
    vp = lin_p ** 2 / (4.0 * A) - 0.25 * (uds + 1.0) * (1.0 + r * r) \
        + 0.25 * (uds - 1.0) * (1.0 + r) * (r - 1.0)
    vm = lin_m ** 2 / (4.0 * A) - 0.25 * (uds + 1.0) * (1.0 + r * r) \
        - 0.25 * (uds - 1.0) * (1.0 + r) * (r - 1.0)
    m = max(vp.max(), vm.max())
    if m >= 0:
        raise ConvergenceError("joint-density envelope not decaying",
                               best_estimate=None, error_bound=None)
    xstar = math.sqrt(2.0 / abs(m))
    xmax = (0.55 * T + 1.0) * xstar
    x, wx = _panels(_x_segments(xstar, xmax), n_x)
    pref = math.sqrt(2.0 - k2) / (24.0 * math.pi * k2 * math.sqrt(1.0 - k2))
    total = 0.0
    for xi, wxi in zip(x, wx):
        lam_lo = min(float((lin_m * xi).min() / (2.0 * A)), 0.5 * (1.0 - r) * xi) - T * sig
        lam_hi = max(float((lin_p * xi).max() / (2.0 * A)), 0.5 * (1.0 - r) * xi) + T * sig
        n_seg = max(1, int(math.ceil((lam_hi - lam_lo) / (3.0 * sig))))
        edges = np.linspace(lam_lo, lam_hi, n_seg + 1)
        lam, wl = _panels(list(zip(edges[:-1], edges[1:])), n_lam)
        l1 = lam - xi
        l2 = lam + r * xi
        S = l1 * l1 + l2 * l2 - 2.0 * lam * lam
        D = l1 * l1 - l2 * l2
        log_u = _plo_log_u_rows(k, S, D)
        dens = pref * (r * (r + 1.0) * xi ** 3) * np.exp(-A * lam * lam + log_u)
        total += wxi * xi * 6.0 * float(np.sum(wl * dens))
    return total


_JQ_STAGES = {1: ((16, 8), (24, 12)), 2: ((24, 12), (34, 17))}


def pdf_via_joint_quadrature(symmetry, k, r, quad=DEFAULT_QUAD):
    """Ratio density via 2-D quadrature over the joint eigenvalue density.

    Integrates x * 3! * P(k; lam - x, lam + r x, lam) over the center
    coordinate and the lower spacing x.  This is the validation route for
    the closed forms; it shares none of their algebra.  Cost grows as k
    shrinks (the localized ridge narrows like k).
    """
    symmetry = SymmetryClass(symmetry)
    if not (0.0 < k < DEFAULT_THRESHOLDS.k_high):
        raise DomainError("joint-quadrature oracle requires 0 < k < k_high")
    if r < 0:
        raise DomainError("r must be >= 0")
    worker = _joint_quad_beta2 if symmetry is SymmetryClass.UNITARY else _joint_quad_beta1
    (nx1, nl1), (nx2, nl2) = _JQ_STAGES[symmetry.beta]
    v1 = worker(k, r, quad, nx1, nl1)
    v2 = worker(k, r, quad, nx2, nl2)
    err = abs(v2 - v1)
    if err > max(quad.abs_tol, 10.0 * quad.rel_tol * abs(v2)):
        raise ConvergenceError(
            f"joint-density quadrature unstable at (beta={symmetry.beta}, k={k}, r={r})",
            best_estimate=v2, error_bound=err)
    return v2


def pdf_via_monte_carlo(symmetry, k, r_grid, n, seed, cdf=None, threads=None):
    """Histogram density from a seeded run plus a KS distance to a model CDF.

    ``r_grid`` supplies the histogram bin edges; the report's grid column
    holds the bin midpoints.  When no CDF callable is given, the analytic
    one for (symmetry, k) is built by cumulative quadrature of the pdf.
    """
    if n < 10_000:
        raise DomainError("need at least 1e4 samples for a stable histogram")
    symmetry = SymmetryClass(symmetry)
    edges = np.asarray(r_grid, dtype=float)
    sample = sample_ratios(symmetry, k, n, seed, threads=threads)
    grid = DensityGrid(symmetry, k)
    if cdf is None:
        cdf = grid.cdf
    counts, _ = np.histogram(sample.ratios, bins=edges)
    density = counts / (n * np.diff(edges))
    mid = 0.5 * (edges[1:] + edges[:-1])
    reference = grid.pdf(mid)
    rs = np.sort(sample.ratios)
    F = np.asarray(cdf(rs), dtype=float)
    i = np.arange(1, n + 1)
    ks = float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))
    return ComparisonReport(
        grid=mid, reference=reference, candidate=density,
        sup_norm=float(np.max(np.abs(reference - density))),
        ks_distance=ks, n_samples=int(n),
        details={"seed": int(seed), "beta": symmetry.beta, "k": float(k),
                 "n_discarded": sample.meta.n_discarded,
                 "model_total_mass": grid.total_mass})


# ---------------------------------------------------------------------------
# pinned fixtures
# ---------------------------------------------------------------------------

def spec_hash(quad=DEFAULT_QUAD):
    blob = f"gk-panel-v{FIXTURE_VERSION}|{quad.abs_tol!r}|{quad.rel_tol!r}|" \
           f"{quad.max_subdivisions}|{quad.truncation_sigmas!r}"
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def default_fixture_path():
    return resources.files("ratio_rmt").joinpath("data/oracle_fixtures.json")


def load_fixtures(path=None):
    src = default_fixture_path() if path is None else path
    with open(str(src), encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != FIXTURE_VERSION:
        raise DomainError(f"unsupported fixtures version {doc.get('version')!r}")
    return doc["records"]

def save_fixtures(records, path):
    doc = {"version": FIXTURE_VERSION, "records": records}
    with open(str(path), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _closed_form(beta, k, r):
    if beta == 2:
        return pdf_beta2(k, r)
    return pdf_beta1(k, r)


def verify_fixtures(records=None, rederive=False, quad=DEFAULT_QUAD):
    """Check every pinned record; returns a list of result dicts.

    With ``rederive`` the oracle side is recomputed from scratch (slow);
    otherwise the stored oracle value is compared against the closed form
    at the stored error bound.
    """
    if records is None:
        records = load_fixtures()
    results = []
    for rec in records:
        beta, k, r = rec["beta"], rec["k"], rec["r"]
        bound = rec["abs_err_bound"]
        closed = _closed_form(beta, k, r)
        entry = {"beta": beta, "k": k, "r": r, "bound": bound,
                 "value": rec["value"], "closed_form": closed}
        ok = abs(closed - rec["value"]) <= bound
        entry["closed_vs_pinned"] = abs(closed - rec["value"])
        if rederive:
            fresh = pdf_via_joint_quadrature(SymmetryClass(beta), k, r, quad)
            entry["rederived"] = fresh
            entry["rederived_vs_pinned"] = abs(fresh - rec["value"])
            ok = ok and abs(fresh - rec["value"]) <= bound
        entry["ok"] = bool(ok)
        results.append(entry)
    return results
