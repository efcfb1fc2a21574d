"""Seeded Monte Carlo sampling of the coupled 3x3 ensemble.

A single coupling parameter k ties a 1x1 block (the localized level) to a
2x2 Gaussian block.  k=0 decouples them completely, k=1 recovers the
standard full Gaussian ensembles.  Draws are reproducible per *draw index*:
matrix i always consumes the same counter-derived substream of the seeded
Philox stream, independent of chunking and worker count.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from . import _kernels
from ._kernels import common as _kc
from ._kernels import pure as _pure
from .exceptions import DomainError, RatioRmtError

__all__ = [
    "Coupling",
    "DegenerateTripleError",
    "EigenTriple",
    "RatioSample",
    "SampleMeta",
    "SymmetryClass",
    "eigensystem",
    "glr_ratio",
    "sample_matrix",
    "sample_ratios",
    "shannon_entropy",
]

# draws per work unit; a multiple of 4 keeps chunk starts on Philox
# counter-block boundaries for any normals-per-draw count
CHUNK_DRAWS = 1 << 16

DEGENERACY_REL = 1e-12


class DegenerateTripleError(RatioRmtError):
    """Lower spacing below the degeneracy threshold; discard and count."""


class SymmetryClass(Enum):
    ORTHOGONAL = 1
    UNITARY = 2

    @property
    def beta(self):
        return self.value

    @classmethod
    def from_beta(cls, beta):
        try:
            return cls(int(beta))
        except ValueError:
            raise DomainError(f"beta must be 1 or 2, got {beta!r}") from None


@dataclass(frozen=True)
class Coupling:
    """Coupling strength k between the localized level and the 2x2 block.

    The sampler accepts the full domain 0 <= k^2 < 2; the analytic
    evaluators are restricted to 0 <= k <= 1 (see ``in_analytic_range``).
    """

    k: float

    def __post_init__(self):
        if not math.isfinite(self.k) or self.k < 0 or self.k * self.k >= 2.0:
            raise DomainError(f"coupling requires 0 <= k^2 < 2, got k={self.k!r}")

    @property
    def sigma3_squared(self):
        """Variance scale k^2/(2-k^2) of the decoupled third diagonal entry."""
        return self.k * self.k / (2.0 - self.k * self.k)

    @property
    def in_analytic_range(self):
        return self.k <= 1.0


@dataclass(frozen=True)
class EigenTriple:
    """Eigen-decomposition of one draw.

    ``eigenvalues`` ascend; column j of ``vectors`` belongs to
    ``eigenvalues[j]``; ``entropies[j]`` is the Shannon entropy of that
    eigenvector's component weights; ``localized_index`` marks the
    minimum-entropy state (ties resolve to the lower eigenvalue).
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    entropies: np.ndarray
    localized_index: int


@dataclass(frozen=True)
class SampleMeta:
    beta: int
    k: float | None
    source: str
    seed: int | None
    n_requested: int
    n_discarded: int
    mode: str | None = None
    entropy_threshold: float | None = None


@dataclass
class RatioSample:
    """Spacing ratios r plus provenance metadata."""

    ratios: np.ndarray
    meta: SampleMeta
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ratios = np.asarray(self.ratios, dtype=float)
        if self.ratios.size and (not np.all(np.isfinite(self.ratios))
                                 or np.any(self.ratios < 0)):
            raise DomainError("ratios must be finite and nonnegative")

    def __len__(self):
        return self.ratios.size


def sample_matrix(symmetry, coupling, rng):
    """Draw one matrix of the coupled ensemble.

    Entries are drawn in a fixed order (diagonal first, then upper
    off-diagonals, real part before imaginary), so a given generator state
    maps to exactly one matrix.
    """
    symmetry = SymmetryClass(symmetry)
    if symmetry is SymmetryClass.ORTHOGONAL:
        e = rng.standard_normal(6) * _kc.scaled_entries_real(coupling.k)
        m = np.array([
            [e[0], e[3], e[4]],
            [e[3], e[1], e[5]],
            [e[4], e[5], e[2]],
        ])
    else:
        e = rng.standard_normal(9) * _kc.scaled_entries_herm(coupling.k)
        m = np.array([
            [e[0] + 0j, e[3] + 1j * e[4], e[5] + 1j * e[6]],
            [e[3] - 1j * e[4], e[1] + 0j, e[7] + 1j * e[8]],
            [e[5] - 1j * e[6], e[7] - 1j * e[8], e[2] + 0j],
        ])
    return m


def _check_self_adjoint(m):
    m = np.asarray(m)
    if m.shape != (3, 3):
        raise DomainError("expected a 3x3 matrix")
    if not np.allclose(m, m.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise DomainError("matrix is not self-adjoint")
    return m


def shannon_entropy(v):
    """-sum |v_j|^2 ln |v_j|^2 of a unit vector; zero weights contribute zero."""
    v = np.asarray(v)
    w = (v * v.conj()).real
    norm = w.sum()
    if abs(norm - 1.0) > 1e-9:
        raise DomainError(f"vector norm^2 = {norm!r}, expected 1 within 1e-9")
    s = 0.0
    for wj in w:
        if wj > 0.0:
            s -= wj * math.log(wj)
    return s


def eigensystem(m):
    """Eigenvalues (ascending), eigenvectors, entropies and localized index.

    Uses cyclic Jacobi rotations: unconditionally stable at 3x3 and the
    eigenvectors come out of the accumulated rotations directly.
    """
    m = _check_self_adjoint(m)
    if np.iscomplexobj(m):
        ev, vec = _pure._jacobi_herm(np.asarray(m, dtype=complex)[None])
    else:
        ev, vec = _pure._jacobi_real(np.asarray(m, dtype=float)[None])
    ev, vec = ev[0], vec[0]
    weights = (vec * vec.conj()).real
    entropies = np.array([
        -np.sum(np.where(weights[:, j] > 0,
                         weights[:, j] * np.log(np.where(weights[:, j] > 0,
                                                         weights[:, j], 1.0)),
                         0.0))
        for j in range(3)
    ])
    localized = int(np.argmax(entropies <= entropies.min() + 1e-12))
    return EigenTriple(ev, vec, entropies, localized)


def glr_ratio(triple):
    """Upper spacing over lower spacing of the ordered eigenvalue triple.

    Whichever member of the triple is the localized one, the three
    case-by-case ratio prescriptions all reduce to this quotient.
    """
    e1, e2, e3 = triple.eigenvalues
    lower = e2 - e1
    spread = e3 - e1
    if lower <= DEGENERACY_REL * spread:
        raise DegenerateTripleError(
            f"lower spacing {lower!r} below threshold ({DEGENERACY_REL} x spread)")
    return (e3 - e2) / lower


# ---------------------------------------------------------------------------
# bulk sampling
# ---------------------------------------------------------------------------

def _resolve_threads(threads):
    if threads is None:
        env = os.environ.get("RATIO_RMT_THREADS", "").strip()
        threads = int(env) if env else 0
    if threads < 0:
        raise DomainError("thread count must be >= 0")
    if threads == 0:
        threads = min(os.cpu_count() or 1, 8)
    return threads


def _normals_for_draws(beta, seed, start, count):
    """Standard normals for draws [start, start+count), chunk-independent.

    Draw i consumes the words [i*wpd, (i+1)*wpd) of the Philox stream keyed
    by the seed (wpd = normals per draw), realized through the inverse
    normal CDF.  Philox counters advance in 4-word blocks, so callers keep
    start*wpd divisible by 4.
    """
    wpd = _kc.normals_per_draw(beta)
    word0 = start * wpd
    if word0 % 4:
        raise ValueError("chunk start is not counter-block aligned")
    bg = Philox(key=seed)
    bg.advance(word0 // 4)
    u = Generator(bg).random(count * wpd)
    u[u == 0.0] = 2.0 ** -54  # ndtri(0) = -inf; measure-zero nudge
    return ndtri(u).reshape(count, wpd)


def _ratio_chunk(symmetry, coupling, seed, start, count):
    normals = _normals_for_draws(symmetry.beta, seed, start, count)
    kern = _kernels.ratios_real if symmetry is SymmetryClass.ORTHOGONAL \
        else _kernels.ratios_herm
    return kern(normals, coupling.k)


def sample_ratios(symmetry, coupling, n, seed, threads=None, diagnostics=False):
    """n accepted spacing ratios from independent draws.

    Deterministic for fixed (class, coupling, n, seed): the chunking policy
    is fixed and each draw owns a counter-derived substream, so worker
    count cannot change the output.  Degenerate draws (lower spacing under
    the relative threshold) are discarded, counted in the metadata, and
    replaced by subsequent draws.
    """
    symmetry = SymmetryClass(symmetry)
    if n < 1:
        raise DomainError("n must be >= 1")
    if not isinstance(coupling, Coupling):
        coupling = Coupling(coupling)
    threads = _resolve_threads(threads)

    pieces = []
    n_discarded = 0
    accepted = 0
    next_draw = 0
    while accepted < n:
        remaining = n - accepted
        # degenerate draws are ~measure zero; one pass normally suffices
        n_chunks = (remaining + CHUNK_DRAWS - 1) // CHUNK_DRAWS
        starts = [next_draw + j * CHUNK_DRAWS for j in range(n_chunks)]
        counts = [CHUNK_DRAWS] * (n_chunks - 1) + [remaining - (n_chunks - 1) * CHUNK_DRAWS]
        if threads > 1 and n_chunks > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(
                    lambda sc: _ratio_chunk(symmetry, coupling, seed, sc[0], sc[1]),
                    zip(starts, counts)))
        else:
            results = [_ratio_chunk(symmetry, coupling, seed, s, c)
                       for s, c in zip(starts, counts)]
        for (rat, ev_loc, s_loc, w3_loc), count in zip(results, counts):
            good = ~np.isnan(rat)
            n_discarded += int(count - good.sum())
            pieces.append((rat[good], ev_loc[good], s_loc[good], w3_loc[good]))
            accepted += int(good.sum())
        next_draw = starts[-1] + CHUNK_DRAWS

    ratios = np.concatenate([p[0] for p in pieces])[:n]
    meta = SampleMeta(beta=symmetry.beta, k=coupling.k, source="simulated",
                      seed=int(seed), n_requested=int(n), n_discarded=n_discarded)
    diag = {}
    if diagnostics:
        diag = {
            "localized_eigenvalue": np.concatenate([p[1] for p in pieces])[:n],
            "localized_entropy": np.concatenate([p[2] for p in pieces])[:n],
            "localized_axis3_weight": np.concatenate([p[3] for p in pieces])[:n],
        }
    return RatioSample(ratios=ratios, meta=meta, diagnostics=diag)
