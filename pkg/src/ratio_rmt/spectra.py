"""Ingest externally computed level sequences and extract g-l spacing ratios.

A level file carries an ordered energy spectrum, optionally a per-level
information entropy, and optionally per-level localized flags.  Ratios are
scale-free, so no unfolding is applied or needed.

File format (External interface):
    UTF-8 text, one record per line, comma separated.
    Required header line:  energy[,entropy][,localized]
    Fields: energy (decimal, required), entropy (decimal, optional),
    localized (0/1, optional).  Comment lines start with '#'.
"""

import io
import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .ensemble import RatioSample, SampleMeta
from .exceptions import DomainError, LevelFileError

__all__ = [
    "LevelSequence",
    "TripleSelectionMode",
    "extract_gl_ratios",
    "parse_level_file",
    "tag_localized",
    "write_level_file",
]

DUPLICATE_REL_TOL = 1e-12
# lower-spacing cutoff is relative to the local mean spacing over this window
DEGENERACY_WINDOW = 21
DEGENERACY_REL = 1e-10


class TripleSelectionMode(Enum):
    """Which consecutive triples produce a g-l ratio.

    The selection rule is genuinely ambiguous ("at least one spacing of the
    g-l type"): CENTERED_ONLY takes triples whose middle level is localized,
    matching the matrix model where the triple brackets the localized
    eigenvalue; ALL_ADJACENT takes every triple containing a localized
    level, each triple once.
    """

    CENTERED_ONLY = "centered"
    ALL_ADJACENT = "all-adjacent"


@dataclass(frozen=True)
class LevelSequence:
    """Strictly ascending energies with optional entropy/localized columns."""

    energies: np.ndarray
    entropy: np.ndarray | None = None
    localized: np.ndarray | None = None
    entropy_threshold: float | None = None
    source: str = ""

    def __len__(self):
        return self.energies.size


def _parse_row(parts, n_cols, line_no):
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise LevelFileError(f"malformed value ({exc})", line_no) from None
    if len(vals) != n_cols:
        raise LevelFileError(
            f"expected {n_cols} fields per the header, got {len(vals)}", line_no)
    return vals


def parse_level_file(stream, source=""):
    """Parse a level file into a sorted LevelSequence.

    Raises LevelFileError with the offending line number on malformed rows,
    on duplicate energies (within 1e-12 relative), and on empty input.
    """
    if isinstance(stream, (str, bytes)):
        stream = io.StringIO(stream.decode() if isinstance(stream, bytes) else stream)
    header = None
    rows = []
    line_nos = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if header is None:
            cols = [c.strip().lower() for c in line.split(",")]
            if cols[0] != "energy" or not set(cols[1:]) <= {"entropy", "localized"} \
                    or len(cols) != len(set(cols)):
                raise LevelFileError(
                    "header must be 'energy[,entropy][,localized]'", line_no)
            header = cols
            continue
        rows.append(_parse_row(line.split(","), len(header), line_no))
        line_nos.append(line_no)
    if header is None or not rows:
        raise LevelFileError("no level records found")

    data = np.asarray(rows, dtype=float)
    order = np.argsort(data[:, 0], kind="stable")
    data = data[order]
    line_nos = [line_nos[i] for i in order]
    energies = data[:, 0]
    scale = np.maximum(np.abs(energies[1:]), np.abs(energies[:-1]))
    dup = np.diff(energies) <= DUPLICATE_REL_TOL * np.maximum(scale, 1e-300)
    if dup.any():
        j = int(np.argmax(dup))
        raise LevelFileError(
            f"duplicate energy {energies[j + 1]!r} (within {DUPLICATE_REL_TOL} relative)",
            line_nos[j + 1])

    entropy = data[:, header.index("entropy")] if "entropy" in header else None
    localized = None
    if "localized" in header:
        col = data[:, header.index("localized")]
        if not np.all((col == 0.0) | (col == 1.0)):
            raise LevelFileError("localized column must contain only 0 or 1")
        localized = col.astype(bool)
    return LevelSequence(energies=energies, entropy=entropy, localized=localized,
                         source=source)


def write_level_file(seq, stream):
    """Serialize a LevelSequence in the documented format (round-trips exactly)."""
    cols = ["energy"]
    if seq.entropy is not None:
        cols.append("entropy")
    if seq.localized is not None:
        cols.append("localized")
    stream.write(",".join(cols) + "\n")
    for i in range(len(seq)):
        parts = [f"{seq.energies[i]:.17g}"]
        if seq.entropy is not None:
            parts.append(f"{seq.entropy[i]:.17g}")
        if seq.localized is not None:
            parts.append(str(int(seq.localized[i])))
        stream.write(",".join(parts) + "\n")


def tag_localized(seq, threshold):
    """Flag levels with entropy <= threshold as localized.

    The threshold is system specific (it depends on the basis and the
    bulk-state entropy scale), so there is no default; it is stored on the
    sequence for provenance.
    """
    if seq.entropy is None:
        raise DomainError("tag_localized requires an entropy column")
    if not math.isfinite(threshold):
        raise DomainError("threshold must be finite")
    flags = seq.entropy <= threshold
    if not flags.any():
        warnings.warn("entropy threshold below the minimum entropy: "
                      "no level tagged localized", stacklevel=2)
    return replace(seq, localized=flags, entropy_threshold=float(threshold))


def _local_mean_spacing(energies, i):
    half = DEGENERACY_WINDOW // 2
    lo = max(0, i - half)
    hi = min(energies.size, i + half + 1)
    window = energies[lo:hi]
    return float(np.mean(np.diff(window)))


def extract_gl_ratios(seq, mode=TripleSelectionMode.ALL_ADJACENT,
                      invert_selection=False):
    """Spacing ratios from consecutive triples containing localized levels.

    For each selected triple (E_{i-1}, E_i, E_{i+1}) the ratio is the upper
    spacing over the lower spacing.  ``invert_selection`` flips the flag
    filter (g-g extraction, offered as a convenience).  Triples with a
    degenerate lower spacing are discarded and counted.
    """
    mode = TripleSelectionMode(mode)
    if seq.localized is None:
        raise DomainError("sequence has no localized flags; run tag_localized "
                          "or supply a localized column")
    if len(seq) < 3:
        raise DomainError("need at least 3 levels to form a triple")
    flags = ~seq.localized if invert_selection else seq.localized
    e = seq.energies
    ratios = []
    n_discarded = 0
    for i in range(1, len(seq) - 1):
        if mode is TripleSelectionMode.CENTERED_ONLY:
            selected = flags[i]
        else:
            selected = flags[i - 1] or flags[i] or flags[i + 1]
        if not selected:
            continue
        lower = e[i] - e[i - 1]
        upper = e[i + 1] - e[i]
        if lower <= DEGENERACY_REL * _local_mean_spacing(e, i):
            n_discarded += 1
            continue
        ratios.append(upper / lower)
    meta = SampleMeta(beta=None, k=None,
                      source=seq.source or "levels", seed=None,
                      n_requested=len(ratios), n_discarded=n_discarded,
                      mode=mode.value, entropy_threshold=seq.entropy_threshold)
    return RatioSample(ratios=np.asarray(ratios, dtype=float), meta=meta)
