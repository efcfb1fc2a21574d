"""Command-line surface: simulate, pdf, fit, ingest, validate.

Emits plot-ready CSV/JSON tables with full provenance headers (package
version, seed, quadrature settings) and no volatile fields, so a fixed
seed and flag set reproduces output files byte for byte.

Exit codes: 0 success, 1 numerical/domain failure, 2 usage or input parse
failure, 3 non-identifiable fit.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .analytic import (DensityGrid, master_integral, pdf_beta1, pdf_beta1_k0,
                       pdf_beta2, pdf_beta2_k0, poisson_ratio_pdf,
                       surmise_ratio_pdf)
from .ensemble import RatioSample, SampleMeta, SymmetryClass, sample_ratios
from .exceptions import (ConvergenceError, DomainError, LevelFileError,
                         NonIdentifiableError, RatioRmtError)
from .fitting import fit_k_histogram, fit_k_mle
from .oracle import load_fixtures, pdf_via_monte_carlo, spec_hash, verify_fixtures
from .spectra import TripleSelectionMode, extract_gl_ratios, parse_level_file, tag_localized

RATIOS_MAGIC = "# ratio-rmt ratios v1"
TABLE_MAGIC = "# ratio-rmt pdf table v1"


def _fmt(x):
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# ratios file format
# ---------------------------------------------------------------------------

def write_ratios_file(sample, stream):
    """One ratio per line, '#'-prefixed metadata header."""
    meta = sample.meta
    stream.write(RATIOS_MAGIC + "\n")
    stream.write(f"# version: {__version__}\n")
    pairs = [
        ("beta", meta.beta), ("k", meta.k), ("source", meta.source),
        ("seed", meta.seed), ("mode", meta.mode),
        ("entropy_threshold", meta.entropy_threshold),
        ("n_requested", meta.n_requested), ("n_discarded", meta.n_discarded),
    ]
    for key, val in pairs:
        if val is None:
            continue
        if isinstance(val, float):
            val = _fmt(val)
        stream.write(f"# {key}: {val}\n")
    for r in sample.ratios:
        stream.write(_fmt(r) + "\n")


def read_ratios_file(stream, source=""):
    meta_fields = {}
    ratios = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta_fields[key.strip()] = val.strip()
            continue
        try:
            ratios.append(float(line))
        except ValueError:
            raise LevelFileError(f"bad ratio value {line!r}", line_no) from None

    def _get(key, conv):
        raw_val = meta_fields.get(key)
        return None if raw_val is None else conv(raw_val)

    meta = SampleMeta(
        beta=_get("beta", int), k=_get("k", float),
        source=meta_fields.get("source", source or "file"),
        seed=_get("seed", int), mode=meta_fields.get("mode"),
        entropy_threshold=_get("entropy_threshold", float),
        n_requested=_get("n_requested", int) or len(ratios),
        n_discarded=_get("n_discarded", int) or 0,
    )
    return RatioSample(ratios=np.asarray(ratios, dtype=float), meta=meta)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")


def _close_out(fh):
    if fh is not sys.stdout:
        fh.close()


def cmd_simulate(args):
    if not (0.0 <= args.k and args.k * args.k < 2.0):
        raise UsageError(f"--k must satisfy 0 <= k^2 < 2, got {args.k}")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if args.k > 1.0:
        print(f"note: k={args.k} is outside the analytic-fit regime [0, 1]",
              file=sys.stderr)
    sample = sample_ratios(SymmetryClass.from_beta(args.beta), args.k,
                           args.n, args.seed)
    fh = _open_out(args.out)
    try:
        write_ratios_file(sample, fh)
    finally:
        _close_out(fh)
    print(f"wrote {len(sample)} ratios (discarded {sample.meta.n_discarded}) "
          f"to {args.out or 'stdout'}")
    return 0


def _pdf_evaluator(beta, k):
    symmetry = SymmetryClass.from_beta(beta)
    if symmetry is SymmetryClass.UNITARY:
        return lambda rr: pdf_beta2(k, rr)
    return lambda rr: pdf_beta1(k, rr)


def cmd_pdf(args):
    if not (0.0 <= args.k <= 1.0):
        raise UsageError(f"--k must lie in [0, 1] for pdf, got {args.k}")
    if args.points < 1:
        raise UsageError("--points must be >= 1")
    if args.r_min < 0 or args.r_max < args.r_min:
        raise UsageError("need 0 <= r-min <= r-max")
    if args.points == 1:
        if args.r_min != args.r_max:
            raise UsageError("a single-point grid needs r-min == r-max")
        grid = np.array([args.r_min])
    elif args.grid == "log":
        if args.r_min <= 0:
            raise UsageError("log grid requires r-min > 0")
        grid = np.geomspace(args.r_min, args.r_max, args.points)
    else:
        grid = np.linspace(args.r_min, args.r_max, args.points)

    evaluate = _pdf_evaluator(args.beta, args.k)
    values = np.asarray([evaluate(float(r)) for r in grid], dtype=float)
    normalization = DensityGrid(SymmetryClass.from_beta(args.beta), args.k).total_mass

    meta = {
        "version": __version__,
        "beta": args.beta,
        "k": args.k,
        "grid": args.grid,
        "r_min": args.r_min,
        "r_max": args.r_max,
        "points": args.points,
        "quad_spec": spec_hash(),
    }
    fh = _open_out(args.out)
    try:
        if args.format == "csv":
            fh.write(TABLE_MAGIC + "\n")
            for key, val in meta.items():
                fh.write(f"# {key}: {_fmt(val) if isinstance(val, float) else val}\n")
            fh.write("r,pdf\n")
            for r, p in zip(grid, values):
                fh.write(f"{_fmt(r)},{_fmt(p)}\n")
            fh.write(f"# normalization: {_fmt(normalization)}\n")
        else:
            json.dump({"meta": meta,
                       "normalization": normalization,
                       "rows": [[float(r), float(p)] for r, p in zip(grid, values)]},
                      fh, indent=1)
            fh.write("\n")
    finally:
        _close_out(fh)
    return 0


def cmd_fit(args):
    try:
        with open(args.input, encoding="utf-8") as fh:
            sample = read_ratios_file(fh, source=args.input)
    except OSError as exc:
        raise LevelFileError(f"cannot read {args.input}: {exc}") from None
    if len(sample) == 0:
        raise LevelFileError(f"no ratios in {args.input}")
    symmetry = SymmetryClass.from_beta(args.beta)
    if args.method == "mle":
        result = fit_k_mle(sample, symmetry, n_bootstrap=args.bootstrap,
                           seed=args.seed)
    else:
        result = fit_k_histogram(sample, symmetry)
    doc = {
        "meta": {
            "version": __version__,
            "input": args.input,
            "beta": args.beta,
            "method": args.method,
            "quad_spec": spec_hash(),
        },
        "result": result.to_dict(),
    }
    fh = _open_out(args.out)
    try:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
    finally:
        _close_out(fh)
    return 0


def cmd_ingest(args):
    try:
        with open(args.input, encoding="utf-8") as fh:
            seq = parse_level_file(fh, source=args.input)
    except OSError as exc:
        raise LevelFileError(f"cannot read {args.input}: {exc}") from None
    if args.entropy_threshold is not None:
        if seq.entropy is None:
            raise LevelFileError("entropy threshold given but the file has "
                                 "no entropy column")
        seq = tag_localized(seq, args.entropy_threshold)
    if seq.localized is None:
        raise LevelFileError("no localized flags: supply a localized column "
                             "or --entropy-threshold")
    mode = TripleSelectionMode(args.mode)
    sample = extract_gl_ratios(seq, mode, invert_selection=args.gg)
    if len(sample) == 0:
        print("warning: no ratios extracted (no localized level away from "
              "the sequence boundary?)", file=sys.stderr)
    fh = _open_out(args.out)
    try:
        write_ratios_file(sample, fh)
    finally:
        _close_out(fh)
    print(f"wrote {len(sample)} ratios (discarded {sample.meta.n_discarded}) "
          f"to {args.out or 'stdout'}")
    return 0


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def _check(checks, name, value, bound, ok=None):
    if ok is None:
        ok = bool(value <= bound)
    checks.append({"name": name, "ok": bool(ok), "value": float(value),
                   "bound": float(bound)})
    status = "ok  " if ok else "FAIL"
    print(f"{status} {name}: value={value:.3e} bound={bound:.3e}")


MASTER_PINNED = 0.2437002899395400  # closed form, confirmed by the PV oracle


def _validate_quick(checks, fixtures):
    sq3 = math.sqrt(3.0)
    _check(checks, "surmise_beta1_r1",
           abs(surmise_ratio_pdf(SymmetryClass.ORTHOGONAL, 1.0) - sq3 / 4.0), 1e-15)
    _check(checks, "surmise_beta2_r1",
           abs(surmise_ratio_pdf(SymmetryClass.UNITARY, 1.0) - sq3 / math.pi), 1e-15)
    _check(checks, "decoupled_beta1_r0",
           abs(pdf_beta1_k0(0.0) - 1.0 / math.sqrt(2.0)), 1e-15)
    _check(checks, "decoupled_beta2_r0",
           abs(pdf_beta2_k0(0.0) - 2.0 / math.pi), 1e-15)
    _check(checks, "poisson_r1", abs(poisson_ratio_pdf(1.0) - 0.25), 1e-15)
    _check(checks, "master_integral",
           abs(master_integral((1.0, 0.0, 4.0, 1.0, 2.0)) - MASTER_PINNED), 1e-12)
    _check(checks, "master_integral_swap",
           abs(master_integral((1.0, 0.0, 4.0, 2.0, 1.0))
               - master_integral((1.0, 0.0, 4.0, 1.0, 2.0))), 1e-14)
    worst = 0.0
    for k in (0.1, 0.4, 0.9):
        for r in (0.2, 0.5, 2.0, 5.0):
            worst = max(worst, abs(pdf_beta2(k, r) - pdf_beta2(k, 1.0 / r) / r ** 2))
    _check(checks, "inversion_beta2_closed", worst, 1e-6)
    r, k = 2.0, 0.4
    _check(checks, "inversion_beta1_quad",
           abs(pdf_beta1(k, r) - pdf_beta1(k, 1.0 / r) / r ** 2), 5e-4)
    _check(checks, "normalization_beta2_k05",
           abs(DensityGrid(SymmetryClass.UNITARY, 0.5).total_mass - 1.0), 1e-6)
    results = verify_fixtures(fixtures, rederive=False)
    bad = [res for res in results if not res["ok"]]
    _check(checks, f"fixtures_closed_side({len(results)} records)",
           float(len(bad)), 0.5, ok=not bad)


def _validate_full(checks, fixtures):
    results = verify_fixtures(fixtures, rederive=True)
    bad = [res for res in results if not res["ok"]]
    _check(checks, f"fixtures_rederived({len(results)} records)",
           float(len(bad)), 0.5, ok=not bad)
    for k in (0.1, 0.3, 0.5, 0.8):
        _check(checks, f"normalization_beta1_k{k}",
               abs(DensityGrid(SymmetryClass.ORTHOGONAL, k).total_mass - 1.0), 1e-3)
    edges = np.linspace(0.0, 6.0, 61)
    for beta in (1, 2):
        for k in (0.0, 0.3, 0.7, 1.0):
            rep = pdf_via_monte_carlo(SymmetryClass.from_beta(beta), k, edges,
                                      1_000_000, seed=20_260_000 + beta * 100 + int(k * 10))
            _check(checks, f"mc_ks_beta{beta}_k{k}", rep.ks_distance, 3e-3)


def cmd_validate(args):
    fixtures = load_fixtures(args.fixtures)
    checks = []
    _validate_quick(checks, fixtures)
    if args.suite == "full":
        _validate_full(checks, fixtures)
    n_bad = sum(1 for c in checks if not c["ok"])
    doc = {"suite": args.suite, "backend": BACKEND, "version": __version__,
           "checks": checks, "failures": n_bad}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    print(f"{len(checks) - n_bad}/{len(checks)} checks passed "
          f"(suite={args.suite}, backend={BACKEND})")
    return 0 if n_bad == 0 else 1


# ---------------------------------------------------------------------------
# parser / main
# ---------------------------------------------------------------------------

class UsageError(RatioRmtError):
    pass


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ratio-rmt",
        description="Spacing-ratio statistics for coupled generic/localized levels")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="sample spacing ratios from the ensemble")
    sim.add_argument("--beta", type=int, choices=(1, 2), required=True)
    sim.add_argument("--k", type=float, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    pdf = sub.add_parser("pdf", help="tabulate an exact ratio density")
    pdf.add_argument("--beta", type=int, choices=(1, 2), required=True)
    pdf.add_argument("--k", type=float, required=True)
    pdf.add_argument("--r-min", type=float, default=0.0)
    pdf.add_argument("--r-max", type=float, default=5.0)
    pdf.add_argument("--points", type=int, default=101)
    pdf.add_argument("--grid", choices=("uniform", "log"), default="uniform")
    pdf.add_argument("--format", choices=("csv", "json"), default="csv")
    pdf.add_argument("--out", default=None)
    pdf.set_defaults(func=cmd_pdf)

    fit = sub.add_parser("fit", help="fit the coupling k to a ratios file")
    fit.add_argument("input")
    fit.add_argument("--beta", type=int, choices=(1, 2), required=True)
    fit.add_argument("--method", choices=("mle", "histogram-ls"), default="mle")
    fit.add_argument("--bootstrap", type=int, default=200)
    fit.add_argument("--seed", type=int, default=None)
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=cmd_fit)

    ing = sub.add_parser("ingest", help="extract g-l ratios from a level file")
    ing.add_argument("input")
    ing.add_argument("--entropy-threshold", type=float, default=None)
    ing.add_argument("--mode", choices=tuple(m.value for m in TripleSelectionMode),
                     default=TripleSelectionMode.ALL_ADJACENT.value)
    ing.add_argument("--gg", action="store_true",
                     help="invert the flag filter (generic-generic ratios)")
    ing.add_argument("--out", default=None)
    ing.set_defaults(func=cmd_ingest)

    val = sub.add_parser("validate", help="run the oracle comparison suite")
    val.add_argument("--suite", choices=("quick", "full"), default="quick")
    val.add_argument("--fixtures", default=None)
    val.add_argument("--out", default=None)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LevelFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonIdentifiableError as exc:
        print(f"error: {exc} {exc.diagnostics}", file=sys.stderr)
        return 3
    except (DomainError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
