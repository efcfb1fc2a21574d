#!/usr/bin/env python3
"""Regenerate the pinned oracle fixtures.

Each record pins a joint-density-quadrature value of the ratio density at
one (beta, k, r), with the absolute error bound the release gate enforces
and the hash of the quadrature settings that produced it.
"""

import pathlib
import sys

from ratio_rmt.ensemble import SymmetryClass
from ratio_rmt.oracle import pdf_via_joint_quadrature, save_fixtures, spec_hash

GRID = [
    (2, (0.2, 0.5, 0.8), 1e-6),
    (1, (0.2, 0.3, 0.5), 2e-4),
]
RS = (0.5, 1.0, 2.0)


def main(out_path):
    records = []
    for beta, ks, bound in GRID:
        for k in ks:
            for r in RS:
                value = pdf_via_joint_quadrature(SymmetryClass.from_beta(beta), k, r)
                records.append({
                    "beta": beta, "k": k, "r": r, "value": value,
                    "abs_err_bound": bound, "spec_hash": spec_hash(),
                })
                print(f"beta={beta} k={k} r={r}: {value:.12f}")
    save_fixtures(records, out_path)
    print(f"wrote {len(records)} records to {out_path}")


if __name__ == "__main__":
    default = pathlib.Path(__file__).resolve().parents[1] / "src/ratio_rmt/data/oracle_fixtures.json"
    main(sys.argv[1] if len(sys.argv) > 1 else default)
