#!/usr/bin/env python3
"""Recompute the reference kappa/AUROC score tables from their confusion matrices.

The six matrices below were published to four decimal places alongside
their FPR/FNR pairs and headline scores. This script replays them through
the evaluation pipeline (`eval --from-confusion` then `report`) and checks
that every recomputed score lands within the rounding-driven tolerances:
kappa +/- 1.5e-3, AUROC +/- 1e-6 when rebuilt from the published rate
pairs. Exits nonzero on any mismatch.
"""
import argparse
import json
import sys
import tempfile
from pathlib import Path

from neurogrow.cli import main as neurogrow_main

MATRICES = [
    {"method": "unet-floodfill", "tn": 0.9579, "fp": 0.0099, "fn": 0.0103, "tp": 0.0219,
     "fpr": 0.010224, "fnr": 0.319044},
    {"method": "unet-regiongrow", "tn": 0.9648, "fp": 0.0030, "fn": 0.0143, "tp": 0.0178,
     "fpr": 0.003077, "fnr": 0.446302},
    {"method": "unet-manual", "tn": 0.9402, "fp": 0.0276, "fn": 0.0108, "tp": 0.0214,
     "fpr": 0.028521, "fnr": 0.334855},
    {"method": "segnet-floodfill", "tn": 0.9259, "fp": 0.0421, "fn": 0.0104, "tp": 0.0217,
     "fpr": 0.043478, "fnr": 0.322915},
    {"method": "segnet-regiongrow", "tn": 0.9343, "fp": 0.0336, "fn": 0.0055, "tp": 0.0266,
     "fpr": 0.034758, "fnr": 0.171410},
    {"method": "segnet-manual", "tn": 0.9329, "fp": 0.0351, "fn": 0.0011, "tp": 0.0310,
     "fpr": 0.036248, "fnr": 0.032981},
]

EXPECTED = {
    "unet-floodfill": (0.674656, 0.835366),
    "unet-regiongrow": (0.664252, 0.775311),
    "unet-manual": (0.508445, 0.818312),
    "segnet-floodfill": (0.428534, 0.816803),
    "segnet-regiongrow": (0.557270, 0.896916),
    "segnet-manual": (0.615110, 0.965385),
}

KAPPA_TOL = 1.5e-3
AUROC_TOL = 1e-6


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="keep the runs file and CSV table under this directory")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        out_dir = Path(args.out) if args.out else Path(tmp)
        out_dir.mkdir(parents=True, exist_ok=True)
        matrices_path = out_dir / "reference_matrices.json"
        runs_path = out_dir / "reference_runs.json"
        matrices_path.write_text(json.dumps(MATRICES, indent=2) + "\n")

        rc = neurogrow_main(["eval", "--from-confusion", str(matrices_path), "--out", str(runs_path)])
        if rc != 0:
            print(f"eval failed with exit code {rc}", file=sys.stderr)
            return rc

        print()
        rc = neurogrow_main(["report", str(runs_path), "--out", str(out_dir / "reference_table.csv")])
        if rc != 0:
            print(f"report failed with exit code {rc}", file=sys.stderr)
            return rc

        failures = 0
        runs = json.loads(runs_path.read_text())["runs"]
        print()
        for run in runs:
            rep = run["aggregate"]["report"]
            want_kappa, want_auroc = EXPECTED[run["method"]]
            kappa_err = abs(rep["kappa"] - want_kappa)
            auroc_err = abs(rep["auroc"] - want_auroc)
            status = "ok" if kappa_err <= KAPPA_TOL and auroc_err <= AUROC_TOL else "MISMATCH"
            if status == "MISMATCH":
                failures += 1
            print(
                f"{run['method']:20s} kappa err {kappa_err:.2e} (tol {KAPPA_TOL}), "
                f"auroc err {auroc_err:.2e} (tol {AUROC_TOL}) ... {status}"
            )
        if failures:
            print(f"{failures} score(s) out of tolerance", file=sys.stderr)
            return 1
        print("all six reference scores reproduced within tolerance")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
