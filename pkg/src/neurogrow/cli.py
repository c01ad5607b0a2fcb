"""Command-line surface: grow, eval, report, augment, extract-points, binarize.

Exit codes are a stable contract: 0 success, 1 internal error, 2 usage,
3 I/O, 4 schema/format. Soft per-slice problems (a missing points file, a
mismatched pair) are warnings unless --strict upgrades them to errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import augment as augment_mod
from .clickpoints import extract_from_overlay, parse_clickpoints, serialize_clickpoints
from .errors import (
    ClassMismatch,
    CorruptData,
    DimensionMismatch,
    IoFailure,
    MalformedRunFile,
    MismatchedPointFile,
    MissingFile,
    NeurogrowError,
    SchemaViolation,
    UnmatchedFiles,
    UnsupportedFormat,
)
from .floodfill import FloodFillParams, grow_floodfill
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    build_report,
    confusion_from_masks,
    format_confusion,
    pool_counts,
)
from .raster import (
    load_image,
    load_mask,
    load_overlay,
    save_image,
    save_label_raster,
    threshold_fixed,
    threshold_otsu,
)
from .raster import NEURON
from .regiongrow import RegionGrowParams, grow_all

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SCHEMA = 4

IMAGE_SUFFIXES = (".pgm", ".png")


def _image_files(directory: Path) -> list[Path]:
    if not directory.is_dir():
        raise MissingFile(f"{directory} is not a directory")
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)


def _parse_threshold(text: str) -> int | None:
    if text == "auto":
        return None
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"threshold must be 'auto' or an integer, got {text!r}")
    if not 0 <= value <= 255:
        raise argparse.ArgumentTypeError(f"threshold must be in 0..255, got {value}")
    return value


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2) + "\n")


# --- grow ----------------------------------------------------------------------

@dataclass(frozen=True)
class _GrowJob:
    image: str
    points: str
    out_dir: str
    method: str
    threshold: int | None
    se_radius: int
    connectivity: int
    leak_fraction: float
    grow_threshold: int
    max_region_fraction: float
    luma: bool


def _run_grow_job(job: _GrowJob) -> dict:
    img = load_image(job.image, allow_color=job.luma)
    seeds = parse_clickpoints(job.points)
    if job.method == "floodfill":
        result = grow_floodfill(
            img,
            seeds,
            FloodFillParams(
                threshold=job.threshold,
                se_radius=job.se_radius,
                connectivity=job.connectivity,
                leak_fraction=job.leak_fraction,
            ),
        )
    else:
        cap = max(1, int(job.max_region_fraction * img.width * img.height))
        result = grow_all(
            img,
            seeds,
            RegionGrowParams(
                threshold=job.grow_threshold,
                connectivity=job.connectivity,
                max_region=cap,
            ),
        )
    stem = Path(job.image).stem
    out_dir = Path(job.out_dir)
    save_label_raster(result.labels, out_dir / f"{stem}__labels.png")
    save_image(result.union_mask(), out_dir / f"{stem}__mask.png")
    _write_json(out_dir / f"{stem}__report.json", result.report())
    return {"slice": stem, "leaked": result.leaked_ids, "missed": result.missed_ids}


def cmd_grow(args: argparse.Namespace) -> int:
    images = _image_files(Path(args.images))
    if not images:
        raise MissingFile(f"no images in {args.images}")
    points_dir = Path(args.points)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs: list[_GrowJob] = []
    skipped: list[str] = []
    for image_path in images:
        points_path = None
        for suffix in (".json", ".csv"):
            candidate = points_dir / f"{image_path.stem}{suffix}"
            if candidate.exists():
                points_path = candidate
                break
        if points_path is None:
            if args.strict:
                raise MissingFile(f"no points file for {image_path.name} in {points_dir}")
            print(f"warning: no points file for {image_path.name}, slice skipped", file=sys.stderr)
            skipped.append(image_path.stem)
            continue
        jobs.append(
            _GrowJob(
                image=str(image_path),
                points=str(points_path),
                out_dir=str(out_dir),
                method=args.method,
                threshold=args.threshold,
                se_radius=args.se_radius,
                connectivity=args.connectivity,
                leak_fraction=args.leak_fraction,
                grow_threshold=args.grow_threshold,
                max_region_fraction=args.max_region_fraction,
                luma=args.luma,
            )
        )

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_run_grow_job, jobs))
    else:
        summaries = [_run_grow_job(job) for job in jobs]

    summaries.sort(key=lambda s: s["slice"])
    leaked = sum(len(s["leaked"]) for s in summaries)
    missed = sum(len(s["missed"]) for s in summaries)
    for s in summaries:
        if s["leaked"] or s["missed"]:
            print(f"warning: {s['slice']}: leaked {s['leaked']} missed {s['missed']}", file=sys.stderr)
    print(
        f"grew {len(summaries)} slice(s) with {args.method}: "
        f"{leaked} leaked id(s), {missed} missed id(s), {len(skipped)} slice(s) skipped",
        file=sys.stderr,
    )
    return EXIT_OK


# --- eval ----------------------------------------------------------------------

def _counts_to_dict(c: ConfusionCounts) -> dict:
    return {
        "tp": c.tp,
        "tn": c.tn,
        "fp": c.fp,
        "fn": c.fn,
        "raw": list(c.raw) if c.raw is not None else None,
    }


def _counts_from_dict(doc: dict) -> ConfusionCounts:
    raw = doc.get("raw")
    if raw is not None:
        return ConfusionCounts.from_raw(*(int(v) for v in raw))
    return ConfusionCounts(tp=float(doc["tp"]), tn=float(doc["tn"]), fp=float(doc["fp"]), fn=float(doc["fn"]))


_CSV_FIELDS = [
    "name",
    "tp",
    "tn",
    "fp",
    "fn",
    "accuracy",
    "jaccard",
    "dice",
    "kappa",
    "observed_agreement",
    "chance_agreement",
    "fpr",
    "fnr",
    "auroc",
    "kappa_label",
    "auroc_label",
    "error",
]


def _csv_row(name: str, counts: ConfusionCounts | None, report: MetricsReport | None, error: str = "") -> dict:
    row = {key: "" for key in _CSV_FIELDS}
    row["name"] = name
    row["error"] = error
    if counts is not None:
        row.update({"tp": repr(counts.tp), "tn": repr(counts.tn), "fp": repr(counts.fp), "fn": repr(counts.fn)})
    if report is not None:
        for key, value in report.to_dict().items():
            row[key] = repr(value) if isinstance(value, float) else value
    return row


def _write_outputs(out_paths: list[str], run_doc: dict, csv_rows: list[dict]) -> None:
    for out in out_paths:
        path = Path(out)
        if path.suffix.lower() == ".csv":
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS)
                writer.writeheader()
                writer.writerows(csv_rows)
        elif path.suffix.lower() == ".json":
            _write_json(path, run_doc)
        else:
            raise UnsupportedFormat(f"eval output must end in .json or .csv, got {path.name}")


def _print_aggregate(method: str, counts: ConfusionCounts, report: MetricsReport) -> None:
    print(f"method: {method}")
    print(f"  kappa  {report.kappa:.6f}  ({report.kappa_label})")
    print(f"  auroc  {report.auroc:.6f}  ({report.auroc_label})")
    print("  " + format_confusion(counts).replace("\n", "\n  "))


def cmd_eval(args: argparse.Namespace) -> int:
    if args.from_confusion:
        return _eval_from_confusion(args)
    if not (args.pred and args.truth):
        raise SchemaViolation("eval needs --pred and --truth directories (or --from-confusion)")

    pred_files = {p.stem: p for p in _image_files(Path(args.pred))}
    truth_files = {p.stem: p for p in _image_files(Path(args.truth))}
    unmatched = sorted(set(pred_files) ^ set(truth_files))
    if unmatched:
        raise UnmatchedFiles(f"stems present on one side only: {', '.join(unmatched[:10])}")
    if not pred_files:
        raise MissingFile("no prediction/truth pairs found")

    pair_rows: list[dict] = []
    csv_rows: list[dict] = []
    pooled_counts = []
    for stem in sorted(pred_files):
        row: dict = {"name": stem, "pred": str(pred_files[stem]), "truth": str(truth_files[stem])}
        try:
            pred = load_mask(pred_files[stem], NEURON)
            truth = load_mask(truth_files[stem], NEURON)
            counts = confusion_from_masks(pred, truth)
        except (DimensionMismatch, CorruptData) as exc:
            if args.strict:
                raise
            print(f"warning: pair {stem} skipped: {exc}", file=sys.stderr)
            row["error"] = str(exc)
            pair_rows.append(row)
            csv_rows.append(_csv_row(stem, None, None, error=str(exc)))
            continue
        pooled_counts.append(counts)
        row["counts"] = _counts_to_dict(counts)
        try:
            report = build_report(counts)
            row["report"] = report.to_dict()
            csv_rows.append(_csv_row(stem, counts, report))
        except NeurogrowError as exc:
            row["error"] = str(exc)
            csv_rows.append(_csv_row(stem, counts, None, error=str(exc)))
        pair_rows.append(row)

    if not pooled_counts:
        raise NeurogrowError("every pair failed; nothing to evaluate")
    aggregate_counts = pool_counts(pooled_counts)
    aggregate_report = build_report(aggregate_counts)
    run_doc = {
        "method": args.method,
        "pairs": pair_rows,
        "aggregate": {
            "counts": _counts_to_dict(aggregate_counts),
            "report": aggregate_report.to_dict(),
        },
    }
    csv_rows.append(_csv_row("pooled", aggregate_counts, aggregate_report))
    _write_outputs(args.out, run_doc, csv_rows)
    _print_aggregate(args.method, aggregate_counts, aggregate_report)
    return EXIT_OK


def _eval_from_confusion(args: argparse.Namespace) -> int:
    path = Path(args.from_confusion)
    if not path.exists():
        raise MissingFile(str(path))
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: {exc}") from exc
    entries = doc if isinstance(doc, list) else [doc]

    runs = []
    csv_rows = []
    for entry in entries:
        try:
            method = entry["method"]
            counts = ConfusionCounts(
                tp=float(entry["tp"]), tn=float(entry["tn"]), fp=float(entry["fp"]), fn=float(entry["fn"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"{path}: confusion entry needs method/tp/tn/fp/fn: {exc}") from exc
        report = build_report(
            counts,
            fpr_override=entry.get("fpr"),
            fnr_override=entry.get("fnr"),
        )
        runs.append(
            {
                "method": method,
                "pairs": [],
                "aggregate": {"counts": _counts_to_dict(counts), "report": report.to_dict()},
            }
        )
        csv_rows.append(_csv_row(method, counts, report))
        _print_aggregate(method, counts, report)

    run_doc = runs[0] if len(runs) == 1 else {"runs": runs}
    _write_outputs(args.out, run_doc, csv_rows)
    return EXIT_OK


# --- report --------------------------------------------------------------------

def _load_runs(paths: list[str]) -> list[dict]:
    runs: list[dict] = []
    for text_path in paths:
        path = Path(text_path)
        if not path.exists():
            raise MissingFile(str(path))
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedRunFile(f"{path}: {exc}") from exc
        candidates = doc["runs"] if isinstance(doc, dict) and "runs" in doc else [doc]
        for run in candidates:
            if not (isinstance(run, dict) and "method" in run and "aggregate" in run):
                raise MalformedRunFile(f"{path}: run entries need 'method' and 'aggregate'")
            try:
                run["aggregate"]["report"] = MetricsReport.from_dict(run["aggregate"]["report"]).to_dict()
            except (KeyError, TypeError) as exc:
                raise MalformedRunFile(f"{path}: bad aggregate report: {exc}") from exc
            runs.append(run)
    return runs


def cmd_report(args: argparse.Namespace) -> int:
    runs = _load_runs(args.runs)
    runs.sort(key=lambda r: r["method"])

    header = ("method", "kappa", "kappa label", "auroc", "auroc label")
    table = [header]
    for run in runs:
        rep = run["aggregate"]["report"]
        table.append(
            (run["method"], f"{rep['kappa']:.6f}", rep["kappa_label"], f"{rep['auroc']:.6f}", rep["auroc_label"])
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        print("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())

    for run in runs:
        counts_doc = run["aggregate"].get("counts")
        if counts_doc:
            print(f"\nconfusion matrix: {run['method']}")
            print(format_confusion(_counts_from_dict(counts_doc)))

    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "kappa", "kappa_label", "auroc", "auroc_label"])
            for run in runs:
                rep = run["aggregate"]["report"]
                writer.writerow(
                    [run["method"], repr(rep["kappa"]), rep["kappa_label"], repr(rep["auroc"]), rep["auroc_label"]]
                )
    return EXIT_OK


# --- small commands --------------------------------------------------------------

def cmd_augment(args: argparse.Namespace) -> int:
    manifest = augment_mod.augment_dataset(
        args.in_dir, args.out, transform_points_too=args.points, shift=args.shift
    )
    print(f"wrote {len(manifest)} augmented image(s) to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_extract_points(args: argparse.Namespace) -> int:
    overlay = load_overlay(args.overlay)
    base = load_image(args.base)
    points = extract_from_overlay(
        overlay, base, red_min=args.red_min, green_max=args.green_max, blue_max=args.blue_max
    )
    points.slice_name = Path(args.base).stem
    serialize_clickpoints(points, args.out)
    print(f"extracted {len(points)} point(s) to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_binarize(args: argparse.Namespace) -> int:
    images = _image_files(Path(args.images))
    if not images:
        raise MissingFile(f"no images in {args.images}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    thresholds: dict[str, int] = {}
    for image_path in images:
        img = load_image(image_path, allow_color=args.luma)
        if args.threshold is None:
            mask, chosen = threshold_otsu(img)
        else:
            mask, chosen = threshold_fixed(img, args.threshold), args.threshold
        save_image(mask, out_dir / f"{image_path.stem}__mask.png")
        thresholds[image_path.stem] = chosen
    _write_json(out_dir / "thresholds.json", thresholds)
    print(f"binarized {len(images)} image(s) to {out_dir}", file=sys.stderr)
    return EXIT_OK


# --- wiring ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--strict", action="store_true", help="turn per-item warnings into hard errors")
    common.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel worker processes")
    common.add_argument(
        "--seed", type=int, default=0, help="reserved for future stochastic features; currently unused"
    )

    parser = argparse.ArgumentParser(
        prog="neurogrow",
        description="Grow click-point annotations into masks, augment datasets, and score predictions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grow", parents=[common], help="grow click-points into label masks")
    p.add_argument("--method", required=True, choices=["floodfill", "region"])
    p.add_argument("--images", required=True, help="directory of grayscale slices")
    p.add_argument("--points", required=True, help="directory of click-point files (stem-matched)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threshold", type=_parse_threshold, default="auto", help="'auto' (Otsu) or 0..255")
    p.add_argument("--se-radius", type=int, default=2, help="closing disk radius (floodfill)")
    p.add_argument("--connectivity", type=int, default=4, choices=[4, 8])
    p.add_argument("--leak-fraction", type=float, default=0.25, help="fill-size cap as a fraction of slice area")
    p.add_argument("--grow-threshold", type=int, default=30, help="intensity-difference stop (region)")
    p.add_argument(
        "--max-region-fraction", type=float, default=0.25, help="region-size cap as a fraction of slice area"
    )
    p.add_argument("--luma", action="store_true", help="accept color slices via BT.601 conversion")
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("eval", parents=[common], help="score prediction masks against gold masks")
    p.add_argument("--pred", help="directory of predicted masks")
    p.add_argument("--truth", help="directory of gold masks")
    p.add_argument("--from-confusion", help="replay published confusion matrices from a JSON file")
    p.add_argument("--method", default="eval", help="run label used in reports")
    p.add_argument(
        "--out", action="append", default=[], metavar="PATH", help=".json or .csv output (repeatable)"
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", parents=[common], help="side-by-side table from eval run files")
    p.add_argument("runs", nargs="+", help="eval JSON outputs")
    p.add_argument("--out", help="also write the table as CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("augment", parents=[common], help="write the 12 standard transforms of a dataset")
    p.add_argument("--in", dest="in_dir", required=True, help="input image directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--shift", type=int, default=augment_mod.DEFAULT_SHIFT, help="translation magnitude in pixels")
    p.add_argument("--points", action="store_true", help="transform matching click-point files too")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("extract-points", parents=[common], help="recover click-points from a red overlay")
    p.add_argument("--overlay", required=True, help="color overlay image")
    p.add_argument("--base", required=True, help="matching grayscale slice")
    p.add_argument("--out", required=True, help="output click-point JSON")
    p.add_argument("--red-min", type=int, default=200)
    p.add_argument("--green-max", type=int, default=80)
    p.add_argument("--blue-max", type=int, default=80)
    p.set_defaults(func=cmd_extract_points)

    p = sub.add_parser("binarize", parents=[common], help="threshold grayscale slices to border masks")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=_parse_threshold, default="auto", help="'auto' (Otsu) or 0..255")
    p.add_argument("--luma", action="store_true")
    p.set_defaults(func=cmd_binarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)

    # "auto" default never went through _parse_threshold
    if getattr(args, "threshold", None) == "auto":
        args.threshold = None

    try:
        return args.func(args)
    except (MissingFile, IoFailure, UnmatchedFiles) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (
        SchemaViolation,
        CorruptData,
        UnsupportedFormat,
        MalformedRunFile,
        MismatchedPointFile,
        DimensionMismatch,
        ClassMismatch,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NeurogrowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
