import json

import numpy as np
import pytest
from PIL import Image

from neurogrow.cli import main
from neurogrow.metrics import ConfusionCounts, build_report
from neurogrow.raster import NEURON, BinaryMask, GrayImage, load_label_raster, load_mask, save_image

MEMBRANE, TISSUE = 25, 210


def write_ring_slice(path, size=48, rings=((6, 6, 14), (26, 24, 16))):
    pixels = np.full((size, size), TISSUE, dtype=np.uint8)
    for top, left, side in rings:
        pixels[top, left : left + side] = MEMBRANE
        pixels[top + side - 1, left : left + side] = MEMBRANE
        pixels[top : top + side, left] = MEMBRANE
        pixels[top : top + side, left + side - 1] = MEMBRANE
    save_image(GrayImage(pixels), path)
    centers = [(left + side // 2, top + side // 2) for top, left, side in rings]
    return centers


def write_points(path, centers):
    path.write_text(json.dumps([{"x": x, "y": y, "id": i + 1} for i, (x, y) in enumerate(centers)]))


def make_grow_inputs(tmp_path, n_slices=3):
    images = tmp_path / "images"
    points = tmp_path / "points"
    images.mkdir()
    points.mkdir()
    for i in range(n_slices):
        centers = write_ring_slice(images / f"s{i:02d}.pgm")
        write_points(points / f"s{i:02d}.json", centers)
    return images, points


class TestGrowCommand:
    def test_floodfill_over_three_slices(self, tmp_path):
        images, points = make_grow_inputs(tmp_path)
        out = tmp_path / "out"
        rc = main(["grow", "--method", "floodfill", "--images", str(images), "--points", str(points), "--out", str(out)])
        assert rc == 0
        for i in range(3):
            labels = load_label_raster(out / f"s{i:02d}__labels.png")
            assert set(np.unique(labels)) == {0, 1, 2}
            union = load_mask(out / f"s{i:02d}__mask.png", NEURON)
            assert union.count() == (labels > 0).sum()
            report = json.loads((out / f"s{i:02d}__report.json").read_text())
            assert report == {"leaked": [], "missed": []}

    def test_region_method(self, tmp_path):
        images, points = make_grow_inputs(tmp_path, n_slices=1)
        out = tmp_path / "out"
        rc = main(["grow", "--method", "region", "--images", str(images), "--points", str(points),
                   "--out", str(out), "--grow-threshold", "40"])
        assert rc == 0
        labels = load_label_raster(out / "s00__labels.png")
        assert set(np.unique(labels)) == {0, 1, 2}

    def test_unknown_method_is_usage_error(self, tmp_path, capsys):
        rc = main(["grow", "--method", "sorcery", "--images", "x", "--points", "y", "--out", "z"])
        assert rc == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_points_file_skips_slice(self, tmp_path, capsys):
        images, points = make_grow_inputs(tmp_path, n_slices=2)
        (points / "s01.json").unlink()
        out = tmp_path / "out"
        rc = main(["grow", "--method", "floodfill", "--images", str(images), "--points", str(points), "--out", str(out)])
        assert rc == 0
        err = capsys.readouterr().err
        assert "skipped" in err and "s01" in err
        assert (out / "s00__labels.png").exists()
        assert not (out / "s01__labels.png").exists()

    def test_strict_upgrades_missing_points_to_io_error(self, tmp_path):
        images, points = make_grow_inputs(tmp_path, n_slices=2)
        (points / "s01.json").unlink()
        rc = main(["grow", "--strict", "--method", "floodfill", "--images", str(images),
                   "--points", str(points), "--out", str(tmp_path / "out")])
        assert rc == 3

    def test_parallel_matches_serial(self, tmp_path):
        images, points = make_grow_inputs(tmp_path, n_slices=4)
        serial, parallel = tmp_path / "serial", tmp_path / "parallel"
        base = ["grow", "--method", "floodfill", "--images", str(images), "--points", str(points)]
        assert main(base + ["--out", str(serial)]) == 0
        assert main(base + ["--out", str(parallel), "--jobs", "3"]) == 0
        for path in sorted(serial.iterdir()):
            assert (parallel / path.name).read_bytes() == path.read_bytes()

    def test_rerun_overwrites_byte_identically(self, tmp_path):
        images, points = make_grow_inputs(tmp_path, n_slices=1)
        out = tmp_path / "out"
        args = ["grow", "--method", "floodfill", "--images", str(images), "--points", str(points), "--out", str(out)]
        assert main(args) == 0
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        assert main(args) == 0
        assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def write_mask(path, bits):
    save_image(BinaryMask(bits, NEURON), path)


def make_eval_pair_dirs(tmp_path, n_pairs, rng, identical=False):
    pred_dir = tmp_path / "pred"
    truth_dir = tmp_path / "truth"
    pred_dir.mkdir()
    truth_dir.mkdir()
    counts = []
    for i in range(n_pairs):
        truth = rng.random((16, 16)) < 0.3
        pred = truth if identical else (rng.random((16, 16)) < 0.3)
        write_mask(pred_dir / f"p{i:02d}.png", pred)
        write_mask(truth_dir / f"p{i:02d}.png", truth)
        counts.append((pred, truth))
    return pred_dir, truth_dir, counts


class TestEvalCommand:
    def test_identical_dirs_score_perfectly(self, tmp_path, rng, capsys):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 4, rng, identical=True)
        out = tmp_path / "run.json"
        rc = main(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["aggregate"]["report"]["kappa"] == 1.0
        assert doc["aggregate"]["report"]["auroc"] == 1.0
        assert "kappa  1.000000" in capsys.readouterr().out

    def test_fifty_pairs_match_hand_pooled_oracle(self, tmp_path, rng):
        pred_dir, truth_dir, pairs = make_eval_pair_dirs(tmp_path, 50, rng)
        out = tmp_path / "run.json"
        rc = main(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir),
                   "--method", "synthetic", "--out", str(out)])
        assert rc == 0
        tp = sum(int((p & t).sum()) for p, t in pairs)
        fp = sum(int((p & ~t).sum()) for p, t in pairs)
        fn = sum(int((~p & t).sum()) for p, t in pairs)
        tn = sum(p.size for p, _ in pairs) - tp - fp - fn
        expected = build_report(ConfusionCounts.from_raw(tp=tp, tn=tn, fp=fp, fn=fn))
        doc = json.loads(out.read_text())
        assert len(doc["pairs"]) == 50
        assert doc["aggregate"]["counts"]["raw"] == [tp, tn, fp, fn]
        assert doc["aggregate"]["report"] == expected.to_dict()

    def test_csv_output_row_per_pair(self, tmp_path, rng):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 5, rng)
        out_csv = tmp_path / "run.csv"
        rc = main(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir), "--out", str(out_csv)])
        assert rc == 0
        lines = out_csv.read_text().strip().splitlines()
        assert len(lines) == 1 + 5 + 1  # header, pairs, pooled
        assert lines[0].startswith("name,tp,tn,fp,fn")
        assert lines[-1].startswith("pooled,")

    def test_unmatched_files_is_io_error(self, tmp_path, rng):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 2, rng)
        (truth_dir / "extra.png").write_bytes((pred_dir / "p00.png").read_bytes())
        rc = main(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir)])
        assert rc == 3

    def test_dimension_mismatch_skips_pair(self, tmp_path, rng, capsys):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 2, rng)
        write_mask(truth_dir / "p01.png", rng.random((8, 8)) < 0.5)
        out = tmp_path / "run.json"
        rc = main(["eval", "--pred", str(pred_dir), "--truth", str(truth_dir), "--out", str(out)])
        assert rc == 0
        assert "skipped" in capsys.readouterr().err
        doc = json.loads(out.read_text())
        assert [p.get("error") is not None for p in doc["pairs"]] == [False, True]

    def test_dimension_mismatch_strict_fails(self, tmp_path, rng):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 2, rng)
        write_mask(truth_dir / "p01.png", rng.random((8, 8)) < 0.5)
        rc = main(["eval", "--strict", "--pred", str(pred_dir), "--truth", str(truth_dir)])
        assert rc == 4

    def test_rerun_byte_identical(self, tmp_path, rng):
        pred_dir, truth_dir, _ = make_eval_pair_dirs(tmp_path, 3, rng)
        out = tmp_path / "run.json"
        args = ["eval", "--pred", str(pred_dir), "--truth", str(truth_dir), "--out", str(out)]
        assert main(args) == 0
        first = out.read_bytes()
        assert main(args) == 0
        assert out.read_bytes() == first


REFERENCE_MATRICES = [
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

EXPECTED_SCORES = {
    "unet-floodfill": (0.674656, 0.835366),
    "unet-regiongrow": (0.664252, 0.775311),
    "unet-manual": (0.508445, 0.818312),
    "segnet-floodfill": (0.428534, 0.816803),
    "segnet-regiongrow": (0.557270, 0.896916),
    "segnet-manual": (0.615110, 0.965385),
}


class TestConfusionReplay:
    def test_replays_published_tables(self, tmp_path):
        matrices = tmp_path / "matrices.json"
        matrices.write_text(json.dumps(REFERENCE_MATRICES))
        out = tmp_path / "runs.json"
        rc = main(["eval", "--from-confusion", str(matrices), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert len(doc["runs"]) == 6
        for run in doc["runs"]:
            want_kappa, want_auroc = EXPECTED_SCORES[run["method"]]
            report = run["aggregate"]["report"]
            assert report["kappa"] == pytest.approx(want_kappa, abs=1.5e-3)
            assert report["auroc"] == pytest.approx(want_auroc, abs=1e-6)

    def test_bad_confusion_schema(self, tmp_path):
        matrices = tmp_path / "matrices.json"
        matrices.write_text(json.dumps([{"method": "x", "tn": 0.9}]))
        assert main(["eval", "--from-confusion", str(matrices)]) == 4


class TestReportCommand:
    @staticmethod
    def run_files(tmp_path, rng, methods):
        paths = []
        for method in methods:
            pred = BinaryMask(rng.random((12, 12)) < 0.4, NEURON)
            truth = BinaryMask(rng.random((12, 12)) < 0.4, NEURON)
            from neurogrow.metrics import confusion_from_masks

            counts = confusion_from_masks(pred, truth)
            doc = {
                "method": method,
                "pairs": [],
                "aggregate": {
                    "counts": {"tp": counts.tp, "tn": counts.tn, "fp": counts.fp, "fn": counts.fn,
                               "raw": list(counts.raw)},
                    "report": build_report(counts).to_dict(),
                },
            }
            path = tmp_path / f"{method}.json"
            path.write_text(json.dumps(doc))
            paths.append(str(path))
        return paths

    def test_three_method_table(self, tmp_path, rng, capsys):
        paths = self.run_files(tmp_path, rng, ["floodfill", "region-growing", "manual"])
        rc = main(["report", *paths])
        assert rc == 0
        out = capsys.readouterr().out
        lines = out.splitlines()
        assert lines[0].startswith("method")
        # deterministic: sorted by method name
        assert [line.split()[0] for line in lines[1:4]] == ["floodfill", "manual", "region-growing"]
        assert out.count("confusion matrix:") == 3

    def test_single_run(self, tmp_path, rng, capsys):
        paths = self.run_files(tmp_path, rng, ["only"])
        assert main(["report", *paths]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[1].split()[0] == "only"

    def test_csv_output(self, tmp_path, rng):
        paths = self.run_files(tmp_path, rng, ["a", "b"])
        out = tmp_path / "table.csv"
        assert main(["report", *paths, "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3 and lines[0].startswith("method,kappa")

    def test_malformed_run_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"method": "x"}')
        assert main(["report", str(bad)]) == 4


class TestOtherCommands:
    def test_binarize(self, tmp_path):
        images = tmp_path / "images"
        images.mkdir()
        write_ring_slice(images / "s00.pgm")
        out = tmp_path / "masks"
        rc = main(["binarize", "--images", str(images), "--out", str(out)])
        assert rc == 0
        from neurogrow.raster import BORDER, load_mask as load

        mask = load(out / "s00__mask.png", BORDER)
        assert mask.count() > 0
        thresholds = json.loads((out / "thresholds.json").read_text())
        assert MEMBRANE < thresholds["s00"] <= TISSUE

    def test_binarize_fixed_threshold(self, tmp_path):
        images = tmp_path / "images"
        images.mkdir()
        write_ring_slice(images / "s00.pgm")
        out = tmp_path / "masks"
        rc = main(["binarize", "--images", str(images), "--out", str(out), "--threshold", "128"])
        assert rc == 0
        assert json.loads((out / "thresholds.json").read_text()) == {"s00": 128}

    def test_binarize_uniform_image_fails_cleanly(self, tmp_path, capsys):
        images = tmp_path / "images"
        images.mkdir()
        save_image(GrayImage(np.full((8, 8), 77, dtype=np.uint8)), images / "flat.pgm")
        rc = main(["binarize", "--images", str(images), "--out", str(tmp_path / "out")])
        assert rc == 1
        assert "fixed threshold" in capsys.readouterr().err

    def test_extract_points(self, tmp_path):
        overlay = np.zeros((20, 20, 3), dtype=np.uint8)
        overlay[..., :] = 90
        overlay[4:6, 4:6] = (255, 0, 0)
        overlay[14:16, 10:12] = (255, 0, 0)
        Image.fromarray(overlay, "RGB").save(tmp_path / "overlay.png")
        save_image(GrayImage(np.zeros((20, 20), dtype=np.uint8)), tmp_path / "base.pgm")
        out = tmp_path / "points.json"
        rc = main(["extract-points", "--overlay", str(tmp_path / "overlay.png"),
                   "--base", str(tmp_path / "base.pgm"), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert [p["id"] for p in doc["points"]] == [1, 2]

    def test_augment_cli(self, tmp_path, rng):
        images = tmp_path / "in"
        images.mkdir()
        for i in range(2):
            save_image(GrayImage(rng.integers(0, 256, (80, 80), dtype=np.uint8)), images / f"i{i}.png")
        out = tmp_path / "out"
        rc = main(["augment", "--in", str(images), "--out", str(out)])
        assert rc == 0
        assert len(list(out.glob("*__t*.png"))) == 24

    def test_grow_then_eval_round_trip(self, tmp_path):
        # union masks of a clean grow evaluated against themselves
        images, points = make_grow_inputs(tmp_path, n_slices=2)
        grown = tmp_path / "grown"
        assert main(["grow", "--method", "floodfill", "--images", str(images),
                     "--points", str(points), "--out", str(grown)]) == 0
        pred = tmp_path / "pred"
        pred.mkdir()
        for p in grown.glob("*__mask.png"):
            (pred / p.name).write_bytes(p.read_bytes())
        rc = main(["eval", "--pred", str(pred), "--truth", str(pred), "--out", str(tmp_path / "r.json")])
        assert rc == 0
        doc = json.loads((tmp_path / "r.json").read_text())
        assert doc["aggregate"]["report"]["kappa"] == 1.0
