import numpy as np
import pytest

from neurogrow.clickpoints import (
    ClickPoint,
    ClickPointSet,
    extract_from_overlay,
    parse_clickpoints,
    rasterize_points,
    serialize_clickpoints,
)
from neurogrow.errors import (
    DimensionMismatch,
    DuplicateCoordinate,
    DuplicateId,
    OutOfBounds,
    SchemaViolation,
)
from neurogrow.raster import GrayImage

from oracles import components_row_major


class TestParsing:
    def test_single_point_array_form(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('[{"x":10,"y":20,"id":1}]')
        cset = parse_clickpoints(path)
        assert cset.points == [ClickPoint(x=10, y=20, id=1)]

    def test_empty_is_valid(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text("[]")
        assert len(parse_clickpoints(path)) == 0

    def test_object_form_carries_slice_name(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('{"slice": "s0042", "points": [{"x":1,"y":2,"id":3}]}')
        cset = parse_clickpoints(path)
        assert cset.slice_name == "s0042"

    def test_csv_form(self, tmp_path):
        path = tmp_path / "p.csv"
        path.write_text("id,x,y\n2,5,6\n1,3,4\n")
        cset = parse_clickpoints(path)
        assert [p.id for p in cset] == [1, 2]  # canonical id order

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('[{"x":1,"y":1,"id":7},{"x":2,"y":2,"id":7}]')
        with pytest.raises(DuplicateId):
            parse_clickpoints(path)

    def test_duplicate_pixel_rejected(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text('[{"x":1,"y":1,"id":1},{"x":1,"y":1,"id":2}]')
        with pytest.raises(DuplicateCoordinate):
            parse_clickpoints(path)

    @pytest.mark.parametrize(
        "text",
        ['{"points": "no"}', '[{"x": 1, "y": 2}]', '[{"x": 1.5, "y": 2, "id": 1}]', "not json"],
    )
    def test_schema_violations(self, tmp_path, text):
        path = tmp_path / "p.json"
        path.write_text(text)
        with pytest.raises(SchemaViolation):
            parse_clickpoints(path)

    def test_parse_serialize_identity(self, tmp_path, rng):
        points = [ClickPoint(x=int(x), y=int(y), id=i + 1) for i, (x, y) in enumerate(rng.integers(0, 50, (12, 2)))]
        cset = ClickPointSet(slice_name="demo", points=points)
        path = tmp_path / "p.json"
        serialize_clickpoints(cset, path)
        again = parse_clickpoints(path)
        assert again.slice_name == cset.slice_name and again.points == cset.points


class TestOverlayExtraction:
    @staticmethod
    def overlay(h, w):
        canvas = np.zeros((h, w, 3), dtype=np.uint8)
        canvas[..., :] = (120, 120, 120)
        return canvas

    def test_no_red_pixels(self):
        base = GrayImage(np.zeros((8, 8), dtype=np.uint8))
        assert len(extract_from_overlay(self.overlay(8, 8), base)) == 0

    def test_centroid_of_square_blob(self):
        canvas = self.overlay(12, 12)
        canvas[4:7, 4:7] = (255, 0, 0)
        base = GrayImage(np.zeros((12, 12), dtype=np.uint8))
        cset = extract_from_overlay(canvas, base)
        assert cset.points == [ClickPoint(x=5, y=5, id=1)]

    def test_two_blobs_row_major_ids(self):
        canvas = self.overlay(16, 16)
        canvas[10:12, 2:4] = (230, 10, 10)  # lower-left, but discovered second
        canvas[1:3, 8:10] = (230, 10, 10)  # upper-right, discovered first
        base = GrayImage(np.zeros((16, 16), dtype=np.uint8))
        cset = extract_from_overlay(canvas, base)
        assert [p.id for p in cset] == [1, 2]
        assert cset.points[0].x > cset.points[1].x  # id 1 is the upper blob
        assert cset.points[0].y < cset.points[1].y

    def test_matches_component_oracle(self, rng):
        for _ in range(10):
            canvas = self.overlay(24, 24)
            red = rng.random((24, 24)) < 0.08
            canvas[red] = (255, 0, 0)
            base = GrayImage(np.zeros((24, 24), dtype=np.uint8))
            cset = extract_from_overlay(canvas, base)
            blobs = components_row_major(red, connectivity=8)
            assert len(cset) == len(blobs)
            for point, blob in zip(cset.points, blobs):
                cx = np.floor(np.mean([x for x, _ in blob]) + 0.5)
                cy = np.floor(np.mean([y for _, y in blob]) + 0.5)
                assert (point.x, point.y) == (int(cx), int(cy))

    def test_dimension_mismatch(self):
        base = GrayImage(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(DimensionMismatch):
            extract_from_overlay(self.overlay(5, 4), base)


class TestRasterize:
    def test_empty_set(self):
        mask = rasterize_points(ClickPointSet(), 6, 4)
        assert not mask.bits.any()

    def test_single_origin_point(self):
        mask = rasterize_points(ClickPointSet(points=[ClickPoint(0, 0, 1)]), 5, 5)
        assert mask.count() == 1 and mask.bits[0, 0]

    def test_popcount_matches_point_count(self, rng):
        for _ in range(10):
            n = int(rng.integers(0, 30))
            coords = rng.permutation(40 * 40)[:n]
            points = [ClickPoint(x=int(c % 40), y=int(c // 40), id=i + 1) for i, c in enumerate(coords)]
            mask = rasterize_points(ClickPointSet(points=points), 40, 40)
            assert mask.count() == n

    def test_out_of_bounds(self):
        with pytest.raises(OutOfBounds):
            rasterize_points(ClickPointSet(points=[ClickPoint(5, 0, 1)]), 5, 5)

    def test_extraction_then_rasterize_counts_blobs(self, rng):
        canvas = np.zeros((20, 20, 3), dtype=np.uint8)
        canvas[2:4, 2:4] = (255, 0, 0)
        canvas[10:13, 12:15] = (255, 0, 0)
        canvas[17, 5] = (255, 0, 0)
        base = GrayImage(np.zeros((20, 20), dtype=np.uint8))
        cset = extract_from_overlay(canvas, base)
        mask = rasterize_points(cset, 20, 20)
        assert mask.count() == 3
