"""Manifest parsing, image decoding, and pixel-scale conversion tests."""

import json

import numpy as np
import pytest

from bevgan.data import (
    PairRecord,
    load_pair,
    read_image,
    read_manifest,
    to_uint8,
    to_unit,
    write_png,
)
from bevgan.errors import DataError

from conftest import write_pgm


def manifest_text(records, header=None):
    if header is None:
        header = {"format": "bev-pair-manifest", "grid": {"span_m": 128.0}}
    return "\n".join([json.dumps(header)] + [json.dumps(r) for r in records]) + "\n"


def record(ts, split="train"):
    return {
        "radar_path": f"radar/{ts}.png",
        "gt_path": f"gt/{ts}.pgm",
        "timestamp_ns": ts,
        "split": split,
    }


class TestManifest:
    def test_reads_grid_and_records(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([record(0), record(1, "test")]))
        m = read_manifest(path)
        assert m.grid == {"span_m": 128.0}
        assert len(m.records) == 2
        assert m.records[0].timestamp_ns == 0
        assert m.records[1].split == "test"

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        sub = tmp_path / "ds"
        sub.mkdir()
        path = sub / "m.jsonl"
        path.write_text(manifest_text([record(7)]))
        r = read_manifest(path).records[0]
        assert r.radar_path == sub / "radar" / "7.png"
        assert r.gt_path == sub / "gt" / "7.pgm"

    def test_absolute_paths_kept(self, tmp_path):
        rec = record(0)
        rec["radar_path"] = "/elsewhere/0.png"
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([rec]))
        assert str(read_manifest(path).records[0].radar_path) == "/elsewhere/0.png"

    def test_split_selector_and_default(self, tmp_path):
        rec = record(3)
        del rec["split"]
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([rec, record(4, "test")]))
        m = read_manifest(path)
        assert [r.timestamp_ns for r in m.split("train")] == [3]
        assert [r.timestamp_ns for r in m.split("test")] == [4]

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([record(0)]) + "\n\n")
        assert len(read_manifest(path).records) == 1

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([record(0)], header={"format": "something-else"}))
        with pytest.raises(DataError, match="line 1"):
            read_manifest(path)

    def test_rejects_bad_json_with_line_number(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([record(0)]) + "{not json\n")
        with pytest.raises(DataError, match="line 3"):
            read_manifest(path)

    def test_rejects_missing_field(self, tmp_path):
        rec = record(0)
        del rec["gt_path"]
        path = tmp_path / "m.jsonl"
        path.write_text(manifest_text([rec]))
        with pytest.raises(DataError, match="line 2.*gt_path"):
            read_manifest(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "m.jsonl"
        path.write_text("")
        with pytest.raises(DataError, match="empty"):
            read_manifest(path)

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such manifest"):
            read_manifest(tmp_path / "absent.jsonl")


class TestPgm:
    def test_reads_canonical_file(self, tmp_path):
        img = np.arange(24, dtype=np.uint8).reshape(4, 6)
        write_pgm(tmp_path / "a.pgm", img)
        assert np.array_equal(read_image(tmp_path / "a.pgm"), img)

    def test_tolerates_comments_and_whitespace(self, tmp_path):
        img = np.arange(6, dtype=np.uint8).reshape(2, 3)
        raw = b"P5 # magic\n# a comment line\n 3\t2 \n255\n" + img.tobytes()
        (tmp_path / "b.pgm").write_bytes(raw)
        assert np.array_equal(read_image(tmp_path / "b.pgm"), img)

    def test_rejects_truncated_raster(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P5\n4 4\n255\n" + b"\x00" * 9)
        with pytest.raises(DataError, match="truncated"):
            read_image(tmp_path / "c.pgm")

    def test_rejects_ascii_variant(self, tmp_path):
        (tmp_path / "d.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
        with pytest.raises(DataError, match="unsupported"):
            read_image(tmp_path / "d.pgm")

    def test_rejects_wide_maxval(self, tmp_path):
        (tmp_path / "e.pgm").write_bytes(b"P5\n1 1\n65535\n\x00\x00")
        with pytest.raises(DataError, match="unsupported"):
            read_image(tmp_path / "e.pgm")


class TestPng:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        write_png(tmp_path / "a.png", img)
        assert np.array_equal(read_image(tmp_path / "a.png"), img)

    def test_write_rejects_float(self, tmp_path):
        with pytest.raises(DataError, match="uint8"):
            write_png(tmp_path / "b.png", np.zeros((4, 4)))

    def test_write_rejects_3d(self, tmp_path):
        with pytest.raises(DataError, match="2D"):
            write_png(tmp_path / "c.png", np.zeros((4, 4, 3), dtype=np.uint8))

    def test_rejects_garbage_bytes(self, tmp_path):
        (tmp_path / "d.png").write_bytes(b"this is not an image")
        with pytest.raises(DataError, match="unreadable"):
            read_image(tmp_path / "d.png")

    def test_rejects_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such image"):
            read_image(tmp_path / "absent.png")


class TestScaling:
    def test_to_unit_endpoints(self):
        img = np.array([[0, 255]], dtype=np.uint8)
        out = to_unit(img)
        assert out.dtype == np.float32
        assert out[0, 0] == -1.0
        assert out[0, 1] == 1.0

    def test_roundtrip_every_level(self):
        levels = np.arange(256, dtype=np.uint8).reshape(16, 16)
        assert np.array_equal(to_uint8(to_unit(levels)), levels)

    def test_to_uint8_clips(self):
        out = to_uint8(np.array([[-3.0, 3.0]]))
        assert out.tolist() == [[0, 255]]


class TestLoadPair:
    def test_native_size_passthrough(self, tmp_path):
        rng = np.random.default_rng(1)
        radar = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        gt = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        write_png(tmp_path / "r.png", radar)
        write_pgm(tmp_path / "g.pgm", gt)
        rec = PairRecord(tmp_path / "r.png", tmp_path / "g.pgm", 0, "train")
        a, b = load_pair(rec, 32)
        assert np.array_equal(a, radar)
        assert np.array_equal(b, gt)

    def test_resamples_with_warning(self, tmp_path, caplog):
        rng = np.random.default_rng(2)
        img = rng.integers(0, 256, (32, 32), dtype=np.uint8)
        write_png(tmp_path / "r.png", img)
        write_pgm(tmp_path / "g.pgm", img)
        rec = PairRecord(tmp_path / "r.png", tmp_path / "g.pgm", 0, "train")
        with caplog.at_level("WARNING", logger="bevgan.data"):
            a, b = load_pair(rec, 64)
        assert a.shape == b.shape == (64, 64)
        assert "resampling" in caplog.text
