import json

import numpy as np
import pytest

from pyramask.formats import (
    MAXVAL,
    FormatError,
    as_ground_truth,
    as_predictions,
    dequantize,
    load_mask,
    quantize,
    quantized,
    read_pgm16,
    read_regions,
    region_line,
    save_mask,
    sidecar_path,
    write_pgm16,
)
from pyramask.geometry import Box, Quad
from pyramask.pyramid_label import SoftMask, rasterize_label

from conftest import margin_box, text_quad


def test_quantization_error_bound(rng):
    s = rng.uniform(0, 1, 10_000)
    assert np.max(np.abs(dequantize(quantize(s)) - s)) <= 0.5 / MAXVAL + 1e-15
    assert quantize([0.0, 1.0]).tolist() == [0, MAXVAL]


def test_pgm_header_and_byte_order(tmp_path):
    p = tmp_path / "m.pgm"
    write_pgm16(p, np.array([[1, 256], [65535, 0]], dtype=np.uint16))
    data = p.read_bytes()
    assert data.startswith(b"P5\n2 2\n65535\n")
    assert data[len(b"P5\n2 2\n65535\n"):] == bytes([0, 1, 1, 0, 255, 255, 0, 0])


def test_mask_round_trip_is_exact(tmp_path, rng):
    q = text_quad(rng)
    m = rasterize_label(q, 28, 20, margin_box(q))
    p = save_mask(m, tmp_path / "a.pgm")
    back = load_mask(p)
    assert back == quantized(m)
    assert back.box == m.box
    assert np.max(np.abs(back.scores - m.scores)) <= 0.5 / MAXVAL + 1e-15


def test_rewrite_is_bit_identical(tmp_path, rng):
    m = SoftMask(rng.uniform(0, 1, (7, 9)), (0, 0, 9, 7))
    a = save_mask(m, tmp_path / "a.pgm")
    b = save_mask(load_mask(a), tmp_path / "b.pgm")
    assert a.read_bytes() == b.read_bytes()


def test_header_comments_and_8bit(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n3 1\n# another\n255\n" + bytes([0, 128, 255]))
    v = read_pgm16(p)
    assert v.tolist() == [[0, round(128 * MAXVAL / 255), MAXVAL]]


@pytest.mark.parametrize("data", [b"P2\n1 1\n255\n0", b"P5\n2 2\n65535\n\x00\x01", b"P5\n2"])
def test_bad_pgm(tmp_path, data):
    p = tmp_path / "bad.pgm"
    p.write_bytes(data)
    with pytest.raises(FormatError):
        read_pgm16(p)


def test_missing_sidecar_defaults_to_pixel_box(tmp_path):
    p = tmp_path / "n.pgm"
    write_pgm16(p, np.zeros((3, 5), dtype=np.uint16))
    assert load_mask(p).box == Box(0, 0, 5, 3)


def test_sidecar_dims_must_agree(tmp_path):
    p = save_mask(SoftMask(np.zeros((3, 5)), (0, 0, 5, 3)), tmp_path / "d.pgm")
    meta = json.loads(sidecar_path(p).read_text())
    meta["width"] = 6
    sidecar_path(p).write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        load_mask(p)


def test_regions_round_trip(tmp_path):
    sq = Quad([(0, 0), (4, 0), (4, 4), (0, 4)])
    dart = Quad([(0, 0), (10, 0), (4, 4), (0, 10)])
    p = tmp_path / "r.jsonl"
    p.write_text("\n".join([
        region_line("img1", sq, confidence=0.7),
        region_line("img1", sq.translated(10, 0), ignore=True),
        "",
        region_line("img2", dart),
    ]) + "\n")
    regions = read_regions(p)
    assert sorted(regions) == ["img1", "img2"]
    preds = as_predictions(regions)
    assert preds["img1"][0].confidence == 0.7 and preds["img2"][0].confidence == 1.0
    gts = as_ground_truth(regions)
    assert [g.ignore for g in gts["img1"]] == [False, True]
    assert "img2" not in read_regions(p, require_convex=True)


def test_regions_parse_error_names_line(tmp_path):
    p = tmp_path / "r.jsonl"
    p.write_text('{"id": "a", "quad": [0, 0, 1, 0, 1, 1, 0, 1]}\n{"id": "b", "quad": [1, 2]}\n')
    with pytest.raises(FormatError, match=":2:"):
        read_regions(p)
