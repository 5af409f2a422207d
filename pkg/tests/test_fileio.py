import hashlib
import json
import struct

import numpy as np
import pytest
from PIL import Image

from elz.candidates import Candidate
from elz.errors import FormatError
from elz.fileio import (
    PALETTE,
    REPORT_SIGN_NOTE,
    SOFTMAX_MAGIC,
    read_label_map,
    read_readouts,
    read_softmax,
    render_report_table,
    sha256_file,
    write_candidates_csv,
    write_label_map,
    write_manifest,
    write_ranked_csv,
    write_readouts,
    write_report_csv,
    write_softmax,
)
from elz.hazards import ScoredCandidate
from elz.synth import generate_map


def test_label_map_round_trip(tmp_path):
    labels = generate_map(3, 64, 48)
    p = tmp_path / "m.png"
    write_label_map(p, labels)
    back = read_label_map(p)
    assert np.array_equal(back, labels)
    assert back.dtype == np.uint8


def test_label_map_writes_are_byte_identical(tmp_path):
    labels = generate_map(1, 32, 32)
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    write_label_map(a, labels)
    write_label_map(b, labels)
    assert a.read_bytes() == b.read_bytes()


def test_label_map_rejects_bad_values(tmp_path):
    with pytest.raises(FormatError):
        write_label_map(tmp_path / "x.png", np.full((4, 4), 9, dtype=np.uint8))
    with pytest.raises(FormatError):
        write_label_map(tmp_path / "x.png", np.zeros((4, 4, 3), dtype=np.uint8))


def test_label_map_rejects_foreign_palette(tmp_path):
    img = Image.fromarray(np.zeros((4, 4), dtype=np.uint8), mode="P")
    img.putpalette([255, 0, 0] * 8)
    p = tmp_path / "alien.png"
    img.save(p)
    with pytest.raises(FormatError) as exc:
        read_label_map(p)
    assert "palette" in str(exc.value)


def test_label_map_rejects_rgb_png(tmp_path):
    p = tmp_path / "rgb.png"
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(p)
    with pytest.raises(FormatError) as exc:
        read_label_map(p)
    assert "mode" in str(exc.value)


def test_label_map_rejects_garbage(tmp_path):
    p = tmp_path / "junk.png"
    p.write_bytes(b"not a png at all")
    with pytest.raises(FormatError):
        read_label_map(p)


def test_softmax_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(8), size=(6, 5)).astype(np.float32)
    p = tmp_path / "t.elsm"
    write_softmax(p, probs)
    back = read_softmax(p)
    assert back.shape == (6, 5, 8)
    assert np.array_equal(back, probs)
    assert back.dtype == np.dtype("<f4")


def test_softmax_header_layout(tmp_path):
    probs = np.full((2, 3, 8), 0.125, dtype=np.float32)
    p = tmp_path / "t.elsm"
    write_softmax(p, probs)
    raw = p.read_bytes()
    assert raw[:4] == SOFTMAX_MAGIC
    magic, version, w, h, channels = struct.unpack_from("<4sHIIB", raw, 0)
    assert (version, w, h, channels) == (1, 3, 2, 8)
    assert len(raw) == 15 + 4 * 2 * 3 * 8


def test_softmax_read_errors_name_byte_offsets(tmp_path):
    p = tmp_path / "bad.elsm"

    p.write_bytes(b"ELS")
    with pytest.raises(FormatError, match="truncated header"):
        read_softmax(p)

    good = np.full((2, 2, 8), 0.125, dtype=np.float32)
    write_softmax(p, good)
    raw = bytearray(p.read_bytes())

    bad_magic = raw.copy()
    bad_magic[:4] = b"NOPE"
    p.write_bytes(bytes(bad_magic))
    with pytest.raises(FormatError, match="byte 0"):
        read_softmax(p)

    bad_version = raw.copy()
    bad_version[4:6] = struct.pack("<H", 9)
    p.write_bytes(bytes(bad_version))
    with pytest.raises(FormatError, match="byte 4"):
        read_softmax(p)

    bad_channels = raw.copy()
    bad_channels[14] = 5
    p.write_bytes(bytes(bad_channels))
    with pytest.raises(FormatError, match="byte 14"):
        read_softmax(p)

    p.write_bytes(bytes(raw[:-4]))
    with pytest.raises(FormatError, match="size"):
        read_softmax(p)


def test_softmax_rejects_non_distributions(tmp_path):
    with pytest.raises(FormatError):
        write_softmax(tmp_path / "x.elsm", np.ones((2, 2, 8), dtype=np.float32))
    skew = np.full((2, 2, 8), 0.125, dtype=np.float32)
    p = tmp_path / "y.elsm"
    write_softmax(p, skew)
    raw = bytearray(p.read_bytes())
    raw[15:19] = struct.pack("<f", 0.9)
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="sum"):
        read_softmax(p)


def test_candidates_csv_layout(tmp_path):
    p = tmp_path / "c.csv"
    write_candidates_csv(p, [Candidate(5, 30, 4, 2), Candidate(9, 31, 4, 0)])
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "id,x,y,radius_px,cluster_id"
    assert lines[1] == "0,5,30,4,2"
    assert lines[2] == "1,9,31,4,0"


def test_ranked_csv_preserves_float_precision(tmp_path):
    sc = ScoredCandidate(Candidate(5, 30, 4, 2), h_s=1 / 3, h_d=0.1 + 0.2, h=0.5 / 3, rank=1)
    p = tmp_path / "r.csv"
    write_ranked_csv(p, [sc])
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "id,x,y,radius_px,cluster_id,h_s,h_d,h,rank"
    parts = lines[1].split(",")
    assert float(parts[5]) == sc.h_s  # repr round-trips exactly
    assert float(parts[6]) == sc.h_d
    assert float(parts[7]) == sc.h


def test_readouts_round_trip(tmp_path):
    records = [
        {"type": "image", "image": "a", "g_cm": -0.25, "chosen": 1},
        {"type": "attempt", "rank": 2, "accepted": False, "reason": "unsafe_pixels"},
    ]
    p = tmp_path / "r.jsonl"
    write_readouts(p, records)
    assert read_readouts(p) == records
    # keys are sorted, so rewriting dicts built in another order is identical
    q = tmp_path / "r2.jsonl"
    write_readouts(q, [dict(reversed(list(r.items()))) for r in records])
    assert p.read_bytes() == q.read_bytes()


def test_readouts_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"ok": 1}\n{broken\n')
    with pytest.raises(FormatError, match="bad.jsonl:2"):
        read_readouts(p)


def test_report_csv_format(tmp_path):
    rows = [
        {
            "perturbation": "none",
            "monitor": "LHD",
            "n_images": 3,
            "precision": 1.0,
            "recall": 1.0,
            "fp_rate": 0.0,
            "f1": 1.0,
            "mcc": 0.5,
            "g_cm": 0.25,
            "g_rm": 0.125,
            "g_star": 0.375,
            "overhead_s": 0.01,
            "tp": 1,
            "fp": 0,
            "tn": 2,
            "fn": 0,
        }
    ]
    p = tmp_path / "report.csv"
    write_report_csv(p, rows)
    lines = p.read_text().splitlines()
    assert lines[0] == REPORT_SIGN_NOTE
    assert lines[1] == "Perturbation,Monitor,MCC,F1,Precision,Recall,FP rate,G_CM,G_RM,G*,Overhead (s)"
    assert lines[2].startswith("none,LHD,0.500000,1.000000,")
    assert ",0.250000,0.125000,0.375000," in lines[2]

    table = render_report_table(rows)
    assert table.splitlines()[0] == REPORT_SIGN_NOTE
    assert "G_CM" in table
    assert "0.250" in table


def test_render_report_table_empty():
    table = render_report_table([])
    assert "Monitor" in table


def test_sha256_and_manifest(tmp_path):
    p = tmp_path / "blob.bin"
    p.write_bytes(b"hello elz")
    assert sha256_file(p) == hashlib.sha256(b"hello elz").hexdigest()
    m = tmp_path / "manifest.json"
    write_manifest(m, {"b": 2, "a": 1})
    text = m.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 1, "b": 2}
    assert text.endswith("\n")


def test_palette_is_pinned():
    assert PALETTE[0] == (0, 0, 0)
    assert PALETTE[5] == (128, 64, 128)
    assert PALETTE[7] == (0, 128, 0)
    assert len(PALETTE) == 8
