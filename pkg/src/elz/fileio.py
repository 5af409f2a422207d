"""File formats: palette label maps, softmax tensors, records and reports.

Label maps are lossless indexed-palette PNGs whose palette is pinned in
PALETTE (category ids in alphabetical name order).  Softmax tensors are a
small binary format: magic "ELSM", version u16, width u32, height u32,
channel count u8 (always 8), then width*height*8 little-endian float32
values, row-major with the channel index fastest.  Readouts are JSON
lines with sorted keys; reports are CSV.  All writers are deterministic:
the same inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .categories import N_CATEGORIES
from .errors import FormatError

# RGB palette entry per category id (alphabetical category order).
PALETTE = {
    0: (0, 0, 0),
    1: (128, 0, 0),
    2: (64, 64, 0),
    3: (128, 128, 0),
    4: (64, 0, 128),
    5: (128, 64, 128),
    6: (192, 0, 192),
    7: (0, 128, 0),
}

SOFTMAX_MAGIC = b"ELSM"
SOFTMAX_VERSION = 1
_SOFTMAX_HEADER = struct.Struct("<4sHIIB")  # magic, version, width, height, channels

CANDIDATE_FIELDS = ("id", "x", "y", "radius_px", "cluster_id")
RANKED_FIELDS = CANDIDATE_FIELDS + ("h_s", "h_d", "h", "rank")

REPORT_COLUMNS = (
    ("perturbation", "Perturbation"),
    ("monitor", "Monitor"),
    ("mcc", "MCC"),
    ("f1", "F1"),
    ("precision", "Precision"),
    ("recall", "Recall"),
    ("fp_rate", "FP rate"),
    ("g_cm", "G_CM"),
    ("g_rm", "G_RM"),
    ("g_star", "G*"),
    ("overhead_s", "Overhead (s)"),
)

REPORT_SIGN_NOTE = "# gains are reported with positive = safer outcome"


def _flat_palette() -> list:
    flat = []
    for i in range(N_CATEGORIES):
        flat.extend(PALETTE[i])
    return flat


def write_label_map(path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise FormatError(f"label map must be 2-D, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= N_CATEGORIES:
        raise FormatError("label values must be category ids in [0, 8)")
    img = Image.fromarray(labels.astype(np.uint8), mode="P")
    img.putpalette(_flat_palette())
    img.save(Path(path), format="PNG")


def read_label_map(path) -> np.ndarray:
    try:
        img = Image.open(Path(path))
        img.load()
    except Exception as exc:
        raise FormatError(f"{path}: not a readable image ({exc})") from exc
    if img.mode != "P":
        raise FormatError(f"{path}: expected an indexed-palette image, got mode {img.mode}")
    palette = img.getpalette() or []
    if palette[: 3 * N_CATEGORIES] != _flat_palette():
        raise FormatError(f"{path}: palette does not match the pinned category palette")
    labels = np.asarray(img, dtype=np.uint8)
    if labels.max() >= N_CATEGORIES:
        raise FormatError(f"{path}: pixel index {labels.max()} outside the 8-entry palette")
    return labels.copy()


def write_softmax(path, probs: np.ndarray) -> None:
    probs = np.asarray(probs)
    if probs.ndim != 3 or probs.shape[2] != N_CATEGORIES:
        raise FormatError(f"softmax tensor must be (H, W, 8), got {probs.shape}")
    sums = probs.sum(axis=-1)
    if np.abs(sums - 1.0).max() > 1e-4:
        raise FormatError("softmax rows must sum to 1 within 1e-4")
    h, w = probs.shape[:2]
    header = _SOFTMAX_HEADER.pack(SOFTMAX_MAGIC, SOFTMAX_VERSION, w, h, N_CATEGORIES)
    with open(Path(path), "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(probs, dtype="<f4").tobytes())


def read_softmax(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _SOFTMAX_HEADER.size:
        raise FormatError(f"{path}: truncated header at byte {len(raw)}")
    magic, version, w, h, channels = _SOFTMAX_HEADER.unpack_from(raw, 0)
    if magic != SOFTMAX_MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0, got {magic!r}")
    if version != SOFTMAX_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at byte 4")
    if channels != N_CATEGORIES:
        raise FormatError(f"{path}: channel count {channels} at byte 14, expected 8")
    expected = _SOFTMAX_HEADER.size + 4 * w * h * N_CATEGORIES
    if len(raw) != expected:
        raise FormatError(
            f"{path}: size {len(raw)} does not match header ({expected} bytes expected; "
            f"payload starts at byte {_SOFTMAX_HEADER.size})"
        )
    probs = np.frombuffer(raw, dtype="<f4", offset=_SOFTMAX_HEADER.size).reshape(h, w, N_CATEGORIES)
    sums = probs.sum(axis=-1)
    if np.abs(sums - 1.0).max() > 1e-4:
        raise FormatError(f"{path}: softmax rows do not sum to 1 within 1e-4")
    return probs.copy()


def write_candidates_csv(path, candidates) -> None:
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CANDIDATE_FIELDS)
        for i, c in enumerate(candidates):
            writer.writerow([i, c.x, c.y, c.radius_px, c.cluster_id])


def write_ranked_csv(path, scored) -> None:
    """Ranked candidate records; the id is the rank."""
    with open(Path(path), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RANKED_FIELDS)
        for sc in scored:
            c = sc.candidate
            writer.writerow(
                [sc.rank, c.x, c.y, c.radius_px, c.cluster_id,
                 repr(sc.h_s), repr(sc.h_d), repr(sc.h), sc.rank]
            )


def write_readouts(path, records) -> None:
    with open(Path(path), "w") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True))
            f.write("\n")


def read_readouts(path) -> list:
    records = []
    with open(Path(path)) as f:
        for n, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{n}: bad JSON record ({exc})") from exc
    return records


def write_report_csv(path, rows) -> None:
    buf = io.StringIO()
    buf.write(REPORT_SIGN_NOTE + "\n")
    writer = csv.writer(buf)
    writer.writerow([header for _, header in REPORT_COLUMNS])
    for row in rows:
        out = []
        for key, _ in REPORT_COLUMNS:
            v = row[key]
            out.append(f"{v:.6f}" if isinstance(v, float) else v)
        writer.writerow(out)
    Path(path).write_text(buf.getvalue())


def render_report_table(rows) -> str:
    """Human-readable fixed-width table of the aggregate report."""
    headers = [header for _, header in REPORT_COLUMNS]
    lines = [REPORT_SIGN_NOTE]
    body = []
    for row in rows:
        body.append(
            [
                f"{row[key]:.3f}" if isinstance(row[key], float) else str(row[key])
                for key, _ in REPORT_COLUMNS
            ]
        )
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h) for i, h in enumerate(headers)]
    lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)))
    for r in body:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(Path(path), "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
