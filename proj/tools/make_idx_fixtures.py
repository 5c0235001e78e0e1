#!/usr/bin/env python3
"""Regenerates tests/fixtures/idx: small IDX pairs, good and broken.

Each entry of manifest.json names an image file, a label file and either the
expected shape or the expected diagnostic (message fragment and byte offset).
"""
import gzip
import json
import pathlib
import struct

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "idx"


def images(n, rows, cols, magic=0x803, count=None):
    head = struct.pack(">IIII", magic, n if count is None else count, rows, cols)
    body = bytes((7 * i + 3) % 256 for i in range(n * rows * cols))
    return head + body


def labels(values, magic=0x801, count=None):
    return struct.pack(">II", magic, len(values) if count is None else count) + bytes(values)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    files = {
        "two-images.idx3": images(2, 28, 28),
        "two-labels.idx1": labels([7, 2]),
        "two-images.idx3.gz": gzip.compress(images(2, 28, 28), mtime=0),
        "two-labels.idx1.gz": gzip.compress(labels([7, 2]), mtime=0),
        "bad-magic-images.idx3": images(2, 28, 28, magic=0x801),
        "bad-magic-labels.idx1": labels([7, 2], magic=0x803),
        "three-labels.idx1": labels([1, 2, 3]),
        "truncated-images.idx3": images(2, 28, 28)[:-5],
        "truncated-header.idx3": images(2, 28, 28)[:10],
        "truncated-labels.idx1": labels([7, 2])[:-1],
        "trailing-images.idx3": images(2, 28, 28) + b"\x00",
        "zero-rows.idx3": images(0, 0, 28),
        "broken.idx3.gz": gzip.compress(images(2, 28, 28), mtime=0)[:40],
        "empty.idx3": images(0, 28, 28),
        "empty.idx1": labels([]),
    }
    for name, data in files.items():
        (OUT / name).write_bytes(data)

    ok = {"ok": True, "shape": [2, 28, 28], "expected_labels": [7, 2]}
    cases = [
        {"name": "two images", "images": "two-images.idx3", "labels": "two-labels.idx1", **ok},
        {"name": "gzip", "images": "two-images.idx3.gz", "labels": "two-labels.idx1.gz", **ok},
        {"name": "mixed compression", "images": "two-images.idx3.gz", "labels": "two-labels.idx1", **ok},
        {"name": "empty", "images": "empty.idx3", "labels": "empty.idx1", "ok": True, "shape": [0, 28, 28],
         "expected_labels": []},
        {"name": "image magic", "images": "bad-magic-images.idx3", "labels": "two-labels.idx1", "ok": False,
         "message": "images: bad magic", "offset": 0},
        {"name": "label magic", "images": "two-images.idx3", "labels": "bad-magic-labels.idx1", "ok": False,
         "message": "labels: bad magic", "offset": 0},
        {"name": "count mismatch", "images": "two-images.idx3", "labels": "three-labels.idx1", "ok": False,
         "message": "does not match image count", "offset": 4},
        {"name": "truncated pixels", "images": "truncated-images.idx3", "labels": "two-labels.idx1", "ok": False,
         "message": "truncated pixel data", "offset": 16 + 2 * 784 - 5},
        {"name": "truncated header", "images": "truncated-header.idx3", "labels": "two-labels.idx1", "ok": False,
         "message": "truncated while reading row count", "offset": 10},
        {"name": "truncated labels", "images": "two-images.idx3", "labels": "truncated-labels.idx1", "ok": False,
         "message": "truncated while reading label data", "offset": 9},
        {"name": "trailing bytes", "images": "trailing-images.idx3", "labels": "two-labels.idx1", "ok": False,
         "message": "trailing bytes", "offset": 16 + 2 * 784},
        {"name": "zero extent", "images": "zero-rows.idx3", "labels": "empty.idx1", "ok": False,
         "message": "zero image extent", "offset": 8},
        {"name": "broken gzip", "images": "broken.idx3.gz", "labels": "two-labels.idx1", "ok": False,
         "message": "truncated gzip stream", "offset": 40},
    ]
    (OUT / "manifest.json").write_text(json.dumps(cases, indent=1) + "\n")


if __name__ == "__main__":
    main()
