#!/usr/bin/env python3
"""Builds data/mnist5k/*.gz (gzipped IDX) from the 5000-digit MNIST subset
shipped inside the mlxtend wheel. Rows are shuffled with a fixed permutation
because the source file is sorted by class.

usage: python3 tools/make_mnist5k.py path/to/mlxtend-*.whl [outdir]
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def main():
    wheel = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else "data/mnist5k"
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    images = table[:, :-1].astype(np.uint8).reshape(-1, 28, 28)
    labels = table[:, -1].astype(np.uint8)
    perm = np.random.RandomState(0).permutation(len(labels))
    images, labels = images[perm], labels[perm]
    n = len(labels)
    img = struct.pack(">IIII", 0x00000803, n, 28, 28) + images.tobytes()
    lab = struct.pack(">II", 0x00000801, n) + labels.tobytes()
    # mtime=0 keeps the archives byte-stable
    with open(f"{out}/images-idx3-ubyte.gz", "wb") as f:
        f.write(gzip.compress(img, mtime=0))
    with open(f"{out}/labels-idx1-ubyte.gz", "wb") as f:
        f.write(gzip.compress(lab, mtime=0))


if __name__ == "__main__":
    main()
