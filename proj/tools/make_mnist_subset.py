#!/usr/bin/env python3
"""Write a 1000/1000 MNIST subset in IDX format.

Source: mnist_5k.csv.gz shipped inside the mlxtend wheel (5000 rows, 784
pixel columns then the label). Fetch the wheel with
    pip download mlxtend==0.24.0 --no-deps -d /tmp/mlx
The split is deterministic: rows are ordered by a seeded permutation, the
first 1000 become the training set and the next 1000 the test set.
"""
import argparse
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def read_rows(wheel):
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    text = gzip.decompress(raw).decode()
    rows = np.loadtxt(io.StringIO(text), delimiter=",", dtype=np.int64)
    if rows.shape != (5000, 785):
        sys.exit(f"unexpected table shape {rows.shape}")
    return rows[:, :784].astype(np.uint8), rows[:, 784].astype(np.uint8)


def write_idx(path, images, labels):
    n = len(labels)
    with open(path / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.tobytes())
    with open(path / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--wheel", default="/tmp/mlx/mlxtend-0.24.0-py3-none-any.whl")
    ap.add_argument("--out", default="data/mnist-subset")
    ap.add_argument("--train", type=int, default=1000)
    ap.add_argument("--test", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    images, labels = read_rows(args.wheel)
    order = np.random.default_rng(args.seed).permutation(len(labels))
    out = Path(args.out)
    for name, idx in (("train", order[: args.train]), ("test", order[args.train : args.train + args.test])):
        d = out / name
        d.mkdir(parents=True, exist_ok=True)
        write_idx(d, images[idx], labels[idx])
        print(name, len(idx), "class counts", np.bincount(labels[idx], minlength=10).tolist())


if __name__ == "__main__":
    main()
