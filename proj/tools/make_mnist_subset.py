#!/usr/bin/env python3
"""Convert a 5000-sample MNIST CSV (784 pixels + label per row) into IDX files.

Usage: make_mnist_subset.py mnist_5k.csv.gz OUT_DIR [--train 4000]
"""
import argparse
import gzip
import random
import struct
from pathlib import Path


def write_idx(path, magic, dims, payload):
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        for d in dims:
            f.write(struct.pack(">I", d))
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("out")
    ap.add_argument("--train", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    with gzip.open(args.csv, "rt") as f:
        for line in f:
            vals = [int(float(v)) for v in line.strip().split(",")]
            rows.append((vals[:-1], vals[-1]))

    # source rows are grouped by class
    random.Random(args.seed).shuffle(rows)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    splits = {"train": rows[: args.train], "t10k": rows[args.train :]}
    for name, part in splits.items():
        pixels = [p for img, _ in part for p in img]
        labels = [lab for _, lab in part]
        write_idx(out / f"{name}-images-idx3-ubyte", 0x00000803, [len(part), 28, 28], pixels)
        write_idx(out / f"{name}-labels-idx1-ubyte", 0x00000801, [len(part)], labels)


if __name__ == "__main__":
    main()
