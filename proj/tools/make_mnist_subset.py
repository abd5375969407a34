#!/usr/bin/env python3
"""Build the bundled MNIST subset (data/mnist-subset) from the `mnist` npm package.

The npm package (MIT, github.com/cazala/mnist) ships 10,000 MNIST digits as
JSON arrays of pixel intensities in [0, 1]. This script quantizes them back to
bytes and writes gzip-compressed IDX files with an 8000/2000 train/test split
(roughly stratified per digit, shuffled with a fixed seed).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/mnist-subset
"""
import gzip
import json
import pathlib
import random
import struct
import sys


def write_idx_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_idx_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    digits_dir = pathlib.Path(sys.argv[1])
    out_dir = pathlib.Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20210101)
    train, test = [], []
    for digit in range(10):
        flat = json.loads((digits_dir / f"{digit}.json").read_text())["data"]
        count = len(flat) // 784
        items = []
        for i in range(count):
            pixels = flat[i * 784:(i + 1) * 784]
            items.append(([min(255, max(0, round(v * 255))) for v in pixels], digit))
        rng.shuffle(items)
        n_test = round(count * 0.2)
        test.extend(items[:n_test])
        train.extend(items[n_test:])
    # trim to exact 8000/2000 so headers are round numbers
    rng.shuffle(train)
    rng.shuffle(test)
    total = train + test
    train, test = total[:8000], total[8000:10000]
    for name, part in (("train", train), ("t10k", test)):
        write_idx_images(out_dir / f"{name}-images-idx3-ubyte.gz", [p for p, _ in part])
        write_idx_labels(out_dir / f"{name}-labels-idx1-ubyte.gz", [l for _, l in part])
        print(name, len(part))


if __name__ == "__main__":
    main()
