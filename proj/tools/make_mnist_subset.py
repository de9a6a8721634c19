#!/usr/bin/env python3
"""Builds the MNIST subset used by the end-to-end tests.

The source is the 5000-sample MNIST extract (500 images per digit) bundled
with the mlxtend wheel as mlxtend/data/data/mnist_5k.csv.gz. The samples are
shuffled with a fixed seed and split into 2048 training and 1000 test images,
written as standard IDX files (magic 2051 / 2049, big-endian extents).

usage: make_mnist_subset.py <mnist_5k.csv.gz> <out_dir>
"""
import gzip
import struct
import sys

import numpy as np


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, images.shape[0], 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    src, out = sys.argv[1], sys.argv[2]
    with gzip.open(src, "rt") as f:
        table = np.loadtxt(f, delimiter=",")
    pixels = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    order = np.random.RandomState(20251115).permutation(len(labels))
    train, test = order[:2048], order[2048:3048]
    write_images(f"{out}/train-images-idx3-ubyte", pixels[train])
    write_labels(f"{out}/train-labels-idx1-ubyte", labels[train])
    write_images(f"{out}/t10k-images-idx3-ubyte", pixels[test])
    write_labels(f"{out}/t10k-labels-idx1-ubyte", labels[test])


if __name__ == "__main__":
    main()
