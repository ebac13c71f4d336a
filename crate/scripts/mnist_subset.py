"""Build the desk-scale MNIST subset (5,000 train / 1,000 test) as gzipped IDX files.

Source: the `mnist` npm package (digits stored as JSON arrays of pixel/255 values).

    npm install mnist
    python3 scripts/mnist_subset.py node_modules/mnist/src/digits data/mnist
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path

TRAIN_PER_CLASS = 500
TEST_PER_CLASS = 100
SIDE = 28


def load(digits_dir):
    per_class = []
    for d in range(10):
        raw = json.loads((Path(digits_dir) / f"{d}.json").read_text())["data"]
        px = [min(255, max(0, int(round(v * 255)))) for v in raw]
        n = len(px) // (SIDE * SIDE)
        per_class.append([bytes(px[i * SIDE * SIDE:(i + 1) * SIDE * SIDE]) for i in range(n)])
    return per_class


def write_idx(path, images, labels):
    img = struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE) + b"".join(images)
    lab = struct.pack(">II", 0x00000801, len(labels)) + bytes(labels)
    for suffix, payload in (("images-idx3-ubyte.gz", img), ("labels-idx1-ubyte.gz", lab)):
        with open(f"{path}-{suffix}", "wb") as f:
            with gzip.GzipFile(fileobj=f, mode="wb", mtime=0) as gz:
                gz.write(payload)


def main():
    digits_dir, out = sys.argv[1], Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    per_class = load(digits_dir)
    train, test = [], []
    for label, imgs in enumerate(per_class):
        train += [(im, label) for im in imgs[:TRAIN_PER_CLASS]]
        test += [(im, label) for im in imgs[TRAIN_PER_CLASS:TRAIN_PER_CLASS + TEST_PER_CLASS]]
    rng = random.Random(2024)
    rng.shuffle(train)
    rng.shuffle(test)
    write_idx(out / "train", [i for i, _ in train], [l for _, l in train])
    write_idx(out / "t10k", [i for i, _ in test], [l for _, l in test])


if __name__ == "__main__":
    main()
