#!/usr/bin/env python3
"""Regenerates the checked-in test fixtures under tests/fixtures.

Digits come from scikit-learn's bundled copy of the UCI optical digits set
(8x8, 17 grey levels), scaled to [0, 1] and stored as [n, 8, 8, 1].
"""
import argparse
import json
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_tensor(path, array):
    array = np.ascontiguousarray(array, dtype="<f4")
    header = b"AGTD" + struct.pack("<I", array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape)
    path.write_bytes(header + array.tobytes())


def write_labels(path, labels, flags=None):
    labels = np.asarray(labels, dtype="<u4")
    out = b"AGLB" + struct.pack("<I", len(labels)) + labels.tobytes()
    if flags is None:
        out += b"\x00"
    else:
        out += b"\x01" + np.asarray(flags, dtype=np.uint8).tobytes()
    path.write_bytes(out)


MLP = {
    "input_shape": [8, 8, 1],
    "num_classes": 10,
    "layers": [
        {"type": "flatten"},
        {"type": "dense", "in": 64, "out": 32},
        {"type": "relu"},
        {"type": "dense", "in": 32, "out": 16},
        {"type": "relu"},
        {"type": "dense", "in": 16, "out": 16},
        {"type": "relu"},
        {"type": "dense", "in": 16, "out": 10},
        {"type": "softmax"},
    ],
}

PIPELINE = {
    "train_dnn": {"spec": "mlp_digits.json", "epochs": 50, "learning_rate": 0.05, "batch_size": 1},
    "train": {"inputs": "digits/train.agtd", "labels": "digits/train.aglb"},
    "validation": {"inputs": "digits/val.agtd", "labels": "digits/val.aglb"},
    "test": {"inputs": "digits/test.agtd", "labels": "digits/test.aglb"},
    "method": "actgraph",
    "k": 4,
    "balance_per_class": 200,
    "corruption": {
        "ops": ["rotate:90", "rotate:270", "flip:h", "flip:v", "translate:2,0", "translate:0,2"],
        "test_clean": 800,
        "test_corrupted": 200,
    },
    "cutoffs": [100, 500, 1000, "all"],
    "seed": 42,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests" / "fixtures")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    out = args.out
    (out / "digits").mkdir(parents=True, exist_ok=True)
    (out / "rauc6of7").mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    x = (digits.images / 16.0).astype(np.float32)[..., None]
    y = digits.target.astype(np.uint32)
    perm = np.random.default_rng(args.seed).permutation(len(y))
    splits = {"train": perm[:600], "val": perm[600:997], "test": perm[997:]}
    for name, idx in splits.items():
        write_tensor(out / "digits" / f"{name}.agtd", x[idx])
        write_labels(out / "digits" / f"{name}.aglb", y[idx])

    (out / "mlp_digits.json").write_text(json.dumps(MLP, indent=2) + "\n")
    (out / "pipeline_digits.json").write_text(json.dumps(PIPELINE, indent=2) + "\n")

    # Four cases whose ranking puts the faults at positions 1 and 3.
    (out / "rauc6of7" / "scores.csv").write_text("index,score\n0,0.7\n1,0.9\n2,0.8\n3,0.6\n")
    write_labels(out / "rauc6of7" / "flags.aglb", [0, 0, 0, 0], [1, 1, 0, 0])

    write_tensor(out / "golden.agtd", np.array([[0.0, 1.0, -2.0], [0.5, 1.5, 3.25]], dtype=np.float32))


if __name__ == "__main__":
    main()
