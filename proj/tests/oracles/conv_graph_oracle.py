#!/usr/bin/env python3
"""Independent numpy reference for a small conv network and its activation graph.

Writes conv_small.agmf, conv_inputs.agtd and conv_expected.json into the
fixture directory. Everything is computed with explicit loops in float64
from the float32 weights stored in the model file.
"""
import argparse
import json
import struct
from pathlib import Path

import numpy as np

SPEC = {
    "input_shape": [6, 6, 2],
    "num_classes": 3,
    "layers": [
        {"type": "conv2d", "in_channels": 2, "out_channels": 3, "kernel_h": 3, "kernel_w": 3, "stride": 1, "padding": 1},
        {"type": "relu"},
        {"type": "maxpool", "size": 2, "stride": 2},
        {"type": "conv2d", "in_channels": 3, "out_channels": 4, "kernel_h": 2, "kernel_w": 2, "stride": 1, "padding": 0},
        {"type": "relu"},
        {"type": "flatten"},
        {"type": "dense", "in": 16, "out": 5},
        {"type": "relu"},
        {"type": "dense", "in": 5, "out": 3},
        {"type": "softmax"},
    ],
}
THRESHOLD = 0.4


def agtd(array):
    array = np.ascontiguousarray(array, dtype="<f4")
    return b"AGTD" + struct.pack("<I", array.ndim) + struct.pack(f"<{array.ndim}I", *array.shape) + array.tobytes()


def agmf(spec, params):
    text = json.dumps(spec, separators=(",", ":")).encode()
    out = b"AGMF" + struct.pack("<II", 1, len(text)) + text
    for kernel, bias in params:
        for blob in (agtd(kernel), agtd(bias)):
            out += struct.pack("<I", len(blob)) + blob
    return out


def conv(x, kernel, bias, stride, pad):
    h, w, cin = x.shape
    kh, kw, _, cout = kernel.shape
    xp = np.zeros((h + 2 * pad, w + 2 * pad, cin))
    xp[pad:pad + h, pad:pad + w] = x
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    y = np.zeros((oh, ow, cout))
    for oy in range(oh):
        for ox in range(ow):
            for o in range(cout):
                acc = bias[o]
                for dy in range(kh):
                    for dx in range(kw):
                        for c in range(cin):
                            acc += xp[oy * stride + dy, ox * stride + dx, c] * kernel[dy, dx, c, o]
                y[oy, ox, o] = acc
    return y


def maxpool(x, size, stride):
    h, w, c = x.shape
    oh, ow = (h - size) // stride + 1, (w - size) // stride + 1
    y = np.zeros((oh, ow, c))
    for oy in range(oh):
        for ox in range(ow):
            for ch in range(c):
                y[oy, ox, ch] = x[oy * stride:oy * stride + size, ox * stride:ox * stride + size, ch].max()
    return y


def forward(x, params):
    """Returns softmax output and each trainable layer's post-activation output."""
    (k0, b0), (k1, b1), (k2, b2), (k3, b3) = params
    a0 = np.maximum(conv(x, k0, b0, 1, 1), 0)
    a1 = np.maximum(conv(maxpool(a0, 2, 2), k1, b1, 1, 0), 0)
    a2 = np.maximum(a1.reshape(-1) @ k2 + b2, 0)
    z = a2 @ k3 + b3
    e = np.exp(z - z.max())
    p = e / e.sum()
    return p, [a0, a1, a2, p]


def minmax(v):
    lo, hi = v.min(), v.max()
    return np.zeros_like(v) if hi - lo <= 0 else (v - lo) / (hi - lo)


def phi(activation):
    if activation.ndim == 3:
        activation = activation.mean(axis=(0, 1))
    return minmax(activation)


def weight_blocks(params):
    (k0, _), (k1, _), (k2, _), (k3, _) = params
    blocks = []
    # conv -> conv: mean over the spatial kernel slice
    blocks.append(minmax(k1.mean(axis=(0, 1))))
    # conv -> dense: mean over every flattened position of the source filter
    channels = k1.shape[3]
    b = np.zeros((channels, k2.shape[1]))
    for j in range(channels):
        b[j] = k2[j::channels].mean(axis=0)
    blocks.append(minmax(b))
    blocks.append(minmax(k3.astype(np.float64)))
    return blocks


def graph(params, activations):
    blocks = weight_blocks(params)
    phis = [phi(a) for a in activations]
    sizes = [len(p) for p in phis]
    nf = [np.zeros(sizes[0])]
    cnf = [np.zeros(sizes[0])]
    adjacency = []
    for l, block in enumerate(blocks):
        a = np.zeros(block.shape)
        for j in range(block.shape[0]):
            for i in range(block.shape[1]):
                a[j, i] = block[j, i] * phis[l + 1][i]
        adjacency.append(a)
        nf.append(np.array([sum(a[j, i] for j in range(a.shape[0])) for i in range(a.shape[1])]))
        cnf.append(np.array([sum(a[j, i] * nf[l][j] for j in range(a.shape[0])) for i in range(a.shape[1])]))
    return phis, adjacency, nf, cnf


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "fixtures")
    args = parser.parse_args()

    rng = np.random.default_rng(20240611)
    shapes = [((3, 3, 2, 3), 3), ((2, 2, 3, 4), 4), ((16, 5), 5), ((5, 3), 3)]
    params = []
    for kshape, units in shapes:
        kernel = rng.uniform(-0.8, 0.8, size=kshape).astype(np.float32)
        bias = rng.uniform(0.0, 0.2, size=units).astype(np.float32)
        params.append((kernel, bias))
    inputs = rng.uniform(0.0, 1.0, size=(3, 6, 6, 2)).astype(np.float32)

    params64 = [(k.astype(np.float64), b.astype(np.float64)) for k, b in params]
    cases = []
    for x in inputs.astype(np.float64):
        probs, acts = forward(x, params64)
        phis, adjacency, nf, cnf = graph(params64, acts)
        edges = int(sum(((a > 0) & (a >= THRESHOLD)).sum() for a in adjacency))
        cases.append({
            "probs": probs.tolist(),
            "phi": [p.tolist() for p in phis],
            "nf": [v.tolist() for v in nf],
            "cnf": [v.tolist() for v in cnf],
            "features": np.concatenate([cnf[2], cnf[3]]).tolist(),
            "edges_at_threshold": edges,
        })

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "conv_small.agmf").write_bytes(agmf(SPEC, params))
    (args.out / "conv_inputs.agtd").write_bytes(agtd(inputs))
    expected = {"threshold": THRESHOLD, "k": 4, "cases": cases}
    (args.out / "conv_expected.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main()
