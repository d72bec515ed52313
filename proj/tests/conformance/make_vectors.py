#!/usr/bin/env python3
"""Independent numpy reference for the runtime's forward semantics.

Writes LHDRW001 weight files and LHDRT001 tensors into ./vectors. The C++
conformance test loads them and compares within 1e-5 max-abs.

    python3 make_vectors.py [--out DIR] [--seed N]
"""
import argparse
import pathlib
import struct

import numpy as np

MU = 5000.0
GAMMA = 2.2
LUMA = np.array([0.2126, 0.7152, 0.0722])
ACT = {"none": 0, "relu": 1, "tanh": 2}

# (kernel, in, out, activation)
SPECS = {
    "coarse": [(3, 12, 24, "relu"), (3, 24, 24, "relu"), (3, 24, 24, "relu"), (3, 24, 2, "tanh")],
    "fine": [(3, 12, 16, "relu"), (3, 16, 16, "relu"), (3, 16, 2, "tanh")],
    "merge": [(3, 8, 16, "relu"), (3, 16, 16, "relu"), (3, 16, 2, "none")],
}


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def write_weights(path, layers):
    out = bytearray(b"LHDRW001")
    out += struct.pack("<I", len(layers))
    for (k, cin, cout, act), kern, bias in layers:
        out += struct.pack("<IIIB", k, cin, cout, ACT[act])
        out += kern.astype("<f4").tobytes()
        out += bias.astype("<f4").tobytes()
    out += struct.pack("<Q", fnv1a64(bytes(out)))
    path.write_bytes(bytes(out))


def write_tensor(path, t):
    h, w, c = t.shape
    path.write_bytes(b"LHDRT001" + struct.pack("<III", h, w, c) + t.astype("<f4").tobytes())


def random_layers(spec, rng, scale):
    layers = []
    for k, cin, cout, act in spec:
        fan = k * k * cin
        kern = rng.uniform(-scale, scale, (k, k, cin, cout)) / np.sqrt(fan / 9.0)
        bias = rng.uniform(-0.1, 0.1, cout)
        layers.append(((k, cin, cout, act), kern.astype(np.float32), bias.astype(np.float32)))
    return layers


def conv(x, kern, bias):
    k = kern.shape[0]
    r = k // 2
    h, w, _ = x.shape
    p = np.pad(x.astype(np.float64), ((r, r), (r, r), (0, 0)), mode="edge")
    out = np.broadcast_to(bias.astype(np.float64), (h, w, kern.shape[3])).copy()
    for ky in range(k):
        for kx in range(k):
            out += p[ky:ky + h, kx:kx + w, :] @ kern[ky, kx].astype(np.float64)
    return out.astype(np.float32)


def forward(layers, x):
    for (_, _, _, act), kern, bias in layers:
        x = conv(x, kern, bias)
        if act == "relu":
            x = np.maximum(x, 0)
        elif act == "tanh":
            x = np.tanh(x)
    return x.astype(np.float32)


def tone(x):
    return (np.log1p(MU * np.maximum(x.astype(np.float64), 0)) / np.log1p(MU)).astype(np.float32)


def grad_mag(l):
    p = np.pad(l, 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    return np.sqrt(gx * gx + gy * gy)


def align_feature(img):
    t = tone(img).astype(np.float64)
    n = (t - t.mean()) / (t.std() + 1e-6)
    g = grad_mag(n @ LUMA)
    return np.concatenate([n, g[..., None]], axis=2).astype(np.float32)


def align_input(a, b):
    return np.concatenate([a, b, a - b], axis=2)


def avg_downsample(t, d):
    h, w, c = t.shape
    hh, ww = -(-h // d), -(-w // d)
    p = np.pad(t.astype(np.float64), ((0, hh * d - h), (0, ww * d - w), (0, 0)), mode="edge")
    return p.reshape(hh, d, ww, d, c).mean(axis=(1, 3)).astype(np.float32)


def upsample(t, d, ow, oh):
    h, w, _ = t.shape

    def taps(n_out, n_in):
        s = np.clip((np.arange(n_out) + 0.5) / d - 0.5, 0, n_in - 1)
        i0 = np.floor(s).astype(int)
        return i0, np.minimum(i0 + 1, n_in - 1), s - i0

    y0, y1, fy = taps(oh, h)
    x0, x1, fx = taps(ow, w)
    t = t.astype(np.float64)
    top = (1 - fx)[None, :, None] * t[y0][:, x0] + fx[None, :, None] * t[y0][:, x1]
    bot = (1 - fx)[None, :, None] * t[y1][:, x0] + fx[None, :, None] * t[y1][:, x1]
    return ((1 - fy)[:, None, None] * top + fy[:, None, None] * bot).astype(np.float32)


def warp(img, shift):
    """Bilinear sampling at x + shift; out-of-bounds taps dropped and renormalized."""
    h, w, c = img.shape
    out = np.zeros_like(img, dtype=np.float64)
    valid = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            sx, sy = x + shift[y, x, 0], y + shift[y, x, 1]
            x0, y0 = int(np.floor(sx)), int(np.floor(sy))
            fx, fy = sx - x0, sy - y0
            wx = [(1 - fx) if 0 <= x0 < w else 0.0, fx if 0 <= x0 + 1 < w else 0.0]
            wy = [(1 - fy) if 0 <= y0 < h else 0.0, fy if 0 <= y0 + 1 < h else 0.0]
            mx, my = sum(wx), sum(wy)
            if mx <= 0 or my <= 0:
                continue
            valid[y, x] = min(1.0, mx * my)
            for j in range(2):
                for i in range(2):
                    if wx[i] > 0 and wy[j] > 0:
                        out[y, x] += wx[i] / mx * wy[j] / my * img[y0 + j, x0 + i]
    return out.astype(np.float32), valid.astype(np.float32)


def predict_shift(base, alt, coarse, fine, d, m_c, m_f):
    h, w, _ = base.shape
    phi_b = align_feature(base)
    cin = avg_downsample(align_input(align_feature(alt), phi_b), d)
    s_c = upsample((m_c * forward(coarse, cin)).astype(np.float32), d, w, h) * d
    alt_c, _ = warp(alt, s_c)
    s_f = (m_f * forward(fine, align_input(align_feature(alt_c), phi_b))).astype(np.float32)
    return (s_c + s_f).astype(np.float32)


def merge_feature(img):
    g = np.power(np.maximum(img.astype(np.float64), 0), 1 / GAMMA) @ LUMA
    return np.concatenate([img, g[..., None]], axis=2).astype(np.float32)


def merge_weights(base, alt, valid, merge):
    logits = forward(merge, np.concatenate([merge_feature(base), merge_feature(alt)], axis=2))
    e = np.exp(logits.astype(np.float64) - logits.max(axis=2, keepdims=True))
    p = e / e.sum(axis=2, keepdims=True)
    gated = p[..., 1] * np.clip(valid, 0, 1)
    w_alt = gated / (p[..., 0] + gated)
    return w_alt.astype(np.float32)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).parent / "vectors"))
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    nets = {}
    for name, spec in SPECS.items():
        nets[name] = random_layers(spec, rng, 0.5)
        write_weights(out / f"{name}.lhdrw", nets[name])
        x = rng.normal(0, 1, (13, 11, spec[0][1])).astype(np.float32)
        write_tensor(out / f"{name}_input.lhdrt", x)
        write_tensor(out / f"{name}_output.lhdrt", forward(nets[name], x))

    h, w = 20, 24
    base = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
    alt = rng.uniform(0, 1, (h, w, 3)).astype(np.float32)
    write_tensor(out / "frame_base.lhdrt", base)
    write_tensor(out / "frame_alt.lhdrt", alt)
    write_tensor(out / "align_feature.lhdrt", align_feature(base))
    write_tensor(out / "merge_feature.lhdrt", merge_feature(base))

    shift = rng.uniform(-3, 3, (h, w, 2)).astype(np.float32)
    write_tensor(out / "warp_shift.lhdrt", shift)
    warped, valid = warp(alt, shift)
    write_tensor(out / "warp_image.lhdrt", warped)
    write_tensor(out / "warp_validity.lhdrt", valid[..., None])

    total = predict_shift(base, alt, nets["coarse"], nets["fine"], 4, 13.0, 6.0)
    write_tensor(out / "predict_shift.lhdrt", total)

    w_alt = merge_weights(base, warped, valid, nets["merge"])
    write_tensor(out / "merge_w_alt.lhdrt", w_alt[..., None])


if __name__ == "__main__":
    main()
