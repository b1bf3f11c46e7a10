"""Independent reference implementations used as test oracles.

Nothing here imports the code under test's numerics: the TCN reference is
written directly from the architecture description in extended precision,
and the metric references work on explicit Python frame sets.
"""
from __future__ import annotations

import itertools

import numpy as np

LD = np.longdouble


def unpack(theta, n_in, kernel, c1, c2, window, n_classes):
    """Split a (m, D) batch of flat parameter vectors in storage order."""
    sizes = [("w1", (n_in, kernel, c1)), ("b1", (c1,)), ("w2", (c1, kernel, c2)), ("b2", (c2,)),
             ("wh", (window * c2, n_classes)), ("bh", (n_classes,))]
    out, off = {}, 0
    for name, shape in sizes:
        k = int(np.prod(shape))
        out[name] = theta[:, off:off + k].reshape((len(theta),) + shape)
        off += k
    assert off == theta.shape[1]
    return out


def _conv(x, w, b):
    """x (m, B, n, Cin), w (m, Cin, K, Cout): zero-padded causal convolution, tap by tap."""
    m, bsz, n, _ = x.shape
    k = w.shape[2]
    out = np.zeros((m, bsz, n, w.shape[3]), dtype=LD) + b[:, None, None, :]
    for t in range(n):
        for j in range(k):
            if t - j < 0:
                continue
            out[:, :, t] += np.einsum("mbc,mco->mbo", x[:, :, t - j], w[:, :, j])
    return out


def _lrelu(h, slope):
    return np.where(h > 0, h, LD(slope) * h)


def reference_loss(theta, x, y, dims, slope=0.01, l2=0.0):
    """Mean cross-entropy + l2 * |theta|^2 for each row of ``theta`` (m, D), in long double."""
    theta = np.asarray(theta, dtype=LD)
    p = unpack(theta, *dims)
    m = len(theta)
    xb = np.broadcast_to(np.asarray(x, dtype=LD), (m,) + np.shape(x))
    a1 = _lrelu(_conv(xb, p["w1"], p["b1"]), slope)
    a2 = _lrelu(_conv(a1, p["w2"], p["b2"]), slope)
    flat = a2.reshape(m, a2.shape[1], -1)
    z = np.einsum("mbf,mfk->mbk", flat, p["wh"]) + p["bh"][:, None, :]
    zmax = z.max(axis=2, keepdims=True)
    lse = np.log(np.exp(z - zmax).sum(axis=2)) + zmax[..., 0]
    picked = z[:, np.arange(len(y)), y]
    return (lse - picked).mean(axis=1) + LD(l2) * (theta * theta).sum(axis=1)


def finite_difference_grad(theta, x, y, dims, slope=0.01, l2=0.0, h=1e-5):
    """Central differences of :func:`reference_loss`, all coordinates at once."""
    theta = np.asarray(theta, dtype=LD)
    d = len(theta)
    eye = np.eye(d, dtype=LD) * LD(h)
    plus = reference_loss(theta[None] + eye, x, y, dims, slope, l2)
    minus = reference_loss(theta[None] - eye, x, y, dims, slope, l2)
    return (plus - minus) / (2 * LD(h))


# ---------------------------------------------------------------- metrics

def frames(intervals, label=None):
    return {f for g in intervals if label is None or g.label == label for f in range(g.start, g.end + 1)}


def brute_jaccard(gt, preds, label):
    a, b = frames(gt, label), frames(preds, label)
    union = a | b
    return len(a & b) / len(union) if union else None


def brute_max_matching(gt, preds, min_overlap=0.5):
    """Largest number of (gt, prediction) pairs, each used once, by exhaustive search."""
    ok = [[p.label == g.label and len(frames([p]) & frames([g])) > min_overlap * len(frames([g]))
           for p in preds] for g in gt]
    best = 0
    for r in range(min(len(gt), len(preds)), 0, -1):
        for gs in itertools.combinations(range(len(gt)), r):
            for ps in itertools.permutations(range(len(preds)), r):
                if all(ok[g][p] for g, p in zip(gs, ps)):
                    return r
    return best


def brute_false_positives(gt, preds, label):
    covered = frames(gt)
    return sum(1 for p in preds if p.label == label and not (frames([p]) & covered))
