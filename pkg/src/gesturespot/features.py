"""Per-frame and per-window hand features.

All extractors take raw joint arrays: a frame is ``(26, 3)``, a stream or
window is ``(T, 26, 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .skeleton import (
    DEFAULT_PARENTS,
    FINGERTIPS,
    INDEX,
    N_JOINTS,
    PINKY,
    WRIST,
    resample_uniform,
    segments,
)

ENERGY_EPS = 1e-6
# forward (viewing) direction of the head-anchored frame
DEFAULT_AXIS = np.array([0.0, 0.0, 1.0])

N_ANGLES = 325
GROUP3_BLOCKS = ("position", "speed", "acceleration", "distances", "spherical")
GROUP3_WIDTH = {"position": 3, "speed": 3, "acceleration": 3, "distances": N_JOINTS, "spherical": 3}
# TN-FSM run variants
GROUP3_VARIANTS = {
    "base": ("position", "speed", "acceleration"),
    "jd": ("position", "speed", "acceleration", "distances"),
    "sc": ("position", "speed", "acceleration", "spherical"),
    "full": GROUP3_BLOCKS,
}

PALM_PLANE = (WRIST, INDEX[0], PINKY[0])
JPD_PAIRS = tuple((WRIST, tip) for tip in FINGERTIPS) + tuple(zip(FINGERTIPS, FINGERTIPS[1:]))
BASELINE_STEPS = 30
BASELINE_WIDTH = 325 + 3 * len(JPD_PAIRS) + 3 * N_JOINTS * 2 + 3 + 1

_PAIRS_I, _PAIRS_J = np.triu_indices(N_JOINTS, k=1)


# ---------------------------------------------------------------------------
# motion energy

def window_energy(window: np.ndarray, eps: float = ENERGY_EPS) -> float:
    """Relative joint displacement summed over joints and consecutive frames.

    ``window`` holds ``l + 1`` frames.  Terms whose previous position has
    norm below ``eps`` are skipped.
    """
    window = np.asarray(window, dtype=np.float64)
    return float(frame_energies(window, eps)[1:].sum())


def frame_energies(joints: np.ndarray, eps: float = ENERGY_EPS) -> np.ndarray:
    """Per-frame energy terms; entry ``t`` covers the step ``t-1 -> t``, entry 0 is 0."""
    joints = np.asarray(joints, dtype=np.float64)
    out = np.zeros(len(joints))
    if len(joints) < 2:
        return out
    step = np.linalg.norm(np.diff(joints, axis=0), axis=-1)
    prev = np.linalg.norm(joints[:-1], axis=-1)
    ok = prev >= eps
    ratio = np.divide(step, prev, out=np.zeros_like(step), where=ok)
    out[1:] = ratio.sum(axis=1)
    return out


def sliding_energy(joints: np.ndarray, length: int = 10, eps: float = ENERGY_EPS) -> np.ndarray:
    """Energy of every stride-1 window of ``length + 1`` frames; entry i starts at frame i."""
    per_frame = frame_energies(joints, eps)
    if len(joints) <= length:
        return np.zeros(0)
    # window i spans frames i..i+length, i.e. terms i+1..i+length; summed
    # directly so equal windows give bit-equal energies
    terms = np.lib.stride_tricks.sliding_window_view(per_frame[1:], length)
    return terms.sum(axis=1)


# ---------------------------------------------------------------------------
# segment angles

def segment_vectors(joints: np.ndarray, parents=DEFAULT_PARENTS, axis=DEFAULT_AXIS) -> np.ndarray:
    """(..., 26, 3) direction vectors: the 25 skeleton segments then the fixed axis."""
    joints = np.asarray(joints, dtype=np.float64)
    segs = segments(parents)
    par = np.array([p for p, _ in segs])
    chi = np.array([c for _, c in segs])
    vec = joints[..., chi, :] - joints[..., par, :]
    ax = np.broadcast_to(np.asarray(axis, dtype=np.float64), vec.shape[:-2] + (1, 3))
    return np.concatenate([vec, ax], axis=-2)


def segment_angles(
    joints: np.ndarray,
    parents=DEFAULT_PARENTS,
    axis=DEFAULT_AXIS,
    self_pairs: bool = False,
    return_degenerate: bool = False,
):
    """Angles between all unordered pairs of segment/axis directions.

    Works on one frame ``(26, 3)`` or a stream ``(T, 26, 3)``; returns 325
    angles per frame (351 with ``self_pairs``, which appends 26 zeros).
    Angles touching a zero-length segment are set to 0 and the frame is
    flagged degenerate.
    """
    vec = segment_vectors(joints, parents, axis)
    norm = np.linalg.norm(vec, axis=-1, keepdims=True)
    bad = norm[..., 0] < 1e-12
    unit = np.divide(vec, norm, out=np.zeros_like(vec), where=norm >= 1e-12)
    m = vec.shape[-2]
    iu, ju = np.triu_indices(m, k=1)
    cos = np.einsum("...ik,...ik->...i", unit[..., iu, :], unit[..., ju, :])
    ang = np.arccos(np.clip(cos, -1.0, 1.0))
    zero = bad[..., iu] | bad[..., ju]
    ang = np.where(zero, 0.0, ang)
    if self_pairs:
        ang = np.concatenate([ang, np.zeros(ang.shape[:-1] + (m,))], axis=-1)
    if return_degenerate:
        return ang, bad.any(axis=-1)
    return ang


# ---------------------------------------------------------------------------
# kinematics, distances, spherical coordinates

@dataclass(frozen=True)
class KinematicFeatures:
    speed: np.ndarray  # (T, 26, 3)
    acceleration: np.ndarray  # (T, 26, 3)


def speed_accel(joints: np.ndarray) -> KinematicFeatures:
    """First and second backward differences, zero-padded at the stream start."""
    p = np.asarray(joints, dtype=np.float64)
    s = np.zeros_like(p)
    a = np.zeros_like(p)
    if len(p) > 1:
        s[1:] = p[1:] - p[:-1]
    if len(p) > 2:
        a[2:] = p[2:] - 2 * p[1:-1] + p[:-2]
    return KinematicFeatures(s, a)


def joint_distances(frame: np.ndarray) -> np.ndarray:
    """Per-axis absolute coordinate differences, shape (3, 26, 26)."""
    f = np.asarray(frame, dtype=np.float64)
    return np.abs(f.T[:, :, None] - f.T[:, None, :])


def euclidean_distances(joints: np.ndarray) -> np.ndarray:
    """(..., 26, 26) pairwise joint distances."""
    j = np.asarray(joints, dtype=np.float64)
    d = j[..., :, None, :] - j[..., None, :, :]
    return np.sqrt(np.einsum("...k,...k->...", d, d))


def spherical_coords(points: np.ndarray) -> np.ndarray:
    """(..., 3) Cartesian -> (..., 3) as (r, theta, phi).

    theta = atan2(sqrt(x^2 + y^2), z) in [0, pi]; phi = atan2(x, y) in
    (-pi, pi].  The origin maps to (0, 0, 0).
    """
    p = np.asarray(points, dtype=np.float64)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    rho = np.hypot(x, y)
    r = np.hypot(rho, z)
    theta = np.arctan2(rho, z)
    phi = np.arctan2(x, y)
    phi = np.where(phi == -np.pi, np.pi, phi)
    return np.stack([r, theta, phi], axis=-1)


def spherical_to_cartesian(sph: np.ndarray) -> np.ndarray:
    sph = np.asarray(sph, dtype=np.float64)
    r, theta, phi = sph[..., 0], sph[..., 1], sph[..., 2]
    rho = r * np.sin(theta)
    return np.stack([rho * np.sin(phi), rho * np.cos(phi), r * np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class PositionNormalizer:
    """Per-axis mean/std over all training frames and joints."""

    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,)

    @classmethod
    def fit(cls, streams) -> "PositionNormalizer":
        pts = np.concatenate([np.asarray(s, dtype=np.float64).reshape(-1, 3) for s in streams])
        mean = pts.mean(axis=0)
        std = pts.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        return cls(mean, std)

    def apply(self, joints: np.ndarray) -> np.ndarray:
        return (np.asarray(joints, dtype=np.float64) - self.mean) / self.std


def group3_features(
    joints: np.ndarray,
    normalizer: PositionNormalizer,
    blocks=GROUP3_BLOCKS,
) -> np.ndarray:
    """Per-frame joint-wise feature rows for a stream, shape (T, 26 * width).

    For every joint (in joint order) the selected blocks are concatenated:
    normalized position, speed, acceleration, Euclidean distances to all
    joints and spherical coordinates.  The full set gives 988 values.
    """
    p = np.asarray(joints, dtype=np.float64)
    unknown = set(blocks) - set(GROUP3_BLOCKS)
    if unknown:
        raise ValueError(f"unknown feature blocks {sorted(unknown)}")
    parts = []
    kin = speed_accel(p) if {"speed", "acceleration"} & set(blocks) else None
    for name in GROUP3_BLOCKS:
        if name not in blocks:
            continue
        if name == "position":
            parts.append(normalizer.apply(p))
        elif name == "speed":
            parts.append(kin.speed)
        elif name == "acceleration":
            parts.append(kin.acceleration)
        elif name == "distances":
            parts.append(euclidean_distances(p))
        else:
            parts.append(spherical_coords(p))
    out = np.concatenate(parts, axis=-1)
    width = sum(GROUP3_WIDTH[b] for b in blocks)
    assert out.shape[-1] == width
    return out.reshape(len(p), N_JOINTS * width)


def group3_feature_vector(joints: np.ndarray, t: int, normalizer: PositionNormalizer, blocks=GROUP3_BLOCKS) -> np.ndarray:
    """Feature vector of frame ``t`` using only frames up to ``t``."""
    lo = max(0, t - 2)
    return group3_features(np.asarray(joints)[lo:t + 1], normalizer, blocks)[-1]


# ---------------------------------------------------------------------------
# baseline feature streams

@dataclass(frozen=True)
class BaselineFeatureSet:
    jcd: np.ndarray  # (30, 325)
    jpd: np.ndarray  # (30, len(pairs), 3)
    m_slow: np.ndarray  # (30, 26, 3)
    m_fast: np.ndarray  # (30, 26, 3)
    palm: np.ndarray  # (30, 3)
    energy: np.ndarray  # (30,)

    def stacked(self) -> np.ndarray:
        n = len(self.jcd)
        return np.concatenate(
            [
                self.jcd,
                self.jpd.reshape(n, -1),
                self.m_slow.reshape(n, -1),
                self.m_fast.reshape(n, -1),
                self.palm,
                self.energy[:, None],
            ],
            axis=1,
        )


def _unit_rows(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 1e-12)


def palm_normals(steps: np.ndarray, plane=PALM_PLANE) -> np.ndarray:
    """Unit palm-plane normals; degenerate steps reuse the previous valid normal."""
    a, b, c = (steps[:, j] for j in plane)
    n = np.cross(b - a, c - a)
    norm = np.linalg.norm(n, axis=-1)
    out = np.zeros_like(n)
    prev = np.zeros(3)
    for t in range(len(n)):
        if norm[t] > 1e-12:
            prev = n[t] / norm[t]
        out[t] = prev
    return out


def baseline_features(
    window: np.ndarray,
    steps: int = BASELINE_STEPS,
    pairs=JPD_PAIRS,
    plane=PALM_PLANE,
    resample: bool = True,
) -> BaselineFeatureSet:
    """Six baseline streams over a window resampled to ``steps`` samples."""
    w = np.asarray(window, dtype=np.float64)
    if resample:
        w = resample_uniform(w, steps)
    elif len(w) != steps:
        raise ValueError(f"window must have {steps} steps")
    dist = euclidean_distances(w)
    jcd = dist[:, _PAIRS_I, _PAIRS_J]
    pi = [p for p, _ in pairs]
    pj = [q for _, q in pairs]
    jpd = _unit_rows(w[:, pj] - w[:, pi])
    fast = np.zeros_like(w)
    fast[1:] = w[1:] - w[:-1]
    slow = np.zeros_like(w)
    slow[2:] = w[2:] - w[:-2]
    return BaselineFeatureSet(jcd, jpd, slow, fast, palm_normals(w, plane), frame_energies(w))


def angle_stream(joints: np.ndarray, parents=DEFAULT_PARENTS, axis=DEFAULT_AXIS) -> np.ndarray:
    """(T, 325) angle features for a whole stream."""
    out = segment_angles(joints, parents, axis)
    assert out.shape[-1] == N_ANGLES
    return out


def feature_header(kind: str, blocks=GROUP3_BLOCKS) -> list[str]:
    """Column names for per-frame feature dumps."""
    if kind == "angles":
        m = N_ANGLES
        names = [f"seg{k}" for k in range(25)] + ["axis"]
        iu, ju = np.triu_indices(len(names), k=1)
        assert len(iu) == m
        return [f"angle:{names[i]}-{names[j]}" for i, j in zip(iu, ju)]
    if kind == "group3":
        cols = []
        for j in range(N_JOINTS):
            for b in GROUP3_BLOCKS:
                if b not in blocks:
                    continue
                cols += [f"{b}:j{j}:{k}" for k in range(GROUP3_WIDTH[b])]
        return cols
    if kind == "energy":
        return ["energy"]
    raise ValueError(f"unknown feature kind {kind!r}")


def pair_index(i: int, j: int, m: int = 26) -> int:
    """Position of unordered pair (i, j) in the angle vector."""
    if i == j:
        raise ValueError("pair needs two distinct vectors")
    i, j = min(i, j), max(i, j)
    return list(combinations(range(m), 2)).index((i, j))
