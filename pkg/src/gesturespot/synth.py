"""Deterministic synthetic generator of annotated 26-joint hand streams.

A parametric hand (finger curls, thumb opposition, pinch, roll) is posed
by forward kinematics and carried by a wrist that pivots around a fixed
elbow, so translating the hand also turns it.  Gestures are stylised:
held poses, whole-hand strokes, finger articulation and oscillations.
Between gestures the hand wanders at a bounded-below speed with a relaxed,
fidgeting pose.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .skeleton import (
    GESTURES,
    N_JOINTS,
    GestureClass,
    GestureInterval,
    GestureSequence,
)

G = GestureClass

# Min / max gesture lengths in frames, per class.
TABLE1_LENGTHS = {
    G.ONE: (21, 72), G.TWO: (24, 59), G.THREE: (15, 71), G.FOUR: (23, 69),
    G.OK: (22, 52), G.MENU: (20, 59), G.LEFT: (11, 37), G.RIGHT: (11, 32),
    G.CIRCLE: (25, 64), G.V: (17, 37), G.CROSS: (24, 50), G.GRAB: (19, 70),
    G.PINCH: (22, 61), G.DENY: (31, 81), G.WAVE: (27, 73), G.KNOB: (37, 79),
}
TABLE1_MEAN = {
    G.ONE: 34.1, G.TWO: 37.4, G.THREE: 38.6, G.FOUR: 37.3, G.OK: 34.0, G.MENU: 33.0,
    G.LEFT: 19.6, G.RIGHT: 18.6, G.CIRCLE: 45.4, G.V: 27.2, G.CROSS: 37.5, G.GRAB: 39.9,
    G.PINCH: 36.2, G.DENY: 47.8, G.WAVE: 45.4, G.KNOB: 54.7,
}


@dataclass
class GenConfig:
    n_sequences: int = 288
    # consecutive blocks of sequences, each class-balanced (train / test)
    blocks: int = 2
    gestures_min: int = 3
    gestures_max: int = 5
    fps: float = 20.0
    jitter_ms: int = 10
    lengths: dict = field(default_factory=lambda: dict(TABLE1_LENGTHS))
    lead_gap: tuple[int, int] = (20, 60)
    gap: tuple[int, int] = (40, 100)
    tail_gap: tuple[int, int] = (30, 60)
    noise: float = 3e-4
    min_speed: float = 4e-3
    max_speed: float = 9e-3
    max_frames: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.lengths = {GestureClass.parse(k) if isinstance(k, str) else G(k): tuple(v)
                        for k, v in self.lengths.items()}
        if self.n_sequences < 1 or self.blocks < 1:
            raise ValueError("need at least one sequence and one block")
        if not 1 <= self.gestures_min <= self.gestures_max:
            raise ValueError("invalid gestures-per-sequence range")
        for c, (lo, hi) in self.lengths.items():
            if not 1 <= lo <= hi:
                raise ValueError(f"invalid length range for {c.name}")
        for name in ("lead_gap", "gap", "tail_gap"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"invalid {name}")
        if not 0 < self.min_speed <= self.max_speed:
            raise ValueError("invalid background speed range")


# ---------------------------------------------------------------------------
# hand model
#
# Local frame: x toward the thumb side, y along the fingers, z out of the
# palm (fingers curl toward +z).  Shape vector: curls of thumb, index,
# middle, ring, pinky in [0, 1], thumb opposition, pinch amount.

_FINGERS = {
    # base (metacarpal joint), knuckle, phalanx lengths, splay (rad)
    "index": ((0.015, 0.012), (0.024, 0.088), (0.040, 0.024, 0.020), 0.10),
    "middle": ((0.004, 0.013), (0.005, 0.092), (0.044, 0.028, 0.021), 0.0),
    "ring": ((-0.007, 0.012), (-0.013, 0.086), (0.041, 0.027, 0.020), -0.10),
    "pinky": ((-0.017, 0.010), (-0.030, 0.075), (0.032, 0.020, 0.018), -0.22),
}
_THUMB_BASE = np.array([0.018, 0.018, 0.008])
_THUMB_BONES = (0.045, 0.033, 0.028)
_THUMB_OPEN = np.array([0.8, 0.55, 0.15])
_THUMB_OPPOSED = np.array([-0.35, 0.55, 0.75])
_PALM = np.array([0.0, 0.05, 0.0])

SHAPES = {
    "relaxed": [0.3, 0.3, 0.35, 0.4, 0.45, 0.3, 0.0],
    "open": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    "fist": [0.8, 1.0, 1.0, 1.0, 1.0, 0.7, 0.0],
    "point": [0.7, 0.0, 1.0, 1.0, 1.0, 0.8, 0.0],
    "two": [0.7, 0.0, 0.0, 1.0, 1.0, 0.8, 0.0],
    "three": [0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0],
    "four": [0.9, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    "ok": [0.4, 0.55, 0.0, 0.0, 0.0, 0.6, 1.0],
    "claw": [0.4, 0.5, 0.5, 0.5, 0.5, 0.6, 0.0],
    "pinch_open": [0.2, 0.15, 0.85, 0.9, 0.9, 0.4, 0.0],
    "pinch_closed": [0.4, 0.45, 0.85, 0.9, 0.9, 0.5, 1.0],
    "gun": [0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0],
    "hook": [0.7, 0.5, 1.0, 1.0, 1.0, 0.8, 0.0],
    "cup": [0.0, 0.6, 0.6, 0.6, 0.6, 0.0, 0.0],
}
SHAPES = {k: np.array(v) for k, v in SHAPES.items()}


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def hand_local(shape: np.ndarray) -> np.ndarray:
    """(T, 7) shape parameters -> (T, 26, 3) joints in the hand frame (meters)."""
    shape = np.atleast_2d(shape)
    t = len(shape)
    out = np.zeros((t, N_JOINTS, 3))
    out[:, 0] = _PALM
    z = np.array([0.0, 0.0, 1.0])
    for fi, (name, (base, knuckle, bones, splay)) in enumerate(_FINGERS.items()):
        c = shape[:, fi + 1]
        j0 = 6 + 5 * fi
        out[:, j0] = [base[0], base[1], 0.0]
        out[:, j0 + 1] = [knuckle[0], knuckle[1], 0.0]
        a = splay * (1.0 - 0.7 * c)
        u0 = np.stack([np.sin(a), np.cos(a), np.zeros(t)], axis=1)
        angle = np.zeros(t)
        pos = out[:, j0 + 1].copy()
        for k, (length, flex) in enumerate(zip(bones, (1.4, 1.75, 1.2))):
            angle = angle + flex * c
            d = np.cos(angle)[:, None] * u0 + np.sin(angle)[:, None] * z
            pos = pos + length * d
            out[:, j0 + 2 + k] = pos
    # thumb
    c, o = shape[:, 0], shape[:, 5]
    d = _unit((1 - o)[:, None] * _unit(_THUMB_OPEN) + o[:, None] * _unit(_THUMB_OPPOSED))
    q = np.array([-0.6, 0.0, 0.8])
    q = _unit(q - (d @ q)[:, None] * d)
    out[:, 2] = _THUMB_BASE
    pos = np.broadcast_to(_THUMB_BASE, (t, 3)).copy()
    for k, (length, bend) in enumerate(zip(_THUMB_BONES, (0.0, 0.6, 1.2))):
        ang = bend * c
        dk = np.cos(ang)[:, None] * d + np.sin(ang)[:, None] * q
        pos = pos + length * dk
        out[:, 3 + k] = pos
    # pinch: pull thumb and index tips together
    p = shape[:, 6][:, None]
    mid = 0.5 * (out[:, 5] + out[:, 10])
    for j, w in ((5, 1.0), (4, 0.5), (10, 1.0), (9, 0.5)):
        out[:, j] += w * p * (mid - out[:, j])
    return out


def hand_frames(wrist: np.ndarray, elbow: np.ndarray, roll: np.ndarray) -> np.ndarray:
    """(T, 3, 3) rotations whose columns are the hand x, y, z axes in world coordinates."""
    f = _unit(wrist - elbow)
    fwd = np.array([0.0, 0.0, 1.0])
    x0 = _unit(np.cross(f, fwd))
    n0 = np.cross(x0, f)
    x = np.cos(roll)[:, None] * x0 + np.sin(roll)[:, None] * n0
    n = np.cross(x, f)
    return np.stack([x, f, n], axis=2)


def pose_hand(shape, wrist, elbow, roll, scale=1.0) -> np.ndarray:
    local = hand_local(shape) * scale
    rot = hand_frames(np.asarray(wrist), np.asarray(elbow), np.asarray(roll))
    return np.einsum("tij,tkj->tki", rot, local) + np.asarray(wrist)[:, None, :]


# ---------------------------------------------------------------------------
# motion


def _ease(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3 - 2 * u)


def _blend(a, b, w):
    w = np.asarray(w)[:, None]
    return (1 - w) * a + w * b


@dataclass
class _State:
    wrist: np.ndarray
    roll: float
    shape: np.ndarray


class _Subject:
    def __init__(self, rng: np.random.Generator, config: GenConfig):
        self.scale = rng.uniform(0.9, 1.1)
        self.rest = np.array([0.12, -0.15, 0.38]) + rng.uniform(-0.03, 0.03, 3)
        self.elbow = self.rest + np.array([0.03, -0.22, -0.16]) + rng.uniform(-0.02, 0.02, 3)
        self.roll0 = rng.uniform(-0.2, 0.2)
        self.config = config


def _background(rng, subj: _Subject, state: _State, length: int, ramp: int = 5):
    cfg = subj.config
    t = np.arange(length)
    speed = rng.uniform(cfg.min_speed, cfg.max_speed)
    wobble = rng.uniform(0.0, 0.3) * np.sin(rng.uniform(0.1, 0.3) * t + rng.uniform(0, 2 * np.pi))
    v = np.maximum(speed * (1 + wobble), cfg.min_speed)
    d = _unit(rng.normal(size=3))
    pos = state.wrist.copy()
    wrist = np.zeros((length, 3))
    for i in range(length):
        pull = (subj.rest - pos) / 0.08
        d = _unit(d + rng.normal(scale=0.25, size=3) + 0.3 * pull * np.array([1.0, 1.0, 0.5]))
        pos = pos + v[i] * d
        wrist[i] = pos
    roll_target = subj.roll0 + 0.25 * np.sin(rng.uniform(0.05, 0.15) * t + rng.uniform(0, 2 * np.pi))
    w = _ease((t + 1) / ramp)
    roll = (1 - w) * state.roll + w * roll_target
    fidget = SHAPES["relaxed"] + np.zeros((length, 7))
    for k in range(5):
        fidget[:, k] += 0.08 * np.sin(rng.uniform(0.1, 0.3) * t + rng.uniform(0, 2 * np.pi))
    shape = (1 - w)[:, None] * state.shape + w[:, None] * fidget
    return wrist, roll, shape


def _gesture(rng, subj: _Subject, label: GestureClass, state: _State, length: int, ramp: int = 3):
    t = np.arange(length)
    u = t / max(length - 1, 1)
    w_in = _ease((t + 1) / ramp)
    start = state.wrist
    offset = np.zeros((length, 3))
    roll_target = np.full(length, subj.roll0)
    cat = label.category.value

    if cat == "static":
        key = {G.ONE: "point", G.TWO: "two", G.THREE: "three", G.FOUR: "four",
               G.OK: "ok", G.MENU: "open"}[label]
        target = np.broadcast_to(SHAPES[key], (length, 7))
        if label is G.MENU:
            roll_target = roll_target + np.pi
        offset = np.cumsum(rng.normal(scale=1e-4, size=(length, 3)), axis=0)
    elif label in (G.LEFT, G.RIGHT):
        a = rng.uniform(0.15, 0.25) * (-1 if label is G.LEFT else 1)
        e = _ease(u)
        offset[:, 0] = a * e
        offset[:, 1] = 0.02 * np.sin(np.pi * e)
        # the palm turns with the swipe, and a right swipe cups the hand
        roll_target = roll_target + np.sign(a) * 0.5 * e
        target = np.broadcast_to(SHAPES["open" if label is G.LEFT else "cup"], (length, 7))
    elif label is G.CIRCLE:
        r = rng.uniform(0.06, 0.09)
        th = np.pi / 2 - 2 * np.pi * _ease(u)
        offset[:, 0] = r * np.cos(th)
        offset[:, 1] = r * np.sin(th) - r
        target = np.broadcast_to(SHAPES["gun"], (length, 7))
    elif label is G.V:
        a, h = rng.uniform(0.12, 0.18), rng.uniform(0.10, 0.15)
        e = _ease(u)
        offset[:, 0] = a * e
        offset[:, 1] = -h * (1 - np.abs(2 * e - 1))
        target = np.broadcast_to(SHAPES["point"], (length, 7))
    elif label is G.CROSS:
        a = rng.uniform(0.10, 0.14)
        knots_u = np.array([0.0, 0.4, 0.55, 1.0])
        knots = np.array([[0, 0, 0], [a, -a, 0], [a, 0, -0.03], [0, -a, 0]])
        for k in range(3):
            offset[:, k] = np.interp(u, knots_u, knots[:, k])
        target = np.broadcast_to(SHAPES["hook"], (length, 7))
    elif label is G.GRAB:
        w = _ease((u - 0.15) / 0.7)
        target = _blend(SHAPES["open"], SHAPES["fist"], w)
        offset[:, 2] = 0.03 * _ease(u)
    elif label is G.PINCH:
        w = _ease((u - 0.2) / 0.6)
        target = _blend(SHAPES["pinch_open"], SHAPES["pinch_closed"], w)
        offset[:, 2] = 0.01 * _ease(u)
    else:
        cycles = rng.integers(2, 4)
        env = _ease((t + 1) / (ramp + 2))
        osc = np.sin(2 * np.pi * cycles * u)
        if label is G.DENY:
            offset[:, 0] = rng.uniform(0.04, 0.06) * env * osc
            roll_target = roll_target + 0.4 * env * osc
            target = np.broadcast_to(SHAPES["point"], (length, 7))
        elif label is G.WAVE:
            offset[:, 0] = 0.02 * env * osc
            roll_target = roll_target + 0.6 * env * osc
            target = np.broadcast_to(SHAPES["open"], (length, 7))
        else:
            roll_target = roll_target + 0.8 * env * osc
            target = np.broadcast_to(SHAPES["claw"], (length, 7))

    shape = (1 - w_in)[:, None] * state.shape + w_in[:, None] * target
    shape = shape + rng.normal(scale=0.01, size=shape.shape)
    roll = (1 - w_in) * state.roll + w_in * roll_target
    return start + offset, roll, shape


def generate_sequence(seq_id: str, labels, seed: int, config: GenConfig):
    """One annotated stream holding ``labels`` in order."""
    rng = np.random.default_rng(seed)
    subj = _Subject(rng, config)
    state = _State(subj.rest.copy(), subj.roll0, SHAPES["relaxed"].copy())
    lengths = [int(rng.integers(config.lengths[c][0], config.lengths[c][1] + 1)) for c in labels]
    gaps = [int(rng.integers(config.lead_gap[0], config.lead_gap[1] + 1))]
    gaps += [int(rng.integers(config.gap[0], config.gap[1] + 1)) for _ in labels[1:]]
    gaps += [int(rng.integers(config.tail_gap[0], config.tail_gap[1] + 1))]
    total = sum(lengths) + sum(gaps)
    if config.max_frames is not None and total > config.max_frames:
        raise ValueError(
            f"{seq_id}: {len(labels)} gestures need {total} frames, more than max_frames={config.max_frames}"
        )
    wrists, rolls, shapes, intervals = [], [], [], []
    cursor = 0
    for i in range(len(labels) + 1):
        parts = [_background(rng, subj, state, gaps[i])]
        if i < len(labels):
            bw, br, bs = parts[0]
            state = _State(bw[-1], float(br[-1]), bs[-1])
            parts.append(_gesture(rng, subj, labels[i], state, lengths[i]))
            start = cursor + gaps[i]
            intervals.append(GestureInterval(start, start + lengths[i] - 1, labels[i]))
        for w, r, s in parts:
            wrists.append(w)
            rolls.append(r)
            shapes.append(s)
            cursor += len(w)
        state = _State(wrists[-1][-1], float(rolls[-1][-1]), shapes[-1][-1])
    wrist = np.concatenate(wrists)
    roll = np.concatenate(rolls)
    shape = np.concatenate(shapes)
    joints = pose_hand(shape, wrist, np.broadcast_to(subj.elbow, wrist.shape), roll, subj.scale)
    joints = joints + rng.normal(scale=config.noise, size=joints.shape)
    joints = np.round(joints, 6)
    step = 1000.0 / config.fps
    dt = np.round(step + rng.integers(-config.jitter_ms, config.jitter_ms + 1, size=len(joints)))
    dt = np.maximum(dt, 1).astype(np.int64)
    dt[0] = 0
    stamps = np.cumsum(dt)
    return GestureSequence(seq_id, stamps, joints), intervals


def _block_counts(rng, m: int, lo: int, hi: int, n_classes: int) -> list[int]:
    counts = rng.integers(lo, hi + 1, size=m)
    total = int(counts.sum())
    multiples = [k for k in range(lo * m, hi * m + 1) if k % n_classes == 0]
    if multiples:
        target = min(multiples, key=lambda k: (abs(k - total), k))
        while counts.sum() != target:
            if counts.sum() < target:
                i = rng.choice(np.flatnonzero(counts < hi))
                counts[i] += 1
            else:
                i = rng.choice(np.flatnonzero(counts > lo))
                counts[i] -= 1
    return [int(c) for c in counts]


def plan_dataset(config: GenConfig):
    """Per-sequence (id, seed, labels), class-balanced within every block."""
    root = np.random.SeedSequence(config.seed)
    plan_seq, *children = root.spawn(config.n_sequences + 1)
    rng = np.random.default_rng(plan_seq)
    bounds = np.linspace(0, config.n_sequences, config.blocks + 1).round().astype(int)
    plan = []
    for b in range(config.blocks):
        m = bounds[b + 1] - bounds[b]
        if m == 0:
            continue
        counts = _block_counts(rng, m, config.gestures_min, config.gestures_max, len(GESTURES))
        total = sum(counts)
        pool = [GESTURES[i % len(GESTURES)] for i in range(total - total % len(GESTURES))]
        pool += list(rng.choice(GESTURES, size=total % len(GESTURES), replace=False))
        pool = [pool[i] for i in rng.permutation(len(pool))]
        k = 0
        for j in range(m):
            idx = bounds[b] + j
            seed = int(children[idx].generate_state(1)[0])
            plan.append((f"seq{idx:04d}", seed, [G(c) for c in pool[k:k + counts[j]]]))
            k += counts[j]
    return plan


def generate_dataset(config: GenConfig):
    """Returns (sequences, annotations dict) for the whole plan."""
    sequences, annotations = [], {}
    for seq_id, seed, labels in plan_dataset(config):
        seq, gts = generate_sequence(seq_id, labels, seed, config)
        sequences.append(seq)
        annotations[seq_id] = gts
    return sequences, annotations


def block_ids(config: GenConfig) -> list[list[str]]:
    """Sequence ids per balanced block (block 0 = train, 1 = test by default)."""
    bounds = np.linspace(0, config.n_sequences, config.blocks + 1).round().astype(int)
    return [[f"seq{i:04d}" for i in range(bounds[b], bounds[b + 1])] for b in range(config.blocks)]


def generate_label_stream(pattern) -> np.ndarray:
    """Concatenate ``(label, run_length)`` pairs into a per-frame label array."""
    parts = [np.full(int(n), int(GestureClass(label)), dtype=np.int64) for label, n in pattern]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
