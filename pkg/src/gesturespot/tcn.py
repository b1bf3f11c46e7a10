"""Lightweight causal temporal-convolutional window classifier, in numpy.

Two causal, non-dilated 1-D convolutions (Leaky ReLU after each) followed
by a linear head over the flattened window activations.  Gradients are
derived by hand; training is plain SGD with an exponential moving average
(EMA) of the parameters and best-on-validation snapshot selection.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .skeleton import BACKGROUND, GESTURES, N_CLASSES, GestureClass, GestureInterval

log = logging.getLogger(__name__)

MODEL_MAGIC = b"GSPOT-MODEL"
MODEL_FORMAT = 1


@dataclass
class TrainConfig:
    window: int = 20
    batch_size: int = 15
    epochs: int = 100
    folds: int = 6
    l2: float = 1e-4
    learning_rate: float = 1e-3
    ema_decay: float = 0.999
    background_keep: float = 0.10
    eval_every: int = 1000
    seed: int = 0
    slope: float = 0.01
    kernel: int = 5
    channels: tuple[int, int] = (64, 32)
    # held-out share of occurrences when folds == 1
    holdout: float = 1 / 6

    def __post_init__(self):
        self.channels = tuple(int(c) for c in self.channels)
        for name in ("window", "batch_size", "epochs", "folds", "eval_every", "kernel"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.background_keep <= 1:
            raise ValueError("background_keep must be in (0, 1]")
        if not 0 <= self.ema_decay < 1:
            raise ValueError("ema_decay must be in [0, 1)")
        if self.learning_rate <= 0 or self.l2 < 0:
            raise ValueError("learning_rate must be positive and l2 non-negative")


class TrainingDiverged(RuntimeError):
    def __init__(self, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at batch {batch}")
        self.batch = batch


# ---------------------------------------------------------------------------
# model


class TcnModel:
    """Parameters live in one flat float64 vector; named arrays are views."""

    def __init__(self, n_in: int, window: int = 20, channels=(64, 32), kernel: int = 5,
                 n_classes: int = N_CLASSES, slope: float = 0.01, theta: np.ndarray | None = None):
        self.n_in, self.window, self.kernel = int(n_in), int(window), int(kernel)
        self.channels = tuple(int(c) for c in channels)
        self.n_classes, self.slope = int(n_classes), float(slope)
        c1, c2 = self.channels
        self.shapes = {
            "conv1_w": (self.n_in, kernel, c1),
            "conv1_b": (c1,),
            "conv2_w": (c1, kernel, c2),
            "conv2_b": (c2,),
            "head_w": (self.window * c2, self.n_classes),
            "head_b": (self.n_classes,),
        }
        size = sum(math.prod(s) for s in self.shapes.values())
        if theta is None:
            theta = np.zeros(size)
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (size,):
            raise ValueError(f"parameter vector must have {size} entries, got {theta.shape}")
        self.theta = theta

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    @theta.setter
    def theta(self, value: np.ndarray):
        self._theta = value
        self.params = {}
        off = 0
        for name, shape in self.shapes.items():
            k = math.prod(shape)
            self.params[name] = value[off:off + k].reshape(shape)
            off += k

    @property
    def n_params(self) -> int:
        return self.theta.size

    def copy(self, theta: np.ndarray | None = None) -> "TcnModel":
        return TcnModel(self.n_in, self.window, self.channels, self.kernel, self.n_classes,
                        self.slope, self.theta.copy() if theta is None else theta)

    def spec(self) -> dict:
        return {"n_in": self.n_in, "window": self.window, "channels": list(self.channels),
                "kernel": self.kernel, "n_classes": self.n_classes, "slope": self.slope}


def init_model(n_in: int, config: TrainConfig, rng: np.random.Generator,
               n_classes: int = N_CLASSES) -> TcnModel:
    """Fan-in scaled uniform initialisation."""
    model = TcnModel(n_in, config.window, config.channels, config.kernel, n_classes, config.slope)
    c1, c2 = model.channels
    fan_in = {
        "conv1_w": n_in * config.kernel, "conv1_b": n_in * config.kernel,
        "conv2_w": c1 * config.kernel, "conv2_b": c1 * config.kernel,
        "head_w": config.window * c2, "head_b": config.window * c2,
    }
    for name, arr in model.params.items():
        bound = 1.0 / math.sqrt(fan_in[name])
        arr[...] = rng.uniform(-bound, bound, size=arr.shape)
    return model


def _causal_conv(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x (B, n, Cin), w (Cin, K, Cout): out[t] = b + sum_k x[t-k] @ w[:, k]."""
    bsz, n, cin = x.shape
    _, k, cout = w.shape
    taps = (x.reshape(-1, cin) @ w.reshape(cin, k * cout)).reshape(bsz, n, k, cout)
    out = taps[:, :, 0] + b
    for j in range(1, min(k, n)):
        out[:, j:] += taps[:, :n - j, j]
    return out


def _causal_conv_backward(x, w, dout, need_dx=True):
    bsz, n, cin = x.shape
    _, k, cout = w.shape
    # shifted[s, j] = dout[s + j]
    shifted = np.zeros((bsz, n, k, cout))
    for j in range(min(k, n)):
        shifted[:, :n - j, j] = dout[:, j:]
    shifted = shifted.reshape(-1, k * cout)
    dw = (x.reshape(-1, cin).T @ shifted).reshape(cin, k, cout)
    db = dout.sum(axis=(0, 1))
    dx = (shifted @ w.reshape(cin, k * cout).T).reshape(bsz, n, cin) if need_dx else None
    return dw, db, dx


def _lrelu(h, slope):
    return np.where(h > 0, h, slope * h)


def _check_input(model: TcnModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (model.window, model.n_in):
        raise ValueError(
            f"expected windows of shape ({model.window}, {model.n_in}), got {x.shape[1:]}"
        )
    return x


def _forward(model: TcnModel, x: np.ndarray):
    p = model.params
    h1 = _causal_conv(x, p["conv1_w"], p["conv1_b"])
    a1 = _lrelu(h1, model.slope)
    h2 = _causal_conv(a1, p["conv2_w"], p["conv2_b"])
    a2 = _lrelu(h2, model.slope)
    z = a2.reshape(len(x), -1) @ p["head_w"] + p["head_b"]
    return z, (h1, a1, h2, a2)


def activations(model: TcnModel, x: np.ndarray) -> np.ndarray:
    """Pre-head activations (B, n, c2) of a batch of windows."""
    x = _check_input(model, x)
    return _forward(model, x)[1][3]


def forward(model: TcnModel, x: np.ndarray, chunk: int = 512) -> np.ndarray:
    """Logits for one window (n, C) -> (17,) or a batch (B, n, C) -> (B, 17)."""
    single = np.asarray(x).ndim == 2
    x = _check_input(model, x)
    out = np.concatenate([_forward(model, x[i:i + chunk])[0] for i in range(0, len(x), chunk)]) \
        if len(x) else np.zeros((0, model.n_classes))
    return out[0] if single else out


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def loss_and_grad(model: TcnModel, x: np.ndarray, y: np.ndarray, l2: float = 0.0):
    """Mean softmax cross-entropy plus ``l2 * ||theta||^2``, and its exact gradient."""
    x = _check_input(model, x)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (len(x),) or np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValueError("labels must be one class index per window")
    p = model.params
    z, (h1, a1, h2, a2) = _forward(model, x)
    bsz = len(x)
    zs = z - z.max(axis=1, keepdims=True)
    logp = zs - np.log(np.exp(zs).sum(axis=1, keepdims=True))
    loss = -logp[np.arange(bsz), y].mean() + l2 * float(model.theta @ model.theta)

    dz = np.exp(logp)
    dz[np.arange(bsz), y] -= 1.0
    dz /= bsz
    flat = a2.reshape(bsz, -1)
    grads = {
        "head_w": flat.T @ dz,
        "head_b": dz.sum(axis=0),
    }
    da2 = (dz @ p["head_w"].T).reshape(a2.shape)
    dh2 = da2 * np.where(h2 > 0, 1.0, model.slope)
    grads["conv2_w"], grads["conv2_b"], da1 = _causal_conv_backward(a1, p["conv2_w"], dh2)
    dh1 = da1 * np.where(h1 > 0, 1.0, model.slope)
    grads["conv1_w"], grads["conv1_b"], _ = _causal_conv_backward(x, p["conv1_w"], dh1, need_dx=False)
    grad = np.concatenate([grads[name].ravel() for name in model.shapes])
    grad += 2.0 * l2 * model.theta
    return float(loss), grad


class Ema:
    """theta_ema <- d * theta_ema + (1 - d) * theta, started at the initial parameters."""

    def __init__(self, theta: np.ndarray, decay: float):
        self.value = np.array(theta, dtype=np.float64, copy=True)
        self.decay = decay

    def update(self, theta: np.ndarray) -> None:
        self.value *= self.decay
        self.value += (1.0 - self.decay) * theta


# ---------------------------------------------------------------------------
# input scaling and ensembles


@dataclass(frozen=True)
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, frames: np.ndarray) -> "FeatureScaler":
        frames = np.asarray(frames, dtype=np.float64)
        std = frames.std(axis=0)
        return cls(frames.mean(axis=0), np.where(std > 1e-12, std, 1.0))

    @classmethod
    def identity(cls, width: int) -> "FeatureScaler":
        return cls(np.zeros(width), np.ones(width))

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std


def l2_normalize(z: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(z, axis=-1, keepdims=True)
    return np.divide(z, norm, out=np.zeros_like(z), where=norm > 0)


@dataclass
class TcnEnsemble:
    """k fold models sharing input width, window length and feature scaling.

    ``features`` names the per-frame feature pipeline the ensemble expects
    (e.g. ``{"kind": "angles"}``) and travels with the model file.
    """

    members: list[TcnModel]
    scaler: FeatureScaler
    features: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    def __post_init__(self):
        if not self.members:
            raise ValueError("an ensemble needs at least one member")
        m0 = self.members[0]
        for m in self.members[1:]:
            if (m.n_in, m.window, m.n_classes) != (m0.n_in, m0.window, m0.n_classes):
                raise ValueError("ensemble members disagree on input shape")

    @property
    def window(self) -> int:
        return self.members[0].window

    @property
    def n_in(self) -> int:
        return self.members[0].n_in

    def member_logits(self, windows: np.ndarray) -> np.ndarray:
        """Raw (unscaled) feature windows (B, n, C) -> (B, k, 17)."""
        x = self.scaler.apply(windows)
        return np.stack([forward(m, x) for m in self.members], axis=1)

    def vote_logits(self, windows: np.ndarray) -> np.ndarray:
        """Sum of L2-normalised member logits."""
        return l2_normalize(self.member_logits(windows)).sum(axis=1)

    def predict(self, windows: np.ndarray) -> np.ndarray:
        """Window labels; argmax ties go to the lowest class index."""
        return np.argmax(self.vote_logits(windows), axis=-1)

    def probabilities(self, windows: np.ndarray) -> np.ndarray:
        """Member-averaged softmax probabilities."""
        return softmax(self.member_logits(windows)).mean(axis=1)


# ---------------------------------------------------------------------------
# model files
#
# Layout: b"GSPOT-MODEL <format>\n", one line of sorted-key JSON header, then
# the float64 little-endian tensors back to back at the offsets the header
# lists.  The header echoes member specs, training config, feature pipeline
# and training history.


def save_ensemble(ensemble: TcnEnsemble, path) -> None:
    tensors = {"scaler.mean": ensemble.scaler.mean, "scaler.std": ensemble.scaler.std}
    for i, m in enumerate(ensemble.members):
        for name, arr in m.params.items():
            tensors[f"member{i}.{name}"] = arr
    for name, arr in ensemble.extras.items():
        tensors[f"extra.{name}"] = np.asarray(arr, dtype=np.float64)
    index, blobs, off = [], [], 0
    for name, arr in tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        index.append({"name": name, "shape": list(np.shape(arr)), "offset": off})
        blobs.append(data)
        off += len(data)
    header = {
        "format": MODEL_FORMAT,
        "members": [m.spec() for m in ensemble.members],
        "features": ensemble.features,
        "config": ensemble.config,
        "history": ensemble.history,
        "tensors": index,
    }
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC + f" {MODEL_FORMAT}\n".encode())
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_ensemble(path) -> TcnEnsemble:
    raw = Path(path).read_bytes()
    first, _, rest = raw.partition(b"\n")
    magic, _, version = first.partition(b" ")
    if magic != MODEL_MAGIC or int(version) != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model file of format {MODEL_FORMAT}")
    head, _, body = rest.partition(b"\n")
    header = json.loads(head)
    tensors = {}
    for entry in header["tensors"]:
        count = math.prod(entry["shape"])
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=entry["offset"])
        tensors[entry["name"]] = arr.astype(np.float64).reshape(entry["shape"])
    members = []
    for i, spec in enumerate(header["members"]):
        m = TcnModel(spec["n_in"], spec["window"], spec["channels"], spec["kernel"],
                     spec["n_classes"], spec["slope"])
        theta = np.concatenate([tensors[f"member{i}.{name}"].ravel() for name in m.shapes])
        m.theta = theta
        members.append(m)
    extras = {k[len("extra."):]: v for k, v in tensors.items() if k.startswith("extra.")}
    return TcnEnsemble(
        members,
        FeatureScaler(tensors["scaler.mean"], tensors["scaler.std"]),
        header["features"],
        header["config"],
        extras,
        header["history"],
    )


# ---------------------------------------------------------------------------
# training data


@dataclass
class WindowSet:
    """Labelled windows cut from concatenated per-frame features.

    ``frames`` is (total_frames, C); window i covers rows
    ``starts[i] .. starts[i] + window - 1``.  ``group`` is the gesture
    occurrence each window belongs to (-1 for background).
    """

    frames: np.ndarray
    starts: np.ndarray
    labels: np.ndarray
    group: np.ndarray
    window: int

    def __len__(self) -> int:
        return len(self.starts)

    def take(self, idx) -> np.ndarray:
        return self.frames[self.starts[idx][:, None] + np.arange(self.window)]

    def subset(self, mask) -> "WindowSet":
        return WindowSet(self.frames, self.starts[mask], self.labels[mask], self.group[mask], self.window)


@dataclass
class DenseWindowSet:
    """Labelled windows stored explicitly, (N, n, C)."""

    windows: np.ndarray
    labels: np.ndarray
    group: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def window(self) -> int:
        return self.windows.shape[1]

    def take(self, idx) -> np.ndarray:
        return self.windows[idx].astype(np.float64)

    def subset(self, mask) -> "DenseWindowSet":
        return DenseWindowSet(self.windows[mask], self.labels[mask], self.group[mask])


@dataclass
class WindowSamples:
    seq_index: np.ndarray
    start: np.ndarray
    label: np.ndarray
    occurrence: np.ndarray  # index into ``occurrences``, -1 for background
    occurrences: list  # (seq_index, GestureInterval)


def label_window(start: int, n: int, gestures: Sequence[GestureInterval]):
    """Label of window ``[start, start + n - 1]`` or None when it is excluded.

    Returns ``(label, k)`` with k the index of the winning gesture (-1 for
    background).  Ties on overlap go to the earlier gesture.
    """
    need = (n + 1) // 2
    best, best_k, touched = 0, -1, False
    end = start + n - 1
    for k, g in enumerate(gestures):
        ov = g.overlap(GestureInterval(start, end, g.label))
        if ov > 0:
            touched = True
        if ov >= need and ov > best:
            best, best_k = ov, k
    if best_k >= 0:
        return gestures[best_k].label, best_k
    if touched:
        return None
    return BACKGROUND, -1


def sample_training_windows(lengths: Sequence[int], annotations: Sequence[Sequence[GestureInterval]],
                            config: TrainConfig, rng: np.random.Generator) -> WindowSamples:
    """Every stride-1 window labelled by the half-overlap rule.

    ``lengths[i]`` is the frame count of sequence i and ``annotations[i]``
    its ground truth.  Background windows are kept with probability
    ``config.background_keep``.
    """
    n = config.window
    seq_idx, starts, labels, occ = [], [], [], []
    occurrences = []
    for si, (length, gts) in enumerate(zip(lengths, annotations)):
        gts = sorted(gts)
        base = len(occurrences)
        occurrences.extend((si, g) for g in gts)
        if length < n:
            log.warning("sequence %d shorter than the window (%d < %d), skipped", si, length, n)
            continue
        keep = rng.random(length - n + 1) < config.background_keep
        for s in range(length - n + 1):
            res = label_window(s, n, gts)
            if res is None:
                continue
            label, k = res
            if label is BACKGROUND and not keep[s]:
                continue
            seq_idx.append(si)
            starts.append(s)
            labels.append(int(label))
            occ.append(base + k if k >= 0 else -1)
    return WindowSamples(np.array(seq_idx, dtype=np.int64), np.array(starts, dtype=np.int64),
                         np.array(labels, dtype=np.int64), np.array(occ, dtype=np.int64), occurrences)


def stratified_folds(labels: Sequence[int], k: int, rng: np.random.Generator,
                     holdout: float = 1 / 6) -> np.ndarray:
    """Fold id per occurrence, balanced within every class.

    With ``k == 1`` the returned ids mark a single split: 1 = validation,
    0 = training.
    """
    labels = np.asarray(labels)
    folds = np.zeros(len(labels), dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if k > 1 and len(idx) < k:
            raise ValueError(
                f"class {GestureClass(int(c)).name} has {len(idx)} occurrences, fewer than {k} folds"
            )
        idx = idx[rng.permutation(len(idx))]
        if k == 1:
            folds[idx[:int(math.floor(len(idx) * holdout))]] = 1
        else:
            folds[idx] = (np.arange(len(idx)) + rng.integers(k)) % k
    return folds


# ---------------------------------------------------------------------------
# training loop


def accuracy(model: TcnModel, data, chunk: int = 1024) -> float:
    if len(data) == 0:
        return float("nan")
    correct = 0
    for i in range(0, len(data), chunk):
        idx = np.arange(i, min(i + chunk, len(data)))
        pred = np.argmax(forward(model, data.take(idx)), axis=1)
        correct += int((pred == data.labels[idx]).sum())
    return correct / len(data)


def fit(train_set, val_set, config: TrainConfig, rng: np.random.Generator,
        n_classes: int = N_CLASSES, tag: str = ""):
    """Train one model; returns (best EMA snapshot, history)."""
    n_in = train_set.take(np.arange(1)).shape[-1]
    model = init_model(n_in, config, rng, n_classes)
    ema = Ema(model.theta, config.ema_decay)
    best_theta, best_acc = ema.value.copy(), -1.0
    history = []
    step, run_loss, run_count = 0, 0.0, 0
    n = len(train_set)
    if n == 0:
        raise ValueError("empty training set")
    eval_set = val_set if len(val_set) else train_set

    def evaluate(epoch):
        nonlocal best_theta, best_acc, run_loss, run_count
        acc = accuracy(model.copy(ema.value), eval_set)
        entry = {"step": step, "epoch": epoch, "train_loss": run_loss / max(run_count, 1), "val_acc": acc}
        history.append(entry)
        log.info("%s step %d epoch %d loss %.4f val_acc %.4f", tag, step, epoch, entry["train_loss"], acc)
        run_loss, run_count = 0.0, 0
        if acc > best_acc:
            best_acc, best_theta = acc, ema.value.copy()

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for b in range(0, n, config.batch_size):
            idx = order[b:b + config.batch_size]
            loss, grad = loss_and_grad(model, train_set.take(idx), train_set.labels[idx], config.l2)
            if not np.isfinite(loss):
                raise TrainingDiverged(step, loss)
            model.theta -= config.learning_rate * grad
            ema.update(model.theta)
            step += 1
            run_loss += loss
            run_count += 1
            if step % config.eval_every == 0:
                evaluate(epoch)
    if step % config.eval_every:
        evaluate(config.epochs - 1)
    return model.copy(best_theta), history


def _fold_job(args):
    train_set, val_set, config, seed_seq, n_classes, tag = args
    return fit(train_set, val_set, config, np.random.default_rng(seed_seq), n_classes, tag)


def train_folds(data, occurrence_labels: Sequence[int], config: TrainConfig,
                n_classes: int = N_CLASSES, jobs: int = 1, background_folds=None,
                return_splits: bool = False):
    """Stratified k-fold training over a labelled window set.

    ``data.group`` maps each window to its occurrence (or -1).  Returns the
    list of fold models and the per-fold histories, plus the per-fold
    (train mask, validation mask) pairs when ``return_splits`` is set.
    """
    root = np.random.SeedSequence(config.seed)
    split_seq, *fold_seqs = root.spawn(config.folds + 1)
    rng = np.random.default_rng(split_seq)
    occ_fold = stratified_folds(occurrence_labels, config.folds, rng, config.holdout)
    k_eff = max(config.folds, 2)
    if background_folds is None:
        if config.folds == 1:
            background_folds = (rng.random(len(data)) < config.holdout).astype(np.int64)
        else:
            background_folds = rng.integers(k_eff, size=len(data))
    win_fold = np.where(data.group >= 0, occ_fold[np.maximum(data.group, 0)], background_folds)
    if config.folds == 1:
        splits = [(win_fold == 0, win_fold == 1)]
    else:
        splits = [(win_fold != f, win_fold == f) for f in range(config.folds)]
    jobs_args = [
        (data.subset(tr), data.subset(va), config, fold_seqs[i], n_classes, f"fold{i}")
        for i, (tr, va) in enumerate(splits)
    ]
    if jobs > 1 and len(jobs_args) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_fold_job, jobs_args))
    else:
        results = [_fold_job(a) for a in jobs_args]
    models = [m for m, _ in results]
    histories = [h for _, h in results]
    if return_splits:
        return models, histories, splits
    return models, histories


def concat_features(streams: Sequence[np.ndarray]):
    """Stack per-sequence feature streams; returns (frames, offsets)."""
    offsets = np.concatenate([[0], np.cumsum([len(s) for s in streams])[:-1]]).astype(np.int64)
    return np.concatenate(streams, axis=0), offsets


def config_dict(config: TrainConfig) -> dict:
    d = asdict(config)
    d["channels"] = list(config.channels)
    return d


def config_from_dict(d: dict) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    return TrainConfig(**{k: v for k, v in d.items() if k in known})


def train_on_streams(streams: Sequence[np.ndarray], annotations: Sequence[Sequence[GestureInterval]],
                     config: TrainConfig, features: dict | None = None, jobs: int = 1) -> TcnEnsemble:
    """Sample windows from per-frame feature streams and train the k-fold ensemble."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    samples = sample_training_windows([len(s) for s in streams], annotations, config, rng)
    for c in GESTURES:
        count = sum(1 for _, g in samples.occurrences if g.label is c)
        if count < config.folds:
            raise ValueError(f"class {c.name} has {count} occurrences, fewer than {config.folds} folds")
    frames, offsets = concat_features(streams)
    scaler = FeatureScaler.fit(frames)
    data = WindowSet(scaler.apply(frames), offsets[samples.seq_index] + samples.start,
                     samples.label, samples.occurrence, config.window)
    occ_labels = [int(g.label) for _, g in samples.occurrences]
    models, histories = train_folds(data, occ_labels, config, jobs=jobs)
    return TcnEnsemble(models, scaler, dict(features or {}), config_dict(config), {}, histories)


def train(sequences, annotations, config: TrainConfig, jobs: int = 1) -> TcnEnsemble:
    """Train the angle-feature voting ensemble.

    ``sequences`` is a list of GestureSequence, ``annotations`` maps
    sequence id to its ground-truth intervals.
    """
    from .features import angle_stream

    streams = [angle_stream(s.joints) for s in sequences]
    gts = [annotations.get(s.id, []) for s in sequences]
    return train_on_streams(streams, gts, config, {"kind": "angles"}, jobs)
