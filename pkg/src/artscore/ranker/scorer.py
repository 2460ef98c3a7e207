"""The scalar artness scorer: a small ReLU MLP with dropout on hidden units."""

from dataclasses import dataclass, field

import numpy as np

from .. import checkpoint, seeding
from ..errors import ConfigError, FormatError, ShapeError


@dataclass
class ScorerParams:
    layers: list = field(default_factory=list)
    dropout_rate: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if not self.layers or self.layers[-1][0].shape[0] != 1:
            raise ShapeError("scorer must end in a single output unit")
        for (w, _), (w_next, _) in zip(self.layers, self.layers[1:]):
            if w_next.shape[1] != w.shape[0]:
                raise ShapeError("scorer layer widths do not chain")

    @property
    def input_dim(self):
        return self.layers[0][0].shape[1]

    def copy(self):
        return ScorerParams([(w.copy(), b.copy()) for w, b in self.layers], self.dropout_rate)

    def arrays(self):
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live arrays."""
        return [a for layer in self.layers for a in layer]

    @classmethod
    def from_arrays(cls, arrays, dropout_rate):
        return cls([(arrays[i], arrays[i + 1]) for i in range(0, len(arrays), 2)], dropout_rate)


def init_scorer(input_dim, hidden=(64, 64), dropout_rate=0.5, seed=0):
    """He-normal hidden layers, ``1/sqrt(fan_in)`` output layer, zero biases."""
    r = seeding.rng(seed, "scorer-init")
    widths = (int(input_dim),) + tuple(int(h) for h in hidden) + (1,)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        gain = 2.0 if i < len(widths) - 2 else 1.0
        layers.append((r.standard_normal((fan_out, fan_in)) * np.sqrt(gain / fan_in), np.zeros(fan_out)))
    return ScorerParams(layers, dropout_rate)


def forward(params, x, train=False, rng=None):
    """Scores for a ``(B, D)`` batch; returns ``(scores, cache)`` for :func:`backward`."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ShapeError(f"scorer expects (B, {params.input_dim}) inputs, got {x.shape}")
    p = params.dropout_rate
    acts, masks = [x], []
    h = x
    for i, (w, b) in enumerate(params.layers):
        h = h @ w.T + b
        if i < len(params.layers) - 1:
            h = np.maximum(h, 0.0)
            if train and p > 0.0:
                mask = (rng.random(h.shape) >= p) / (1.0 - p)
                h = h * mask
            else:
                mask = None
            masks.append(mask)
        acts.append(h)
    return h[:, 0], (acts, masks)


def backward(params, cache, d_scores):
    """Parameter gradients, in the order of :meth:`ScorerParams.arrays`."""
    acts, masks = cache
    g = np.asarray(d_scores, dtype=np.float64)[:, None]
    grads = []
    for i in reversed(range(len(params.layers))):
        w, _ = params.layers[i]
        if i < len(params.layers) - 1:
            if masks[i] is not None:
                g = g * masks[i]
            g = g * (acts[i + 1] > 0.0)
        grads.append(g.sum(axis=0))
        grads.append(g.T @ acts[i])
        if i:
            g = g @ w
    return grads[::-1]


def score(params, img, mode="eval", seed=0):
    """Raw artness score of one image; dropout is active only in ``train`` mode."""
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(img, dtype=np.float64).reshape(1, -1)
    r = seeding.rng(seed, "score") if mode == "train" else None
    s, _ = forward(params, x, train=mode == "train", rng=r)
    return float(s[0])


def score_batch(params, images, chunk=4096):
    """Eval-mode scores for a stack of images of any leading shape."""
    images = np.asarray(images)
    lead = images.shape[: images.ndim - 3]
    flat = images.reshape(-1, params.input_dim)
    out = np.empty(flat.shape[0])
    for start in range(0, flat.shape[0], chunk):
        out[start : start + chunk], _ = forward(params, flat[start : start + chunk])
    return out.reshape(lead)


def save_scorer(path, params, meta=None):
    info = {"dropout_rate": repr(params.dropout_rate)}
    info.update(meta or {})
    checkpoint.save(path, checkpoint.SCORER_SECTION, params.layers, info)


def load_scorer(path):
    section, layers, meta = checkpoint.load(path)
    if section != checkpoint.SCORER_SECTION:
        raise FormatError(f"{path} holds a {section.decode()} section, not a scorer")
    return ScorerParams(layers, float(meta.get("dropout_rate", 0.5))), meta
