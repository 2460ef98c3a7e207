"""Toy generator family: construction, artistic variants, blending and inversion.

A generator is a fully connected stack mapping a latent vector to an
``(H, W, C)`` image in ``[-1, 1]``. Each layer computes ``act(W @ h + b)``
with ``W`` of shape ``(fan_out, fan_in)``.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from . import seeding
from .errors import ConfigError, DivergenceError, IncompatibleError, ShapeError

ACTIVATIONS = ("tanh", "identity")

DEFAULT_WIDTHS = (16, 32, 32, 64, 64, 128, 128, 256, 768)


@dataclass(frozen=True)
class GeneratorSpec:
    """Architecture of a generator.

    ``layer_widths`` lists every width including the latent input, so
    ``(16, 32, 768)`` describes two layers ``16 -> 32 -> 768``.
    ``activations`` defaults to tanh on every layer.
    """

    latent_dim: int = 16
    layer_widths: tuple = DEFAULT_WIDTHS
    activations: tuple = None
    image_shape: tuple = (16, 16, 3)
    seed: int = 0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        object.__setattr__(self, "image_shape", tuple(int(s) for s in self.image_shape))
        if self.activations is None:
            object.__setattr__(self, "activations", ("tanh",) * (len(widths) - 1))
        else:
            object.__setattr__(self, "activations", tuple(self.activations))
        self._validate()

    def _validate(self):
        widths = self.layer_widths
        if self.latent_dim < 1:
            raise ConfigError(f"latent_dim must be positive, got {self.latent_dim}")
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ConfigError(f"layer_widths needs at least two positive entries, got {widths}")
        if widths[0] != self.latent_dim:
            raise ConfigError(
                f"layer_widths[0]={widths[0]} does not chain from latent_dim={self.latent_dim}"
            )
        if widths[-1] != int(np.prod(self.image_shape)):
            raise ConfigError(
                f"last width {widths[-1]} does not match image_shape {self.image_shape}"
            )
        if len(self.activations) != len(widths) - 1:
            raise ConfigError("need exactly one activation tag per layer")
        bad = [a for a in self.activations if a not in ACTIVATIONS]
        if bad:
            raise ConfigError(f"unknown activation tags {bad}")
        if self.activations[-1] != "tanh":
            raise ConfigError("final activation must be tanh")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n_layers(self):
        return len(self.layer_widths) - 1

    def digest(self):
        text = f"{self.latent_dim}|{self.layer_widths}|{self.activations}|{self.image_shape}|{self.seed}"
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class GeneratorParams:
    spec: GeneratorSpec
    layers: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.layers) != self.spec.n_layers:
            raise ShapeError(f"expected {self.spec.n_layers} layers, got {len(self.layers)}")
        widths = self.spec.layer_widths
        for i, (w, b) in enumerate(self.layers):
            if w.shape != (widths[i + 1], widths[i]) or b.shape != (widths[i + 1],):
                raise ShapeError(f"layer {i} has shapes {w.shape}, {b.shape}")

    def copy(self):
        return GeneratorParams(self.spec, [(w.copy(), b.copy()) for w, b in self.layers])

    def digest(self):
        h = hashlib.sha256()
        for w, b in self.layers:
            h.update(np.ascontiguousarray(w, dtype="<f8").tobytes())
            h.update(np.ascontiguousarray(b, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


def new_photoreal_generator(spec):
    """Seeded Gaussian initialisation, every tensor scaled by ``1/sqrt(fan_in)``."""
    r = seeding.rng(spec.seed)
    layers = []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        scale = 1.0 / np.sqrt(fan_in)
        w = r.standard_normal((fan_out, fan_in)) * scale
        b = r.standard_normal(fan_out) * scale
        layers.append((w, b))
    return GeneratorParams(spec, layers)


def _check_latents(gen, z):
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != gen.spec.latent_dim:
        raise ShapeError(f"latent has length {z.shape[-1]}, generator expects {gen.spec.latent_dim}")
    return z


def _forward(gen, z):
    """Forward pass on a ``(B, latent_dim)`` batch; returns every layer's output."""
    acts = [z]
    h = z
    for (w, b), act in zip(gen.layers, gen.spec.activations):
        h = h @ w.T + b
        if act == "tanh":
            h = np.tanh(h)
        acts.append(h)
    return acts


def _backward(gen, acts, d_out, params_from=None, wrt_input=False):
    """Backpropagate ``d_out`` (gradient w.r.t. the flat output).

    Returns ``(layer_grads, input_grad)``; ``layer_grads[i]`` is ``None`` for
    layers below ``params_from`` (or all layers when it is ``None``).
    """
    n = gen.spec.n_layers
    grads = [None] * n
    lowest = 0 if wrt_input else (n if params_from is None else params_from)
    g = d_out
    for i in reversed(range(lowest, n)):
        if gen.spec.activations[i] == "tanh":
            g = g * (1.0 - acts[i + 1] ** 2)
        if params_from is not None and i >= params_from:
            grads[i] = (g.T @ acts[i], g.sum(axis=0))
        if i > lowest or wrt_input:
            g = g @ gen.layers[i][0]
    return grads, (g if wrt_input else None)


def generate(gen, z):
    """Render one latent to an ``(H, W, C)`` image."""
    z = _check_latents(gen, z)
    if z.ndim != 1:
        raise ShapeError(f"generate expects a single latent vector, got shape {z.shape}")
    return _forward(gen, z[None, :])[-1][0].reshape(gen.spec.image_shape)


def generate_batch(gen, z):
    """Render a ``(B, latent_dim)`` batch to ``(B, H, W, C)``."""
    z = _check_latents(gen, z)
    if z.ndim != 2:
        raise ShapeError(f"generate_batch expects (B, latent_dim), got shape {z.shape}")
    return _forward(gen, z)[-1].reshape((z.shape[0],) + gen.spec.image_shape)


def perturb_artistic(gen, k_last, magnitude, seed):
    """Copy of ``gen`` with Gaussian noise added to the last ``k_last`` layers."""
    n = gen.spec.n_layers
    if not 0 <= k_last <= n:
        raise ConfigError(f"k_last={k_last} outside [0, {n}]")
    if magnitude < 0:
        raise ConfigError("magnitude must be non-negative")
    out = gen.copy()
    if k_last == 0 or magnitude == 0:
        return out
    r = seeding.rng(seed)
    for i in range(n - k_last, n):
        w, b = out.layers[i]
        out.layers[i] = (
            w + magnitude * r.standard_normal(w.shape),
            b + magnitude * r.standard_normal(b.shape),
        )
    return out


def interpolate(photo, art, alpha, fuse_from):
    """Blend two generators layer-wise: ``(1 - alpha) * photo + alpha * art``.

    Only layers ``>= fuse_from`` are blended; earlier layers are photo's own
    arrays copied unchanged.
    """
    if photo.spec != art.spec:
        raise IncompatibleError("photo and art generators do not share an architecture")
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha={alpha} outside [0, 1]")
    n = photo.spec.n_layers
    if not 0 <= fuse_from < n:
        raise ConfigError(f"fuse_from={fuse_from} outside [0, {n})")
    layers = []
    for i, ((wp, bp), (wa, ba)) in enumerate(zip(photo.layers, art.layers)):
        if i < fuse_from:
            layers.append((wp.copy(), bp.copy()))
        else:
            layers.append(((1.0 - alpha) * wp + alpha * wa, (1.0 - alpha) * bp + alpha * ba))
    return GeneratorParams(photo.spec, layers)


def default_fuse_from(spec, k_last=6):
    return max(spec.n_layers - k_last, 0)


# -- style adaptation -------------------------------------------------------


def style_loss_and_grad(gen, z, target_style, params_from):
    """Squared distance between the batch-mean style vector and ``target_style``.

    Returns ``(loss, layer_grads)`` with gradients for layers ``>= params_from``.
    """
    h, w, c = gen.spec.image_shape
    acts = _forward(gen, z)
    b = z.shape[0]
    feats = acts[-1].reshape(b, h * w, c)
    grams = np.einsum("bnc,bnd->bcd", feats, feats) / (h * w)
    diff = grams.mean(axis=0) - np.asarray(target_style, dtype=np.float64).reshape(c, c)
    loss = float(np.sum(diff**2))
    d_gram = 2.0 * diff
    d_sym = d_gram + d_gram.T
    d_feats = np.einsum("bnc,cd->bnd", feats, d_sym) / (h * w * b)
    grads, _ = _backward(gen, acts, d_feats.reshape(b, -1), params_from=params_from)
    return loss, grads


def adapt_freeze_early(gen, target_style, freeze_below, steps=200, lr=1e-2, seed=0, batch=32):
    """Tune layers ``>= freeze_below`` so generated samples match a target style.

    Plain gradient descent on :func:`style_loss_and_grad` over a fixed seeded
    latent batch. The lowest-loss parameters seen are returned, so the result
    is never worse than the input. Frozen layers are returned bit-identical.
    """
    n = gen.spec.n_layers
    if not 0 <= freeze_below < n:
        raise ConfigError(f"freeze_below={freeze_below} outside [0, {n})")
    target_style = np.asarray(target_style, dtype=np.float64)
    c = gen.spec.image_shape[2]
    if target_style.shape != (c * c,):
        raise ShapeError(f"target_style must have length {c * c}")
    z = seeding.rng(seed).standard_normal((batch, gen.spec.latent_dim))
    cur = gen.copy()
    best, best_loss = gen.copy(), None
    for step in range(steps + 1):
        loss, grads = style_loss_and_grad(cur, z, target_style, freeze_below)
        if not np.isfinite(loss):
            raise DivergenceError(f"style adaptation diverged at step {step}", step=step)
        if best_loss is None or loss < best_loss:
            best, best_loss = cur.copy(), loss
        if step == steps:
            break
        for i in range(freeze_below, n):
            w, b = cur.layers[i]
            gw, gb = grads[i]
            cur.layers[i] = (w - lr * gw, b - lr * gb)
    for i in range(freeze_below):
        best.layers[i] = (gen.layers[i][0].copy(), gen.layers[i][1].copy())
    return best


# -- inversion --------------------------------------------------------------


def reconstruction_loss_and_grad(gen, z, targets):
    """Per-sample MSE between ``generate_batch(gen, z)`` and ``targets`` and its latent gradient."""
    acts = _forward(gen, z)
    t = targets.reshape(z.shape[0], -1)
    resid = acts[-1] - t
    d = resid.shape[1]
    losses = np.mean(resid**2, axis=1)
    _, dz = _backward(gen, acts, 2.0 * resid / d, wrt_input=True)
    return losses, dz


def invert_batch(gen, targets, steps=500, lr=20.0, seeds=None, z0=None):
    """Recover latents for a ``(B, H, W, C)`` stack of targets.

    Each sample is optimised independently from its own seeded Gaussian start
    (or ``z0``); the lowest-loss latent seen per sample is returned together
    with ``(initial_losses, best_losses)``.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape[1:] != gen.spec.image_shape:
        raise ShapeError(f"targets have shape {targets.shape[1:]}, generator makes {gen.spec.image_shape}")
    b = targets.shape[0]
    if z0 is None:
        if seeds is None or len(seeds) != b:
            raise ConfigError("need one seed per target")
        z0 = np.stack([seeding.rng(s).standard_normal(gen.spec.latent_dim) for s in seeds])
    z = np.array(z0, dtype=np.float64)
    best_z = z.copy()
    best = None
    initial = None
    for step in range(steps + 1):
        losses, dz = reconstruction_loss_and_grad(gen, z, targets)
        if not np.all(np.isfinite(losses)):
            raise DivergenceError(f"inversion diverged at step {step}", step=step)
        if best is None:
            initial = losses.copy()
            best = losses.copy()
        else:
            improved = losses < best
            best[improved] = losses[improved]
            best_z[improved] = z[improved]
        if step == steps:
            break
        z = z - lr * dz
    return best_z, initial, best


def invert(gen, target, steps=500, lr=20.0, seed=0):
    """Gradient-descent latent recovery for a single target image."""
    target = np.asarray(target, dtype=np.float64)
    if target.shape != gen.spec.image_shape:
        raise ShapeError(f"target has shape {target.shape}, generator makes {gen.spec.image_shape}")
    z, _, _ = invert_batch(gen, target[None], steps=steps, lr=lr, seeds=[seed])
    return z[0]
