"""Training-time augmentations. Neither touches rank labels."""

import warnings
from dataclasses import replace

import numpy as np

from .. import seeding
from ..errors import ConfigError


def swap_augment(batch, probability=0.5, seed=0):
    """Cross-sequence swap.

    With ``probability`` per sequence, one uniformly chosen position is
    overwritten by the image holding the same rank in another uniformly
    chosen sequence of the batch. Donor images are always taken from the
    unmodified input batch.
    """
    if not 0.0 <= probability <= 1.0:
        raise ConfigError(f"probability must lie in [0, 1], got {probability}")
    batch = list(batch)
    if len(batch) < 2:
        warnings.warn("swap_augment needs at least two sequences; batch left unchanged", stacklevel=2)
        return batch
    lengths = {len(s) for s in batch}
    if len(lengths) != 1:
        raise ConfigError("swap_augment needs sequences of equal length")
    r = seeding.rng(seed, "swap")
    out = []
    for i, seq in enumerate(batch):
        if probability == 0.0 or r.random() >= probability:
            out.append(seq)
            continue
        pos = int(r.integers(len(seq)))
        donor_idx = int(r.integers(len(batch) - 1))
        donor_idx += donor_idx >= i
        donor = batch[donor_idx]
        rank = seq.ranks[pos]
        donor_pos = int(np.flatnonzero(np.asarray(donor.ranks) == rank)[0])
        images = np.array(seq.images, copy=True)
        images[pos] = donor.images[donor_pos]
        out.append(replace(seq, images=images))
    return out


def geometric_augment(seq, flip=True, rotate=True, seed=0):
    """Per-image random horizontal flip (p = 0.5) and rotation by k * 90 degrees."""
    if not (flip or rotate):
        return seq
    images = np.asarray(seq.images)
    if rotate and images.shape[1] != images.shape[2]:
        raise ConfigError(f"rotation needs square images, got {images.shape[1:3]}")
    r = seeding.rng(seed, "geometric")
    out = np.empty_like(images)
    for i, img in enumerate(images):
        do_flip = bool(r.random() < 0.5)
        k = int(r.integers(4))
        if flip and do_flip:
            img = img[:, ::-1]
        if rotate and k:
            img = np.rot90(img, k, axes=(0, 1))
        out[i] = img
    return replace(seq, images=out)
