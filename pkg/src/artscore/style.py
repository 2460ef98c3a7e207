"""Gram-matrix style statistics of images."""

import numpy as np

from .errors import ShapeError


def gram_matrix(features):
    """Return ``F @ F.T / N`` for a ``(C, N)`` feature matrix."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] == 0 or f.shape[1] == 0:
        raise ShapeError(f"gram_matrix expects a non-empty (C, N) matrix, got shape {f.shape}")
    return f @ f.T / f.shape[1]


def image_features(img):
    """Flatten an ``(H, W, C)`` image to channel rows of shape ``(C, H*W)``."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3:
        raise ShapeError(f"expected an (H, W, C) image, got shape {img.shape}")
    return img.reshape(-1, img.shape[2]).T


def style_vector(img):
    """Gram matrix of the image's channels stacked row-major into length C**2."""
    return gram_matrix(image_features(img)).ravel()


def style_vectors(images):
    """Batched :func:`style_vector` over a ``(B, H, W, C)`` stack."""
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 4:
        raise ShapeError(f"expected a (B, H, W, C) stack, got shape {images.shape}")
    b, h, w, c = images.shape
    f = images.reshape(b, h * w, c)
    return (np.einsum("bnc,bnd->bcd", f, f) / (h * w)).reshape(b, c * c)
