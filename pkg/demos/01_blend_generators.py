"""
Blending a photo generator into an artistic one
===============================================

Two generators share their early layers. Walking alpha from 0 to 1 moves
only the later layers, so the picture keeps its layout while its texture
drifts. The style statistics drift with it.
"""

import numpy as np

from artscore import model_zoo as mz
from artscore.style import style_vector

photo = mz.new_photoreal_generator(mz.GeneratorSpec(seed=1))
art = mz.perturb_artistic(photo, k_last=6, magnitude=0.05, seed=2)
fuse_from = mz.default_fuse_from(photo.spec)
print("layers:", photo.spec.n_layers, "blended from layer", fuse_from)

z = np.random.default_rng(0).standard_normal(16)
base = style_vector(mz.generate(photo, z))

# Distance of the style vector from the photo end grows with alpha.
for alpha in np.linspace(0.0, 1.0, 6):
    img = mz.generate(mz.interpolate(photo, art, alpha, fuse_from), z)
    drift = np.linalg.norm(style_vector(img) - base)
    print(f"alpha={alpha:.1f}  mean={img.mean():+.4f}  style drift={drift:.5f}")

# Early layers never move.
mid = mz.interpolate(photo, art, 0.5, fuse_from)
print("first layer untouched:", np.array_equal(mid.layers[0][0], photo.layers[0][0]))
