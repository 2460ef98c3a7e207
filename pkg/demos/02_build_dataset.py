"""
Building a pseudo-ranked dataset
================================

Every sequence renders one latent across the alpha grid. A noisy copy of the
photo end is inverted back into the photo generator and placed as an extra
"real" endpoint. Ranks come from alpha alone, so no human labels are needed.
"""

import sys
import tempfile

import numpy as np

from artscore import dataset_builder as db

out = sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="artscore-data-")
cfg = db.DatasetConfig(sequences_per_domain=20, inversion_steps=100, seed=5)
manifest = db.build_dataset(cfg, out)
print("written to", out)
print("sequences per domain:", manifest.counts_by_domain())

for name in ("train", "val", "test"):
    print(name, len(db.load_manifest(f"{out}/{name}.txt")))

data = db.load_sequences(out, manifest)
print("image stack:", data.images.shape, data.images.dtype)

# Brightness spread of each rank position, averaged over sequences.
print("per-rank std:", np.round(data.images.std(axis=(2, 3, 4)).mean(axis=0), 4))
first = manifest.records[:2]
print("anchors of the first two sequences:", [r.anchor for r in first])
