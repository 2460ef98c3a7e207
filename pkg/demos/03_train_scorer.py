"""
Training the artness scorer
===========================

A small MLP scores single images. ListMLE teaches it to order each sequence,
and cross-sequence swaps force it to compare images with different content.
This takes under a minute on a laptop.
"""

import tempfile

from artscore import dataset_builder as db
from artscore import pipeline, ranker

out = tempfile.mkdtemp(prefix="artscore-train-")
db.build_dataset(db.DatasetConfig(sequences_per_domain=200, seed=11), out)
tr, va, te = pipeline.load_splits(out)
print("train/val/test sequences:", len(tr), len(va), len(te))

params, report = ranker.train(tr, va, ranker.TrainConfig(epochs=6, seed=0))
print(report.to_csv())
print("best epoch:", report.best_epoch)

for k, v in pipeline.evaluate_scorer(params, te).items():
    print(f"{k:16s} {v:.4f}")

# One image scored on its own.
img = te.images[0, -1]
print("raw score of the highest-rank image:", round(ranker.score(params, img), 4))
