"""Experiment orchestration: dataset build, training, evaluation and ablations."""

import logging
import os
from dataclasses import dataclass, replace

import numpy as np

from . import dataset_builder as db
from . import kvtext
from .errors import ArtScoreError, ConfigError, FormatError
from .evaluation import artscore_of_algorithm, sigmoid
from .ranker import (
    TrainConfig,
    cross_sequence_accuracy,
    load_scorer,
    mean_ndcg,
    score_batch,
    train,
    within_sequence_accuracy,
)

log = logging.getLogger(__name__)


class StageError(ArtScoreError):
    """A pipeline stage failed; ``exit_code`` follows the underlying cause."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4 if isinstance(cause, OSError) else 3)


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_config: str
    train_config: str
    out: str
    seed: int = 0
    domain_filter: str = ""
    loss_kind: str = ""
    swap: bool = True

    @classmethod
    def from_file(cls, path):
        kv = kvtext.read(path)
        base = os.path.dirname(os.path.abspath(path))
        known = {"dataset_config", "train_config", "out", "seed", "domain_filter", "loss_kind", "swap"}
        unknown = set(kv) - known
        if unknown:
            raise ConfigError(f"unknown experiment config keys: {sorted(unknown)}")
        for key in ("dataset_config", "train_config", "out"):
            if key not in kv:
                raise ConfigError(f"experiment config lacks {key!r}")
        try:
            return cls(
                dataset_config=os.path.join(base, kv["dataset_config"]),
                train_config=os.path.join(base, kv["train_config"]),
                out=os.path.join(base, kv["out"]),
                seed=int(kv.get("seed", 0)),
                domain_filter=kv.get("domain_filter", ""),
                loss_kind=kv.get("loss_kind", ""),
                swap=kvtext.parse_bool(kv.get("swap", "true"), "swap"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad experiment config value: {exc}") from exc

    def resolve(self):
        """Validate paths and switches; return the effective ``(DatasetConfig, TrainConfig)``."""
        for key in ("dataset_config", "train_config"):
            path = getattr(self, key)
            if not os.path.isfile(path):
                raise ConfigError(f"{key} {path} does not exist")
        dcfg = replace(db.DatasetConfig.from_file(self.dataset_config), seed=self.seed)
        tcfg = replace(TrainConfig.from_file(self.train_config), seed=self.seed)
        if self.loss_kind:
            tcfg = replace(tcfg, loss_kind=self.loss_kind)
        if not self.swap:
            tcfg = replace(tcfg, swap_probability=0.0)
        if self.domain_filter and self.domain_filter not in dcfg.domains:
            raise ConfigError(f"domain_filter {self.domain_filter!r} is not one of {dcfg.domains}")
        return dcfg, tcfg

    def digest(self):
        dcfg, tcfg = self.resolve()
        return kvtext.digest({
            "dataset": dcfg.digest(),
            "train": tcfg.digest(),
            "domain_filter": self.domain_filter,
        })


def load_splits(data_dir):
    return tuple(
        db.load_sequences(data_dir, db.load_manifest(os.path.join(data_dir, f"{name}.txt")))
        for name in ("train", "val", "test")
    )


def evaluate_scorer(params, test, seed=0):
    """Test-set NDCG, within-sequence (gap >= 2) and cross-sequence (gap >= 3) accuracy."""
    scores = score_batch(params, test.images)
    return {
        "test_ndcg": mean_ndcg(scores, test.ranks),
        "within_accuracy": within_sequence_accuracy(scores, test.ranks, min_gap=2),
        "cross_accuracy": cross_sequence_accuracy(scores, test.ranks, min_gap=3, seed=seed),
        "mean_artscore": artscore_of_algorithm(scores),
    }


def _write_summary(out, name, pairs):
    kvtext.write(os.path.join(out, f"{name}.txt"), pairs)
    with open(os.path.join(out, f"{name}.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("key,value\n")
        for k, v in pairs:
            fh.write(f"{k},{v}\n")


def _fmt(x):
    return repr(float(x))


def _mark_stale(out, stage, exc):
    try:
        present = sorted(os.listdir(out)) if os.path.isdir(out) else []
        kvtext.write(os.path.join(out, "STALE"),
                     {"failed_stage": stage, "cause": str(exc).replace("\n", " ").replace("#", ""),
                      "artifacts": ",".join(p for p in present if p != "STALE")})
    except (OSError, FormatError):
        pass


def run_pipeline(config):
    """Build the dataset, train the scorer and evaluate it on the test split.

    Artifacts under ``config.out``: ``dataset/``, ``scorer.arsc``,
    ``train_report.{txt,csv}`` and ``summary.{txt,csv}``. Returns the summary
    pairs. Any failing stage raises :class:`StageError` and leaves a
    ``STALE`` marker listing what was already written.
    """
    dcfg, tcfg = config.resolve()
    digest = config.digest()
    out = config.out
    stage = "prepare"
    try:
        os.makedirs(out, exist_ok=True)
        stale = os.path.join(out, "STALE")
        if os.path.exists(stale):
            os.remove(stale)
        stage = "build-dataset"
        data_dir = os.path.join(out, "dataset")
        db.build_dataset(dcfg, data_dir)
        stage = "train"
        tr, va, te = load_splits(data_dir)
        if config.domain_filter:
            tr = tr.filter_domains({config.domain_filter})
            va = va.filter_domains({config.domain_filter})
        ckpt = os.path.join(out, "scorer.arsc")
        meta = {"master_seed": config.seed, "config_digest": digest}
        params, report = train(tr, va, tcfg, checkpoint_path=ckpt, meta=meta)
        report.checkpoint_path = "scorer.arsc"
        report.config_digest = digest
        kvtext.write(os.path.join(out, "train_report.txt"), report.to_pairs())
        with open(os.path.join(out, "train_report.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(report.to_csv())
        stage = "eval"
        params, _ = load_scorer(ckpt)
        metrics = evaluate_scorer(params, te, seed=config.seed)
        pairs = [("master_seed", config.seed), ("config_digest", digest),
                 ("train_sequences", len(tr)), ("val_sequences", len(va)), ("test_sequences", len(te)),
                 ("best_epoch", report.best_epoch)]
        pairs += [(k, _fmt(v)) for k, v in metrics.items()]
        _write_summary(out, "summary", pairs)
    except (ArtScoreError, OSError, ValueError, ArithmeticError) as exc:
        _mark_stale(out, stage, exc)
        raise StageError(stage, exc) from exc
    return pairs


ABLATION_COLUMNS = ("variant", "domains", "loss_kind", "swap", "status", "test_ndcg",
                    "within_accuracy", "cross_accuracy")


def ablation_variants(dcfg, tcfg):
    """``[(name, train_domains, TrainConfig), ...]`` for the ablation grid."""
    variants = [("full", tuple(dcfg.domains), tcfg)]
    variants += [(f"only-{d}", (d,), tcfg) for d in dcfg.domains]
    variants.append(("mse-loss", tuple(dcfg.domains), replace(tcfg, loss_kind="mse")))
    variants.append(("no-swap", tuple(dcfg.domains), replace(tcfg, swap_probability=0.0)))
    return variants


def run_ablation_grid(config, data_dir=None):
    """Train every ablation variant on one dataset and score them on a shared test split.

    Returns a list of row dicts (see ``ABLATION_COLUMNS``); a failing variant
    is recorded with its error and the remaining ones still run. Also writes
    ``ablation.{txt,csv}`` under ``config.out``.
    """
    dcfg, tcfg = config.resolve()
    digest = config.digest()
    os.makedirs(config.out, exist_ok=True)
    if data_dir is None:
        data_dir = os.path.join(config.out, "dataset")
        db.build_dataset(dcfg, data_dir)
    tr, va, te = load_splits(data_dir)
    rows = []
    for name, domains, vcfg in ablation_variants(dcfg, tcfg):
        row = {"variant": name, "domains": "+".join(domains), "loss_kind": vcfg.loss_kind,
               "swap": vcfg.swap_probability > 0}
        try:
            params, _ = train(tr.filter_domains(set(domains)), va.filter_domains(set(domains)), vcfg)
            m = evaluate_scorer(params, te, seed=config.seed)
            row.update(status="ok", test_ndcg=m["test_ndcg"], within_accuracy=m["within_accuracy"],
                       cross_accuracy=m["cross_accuracy"])
        except (ArtScoreError, ValueError, ArithmeticError) as exc:
            log.warning("ablation variant %s failed: %s", name, exc)
            row.update(status=f"error: {exc}".replace(",", ";").replace("#", ""),
                       test_ndcg=float("nan"), within_accuracy=float("nan"), cross_accuracy=float("nan"))
        rows.append(row)
    _write_ablation(config.out, rows, config.seed, digest)
    return rows


def _write_ablation(out, rows, seed, digest):
    full = next((r for r in rows if r["variant"] == "full" and r["status"] == "ok"), None)
    pairs = [("master_seed", seed), ("config_digest", digest), ("variants", len(rows))]
    lines = [",".join(ABLATION_COLUMNS + ("full_ge_variant",))]
    for r in rows:
        ge = ""
        if full is not None and r["status"] == "ok":
            ge = str(full["cross_accuracy"] >= r["cross_accuracy"]).lower()
        cells = []
        for c in ABLATION_COLUMNS:
            v = r[c]
            cells.append(repr(v) if isinstance(v, float) else str(v).lower() if isinstance(v, bool) else str(v))
        lines.append(",".join(cells + [ge]))
        for c in ABLATION_COLUMNS[1:]:
            pairs.append((f"{r['variant']}.{c}", cells[ABLATION_COLUMNS.index(c)]))
        pairs.append((f"{r['variant']}.full_ge_variant", ge))
    kvtext.write(os.path.join(out, "ablation.txt"), pairs)
    with open(os.path.join(out, "ablation.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _images_from_source(source, shape):
    """``[(image_id, array or None), ...]`` from a dataset directory or raw ``.f32`` shard."""
    if os.path.isdir(source):
        manifest = db.load_manifest(os.path.join(source, "manifest.txt"))
        seqs = db.load_sequences(source, manifest)
        items = []
        for sid, seq in zip(seqs.seq_ids, seqs.images):
            for rank, img in enumerate(seq):
                items.append((f"{sid}:{rank}", img if img.shape == shape else None))
        return items
    try:
        data = np.fromfile(source, dtype="<f4")
    except OSError as exc:
        raise FormatError(f"cannot read {source}: {exc}") from exc
    d = int(np.prod(shape))
    items = [(str(i), data[i * d : (i + 1) * d].reshape(shape)) for i in range(data.size // d)]
    if data.size % d:
        items.append((str(len(items)), None))
    return items


def score_images(ckpt, source, image_shape=(16, 16, 3)):
    """Score every image in ``source``; returns ``(rows, aggregate)``.

    Each row is ``(image_id, raw, sigmoid)``, with ``None`` scores for images
    that do not fit the scorer. ``aggregate`` is the mean sigmoid score.
    """
    params, _ = load_scorer(ckpt)
    if int(np.prod(image_shape)) != params.input_dim:
        raise ConfigError(f"image_shape {image_shape} does not match scorer input {params.input_dim}")
    items = _images_from_source(source, tuple(image_shape))
    if not items:
        raise ConfigError(f"no images found in {source}")
    rows = []
    good = []
    for image_id, img in items:
        if img is None:
            rows.append((image_id, None, None))
        else:
            raw = float(score_batch(params, img[None])[0])
            rows.append((image_id, raw, float(sigmoid(raw))))
            good.append(raw)
    if not good:
        raise ConfigError("no image matched the scorer input shape")
    return rows, artscore_of_algorithm(good)


def scores_csv(rows, aggregate):
    lines = ["image_id,raw_score,sigmoid_score,status"]
    for image_id, raw, sig in rows:
        if raw is None:
            lines.append(f"{image_id},,,shape_mismatch")
        else:
            lines.append(f"{image_id},{raw!r},{sig!r},ok")
    lines.append(f"aggregate,,{aggregate!r},ok")
    return "\n".join(lines) + "\n"
