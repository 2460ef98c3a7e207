"""Minibatch training of the scorer with best-validation checkpoint selection."""

from dataclasses import dataclass, field

import numpy as np

from .. import kvtext, seeding
from ..errors import ConfigError, DivergenceError
from .augment import geometric_augment, swap_augment
from .losses import LOSSES
from .metrics import mean_ndcg
from .optim import adamw_step
from .scorer import ScorerParams, backward, forward, init_scorer, save_scorer, score_batch


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    batch_sequences: int = 16
    epochs: int = 10
    swap_probability: float = 0.5
    loss_kind: str = "listmle"
    seed: int = 0
    flip: bool = True
    rotation: bool = True
    dropout_rate: float = 0.5
    hidden: tuple = (64, 64)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ConfigError("learning_rate must be positive and weight_decay non-negative")
        if self.batch_sequences < 1 or self.epochs < 1:
            raise ConfigError("batch_sequences and epochs must be positive")
        if not 0.0 <= self.swap_probability <= 1.0:
            raise ConfigError("swap_probability must lie in [0, 1]")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must lie in [0, 1)")
        if self.loss_kind not in LOSSES:
            raise ConfigError(f"loss_kind must be one of {sorted(LOSSES)}, got {self.loss_kind!r}")

    _FIELDS = {
        "learning_rate": float,
        "weight_decay": float,
        "batch_sequences": int,
        "epochs": int,
        "swap_probability": float,
        "loss_kind": str,
        "seed": int,
        "flip": lambda v: kvtext.parse_bool(v, "flip"),
        "rotation": lambda v: kvtext.parse_bool(v, "rotation"),
        "dropout_rate": float,
        "hidden": lambda v: tuple(int(x) for x in v.split(",") if x.strip()),
    }

    @classmethod
    def from_mapping(cls, kv):
        unknown = set(kv) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        try:
            return cls(**{k: cls._FIELDS[k](v) for k, v in kv.items()})
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad train config value: {exc}") from exc

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(kvtext.read(path))

    def to_mapping(self):
        out = {}
        for k in self._FIELDS:
            v = getattr(self, k)
            if isinstance(v, float):
                v = repr(v)
            elif isinstance(v, tuple):
                v = ",".join(map(str, v))
            out[k] = v
        return out

    def digest(self):
        return kvtext.digest(self.to_mapping())


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_ndcg: list = field(default_factory=list)
    best_epoch: int = -1
    checkpoint_path: str = ""
    seed: int = 0
    config_digest: str = ""

    def to_pairs(self):
        pairs = [
            ("seed", self.seed),
            ("config_digest", self.config_digest),
            ("epochs", len(self.train_loss)),
            ("best_epoch", self.best_epoch),
            ("checkpoint", self.checkpoint_path),
        ]
        for e, (tl, vl, vn) in enumerate(zip(self.train_loss, self.val_loss, self.val_ndcg)):
            pairs += [
                (f"epoch.{e}.train_loss", repr(tl)),
                (f"epoch.{e}.val_loss", repr(vl)),
                (f"epoch.{e}.val_ndcg", repr(vn)),
            ]
        return pairs

    def to_text(self):
        return kvtext.dumps(self.to_pairs())

    def to_csv(self):
        lines = ["epoch,train_loss,val_loss,val_ndcg"]
        for e, row in enumerate(zip(self.train_loss, self.val_loss, self.val_ndcg)):
            lines.append(f"{e}," + ",".join(repr(x) for x in row))
        return "\n".join(lines) + "\n"


def sequence_losses(scores, ranks, loss_kind="listmle"):
    """Per-sequence loss for ``(S, n)`` scores; ranking is best-first by rank."""
    loss_fn, _ = LOSSES[loss_kind]
    return np.array([loss_fn(s, np.argsort(-r, kind="stable")) for s, r in zip(scores, ranks)])


def evaluate(params, data, loss_kind="listmle"):
    """Eval-mode ``(mean loss, mean NDCG, scores)`` over a :class:`SequenceSet`."""
    scores = score_batch(params, data.images)
    return float(np.mean(sequence_losses(scores, data.ranks, loss_kind))), mean_ndcg(scores, data.ranks), scores


def _batch_step(params, seqs, config, rng, state):
    loss_fn, grad_fn = LOSSES[config.loss_kind]
    n = len(seqs[0])
    x = np.stack([np.asarray(s.images, dtype=np.float64).reshape(n, -1) for s in seqs]).reshape(len(seqs) * n, -1)
    flat, cache = forward(params, x, train=True, rng=rng)
    scores = flat.reshape(len(seqs), n)
    d_scores = np.empty_like(scores)
    total = 0.0
    for i, s in enumerate(seqs):
        ranking = s.best_first()
        total += loss_fn(scores[i], ranking)
        d_scores[i] = grad_fn(scores[i], ranking) / len(seqs)
    grads = backward(params, cache, d_scores.ravel())
    arrays, state = adamw_step(params.arrays(), grads, state, lr=config.learning_rate,
                               weight_decay=config.weight_decay)
    return ScorerParams.from_arrays(arrays, params.dropout_rate), state, total / len(seqs)


def train(train_set, val_set, config=TrainConfig(), checkpoint_path=None, init=None, meta=None):
    """Train a scorer and return ``(best_params, report)``.

    Each minibatch is swap-augmented first, then every image is flipped or
    rotated independently. The returned parameters are those at the end of
    the epoch with the lowest validation loss; with ``checkpoint_path`` they
    are also written as an ARSC scorer checkpoint.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise ConfigError("training and validation splits must be non-empty")
    d = int(np.prod(train_set.images.shape[2:]))
    params = init or init_scorer(d, config.hidden, config.dropout_rate, seed=config.seed)
    report = TrainReport(seed=config.seed, config_digest=config.digest(), checkpoint_path=checkpoint_path or "")
    best, best_loss = params.copy(), None
    state = None
    bs = config.batch_sequences
    for epoch in range(config.epochs):
        order = seeding.rng(config.seed, "order", epoch).permutation(len(train_set))
        losses = []
        for step, start in enumerate(range(0, len(order), bs)):
            idx = order[start : start + bs]
            seqs = [train_set.sequence(i) for i in idx]
            step_seed = seeding.derive_seed(config.seed, "step", epoch, step)
            if config.swap_probability > 0 and len(seqs) > 1:
                seqs = swap_augment(seqs, config.swap_probability, seed=step_seed)
            if config.flip or config.rotation:
                seqs = [geometric_augment(s, config.flip, config.rotation, seed=seeding.derive_seed(step_seed, j))
                        for j, s in enumerate(seqs)]
            try:
                with np.errstate(invalid="ignore", over="ignore"):
                    params, state, loss = _batch_step(params, seqs, config, seeding.rng(step_seed, "dropout"), state)
            except DivergenceError as exc:
                raise DivergenceError(f"{exc} at epoch {epoch}, step {step}", step=step, epoch=epoch) from exc
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}, step {step}",
                                      step=step, epoch=epoch)
            losses.append(loss)
        val_loss, val_ndcg, _ = evaluate(params, val_set, config.loss_kind)
        if not np.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}", epoch=epoch)
        report.train_loss.append(float(np.mean(losses)))
        report.val_loss.append(val_loss)
        report.val_ndcg.append(val_ndcg)
        if best_loss is None or val_loss < best_loss:
            best, best_loss, report.best_epoch = params.copy(), val_loss, epoch
    if checkpoint_path:
        info = {"seed": config.seed, "train_config_digest": config.digest(), "best_epoch": report.best_epoch}
        info.update(meta or {})
        save_scorer(checkpoint_path, best, info)
    return best, report
