"""Pseudo-ranked dataset synthesis.

Sequences are built by blending a photorealistic generator into an artistic
one over an alpha grid and rendering one latent through every blend. Rank 0
is the least artistic image (the alpha=0 end), rank ``n - 1`` the most.

On disk a dataset directory holds::

    manifest.txt          every sequence (key=value lines)
    train.txt, val.txt, test.txt
                          the same format restricted to one split
    shard-<domain>.f32    images of one domain, little-endian float32,
                          sequence after sequence, each in rank order
"""

import hashlib
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import checkpoint, kvtext, seeding
from .errors import ConfigError, DivergenceError, FormatError, ShapeError
from .model_zoo import (
    GeneratorSpec,
    adapt_freeze_early,
    generate_batch,
    interpolate,
    invert_batch,
    new_photoreal_generator,
    perturb_artistic,
)
from .style import gram_matrix, style_vector, style_vectors

__all__ = [
    "gram_matrix",
    "style_vector",
    "style_vectors",
    "kmeans",
    "inertia",
    "select_representatives",
    "RankedSequence",
    "build_sequence",
    "DatasetConfig",
    "SequenceRecord",
    "DatasetManifest",
    "SequenceSet",
    "build_dataset",
    "split",
    "load_manifest",
    "load_sequences",
]

DEFAULT_ALPHAS = tuple(i / 10 for i in range(11))
DOMAIN_NAMES = ("face", "horse", "landscape")
ANCHORS = ("photo", "painting")


# -- clustering ---------------------------------------------------------------


def _sq_dists(points, centroids):
    d = (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centroids.T
        + np.sum(centroids**2, axis=1)[None, :]
    )
    return np.maximum(d, 0.0)


def inertia(points, assignments, centroids):
    """Within-cluster sum of squared distances."""
    points = np.asarray(points, dtype=np.float64)
    return float(np.sum((points - centroids[assignments]) ** 2))


def _kmeans_pp(points, k, r):
    n = points.shape[0]
    idx = [int(r.integers(n))]
    d2 = np.sum((points - points[idx[0]]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            remaining = np.setdiff1d(np.arange(n), idx)
            nxt = int(r.choice(remaining))
        else:
            nxt = int(r.choice(n, p=d2 / total))
        idx.append(nxt)
        d2 = np.minimum(d2, np.sum((points - points[nxt]) ** 2, axis=1))
    return points[idx].copy()


def kmeans(points, k, seed=0, max_iter=300):
    """Lloyd's algorithm with k-means++ seeding.

    Stops at an assignment fixpoint or after ``max_iter`` assignment steps.
    A centroid left without members is moved onto the point currently
    farthest from its own centroid.

    Returns:
        ``(assignments, centroids)``; ``assignments`` are ``int`` labels.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ShapeError("kmeans expects a non-empty (N, D) array of points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k={k} must lie in [1, {n}]")
    if max_iter < 1:
        raise ConfigError("max_iter must be at least 1")
    r = seeding.rng(seed)
    centroids = _kmeans_pp(points, k, r)
    assignments = None
    for _ in range(max_iter):
        new = np.argmin(_sq_dists(points, centroids), axis=1)
        if assignments is not None and np.array_equal(new, assignments):
            break
        assignments = new
        for j in range(k):
            members = assignments == j
            if members.any():
                centroids[j] = points[members].mean(axis=0)
        for j in range(k):
            if not np.any(assignments == j):
                far = np.argmax(np.sum((points - centroids[assignments]) ** 2, axis=1))
                centroids[j] = points[far]
                assignments[far] = j
    return assignments, centroids


def select_representatives(points, assignments, centroids, m):
    """Indices of the ``m`` members nearest each centroid.

    Returns ``(per_cluster, undersized)`` where ``per_cluster[j]`` lists
    indices by ascending distance (ties to the lower index) and
    ``undersized[j]`` is True when cluster ``j`` had fewer than ``m`` members.
    """
    if m < 1:
        raise ConfigError("m must be at least 1")
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    per_cluster, undersized = [], []
    for j in range(len(centroids)):
        members = np.flatnonzero(assignments == j)
        d = np.sqrt(np.sum((points[members] - centroids[j]) ** 2, axis=1))
        order = members[np.lexsort((members, d))]
        per_cluster.append(order[:m])
        undersized.append(len(members) < m)
    return per_cluster, undersized


# -- sequences ----------------------------------------------------------------


@dataclass
class RankedSequence:
    """One latent rendered across the alpha grid.

    ``images`` is an ``(n, H, W, C)`` array and ``ranks[i]`` the pseudo-rank of
    ``images[i]`` (0 = least artistic).
    """

    images: np.ndarray
    ranks: np.ndarray
    alphas: tuple
    domain_tag: str = ""
    latent_seed: int = 0
    anchor: str = ""
    seq_id: int = -1

    def __len__(self):
        return len(self.ranks)

    def best_first(self):
        """Image indices ordered from most to least artistic."""
        return np.argsort(-np.asarray(self.ranks), kind="stable")


def _check_alphas(alphas):
    alphas = tuple(float(a) for a in alphas)
    if not alphas:
        raise ConfigError("need at least one alpha")
    if any(not 0.0 <= a <= 1.0 for a in alphas):
        raise ConfigError(f"alphas must lie in [0, 1], got {alphas}")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ConfigError(f"alphas must be strictly ascending, got {alphas}")
    return alphas


def _render_grid(photo, art, z, alphas, fuse_from):
    """``(B, len(alphas), H, W, C)`` renders of a latent batch over the grid."""
    frames = [generate_batch(interpolate(photo, art, a, fuse_from), z) for a in alphas]
    return np.stack(frames, axis=1)


def _attach_endpoint(grid, endpoint, anchor):
    """Prepend (photo anchor) or append (painting anchor) the real image."""
    endpoint = endpoint[:, None]
    if anchor == "photo":
        return np.concatenate([endpoint, grid], axis=1)
    if anchor == "painting":
        return np.concatenate([grid, endpoint], axis=1)
    raise ConfigError(f"anchor must be one of {ANCHORS}, got {anchor!r}")


def build_sequence(photo, art, z, alphas=DEFAULT_ALPHAS, fuse_from=None, endpoint=None,
                   anchor="photo", domain_tag="", latent_seed=0):
    """Render ``z`` through every blend in ``alphas``.

    With ``endpoint`` (the real image the latent was recovered from) the
    sequence gains one image: at rank 0 for a photo anchor, at the top rank
    for a painting anchor.
    """
    from .model_zoo import default_fuse_from

    alphas = _check_alphas(alphas)
    if fuse_from is None:
        fuse_from = default_fuse_from(photo.spec)
    z = np.asarray(z, dtype=np.float64)
    grid = _render_grid(photo, art, z[None, :], alphas, fuse_from)
    if endpoint is not None:
        endpoint = np.asarray(endpoint, dtype=np.float64)
        if endpoint.shape != photo.spec.image_shape:
            raise ShapeError(f"endpoint shape {endpoint.shape} does not match {photo.spec.image_shape}")
        grid = _attach_endpoint(grid, endpoint[None], anchor)
    images = grid[0]
    return RankedSequence(
        images=images,
        ranks=np.arange(len(images)),
        alphas=alphas,
        domain_tag=domain_tag,
        latent_seed=latent_seed,
        anchor=anchor if endpoint is not None else "",
    )


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class DatasetConfig:
    """Settings for :func:`build_dataset`; mirrors the key=value config file.

    ``fuse_from=None`` means "last six layers". ``art_route`` picks how the
    artistic generator is derived: ``perturb`` (seeded noise on the fused
    layers), ``freezeg`` (style adaptation of the fused layers towards a
    painting pool) or ``fewshot`` (one fully adapted generator per style
    cluster of the pool).
    """

    domains: tuple = DOMAIN_NAMES
    sequences_per_domain: int = 100
    alphas: tuple = DEFAULT_ALPHAS
    fuse_from: int = None
    seed: int = 0
    split_ratios: tuple = (0.8, 0.1, 0.1)
    art_route: str = "perturb"
    art_magnitude: float = 0.05
    real_endpoint: bool = True
    real_noise: float = 0.02
    inversion_steps: int = 300
    inversion_lr: float = 20.0
    style_clusters: int = 20
    representatives: int = 10
    pool_size: int = 400
    adapt_steps: int = 200
    adapt_lr: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "alphas", _check_alphas(self.alphas))
        object.__setattr__(self, "split_ratios", tuple(float(x) for x in self.split_ratios))
        if not self.domains or len(set(self.domains)) != len(self.domains):
            raise ConfigError(f"domains must be non-empty and distinct, got {self.domains}")
        if self.sequences_per_domain < 1:
            raise ConfigError("sequences_per_domain must be positive")
        if self.art_route not in ("perturb", "freezeg", "fewshot"):
            raise ConfigError(f"unknown art_route {self.art_route!r}")
        _check_ratios(self.split_ratios)

    @classmethod
    def from_mapping(cls, kv):
        conv = {
            "domains": lambda v: tuple(x.strip() for x in v.split(",") if x.strip()),
            "sequences_per_domain": int,
            "alphas": lambda v: kvtext.parse_floats(v, "alphas"),
            "fuse_from": lambda v: None if v in ("", "auto") else int(v),
            "seed": int,
            "split_ratios": lambda v: kvtext.parse_floats(v, "split_ratios"),
            "art_route": str,
            "art_magnitude": float,
            "real_endpoint": lambda v: kvtext.parse_bool(v, "real_endpoint"),
            "real_noise": float,
            "inversion_steps": int,
            "inversion_lr": float,
            "style_clusters": int,
            "representatives": int,
            "pool_size": int,
            "adapt_steps": int,
            "adapt_lr": float,
        }
        unknown = set(kv) - set(conv)
        if unknown:
            raise ConfigError(f"unknown dataset config keys: {sorted(unknown)}")
        try:
            return cls(**{k: conv[k](v) for k, v in kv.items()})
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad dataset config value: {exc}") from exc

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(kvtext.read(path))

    def to_mapping(self):
        return {
            "domains": ",".join(self.domains),
            "sequences_per_domain": self.sequences_per_domain,
            "alphas": ",".join(repr(a) for a in self.alphas),
            "fuse_from": "auto" if self.fuse_from is None else self.fuse_from,
            "seed": self.seed,
            "split_ratios": ",".join(repr(r) for r in self.split_ratios),
            "art_route": self.art_route,
            "art_magnitude": repr(self.art_magnitude),
            "real_endpoint": self.real_endpoint,
            "real_noise": repr(self.real_noise),
            "inversion_steps": self.inversion_steps,
            "inversion_lr": repr(self.inversion_lr),
            "style_clusters": self.style_clusters,
            "representatives": self.representatives,
            "pool_size": self.pool_size,
            "adapt_steps": self.adapt_steps,
            "adapt_lr": repr(self.adapt_lr),
        }

    def digest(self):
        return kvtext.digest(self.to_mapping())


def _check_ratios(ratios):
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"split ratios must be three non-negative numbers, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {ratios}")


# -- manifests ----------------------------------------------------------------


@dataclass(frozen=True)
class SequenceRecord:
    seq_id: int
    domain: str
    anchor: str
    latent_seed: int
    shard: str
    offset: int
    length: int


@dataclass
class DatasetManifest:
    records: list
    alphas: tuple
    image_shape: tuple
    seed: int
    config_digest: str = ""
    generator_digests: dict = field(default_factory=dict)
    split_name: str = "all"
    split_ratios: tuple = (0.8, 0.1, 0.1)

    def __len__(self):
        return len(self.records)

    def counts_by_domain(self):
        out = {}
        for rec in self.records:
            out[rec.domain] = out.get(rec.domain, 0) + 1
        return out

    def subset(self, records, split_name):
        return replace(self, records=list(records), split_name=split_name)

    def to_pairs(self):
        pairs = [
            ("format", "artscore-manifest-1"),
            ("split", self.split_name),
            ("seed", self.seed),
            ("config_digest", self.config_digest),
            ("alphas", ",".join(repr(a) for a in self.alphas)),
            ("image_shape", ",".join(map(str, self.image_shape))),
            ("split_ratios", ",".join(repr(r) for r in self.split_ratios)),
        ]
        for dom in sorted(self.generator_digests):
            pairs.append((f"generator.{dom}", self.generator_digests[dom]))
        pairs.append(("count.total", len(self.records)))
        for dom, n in sorted(self.counts_by_domain().items()):
            pairs.append((f"count.domain.{dom}", n))
        for rec in self.records:
            pairs.append(
                (
                    f"sequence.{rec.seq_id}",
                    f"domain:{rec.domain};anchor:{rec.anchor};latent_seed:{rec.latent_seed};"
                    f"shard:{rec.shard};offset:{rec.offset};length:{rec.length}",
                )
            )
        return pairs

    def write(self, path):
        kvtext.write(path, self.to_pairs())


def load_manifest(path):
    kv = kvtext.read(path)
    try:
        if kv.get("format") != "artscore-manifest-1":
            raise FormatError(f"{path} is not a dataset manifest")
        records = []
        for key, value in kv.items():
            if not key.startswith("sequence."):
                continue
            fields = dict(part.split(":", 1) for part in value.split(";"))
            records.append(
                SequenceRecord(
                    seq_id=int(key.split(".", 1)[1]),
                    domain=fields["domain"],
                    anchor=fields["anchor"],
                    latent_seed=int(fields["latent_seed"]),
                    shard=fields["shard"],
                    offset=int(fields["offset"]),
                    length=int(fields["length"]),
                )
            )
        manifest = DatasetManifest(
            records=records,
            alphas=kvtext.parse_floats(kv["alphas"], "alphas"),
            image_shape=tuple(int(x) for x in kv["image_shape"].split(",")),
            seed=int(kv["seed"]),
            config_digest=kv.get("config_digest", ""),
            generator_digests={k.split(".", 1)[1]: v for k, v in kv.items() if k.startswith("generator.")},
            split_name=kv.get("split", "all"),
            split_ratios=kvtext.parse_floats(kv["split_ratios"], "split_ratios"),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed manifest {path}: {exc}") from exc
    if int(kv["count.total"]) != len(records):
        raise FormatError(f"{path}: count.total does not match the stored records")
    return manifest


def split(manifest, ratios=(0.8, 0.1, 0.1), seed=0):
    """Seeded shuffle, then contiguous train/val/test blocks.

    Validation and test sizes are ``floor(N * ratio)``; training takes the
    remainder. An empty split only triggers a warning.
    """
    ratios = tuple(float(r) for r in ratios)
    _check_ratios(ratios)
    n = len(manifest.records)
    order = seeding.rng(seed, "split").permutation(n)
    n_val = math.floor(n * ratios[1])
    n_test = math.floor(n * ratios[2])
    n_train = n - n_val - n_test
    recs = [manifest.records[i] for i in order]
    parts = (recs[:n_train], recs[n_train : n_train + n_val], recs[n_train + n_val :])
    names = ("train", "val", "test")
    for name, part in zip(names, parts):
        if not part:
            warnings.warn(f"split {name!r} is empty", stacklevel=2)
    out = []
    for name, part in zip(names, parts):
        sub = manifest.subset(sorted(part, key=lambda r: r.seq_id), name)
        sub.split_ratios = ratios
        out.append(sub)
    return tuple(out)


# -- building -----------------------------------------------------------------


@dataclass
class DomainModels:
    photo: object
    arts: list


def _painting_pool(photo, cfg, dom_seed):
    """Stand-in art corpus: samples from several noise-perturbed variants."""
    k_last = photo.spec.n_layers - _fuse_from(cfg, photo.spec)
    per = max(1, cfg.pool_size // 4)
    images = []
    for v in range(4):
        variant = perturb_artistic(photo, k_last, cfg.art_magnitude, seeding.derive_seed(dom_seed, "pool", v))
        z = seeding.rng(dom_seed, "pool-z", v).standard_normal((per, photo.spec.latent_dim))
        images.append(generate_batch(variant, z))
    return np.concatenate(images)


def _fuse_from(cfg, spec):
    from .model_zoo import default_fuse_from

    ff = default_fuse_from(spec) if cfg.fuse_from is None else cfg.fuse_from
    if not 0 <= ff < spec.n_layers:
        raise ConfigError(f"fuse_from={ff} outside [0, {spec.n_layers})")
    return ff


def domain_models(cfg, domain_index, spec_template=None):
    """Photorealistic generator and artistic generator(s) for one domain."""
    dom_seed = seeding.derive_seed(cfg.seed, "domain", domain_index)
    base = spec_template or GeneratorSpec()
    spec = replace(base, seed=seeding.derive_seed(dom_seed, "photo"))
    photo = new_photoreal_generator(spec)
    ff = _fuse_from(cfg, spec)
    if cfg.art_route == "perturb":
        arts = [perturb_artistic(photo, spec.n_layers - ff, cfg.art_magnitude, seeding.derive_seed(dom_seed, "art"))]
    else:
        pool = style_vectors(_painting_pool(photo, cfg, dom_seed))
        if cfg.art_route == "freezeg":
            targets = [pool.mean(axis=0)]
            freeze = ff
        else:
            k = min(cfg.style_clusters, len(pool))
            assign, cents = kmeans(pool, k, seed=seeding.derive_seed(dom_seed, "kmeans"))
            reps, _ = select_representatives(pool, assign, cents, cfg.representatives)
            targets = [pool[idx].mean(axis=0) for idx in reps]
            freeze = 0
        arts = [
            adapt_freeze_early(photo, t, freeze, steps=cfg.adapt_steps, lr=cfg.adapt_lr,
                               seed=seeding.derive_seed(dom_seed, "adapt", j))
            for j, t in enumerate(targets)
        ]
    return DomainModels(photo, arts)


def _domain_sequences(cfg, models, domain_index):
    """All image sequences of one domain as a float32 ``(S, n, H, W, C)`` array."""
    spec = models.photo.spec
    ff = _fuse_from(cfg, spec)
    s = cfg.sequences_per_domain
    latent_seeds = [seeding.derive_seed(cfg.seed, "latent", domain_index, j) for j in range(s)]
    anchors = [ANCHORS[j % 2] for j in range(s)]
    art_of = [(j // 2) % len(models.arts) for j in range(s)]
    z_true = np.stack([seeding.rng(ls).standard_normal(spec.latent_dim) for ls in latent_seeds])
    out = np.empty((s, len(cfg.alphas) + int(cfg.real_endpoint)) + spec.image_shape, dtype=np.float32)
    for a_idx, art in enumerate(models.arts):
        for anchor in ANCHORS:
            sel = [j for j in range(s) if art_of[j] == a_idx and anchors[j] == anchor]
            if not sel:
                continue
            z = z_true[sel]
            if cfg.real_endpoint:
                src = models.photo if anchor == "photo" else art
                noise = np.stack([seeding.rng(latent_seeds[j], "real").standard_normal(spec.image_shape) for j in sel])
                real = np.clip(generate_batch(src, z) + cfg.real_noise * noise, -1.0, 1.0)
                z, _, _ = invert_batch(
                    src, real, steps=cfg.inversion_steps, lr=cfg.inversion_lr,
                    seeds=[seeding.derive_seed(latent_seeds[j], "invert") for j in sel],
                )
            grid = _render_grid(models.photo, art, z, cfg.alphas, ff)
            if cfg.real_endpoint:
                grid = _attach_endpoint(grid, real, anchor)
            out[sel] = grid
    return out, latent_seeds, anchors


def build_dataset(cfg, out_dir, spec_template=None):
    """Synthesize every domain, write shards plus manifests, return the full manifest.

    Also writes ``train.txt``/``val.txt``/``test.txt`` from :func:`split`
    with ``cfg.split_ratios`` under the master seed.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create {out_dir}: {exc}") from exc
    records, digests = [], {}
    image_shape = None
    for d_idx, domain in enumerate(cfg.domains):
        models = domain_models(cfg, d_idx, spec_template)
        image_shape = models.photo.spec.image_shape
        digests[domain] = models.photo.digest() + "/" + "+".join(a.digest() for a in models.arts)
        images, latent_seeds, anchors = _domain_sequences(cfg, models, d_idx)
        shard = f"shard-{domain}.f32"
        if not np.all(np.isfinite(images)):
            raise DivergenceError(f"non-finite image values in {shard}; shard aborted")
        path = os.path.join(out_dir, shard)
        per_seq = images[0].nbytes
        try:
            with open(path, "wb") as fh:
                fh.write(np.ascontiguousarray(images, dtype="<f4").tobytes())
        except OSError as exc:
            raise FormatError(f"cannot write {path}: {exc}") from exc
        for j in range(cfg.sequences_per_domain):
            records.append(
                SequenceRecord(
                    seq_id=d_idx * cfg.sequences_per_domain + j,
                    domain=domain,
                    anchor=anchors[j] if cfg.real_endpoint else "none",
                    latent_seed=latent_seeds[j],
                    shard=shard,
                    offset=j * per_seq,
                    length=images.shape[1],
                )
            )
    manifest = DatasetManifest(
        records=records,
        alphas=cfg.alphas,
        image_shape=image_shape,
        seed=cfg.seed,
        config_digest=cfg.digest(),
        generator_digests=digests,
        split_ratios=cfg.split_ratios,
    )
    manifest.write(os.path.join(out_dir, "manifest.txt"))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        parts = split(manifest, cfg.split_ratios, cfg.seed)
    for part in parts:
        part.write(os.path.join(out_dir, f"{part.split_name}.txt"))
    return manifest


# -- loading ------------------------------------------------------------------


@dataclass
class SequenceSet:
    """A stack of equal-length sequences held as arrays.

    ``images`` is ``(S, n, H, W, C)`` float32 and ``ranks`` ``(S, n)``.
    """

    images: np.ndarray
    ranks: np.ndarray
    domains: list
    seq_ids: list

    def __len__(self):
        return self.images.shape[0]

    def sequence(self, i):
        return RankedSequence(
            images=self.images[i], ranks=self.ranks[i], alphas=(), domain_tag=self.domains[i],
            seq_id=self.seq_ids[i],
        )

    def filter_domains(self, keep):
        idx = [i for i, d in enumerate(self.domains) if d in keep]
        return self.take(idx)

    def take(self, idx):
        idx = list(idx)
        return SequenceSet(self.images[idx], self.ranks[idx], [self.domains[i] for i in idx],
                           [self.seq_ids[i] for i in idx])

    @classmethod
    def from_sequences(cls, seqs):
        lengths = {len(s) for s in seqs}
        if len(lengths) != 1:
            raise ShapeError(f"sequences have differing lengths {sorted(lengths)}")
        return cls(
            np.stack([np.asarray(s.images, dtype=np.float32) for s in seqs]),
            np.stack([np.asarray(s.ranks) for s in seqs]),
            [s.domain_tag for s in seqs],
            [s.seq_id for s in seqs],
        )


def load_sequences(data_dir, manifest):
    """Read the images of every sequence in ``manifest`` from its shards."""
    shape = tuple(manifest.image_shape)
    per_image = int(np.prod(shape))
    lengths = {r.length for r in manifest.records}
    if len(lengths) > 1:
        raise FormatError(f"manifest mixes sequence lengths {sorted(lengths)}")
    n = lengths.pop() if lengths else 0
    images = np.empty((len(manifest.records), n) + shape, dtype=np.float32)
    cache = {}
    for i, rec in enumerate(manifest.records):
        if rec.shard not in cache:
            path = os.path.join(data_dir, rec.shard)
            try:
                cache[rec.shard] = np.memmap(path, dtype="<f4", mode="r")
            except (OSError, ValueError) as exc:
                raise FormatError(f"cannot read shard {path}: {exc}") from exc
        data = cache[rec.shard]
        start = rec.offset // 4
        stop = start + rec.length * per_image
        if rec.offset % 4 or stop > data.shape[0]:
            raise FormatError(f"sequence {rec.seq_id} lies outside shard {rec.shard}")
        images[i] = np.asarray(data[start:stop]).reshape((rec.length,) + shape)
    ranks = np.tile(np.arange(n), (len(manifest.records), 1))
    return SequenceSet(images, ranks, [r.domain for r in manifest.records], [r.seq_id for r in manifest.records])


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def save_domain_generators(cfg, out_dir, spec_template=None):
    """Write each domain's photo and art generators as ARSC files (debug aid)."""
    paths = []
    for d_idx, domain in enumerate(cfg.domains):
        models = domain_models(cfg, d_idx, spec_template)
        p = os.path.join(out_dir, f"gen-{domain}-photo.arsc")
        checkpoint.save_generator(p, models.photo)
        paths.append(p)
        for j, art in enumerate(models.arts):
            p = os.path.join(out_dir, f"gen-{domain}-art{j}.arsc")
            checkpoint.save_generator(p, art)
            paths.append(p)
    return paths
