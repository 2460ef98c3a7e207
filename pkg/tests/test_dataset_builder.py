import hashlib
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artscore import dataset_builder as db
from artscore import model_zoo as mz
from artscore.errors import ConfigError, ShapeError


# -- style --------------------------------------------------------------------

def test_gram_single_channel():
    assert db.gram_matrix([[1.0, 2.0, 2.0]]).tolist() == [[3.0]]


def test_gram_zero():
    assert np.array_equal(db.gram_matrix(np.zeros((3, 5))), np.zeros((3, 3)))


def test_gram_empty_rejected():
    with pytest.raises(ShapeError):
        db.gram_matrix(np.zeros((3, 0)))


@pytest.mark.parametrize("seed", range(10))
def test_gram_is_symmetric_psd(seed):
    f = np.random.default_rng(seed).standard_normal((4, 7))
    g = db.gram_matrix(f)
    assert np.allclose(g, g.T)
    assert np.linalg.eigvalsh(g).min() >= -1e-9


def test_style_vector_constant_image():
    assert np.allclose(db.style_vector(np.full((4, 4, 3), 0.5)), 0.25)


def test_style_vector_symmetric_entries():
    v = db.style_vector(np.random.default_rng(0).uniform(-1, 1, (4, 4, 3)))
    assert v.shape == (9,)
    m = v.reshape(3, 3)
    assert np.array_equal(m, m.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_style_vector_ignores_pixel_order(seed):
    r = np.random.default_rng(seed)
    img = r.uniform(-1, 1, (5, 4, 3))
    perm = r.permutation(20)
    shuffled = img.reshape(20, 3)[perm].reshape(5, 4, 3)
    np.testing.assert_allclose(db.style_vector(img), db.style_vector(shuffled), atol=1e-12)


def test_batched_style_vectors_match():
    imgs = np.random.default_rng(1).uniform(-1, 1, (6, 4, 4, 3))
    np.testing.assert_allclose(db.style_vectors(imgs), np.stack([db.style_vector(i) for i in imgs]), atol=1e-14)


# -- clustering ---------------------------------------------------------------

def _blobs(seed=0):
    r = np.random.default_rng(seed)
    a = r.normal(0.0, 0.5, (20, 3))
    b = r.normal(0.0, 0.5, (15, 3)) + np.array([10.0, 0, 0])
    return np.vstack([a, b])


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_recovers_blobs(seed):
    pts = _blobs(seed)
    assign, _ = db.kmeans(pts, 2, seed=seed)
    assert len(set(assign[:20])) == 1 and len(set(assign[20:])) == 1
    assert assign[0] != assign[20]


def test_kmeans_k_equals_n():
    pts = np.random.default_rng(3).standard_normal((6, 2))
    assign, cents = db.kmeans(pts, 6, seed=1)
    assert sorted(assign.tolist()) == list(range(6))
    assert db.inertia(pts, assign, cents) == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("seed", range(8))
def test_kmeans_inertia_non_increasing(seed):
    pts = np.random.default_rng(seed).standard_normal((60, 4))
    values = []
    for it in range(1, 12):
        a, c = db.kmeans(pts, 5, seed=seed, max_iter=it)
        values.append(db.inertia(pts, a, c))
    assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))


def test_kmeans_too_many_clusters():
    with pytest.raises(ConfigError):
        db.kmeans(np.zeros((3, 2)), 4)


def test_kmeans_reseeds_empty_cluster():
    pts = np.ones((5, 2))
    assign, _ = db.kmeans(pts, 2, seed=0, max_iter=5)
    assert set(assign.tolist()) == {0, 1}


def test_representatives_nearest_and_ties():
    pts = np.array([[1.0], [-1.0], [3.0], [0.5], [10.0]])
    assign = np.array([0, 0, 0, 0, 1])
    cents = np.array([[0.0], [10.0]])
    reps, short = db.select_representatives(pts, assign, cents, 2)
    # 0 and 1 are equidistant; 3 (0.5) is nearest
    assert reps[0].tolist() == [3, 0]
    assert reps[1].tolist() == [4] and short == [False, True]


def test_representatives_full_cluster_and_single_nearest():
    r = np.random.default_rng(5)
    pts = r.standard_normal((30, 3))
    assign, cents = db.kmeans(pts, 3, seed=2)
    sizes = np.bincount(assign, minlength=3)
    full, _ = db.select_representatives(pts, assign, cents, int(sizes.max()))
    for j in range(3):
        assert sorted(full[j].tolist()) == np.flatnonzero(assign == j).tolist()
    one, _ = db.select_representatives(pts, assign, cents, 1)
    for j in range(3):
        members = np.flatnonzero(assign == j)
        best = min(members, key=lambda i: (np.linalg.norm(pts[i] - cents[j]), i))
        assert one[j].tolist() == [best]


# -- sequences ----------------------------------------------------------------

@pytest.fixture(scope="module")
def pair():
    photo = mz.new_photoreal_generator(mz.GeneratorSpec(seed=21))
    return photo, mz.perturb_artistic(photo, 6, 0.05, 22)


def test_sequence_with_endpoint_has_twelve(pair):
    photo, art = pair
    z = np.zeros(16)
    real = mz.generate(photo, z)
    seq = db.build_sequence(photo, art, z, endpoint=real, anchor="photo")
    assert len(seq) == 12 and seq.ranks.tolist() == list(range(12))
    assert np.array_equal(seq.images[0], real)
    painted = db.build_sequence(photo, art, z, endpoint=real, anchor="painting")
    assert np.array_equal(painted.images[-1], real)


def test_single_alpha_sequence(pair):
    seq = db.build_sequence(*pair, np.ones(16), alphas=[0.0])
    assert len(seq) == 1 and seq.ranks.tolist() == [0]


def test_sequence_deterministic_and_endpoints(pair):
    photo, art = pair
    z = np.random.default_rng(0).standard_normal(16)
    a = db.build_sequence(photo, art, z)
    b = db.build_sequence(photo, art, z)
    assert np.array_equal(a.images, b.images)
    assert np.allclose(a.images[0], mz.generate(photo, z))
    assert np.allclose(a.images[-1], mz.generate(art, z))


def test_sequence_alpha_validation(pair):
    with pytest.raises(ConfigError):
        db.build_sequence(*pair, np.zeros(16), alphas=[0.2, 0.1])


# -- datasets -----------------------------------------------------------------

TINY = dict(sequences_per_domain=6, inversion_steps=20)


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_build_dataset_bookkeeping(tmp_path):
    cfg = db.DatasetConfig(sequences_per_domain=100, inversion_steps=5, seed=3)
    m = db.build_dataset(cfg, tmp_path)
    assert len(m) == 300 and m.counts_by_domain() == {"face": 100, "horse": 100, "landscape": 100}
    parts = [db.load_manifest(tmp_path / f"{n}.txt") for n in ("train", "val", "test")]
    assert [len(p) for p in parts] == [240, 30, 30]
    back = db.load_manifest(tmp_path / "manifest.txt")
    assert back.records == m.records and back.config_digest == cfg.digest()


def test_build_is_byte_reproducible(tmp_path):
    cfg = db.DatasetConfig(**TINY, seed=8)
    db.build_dataset(cfg, tmp_path / "a")
    db.build_dataset(cfg, tmp_path / "b")
    for name in ("manifest.txt", "train.txt", "shard-face.f32", "shard-horse.f32", "shard-landscape.f32"):
        assert _sha(tmp_path / "a" / name) == _sha(tmp_path / "b" / name)
    db.build_dataset(db.DatasetConfig(**TINY, seed=9), tmp_path / "c")
    assert _sha(tmp_path / "a" / "shard-face.f32") != _sha(tmp_path / "c" / "shard-face.f32")


def test_stored_sequences_match_direct_rendering(tmp_path):
    cfg = db.DatasetConfig(sequences_per_domain=4, real_endpoint=False, domains=("face",), seed=2)
    m = db.build_dataset(cfg, tmp_path)
    data = db.load_sequences(tmp_path, m)
    models = db.domain_models(cfg, 0)
    from artscore import seeding
    for j, rec in enumerate(m.records):
        z = seeding.rng(rec.latent_seed).standard_normal(16)
        seq = db.build_sequence(models.photo, models.arts[0], z, cfg.alphas)
        np.testing.assert_allclose(data.images[j], seq.images, atol=1e-6)


def test_endpoint_placement_follows_anchor(tmp_path):
    cfg = db.DatasetConfig(**TINY, domains=("face",), seed=4)
    m = db.build_dataset(cfg, tmp_path)
    data = db.load_sequences(tmp_path, m)
    assert data.images.shape[1] == 12
    anchors = [r.anchor for r in m.records]
    assert anchors[:2] == ["photo", "painting"]


@pytest.mark.parametrize("route", ["freezeg", "fewshot"])
def test_adapted_routes_build(tmp_path, route):
    cfg = db.DatasetConfig(sequences_per_domain=4, inversion_steps=5, domains=("horse",), art_route=route,
                           pool_size=24, style_clusters=2, representatives=3, adapt_steps=10)
    m = db.build_dataset(cfg, tmp_path)
    data = db.load_sequences(tmp_path, m)
    assert np.all(np.isfinite(data.images)) and np.all(np.abs(data.images) <= 1.0)
    models = db.domain_models(cfg, 0)
    assert len(models.arts) == (1 if route == "freezeg" else 2)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "d.cfg"
    path.write_text("# demo\ndomains=face,horse\nsequences_per_domain=7\nalphas=0,0.5,1\nseed=5\n"
                    "split_ratios=0.6,0.2,0.2\nfuse_from=3\n")
    cfg = db.DatasetConfig.from_file(path)
    assert cfg.domains == ("face", "horse") and cfg.alphas == (0.0, 0.5, 1.0) and cfg.fuse_from == 3
    assert db.DatasetConfig.from_mapping({k: str(v) for k, v in cfg.to_mapping().items()}) == cfg


@pytest.mark.parametrize("text", ["bogus=1", "split_ratios=0.5,0.5,0.5", "art_route=gan", "alphas=0.5,0.1"])
def test_bad_config(tmp_path, text):
    path = tmp_path / "d.cfg"
    path.write_text(text + "\n")
    with pytest.raises(ConfigError):
        db.DatasetConfig.from_file(path)


# -- splits -------------------------------------------------------------------

def _manifest(n):
    recs = [db.SequenceRecord(i, "face", "photo", i, "s", 0, 12) for i in range(n)]
    return db.DatasetManifest(recs, (0.0,), (16, 16, 3), seed=0)


def test_split_all_training_warns():
    with pytest.warns(UserWarning):
        tr, va, te = db.split(_manifest(7), (1.0, 0.0, 0.0), seed=1)
    assert (len(tr), len(va), len(te)) == (7, 0, 0)


def test_split_floor_rule():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parts = db.split(_manifest(10), (0.8, 0.1, 0.1), seed=0)
    assert [len(p) for p in parts] == [8, 1, 1]


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.floats(0.05, 0.9), st.floats(0.0, 1.0), st.integers(0, 1000))
def test_split_disjoint_and_complete(n, train_share, val_frac, seed):
    val = (1 - train_share) * val_frac
    ratios = (train_share, val, 1 - train_share - val)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        parts = db.split(_manifest(n), ratios, seed)
    ids = [set(r.seq_id for r in p.records) for p in parts]
    assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])
    assert ids[0] | ids[1] | ids[2] == set(range(n))


def test_split_bad_ratios():
    with pytest.raises(ConfigError):
        db.split(_manifest(4), (0.5, 0.2, 0.2))
