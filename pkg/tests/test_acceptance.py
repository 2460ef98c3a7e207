"""Exit criteria for the package, one test per criterion.

The terminal summary prints a PASS/FAIL line for each criterion name.
"""

import hashlib
import itertools
import math
import os
import time

import numpy as np
import pytest

from artscore import dataset_builder as db
from artscore import evaluation as ev
from artscore import model_zoo as mz
from artscore import pipeline, ranker
from artscore.ranker import losses

pytestmark = pytest.mark.acceptance

LISTMLE = "ListMLE correctness"
INTERP = "Interpolation invariants"
E2E = "End-to-end desk-scale training"
SWAP = "Swap-augmentation ablation direction"
SPEARMAN = "Spearman anchor"
AGG = "Aggregation correctness"
MCNEMAR = "McNemar"
REPRO = "Reproducibility"


def _fd(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


# -- ranking loss -------------------------------------------------------------

@pytest.mark.criterion(LISTMLE)
def test_listmle_correctness(request):
    t0 = time.perf_counter()
    assert abs(losses.listmle_loss([0.4], [0]) - 0.0) < 1e-9
    assert abs(losses.listmle_loss([2.0, 1.0], [0, 1]) - math.log(1 + math.exp(-1))) < 1e-9
    assert abs(losses.listmle_loss([0.0, 0.0, 0.0], [0, 1, 2]) - math.log(6)) < 1e-9
    r = np.random.default_rng(20240)
    worst = 0.0
    for _ in range(100):
        n = int(r.integers(2, 13))
        s, ranking = r.normal(0, 1.5, n), r.permutation(n)
        g = losses.listmle_grad(s, ranking)
        fd = _fd(lambda x: losses.listmle_loss(x, ranking), s)
        rel = np.max(np.abs(g - fd)) / max(np.max(np.abs(g)), np.max(np.abs(fd)))
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    request.node.criterion_note = f"max rel err {worst:.2e}, {elapsed:.2f}s"
    assert worst < 1e-6
    assert elapsed < 5.0


# -- interpolation ------------------------------------------------------------

@pytest.mark.criterion(INTERP)
def test_interpolation_invariants(request):
    photo = mz.new_photoreal_generator(mz.GeneratorSpec(seed=101))
    art = mz.perturb_artistic(photo, 6, 0.3, 102)
    fuse = mz.default_fuse_from(photo.spec)
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in np.linspace(0.0, 1.0, 21):
        mixed = mz.interpolate(photo, art, alpha, fuse)
        for i, ((w, b), (wp, bp), (wa, ba)) in enumerate(zip(mixed.layers, photo.layers, art.layers)):
            if i < fuse:
                assert np.array_equal(w, wp) and np.array_equal(b, bp)
                continue
            for got, p, a in ((w, wp, wa), (b, bp, ba)):
                err = np.max(np.abs(got - ((1 - alpha) * p + alpha * a)))
                scale = max(np.max(np.abs(p)), np.max(np.abs(a)))
                worst = max(worst, err / scale)
    for alpha, ref in ((0.0, photo), (1.0, art)):
        mixed = mz.interpolate(photo, art, alpha, fuse)
        for i in range(fuse, photo.spec.n_layers):
            assert np.array_equal(mixed.layers[i][0], ref.layers[i][0])
            assert np.array_equal(mixed.layers[i][1], ref.layers[i][1])
    elapsed = time.perf_counter() - t0
    request.node.criterion_note = f"max affine err {worst:.1e} x eps^-1={worst / np.finfo(float).eps:.1f}, {elapsed:.3f}s"
    assert worst <= 4 * np.finfo(float).eps
    assert elapsed < 1.0


# -- end-to-end ---------------------------------------------------------------

@pytest.fixture(scope="session")
def desk_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk") / "dataset"
    cfg = db.DatasetConfig(sequences_per_domain=700, seed=7)
    t0 = time.perf_counter()
    db.build_dataset(cfg, out)
    build_s = time.perf_counter() - t0
    return out, pipeline.load_splits(out), build_s


@pytest.mark.slow
@pytest.mark.criterion(E2E)
def test_end_to_end_training(desk_dataset, request):
    _, (tr, va, te), build_s = desk_dataset
    assert len(tr) + len(va) + len(te) >= 2000
    assert tr.images.shape[1] == 12 and len(set(tr.domains)) == 3
    t0 = time.perf_counter()
    params, report = ranker.train(tr, va, ranker.TrainConfig(epochs=10, seed=0))
    m = pipeline.evaluate_scorer(params, te, seed=0)
    elapsed = build_s + time.perf_counter() - t0
    request.node.criterion_note = (f"NDCG {m['test_ndcg']:.4f}, within {m['within_accuracy']:.4f}, "
                                   f"best epoch {report.best_epoch}, {elapsed:.0f}s")
    assert m["test_ndcg"] >= 0.95
    assert m["within_accuracy"] >= 0.95
    assert elapsed < 15 * 60


@pytest.mark.slow
@pytest.mark.criterion(SWAP)
def test_swap_ablation_direction(desk_dataset, request):
    _, (tr, va, te), _ = desk_dataset
    wins, notes = 0, []
    for seed in (0, 1, 2):
        acc = {}
        for name, p in (("swap", 0.5), ("no-swap", 0.0)):
            params, _ = ranker.train(tr, va, ranker.TrainConfig(seed=seed, swap_probability=p))
            acc[name] = pipeline.evaluate_scorer(params, te, seed=seed)["cross_accuracy"]
        wins += acc["swap"] >= acc["no-swap"]
        notes.append(f"seed {seed}: {acc['swap']:.4f} vs {acc['no-swap']:.4f}")
    request.node.criterion_note = "; ".join(notes)
    print(request.node.criterion_note)
    assert wins >= 2


# -- statistics ---------------------------------------------------------------

@pytest.mark.criterion(SPEARMAN)
def test_spearman_anchor_and_permutation_oracle(request):
    truth = np.arange(1, 13)
    other = np.array([6, 3, 2, 1, 5, 11, 4, 12, 8, 7, 9, 10])
    assert int(np.sum((truth - other) ** 2)) == 104
    r = ev.spearman(truth, other)
    assert abs(r.statistic - 0.6364) <= 5e-5
    assert abs(r.p_value - 0.0261) <= 5e-4
    worst = {}
    for n in range(3, 8):
        x = np.arange(n)
        for perm in itertools.permutations(range(n)):
            y = np.array(perm)
            if np.all(y == y[0]):
                continue
            d2 = float(np.sum((x - y) ** 2))
            res = ev.spearman(x, y)
            assert abs(res.statistic - (1 - 6 * d2 / (n * (n * n - 1)))) < 1e-12
            gap = abs(res.p_value - ev.spearman_permutation_pvalue(x, y))
            worst[n] = max(worst.get(n, 0.0), gap)
            assert gap <= ev.PERMUTATION_GAP[n]
    request.node.criterion_note = (f"rho {r.statistic:.6f} p {r.p_value:.6f}; max p gaps "
                                   + ", ".join(f"n={n}:{g:.3f}" for n, g in worst.items()))


def _add_oracle(values, orient):
    rows, cols = values.shape
    out = []
    for i in range(rows):
        total = 0.0
        for j in range(cols):
            col = [values[k][j] for k in range(rows)]
            lo, hi = min(col), max(col)
            v = (values[i][j] - lo) / (hi - lo)
            total += 1 - v if orient[j] == ev.LARGER else v
        out.append(total)
    return out


def _mul_oracle(values, orient):
    rows, cols = values.shape
    out = []
    for i in range(rows):
        prod = 1.0
        for j in range(cols):
            col = [values[k][j] for k in range(rows)]
            lo, hi = min(col), max(col)
            v = (values[i][j] - lo) / (hi - lo)
            prod *= 1 + (1 - v if orient[j] == ev.LARGER else v)
        out.append(prod)
    return out


_MONOTONE = (np.exp, np.arctan, lambda x: x ** 3 + x, lambda x: 5 * x - 2, lambda x: np.log1p(np.exp(x)))


@pytest.mark.criterion(AGG)
def test_aggregation_correctness():
    r = np.random.default_rng(606)
    for _ in range(100):
        rows, cols = int(r.integers(2, 9)), int(r.integers(1, 6))
        values = r.normal(0, 2, (rows, cols))
        orient = [ev.SMALLER if x else ev.LARGER for x in r.integers(0, 2, cols)]
        table = ev.MetricTable([f"a{i}" for i in range(rows)], [f"m{j}" for j in range(cols)], values, orient)
        np.testing.assert_allclose(ev.aggregate_add(table), _add_oracle(values, orient), rtol=0, atol=1e-12)
        np.testing.assert_allclose(ev.aggregate_multiply(table), _mul_oracle(values, orient), rtol=0, atol=1e-12)
        warped = values.copy()
        for j in range(cols):
            warped[:, j] = _MONOTONE[int(r.integers(len(_MONOTONE)))](values[:, j])
        wtable = ev.MetricTable(table.algorithms, table.metrics, warped, orient)
        base = ev.aggregate_rank(table)
        assert np.array_equal(base, ev.aggregate_rank(wtable))
        assert np.array_equal(np.argsort(base, kind="stable"), np.argsort(ev.aggregate_rank(wtable), kind="stable"))
    # two normalised metrics combine as (1 + a)(1 + b)
    values = np.array([[0.0, 1.0], [0.25, 0.5], [1.0, 0.0]])
    table = ev.MetricTable(["x", "y", "z"], ["lpips", "style"], values, [ev.SMALLER, ev.SMALLER])
    a, b = values[:, 0], values[:, 1]
    np.testing.assert_allclose(ev.aggregate_multiply(table), (1 + a) * (1 + b), rtol=0, atol=1e-12)


@pytest.mark.criterion(MCNEMAR)
def test_mcnemar():
    assert abs(ev.mcnemar(15, 5, corrected=True).statistic - 4.05) < 1e-9
    r = ev.mcnemar(20, 5)
    assert abs(r.statistic - 9.0) < 1e-9
    assert abs(r.p_value - 0.0027) < 1e-4
    rng = np.random.default_rng(77)
    for _ in range(1000):
        b, c = (int(v) for v in rng.integers(0, 200, 2))
        if b + c == 0:
            c = 1
        for corrected in (False, True):
            x, y = ev.mcnemar(b, c, corrected), ev.mcnemar(c, b, corrected)
            assert x.statistic == y.statistic and x.p_value == y.p_value


# -- reproducibility ----------------------------------------------------------

def _write_experiment(root, out):
    root.mkdir(parents=True, exist_ok=True)
    (root / "data.cfg").write_text("sequences_per_domain=10\ninversion_steps=30\n")
    (root / "train.cfg").write_text("epochs=2\nbatch_sequences=8\n")
    (root / "exp.cfg").write_text(f"dataset_config=data.cfg\ntrain_config=train.cfg\nout={out}\nseed=13\n")
    return pipeline.ExperimentConfig.from_file(root / "exp.cfg")


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.mark.criterion(REPRO)
def test_pipeline_reproducible(tmp_path):
    a = _write_experiment(tmp_path / "a", "run")
    b = _write_experiment(tmp_path / "b", "run")
    pipeline.run_pipeline(a)
    pipeline.run_pipeline(b)
    files = ["dataset/manifest.txt", "dataset/train.txt", "dataset/val.txt", "dataset/test.txt",
             "scorer.arsc", "train_report.txt", "train_report.csv", "summary.txt", "summary.csv"]
    files += [f"dataset/{n}" for n in sorted(os.listdir(tmp_path / "a" / "run" / "dataset")) if n.endswith(".f32")]
    for name in files:
        assert _sha(tmp_path / "a" / "run" / name) == _sha(tmp_path / "b" / "run" / name), name
    # a rerun into the same directory reproduces it as well
    before = _sha(tmp_path / "a" / "run" / "summary.txt")
    pipeline.run_pipeline(a)
    assert _sha(tmp_path / "a" / "run" / "summary.txt") == before
