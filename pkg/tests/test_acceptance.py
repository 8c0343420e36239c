"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""
import os
import time

import numpy as np
import pytest

from metapipe.core import Rng, accuracy
from metapipe.dataset import synth_two_cluster
from metapipe.genetic import GaConfig, chromosome_to_int, evolve
from metapipe.knn import KnnModel, knn_predict
from metapipe.logreg import (
    LogRegHyperparams,
    logreg_fit,
    logreg_loss_and_grad,
    logreg_predict,
)
from metapipe.pca import (
    covariance_matrix,
    eig_symmetric,
    explained_variance_ratio,
    pca_fit,
    pca_transform,
    standardize_apply,
)
from metapipe.pipeline import (
    PipelineConfig,
    SynthSource,
    doubling_values,
    run_pipeline,
    write_report_files,
)
from metapipe.tree import Internal, Leaf, TreeHyperparams, information_gain, tree_fit, tree_predict
from oracles import charpoly_eigenvalues, exhaustive_knn


def report_line(number, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {number}] {status} - {detail}")
    assert passed, f"criterion {number}: {detail}"


def rand_matrix(rng, rows, cols, lo=-10.0, hi=10.0):
    return np.array([[rng.next_f64() * (hi - lo) + lo for _ in range(cols)] for _ in range(rows)])


def rand_symmetric(rng, n):
    A = rand_matrix(rng, n, n)
    return (A + A.T) / 2.0


def test_criterion_1_eigensolver_oracle():
    start = time.time()
    rng = Rng(0xE16)
    worst_gap = 0.0
    for i in range(500):
        n = 2 + rng.next_range(3)  # 2..4
        C = rand_symmetric(rng, n)
        vals, _ = eig_symmetric(C)
        oracle = charpoly_eigenvalues(C)
        worst_gap = max(worst_gap, float(np.max(np.abs(vals - oracle))))
    assert worst_gap <= 1e-6

    worst_residual = 0.0
    worst_trace = 0.0
    for n in (5, 10, 20, 35, 50):
        C = rand_symmetric(rng, n)
        vals, vecs = eig_symmetric(C)
        for j in range(n):
            r = np.linalg.norm(C @ vecs[:, j] - vals[j] * vecs[:, j])
            worst_residual = max(worst_residual, r / max(1.0, abs(vals[j])))
        worst_trace = max(worst_trace, abs(vals.sum() - np.trace(C)))
    assert worst_residual <= 1e-8
    assert worst_trace <= 1e-8
    elapsed = time.time() - start
    report_line(
        1,
        elapsed < 30.0,
        f"charpoly gap {worst_gap:.2e}, residual {worst_residual:.2e}, "
        f"trace gap {worst_trace:.2e}, {elapsed:.1f}s (< 30s)",
    )


def test_criterion_2_pca_identities():
    rng = Rng(0x9CA)
    X = rand_matrix(rng, 50, 8, -5.0, 5.0)
    model = pca_fit(X, 8)

    Z = standardize_apply(X, model.params)
    reconstruction = pca_transform(model, X) @ model.components
    rec_err = float(np.max(np.abs(reconstruction - Z)))
    assert rec_err <= 1e-8

    ratios = explained_variance_ratio(model)
    sum_err = abs(float(ratios.sum()) - 1.0)
    assert sum_err <= 1e-10
    assert np.all(np.diff(ratios) <= 1e-12)

    scores = pca_transform(model, X)
    S = covariance_matrix(scores)
    off = float(np.max(np.abs(S - np.diag(np.diag(S)))))
    assert off <= 1e-8
    report_line(
        2,
        True,
        f"reconstruction {rec_err:.2e}, ratio sum err {sum_err:.2e}, "
        f"score cov off-diag {off:.2e}",
    )


def test_criterion_3_knn_oracle():
    start = time.time()
    rng = Rng(0xC44)
    agreements = 0
    total = 0
    for _ in range(200):
        n = 2 + rng.next_range(49)  # 2..50
        d = 1 + rng.next_range(5)
        k = 1 + rng.next_range(min(n, 7))
        train = rand_matrix(rng, n, d, 0.0, 10.0)
        labels = np.array([rng.next_range(2) for _ in range(n)])
        test = rand_matrix(rng, 4, d, 0.0, 10.0)
        ours = knn_predict(KnnModel(train, labels, k), test)
        ref = exhaustive_knn(train, labels, test, k)
        agreements += int(np.sum(ours == ref))
        total += len(ref)
    elapsed = time.time() - start
    report_line(
        3,
        agreements == total and elapsed < 10.0,
        f"{agreements}/{total} predictions agree with the exhaustive "
        f"reference, {elapsed:.1f}s (< 10s)",
    )


def test_criterion_4_logistic_regression():
    rng = Rng(0x106)
    X = rand_matrix(rng, 30, 5, -2.0, 2.0)
    y = np.array([rng.next_range(2) for _ in range(30)])

    # analytic gradient vs central differences at 20 random points
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        w = np.array([rng.next_f64() * 2 - 1 for _ in range(6)])
        _, grad = logreg_loss_and_grad(X, y, w, 1e-3)
        fd = np.zeros(6)
        for i in range(6):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            fd[i] = (
                logreg_loss_and_grad(X, y, wp, 1e-3)[0]
                - logreg_loss_and_grad(X, y, wm, 1e-3)[0]
            ) / (2 * h)
        rel = np.max(np.abs(grad - fd) / np.maximum(1.0, np.abs(fd)))
        worst = max(worst, float(rel))
    assert worst <= 1e-5

    Xs, ys = synth_two_cluster(400, 10, 10.0, 0.5, Rng(1234))
    train_acc = accuracy(logreg_predict(logreg_fit(Xs, ys), Xs), ys)
    assert train_acc == 1.0

    # monotone loss under lr = 0.01
    w = np.zeros(11)
    prev = None
    monotone = True
    for _ in range(200):
        loss, grad = logreg_loss_and_grad(Xs, ys, w, 1e-4)
        if prev is not None and loss > prev + 1e-12:
            monotone = False
        prev = loss
        w = w - 0.01 * grad
    assert monotone

    hp = dict(l2_strength=0.1, tolerance=1e-5)
    batch = logreg_fit(Xs, ys, LogRegHyperparams(max_iter=20_000, **hp))
    saga = logreg_fit(Xs, ys, LogRegHyperparams(max_iter=500, solver="saga", seed=9, **hp))
    loss_batch, _ = logreg_loss_and_grad(Xs, ys, batch.weights, 0.1)
    loss_saga, _ = logreg_loss_and_grad(Xs, ys, saga.weights, 0.1)
    gap = abs(loss_batch - loss_saga)
    assert gap <= 1e-3
    report_line(
        4,
        True,
        f"gradient rel err {worst:.2e}, train acc {train_acc}, loss monotone, "
        f"saga-batch gap {gap:.2e} (<= 1e-3)",
    )


def walk_nodes(node, out):
    if isinstance(node, Internal):
        out.append(node)
        walk_nodes(node.left, out)
        walk_nodes(node.right, out)


def node_counts(node):
    if isinstance(node, Leaf):
        return node.counts
    a = node_counts(node.left)
    b = node_counts(node.right)
    return (a[0] + b[0], a[1] + b[1])


def test_criterion_5_decision_tree():
    rng = Rng(0x7EE)
    checked_nodes = 0
    for trial in range(50):
        n = 10 + rng.next_range(41)
        d = 1 + rng.next_range(4)
        X = rand_matrix(rng, n, d, 0.0, 1.0)  # continuous draws: no duplicates
        y = np.array([rng.next_range(2) for _ in range(n)])
        model = tree_fit(X, y, TreeHyperparams(max_depth=None))
        assert accuracy(tree_predict(model, X), y) == 1.0
        internals = []
        walk_nodes(model.root, internals)
        for node in internals:
            gain = information_gain(
                node_counts(node),
                node_counts(node.left),
                node_counts(node.right),
                "gini",
            )
            assert gain > 0.0
            checked_nodes += 1

    canonical = tree_fit(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0, 0, 1, 1]))
    assert isinstance(canonical.root, Internal)
    assert canonical.root.threshold == 2.5
    report_line(
        5,
        True,
        f"50 datasets at 100% train accuracy, {checked_nodes} internal nodes "
        "with positive gain, canonical split at 2.5",
    )


def test_criterion_6_genetic_algorithm():
    # elitism monotonicity over 100 random fitness tables x 10 seeds
    table_rng = Rng(0x6A)
    for table_idx in range(100):
        table = [table_rng.next_f64() for _ in range(64)]
        fitness = lambda c: table[chromosome_to_int(c)]
        for seed in range(10):
            cfg = GaConfig(population_size=8, max_generations=10, seed=seed * 997 + table_idx)
            _, hist = evolve(cfg, 6, fitness)
            assert all(
                b >= a for a, b in zip(hist.best_fitness, hist.best_fitness[1:])
            ), "elitism violated"

    # fraction-of-ones benchmark: measured 20/20 over these seeds, bound >= 18
    fraction = lambda c: float(c.sum()) / len(c)
    hits = 0
    for seed in range(20):
        cfg = GaConfig(population_size=20, max_generations=200, mutation_prob=0.25, seed=seed)
        _, hist = evolve(cfg, 16, fraction)
        hits += hist.best_fitness[-1] == 1.0
    assert hits >= 18

    cfg = GaConfig(population_size=12, max_generations=30, seed=77)
    best_a, hist_a = evolve(cfg, 10, fraction)
    best_b, hist_b = evolve(cfg, 10, fraction)
    deterministic = (
        np.array_equal(best_a, best_b)
        and hist_a.best_fitness == hist_b.best_fitness
        and hist_a.mean_fitness == hist_b.mean_fitness
    )
    assert deterministic
    report_line(
        6,
        True,
        f"elitism monotone on 1000 runs, {hits}/20 seeds reach the optimum "
        "(>= 18 required), identical histories under a fixed seed",
    )


def e2e_config():
    return PipelineConfig(
        source=SynthSource(n=600, d=20, separation=6.0, noise=1.0),
        pca_components=5,
        ga_enabled=True,
        ga_population=10,
        ga_generations=10,
        classifier="all",
        seed=2024,
    )


def test_criterion_7_end_to_end(tmp_path):
    start = time.time()
    report_a = run_pipeline(e2e_config())
    files_a = write_report_files(report_a, tmp_path / "a")
    files_b = write_report_files(run_pipeline(e2e_config()), tmp_path / "b")

    accs = {name: res.test_accuracy for name, res in report_a.results.items()}
    assert set(accs) == {"knn", "logreg", "tree"}
    assert all(v >= 0.9 for v in accs.values()), accs

    identical = all(
        files_a[name].read_bytes() == files_b[name].read_bytes()
        for name in ("report.txt", "report.csv", "ga_history.csv")
    )
    assert identical
    elapsed = time.time() - start
    report_line(
        7,
        elapsed < 60.0,
        f"accuracies {accs} all >= 0.9, byte-identical reports, "
        f"{elapsed:.1f}s (< 60s)",
    )


def test_criterion_8_sweep_tables(tmp_path):
    from metapipe.cli import main

    start = time.time()
    base = [
        "--seed", "2024", "--synth-n", "600", "--synth-d", "20",
        "--synth-separation", "6", "--synth-noise", "1", "--pca-components", "5",
    ]
    train_size = 480  # 600 rows, test_fraction 0.2
    k_limit = min(320, train_size)

    k_dir = tmp_path / "sweep_k"
    assert main(["sweep-k", "--k-doubling-max", str(k_limit), "--out", str(k_dir),
                 "--no-ga", *base]) == 0
    k_lines = (k_dir / "report.csv").read_text().splitlines()
    assert k_lines[0] == "k,knn_acc"
    assert [l.split(",")[0] for l in k_lines[1:]] == [str(v) for v in doubling_values(k_limit)]
    assert all(len(l.split(",")) == 2 for l in k_lines[1:])

    comp_dir = tmp_path / "sweep_components"
    assert main(["sweep-components", "--values", "1,2,4,8,16,20", "--out", str(comp_dir),
                 "--no-ga", *base]) == 0
    comp_lines = (comp_dir / "report.csv").read_text().splitlines()
    assert comp_lines[0] == "components,knn_acc,logreg_acc,tree_acc"
    assert len(comp_lines) == 7
    assert all(len(l.split(",")) == 4 for l in comp_lines[1:])

    ablate_dir = tmp_path / "ablate"
    assert main(["ablate-ga", "--repeats", "3", "--out", str(ablate_dir),
                 "--ga-population", "10", "--ga-generations", "10", *base]) == 0
    ablate_lines = (ablate_dir / "report.csv").read_text().splitlines()
    assert ablate_lines[0] == "repeat,ga_enabled,knn_acc,logreg_acc,tree_acc"
    assert len(ablate_lines) == 7

    elapsed = time.time() - start
    report_line(
        8,
        elapsed < 300.0,
        f"sweep-k ({len(k_lines) - 1} rows), sweep-components (6 rows), "
        f"ablate-ga (6 rows) all well-formed, {elapsed:.1f}s (< 5min)",
    )


REAL_DATA_DIR = os.environ.get("METAPIPE_REAL_DATA_DIR")


@pytest.mark.skipif(
    not REAL_DATA_DIR,
    reason="optional: set METAPIPE_REAL_DATA_DIR to an image dir with labels.csv",
)
def test_criterion_9_optional_real_dataset(tmp_path):
    from metapipe.pipeline import ImageSource

    config = PipelineConfig(
        source=ImageSource(
            image_dir=REAL_DATA_DIR, labels_csv=os.path.join(REAL_DATA_DIR, "labels.csv")
        ),
        dataset_size=6250,
        pca_components=250,
        ga_enabled=True,
        ga_population=29,
        ga_generations=29,
        classifier="all",
        logreg=LogRegHyperparams(solver="saga"),
        seed=2022,
    )
    report = run_pipeline(config)
    accs = {name: res.test_accuracy for name, res in report.results.items()}
    report_line(
        9,
        all(0.60 <= v <= 0.80 for v in accs.values()),
        f"real-data accuracies {accs} (expected within [0.60, 0.80])",
    )
