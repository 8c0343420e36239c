"""Versioned line-oriented text persistence for fitted models.

Every file starts with a ``metapipe-<kind> v1`` header. Floats are written
with 17 significant digits, which round-trips IEEE-754 doubles exactly.
"""
from __future__ import annotations

import numpy as np

from .knn import KnnModel
from .logreg import LogRegHyperparams, LogRegModel
from .pca import PcaModel, StandardizationParams
from .tree import Internal, Leaf, TreeHyperparams, TreeModel

PCA_HEADER = "metapipe-pca v1"
KNN_HEADER = "metapipe-knn v1"
LOGREG_HEADER = "metapipe-logreg v1"
TREE_HEADER = "metapipe-tree v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_row(values) -> str:
    return " ".join(_fmt(v) for v in values)


def _parse_row(line: str) -> np.ndarray:
    return np.array([float(tok) for tok in line.split()], dtype=np.float64)


def _check_header(lines: list[str], expected: str, path) -> None:
    if not lines or lines[0] != expected:
        found = lines[0] if lines else "<empty file>"
        raise ValueError(f"{path}: expected header {expected!r}, found {found!r}")


def save_pca(model: PcaModel, path) -> None:
    k, d = model.components.shape
    lines = [
        PCA_HEADER,
        f"n_features {d}",
        f"n_components {k}",
        f"total_variance {_fmt(model.total_variance)}",
        "means " + _fmt_row(model.params.means),
        "stds " + _fmt_row(model.params.stds),
        "eigenvalues " + _fmt_row(model.eigenvalues),
    ]
    lines += ["component " + _fmt_row(row) for row in model.components]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pca(path) -> PcaModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    _check_header(lines, PCA_HEADER, path)
    d = int(lines[1].split()[1])
    k = int(lines[2].split()[1])
    total_variance = float(lines[3].split()[1])
    means = _parse_row(lines[4].removeprefix("means "))
    stds = _parse_row(lines[5].removeprefix("stds "))
    eigenvalues = _parse_row(lines[6].removeprefix("eigenvalues "))
    components = np.vstack(
        [_parse_row(lines[7 + i].removeprefix("component ")) for i in range(k)]
    )
    if components.shape != (k, d) or len(means) != d or len(eigenvalues) != k:
        raise ValueError(f"{path}: inconsistent dimensions")
    return PcaModel(
        params=StandardizationParams(means=means, stds=stds),
        components=components,
        eigenvalues=eigenvalues,
        total_variance=total_variance,
    )


def save_knn(model: KnnModel, path) -> None:
    n, d = model.train_X.shape
    lines = [KNN_HEADER, f"k {model.k}", f"n_train {n}", f"n_features {d}"]
    lines += ["row " + _fmt_row(row) for row in model.train_X]
    lines.append("labels " + " ".join(str(int(v)) for v in model.train_y))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_knn(path) -> KnnModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    _check_header(lines, KNN_HEADER, path)
    k = int(lines[1].split()[1])
    n = int(lines[2].split()[1])
    train_X = np.vstack([_parse_row(lines[4 + i].removeprefix("row ")) for i in range(n)])
    train_y = np.array([int(tok) for tok in lines[4 + n].removeprefix("labels ").split()])
    return KnnModel(train_X=train_X, train_y=train_y, k=k)


def save_logreg(model: LogRegModel, path) -> None:
    hp = model.hyperparams
    lines = [
        LOGREG_HEADER,
        f"n_features {len(model.weights) - 1}",
        "weights " + _fmt_row(model.weights),
        f"learning_rate {_fmt(hp.learning_rate)}",
        f"max_iter {hp.max_iter}",
        f"tolerance {_fmt(hp.tolerance)}",
        f"l2_strength {_fmt(hp.l2_strength)}",
        f"solver {hp.solver}",
        f"seed {hp.seed}",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_logreg(path) -> LogRegModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    _check_header(lines, LOGREG_HEADER, path)
    weights = _parse_row(lines[2].removeprefix("weights "))
    hp = LogRegHyperparams(
        learning_rate=float(lines[3].split()[1]),
        max_iter=int(lines[4].split()[1]),
        tolerance=float(lines[5].split()[1]),
        l2_strength=float(lines[6].split()[1]),
        solver=lines[7].split()[1],
        seed=int(lines[8].split()[1]),
    )
    return LogRegModel(weights=weights, hyperparams=hp)


def _write_node(node, out: list[str]) -> None:
    if isinstance(node, Leaf):
        out.append(f"leaf {node.label} {node.counts[0]} {node.counts[1]}")
    else:
        out.append(f"node {node.feature} {_fmt(node.threshold)}")
        _write_node(node.left, out)
        _write_node(node.right, out)


def _read_node(lines: list[str], pos: int):
    parts = lines[pos].split()
    if parts[0] == "leaf":
        return Leaf(label=int(parts[1]), counts=(int(parts[2]), int(parts[3]))), pos + 1
    if parts[0] == "node":
        left, nxt = _read_node(lines, pos + 1)
        right, nxt = _read_node(lines, nxt)
        return Internal(
            feature=int(parts[1]), threshold=float(parts[2]), left=left, right=right
        ), nxt
    raise ValueError(f"unexpected tree line {lines[pos]!r}")


def save_tree(model: TreeModel, path) -> None:
    hp = model.hyperparams
    depth = "none" if hp.max_depth is None else str(hp.max_depth)
    lines = [
        TREE_HEADER,
        f"n_features {model.n_features}",
        f"max_depth {depth}",
        f"min_samples_split {hp.min_samples_split}",
        f"impurity {hp.impurity_kind}",
    ]
    _write_node(model.root, lines)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_tree(path) -> TreeModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    _check_header(lines, TREE_HEADER, path)
    n_features = int(lines[1].split()[1])
    depth_text = lines[2].split()[1]
    hp = TreeHyperparams(
        max_depth=None if depth_text == "none" else int(depth_text),
        min_samples_split=int(lines[3].split()[1]),
        impurity_kind=lines[4].split()[1],
    )
    root, nxt = _read_node(lines, 5)
    if nxt != len(lines):
        raise ValueError(f"{path}: trailing data after tree")
    return TreeModel(root=root, n_features=n_features, hyperparams=hp)
