"""End-to-end pipeline: data, standardize/PCA, GA selection, classifiers.

Seeding discipline: one master seed; every stochastic stage derives its own
seed as splitmix64(master + stage tag), so toggling one stage never shifts
the randomness of another. Reports and sweep tables are byte-deterministic
for equal config + seed; wall-clock timings therefore live in a separate
timings file, never in report.txt or the CSVs.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from . import __version__
from .core import Rng, accuracy, derive_seed, train_test_split
from .dataset import flatten, load_labeled_images, subsample, synth_two_cluster
from .genetic import (
    GaConfig,
    GaHistory,
    apply_mask,
    chromosome_to_hex,
    evolve,
    history_to_csv,
)
from .knn import KnnModel, knn_predict, knn_suggest_k
from .logreg import LogRegHyperparams, logreg_fit, logreg_predict
from .pca import component_to_image, explained_variance_ratio, pca_fit, pca_transform
from .tree import TreeHyperparams, tree_fit, tree_predict

# fixed stage tags for seed derivation
STAGE_SYNTH = 0x51
STAGE_SUBSAMPLE = 0x52
STAGE_SPLIT = 0x53
STAGE_GA_HOLDOUT = 0x54
STAGE_GA = 0x55
STAGE_CLASSIFIER = 0x56

CLASSIFIER_NAMES = ("knn", "logreg", "tree")


class PipelineError(RuntimeError):
    pass


@dataclass
class ImageSource:
    image_dir: Path
    labels_csv: Path


@dataclass
class SynthSource:
    n: int = 600
    d: int = 20
    separation: float = 6.0
    noise: float = 1.0


@dataclass
class PipelineConfig:
    source: Union[ImageSource, SynthSource]
    dataset_size: Optional[int] = None  # None = use every row
    test_fraction: float = 0.2
    pca_components: int = 5
    ga_enabled: bool = True
    ga_population: int = 10
    ga_generations: int = 10
    ga_gene_one_prob: float = 0.5
    ga_mutation_prob: float = 0.25
    ga_elite_count: int = 2
    ga_fitness_holdout: float = 0.25
    classifier: str = "all"  # knn | logreg | tree | all
    knn_k: Optional[int] = None  # None = round(sqrt(n_train))
    logreg: LogRegHyperparams = field(default_factory=LogRegHyperparams)
    tree: TreeHyperparams = field(default_factory=TreeHyperparams)
    seed: int = 0

    def __post_init__(self):
        if self.classifier not in CLASSIFIER_NAMES + ("all",):
            raise ValueError(f"unknown classifier {self.classifier!r}")
        if not (0.0 < self.ga_fitness_holdout < 1.0):
            raise ValueError("ga_fitness_holdout must be in (0, 1)")

    def requested_classifiers(self):
        if self.classifier == "all":
            return list(CLASSIFIER_NAMES)
        return [self.classifier]


# paper-2022 bundles the full-scale settings (6250 samples, 250 components,
# GA 29x29, saga solver); it needs a real image dataset of at least that size
PRESETS = {
    "paper-2022": dict(
        dataset_size=6250,
        pca_components=250,
        ga_enabled=True,
        ga_population=29,
        ga_generations=29,
        classifier="all",
        logreg=LogRegHyperparams(solver="saga"),
    ),
}


@dataclass
class ClassifierResult:
    name: str
    train_accuracy: float
    test_accuracy: float
    wall_time: float


@dataclass
class PipelineReport:
    version: str
    config_echo: str
    n_total: int
    n_used: int
    n_train: int
    n_test: int
    n_raw_features: int
    pca_components: int
    explained_variance: list[float]
    ga_enabled: bool
    selected_chromosome_hex: str
    n_selected: int
    ga_history: Optional[GaHistory]
    results: dict[str, ClassifierResult]


def config_echo(config: PipelineConfig) -> str:
    """Deterministic INI rendering of the effective configuration.

    Output paths are deliberately omitted so two runs with equal seeds but
    different output directories still produce byte-identical reports.
    """
    lines = ["[data]"]
    if isinstance(config.source, SynthSource):
        s = config.source
        lines += [
            "source = synthetic",
            f"synth_n = {s.n}",
            f"synth_d = {s.d}",
            f"synth_separation = {s.separation:g}",
            f"synth_noise = {s.noise:g}",
        ]
    else:
        lines += [
            "source = images",
            f"image_dir = {config.source.image_dir}",
            f"labels_csv = {config.source.labels_csv}",
        ]
    size = "all" if config.dataset_size is None else str(config.dataset_size)
    lines += [
        f"dataset_size = {size}",
        f"test_fraction = {config.test_fraction:g}",
        f"seed = {config.seed}",
        "",
        "[pca]",
        f"components = {config.pca_components}",
        "",
        "[ga]",
        f"enabled = {'true' if config.ga_enabled else 'false'}",
        f"population_size = {config.ga_population}",
        f"max_generations = {config.ga_generations}",
        f"gene_one_prob = {config.ga_gene_one_prob:g}",
        f"mutation_prob = {config.ga_mutation_prob:g}",
        f"elite_count = {config.ga_elite_count}",
        f"fitness_holdout = {config.ga_fitness_holdout:g}",
        "",
        "[classifier]",
        f"kind = {config.classifier}",
        f"knn_k = {'auto' if config.knn_k is None else config.knn_k}",
        f"logreg_learning_rate = {config.logreg.learning_rate:g}",
        f"logreg_max_iter = {config.logreg.max_iter}",
        f"logreg_tolerance = {config.logreg.tolerance:g}",
        f"logreg_l2 = {config.logreg.l2_strength:g}",
        f"logreg_solver = {config.logreg.solver}",
        f"tree_max_depth = {'none' if config.tree.max_depth is None else config.tree.max_depth}",
        f"tree_min_samples_split = {config.tree.min_samples_split}",
        f"tree_impurity = {config.tree.impurity_kind}",
    ]
    return "\n".join(lines) + "\n"


def _stage(name: str):
    class _StageGuard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(f"stage '{name}': {exc}") from exc
            return False

    return _StageGuard()


def load_source_data(config: PipelineConfig):
    """Resolve the data source to (X, y, image_shape-or-None)."""
    with _stage("load-data"):
        if isinstance(config.source, SynthSource):
            s = config.source
            rng = Rng(derive_seed(config.seed, STAGE_SYNTH))
            X, y = synth_two_cluster(s.n, s.d, s.separation, s.noise, rng)
            return X, y, None
        images = load_labeled_images(config.source.image_dir, config.source.labels_csv)
        return flatten(images), images.labels, (images.height, images.width)


def run_pipeline(
    config: PipelineConfig, forced_chromosome=None, ga_seed_offset: int = 0
) -> PipelineReport:
    X, y, _ = load_source_data(config)
    return run_on_data(
        config, X, y, forced_chromosome=forced_chromosome, ga_seed_offset=ga_seed_offset
    )


def run_on_data(
    config: PipelineConfig, X, y, forced_chromosome=None, ga_seed_offset: int = 0
) -> PipelineReport:
    """Run every stage after data loading on an in-memory matrix.

    forced_chromosome bypasses the GA with a fixed mask (an all-ones mask
    reproduces the GA-disabled path exactly). ga_seed_offset shifts only
    the GA stage seed; the ablation sweep uses it to rerandomize the GA
    while every other stage stays fixed.
    """
    timings: dict[str, float] = {}
    n_total = X.shape[0]

    with _stage("subsample"):
        size = n_total if config.dataset_size is None else min(config.dataset_size, n_total)
        X_used, y_used = subsample(X, y, size, Rng(derive_seed(config.seed, STAGE_SUBSAMPLE)))

    with _stage("split"):
        train_X, train_y, test_X, test_y = train_test_split(
            X_used, y_used, config.test_fraction, Rng(derive_seed(config.seed, STAGE_SPLIT))
        )

    with _stage("pca"):
        k = config.pca_components
        if not (1 <= k <= train_X.shape[1]):
            raise ValueError(
                f"pca_components {k} outside [1, {train_X.shape[1]}] available features"
            )
        t0 = time.perf_counter()
        model = pca_fit(train_X, k)
        train_scores = pca_transform(model, train_X)
        test_scores = pca_transform(model, test_X)
        evr = (
            explained_variance_ratio(model).tolist()
            if model.total_variance > 0
            else [0.0] * k
        )
        timings["pca"] = time.perf_counter() - t0

    ga_history = None
    with _stage("feature-selection"):
        t0 = time.perf_counter()
        if forced_chromosome is not None:
            chromosome = np.asarray(forced_chromosome, dtype=np.uint8)
        elif config.ga_enabled:
            chromosome, ga_history = _run_ga(
                config, train_scores, train_y, ga_seed_offset=ga_seed_offset
            )
        else:
            chromosome = np.ones(k, dtype=np.uint8)
        train_sel = apply_mask(train_scores, chromosome)
        test_sel = apply_mask(test_scores, chromosome)
        timings["feature-selection"] = time.perf_counter() - t0

    results: dict[str, ClassifierResult] = {}
    for name in config.requested_classifiers():
        with _stage(f"classifier-{name}"):
            t0 = time.perf_counter()
            train_pred, test_pred = _train_and_predict(
                name, config, train_sel, train_y, test_sel
            )
            results[name] = ClassifierResult(
                name=name,
                train_accuracy=accuracy(train_pred, train_y),
                test_accuracy=accuracy(test_pred, test_y),
                wall_time=time.perf_counter() - t0,
            )

    return PipelineReport(
        version=__version__,
        config_echo=config_echo(config),
        n_total=n_total,
        n_used=size,
        n_train=train_X.shape[0],
        n_test=test_X.shape[0],
        n_raw_features=X.shape[1],
        pca_components=k,
        explained_variance=evr,
        ga_enabled=config.ga_enabled and forced_chromosome is None,
        selected_chromosome_hex=chromosome_to_hex(chromosome),
        n_selected=int(chromosome.sum()),
        ga_history=ga_history,
        results=results,
    )


def _run_ga(config: PipelineConfig, train_scores, train_y, ga_seed_offset: int = 0):
    fit_X, fit_y, hold_X, hold_y = train_test_split(
        train_scores,
        train_y,
        config.ga_fitness_holdout,
        Rng(derive_seed(config.seed, STAGE_GA_HOLDOUT)),
    )
    # fitness always trains with the reference batch solver: deterministic
    # and independent of the final classifier configuration
    fitness_hp = replace(config.logreg, solver="batch")

    def fitness(chromosome):
        model = logreg_fit(apply_mask(fit_X, chromosome), fit_y, fitness_hp)
        return accuracy(logreg_predict(model, apply_mask(hold_X, chromosome)), hold_y)

    ga_cfg = GaConfig(
        population_size=config.ga_population,
        max_generations=config.ga_generations,
        gene_one_prob=config.ga_gene_one_prob,
        mutation_prob=config.ga_mutation_prob,
        elite_count=config.ga_elite_count,
        seed=derive_seed(config.seed + ga_seed_offset, STAGE_GA),
    )
    return evolve(ga_cfg, train_scores.shape[1], fitness)


def _train_and_predict(name, config, train_X, train_y, test_X):
    if name == "knn":
        k = config.knn_k if config.knn_k is not None else knn_suggest_k(len(train_y))
        model = KnnModel(train_X, train_y, k)
        return knn_predict(model, train_X), knn_predict(model, test_X)
    if name == "logreg":
        hp = config.logreg
        if hp.solver == "saga":
            hp = replace(hp, seed=derive_seed(config.seed, STAGE_CLASSIFIER))
        model = logreg_fit(train_X, train_y, hp)
        return logreg_predict(model, train_X), logreg_predict(model, test_X)
    if name == "tree":
        model = tree_fit(train_X, train_y, config.tree)
        return tree_predict(model, train_X), tree_predict(model, test_X)
    raise ValueError(f"unknown classifier {name!r}")


# --------------------------------------------------------------------- sweeps

def _accuracy_cells(report: Optional[PipelineReport]):
    cells = {}
    for name in CLASSIFIER_NAMES:
        if report is not None and name in report.results:
            cells[f"{name}_acc"] = report.results[name].test_accuracy
        else:
            cells[f"{name}_acc"] = None
    return cells


def sweep_components(config: PipelineConfig, values) -> list[dict]:
    """One full pipeline run per component count; the seed is reused so only
    the swept knob varies. A failing value yields a row with empty
    accuracies plus an error note."""
    rows = []
    for v in values:
        row = {"components": v}
        try:
            report = run_pipeline(replace(config, pca_components=v, classifier="all"))
            row.update(_accuracy_cells(report))
        except (PipelineError, ValueError) as exc:
            row.update(_accuracy_cells(None))
            row["error"] = str(exc)
        rows.append(row)
    return rows


def sweep_dataset_size(config: PipelineConfig, sizes) -> list[dict]:
    rows = []
    for v in sizes:
        row = {"size": v}
        try:
            report = run_pipeline(replace(config, dataset_size=v, classifier="all"))
            row.update(_accuracy_cells(report))
        except (PipelineError, ValueError) as exc:
            row.update(_accuracy_cells(None))
            row["error"] = str(exc)
        rows.append(row)
    return rows


def sweep_k(config: PipelineConfig, ks) -> list[dict]:
    rows = []
    for k in ks:
        row = {"k": k}
        try:
            report = run_pipeline(replace(config, classifier="knn", knn_k=k))
            row["knn_acc"] = report.results["knn"].test_accuracy
        except (PipelineError, ValueError) as exc:
            row["knn_acc"] = None
            row["error"] = str(exc)
        rows.append(row)
    return rows


def sweep_ga(config: PipelineConfig, pop_sizes, generation_counts) -> list[dict]:
    rows = []
    for pop in pop_sizes:
        for gens in generation_counts:
            row = {"pop": pop, "generations": gens}
            try:
                report = run_pipeline(
                    replace(
                        config,
                        ga_enabled=True,
                        ga_population=pop,
                        ga_generations=gens,
                        classifier="all",
                    )
                )
                row.update(_accuracy_cells(report))
            except (PipelineError, ValueError) as exc:
                row.update(_accuracy_cells(None))
                row["error"] = str(exc)
            rows.append(row)
    return rows


def ablate_ga(config: PipelineConfig, repeats: int) -> list[dict]:
    """GA on vs off, `repeats` times. Each repeat r shifts only the GA stage
    seed (base seed + r), so the GA-off rows are identical across repeats."""
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rows = []
    for r in range(repeats):
        for enabled in (True, False):
            row = {"repeat": r, "ga_enabled": "true" if enabled else "false"}
            try:
                report = run_pipeline(
                    replace(config, ga_enabled=enabled, classifier="all"),
                    ga_seed_offset=r,
                )
                row.update(_accuracy_cells(report))
            except (PipelineError, ValueError) as exc:
                row.update(_accuracy_cells(None))
                row["error"] = str(exc)
            rows.append(row)
    return rows


def export_components(config: PipelineConfig, count: int, out_dir) -> list[Path]:
    """Write the first `count` principal axes as PNG images."""
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    if count > config.pca_components:
        raise ValueError(
            f"cannot export {count} components, only {config.pca_components} are fitted"
        )
    X, y, image_shape = load_source_data(config)
    if image_shape is None:
        raise ValueError(
            "component export needs image-shaped features; the synthetic "
            "source has no height/width to reshape into"
        )
    height, width = image_shape
    with _stage("subsample"):
        size = X.shape[0] if config.dataset_size is None else min(config.dataset_size, X.shape[0])
        X_used, y_used = subsample(X, y, size, Rng(derive_seed(config.seed, STAGE_SUBSAMPLE)))
    with _stage("split"):
        train_X, _, _, _ = train_test_split(
            X_used, y_used, config.test_fraction, Rng(derive_seed(config.seed, STAGE_SPLIT))
        )
    with _stage("pca"):
        model = pca_fit(train_X, config.pca_components)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(count):
        img = component_to_image(model, i, height, width)
        path = out_dir / f"component_{i}.png"
        Image.fromarray(img, mode="RGB").save(path)
        written.append(path)
    return written


def doubling_values(limit: int) -> list[int]:
    """1, 2, 4, ... up to limit, with limit itself appended when missed."""
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    values = []
    v = 1
    while v <= limit:
        values.append(v)
        v *= 2
    if values[-1] != limit:
        values.append(limit)
    return values


# ------------------------------------------------------------------- writers

def _fmt_cell(value):
    if value is None:
        return "nan"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_sweep_csv(rows: list[dict], columns: list[str], path) -> None:
    """RFC-4180-style CSV with \\n line endings and 6-decimal floats.

    Row errors are kept out of the data columns; they go to an `errors.txt`
    sibling file so the table shape stays fixed.
    """
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt_cell(row.get(col)) for col in columns])
    errors = []
    for i, row in enumerate(rows):
        if "error" in row:
            knobs = " ".join(
                f"{c}={row[c]}" for c in columns if c in row and not c.endswith("_acc")
            )
            errors.append(f"row {i} ({knobs}): {row['error']}")
    if errors:
        (path.parent / "errors.txt").write_text("\n".join(errors) + "\n", encoding="utf-8")


def render_report_text(report: PipelineReport) -> str:
    lines = [
        f"metapipe report (version {report.version})",
        "",
        "== configuration ==",
        report.config_echo.rstrip("\n"),
        "",
        "== data ==",
        f"rows_available = {report.n_total}",
        f"rows_used = {report.n_used}",
        f"rows_train = {report.n_train}",
        f"rows_test = {report.n_test}",
        f"raw_features = {report.n_raw_features}",
        "",
        "== pca ==",
        f"components = {report.pca_components}",
        "explained_variance_ratio = "
        + " ".join(f"{v:.6f}" for v in report.explained_variance),
        f"cumulative_explained = {sum(report.explained_variance):.6f}",
        "",
        "== feature selection ==",
        f"ga_enabled = {'true' if report.ga_enabled else 'false'}",
        f"selected_chromosome = {report.selected_chromosome_hex}",
        f"selected_count = {report.n_selected} of {report.pca_components}",
        "",
        "== results ==",
    ]
    for name, res in report.results.items():
        lines.append(
            f"{name}: train_accuracy = {res.train_accuracy:.6f}  "
            f"test_accuracy = {res.test_accuracy:.6f}"
        )
    return "\n".join(lines) + "\n"


def write_report_files(report: PipelineReport, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    txt = out_dir / "report.txt"
    txt.write_text(render_report_text(report), encoding="utf-8")
    written["report.txt"] = txt

    csv_path = out_dir / "report.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["classifier", "train_acc", "test_acc"])
        for name, res in report.results.items():
            writer.writerow([name, f"{res.train_accuracy:.6f}", f"{res.test_accuracy:.6f}"])
    written["report.csv"] = csv_path

    if report.ga_history is not None:
        hist_path = out_dir / "ga_history.csv"
        history_to_csv(report.ga_history, hist_path)
        written["ga_history.csv"] = hist_path

    timings = out_dir / "timings.txt"
    timings.write_text(
        "".join(
            f"{name}: {res.wall_time:.6f} s\n" for name, res in report.results.items()
        ),
        encoding="utf-8",
    )
    written["timings.txt"] = timings
    return written
