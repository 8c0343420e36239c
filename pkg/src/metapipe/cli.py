"""Command-line interface.

Subcommands: run, sweep-components, sweep-size, sweep-k, sweep-ga,
ablate-ga, export-components, synth. Settings are resolved in order:
built-in defaults, then --preset, then --config (INI file), then explicit
CLI flags.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Rng
from .dataset import synth_two_cluster
from .logreg import LogRegHyperparams
from .pipeline import (
    PRESETS,
    ImageSource,
    PipelineConfig,
    PipelineError,
    SynthSource,
    ablate_ga,
    doubling_values,
    export_components,
    run_pipeline,
    sweep_components,
    sweep_dataset_size,
    sweep_ga,
    sweep_k,
    write_report_files,
    write_sweep_csv,
)
from .pipeline import config_echo as render_config
from .tree import TreeHyperparams


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {exc}")


def _add_common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="named settings preset")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", type=Path, help="output directory (default metapipe_out)")

    data = p.add_argument_group("data")
    data.add_argument("--image-dir", type=Path)
    data.add_argument("--labels-csv", type=Path)
    data.add_argument("--synth-n", type=int)
    data.add_argument("--synth-d", type=int)
    data.add_argument("--synth-separation", type=float)
    data.add_argument("--synth-noise", type=float)
    data.add_argument("--dataset-size", type=int)
    data.add_argument("--test-fraction", type=float)

    pca = p.add_argument_group("pca")
    pca.add_argument("--pca-components", type=int)

    ga = p.add_argument_group("genetic algorithm")
    ga.add_argument("--ga", action=argparse.BooleanOptionalAction, default=None)
    ga.add_argument("--ga-population", type=int)
    ga.add_argument("--ga-generations", type=int)
    ga.add_argument("--ga-gene-one-prob", type=float)
    ga.add_argument("--ga-mutation-prob", type=float)
    ga.add_argument("--ga-elite-count", type=int)
    ga.add_argument("--ga-fitness-holdout", type=float)

    clf = p.add_argument_group("classifier")
    clf.add_argument("--classifier", choices=["knn", "logreg", "tree", "all"])
    clf.add_argument("--knn-k", type=int)
    clf.add_argument("--logreg-lr", type=float)
    clf.add_argument("--logreg-max-iter", type=int)
    clf.add_argument("--logreg-tolerance", type=float)
    clf.add_argument("--logreg-l2", type=float)
    clf.add_argument("--logreg-solver", choices=["batch", "saga"])
    clf.add_argument("--tree-max-depth", help="integer or 'none'")
    clf.add_argument("--tree-min-samples-split", type=int)
    clf.add_argument("--tree-impurity", choices=["gini", "entropy"])


def _settings_from_file(path: Path) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"cannot read config file {path}")
    out = {}

    def grab(section, key, cast, dest):
        if parser.has_option(section, key):
            raw = parser.get(section, key)
            out[dest] = cast(raw)

    def opt_int(raw):
        return None if raw.lower() in ("all", "auto", "none") else int(raw)

    grab("data", "source", str, "source_kind")
    grab("data", "image_dir", Path, "image_dir")
    grab("data", "labels_csv", Path, "labels_csv")
    grab("data", "synth_n", int, "synth_n")
    grab("data", "synth_d", int, "synth_d")
    grab("data", "synth_separation", float, "synth_separation")
    grab("data", "synth_noise", float, "synth_noise")
    grab("data", "dataset_size", opt_int, "dataset_size")
    grab("data", "test_fraction", float, "test_fraction")
    grab("data", "seed", int, "seed")
    grab("pca", "components", int, "pca_components")
    grab("ga", "enabled", lambda v: v.lower() in ("true", "1", "yes"), "ga_enabled")
    grab("ga", "population_size", int, "ga_population")
    grab("ga", "max_generations", int, "ga_generations")
    grab("ga", "gene_one_prob", float, "ga_gene_one_prob")
    grab("ga", "mutation_prob", float, "ga_mutation_prob")
    grab("ga", "elite_count", int, "ga_elite_count")
    grab("ga", "fitness_holdout", float, "ga_fitness_holdout")
    grab("classifier", "kind", str, "classifier")
    grab("classifier", "knn_k", opt_int, "knn_k")
    grab("classifier", "logreg_learning_rate", float, "logreg_lr")
    grab("classifier", "logreg_max_iter", int, "logreg_max_iter")
    grab("classifier", "logreg_tolerance", float, "logreg_tolerance")
    grab("classifier", "logreg_l2", float, "logreg_l2")
    grab("classifier", "logreg_solver", str, "logreg_solver")
    grab("classifier", "tree_max_depth", opt_int, "tree_max_depth")
    grab("classifier", "tree_min_samples_split", int, "tree_min_samples_split")
    grab("classifier", "tree_impurity", str, "tree_impurity")
    grab("output", "dir", Path, "out_dir")
    return out


def _settings_from_args(args: argparse.Namespace) -> dict:
    out = {}
    mapping = {
        "image_dir": "image_dir",
        "labels_csv": "labels_csv",
        "synth_n": "synth_n",
        "synth_d": "synth_d",
        "synth_separation": "synth_separation",
        "synth_noise": "synth_noise",
        "dataset_size": "dataset_size",
        "test_fraction": "test_fraction",
        "seed": "seed",
        "pca_components": "pca_components",
        "ga": "ga_enabled",
        "ga_population": "ga_population",
        "ga_generations": "ga_generations",
        "ga_gene_one_prob": "ga_gene_one_prob",
        "ga_mutation_prob": "ga_mutation_prob",
        "ga_elite_count": "ga_elite_count",
        "ga_fitness_holdout": "ga_fitness_holdout",
        "classifier": "classifier",
        "knn_k": "knn_k",
        "logreg_lr": "logreg_lr",
        "logreg_max_iter": "logreg_max_iter",
        "logreg_tolerance": "logreg_tolerance",
        "logreg_l2": "logreg_l2",
        "logreg_solver": "logreg_solver",
        "tree_min_samples_split": "tree_min_samples_split",
        "tree_impurity": "tree_impurity",
    }
    for arg_name, dest in mapping.items():
        value = getattr(args, arg_name, None)
        if value is not None:
            out[dest] = value
    depth = getattr(args, "tree_max_depth", None)
    if depth is not None:
        out["tree_max_depth"] = None if str(depth).lower() == "none" else int(depth)
    return out


_PRESET_KEYS = {
    "dataset_size": "dataset_size",
    "pca_components": "pca_components",
    "ga_enabled": "ga_enabled",
    "ga_population": "ga_population",
    "ga_generations": "ga_generations",
    "classifier": "classifier",
}


def build_config(args: argparse.Namespace) -> tuple[PipelineConfig, Path]:
    settings: dict = {}
    if getattr(args, "preset", None):
        preset = PRESETS[args.preset]
        for key, value in preset.items():
            if key == "logreg":
                settings["logreg_solver"] = value.solver
            else:
                settings[_PRESET_KEYS[key]] = value
    if getattr(args, "config", None):
        settings.update(_settings_from_file(args.config))
    settings.update(_settings_from_args(args))

    if settings.get("source_kind") == "images" or (
        "image_dir" in settings and "source_kind" not in settings
    ):
        if "image_dir" not in settings or "labels_csv" not in settings:
            raise ValueError("image source needs both image_dir and labels_csv")
        source = ImageSource(
            image_dir=settings["image_dir"], labels_csv=settings["labels_csv"]
        )
    else:
        source = SynthSource(
            n=settings.get("synth_n", 600),
            d=settings.get("synth_d", 20),
            separation=settings.get("synth_separation", 6.0),
            noise=settings.get("synth_noise", 1.0),
        )

    logreg = LogRegHyperparams(
        learning_rate=settings.get("logreg_lr", 0.1),
        max_iter=settings.get("logreg_max_iter", 1000),
        tolerance=settings.get("logreg_tolerance", 1e-6),
        l2_strength=settings.get("logreg_l2", 1e-4),
        solver=settings.get("logreg_solver", "batch"),
    )
    tree = TreeHyperparams(
        max_depth=settings.get("tree_max_depth", 10),
        min_samples_split=settings.get("tree_min_samples_split", 2),
        impurity_kind=settings.get("tree_impurity", "gini"),
    )
    config = PipelineConfig(
        source=source,
        dataset_size=settings.get("dataset_size"),
        test_fraction=settings.get("test_fraction", 0.2),
        pca_components=settings.get("pca_components", 5),
        ga_enabled=settings.get("ga_enabled", True),
        ga_population=settings.get("ga_population", 10),
        ga_generations=settings.get("ga_generations", 10),
        ga_gene_one_prob=settings.get("ga_gene_one_prob", 0.5),
        ga_mutation_prob=settings.get("ga_mutation_prob", 0.25),
        ga_elite_count=settings.get("ga_elite_count", 2),
        ga_fitness_holdout=settings.get("ga_fitness_holdout", 0.25),
        classifier=settings.get("classifier", "all"),
        knn_k=settings.get("knn_k"),
        logreg=logreg,
        tree=tree,
        seed=settings.get("seed", 0),
    )
    out_dir = getattr(args, "out", None) or settings.get("out_dir") or Path("metapipe_out")
    return config, Path(out_dir)


def _write_sweep_outputs(rows, columns, out_dir: Path, title: str, config) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(rows, columns, out_dir / "report.csv")
    text = f"metapipe {title}\n\n== configuration ==\n{render_config(config)}"
    (out_dir / "report.txt").write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    config, out_dir = build_config(args)
    report = run_pipeline(config)
    files = write_report_files(report, out_dir)
    for name, res in report.results.items():
        print(f"{name}: test_accuracy={res.test_accuracy:.6f}")
    print(f"report written to {files['report.txt']}")
    return 0


def cmd_sweep_components(args) -> int:
    config, out_dir = build_config(args)
    rows = sweep_components(config, args.values)
    _write_sweep_outputs(
        rows, ["components", "knn_acc", "logreg_acc", "tree_acc"], out_dir,
        "component sweep", config,
    )
    print(f"{len(rows)} rows written to {out_dir / 'report.csv'}")
    return 0


def cmd_sweep_size(args) -> int:
    config, out_dir = build_config(args)
    rows = sweep_dataset_size(config, args.sizes)
    _write_sweep_outputs(
        rows, ["size", "knn_acc", "logreg_acc", "tree_acc"], out_dir,
        "dataset size sweep", config,
    )
    print(f"{len(rows)} rows written to {out_dir / 'report.csv'}")
    return 0


def cmd_sweep_k(args) -> int:
    config, out_dir = build_config(args)
    if args.ks is None and args.k_doubling_max is None:
        raise ValueError("provide --ks or --k-doubling-max")
    ks = args.ks if args.ks is not None else doubling_values(args.k_doubling_max)
    rows = sweep_k(config, ks)
    _write_sweep_outputs(rows, ["k", "knn_acc"], out_dir, "neighbor count sweep", config)
    print(f"{len(rows)} rows written to {out_dir / 'report.csv'}")
    return 0


def cmd_sweep_ga(args) -> int:
    config, out_dir = build_config(args)
    rows = sweep_ga(config, args.pop_sizes, args.generations)
    _write_sweep_outputs(
        rows, ["pop", "generations", "knn_acc", "logreg_acc", "tree_acc"], out_dir,
        "ga grid sweep", config,
    )
    print(f"{len(rows)} rows written to {out_dir / 'report.csv'}")
    return 0


def cmd_ablate_ga(args) -> int:
    config, out_dir = build_config(args)
    rows = ablate_ga(config, args.repeats)
    _write_sweep_outputs(
        rows, ["repeat", "ga_enabled", "knn_acc", "logreg_acc", "tree_acc"], out_dir,
        "ga ablation", config,
    )
    print(f"{len(rows)} rows written to {out_dir / 'report.csv'}")
    return 0


def cmd_export_components(args) -> int:
    config, out_dir = build_config(args)
    written = export_components(config, args.count, out_dir)
    print(f"{len(written)} component images written to {out_dir}")
    return 0


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    X, y = synth_two_cluster(args.n, args.d, args.separation, args.noise, Rng(args.seed))
    ids = [f"img{i:05d}" for i in range(args.n)]

    with open(out_dir / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label"])
        for i, label in zip(ids, y):
            writer.writerow([i, int(label)])

    if args.as_images:
        height, width = args.as_images
        if height * width * 3 != args.d:
            raise ValueError(
                f"--as-images {height}x{width} needs d == {height * width * 3}, got {args.d}"
            )
        # min-max rescale the whole dataset into pixel range
        lo, hi = X.min(), X.max()
        scaled = (X - lo) / (hi - lo) * 255.0 if hi > lo else np.full_like(X, 128.0)
        pixels = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
        img_dir = out_dir / "images"
        img_dir.mkdir(exist_ok=True)
        for i, image_id in enumerate(ids):
            frame = pixels[i].reshape(height, width, 3)
            Image.fromarray(frame, mode="RGB").save(img_dir / f"{image_id}.png")
        print(f"{args.n} images written to {img_dir}")
    else:
        with open(out_dir / "features.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"f{j}" for j in range(args.d)])
            for row in X:
                writer.writerow([format(v, ".17g") for v in row])
        print(f"features.csv and labels.csv written to {out_dir}")
    return 0


def _parse_hw(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected HxW, e.g. 4x4: {exc}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metapipe",
        description="Image classification pipeline: PCA + GA feature "
        "selection + kNN/logistic-regression/decision-tree classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline once")
    _add_common_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-components", help="accuracy vs number of components")
    _add_common_options(p)
    p.add_argument("--values", type=_parse_int_list, required=True)
    p.set_defaults(func=cmd_sweep_components)

    p = sub.add_parser("sweep-size", help="accuracy vs dataset size")
    _add_common_options(p)
    p.add_argument("--sizes", type=_parse_int_list, required=True)
    p.set_defaults(func=cmd_sweep_size)

    p = sub.add_parser("sweep-k", help="accuracy vs neighbor count")
    _add_common_options(p)
    p.add_argument("--ks", type=_parse_int_list)
    p.add_argument("--k-doubling-max", type=int, help="1,2,4,... up to this cap")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-ga", help="accuracy over a GA population/generation grid")
    _add_common_options(p)
    p.add_argument("--pop-sizes", type=_parse_int_list, required=True)
    p.add_argument("--generations", type=_parse_int_list, required=True)
    p.set_defaults(func=cmd_sweep_ga)

    p = sub.add_parser("ablate-ga", help="compare GA on vs off over repeats")
    _add_common_options(p)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_ablate_ga)

    p = sub.add_parser("export-components", help="write principal axes as PNGs")
    _add_common_options(p)
    p.add_argument("--count", type=int, required=True)
    p.set_defaults(func=cmd_export_components)

    p = sub.add_parser("synth", help="write a synthetic dataset to disk")
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument(
        "--as-images", type=_parse_hw, metavar="HxW",
        help="write PNGs (requires d == H*W*3) instead of features.csv",
    )
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, PipelineError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
