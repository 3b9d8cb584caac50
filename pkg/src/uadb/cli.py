"""Command-line front end: synth, detect, boost, and ablate.

Settings resolve in priority order: explicit flags, then a JSON config file
(--config; a previously emitted report also works, its "config" key is
used), then the UADB_SEED environment variable for the seed, then the
built-in defaults. Every report embeds the fully resolved config, so
re-running a command from its own report reproduces the artifacts
byte for byte.

Exit codes: 0 success, 2 usage errors, 1 data/runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .booster import BoosterConfig, BoosterResult, Strategy, run_booster, score_points
from .data import (
    DataError,
    Dataset,
    SyntheticKind,
    generate_synthetic,
    load_csv,
    save_csv,
    scale_features,
)
from .detectors import (
    DetectorKind,
    DetectorParams,
    ScoreVector,
    fit_score,
    import_scores,
    minmax_scale,
    save_scores,
)
from .metrics import aucroc, average_precision, correction_rate, variance_gap
from .nn import Loss, TrainSpec


class UsageError(Exception):
    """Missing or contradictory settings after config resolution."""


def _default_seed() -> int:
    return int(os.environ.get("UADB_SEED", "0"))


def _load_config(path: str) -> dict:
    try:
        blob = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"no such config file: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from None
    if isinstance(blob, dict) and isinstance(blob.get("config"), dict):
        blob = blob["config"]  # a report was passed; reuse its embedded config
    if not isinstance(blob, dict):
        raise DataError(f"{path}: config must be a JSON object")
    return blob


def _merge(args: argparse.Namespace, config: dict, defaults: dict) -> dict:
    """Flags beat config-file values beat defaults; reject unknown keys."""
    unknown = set(config) - set(defaults)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = config.get(key)
        if value is None:
            value = default
        resolved[key] = value
    return resolved


def _require(cfg: dict, key: str) -> None:
    if cfg.get(key) is None:
        raise UsageError(f"--{key.replace('_', '-')} is required (flag or config)")


def _write_json(blob: dict, path: str) -> None:
    Path(path).write_text(json.dumps(blob, indent=2) + "\n", encoding="utf-8")


def _load_dataset(cfg: dict) -> Dataset:
    ds = load_csv(cfg["data"], cfg["label_column"])
    return scale_features(ds) if cfg["scale"] else ds


def _teacher_params(cfg: dict) -> DetectorParams:
    return DetectorParams(
        kind=DetectorKind(cfg["teacher"]),
        trees=cfg["trees"],
        subsample=cfg["subsample"],
        bins=cfg["bins"],
        k=cfg["k"],
        components=cfg["components"],
        seed=cfg["seed"],
    )


def _teacher_scores(ds: Dataset, cfg: dict, seed: int) -> ScoreVector:
    if (cfg["teacher"] is None) == (cfg["teacher_scores"] is None):
        raise UsageError("exactly one of --teacher / --teacher-scores is required")
    if cfg["teacher_scores"] is not None:
        return import_scores(cfg["teacher_scores"], ds.n)
    return fit_score(ds, replace(_teacher_params(cfg), seed=seed))


def _booster_config(cfg: dict, strategy: Strategy, seed: int) -> BoosterConfig:
    train = TrainSpec(
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        loss=Loss(cfg["loss"]),
        seed=seed,
    )
    return BoosterConfig(
        T=cfg["iterations"],
        fold_count=cfg["folds"],
        strategy=strategy,
        train=train,
        reinit_per_iteration=cfg["reinit"],
        holdout_final=cfg["holdout_final"],
        seed=seed,
    )


def _run_metrics(ds: Dataset, teacher: ScoreVector, result: BoosterResult) -> dict:
    y = ds.labels
    out = {
        "teacher": {"aucroc": aucroc(teacher, y), "ap": average_precision(teacher, y)},
        "booster": {
            "aucroc": aucroc(result.final_scores, y),
            "ap": average_precision(result.final_scores, y),
            "correction_rate": correction_rate(teacher, result.final_scores, y),
        },
        "iterations": list(result.diagnostics),
    }
    if result.variance_history:
        out["booster"]["variance_gap"] = variance_gap(result.variance_history[-1], y)
    return out


def _save_history(result: BoosterResult, path: str) -> None:
    """Label history as CSV, one column per iteration (y1 = teacher)."""
    matrix = result.label_history.as_array()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"y{t + 1}" for t in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def _save_grid(result: BoosterResult, ds: Dataset, path: str, grid_size: int) -> None:
    """Booster scores over a 2-d mesh spanning the (scaled) feature ranges."""
    if ds.d != 2:
        raise DataError(f"grid export needs d=2 data, got d={ds.d}")
    if grid_size < 2:
        raise DataError(f"need grid_size >= 2, got {grid_size}")
    lo = ds.features.min(axis=0)
    hi = ds.features.max(axis=0)
    xs = np.linspace(lo[0], hi[0], grid_size)
    ys = np.linspace(lo[1], hi[1], grid_size)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    scores = score_points(result, points)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "score"])
        for (x1, x2), s in zip(points, scores):
            writer.writerow([repr(float(x1)), repr(float(x2)), repr(float(s))])


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args: argparse.Namespace, config: dict) -> tuple[dict, list[str]]:
    cfg = _merge(
        args,
        config,
        {"kind": None, "n": 300, "rate": 0.15, "seed": _default_seed(), "out": None, "report": None},
    )
    _require(cfg, "kind")
    ds = generate_synthetic(SyntheticKind(cfg["kind"]), cfg["n"], cfg["rate"], cfg["seed"])
    if cfg["out"] is not None:
        save_csv(ds, cfg["out"])
    report = {
        "command": "synth",
        "config": cfg,
        "n": ds.n,
        "d": ds.d,
        "n_anomalies": ds.n_anomalies,
    }
    lines = [f"{ds.name}: n={ds.n} d={ds.d} anomalies={ds.n_anomalies}"]
    if cfg["out"] is not None:
        lines.append(f"wrote {cfg['out']}")
    return report, lines


_DETECT_DEFAULTS = {
    "data": None,
    "label_column": None,
    "detector": None,
    "trees": 100,
    "subsample": 256,
    "bins": 10,
    "k": None,
    "components": None,
    "scale": True,
    "scores_out": None,
    "report": None,
}


def _detect_defaults() -> dict:
    return {**_DETECT_DEFAULTS, "seed": _default_seed()}


def cmd_detect(args: argparse.Namespace, config: dict) -> tuple[dict, list[str]]:
    cfg = _merge(args, config, _detect_defaults())
    _require(cfg, "data")
    _require(cfg, "detector")
    ds = _load_dataset(cfg)
    scores = minmax_scale(fit_score(ds, _teacher_params({**cfg, "teacher": cfg["detector"]})))
    if cfg["scores_out"] is not None:
        save_scores(scores, cfg["scores_out"])
    report = {"command": "detect", "config": cfg, "n": ds.n, "d": ds.d, "metrics": None}
    lines = [f"{cfg['detector']} on {ds.name}: n={ds.n} d={ds.d}"]
    if ds.labels is not None:
        report["metrics"] = {
            "aucroc": aucroc(scores, ds.labels),
            "ap": average_precision(scores, ds.labels),
            "n_pos": int(ds.labels.sum()),
            "n_neg": int(ds.n - ds.labels.sum()),
        }
        lines.append(
            f"aucroc={report['metrics']['aucroc']:.4f} ap={report['metrics']['ap']:.4f}"
        )
    if cfg["scores_out"] is not None:
        lines.append(f"wrote {cfg['scores_out']}")
    return report, lines


_BOOST_DEFAULTS = {
    "data": None,
    "label_column": None,
    "teacher": None,
    "teacher_scores": None,
    "strategy": "uadb",
    "iterations": 10,
    "folds": 3,
    "epochs": 10,
    "batch_size": 256,
    "learning_rate": 0.001,
    "loss": "cross-entropy",
    "reinit": False,
    "holdout_final": False,
    "repeat": 1,
    "trees": 100,
    "subsample": 256,
    "bins": 10,
    "k": None,
    "components": None,
    "scale": True,
    "scores_out": None,
    "history_out": None,
    "grid_out": None,
    "grid_size": 100,
    "report": None,
}


def _boost_defaults() -> dict:
    return {**_BOOST_DEFAULTS, "seed": _default_seed()}


def cmd_boost(args: argparse.Namespace, config: dict) -> tuple[dict, list[str]]:
    cfg = _merge(args, config, _boost_defaults())
    _require(cfg, "data")
    if cfg["repeat"] < 1:
        raise UsageError(f"need repeat >= 1, got {cfg['repeat']}")
    ds = _load_dataset(cfg)
    strategy = Strategy(cfg["strategy"])

    runs = []
    first_result = None
    first_teacher = None
    for r in range(cfg["repeat"]):
        seed = cfg["seed"] + r  # independent runs, reproducible sequence
        teacher = _teacher_scores(ds, cfg, seed)
        result = run_booster(ds, teacher, _booster_config(cfg, strategy, seed))
        if r == 0:
            first_result = result
            first_teacher = teacher
        entry = {"seed": seed}
        if ds.labels is not None:
            entry.update(_run_metrics(ds, teacher, result))
        runs.append(entry)

    report = {
        "command": "boost",
        "config": cfg,
        "n": ds.n,
        "d": ds.d,
        "runs": runs,
    }
    lines = [f"{strategy.value} boost of {cfg['teacher'] or cfg['teacher_scores']} on {ds.name}"]
    if ds.labels is not None:
        mean = {
            "teacher_aucroc": float(np.mean([r["teacher"]["aucroc"] for r in runs])),
            "teacher_ap": float(np.mean([r["teacher"]["ap"] for r in runs])),
            "booster_aucroc": float(np.mean([r["booster"]["aucroc"] for r in runs])),
            "booster_ap": float(np.mean([r["booster"]["ap"] for r in runs])),
        }
        report["mean"] = mean
        lines.append(
            f"teacher aucroc={mean['teacher_aucroc']:.4f} -> booster aucroc={mean['booster_aucroc']:.4f}"
            f" (over {cfg['repeat']} run{'s' if cfg['repeat'] > 1 else ''})"
        )
    if cfg["scores_out"] is not None:
        save_scores(first_result.final_scores, cfg["scores_out"])
        lines.append(f"wrote {cfg['scores_out']}")
    if cfg["history_out"] is not None:
        _save_history(first_result, cfg["history_out"])
        lines.append(f"wrote {cfg['history_out']}")
    if cfg["grid_out"] is not None:
        _save_grid(first_result, ds, cfg["grid_out"], cfg["grid_size"])
        lines.append(f"wrote {cfg['grid_out']}")
    return report, lines


_ABLATE_ORDER = (
    ("origin", None),
    ("naive", Strategy.NAIVE),
    ("discrepancy", Strategy.DISCREPANCY),
    ("self", Strategy.SELF),
    ("discrepancy-star", Strategy.DISCREPANCY_STAR),
    ("uadb", Strategy.UADB),
)


def _ablate_defaults() -> dict:
    d = _boost_defaults()
    for key in ("strategy", "repeat", "scores_out", "history_out", "grid_out", "grid_size"):
        d.pop(key)
    return d


def cmd_ablate(args: argparse.Namespace, config: dict) -> tuple[dict, list[str]]:
    cfg = _merge(args, config, _ablate_defaults())
    _require(cfg, "data")
    ds = _load_dataset(cfg)
    if ds.labels is None:
        raise DataError("ablate requires labeled data (--label-column)")
    teacher = _teacher_scores(ds, cfg, cfg["seed"])
    scaled_teacher = minmax_scale(teacher)

    rows = []
    for name, strategy in _ABLATE_ORDER:
        if strategy is None:
            scores = scaled_teacher
        else:
            scores = run_booster(ds, teacher, _booster_config(cfg, strategy, cfg["seed"])).final_scores
        rows.append(
            {
                "variant": name,
                "aucroc": aucroc(scores, ds.labels),
                "ap": average_precision(scores, ds.labels),
            }
        )

    report = {"command": "ablate", "config": cfg, "n": ds.n, "d": ds.d, "rows": rows}
    width = max(len(r["variant"]) for r in rows)
    lines = [f"{'variant'.ljust(width)}  {'aucroc':>8}  {'ap':>8}"]
    for r in rows:
        lines.append(f"{r['variant'].ljust(width)}  {r['aucroc']:8.4f}  {r['ap']:8.4f}")
    return report, lines


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (or a previously emitted report)")
    p.add_argument("--seed", type=int, help="base random seed (default: $UADB_SEED or 0)")
    p.add_argument("--report", help="write the JSON report to this path")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="input dataset CSV")
    p.add_argument("--label-column", help="name of the 0/1 ground-truth column")
    p.add_argument(
        "--scale",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="min-max scale features before fitting (default: on)",
    )


def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trees", type=int, help="isolation forest tree count")
    p.add_argument("--subsample", type=int, help="isolation forest subsample size")
    p.add_argument("--bins", type=int, help="histogram detector bin count")
    p.add_argument("--k", type=int, help="neighbor count for lof/knn")
    p.add_argument("--components", type=int, help="retained components for pca")


def _add_booster_args(p: argparse.ArgumentParser) -> None:
    teacher = p.add_mutually_exclusive_group()
    teacher.add_argument(
        "--teacher", choices=[k.value for k in DetectorKind], help="native teacher detector"
    )
    teacher.add_argument("--teacher-scores", help="file of precomputed teacher scores")
    p.add_argument("--iterations", type=int, help="boosting iterations T")
    p.add_argument("--folds", type=int, help="cross-fitting fold count (1 disables)")
    p.add_argument("--epochs", type=int, help="training epochs per iteration")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--loss", choices=[kind.value for kind in Loss])
    p.add_argument(
        "--reinit",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="re-initialize the network every iteration instead of warm-starting",
    )
    p.add_argument(
        "--holdout-final",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="final scores from held-out models only instead of the fold average",
    )
    _add_detector_args(p)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uadb",
        description="Boost unsupervised anomaly detectors with variance-corrected pseudo labels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset CSV")
    p.add_argument("--kind", choices=[k.value for k in SyntheticKind])
    p.add_argument("--n", type=int, help="total rows (default 300)")
    p.add_argument("--rate", type=float, help="anomaly rate (default 0.15)")
    p.add_argument("--out", help="output CSV path")
    _add_common(p)

    p = sub.add_parser("detect", help="fit one detector and write normalized scores")
    _add_data_args(p)
    p.add_argument("--detector", choices=[k.value for k in DetectorKind])
    _add_detector_args(p)
    p.add_argument("--scores-out", help="write one score per line to this path")
    _add_common(p)

    p = sub.add_parser("boost", help="run a boosting strategy on a teacher")
    _add_data_args(p)
    _add_booster_args(p)
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--repeat", type=int, help="average metrics over this many seeded runs")
    p.add_argument("--scores-out", help="write final booster scores to this path")
    p.add_argument("--history-out", help="write the pseudo-label history CSV to this path")
    p.add_argument("--grid-out", help="write a 2-d grid of booster scores to this path")
    p.add_argument("--grid-size", type=int, help="grid resolution per axis (default 100)")
    _add_common(p)

    p = sub.add_parser("ablate", help="compare the teacher and all five strategies")
    _add_data_args(p)
    _add_booster_args(p)
    _add_common(p)

    return parser


_HANDLERS = {
    "synth": cmd_synth,
    "detect": cmd_detect,
    "boost": cmd_boost,
    "ablate": cmd_ablate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config) if args.config else {}
        report, lines = _HANDLERS[args.command](args, config)
        if report["config"].get("report") is not None:
            _write_json(report, report["config"]["report"])
            lines.append(f"wrote {report['config']['report']}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
