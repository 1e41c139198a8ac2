"""Command-line entry point.

Subcommands: ``run`` (gate + evaluate scenes), ``sweep`` (trade-off curves),
``synth`` (generate scene files), ``calibrate`` (derive the cost model from a
measured baseline total). Every option can also be supplied through a JSON
config file (``--config``, or the ``CASCADE_GATE_CONFIG`` environment
variable) whose keys are the option names with underscores; explicit flags
override the file. Exit codes: 0 success, 1 user/input error, 2 internal
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .gates import BaselineGate, ClassifierGate, CombinedGate, CorrelationGate, write_decisions
from .grid import TileGrid, load_pattern
from .ioutil import write_json_atomic
from .metrics import (
    CostModel,
    calibrate_cost_model,
    evaluate,
    write_report_csv,
    write_report_json,
)
from .scene import SceneFormatError, load_scene_dir
from .sweep import (
    emit_curves,
    random_baseline,
    sweep_classifier,
    sweep_combined,
    sweep_correlation,
    write_manifest,
)
from .synth import SynthConfig, make_perfect_scene, make_scene, write_scene_bundle

CONFIG_ENV_VAR = "CASCADE_GATE_CONFIG"

GATE_CHOICES = ("baseline", "clf", "cor", "combined")
FAMILY_CHOICES = ("clf", "cor", "combined", "random")


class UserError(Exception):
    """Invalid invocation or input; reported without a traceback."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UserError(message)


def _float_list(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    parts = [p.strip() for p in str(value).split(",")]
    try:
        return tuple(float(p) for p in parts if p)
    except ValueError:
        raise UserError(f"expected a comma-separated list of numbers, got {value!r}") from None


def _str_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [p.strip() for p in str(value).split(",") if p.strip()]


def _add_common(parser):
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--threads", type=int, help="worker cap for per-scene work (default 1)")


def _add_grid(parser):
    parser.add_argument("--rows", type=int, help="grid rows (default 30)")
    parser.add_argument("--cols", type=int, help="grid cols (default 30)")
    parser.add_argument("--tile-size", dest="tile_size_px", type=int, help="tile side in px (default 800)")


def _add_scene_inputs(parser):
    parser.add_argument(
        "--scene-dir",
        dest="scene_dirs",
        action="append",
        help="directory with scores.csv/detections.csv/truth.csv; repeatable",
    )


def _add_cost(parser):
    parser.add_argument("--cost-json", help="cost model JSON (as written by calibrate)")
    parser.add_argument("--t-detect-per-tile", type=float, help="detection seconds per tile")
    parser.add_argument("--t-classify-per-scene", type=float, help="classifier seconds per scene")
    parser.add_argument("--t-load-per-scene", type=float, help="load seconds per scene")


def _add_gate_params(parser):
    parser.add_argument("--t-clf", type=float, help="classifier threshold; run when score <= t_clf")
    parser.add_argument("--pattern", choices=("checkers", "alpha"), help="sampling pattern kind")
    parser.add_argument("--pattern-file", help="custom pattern file (one r,c per line)")
    parser.add_argument("--k", type=int, help="ring count; must equal the number of weights")
    parser.add_argument("--weights", help="ring weights, e.g. 1,0.5")
    parser.add_argument("--t-cor", type=float, help="correlation threshold; run when vote >= t_cor")
    parser.add_argument(
        "--raw-sum",
        dest="raw_sum",
        action="store_true",
        default=None,
        help="use the raw weighted sum instead of the normalized vote",
    )
    parser.add_argument("--distance-metric", choices=("chebyshev", "manhattan"))
    parser.add_argument("--indicator-source", choices=("truth", "detector"))
    parser.add_argument("--conf-floor", type=float, help="detector confidence floor for indicators")


def build_parser() -> _Parser:
    parser = _Parser(prog="tilegate", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="apply one gate to scenes and evaluate")
    _add_common(run)
    _add_grid(run)
    _add_scene_inputs(run)
    _add_cost(run)
    _add_gate_params(run)
    run.add_argument("--gate", choices=GATE_CHOICES, help="which gate to apply")
    run.add_argument("--iou-threshold", type=float, help="IoU threshold for matching (default 0.5)")
    run.add_argument("--betas", help="f_beta betas, e.g. 1,0.5,0.25")
    run.add_argument("--out-report", help="evaluation report JSON output path")
    run.add_argument("--out-report-csv", help="optional one-row CSV report path")
    run.add_argument("--out-decisions", help="decision log CSV path (per-scene suffix when several)")

    sweep = sub.add_parser("sweep", help="trade-off curves over threshold lists")
    _add_common(sweep)
    _add_grid(sweep)
    _add_scene_inputs(sweep)
    _add_cost(sweep)
    _add_gate_params(sweep)
    sweep.add_argument("--families", help=f"comma list from {','.join(FAMILY_CHOICES)}")
    sweep.add_argument("--t-clf-values", help="classifier thresholds, comma list")
    sweep.add_argument("--t-cor-values", help="correlation thresholds, comma list")
    sweep.add_argument("--keep-fractions", help="random-baseline keep fractions, comma list")
    sweep.add_argument("--seed", type=int, help="seed for the random baseline (default 0)")
    sweep.add_argument("--iou-threshold", type=float)
    sweep.add_argument("--out-curve", help="curve CSV output path")
    sweep.add_argument("--out-manifest", help="manifest JSON path (default: <curve>.manifest.json)")

    synth = sub.add_parser("synth", help="generate a synthetic scene directory")
    _add_common(synth)
    _add_grid(synth)
    synth.add_argument("--out-dir", help="output directory for the scene files")
    synth.add_argument("--seed", type=int, help="generator seed (required)")
    synth.add_argument("--positive-fraction", dest="positive_tile_fraction", type=float)
    synth.add_argument("--vessels-mean", dest="vessels_per_positive_tile_mean", type=float)
    synth.add_argument("--cluster-spread", dest="cluster_spread_tiles", type=float)
    synth.add_argument("--cluster-count", type=int)
    synth.add_argument("--clf-mean-ship", type=float)
    synth.add_argument("--clf-mean-empty", type=float)
    synth.add_argument("--clf-sd", type=float)
    synth.add_argument("--detector-recall", type=float)
    synth.add_argument("--detector-fp-rate", type=float)
    synth.add_argument("--box-min", dest="box_min_px", type=float)
    synth.add_argument("--box-max", dest="box_max_px", type=float)
    synth.add_argument(
        "--perfect",
        action="store_true",
        default=None,
        help="oracle classifier scores and verbatim truth detections",
    )

    cal = sub.add_parser("calibrate", help="derive the cost model from a baseline total")
    _add_common(cal)
    cal.add_argument("--baseline-total", type=float, help="measured all-tiles total, seconds")
    cal.add_argument("--scenes", type=int, help="number of scenes in the measurement")
    cal.add_argument("--tiles-per-scene", type=int)
    cal.add_argument("--classify-per-scene", type=float, help="classifier seconds per scene")
    cal.add_argument("--load-per-scene", type=float)
    cal.add_argument("--out", help="cost model JSON output path")
    return parser


def _load_json_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UserError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UserError(f"{path}:{exc.lineno}: invalid JSON in config: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise UserError(f"{path}: config must be a JSON object")
    return data


def merge_config(args: argparse.Namespace) -> dict:
    """Layer option sources: env config < --config file < explicit flags."""
    merged: dict = {}
    env_path = os.environ.get(CONFIG_ENV_VAR)
    if env_path:
        merged.update(_load_json_config(env_path))
    if getattr(args, "config", None):
        merged.update(_load_json_config(args.config))
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key] = value
    return merged


def _get(cfg: dict, key: str, default=None, required: bool = False):
    value = cfg.get(key)
    if value is None:
        if required:
            raise UserError(f"missing required option --{key.replace('_', '-')}")
        return default
    return value


def _grid_from(cfg) -> TileGrid:
    return TileGrid(
        int(_get(cfg, "rows", 30)),
        int(_get(cfg, "cols", 30)),
        int(_get(cfg, "tile_size_px", 800)),
    )


def _cost_from(cfg) -> CostModel:
    cost_json = _get(cfg, "cost_json")
    if cost_json:
        try:
            with open(cost_json, encoding="utf-8") as fh:
                return CostModel.from_dict(json.load(fh))
        except OSError as exc:
            raise UserError(f"cannot read cost model {cost_json}: {exc}") from exc
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise UserError(f"{cost_json}: invalid cost model: {exc}") from exc
    return CostModel(
        t_detect_per_tile=float(_get(cfg, "t_detect_per_tile", 1.0)),
        t_classify_per_scene=float(_get(cfg, "t_classify_per_scene", 0.0)),
        t_load_per_scene=float(_get(cfg, "t_load_per_scene", 0.0)),
    )


def _load_scenes(cfg, grid):
    dirs = _get(cfg, "scene_dirs", required=True)
    if isinstance(dirs, str):
        dirs = [dirs]
    return [load_scene_dir(grid, d) for d in dirs], [str(d) for d in dirs]


def _gate_common(cfg, grid):
    pattern_file = _get(cfg, "pattern_file")
    if pattern_file:
        pattern = load_pattern(grid, pattern_file)
    else:
        pattern = _get(cfg, "pattern", "checkers")
    weights = _float_list(_get(cfg, "weights", "1,0.1"))
    k = _get(cfg, "k")
    if k is not None and int(k) != len(weights):
        raise UserError(f"--k {k} does not match {len(weights)} weights")
    normalize = bool(_get(cfg, "normalize", True)) and not bool(_get(cfg, "raw_sum", False))
    return {
        "pattern": pattern,
        "weights": weights,
        "t_cor": float(_get(cfg, "t_cor", 0.4375)),
        "normalize": normalize,
        "distance_metric": _get(cfg, "distance_metric", "chebyshev"),
        "indicator_source": _get(cfg, "indicator_source", "detector"),
        "conf_floor": float(_get(cfg, "conf_floor", 0.5)),
    }


def _build_gate(cfg, grid):
    name = _get(cfg, "gate", required=True)
    if name not in GATE_CHOICES:
        raise UserError(f"--gate must be one of {','.join(GATE_CHOICES)}, got {name!r}")
    if name == "baseline":
        return BaselineGate()
    if name == "clf":
        return ClassifierGate(t_clf=float(_get(cfg, "t_clf", 0.0)))
    params = _gate_common(cfg, grid)
    if name == "cor":
        return CorrelationGate(**params)
    return CombinedGate(t_clf=float(_get(cfg, "t_clf", 0.0)), **params)


def _predict_all(gate, scenes, threads):
    if threads > 1 and len(scenes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(gate.predict, scenes))
    return [gate.predict(s) for s in scenes]


def _decision_paths(base: Path, n: int) -> list[Path]:
    if n == 1:
        return [base]
    return [base.with_name(f"{base.stem}_{i:03d}{base.suffix}") for i in range(n)]


def cmd_run(cfg: dict) -> None:
    grid = _grid_from(cfg)
    scenes, _ = _load_scenes(cfg, grid)
    gate = _build_gate(cfg, grid)
    cost = _cost_from(cfg)
    threads = int(_get(cfg, "threads", 1))
    betas = _float_list(_get(cfg, "betas", "1,0.5,0.25"))
    out_report = _get(cfg, "out_report", required=True)
    decisions = _predict_all(gate, scenes, threads)
    report = evaluate(
        scenes,
        decisions,
        cost,
        iou_threshold=float(_get(cfg, "iou_threshold", 0.5)),
        betas=betas,
        stages=gate.stages,
    )
    write_report_json(report, out_report)
    out_csv = _get(cfg, "out_report_csv")
    if out_csv:
        write_report_csv(report, out_csv)
    out_decisions = _get(cfg, "out_decisions")
    if out_decisions:
        for path, decision_list in zip(_decision_paths(Path(out_decisions), len(scenes)), decisions):
            write_decisions(decision_list, path)


def cmd_sweep(cfg: dict) -> None:
    grid = _grid_from(cfg)
    scenes, scene_dirs = _load_scenes(cfg, grid)
    cost = _cost_from(cfg)
    threads = int(_get(cfg, "threads", 1))
    iou_threshold = float(_get(cfg, "iou_threshold", 0.5))
    families = _str_list(_get(cfg, "families", required=True))
    for family in families:
        if family not in FAMILY_CHOICES:
            raise UserError(f"unknown sweep family {family!r}")
    seed = int(_get(cfg, "seed", 0))
    out_curve = _get(cfg, "out_curve", required=True)

    points = []
    params = _gate_common(cfg, grid)
    pattern = params["pattern"]  # kind string, or a Pattern from --pattern-file
    cor_kwargs = dict(
        normalize=params["normalize"],
        distance_metric=params["distance_metric"],
        indicator_source=params["indicator_source"],
        conf_floor=params["conf_floor"],
        iou_threshold=iou_threshold,
        threads=threads,
    )
    if "clf" in families:
        t_clf_values = _float_list(_get(cfg, "t_clf_values", required=True))
        points += sweep_classifier(
            scenes, cost, t_clf_values, iou_threshold=iou_threshold, threads=threads
        )
    if "cor" in families:
        t_cor_values = _float_list(_get(cfg, "t_cor_values", required=True))
        points += sweep_correlation(
            scenes, cost, pattern, params["weights"], t_cor_values, **cor_kwargs
        )
    if "combined" in families:
        t_cor_values = _float_list(_get(cfg, "t_cor_values", required=True))
        t_clf_values = _float_list(_get(cfg, "t_clf_values", required=True))
        points += sweep_combined(
            scenes, cost, pattern, params["weights"], t_cor_values, t_clf_values, **cor_kwargs
        )
    if "random" in families:
        for kf in _float_list(_get(cfg, "keep_fractions", required=True)):
            points.append(random_baseline(scenes, cost, kf, seed, iou_threshold=iou_threshold))

    emit_curves(points, out_curve)
    manifest_path = _get(cfg, "out_manifest", str(out_curve) + ".manifest.json")
    manifest_cfg = {
        "scene_dirs": scene_dirs,
        "rows": grid.rows,
        "cols": grid.cols,
        "tile_size_px": grid.tile_size_px,
        "families": families,
        "pattern": pattern.kind if hasattr(pattern, "kind") else pattern,
        "weights": list(params["weights"]),
        "normalize": params["normalize"],
        "distance_metric": params["distance_metric"],
        "indicator_source": params["indicator_source"],
        "conf_floor": params["conf_floor"],
        "iou_threshold": iou_threshold,
        "t_clf_values": list(_float_list(_get(cfg, "t_clf_values", ()))),
        "t_cor_values": list(_float_list(_get(cfg, "t_cor_values", ()))),
        "keep_fractions": list(_float_list(_get(cfg, "keep_fractions", ()))),
        "out_curve": str(out_curve),
    }
    write_manifest(manifest_path, "sweep", manifest_cfg, cost, seed)


def cmd_synth(cfg: dict) -> None:
    out_dir = _get(cfg, "out_dir", required=True)
    seed = _get(cfg, "seed", required=True)
    kwargs = {"seed": int(seed)}
    for key in (
        "rows",
        "cols",
        "tile_size_px",
        "cluster_count",
    ):
        value = _get(cfg, key)
        if value is not None:
            kwargs[key] = int(value)
    for key in (
        "positive_tile_fraction",
        "vessels_per_positive_tile_mean",
        "cluster_spread_tiles",
        "clf_mean_ship",
        "clf_mean_empty",
        "clf_sd",
        "detector_recall",
        "detector_fp_rate",
        "box_min_px",
        "box_max_px",
    ):
        value = _get(cfg, key)
        if value is not None:
            kwargs[key] = float(value)
    config = SynthConfig(**kwargs)
    scene = make_perfect_scene(config) if _get(cfg, "perfect", False) else make_scene(config)
    write_scene_bundle(scene, out_dir, config)


def cmd_calibrate(cfg: dict) -> None:
    cost = calibrate_cost_model(
        baseline_total=float(_get(cfg, "baseline_total", required=True)),
        scenes=int(_get(cfg, "scenes", required=True)),
        tiles_per_scene=int(_get(cfg, "tiles_per_scene", required=True)),
        classify_per_scene=float(_get(cfg, "classify_per_scene", 0.0)),
        load_per_scene=float(_get(cfg, "load_per_scene", 0.0)),
    )
    write_json_atomic(_get(cfg, "out", required=True), cost.to_dict())


_HANDLERS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _HANDLERS[args.command](merge_config(args))
        return 0
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SceneFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:  # anything else is a bug, not a usage problem
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
