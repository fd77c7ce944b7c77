"""``roadsnake`` command line: generate, gtfeat, degrade, trace, baseline, eval, plot.

Exit codes: 0 success, 1 invalid input, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

from roadsnake import formats
from roadsnake.baseline import THRESHOLD_GRID, run_baseline, sweep_thresholds
from roadsnake.csnake import TraceConfig
from roadsnake.formats import FormatError
from roadsnake.groundtruth import GtConfig, gt_features
from roadsnake.metrics import DEFAULT_THRESHOLDS, EvalReport, aggregate, evaluate
from roadsnake.pipeline import extract
from roadsnake.postprocess import PostConfig
from roadsnake.synth import DegradeConfig, Scene, SceneConfig, degrade_features, generate_scene


class CliError(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


# configuration ----------------------------------------------------------

def load_config(path) -> dict:
    if path is None:
        return {}
    obj = formats.read_json(path)
    if not isinstance(obj, dict):
        raise FormatError(f"{path}: config must be a JSON object")
    return obj


def build(cls, config: dict, flags: dict):
    """Dataclass from defaults, overridden by the config file, overridden by flags."""
    names = {f.name for f in fields(cls)}
    unknown = set(config) - names
    if unknown:
        raise CliError(f"unknown {cls.__name__} keys in config: {', '.join(sorted(unknown))}")
    values = dict(config)
    values.update({k: v for k, v in flags.items() if v is not None and k in names})
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid {cls.__name__}: {exc}") from exc


def _section(config: dict, key: str) -> dict:
    """Config files may be flat or hold one object per config class."""
    return config.get(key, {}) if key in config else config


def _pool_map(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


def _scene_dirs(paths) -> list:
    out = []
    for p in map(Path, paths):
        if (p / "annotations.json").exists():
            out.append(p)
        elif (p / "manifest.json").exists():
            out.extend(p / name for name in formats.read_json(p / "manifest.json")["scenes"])
        else:
            raise CliError(f"{p}: not a scene directory (missing annotations.json)")
    return out


# generate ---------------------------------------------------------------

def write_scene(directory, scene: Scene) -> None:
    d = Path(directory)
    cfg = scene.config
    formats.write_json(d / "annotations.json",
                       formats.annotations_to_json(scene.boundaries, cfg.width, cfg.height, cfg.resolution))
    formats.write_json(d / "scene.json", cfg.to_json())
    for name in Scene.RASTERS:
        formats.write_raster(d / name, getattr(scene, name))


def _generate_one(job):
    cfg, directory = job
    write_scene(directory, generate_scene(cfg))
    return directory.name


def cmd_generate(args) -> int:
    config = _section(load_config(args.config), "scene")
    flags = {
        "width": args.width, "height": args.height, "roads": args.roads,
        "road_width_min": args.road_width_min, "road_width_max": args.road_width_max,
        "max_curvature": args.max_curvature, "curb_height": args.curb_height, "resolution": args.resolution,
    }
    base = build(SceneConfig, {k: v for k, v in config.items() if k != "seed"}, flags)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}", 2) from exc
    jobs = [(replace(base, seed=args.seed + i), out / f"scene_{args.seed + i:06d}") for i in range(args.count)]
    names = _pool_map(_generate_one, jobs, args.jobs)
    manifest = {"scenes": names, "seed": args.seed, "count": args.count, "config": replace(base, seed=args.seed).to_json()}
    formats.write_json(out / "manifest.json", manifest)
    sys.stdout.write(formats.dumps_json(manifest))
    return 0


# features ---------------------------------------------------------------

def _gtfeat_one(job):
    directory, cfg = job
    bounds, w, h, _ = formats.read_annotations(directory / "annotations.json")
    formats.write_features(directory, gt_features(bounds, w, h, cfg), "gt")
    return str(directory)


def cmd_gtfeat(args) -> int:
    flags = {"dt_truncation_radius": args.truncation_radius, "endpoint_sigma": args.endpoint_sigma}
    cfg = build(GtConfig, _section(load_config(args.config), "groundtruth"), flags)
    dirs = _scene_dirs(args.scenes)
    for d in _pool_map(_gtfeat_one, [(d, cfg) for d in dirs], args.jobs):
        print(f"{d}: detection.gt endpoints.gt direction.gt")
    return 0


def _scene_seed(directory) -> int:
    p = Path(directory) / "scene.json"
    return int(formats.read_json(p).get("seed", 0)) if p.exists() else 0


def _degrade_one(job):
    directory, cfg, seed = job
    bounds, _, _, _ = formats.read_annotations(directory / "annotations.json")
    f = formats.read_features(directory, "gt")
    formats.write_features(directory, degrade_features(f, cfg, [seed, _scene_seed(directory)], bounds), "deg")
    return str(directory)


def cmd_degrade(args) -> int:
    flags = {
        "blur_sigma": args.blur_sigma, "gap_count": args.gap_count, "gap_length": args.gap_length,
        "noise_sigma": args.noise_sigma, "direction_noise_deg": args.direction_noise,
        "endpoint_jitter": args.endpoint_jitter, "endpoint_fp_count": args.endpoint_fp,
        "endpoint_fn_prob": args.endpoint_fn,
    }
    cfg = build(DegradeConfig, _section(load_config(args.config), "degrade"), flags)
    dirs = _scene_dirs(args.scenes)
    for d in _pool_map(_degrade_one, [(d, cfg, args.seed) for d in dirs], args.jobs):
        print(f"{d}: detection.deg endpoints.deg direction.deg")
    return 0


# extraction ------------------------------------------------------------

def _trace_one(job):
    directory, suffix, tcfg, pcfg, out_name = job
    f = formats.read_features(directory, suffix)
    polys = extract(f, tcfg, pcfg)
    formats.write_polylines(directory / out_name, polys)
    return str(directory), len(polys)


def cmd_trace(args) -> int:
    config = load_config(args.config)
    tcfg = build(TraceConfig, config.get("trace", {}), {"roi_size": args.roi_size, "step_cap": args.step_cap})
    pcfg = build(PostConfig, config.get("postprocess", {}), {"min_polyline_score": args.min_score})
    out_name = args.out or f"trace.{args.features}.json"
    dirs = _scene_dirs(args.scenes)
    for d in dirs:
        for name in formats.FEATURE_NAMES:
            for p in formats.raster_paths(d / f"{name}.{args.features}"):
                if not p.exists():
                    raise CliError(f"missing feature file: {p}")
    for d, n in _pool_map(_trace_one, [(d, args.features, tcfg, pcfg, out_name) for d in dirs], args.jobs):
        print(f"{d}/{out_name}: {n} polylines")
    return 0


def _baseline_one(job):
    directory, suffix, threshold, out_name = job
    s = formats.read_raster(directory / f"detection.{suffix}")
    polys = run_baseline(s, threshold)
    formats.write_polylines(directory / out_name, polys)
    return str(directory), len(polys)


def cmd_baseline(args) -> int:
    dirs = _scene_dirs(args.scenes)
    out_name = args.out or f"baseline.{args.features}.json"
    threshold = args.threshold
    if args.sweep:
        dets = [formats.read_raster(d / f"detection.{args.features}") for d in dirs]
        gts = [formats.read_annotations(d / "annotations.json")[0] for d in dirs]
        threshold, table = sweep_thresholds(dets, gts, THRESHOLD_GRID, args.select_tau)
        print(f"threshold  F1@{args.select_tau:g}px")
        for t in THRESHOLD_GRID:
            print(f"{t:9.2f}  {100 * table[t]:6.2f}")
        print(f"selected threshold: {threshold:.2f}")
    for d, n in _pool_map(_baseline_one, [(d, args.features, threshold, out_name) for d in dirs], args.jobs):
        print(f"{d}/{out_name}: {n} polylines")
    return 0


# evaluation ------------------------------------------------------------

def _thresholds(text: str) -> tuple:
    try:
        vals = tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise CliError(f"bad thresholds {text!r}") from exc
    if not vals or any(v <= 0 for v in vals):
        raise CliError("thresholds must be positive")
    return vals


def _load_gt(path) -> list:
    path = Path(path)
    if path.is_dir():
        path = path / "annotations.json"
    gts = formats.read_polylines(path)
    if not gts:
        raise CliError(f"{path}: ground truth has no boundaries")
    return gts


def table1(report: EvalReport) -> str:
    taus = [f"{t:g}" for t in report.thresholds]
    head = (["P@" + t for t in taus] + ["R@" + t for t in taus] + ["F1@" + t for t in taus] + ["Conn"])
    vals = [100 * v for v in report.precision + report.recall + report.f1] + [100 * report.connectivity]
    widths = [max(len(h), 6) for h in head]
    line1 = " ".join(h.rjust(w) for h, w in zip(head, widths))
    line2 = " ".join(f"{v:.1f}".rjust(w) for v, w in zip(vals, widths))
    return line1 + "\n" + line2


def _report_paths(prefix) -> tuple:
    base = str(prefix)
    for ext in (".json", ".csv"):
        if base.endswith(ext):
            base = base[: -len(ext)]
    return Path(base + ".json"), Path(base + ".csv")


def write_report(prefix, report: EvalReport, per_scene=None) -> None:
    json_path, csv_path = _report_paths(prefix)
    obj = report.to_json()
    if per_scene is not None:
        obj["per_scene"] = [{"scene": name, **r.to_json()} for name, r in per_scene]
    formats.write_json(json_path, obj)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["tau", "precision", "recall", "f1"])
    for row in report.csv_rows():
        w.writerow([repr(v) for v in row])
    formats.atomic_write_bytes(csv_path, buf.getvalue().encode())


def _eval_one(job):
    directory, pred_name, thresholds = job
    preds = formats.read_polylines(directory / pred_name)
    return directory.name, evaluate(preds, _load_gt(directory), thresholds)


def cmd_eval(args) -> int:
    thresholds = _thresholds(args.thresholds)
    if args.scenes:
        if not args.pred:
            raise CliError("--pred NAME is required with scene directories")
        dirs = _scene_dirs(args.scenes)
        per_scene = _pool_map(_eval_one, [(d, args.pred, thresholds) for d in dirs], args.jobs)
        report = aggregate(r for _, r in per_scene)
    else:
        if not (args.pred and args.gt):
            raise CliError("give scene directories, or both --pred FILE and --gt FILE")
        report = evaluate(formats.read_polylines(args.pred), _load_gt(args.gt), thresholds)
        per_scene = None
    out = args.out or "report"
    write_report(out, report, per_scene)
    print(table1(report))
    return 0


def cmd_plot(args) -> int:
    from roadsnake import plotting

    if not args.reports:
        raise CliError("no report files given")
    reports = {}
    for p in map(Path, args.reports):
        if not p.exists():
            raise CliError(f"missing report file: {p}")
        try:
            reports[p.stem] = EvalReport.from_json(formats.read_json(p))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"{p}: not an evaluation report ({exc})") from exc
    out = Path(args.out or "figures")
    out.mkdir(parents=True, exist_ok=True)
    plotting.plot_cdf(reports, out / "connectivity_cdf.svg")
    plotting.write_cdf_csv(reports, out / "connectivity_cdf.csv")
    plotting.plot_prf(reports, out / "prf.svg")
    plotting.write_prf_csv(reports, out / "prf.csv")
    for name in ("connectivity_cdf.svg", "connectivity_cdf.csv", "prf.svg", "prf.csv"):
        print(out / name)
    return 0


# parser -----------------------------------------------------------------

def _common(p, out_help="output path", seed=False):
    p.add_argument("--out", help=out_help)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--config", help="JSON config file (flags override it)")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roadsnake", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic scenes")
    _common(p, "output directory", seed=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--roads", type=int)
    p.add_argument("--road-width-min", type=float)
    p.add_argument("--road-width-max", type=float)
    p.add_argument("--max-curvature", type=float)
    p.add_argument("--curb-height", type=float)
    p.add_argument("--resolution", type=float)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("gtfeat", help="ground-truth feature maps for scenes")
    _common(p)
    p.add_argument("scenes", nargs="+")
    p.add_argument("--truncation-radius", type=float)
    p.add_argument("--endpoint-sigma", type=float)
    p.set_defaults(func=cmd_gtfeat)

    p = sub.add_parser("degrade", help="degraded copies of the ground-truth features")
    _common(p, seed=True)
    p.add_argument("scenes", nargs="+")
    p.add_argument("--blur-sigma", type=float)
    p.add_argument("--gap-count", type=int)
    p.add_argument("--gap-length", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--direction-noise", type=float, help="degrees")
    p.add_argument("--endpoint-jitter", type=float)
    p.add_argument("--endpoint-fp", type=int)
    p.add_argument("--endpoint-fn", type=float)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("trace", help="trace + prune + merge polylines")
    _common(p, "output file name inside each scene")
    p.add_argument("scenes", nargs="+")
    p.add_argument("--features", default="deg", help="feature suffix (gt or deg)")
    p.add_argument("--roi-size", type=int)
    p.add_argument("--step-cap", type=int)
    p.add_argument("--min-score", type=float)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("baseline", help="binarize + skeletonize baseline")
    _common(p, "output file name inside each scene")
    p.add_argument("scenes", nargs="+")
    p.add_argument("--features", default="deg")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--sweep", action="store_true", help="grid-search the threshold against GT")
    p.add_argument("--select-tau", type=float, default=5.0, help="F1 threshold (px) used by --sweep")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="evaluate predictions against ground truth")
    _common(p, "report path prefix (.json and .csv are written)")
    p.add_argument("scenes", nargs="*")
    p.add_argument("--pred", help="prediction file, or its name inside each scene directory")
    p.add_argument("--gt", help="annotation JSON or scene directory (single-file mode)")
    p.add_argument("--thresholds", default=",".join(f"{t:g}" for t in DEFAULT_THRESHOLDS))
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", help="figures from evaluation reports")
    _common(p, "output directory")
    p.add_argument("reports", nargs="*")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"roadsnake: error: {exc}", file=sys.stderr)
        return exc.code
    except (FormatError, FileNotFoundError, ValueError) as exc:
        print(f"roadsnake: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"roadsnake: I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
