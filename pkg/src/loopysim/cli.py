"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 dynamics divergence,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import count_lobes, amplitude, summarize_shape, turning_distance
from .config import ConfigError, build_run, build_schedule, build_sweep, default_template, load_config
from .experiments import hysteresis_report, run_sweep, run_trajectory, run_trial, shape_for_distance
from .geometry import reconstruct_polygon
from . import outputs
from .render import ShapeStyle, render_shape, render_sweep_svg

log = logging.getLogger("loopysim")

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4
OUT_ENV = "LOOPYSIM_OUT"


class _IOFailure(Exception):
    pass


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or "loopysim-out"
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _IOFailure(f"cannot create output directory {path}: {exc}") from None
    return path


def _load(args) -> dict:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        raise _IOFailure(f"cannot read config {args.config}: {exc}") from None
    cfg = copy.deepcopy(cfg)
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
        if "sweep" in cfg:
            cfg["sweep"]["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None and "sweep" in cfg:
        cfg["sweep"]["trials"] = args.trials
    return cfg


def _shape_svg(summary, cell_length, path, title):
    angles = summary.projected if summary.projected is not None else summary.angles
    geom = reconstruct_polygon(angles, cell_length)
    return outputs.write_text(path, render_shape(geom, ShapeStyle(title=title)))


def cmd_simulate(args) -> int:
    started = outputs.now()
    cfg = _load(args)
    run = build_run(cfg)
    out = _out_dir(args)
    summary, record = run_trial(
        run.params,
        run.spec,
        run.seed,
        run.criterion,
        noise_sigma=run.noise_sigma,
        initial_angles=run.initial_angles,
        stride=run.stride,
        divergence_bound=run.divergence_bound,
    )
    files = [
        outputs.write_timeseries(out / "timeseries.csv", record),
        outputs.write_json(
            out / "summary.json",
            {
                **summary.to_dict(),
                "steady_step": record.segments[0]["steady_step"],
                "end_step": record.segments[0]["end_step"],
                "diverged": record.diverged,
                "metadata": record.metadata,
            },
        ),
        _shape_svg(summary, run.spec.cell_length, out / "shape.svg", f"seed {run.seed}"),
    ]
    if not args.no_figures:
        from .plotting import plot_theta

        files.append(plot_theta(record, out / "theta.png"))
    outputs.write_manifest(out, "simulate", cfg, files, started)
    if record.diverged:
        log.error("dynamics diverged at step %s", record.diverged["step"])
        return EXIT_DIVERGED
    log.info("lobes=%d amplitude=%.6g valid=%s -> %s", summary.lobe_count, summary.amplitude, summary.valid, out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = outputs.now()
    cfg = _load(args)
    config = build_sweep(cfg)
    out = _out_dir(args)
    result = run_sweep(config, threads=args.threads)
    files = [
        outputs.write_sweep(out / "sweep.csv", result),
        outputs.write_text(out / "sweep_map.svg", render_sweep_svg(result)),
    ]
    if not args.no_figures:
        from .plotting import plot_amplitude_map, plot_sweep_map

        files.append(plot_sweep_map(result, out / "sweep_map.png"))
        files.append(plot_amplitude_map(result, out / "amplitude_map.png"))
    outputs.write_manifest(out, "sweep", cfg, files, started)
    log.info("%d grid points x %d trials -> %s", len(result.points), config.trials, out)
    return EXIT_OK


def cmd_trajectory(args) -> int:
    started = outputs.now()
    cfg = _load(args)
    run = build_run(cfg)
    schedule = build_schedule(cfg)
    out = _out_dir(args)
    record = run_trajectory(
        schedule,
        run.params,
        run.spec,
        run.seed,
        run.criterion,
        noise_sigma=run.noise_sigma,
        initial_angles=run.initial_angles,
        stride=run.stride,
        divergence_bound=run.divergence_bound,
    )
    report = hysteresis_report(record)
    files = [
        outputs.write_timeseries(out / "theta.csv", record),
        outputs.write_turning(out / "turning_distance.csv", record),
        outputs.write_json(out / "hysteresis.json", report),
    ]
    spec = run.spec
    for seg in record.segments:
        k = max(i for i, s in enumerate(record.segment_of_sample) if s == seg["index"])
        files.append(
            _shape_svg(
                record.summaries[k],
                spec.cell_length,
                out / f"keyframe_{seg['index']:02d}.svg",
                f"segment {seg['index']}: {seg['param']}={seg['value']:g}",
            )
        )
    if not args.no_figures:
        from .plotting import plot_theta, plot_turning

        files.append(plot_theta(record, out / "theta.png"))
        files.append(plot_turning(record, out / "turning_distance.png"))
    outputs.write_manifest(out, "trajectory", cfg, files, started)
    if record.diverged:
        log.error("dynamics diverged in segment %s", record.diverged["segment"])
        return EXIT_DIVERGED
    log.info(
        "lobes %s -> %s, restored=%s -> %s",
        report["initial_lobe_count"],
        report["final_lobe_count"],
        report["restored"],
        out,
    )
    return EXIT_OK


def _pick_sample(data, args) -> int:
    if args.step is not None:
        hits = np.flatnonzero(data["steps"] == args.step)
        if hits.size == 0:
            raise ConfigError(f"step {args.step} not found in {args.input}")
        return int(hits[0])
    return int(args.sample) if args.sample is not None else len(data["steps"]) - 1


def cmd_render(args) -> int:
    if args.input:
        try:
            data = outputs.read_timeseries(args.input)
        except OSError as exc:
            raise _IOFailure(f"cannot read {args.input}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        k = _pick_sample(data, args)
        angles = data["theta"][k]
        q_act = data["q_act"][k]
        title = f"step {data['steps'][k]}"
    else:
        try:
            angles = np.asarray(json.loads(Path(args.angles).read_text()), dtype=float)
        except OSError as exc:
            raise _IOFailure(f"cannot read {args.angles}: {exc}") from None
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{args.angles}: {exc}") from None
        q_act = None
        title = None
    if args.project:
        summary = summarize_shape(q_act if q_act is not None else angles, angles, args.cell_length)
        angles = shape_for_distance(summary)
    geom = reconstruct_polygon(angles, args.cell_length)
    out = Path(args.out or (Path(os.environ.get(OUT_ENV, ".")) / "shape.svg"))
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        outputs.write_text(out, render_shape(geom, ShapeStyle(title=title)))
    except OSError as exc:
        raise _IOFailure(f"cannot write {out}: {exc}") from None
    return EXIT_OK


def cmd_analyze(args) -> int:
    try:
        data = outputs.read_timeseries(args.input)
    except OSError as exc:
        raise _IOFailure(f"cannot read {args.input}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(args)
    summaries = [summarize_shape(qa, th, args.cell_length) for qa, th in zip(data["q_act"], data["theta"])]
    ref_idx = args.reference if args.reference is not None else len(summaries) - 1
    ref = shape_for_distance(summaries[ref_idx])
    dist = [turning_distance(ref, shape_for_distance(s)) for s in summaries]
    rows = (
        (data["steps"][k], data["times"][k], data["segments"][k], dist[k], s.lobe_count, s.amplitude, s.valid)
        for k, s in enumerate(summaries)
    )
    files = [outputs.write_csv(out / "analysis.csv", outputs.TURNING_COLUMNS, rows)]
    final = data["q_act"][-1]
    files.append(
        outputs.write_json(
            out / "analysis.json",
            {
                "samples": len(summaries),
                "reference_sample": ref_idx,
                "final_lobe_count": count_lobes(final),
                "final_amplitude": amplitude(final),
                "final_valid": summaries[-1].valid,
            },
        )
    )
    return EXIT_OK


def cmd_template(args) -> int:
    text = json.dumps(default_template(), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopysim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"loopysim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./loopysim-out)")
        if seed:
            sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--no-figures", action="store_true", help="skip matplotlib PNG figures")

    sp = sub.add_parser("simulate", help="one trial from noise to steady state")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="lobe/amplitude map over two parameters")
    common(sp)
    sp.add_argument("--threads", type=int, default=1, help="worker threads (does not change output)")
    sp.add_argument("--trials", type=int, help="override trials per grid point")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("trajectory", help="step parameters up and down, measure hysteresis")
    common(sp)
    sp.set_defaults(func=cmd_trajectory)

    sp = sub.add_parser("render", help="SVG of one saved configuration")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="time-series CSV written by simulate/trajectory")
    src.add_argument("--angles", help="JSON array of joint angles")
    sp.add_argument("--sample", type=int, help="sample index (default last)")
    sp.add_argument("--step", type=int, help="pick the sample at this step")
    sp.add_argument("--project", action="store_true", help="render the closure-projected body")
    sp.add_argument("--cell-length", type=float, default=1.0)
    sp.add_argument("--out", help="SVG path")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("analyze", help="recompute metrics from a saved time series")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    sp.add_argument("--reference", type=int, help="reference sample for turning distance (default last)")
    sp.add_argument("--cell-length", type=float, default=1.0)
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("template", help="print a configuration with every default filled in")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_template)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
