"""Command-line entry points: track, eval, bench, generate, config."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

from .config import DESCRIPTIONS, ConfigError, EngineConfig, dump_config, from_flat, load_config, reference_markdown, to_flat
from .ingest import (
    IngestError,
    SceneSpec,
    dumps,
    generate_synthetic_scene,
    read_kitti_detections,
    read_mot_detections,
    read_mot_gt,
    read_mot_results,
    write_mot_detections,
    write_mot_gt,
    write_mot_results,
)
from .metrics import MetricsError, evaluate
from .pipeline import process_sequence, write_event_log, write_timing

log = logging.getLogger("abtrack")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class UsageError(Exception):
    pass


def _config_epilog() -> str:
    lines = ["config keys (flat JSON file or --set key=value):"]
    for key, value in to_flat(EngineConfig()).items():
        lines.append(f"  {key} = {json.dumps(value)}    {DESCRIPTIONS.get(key, '')}")
    return "\n".join(lines)


class _Formatter(argparse.ArgumentDefaultsHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


def _parse_sets(items: Sequence[str]) -> Dict[str, object]:
    out: Dict[str, object] = {}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            out[key.strip()] = raw
    return out


def _effective_config(args: argparse.Namespace) -> EngineConfig:
    cfg = EngineConfig()
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise UsageError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    sets = _parse_sets(getattr(args, "set", None) or [])
    return from_flat(sets, cfg) if sets else cfg


def _need_file(path: str, what: str) -> None:
    if not os.path.isfile(path):
        raise UsageError(f"{what} not found: {path}")


# --------------------------------------------------------------------------
# commands


def cmd_track(args: argparse.Namespace) -> int:
    _need_file(args.dets, "detection file")
    cfg = _effective_config(args)
    t0 = time.perf_counter()
    reader = read_mot_detections if args.format == "mot" else read_kitti_detections
    dets = reader(args.dets)
    t_ingest = time.perf_counter() - t0
    if cfg.image_size is None:
        rects = [d.rect for frame in dets.values() for d in frame]
        if rects:
            size = (max(r.x2 for r in rects), max(r.y2 for r in rects))
            cfg = dataclasses.replace(cfg, image_size=size)
            log.info("image size inferred from detections: %.0fx%.0f", *size)
    if args.export_asp:
        os.makedirs(args.export_asp, exist_ok=True)
    expl = process_sequence(dets, cfg, export_dir=args.export_asp)
    with open(args.out_tracks, "w", encoding="utf-8") as fh:
        write_mot_results(expl.hyp_frames(), fh)
    with open(args.out_events, "w", encoding="utf-8") as fh:
        write_event_log(expl, fh)
    if args.out_timing:
        with open(args.out_timing, "w", encoding="utf-8") as fh:
            write_timing(expl, fh)
    med, p95 = expl.timing_stats()
    log.info(
        "%d frames, %d tracks, %d events, %d warnings; ingest %.1f ms, median %.2f ms/frame, p95 %.2f",
        len(expl.timing), len(expl.tracks), len(expl.events), len(expl.warnings), 1000 * t_ingest, med, p95,
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    _need_file(args.gt, "ground-truth file")
    _need_file(args.hyp, "hypothesis file")
    gt = read_mot_gt(args.gt)
    hyp = read_mot_results(args.hyp)
    if not gt:
        raise UsageError("ground truth is empty")
    lo, hi = min(gt), max(gt)
    outside = [t for t in hyp if not lo <= t <= hi]
    if outside:
        log.warning("hypothesis frames %d..%d fall outside ground truth %d..%d; evaluating on the overlap",
                    min(outside), max(outside), lo, hi)
        hyp = {t: v for t, v in hyp.items() if lo <= t <= hi}
    report = evaluate(gt, hyp, args.iou, frames=list(range(lo, hi + 1)))
    print(report.table())
    if args.json:
        print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _bench_rows(args: argparse.Namespace) -> List[dict]:
    rows = []
    cfg = _effective_config(args)
    for n in args.tracks:
        spec = SceneSpec(
            n_tracks=n,
            overlap_fraction=args.overlap if n > 1 else 0.0,
            n_frames=args.frames,
            image_size=tuple(args.image_size),
            dropout=args.dropout,
            jitter=args.jitter,
            seed=args.seed,
        )
        _, dets = generate_synthetic_scene(spec)
        run_cfg = dataclasses.replace(cfg, image_size=spec.image_size)
        outputs = set()
        meds, p95s = [], []
        for _ in range(args.repeat):
            expl = process_sequence(dets, run_cfg)
            med, p95 = expl.timing_stats()
            meds.append(med)
            p95s.append(p95)
            outputs.add(dumps(write_mot_results, expl.hyp_frames()) + dumps(write_event_log, expl))
        med = min(meds)
        rows.append(
            {
                "tracks": n,
                "overlap": spec.overlap_fraction,
                "frames": args.frames,
                "ms_median": med,
                "ms_p95": min(p95s),
                "fps": 1000.0 / med if med > 0 else float("inf"),
                "deterministic": len(outputs) == 1,
            }
        )
    return rows


def cmd_bench(args: argparse.Namespace) -> int:
    rows = _bench_rows(args)
    header = f"{'tracks':>6} {'overlap':>7} {'frames':>6} {'ms/frame':>9} {'p95 ms':>8} {'fps':>8} {'repeat-identical':>16}"
    print(header)
    for r in rows:
        print(
            f"{r['tracks']:>6} {r['overlap']:>7.2f} {r['frames']:>6} {r['ms_median']:>9.2f} "
            f"{r['ms_p95']:>8.2f} {r['fps']:>8.1f} {str(r['deterministic']):>16}"
        )
    if args.json:
        print(json.dumps(rows))
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    spec = SceneSpec(
        n_tracks=args.tracks,
        overlap_fraction=args.overlap,
        n_frames=args.frames,
        image_size=tuple(args.image_size),
        dropout=args.dropout,
        jitter=args.jitter,
        seed=args.seed,
    )
    gt, dets = generate_synthetic_scene(spec)
    with open(args.out_dets, "w", encoding="utf-8") as fh:
        write_mot_detections(dets, fh)
    with open(args.out_gt, "w", encoding="utf-8") as fh:
        write_mot_gt(gt, fh)
    return EXIT_OK


def cmd_config(args: argparse.Namespace) -> int:
    if args.action == "reference":
        sys.stdout.write(reference_markdown())
    else:
        sys.stdout.write(dump_config(_effective_config(args)))
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _scene_args(p: argparse.ArgumentParser, image_size: Sequence[int]) -> None:
    p.add_argument("--overlap", type=float, default=0.2, help="fraction of track pairs steered through crossings")
    p.add_argument("--frames", type=int, default=200, help="frames per scene")
    p.add_argument("--seed", type=int, default=0, help="scene seed")
    p.add_argument("--dropout", type=float, default=0.0, help="per-frame detection dropout probability")
    p.add_argument("--jitter", type=float, default=0.0, help="detection jitter std in pixels")
    p.add_argument("--image-size", type=int, nargs=2, default=list(image_size), metavar=("W", "H"))


def _config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat JSON config with dotted keys")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abtrack", description="Online abductive multi-object tracker.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="track a detection file", formatter_class=_Formatter, epilog=_config_epilog())
    p.add_argument("--dets", required=True, help="detection file")
    p.add_argument("--format", choices=("mot", "kitti"), default="mot", help="detection file layout")
    _config_args(p)
    p.add_argument("--out-tracks", required=True, help="output tracks (MOT result format)")
    p.add_argument("--out-events", required=True, help="output event log (JSON lines)")
    p.add_argument("--out-timing", help="output per-frame milliseconds")
    p.add_argument("--export-asp", metavar="DIR", help="write one ASP program per frame into DIR")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="CLEAR-MOT evaluation", formatter_class=_Formatter)
    p.add_argument("--gt", required=True, help="ground truth (MOT GT format)")
    p.add_argument("--hyp", required=True, help="hypothesis tracks (MOT result format)")
    p.add_argument("--iou", type=float, default=0.5, help="IoU needed for a match")
    p.add_argument("--json", action="store_true", help="also print the report as JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="timing on synthetic scenes", formatter_class=_Formatter, epilog=_config_epilog())
    p.add_argument("--tracks", type=int, nargs="+", default=[5, 10, 20, 50], help="track counts to run")
    _scene_args(p, (1920, 1080))
    p.add_argument("--repeat", type=int, default=1, help="runs per scene (fastest is reported)")
    p.add_argument("--json", action="store_true", help="also print rows as JSON")
    _config_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate", help="write a synthetic scene", formatter_class=_Formatter)
    p.add_argument("--tracks", type=int, default=5, help="number of objects")
    _scene_args(p, (640, 480))
    p.add_argument("--out-dets", required=True, help="output detections (MOT format)")
    p.add_argument("--out-gt", required=True, help="output ground truth (MOT GT format)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("config", help="print the effective config or the key reference", formatter_class=_Formatter)
    p.add_argument("action", choices=("dump", "reference"), nargs="?", default="dump")
    _config_args(p)
    p.set_defaults(func=cmd_config)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"abtrack: bad config key {exc.key}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, IngestError) as exc:
        print(f"abtrack: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MetricsError, ValueError, RuntimeError, OSError) as exc:
        print(f"abtrack: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
