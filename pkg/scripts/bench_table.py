"""Per-frame time against track count, with an overlap sweep.

Thin wrapper over ``abtrack bench`` that also varies the overlap fraction and
optionally writes the rows as JSON.
"""
import argparse
import json
import types

from abtrack.cli import _bench_rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tracks", type=int, nargs="+", default=[5, 10, 20, 50])
    ap.add_argument("--overlaps", type=float, nargs="+", default=[0.0, 0.2, 0.5])
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write rows to this file")
    args = ap.parse_args()

    rows = []
    print(f"{'overlap':>7} {'tracks':>6} {'ms/frame':>9} {'p95 ms':>8} {'fps':>8}")
    for overlap in args.overlaps:
        ns = types.SimpleNamespace(
            tracks=args.tracks, overlap=overlap, frames=args.frames, image_size=[1920, 1080],
            dropout=0.0, jitter=0.0, seed=args.seed, repeat=args.repeat, config=None, set=[],
        )
        for r in _bench_rows(ns):
            rows.append(r)
            print(f"{overlap:>7.2f} {r['tracks']:>6} {r['ms_median']:>9.2f} {r['ms_p95']:>8.2f} {r['fps']:>8.1f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)


if __name__ == "__main__":
    main()
