"""Greedy frame-to-frame IoU linker used as the comparison baseline.

Each frame links detections to the previous frame's boxes greedily by
descending IoU. There is no motion model and no memory: a track that misses
one frame is gone, and its object comes back under a new id.
"""
from __future__ import annotations

from typing import Dict, List, Mapping, Tuple

from .geometry import Rect, iou_matrix
from .ingest import Detection, HypFrames


def greedy_track(
    dets: Mapping[int, List[Detection]],
    iou_threshold: float = 0.3,
    conf_threshold: float = 0.5,
) -> HypFrames:
    out: HypFrames = {}
    prev: List[Tuple[int, Rect]] = []
    prev_t = None
    next_id = 1
    for t in sorted(dets):
        if prev_t is not None and t != prev_t + 1:
            prev = []
        cur = [d for d in dets[t] if d.confidence >= conf_threshold]
        m = iou_matrix([r for _, r in prev], [d.rect for d in cur])
        pairs = sorted(
            ((m[i, j], i, j) for i in range(len(prev)) for j in range(len(cur)) if m[i, j] >= iou_threshold),
            key=lambda x: (-x[0], x[1], x[2]),
        )
        ids: Dict[int, int] = {}
        taken = set()
        for _, i, j in pairs:
            if i in taken or j in ids:
                continue
            taken.add(i)
            ids[j] = prev[i][0]
        row = []
        for j, d in enumerate(cur):
            if j not in ids:
                ids[j] = next_id
                next_id += 1
            row.append((ids[j], d.rect, d.confidence))
        out[t] = row
        prev = [(tid, r) for tid, r, _ in row]
        prev_t = t
    return out
