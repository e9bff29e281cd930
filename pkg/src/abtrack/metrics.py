"""CLEAR-MOT evaluation: MOTA, MOTP, MT/ML, FP, FN, ID switches and fragmentation.

By default only visible ground-truth entries are scored. Hypotheses matched
to an invisible entry are neither true nor false positives.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import iou_matrix
from .ingest import GroundTruth, HypFrames


class MetricsError(ValueError):
    pass


@dataclass
class FrameMatch:
    t: int
    matches: List[Tuple[int, int, float]]  # (gt id, hyp id, iou), scored entries only
    missed: List[int]  # visible gt ids without a hypothesis
    false_positives: List[int]  # hyp ids
    switches: List[int]  # gt ids whose hypothesis id changed


@dataclass
class Correspondences:
    frames: List[FrameMatch] = field(default_factory=list)
    # gt id -> frames in which it is scored
    lifespans: Dict[int, List[int]] = field(default_factory=dict)


@dataclass
class EvalReport:
    mota: float
    motp: float
    mt: float
    ml: float
    fp: int
    fn: int
    idsw: int
    frag: int
    gt_total: int
    matches: int = 0
    n_gt_tracks: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        cols = ["MOTA", "MOTP", "MT", "ML", "FP", "FN", "IDSW", "Frag", "GT"]
        vals = [
            f"{100 * self.mota:.1f}%",
            f"{100 * self.motp:.1f}%",
            f"{100 * self.mt:.1f}%",
            f"{100 * self.ml:.1f}%",
            str(self.fp),
            str(self.fn),
            str(self.idsw),
            str(self.frag),
            str(self.gt_total),
        ]
        widths = [max(len(c), len(v)) for c, v in zip(cols, vals)]
        head = "  ".join(c.rjust(w) for c, w in zip(cols, widths))
        row = "  ".join(v.rjust(w) for v, w in zip(vals, widths))
        return head + "\n" + row


def mota_from_counts(fn: int, fp: int, idsw: int, gt_total: int) -> float:
    if gt_total <= 0:
        raise MetricsError("gt_total must be positive")
    return 1.0 - (fn + fp + idsw) / gt_total


def match_frames(
    gt: GroundTruth,
    hyp: HypFrames,
    iou_match: float = 0.5,
    include_invisible: bool = False,
    frames: Optional[Sequence[int]] = None,
) -> Correspondences:
    if not 0.0 < iou_match <= 1.0:
        raise MetricsError(f"iou_match must lie in (0, 1], got {iou_match}")
    if frames is None:
        frames = sorted(set(gt) | set(hyp))
    out = Correspondences()
    prev: Dict[int, int] = {}
    last_hyp: Dict[int, int] = {}
    for t in frames:
        g_entries = gt.get(t, [])
        h_entries = hyp.get(t, [])
        h_ids = [h[0] for h in h_entries]
        if len(set(h_ids)) != len(h_ids):
            raise MetricsError(f"frame {t}: duplicate hypothesis ids {sorted(h_ids)}")
        g_ids = [g.gt_id for g in g_entries]
        if len(set(g_ids)) != len(g_ids):
            raise MetricsError(f"frame {t}: duplicate ground-truth ids")
        scored = [include_invisible or g.visible for g in g_entries]
        ious = iou_matrix([g.rect for g in g_entries], [h[1] for h in h_entries])

        pairs: Dict[int, int] = {}  # gt row -> hyp col
        g_row = {gid: i for i, gid in enumerate(g_ids)}
        h_col = {hid: j for j, hid in enumerate(h_ids)}
        for gid, hid in prev.items():
            i, j = g_row.get(gid), h_col.get(hid)
            if i is not None and j is not None and ious[i, j] >= iou_match:
                pairs[i] = j
        free_g = [i for i in range(len(g_ids)) if i not in pairs]
        used = set(pairs.values())
        free_h = [j for j in range(len(h_ids)) if j not in used]
        if free_g and free_h:
            sub = ious[np.ix_(free_g, free_h)]
            cost = np.where(sub >= iou_match, -sub, 1.0)
            rows, cols = linear_sum_assignment(cost)
            for r, c in zip(rows, cols):
                if sub[r, c] >= iou_match:
                    pairs[free_g[r]] = free_h[c]

        fm = FrameMatch(t, [], [], [], [])
        matched_h = set(pairs.values())
        for i, gid in enumerate(g_ids):
            if not scored[i]:
                continue
            out.lifespans.setdefault(gid, []).append(t)
            if i in pairs:
                hid = h_ids[pairs[i]]
                fm.matches.append((gid, hid, float(ious[i, pairs[i]])))
                if gid in last_hyp and last_hyp[gid] != hid:
                    fm.switches.append(gid)
                last_hyp[gid] = hid
            else:
                fm.missed.append(gid)
        fm.false_positives = [hid for j, hid in enumerate(h_ids) if j not in matched_h]
        prev = {g_ids[i]: h_ids[j] for i, j in pairs.items()}
        out.frames.append(fm)
    return out


def compute_report(corr: Correspondences, mt_ratio: float = 0.8, ml_ratio: float = 0.2) -> EvalReport:
    gt_total = sum(len(fm.matches) + len(fm.missed) for fm in corr.frames)
    if gt_total == 0:
        raise MetricsError("no ground-truth entries to evaluate")
    fp = sum(len(fm.false_positives) for fm in corr.frames)
    fn = sum(len(fm.missed) for fm in corr.frames)
    idsw = sum(len(fm.switches) for fm in corr.frames)
    ious = [m[2] for fm in corr.frames for m in fm.matches]
    tracked: Dict[int, set] = {}
    for fm in corr.frames:
        for gid, _, _ in fm.matches:
            tracked.setdefault(gid, set()).add(fm.t)
    mt = ml = frag = 0
    for gid, span in corr.lifespans.items():
        hit = tracked.get(gid, set())
        ratio = len(hit) / len(span)
        mt += ratio >= mt_ratio
        ml += ratio <= ml_ratio
        # interruptions between the first and last tracked frame
        flags = [t in hit for t in span]
        if any(flags):
            first = flags.index(True)
            last = len(flags) - 1 - flags[::-1].index(True)
            frag += sum(1 for a, b in zip(flags[first:last], flags[first + 1 : last + 1]) if a and not b)
    n = len(corr.lifespans)
    return EvalReport(
        mota=mota_from_counts(fn, fp, idsw, gt_total),
        motp=float(np.mean(ious)) if ious else 0.0,
        mt=mt / n,
        ml=ml / n,
        fp=fp,
        fn=fn,
        idsw=idsw,
        frag=frag,
        gt_total=gt_total,
        matches=len(ious),
        n_gt_tracks=n,
    )


def evaluate(gt: GroundTruth, hyp: HypFrames, iou_match: float = 0.5, **kw) -> EvalReport:
    return compute_report(match_frames(gt, hyp, iou_match, **kw))


def check_report(r: EvalReport) -> None:
    """Recompute MOTA from the counts; raises on any mismatch."""
    expect = mota_from_counts(r.fn, r.fp, r.idsw, r.gt_total)
    if r.mota != expect:
        raise MetricsError(f"MOTA {r.mota} disagrees with counts ({expect})")
    if not 0.0 <= r.motp <= 1.0 or r.mt + r.ml > 1.0 + 1e-12:
        raise MetricsError(f"report out of range: {r}")
    if r.matches + r.fn != r.gt_total:
        raise MetricsError("matches + FN != gt_total")
