"""The online frame loop.

Per frame: predict every live track, build the problem, solve it, apply the
hypothesis, step event effects, then look ahead for hidden tracks. Only the
current frame's detections are ever read.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import IO, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .abduction import (
    Hypothesis,
    Track,
    TrackStatus,
    apply_hypothesis,
    build_problem,
    enumerate_actions,
    solve,
)
from .anticipation import ReappearancePrediction, HiddenEntityWarning, hidden_entity_warning, predict_unhide
from .asp import export_asp
from .config import EngineConfig
from .events import (
    EventAtom,
    EventKind,
    EventRecord,
    FluentState,
    Visibility,
    step_effects,
    visibility,
)
from .geometry import Rect, iou
from .ingest import Detection, HypFrames
from .motion import kalman_predict

log = logging.getLogger(__name__)

# IoU above which the generator and the hides_behind gate treat a box as hidden;
# overlaps below it mark the smaller box partially occluded
PARTIAL_OCCLUSION_IOU = 0.5

FrameStream = Union[Mapping[int, Sequence[Detection]], Iterable[Tuple[int, Sequence[Detection]]]]


class SequenceError(ValueError):
    pass


@dataclass
class FrameTiming:
    t: int
    ms: float
    n_tracks: int
    n_dets: int


@dataclass
class Explanation:
    tracks: List[Track] = field(default_factory=list)
    events: List[EventRecord] = field(default_factory=list)
    warnings: List[HiddenEntityWarning] = field(default_factory=list)
    predictions: List[ReappearancePrediction] = field(default_factory=list)
    hypotheses: List[Hypothesis] = field(default_factory=list)
    fluents: FluentState = field(default_factory=FluentState)
    timing: List[FrameTiming] = field(default_factory=list)

    def hyp_frames(self) -> HypFrames:
        out: Dict[int, list] = {}
        for tr in self.tracks:
            for e in tr.history:
                out.setdefault(e.t, []).append((tr.id, e.rect, e.confidence))
        return {t: sorted(out[t], key=lambda x: x[0]) for t in sorted(out)}

    def timing_stats(self) -> Tuple[float, float]:
        """(median, p95) milliseconds per frame."""
        if not self.timing:
            return (0.0, 0.0)
        ms = np.array([ft.ms for ft in self.timing])
        return float(np.median(ms)), float(np.percentile(ms, 95))


class Engine:
    def __init__(self, cfg: EngineConfig, export_dir: Optional[str] = None, keep_hypotheses: bool = False):
        self.cfg = cfg
        self.export_dir = export_dir
        self.keep_hypotheses = keep_hypotheses
        self.live: List[Track] = []
        self.ended: List[Track] = []
        self.expl = Explanation()
        self.next_id = 1
        self.t: Optional[int] = None
        self.extent = (1.0, 1.0)
        # first frame carrying detections
        self.first_t: Optional[int] = None

    def _image_size(self, dets: Sequence[Detection]) -> Tuple[float, float]:
        if self.cfg.image_size is not None:
            return tuple(self.cfg.image_size)
        w, h = self.extent
        for d in dets:
            w, h = max(w, d.rect.x2), max(h, d.rect.y2)
        self.extent = (w, h)
        return self.extent

    def step(self, t: int, dets: Sequence[Detection]) -> Hypothesis:
        if self.t is not None and t <= self.t:
            raise SequenceError(f"frame {t} arrives after frame {self.t}")
        for d in dets:
            if d.frame != t:
                raise SequenceError(f"detection for frame {d.frame} delivered at frame {t}")
        t0 = time.perf_counter()
        cfg = self.cfg
        preds = []
        for tr in self.live:
            tr.kalman, pr = kalman_predict(tr.kalman, cfg.kalman, tr.id)
            preds.append(pr)
        size = self._image_size(dets)
        fl = self.expl.fluents
        p = build_problem(
            self.live,
            dets,
            t,
            cfg,
            predictions=preds,
            fluents=fl,
            image_size=size,
            next_track_id=self.next_id,
            startup=self.first_t is None or t < self.first_t + cfg.startup_frames,
            prior_events=self.expl.events,
        )
        if self.export_dir is not None:
            with open(os.path.join(self.export_dir, f"frame_{t:06d}.lp"), "w", encoding="utf-8") as fh:
                fh.write(export_asp(p, cfg))
        h = solve(p, cfg, enumerate_actions(p, cfg))
        tracks = apply_hypothesis(self.live, p, h, cfg)
        for a in h.actions:
            if a.track is not None and a.track >= self.next_id:
                self.next_id = a.track + 1
        records = [EventRecord(t, ev) for ev in h.events]
        touched = {ev.args[0] for ev in h.events}
        records += [EventRecord(t, ev) for ev in self._visibility_events(tracks, t, touched)]
        step_effects(fl, records)
        self.expl.events.extend(records)

        self.live = []
        for tr in tracks:
            (self.ended if tr.status is TrackStatus.ENDED else self.live).append(tr)
        self._anticipate(t, size)
        if dets and self.first_t is None:
            self.first_t = t
        if self.keep_hypotheses:
            self.expl.hypotheses.append(h)
        self.expl.timing.append(FrameTiming(t, 1000.0 * (time.perf_counter() - t0), len(p.tracks), len(dets)))
        self.t = t
        return h

    def _visibility_events(self, tracks: Sequence[Track], t: int, touched: set) -> List[EventAtom]:
        """Observed partial-occlusion changes among tracks assigned at ``t``."""
        fl = self.expl.fluents
        seen = [tr for tr in tracks if tr.status is TrackStatus.ACTIVE and tr.last_seen == t]
        out = []
        for a in seen:
            if a.id in touched:
                continue
            cur = fl.holds_at(visibility(a.id), t)
            if cur is Visibility.FULLY_OCCLUDED:
                continue
            ra = a.history[-1].rect
            occluder = None
            for b in seen:
                if b.id == a.id:
                    continue
                rb = b.history[-1].rect
                # the smaller box is taken to be the farther one
                if (ra.area, -a.id) < (rb.area, -b.id) and 0.0 < iou(ra, rb) < PARTIAL_OCCLUSION_IOU:
                    occluder = b.id
                    break
            if occluder is not None and cur is Visibility.FULLY_VISIBLE:
                out.append(EventAtom(EventKind.BECOMES_PARTIALLY_OCCLUDED, (a.id, occluder)))
            elif occluder is None and cur is Visibility.PARTIALLY_OCCLUDED:
                out.append(EventAtom(EventKind.BECOMES_FULLY_VISIBLE, (a.id,)))
        return out

    def _anticipate(self, t: int, size: Tuple[float, float]) -> None:
        cfg = self.cfg
        ac = cfg.anticipation
        fl = self.expl.fluents
        by_id = {tr.id: tr for tr in self.live}
        by_id.update({tr.id: tr for tr in self.ended})
        preds = []
        for tr in self.live:
            if tr.status is not TrackStatus.HALTED or tr.hidden_by is None:
                continue
            if fl.holds_at(visibility(tr.id), t) is not Visibility.FULLY_OCCLUDED:
                continue
            occ = by_id.get(tr.hidden_by)
            if occ is None:
                continue
            pr = predict_unhide(tr, occ, t, ac.prediction_horizon, cfg.occlusion_iou)
            if pr is not None:
                preds.append(pr)
        self.expl.predictions.extend(preds)
        region = Rect(*cfg.caution_region(size))
        self.expl.warnings.extend(hidden_entity_warning(preds, region, t, ac.warning_horizon))

    def finish(self) -> Explanation:
        self.expl.tracks = sorted(self.ended + self.live, key=lambda tr: tr.id)
        return self.expl


def _frames(dets: FrameStream) -> Iterator[Tuple[int, Sequence[Detection]]]:
    if isinstance(dets, Mapping):
        for t in dets:
            yield t, dets[t]
    else:
        yield from dets


def process_sequence(
    dets: FrameStream,
    cfg: EngineConfig,
    export_dir: Optional[str] = None,
    keep_hypotheses: bool = False,
) -> Explanation:
    """Run the engine over frames in increasing order; gaps are processed as empty frames."""
    eng = Engine(cfg, export_dir, keep_hypotheses)
    for t, frame in _frames(dets):
        if eng.t is not None:
            if t <= eng.t:
                raise SequenceError(f"frame {t} arrives after frame {eng.t}")
            for gap in range(eng.t + 1, t):
                eng.step(gap, [])
        eng.step(t, list(frame))
    return eng.finish()


def write_event_log(expl: Explanation, out: IO[str]) -> None:
    """Events and warnings as JSON lines, in time order (events before warnings)."""
    lines: List[Tuple[int, int, int, str]] = []
    for i, rec in enumerate(expl.events):
        lines.append((rec.t, 0, i, rec.to_json()))
    for i, w in enumerate(expl.warnings):
        lines.append((w.t_issued, 1, i, json.dumps(w.to_dict())))
    for *_, text in sorted(lines):
        out.write(text + "\n")


def write_timing(expl: Explanation, out: IO[str]) -> None:
    for ft in expl.timing:
        out.write(f"{ft.t} {ft.ms:.3f}\n")
