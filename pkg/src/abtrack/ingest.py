"""Detection / ground-truth I/O (MOT and KITTI text layouts) and synthetic scenes."""
from __future__ import annotations

import io
import logging
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import IO, Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np

from .geometry import Rect, iou

log = logging.getLogger(__name__)

Source = Union[str, os.PathLike, IO[str], IO[bytes]]


class ClassLabel(str, Enum):
    CAR = "car"
    VAN = "van"
    TRUCK = "truck"
    PEDESTRIAN = "pedestrian"
    PERSON_SITTING = "person_sitting"
    CYCLIST = "cyclist"
    TRAM = "tram"
    MISC = "misc"


# Integer class column used in MOT-style ground-truth files.
MOT_CLASS_IDS = {
    ClassLabel.PEDESTRIAN: 1,
    ClassLabel.CYCLIST: 2,
    ClassLabel.CAR: 3,
    ClassLabel.VAN: 4,
    ClassLabel.TRUCK: 5,
    ClassLabel.TRAM: 6,
    ClassLabel.PERSON_SITTING: 7,
    ClassLabel.MISC: 8,
}
_MOT_CLASS_BY_ID = {v: k for k, v in MOT_CLASS_IDS.items()}

_KITTI_CLASSES = {
    "Car": ClassLabel.CAR,
    "Van": ClassLabel.VAN,
    "Truck": ClassLabel.TRUCK,
    "Pedestrian": ClassLabel.PEDESTRIAN,
    "Person_sitting": ClassLabel.PERSON_SITTING,
    "Cyclist": ClassLabel.CYCLIST,
    "Tram": ClassLabel.TRAM,
    "Misc": ClassLabel.MISC,
}


class IngestError(ValueError):
    """Unparseable input line; carries the 1-based line number."""

    def __init__(self, lineno: int, line: str, reason: str):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno


@dataclass(frozen=True)
class Detection:
    frame: int
    rect: Rect
    class_label: ClassLabel = ClassLabel.PEDESTRIAN
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if self.frame < 1:
            raise ValueError(f"frame must be >= 1, got {self.frame}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of [0,1]: {self.confidence}")


@dataclass(frozen=True)
class GTEntry:
    gt_id: int
    rect: Rect
    class_label: ClassLabel = ClassLabel.PEDESTRIAN
    visible: bool = True


FrameDetections = Dict[int, List[Detection]]
GroundTruth = Dict[int, List[GTEntry]]
# frame -> [(hyp id, rect, confidence)]
HypFrames = Dict[int, List[Tuple[int, Rect, float]]]


def _read_lines(source: Source) -> List[str]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return fh.read().splitlines()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data.splitlines()


def _group(dets: Iterable[Detection]) -> FrameDetections:
    out: Dict[int, List[Detection]] = defaultdict(list)
    for d in dets:
        out[d.frame].append(d)
    return {f: out[f] for f in sorted(out)}


def read_mot_detections(
    source: Source, class_label: ClassLabel = ClassLabel.PEDESTRIAN
) -> FrameDetections:
    """Parse ``frame,id,left,top,width,height,conf,x,y,z`` lines.

    The id column is ignored. Boxes with non-positive size are skipped with a
    warning; any other malformed line raises :class:`IngestError`.
    """
    dets = []
    for lineno, line in enumerate(_read_lines(source), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 7:
            raise IngestError(lineno, line, "expected at least 7 comma-separated fields")
        try:
            frame = int(float(parts[0]))
            left, top, width, height, conf = (float(p) for p in parts[2:7])
        except ValueError as exc:
            raise IngestError(lineno, line, str(exc)) from None
        if not all(math.isfinite(v) for v in (left, top, width, height, conf)):
            raise IngestError(lineno, line, "non-finite value")
        if frame < 1:
            raise IngestError(lineno, line, "frame index must be >= 1")
        if width <= 0 or height <= 0:
            log.warning("line %d: non-positive box size, skipped", lineno)
            continue
        conf = min(max(conf, 0.0), 1.0)
        dets.append(Detection(frame, Rect(left, top, width, height), class_label, conf))
    return _group(dets)


def read_kitti_detections(source: Source) -> FrameDetections:
    """Parse the KITTI tracking label layout.

    KITTI frames are 0-based and become ``frame + 1``. An 18th column, when
    present, is taken as the detector score (clipped to [0, 1]).
    """
    dets = []
    for lineno, line in enumerate(_read_lines(source), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) < 10:
            raise IngestError(lineno, line, "expected at least 10 whitespace-separated fields")
        kind = parts[2]
        if kind == "DontCare":
            continue
        try:
            frame = int(parts[0]) + 1
            left, top, right, bottom = (float(p) for p in parts[6:10])
            score = float(parts[17]) if len(parts) >= 18 else 1.0
        except ValueError as exc:
            raise IngestError(lineno, line, str(exc)) from None
        if kind not in _KITTI_CLASSES:
            raise IngestError(lineno, line, f"unknown object type {kind!r}")
        if right <= left or bottom <= top:
            log.warning("line %d: empty bbox, skipped", lineno)
            continue
        conf = min(max(score, 0.0), 1.0)
        dets.append(Detection(frame, Rect.from_ltrb(left, top, right, bottom), _KITTI_CLASSES[kind], conf))
    return _group(dets)


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def write_mot_detections(dets: Mapping[int, List[Detection]], out: IO[str]) -> None:
    for frame in sorted(dets):
        for d in dets[frame]:
            r = d.rect
            out.write(f"{frame},-1,{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},{d.confidence:.4f},-1,-1,-1\n")


def write_mot_gt(gt: Mapping[int, List[GTEntry]], out: IO[str]) -> None:
    for frame in sorted(gt):
        for e in gt[frame]:
            r = e.rect
            out.write(
                f"{frame},{e.gt_id},{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},1,"
                f"{MOT_CLASS_IDS[e.class_label]},{1.0 if e.visible else 0.0:.1f}\n"
            )


def read_mot_gt(source: Source) -> GroundTruth:
    """Read ``frame,id,left,top,width,height,flag,class,visibility``; flag 0 rows are ignored."""
    out: Dict[int, List[GTEntry]] = defaultdict(list)
    for lineno, line in enumerate(_read_lines(source), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 6:
            raise IngestError(lineno, line, "expected at least 6 comma-separated fields")
        try:
            frame, gid = int(float(parts[0])), int(float(parts[1]))
            left, top, width, height = (float(p) for p in parts[2:6])
            flag = int(float(parts[6])) if len(parts) > 6 else 1
            cls = _MOT_CLASS_BY_ID.get(int(float(parts[7])), ClassLabel.MISC) if len(parts) > 7 else ClassLabel.PEDESTRIAN
            vis = float(parts[8]) if len(parts) > 8 else 1.0
        except ValueError as exc:
            raise IngestError(lineno, line, str(exc)) from None
        if flag == 0:
            continue
        if width <= 0 or height <= 0:
            log.warning("line %d: non-positive box size, skipped", lineno)
            continue
        out[frame].append(GTEntry(gid, Rect(left, top, width, height), cls, vis > 0))
    return {f: out[f] for f in sorted(out)}


def write_mot_results(hyp: Mapping[int, List[Tuple[int, Rect, float]]], out: IO[str]) -> None:
    for frame in sorted(hyp):
        for tid, r, conf in sorted(hyp[frame], key=lambda e: e[0]):
            out.write(f"{frame},{tid},{_fmt(r.x)},{_fmt(r.y)},{_fmt(r.w)},{_fmt(r.h)},{conf:.4f},-1,-1,-1\n")


def read_mot_results(source: Source) -> HypFrames:
    out: Dict[int, List[Tuple[int, Rect, float]]] = defaultdict(list)
    for lineno, line in enumerate(_read_lines(source), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) < 6:
            raise IngestError(lineno, line, "expected at least 6 comma-separated fields")
        try:
            frame, tid = int(float(parts[0])), int(float(parts[1]))
            left, top, width, height = (float(p) for p in parts[2:6])
            conf = float(parts[6]) if len(parts) > 6 else 1.0
        except ValueError as exc:
            raise IngestError(lineno, line, str(exc)) from None
        if width <= 0 or height <= 0:
            log.warning("line %d: non-positive box size, skipped", lineno)
            continue
        out[frame].append((tid, Rect(left, top, width, height), conf))
    return {f: out[f] for f in sorted(out)}


def dumps(writer, data) -> str:
    buf = io.StringIO()
    writer(data, buf)
    return buf.getvalue()


# --------------------------------------------------------------------------
# synthetic scenes


@dataclass
class SceneSpec:
    n_tracks: int = 5
    overlap_fraction: float = 0.0
    n_frames: int = 100
    image_size: Tuple[int, int] = (640, 480)
    dropout: float = 0.0
    jitter: float = 0.0
    seed: int = 0
    box_size: Tuple[float, float] = (44.0, 56.0)
    speed: Tuple[float, float] = (1.0, 4.0)
    min_relative_speed: float = 2.0
    occlusion_iou: float = 0.5
    classes: Tuple[ClassLabel, ...] = (ClassLabel.PEDESTRIAN,)

    def __post_init__(self) -> None:
        if self.n_tracks < 1 or self.n_frames < 1:
            raise ValueError("n_tracks and n_frames must be >= 1")
        if not 0.0 <= self.overlap_fraction <= 1.0 or not 0.0 <= self.dropout <= 1.0:
            raise ValueError("overlap_fraction and dropout must lie in [0, 1]")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")
        if self.overlap_fraction > 0 and self.n_tracks < 2:
            raise ValueError("overlap_fraction > 0 needs at least two tracks")
        if self.box_size[1] >= min(self.image_size):
            raise ValueError("boxes do not fit in the image")


def _fold(u: np.ndarray, length: float) -> np.ndarray:
    """Reflect unbounded coordinates into [0, length] (elastic bounce)."""
    m = np.mod(u, 2.0 * length)
    return np.where(m <= length, m, 2.0 * length - m)


def _draw_velocity(rng: np.random.Generator, spec: SceneSpec) -> np.ndarray:
    speed = rng.uniform(*spec.speed)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([speed * math.cos(angle), speed * math.sin(angle)])


def n_crossings(spec: SceneSpec) -> int:
    """Number of steered crossings: a fraction of all pairs, capped at one per track."""
    if spec.overlap_fraction <= 0 or spec.n_tracks < 2:
        return 0
    pairs = spec.n_tracks * (spec.n_tracks - 1) // 2
    return int(min(max(1, round(spec.overlap_fraction * pairs)), spec.n_tracks - 1))


def generate_synthetic_scene(spec: SceneSpec) -> Tuple[GroundTruth, FrameDetections]:
    """Bouncing constant-velocity boxes with steered crossings.

    Track index is depth order: lower indices are nearer, drawn at least as
    large on both axes, and occlude higher indices. A box whose IoU with a
    nearer box exceeds ``spec.occlusion_iou`` is flagged invisible and gets
    no detection.
    """
    rng = np.random.default_rng(spec.seed)
    W, H = spec.image_size
    n, T = spec.n_tracks, spec.n_frames

    widths = np.sort(rng.uniform(*spec.box_size, size=n))[::-1]
    heights = np.sort(rng.uniform(*spec.box_size, size=n))[::-1]
    span = np.stack([W - widths, H - heights], axis=1)
    vel = np.stack([_draw_velocity(rng, spec) for _ in range(n)])
    u0 = rng.uniform(0.0, 1.0, size=(n, 2)) * span
    labels = [spec.classes[int(k)] for k in rng.integers(0, len(spec.classes), size=n)]

    # steer a chain of tracks through crossings with an earlier track
    order = rng.permutation(n)
    lo, hi = max(1, int(0.25 * T)), max(2, int(0.75 * T))
    for c in range(n_crossings(spec)):
        j = int(order[c + 1])
        i = int(order[rng.integers(0, c + 1)])
        tc = int(rng.integers(lo, hi))
        for _ in range(100):
            if np.linalg.norm(vel[j] - vel[i]) >= spec.min_relative_speed:
                break
            vel[j] = _draw_velocity(rng, spec)
        pos_i = _fold(u0[i] + vel[i] * tc, span[i])
        centre = pos_i + np.array([widths[i], heights[i]]) / 2.0
        target = np.clip(centre - np.array([widths[j], heights[j]]) / 2.0, 0.0, span[j])
        u0[j] = target - vel[j] * tc

    steps = np.arange(T, dtype=float)[:, None, None]
    pos = _fold(u0[None, :, :] + vel[None, :, :] * steps, span[None, :, :])  # (T, n, 2)

    gt: GroundTruth = {}
    dets: FrameDetections = {}
    for k in range(T):
        frame = k + 1
        rects = [Rect(float(pos[k, i, 0]), float(pos[k, i, 1]), float(widths[i]), float(heights[i])) for i in range(n)]
        visible = [True] * n
        for i in range(n):
            for j in range(i + 1, n):
                if visible[j] and iou(rects[i], rects[j]) > spec.occlusion_iou:
                    visible[j] = False
        gt[frame] = [GTEntry(i + 1, rects[i], labels[i], visible[i]) for i in range(n)]
        frame_dets = []
        for i in range(n):
            drop = rng.uniform()
            noise = rng.normal(0.0, 1.0, size=4) * spec.jitter
            conf = float(rng.uniform(0.6, 1.0))
            if not visible[i] or drop < spec.dropout:
                continue
            r = rects[i]
            if spec.jitter > 0:
                r = Rect(r.x + noise[0], r.y + noise[1], max(1.0, r.w + noise[2]), max(1.0, r.h + noise[3]))
            frame_dets.append(Detection(frame, r, labels[i], conf))
        dets[frame] = frame_dets
    return gt, dets
