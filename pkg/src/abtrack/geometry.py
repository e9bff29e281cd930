"""Axis-aligned boxes, IoU and qualitative interval / rectangle relations."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np


@dataclass(frozen=True, slots=True)
class Rect:
    """Bounding box in pixels: top-left corner plus width and height."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"non-finite rect {self!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"degenerate rect {self!r}")

    @classmethod
    def from_ltrb(cls, left: float, top: float, right: float, bottom: float) -> "Rect":
        return cls(left, top, right - left, bottom - top)

    @classmethod
    def from_center(cls, cx: float, cy: float, area: float, aspect: float) -> "Rect":
        w = math.sqrt(area * aspect)
        h = area / w
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def x_interval(self) -> "Interval":
        return Interval(self.x, self.x2)

    @property
    def y_interval(self) -> "Interval":
        return Interval(self.y, self.y2)

    def translated(self, dx: float, dy: float) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")


class IaRelation(str, Enum):
    """The thirteen Allen interval relations of ``i`` with respect to ``j``."""

    BEFORE = "before"
    AFTER = "after"
    DURING = "during"
    CONTAINS = "contains"
    STARTS = "starts"
    STARTED_BY = "started_by"
    FINISHES = "finishes"
    FINISHED_BY = "finished_by"
    OVERLAPS = "overlaps"
    OVERLAPPED_BY = "overlapped_by"
    MEETS = "meets"
    MET_BY = "met_by"
    EQUAL = "equal"

    @property
    def converse(self) -> "IaRelation":
        return _CONVERSE[self]


_CONVERSE = {
    IaRelation.BEFORE: IaRelation.AFTER,
    IaRelation.AFTER: IaRelation.BEFORE,
    IaRelation.DURING: IaRelation.CONTAINS,
    IaRelation.CONTAINS: IaRelation.DURING,
    IaRelation.STARTS: IaRelation.STARTED_BY,
    IaRelation.STARTED_BY: IaRelation.STARTS,
    IaRelation.FINISHES: IaRelation.FINISHED_BY,
    IaRelation.FINISHED_BY: IaRelation.FINISHES,
    IaRelation.OVERLAPS: IaRelation.OVERLAPPED_BY,
    IaRelation.OVERLAPPED_BY: IaRelation.OVERLAPS,
    IaRelation.MEETS: IaRelation.MET_BY,
    IaRelation.MET_BY: IaRelation.MEETS,
    IaRelation.EQUAL: IaRelation.EQUAL,
}


class RaRelation(NamedTuple):
    horizontal: IaRelation
    vertical: IaRelation


def _relation(a1: float, a2: float, b1: float, b2: float) -> IaRelation:
    if a2 < b1:
        return IaRelation.BEFORE
    if a2 == b1:
        return IaRelation.MEETS
    if b2 < a1:
        return IaRelation.AFTER
    if b2 == a1:
        return IaRelation.MET_BY
    if a1 == b1:
        if a2 == b2:
            return IaRelation.EQUAL
        return IaRelation.STARTS if a2 < b2 else IaRelation.STARTED_BY
    if a2 == b2:
        return IaRelation.FINISHES if a1 > b1 else IaRelation.FINISHED_BY
    if a1 > b1:
        return IaRelation.DURING if a2 < b2 else IaRelation.OVERLAPPED_BY
    return IaRelation.CONTAINS if a2 > b2 else IaRelation.OVERLAPS


def ia_relation(i: Interval, j: Interval) -> IaRelation:
    """Allen relation holding between ``i`` and ``j`` (exact endpoint comparison)."""
    return _relation(i.lo, i.hi, j.lo, j.hi)


def ra_relation(a: Rect, b: Rect) -> RaRelation:
    """Rectangle-algebra relation: Allen relations of the x and y projections."""
    return RaRelation(_relation(a.x, a.x2, b.x, b.x2), _relation(a.y, a.y2, b.y, b.y2))


def intersection_area(a: Rect, b: Rect) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def intersects(a: Rect, b: Rect) -> bool:
    return intersection_area(a, b) > 0.0


def iou(a: Rect, b: Rect) -> float:
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    if a == b:
        return 1.0
    return inter / (a.area + b.area - inter)


def iou_matrix(rows: Sequence[Rect], cols: Sequence[Rect]) -> np.ndarray:
    """Pairwise IoU, shape ``(len(rows), len(cols))``."""
    if not rows or not cols:
        return np.zeros((len(rows), len(cols)))
    a = np.array([r.as_tuple() for r in rows], dtype=float)
    b = np.array([c.as_tuple() for c in cols], dtype=float)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = ax1 + a[:, 2:3], ay1 + a[:, 3:4]
    bx1, by1 = b[:, 0], b[:, 1]
    bx2, by2 = bx1 + b[:, 2], by1 + b[:, 3]
    iw = np.clip(np.minimum(ax2, bx2) - np.maximum(ax1, bx1), 0.0, None)
    ih = np.clip(np.minimum(ay2, by2) - np.maximum(ay1, by1), 0.0, None)
    inter = iw * ih
    union = (a[:, 2:3] * a[:, 3:4]) + (b[:, 2] * b[:, 3]) - inter
    out = inter / union
    # exact 1.0 for identical boxes, matching the scalar path
    for i, j in np.argwhere(out > 1.0 - 1e-9):
        if rows[i] == cols[j]:
            out[i, j] = 1.0
    return out


# Per-axis relations under which the first box counts as covered by the second.
COVER_RELATIONS = frozenset(
    {
        IaRelation.DURING,
        IaRelation.STARTS,
        IaRelation.FINISHES,
        IaRelation.EQUAL,
        IaRelation.OVERLAPS,
        IaRelation.OVERLAPPED_BY,
    }
)


def covered_by(a: Rect, b: Rect, min_iou: float = 0.0) -> bool:
    """Occlusion gate: ``a`` is substantially covered by ``b``.

    Both projections must be in :data:`COVER_RELATIONS` and the IoU must
    exceed ``min_iou``. ``a`` never extends past ``b`` on both sides of an axis.
    """
    rel = ra_relation(a, b)
    if rel.horizontal not in COVER_RELATIONS or rel.vertical not in COVER_RELATIONS:
        return False
    return iou(a, b) > min_iou


def touches_border(r: Rect, image_size: tuple[float, float], margin: float) -> bool:
    """True if ``r`` reaches into the ``margin``-wide band along the image edge."""
    width, height = image_size
    return r.x < margin or r.y < margin or r.x2 > width - margin or r.y2 > height - margin
