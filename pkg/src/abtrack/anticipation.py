"""Reappearance prediction for hidden tracks and hidden-entity warnings."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional

from .abduction import Track, TrackStatus
from .geometry import Rect, covered_by, intersects
from .motion import extrapolate


class ConfidenceNote(str, Enum):
    WITHIN_HORIZON = "within_horizon"
    BEYOND_HORIZON = "beyond_horizon"


@dataclass(frozen=True)
class ReappearancePrediction:
    track_id: int
    predicted_t: Optional[int]
    predicted_rect: Optional[Rect]
    occluder_id: int
    confidence_note: ConfidenceNote
    t_made: int


@dataclass(frozen=True)
class HiddenEntityWarning:
    track_id: int
    t_issued: int
    predicted_t: int
    predicted_rect: Rect
    region_name: str = "caution"
    kind: str = "HIDDEN_ENTITY"

    def to_dict(self) -> dict:
        r = self.predicted_rect
        return {
            "kind": "warning",
            "type": self.kind,
            "t": self.t_issued,
            "track": self.track_id,
            "predicted_t": self.predicted_t,
            "predicted_rect": [round(v, 3) for v in (r.x, r.y, r.w, r.h)],
            "region": self.region_name,
        }


def _occluder_box(occluder: Track, k: int) -> Rect:
    if occluder.status is TrackStatus.ENDED:
        # held static at its last known box
        return occluder.history[-1].rect if occluder.history else occluder.kalman.rect
    return extrapolate(occluder.kalman, k)


def predict_unhide(
    trk: Track,
    occluder: Track,
    t: int,
    horizon: int,
    occlusion_iou: float = 0.0,
    keep_beyond: bool = False,
) -> Optional[ReappearancePrediction]:
    """First frame ``t + k`` (k <= horizon) at which ``trk`` stops being covered by ``occluder``.

    Both Kalman states are taken to describe time ``t``. Returns None when the
    track stays covered for the whole horizon, unless ``keep_beyond`` asks for
    an explicit ``beyond_horizon`` record.
    """
    for k in range(horizon + 1):
        box = extrapolate(trk.kalman, k)
        if not covered_by(box, _occluder_box(occluder, k), occlusion_iou):
            return ReappearancePrediction(trk.id, t + k, box, occluder.id, ConfidenceNote.WITHIN_HORIZON, t)
    if keep_beyond:
        return ReappearancePrediction(trk.id, None, None, occluder.id, ConfidenceNote.BEYOND_HORIZON, t)
    return None


def hidden_entity_warning(
    preds: Iterable[ReappearancePrediction],
    region: Rect,
    t_now: int,
    warning_horizon: int,
    region_name: str = "caution",
) -> List[HiddenEntityWarning]:
    out = []
    for p in preds:
        if p.confidence_note is not ConfidenceNote.WITHIN_HORIZON:
            continue
        if p.predicted_t - t_now <= warning_horizon and intersects(p.predicted_rect, region):
            out.append(HiddenEntityWarning(p.track_id, t_now, p.predicted_t, p.predicted_rect, region_name))
    return out
