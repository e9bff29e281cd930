"""Functional event calculus over track fluents.

Fluent values are stored as change points. An event occurring at ``t`` takes
effect at ``t + 1``; between change points values persist (inertia).
"""
from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Set, Tuple, Union

from .geometry import Rect, covered_by, touches_border


class EventKind(str, Enum):
    ENTERS_FOV = "enters_fov"
    LEAVES_FOV = "leaves_fov"
    HIDES_BEHIND = "hides_behind"
    UNHIDES_FROM_BEHIND = "unhides_from_behind"
    MISSING_DETECTIONS = "missing_detections"
    # observed from geometry after association, never abduced
    BECOMES_PARTIALLY_OCCLUDED = "becomes_partially_occluded"
    BECOMES_FULLY_VISIBLE = "becomes_fully_visible"


ABDUCIBLE_EVENTS = (
    EventKind.ENTERS_FOV,
    EventKind.LEAVES_FOV,
    EventKind.HIDES_BEHIND,
    EventKind.UNHIDES_FROM_BEHIND,
    EventKind.MISSING_DETECTIONS,
)
EVENT_ORDER = {k: i for i, k in enumerate(EventKind)}

_ARITY = {
    EventKind.ENTERS_FOV: 1,
    EventKind.LEAVES_FOV: 1,
    EventKind.HIDES_BEHIND: 2,
    EventKind.UNHIDES_FROM_BEHIND: 2,
    EventKind.MISSING_DETECTIONS: 1,
    EventKind.BECOMES_PARTIALLY_OCCLUDED: 2,
    EventKind.BECOMES_FULLY_VISIBLE: 1,
}


@dataclass(frozen=True)
class EventAtom:
    kind: EventKind
    args: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.args) != _ARITY[self.kind]:
            raise ValueError(f"{self.kind.value} takes {_ARITY[self.kind]} argument(s), got {self.args}")
        if len(self.args) == 2 and self.args[0] == self.args[1]:
            raise ValueError(f"{self.kind.value} needs two distinct tracks, got {self.args}")

    def sort_key(self) -> tuple:
        return (EVENT_ORDER[self.kind], self.args)

    def __str__(self) -> str:
        return f"{self.kind.value}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class EventRecord:
    t: int
    event: EventAtom

    def to_dict(self) -> dict:
        return {"t": self.t, "event": self.event.kind.value, "args": list(self.event.args)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "EventRecord":
        return cls(int(d["t"]), EventAtom(EventKind(d["event"]), tuple(int(a) for a in d["args"])))


def read_event_log(lines: Iterable[str]) -> List[EventRecord]:
    """Event records from a log; warning lines and blanks are skipped."""
    out = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        if d.get("kind") == "warning":
            continue
        out.append(EventRecord.from_dict(d))
    return out


class Visibility(str, Enum):
    FULLY_VISIBLE = "fully_visible"
    PARTIALLY_OCCLUDED = "partially_occluded"
    FULLY_OCCLUDED = "fully_occluded"


class Fluent(NamedTuple):
    name: str
    args: Tuple[int, ...]


def in_fov(trk: int) -> Fluent:
    return Fluent("in_fov", (trk,))


def hidden_by(trk: int, other: int) -> Fluent:
    return Fluent("hidden_by", (trk, other))


def visibility(trk: int) -> Fluent:
    return Fluent("visibility", (trk,))


FluentValue = Union[bool, Visibility]
_DEFAULTS: Dict[str, FluentValue] = {
    "in_fov": False,
    "hidden_by": False,
    "visibility": Visibility.FULLY_VISIBLE,
}


class UnknownTrackError(KeyError):
    pass


class InconsistentEventsError(ValueError):
    pass


class FluentState:
    """Change-point store of fluent values, keyed by fluent instance."""

    def __init__(self) -> None:
        self.born: Dict[int, int] = {}
        self.changes: Dict[Fluent, List[Tuple[int, FluentValue]]] = {}
        self.last_step: Optional[int] = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FluentState):
            return NotImplemented
        return self.born == other.born and self.changes == other.changes

    def __repr__(self) -> str:
        return f"FluentState(tracks={len(self.born)}, fluents={len(self.changes)})"

    def known(self, trk: int) -> bool:
        return trk in self.born

    def register(self, trk: int, t: int) -> None:
        self.born.setdefault(trk, t)

    def holds_at(self, f: Fluent, t: int) -> FluentValue:
        for a in f.args:
            if a not in self.born:
                raise UnknownTrackError(a)
        cps = self.changes.get(f)
        if not cps:
            return _DEFAULTS[f.name]
        idx = bisect_right(cps, t, key=lambda cp: cp[0])
        if idx == 0:
            return _DEFAULTS[f.name]
        return cps[idx - 1][1]

    def hidden_by_at(self, trk: int, t: int) -> Optional[int]:
        """The track currently hiding ``trk``, if any."""
        for f in self.changes:
            if f.name == "hidden_by" and f.args[0] == trk and self.holds_at(f, t):
                return f.args[1]
        return None

    def _set(self, f: Fluent, t: int, value: FluentValue) -> None:
        cps = self.changes.setdefault(f, [])
        if cps and cps[-1][0] > t:
            raise InconsistentEventsError(f"change to {f} at {t} precedes existing change at {cps[-1][0]}")
        if self.holds_at(f, t) == value:
            return
        if cps and cps[-1][0] == t:
            cps[-1] = (t, value)
        else:
            cps.append((t, value))


def holds_at(state: FluentState, f: Fluent, t: int) -> FluentValue:
    return state.holds_at(f, t)


def _effects(ev: EventAtom) -> List[Tuple[Fluent, FluentValue]]:
    k, a = ev.kind, ev.args
    if k is EventKind.ENTERS_FOV:
        return [(in_fov(a[0]), True)]
    if k is EventKind.LEAVES_FOV:
        return [(in_fov(a[0]), False)]
    if k is EventKind.HIDES_BEHIND:
        return [(hidden_by(a[0], a[1]), True), (visibility(a[0]), Visibility.FULLY_OCCLUDED)]
    if k is EventKind.UNHIDES_FROM_BEHIND:
        return [(hidden_by(a[0], a[1]), False), (visibility(a[0]), Visibility.FULLY_VISIBLE)]
    if k is EventKind.BECOMES_PARTIALLY_OCCLUDED:
        return [(visibility(a[0]), Visibility.PARTIALLY_OCCLUDED)]
    if k is EventKind.BECOMES_FULLY_VISIBLE:
        return [(visibility(a[0]), Visibility.FULLY_VISIBLE)]
    return []


def step_effects(state: FluentState, events: Iterable[EventRecord]) -> FluentState:
    """Apply the effects of one time point's events (in place, returns ``state``)."""
    events = list(events)
    if not events:
        return state
    t = events[0].t
    if any(r.t != t for r in events):
        raise InconsistentEventsError("step_effects expects events of a single time point")
    if state.last_step is not None and t < state.last_step:
        raise InconsistentEventsError(f"events at {t} arrive after step {state.last_step}")

    pending: Dict[Fluent, Tuple[FluentValue, EventAtom]] = {}
    for rec in events:
        for f, value in _effects(rec.event):
            prev = pending.get(f)
            if prev is not None and prev[0] != value:
                raise InconsistentEventsError(f"{prev[1]} and {rec.event} at t={t} conflict on {f.name}{f.args}")
            pending[f] = (value, rec.event)

    for rec in events:
        for a in rec.event.args:
            state.register(a, t)
    for f, (value, _) in pending.items():
        state._set(f, t + 1, value)
    state.last_step = t
    return state


def replay(records: Iterable[EventRecord]) -> FluentState:
    """Rebuild a fluent state from an event log, one time point at a time."""
    state = FluentState()
    batch: List[EventRecord] = []
    for rec in records:
        if batch and rec.t != batch[0].t:
            step_effects(state, batch)
            batch = []
        batch.append(rec)
    step_effects(state, batch)
    return state


@dataclass
class SceneContext:
    """Geometry visible to event preconditions at time ``t``.

    ``rects`` maps track ids to predicted boxes (and, for births, the new
    track id to its observation box). ``active`` holds ids of tracks whose
    status is active before association. ``startup`` marks the opening
    frames of a sequence, when objects may already be anywhere in view.
    """

    t: int
    rects: Mapping[int, Rect]
    active: Set[int]
    image_size: Tuple[float, float]
    margin: float = 16.0
    startup: bool = False
    interior_starts: bool = False
    occlusion_iou: float = 0.0


def check_preconditions(event: EventAtom, state: FluentState, ctx: SceneContext) -> bool:
    k, a = event.kind, event.args
    t = ctx.t
    if k is EventKind.ENTERS_FOV:
        trk = a[0]
        if state.known(trk) and state.holds_at(in_fov(trk), t):
            return False
        if ctx.startup or ctx.interior_starts:
            return True
        return trk in ctx.rects and touches_border(ctx.rects[trk], ctx.image_size, ctx.margin)
    if any(not state.known(x) for x in a):
        return False
    if k is EventKind.LEAVES_FOV:
        trk = a[0]
        return bool(state.holds_at(in_fov(trk), t)) and trk in ctx.rects and touches_border(
            ctx.rects[trk], ctx.image_size, ctx.margin
        )
    if k is EventKind.HIDES_BEHIND:
        trk, occ = a
        if state.holds_at(visibility(trk), t) is Visibility.FULLY_OCCLUDED:
            return False
        if occ not in ctx.active or trk not in ctx.rects or occ not in ctx.rects:
            return False
        return covered_by(ctx.rects[trk], ctx.rects[occ], ctx.occlusion_iou)
    if k is EventKind.UNHIDES_FROM_BEHIND:
        return bool(state.holds_at(hidden_by(a[0], a[1]), t))
    if k is EventKind.MISSING_DETECTIONS:
        return True
    # observed visibility changes
    return state.holds_at(visibility(a[0]), t) is not Visibility.FULLY_OCCLUDED
