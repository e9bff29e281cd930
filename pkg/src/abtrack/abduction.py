"""Per-frame joint abduction of detection-to-track assignments and events.

A frame's problem is (observations, track predictions, IoU likelihoods). Each
track takes exactly one action and each observation is covered by exactly one
action. Actions that change a track's lifecycle must be explained by an event
whose preconditions hold. Hypotheses are ranked lexicographically:

1. fewest ignored active tracks plus ignored confident detections,
2. largest sum of ``floor(1000 * IoU)`` over assign/resume,
3. smallest weighted action/event cost.

Remaining ties go to the lexicographically smallest action list.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import EngineConfig
from .events import (
    EventAtom,
    EventKind,
    EventRecord,
    FluentState,
    SceneContext,
    Visibility,
    check_preconditions,
    hidden_by,
    in_fov,
    visibility,
)
from .geometry import Rect, iou_matrix
from .ingest import ClassLabel, Detection
from .motion import KalmanState, Prediction, kalman_init, kalman_update

IOU_SCALE = 1000


class TrackStatus(str, Enum):
    ACTIVE = "active"
    HALTED = "halted"
    ENDED = "ended"


class HistoryEntry(NamedTuple):
    t: int
    rect: Rect
    confidence: float


@dataclass
class Track:
    id: int
    class_label: ClassLabel
    status: TrackStatus
    kalman: KalmanState
    born_at: int
    last_seen: int
    hidden_by: Optional[int] = None
    halt_reason: Optional[EventKind] = None
    halted_at: Optional[int] = None
    ended_at: Optional[int] = None
    missed: int = 0
    history: List[HistoryEntry] = field(default_factory=list)

    @property
    def rect(self) -> Rect:
        return self.kalman.rect


class ActionKind(str, Enum):
    ASSIGN = "assign"
    START = "start"
    END = "end"
    HALT = "halt"
    RESUME = "resume"
    IGNORE_DET = "ignore_det"
    IGNORE_TRK = "ignore_trk"


ACTION_ORDER = {k: i for i, k in enumerate(ActionKind)}


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    track: Optional[int] = None
    obs: Optional[int] = None

    def sort_key(self) -> tuple:
        trk = math.inf if self.track is None else self.track
        obs = -1 if self.obs is None else self.obs
        return (trk, ACTION_ORDER[self.kind], obs)

    def __str__(self) -> str:
        args = [str(a) for a in (self.track, self.obs) if a is not None]
        return f"{self.kind.value}({', '.join(args)})"


@dataclass(frozen=True)
class Objective:
    """Lexicographic objective; :meth:`key` is minimised."""

    penalty: int
    likelihood: int
    cost: int

    def key(self) -> Tuple[int, int, int]:
        return (self.penalty, -self.likelihood, self.cost)

    @property
    def likelihood_sum(self) -> float:
        return self.likelihood / IOU_SCALE

    @property
    def cost_vector(self) -> Tuple[int, int]:
        return (self.penalty, self.cost)


@dataclass(frozen=True)
class Hypothesis:
    t: int
    actions: Tuple[Action, ...]
    events: Tuple[EventAtom, ...]
    objective: Objective

    def action_set(self) -> frozenset:
        return frozenset(self.actions)


@dataclass
class ProblemSpec:
    t: int
    tracks: List[Track]
    observations: List[Detection]
    predictions: List[Prediction]
    iou: np.ndarray
    likelihoods: np.ndarray
    fluents: FluentState
    image_size: Tuple[float, float]
    next_track_id: int = 1
    startup: bool = False
    prior_events: Sequence[EventRecord] = ()

    def track_index(self, track_id: int) -> int:
        for i, tr in enumerate(self.tracks):
            if tr.id == track_id:
                return i
        raise KeyError(track_id)


class ProblemError(ValueError):
    pass


class InconsistentHypothesisError(RuntimeError):
    pass


def _infer_image_size(dets: Sequence[Detection], preds: Sequence[Prediction]) -> Tuple[float, float]:
    rects = [d.rect for d in dets] + [p.rect for p in preds]
    if not rects:
        return (1.0, 1.0)
    return (max(r.x2 for r in rects), max(r.y2 for r in rects))


def _synth_fluents(tracks: Sequence[Track], t: int) -> FluentState:
    """A fluent state consistent with track statuses, for standalone problems."""
    st = FluentState()
    for tr in tracks:
        st.register(tr.id, min(tr.born_at, t))
        if tr.hidden_by is not None:
            st.register(tr.hidden_by, min(tr.born_at, t))
    for tr in tracks:
        st._set(in_fov(tr.id), t, True)
        if tr.status is TrackStatus.HALTED and tr.hidden_by is not None:
            st._set(hidden_by(tr.id, tr.hidden_by), t, True)
            st._set(visibility(tr.id), t, Visibility.FULLY_OCCLUDED)
    return st


def build_problem(
    tracks: Sequence[Track],
    dets: Sequence[Detection],
    t: int,
    cfg: EngineConfig,
    *,
    predictions: Optional[Sequence[Prediction]] = None,
    fluents: Optional[FluentState] = None,
    image_size: Optional[Tuple[float, float]] = None,
    next_track_id: Optional[int] = None,
    startup: bool = False,
    prior_events: Sequence[EventRecord] = (),
) -> ProblemSpec:
    """Assemble one frame's problem from already-predicted tracks."""
    live = sorted((tr for tr in tracks if tr.status is not TrackStatus.ENDED), key=lambda tr: tr.id)
    ids = [tr.id for tr in live]
    if len(set(ids)) != len(ids):
        raise ProblemError(f"duplicate track ids: {ids}")
    if predictions is None:
        preds = [Prediction(tr.id, tr.kalman.rect, valid=tr.kalman.n_updates > 0) for tr in live]
    else:
        by_id = {p.track_id: p for p in predictions}
        preds = [by_id[i] for i in ids]
    raw = iou_matrix([p.rect for p in preds], [d.rect for d in dets])
    lik = np.where(raw >= cfg.iou_threshold, raw, 0.0)
    for i, p in enumerate(preds):
        if not p.valid:
            lik[i, :] = 0.0
    size = image_size or cfg.image_size or _infer_image_size(dets, preds)
    if next_track_id is None:
        next_track_id = max(ids, default=0) + 1
    return ProblemSpec(
        t=t,
        tracks=live,
        observations=list(dets),
        predictions=preds,
        iou=raw,
        likelihoods=lik,
        fluents=fluents if fluents is not None else _synth_fluents(live, t),
        image_size=tuple(size),
        next_track_id=next_track_id,
        startup=startup,
        prior_events=prior_events,
    )


# --------------------------------------------------------------------------
# candidate space


@dataclass(frozen=True)
class Option:
    """One candidate action for a track or observation, with its explaining event."""

    kind: ActionKind
    track: Optional[int]
    obs: Optional[int]
    event: Optional[EventAtom]
    penalty: int
    likelihood: int
    cost: int

    @property
    def occluder(self) -> Optional[int]:
        if self.event is not None and self.event.kind is EventKind.HIDES_BEHIND:
            return self.event.args[1]
        return None

    def sort_key(self) -> tuple:
        obs = -1 if self.obs is None else self.obs
        ev = () if self.event is None else self.event.sort_key()
        return (ACTION_ORDER[self.kind], obs, ev)

    def pref_key(self) -> tuple:
        return (self.penalty, -self.likelihood, self.cost, self.sort_key())


# placeholder id for an unborn track in enters_fov preconditions
_NEWBORN = -1


@dataclass
class CandidateSpace:
    track_options: Dict[int, List[Option]]
    obs_options: List[List[Option]]


def _scaled(v: float) -> int:
    return int(math.floor(v * IOU_SCALE))


def admissible_pair(p: ProblemSpec, i: int, j: int, cfg: EngineConfig) -> bool:
    """Integrity constraints on matching track ``i`` with observation ``j``."""
    obs = p.observations[j]
    return (
        p.likelihoods[i, j] > 0.0
        and obs.confidence >= cfg.conf_threshold
        and obs.class_label == p.tracks[i].class_label
    )


def scene_context(p: ProblemSpec, cfg: EngineConfig) -> SceneContext:
    active = {tr.id for tr in p.tracks if tr.status is TrackStatus.ACTIVE}
    return SceneContext(
        t=p.t,
        rects={pr.track_id: pr.rect for pr in p.predictions},
        active=active,
        image_size=p.image_size,
        margin=cfg.fov_margin_px,
        startup=p.startup,
        interior_starts=cfg.interior_starts,
        occlusion_iou=cfg.occlusion_iou,
    )


def enumerate_actions(p: ProblemSpec, cfg: EngineConfig) -> CandidateSpace:
    w = cfg.cost
    ctx = scene_context(p, cfg)
    fl = p.fluents
    track_options: Dict[int, List[Option]] = {}
    # hides_behind needs overlapping boxes; prefilter pairs in one vectorised pass
    rects = [pr.rect for pr in p.predictions]
    overlap = iou_matrix(rects, rects) > 0.0
    for i, tr in enumerate(p.tracks):
        a = tr.id
        opts: List[Option] = []
        adm = [j for j in range(len(p.observations)) if admissible_pair(p, i, j, cfg)]
        leave = EventAtom(EventKind.LEAVES_FOV, (a,))
        can_leave = check_preconditions(leave, fl, ctx)
        if tr.status is TrackStatus.ACTIVE:
            for j in adm:
                opts.append(Option(ActionKind.ASSIGN, a, j, None, 0, _scaled(p.likelihoods[i, j]), 0))
            if can_leave:
                opts.append(Option(ActionKind.END, a, None, leave, 0, 0, w.end))
            for k in np.flatnonzero(overlap[i]):
                other = p.tracks[k]
                if other.id == a:
                    continue
                ev = EventAtom(EventKind.HIDES_BEHIND, (a, other.id))
                if check_preconditions(ev, fl, ctx):
                    opts.append(Option(ActionKind.HALT, a, None, ev, 0, 0, w.halt))
            miss = EventAtom(EventKind.MISSING_DETECTIONS, (a,))
            opts.append(Option(ActionKind.HALT, a, None, miss, 0, 0, w.halt + w.missing))
            opts.append(Option(ActionKind.IGNORE_TRK, a, None, None, 1, 0, 0))
        elif tr.status is TrackStatus.HALTED:
            explained = True
            ev: Optional[EventAtom] = None
            if tr.hidden_by is not None:
                ev = EventAtom(EventKind.UNHIDES_FROM_BEHIND, (a, tr.hidden_by))
                explained = check_preconditions(ev, fl, ctx)
            if explained:
                for j in adm:
                    opts.append(Option(ActionKind.RESUME, a, j, ev, 0, _scaled(p.likelihoods[i, j]), w.resume))
            if can_leave:
                opts.append(Option(ActionKind.END, a, None, leave, 0, 0, w.end))
            opts.append(Option(ActionKind.IGNORE_TRK, a, None, None, 0, 0, 0))
        opts.sort(key=Option.sort_key)
        track_options[a] = opts

    obs_options: List[List[Option]] = []
    newborn_ctx = SceneContext(
        t=ctx.t,
        rects={},
        active=ctx.active,
        image_size=ctx.image_size,
        margin=ctx.margin,
        startup=ctx.startup,
        interior_starts=ctx.interior_starts,
        occlusion_iou=ctx.occlusion_iou,
    )
    for j, obs in enumerate(p.observations):
        confident = obs.confidence >= cfg.conf_threshold
        opts = []
        if confident or cfg.low_conf_starts:
            newborn_ctx.rects = {_NEWBORN: obs.rect}
            enter = EventAtom(EventKind.ENTERS_FOV, (_NEWBORN,))
            if check_preconditions(enter, fl, newborn_ctx):
                opts.append(Option(ActionKind.START, None, j, enter, 0, 0, w.start))
        opts.append(Option(ActionKind.IGNORE_DET, None, j, None, 1 if confident else 0, 0, w.ignore_det))
        obs_options.append(opts)
    return CandidateSpace(track_options, obs_options)


# --------------------------------------------------------------------------
# solver


def _leftover(opts: List[Option]) -> Option:
    """Best action for an observation no track claims (start vs ignore_det)."""
    return min(opts, key=lambda o: ((o.penalty, o.cost), o.sort_key()))


class _Component:
    def __init__(self, tracks: List[int], obs: List[int]) -> None:
        self.tracks = tracks
        self.obs = obs


def _components(space: CandidateSpace, n_obs: int) -> List[_Component]:
    parent: Dict[tuple, tuple] = {}

    def find(x: tuple) -> tuple:
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: tuple, b: tuple) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for tid, opts in space.track_options.items():
        find(("t", tid))
        for o in opts:
            if o.obs is not None:
                union(("t", tid), ("o", o.obs))
            if o.occluder is not None:
                union(("t", tid), ("t", o.occluder))
    for j in range(n_obs):
        find(("o", j))
    groups: Dict[tuple, _Component] = {}
    for node in sorted(parent):
        root = find(node)
        comp = groups.setdefault(root, _Component([], []))
        (comp.tracks if node[0] == "t" else comp.obs).append(node[1])
    return [groups[k] for k in sorted(groups)]


_STOPPERS = (ActionKind.HALT, ActionKind.END)


class _Scale(NamedTuple):
    """Weights that fold the lexicographic key into one exact integer."""

    p: int
    q: int

    def value(self, o: Option) -> int:
        return o.penalty * self.p - o.likelihood * self.q + o.cost


def _scale(space: CandidateSpace) -> _Scale:
    # totals stay below these ranges, so integer order equals tuple order
    track_sets = list(space.track_options.values())
    cmax = 1 + sum(max((o.cost for o in os), default=0) for os in track_sets)
    cmax += sum(max(o.cost for o in os) for os in space.obs_options)
    lmax = 1 + sum(max((o.likelihood for o in os), default=0) for os in track_sets)
    q = 2 * cmax + 1
    return _Scale(2 * (lmax * q + cmax) + 1, q)


def _solve_component(comp: _Component, space: CandidateSpace, sc: _Scale) -> Dict[int, Option]:
    """Exact branch and bound over the component's per-track options.

    The bound at each node is the optimum of the remaining tracks and free
    observations as a plain assignment problem, i.e. with the occluder
    constraints between undecided tracks dropped.
    """
    tracks = comp.tracks
    n = len(tracks)
    if n == 0:
        return {}
    obs = comp.obs
    m = len(obs)
    col = {j: c for c, j in enumerate(obs)}
    options = [space.track_options[tid] for tid in tracks]
    left_v = np.array([sc.value(_leftover(space.obs_options[j])) for j in obs], dtype=float)

    def pref(o: Option) -> tuple:
        return (sc.value(o), o.sort_key())

    if n == 1:
        total = float(left_v.sum())
        best = min(options[0], key=lambda o: (total + sc.value(o) - (left_v[col[o.obs]] if o.obs is not None else 0), o.sort_key()))
        return {tracks[0]: best}

    pos = {tid: k for k, tid in enumerate(tracks)}
    V = np.full((n, m), np.inf)
    pair_opt: Dict[Tuple[int, int], Option] = {}
    free_best: List[Option] = []
    stay_best: List[Option] = []
    for k, opts in enumerate(options):
        for o in opts:
            if o.obs is not None:
                V[k, col[o.obs]] = sc.value(o)
                pair_opt[(k, col[o.obs])] = o
        bare = sorted((o for o in opts if o.obs is None), key=pref)
        free_best.append(bare[0])
        stay_best.append(next(o for o in bare if o.kind not in _STOPPERS))
    free_v = np.array([sc.value(o) for o in free_best], dtype=float)
    stay_v = np.array([sc.value(o) for o in stay_best], dtype=float)
    explore = [sorted(opts, key=pref) for opts in options]

    def relax(k: int, used: frozenset, stay: frozenset) -> Tuple[int, Optional[Option]]:
        stay_mask = np.array([tracks[r] in stay for r in range(k, n)])
        nob = np.where(stay_mask, stay_v[k:], free_v[k:])
        cols = [c for c in range(m) if obs[c] not in used]
        base = float(nob.sum()) + float(left_v[cols].sum())
        hint = stay_best[k] if stay_mask[0] else free_best[k]
        if not cols:
            return int(base), hint
        W = V[k:, cols] - nob[:, None] - left_v[cols][None, :]
        W = np.where(W < 0, W, 0.0)  # inf (inadmissible) and non-improving pairs stay unmatched
        rows, cs = linear_sum_assignment(W)
        gain = float(W[rows, cs].sum())
        if len(rows) and rows[0] == 0 and W[0, cs[0]] < 0:
            hint = pair_opt[(k, cols[cs[0]])]
        return int(base + gain), hint

    best_val: Optional[int] = None
    best_seq: List[tuple] = []
    best_choice: List[Option] = []
    chosen: List[Option] = []
    seq: List[tuple] = []

    def rec(k: int, used: frozenset, stay: frozenset, cur: int) -> None:
        nonlocal best_val, best_seq, best_choice
        if k == n:
            total = cur + int(sum(left_v[c] for c in range(m) if obs[c] not in used))
            if best_val is None or total < best_val or (total == best_val and seq < best_seq):
                best_val, best_seq, best_choice = total, list(seq), list(chosen)
            return
        bound, hint = relax(k, used, stay)
        bound += cur
        if best_val is not None and (bound > best_val or (bound == best_val and seq > best_seq[:k])):
            return
        tid = tracks[k]
        order = [hint] + [o for o in explore[k] if o is not hint]
        for o in order:
            if o.obs is not None and o.obs in used:
                continue
            if o.kind in _STOPPERS and tid in stay:
                continue
            occ = o.occluder
            nstay = stay
            if occ is not None:
                kk = pos[occ]
                if kk < k:
                    if chosen[kk].kind in _STOPPERS:
                        continue
                else:
                    nstay = stay | {occ}
            chosen.append(o)
            seq.append(o.sort_key())
            rec(k + 1, used | {o.obs} if o.obs is not None else used, nstay, cur + sc.value(o))
            chosen.pop()
            seq.pop()

    rec(0, frozenset(), frozenset(), 0)
    return {tracks[k]: o for k, o in enumerate(best_choice)}


def objective_of(options: Sequence[Option]) -> Objective:
    return Objective(
        sum(o.penalty for o in options),
        sum(o.likelihood for o in options),
        sum(o.cost for o in options),
    )


def solve(p: ProblemSpec, cfg: EngineConfig, space: Optional[CandidateSpace] = None) -> Hypothesis:
    if space is None:
        space = enumerate_actions(p, cfg)
    sc = _scale(space)
    picks: Dict[int, Option] = {}
    for comp in _components(space, len(p.observations)):
        picks.update(_solve_component(comp, space, sc))
    used = {o.obs for o in picks.values() if o.obs is not None}
    obs_picks = [_leftover(space.obs_options[j]) for j in range(len(p.observations)) if j not in used]
    return assemble(p, [picks[tr.id] for tr in p.tracks], obs_picks)


def assemble(p: ProblemSpec, track_picks: Sequence[Option], obs_picks: Sequence[Option]) -> Hypothesis:
    """Turn chosen options into a hypothesis, numbering newborn tracks in observation order."""
    actions: List[Action] = []
    events: List[EventAtom] = []
    for o in track_picks:
        actions.append(Action(o.kind, o.track, o.obs))
        if o.event is not None:
            events.append(o.event)
    next_id = p.next_track_id
    for o in sorted(obs_picks, key=lambda o: o.obs):
        if o.kind is ActionKind.START:
            actions.append(Action(ActionKind.START, next_id, o.obs))
            events.append(EventAtom(EventKind.ENTERS_FOV, (next_id,)))
            next_id += 1
    for o in sorted(obs_picks, key=lambda o: o.obs):
        if o.kind is ActionKind.IGNORE_DET:
            actions.append(Action(ActionKind.IGNORE_DET, None, o.obs))
    actions.sort(key=Action.sort_key)
    return Hypothesis(p.t, tuple(actions), tuple(events), objective_of(list(track_picks) + list(obs_picks)))


# --------------------------------------------------------------------------
# validation and application


def check_hypothesis(p: ProblemSpec, h: Hypothesis, cfg: EngineConfig) -> None:
    """Raise :class:`InconsistentHypothesisError` on any exclusivity/admissibility/coupling breach."""
    track_ids = {tr.id for tr in p.tracks}
    per_track: Dict[int, int] = {}
    per_obs: Dict[int, int] = {}
    ev_by_track: Dict[int, List[EventAtom]] = {}
    for ev in h.events:
        ev_by_track.setdefault(ev.args[0], []).append(ev)
    for a in h.actions:
        if a.kind is not ActionKind.START and a.kind is not ActionKind.IGNORE_DET:
            if a.track not in track_ids:
                raise InconsistentHypothesisError(f"{a} names an unknown track")
            per_track[a.track] = per_track.get(a.track, 0) + 1
        if a.obs is not None:
            if not 0 <= a.obs < len(p.observations):
                raise InconsistentHypothesisError(f"{a} names an unknown observation")
            per_obs[a.obs] = per_obs.get(a.obs, 0) + 1
    for tid in track_ids:
        if per_track.get(tid, 0) != 1:
            raise InconsistentHypothesisError(f"track {tid} has {per_track.get(tid, 0)} actions")
    for j in range(len(p.observations)):
        if per_obs.get(j, 0) != 1:
            raise InconsistentHypothesisError(f"observation {j} has {per_obs.get(j, 0)} actions")
    for a in h.actions:
        evs = ev_by_track.get(a.track, []) if a.track is not None else []
        kinds = {e.kind for e in evs}
        if a.kind in (ActionKind.ASSIGN, ActionKind.RESUME):
            i = p.track_index(a.track)
            if not admissible_pair(p, i, a.obs, cfg):
                raise InconsistentHypothesisError(f"{a} violates matching constraints")
            tr = p.tracks[i]
            want = TrackStatus.ACTIVE if a.kind is ActionKind.ASSIGN else TrackStatus.HALTED
            if tr.status is not want:
                raise InconsistentHypothesisError(f"{a} on a {tr.status.value} track")
            if a.kind is ActionKind.RESUME and tr.hidden_by is not None and EventKind.UNHIDES_FROM_BEHIND not in kinds:
                raise InconsistentHypothesisError(f"{a} lacks unhides_from_behind")
        elif a.kind is ActionKind.START and kinds != {EventKind.ENTERS_FOV}:
            raise InconsistentHypothesisError(f"{a} lacks enters_fov")
        elif a.kind is ActionKind.END and kinds != {EventKind.LEAVES_FOV}:
            raise InconsistentHypothesisError(f"{a} lacks leaves_fov")
        elif a.kind is ActionKind.HALT:
            if len(evs) != 1 or evs[0].kind not in (EventKind.HIDES_BEHIND, EventKind.MISSING_DETECTIONS):
                raise InconsistentHypothesisError(f"{a} lacks a hides_behind/missing_detections explanation")
            if evs[0].kind is EventKind.HIDES_BEHIND:
                occ = evs[0].args[1]
                occ_actions = [b for b in h.actions if b.track == occ]
                if not occ_actions or occ_actions[0].kind in _STOPPERS:
                    raise InconsistentHypothesisError(f"{a} hides behind a vanishing track {occ}")


def apply_hypothesis(
    tracks: Sequence[Track], p: ProblemSpec, h: Hypothesis, cfg: EngineConfig
) -> List[Track]:
    """Update tracks in place from ``h``; returns the tracks plus any newborn ones."""
    check_hypothesis(p, h, cfg)
    t = p.t
    by_id = {tr.id: tr for tr in tracks}
    hides = {ev.args[0]: ev.args[1] for ev in h.events if ev.kind is EventKind.HIDES_BEHIND}
    out = list(tracks)
    for a in h.actions:
        if a.kind in (ActionKind.ASSIGN, ActionKind.RESUME):
            tr = by_id[a.track]
            obs = p.observations[a.obs]
            tr.kalman = kalman_update(tr.kalman, obs.rect, cfg.kalman)
            tr.status = TrackStatus.ACTIVE
            tr.last_seen = t
            tr.missed = 0
            tr.hidden_by = tr.halt_reason = tr.halted_at = None
            tr.history.append(HistoryEntry(t, obs.rect, obs.confidence))
        elif a.kind is ActionKind.START:
            obs = p.observations[a.obs]
            out.append(
                Track(
                    id=a.track,
                    class_label=obs.class_label,
                    status=TrackStatus.ACTIVE,
                    kalman=kalman_init(obs.rect, cfg.kalman),
                    born_at=t,
                    last_seen=t,
                    history=[HistoryEntry(t, obs.rect, obs.confidence)],
                )
            )
        elif a.kind is ActionKind.END:
            tr = by_id[a.track]
            tr.status = TrackStatus.ENDED
            tr.ended_at = t
        elif a.kind is ActionKind.HALT:
            tr = by_id[a.track]
            tr.status = TrackStatus.HALTED
            tr.halted_at = t
            tr.hidden_by = hides.get(a.track)
            tr.halt_reason = EventKind.HIDES_BEHIND if tr.hidden_by is not None else EventKind.MISSING_DETECTIONS
        elif a.kind is ActionKind.IGNORE_TRK:
            tr = by_id[a.track]
            if tr.status is TrackStatus.ACTIVE:
                tr.missed += 1
    for tr in out:
        if tr.status is not TrackStatus.ENDED and t - tr.last_seen > cfg.max_halt_duration:
            tr.status = TrackStatus.ENDED
            tr.ended_at = t
    return out
