"""Export a frame's problem as an ASP-Core-2 program, plus an optional clingo runner.

The program is self-contained: geometric and fluent preconditions are ground
into facts (``can_hide/2``, ``can_leave/1``, ``can_enter/1``, ``can_unhide/2``)
because answer-set grounders have no box arithmetic. Everything else, i.e.
the action choice, exclusivity, matching constraints, event coupling and the
prioritised objective, is stated as rules.
"""
from __future__ import annotations

from typing import FrozenSet, List, Optional, Tuple

from .abduction import (
    ActionKind,
    Hypothesis,
    ProblemSpec,
    TrackStatus,
    _NEWBORN,
    _scaled,
    scene_context,
)
from .config import EngineConfig
from .events import EventAtom, EventKind, SceneContext, check_preconditions

Signature = FrozenSet[Tuple[str, Optional[int], Optional[int]]]

_RULES = """\
% matching integrity constraints: IoU gate, confidence gate, type match
iou_ok(T,O) :- iou(T,O,_), not below_iou(T,O).
match_ok(T,O) :- iou_ok(T,O), not low_conf(O), type_of(trk(T),C), type_of(det(O),C).
resumable(T) :- halted(T), not hidden(T).
resumable(T) :- hidden_by(T,B), can_unhide(T,B).
hidden(T) :- hidden_by(T,_).

% exactly one action per track
1 { assign(T,O) : det(O), match_ok(T,O); end(T) : can_leave(T); halt(T); ignore_trk(T) } 1 :- active(T).
1 { resume(T,O) : det(O), match_ok(T,O), resumable(T); end(T) : can_leave(T); ignore_trk(T) } 1 :- halted(T).

% exactly one action per observation
claimed(O) :- assign(_,O).
claimed(O) :- resume(_,O).
:- det(O), #count { T : assign(T,O); T : resume(T,O) } > 1.
can_start(O) :- can_enter(O), not low_conf(O).
can_start(O) :- can_enter(O), low_conf_starts.
1 { start(O) : can_start(O); ignore_det(O) } 1 :- det(O), not claimed(O).

% coupling: lifecycle actions need an explaining event
1 { occurs_at(hides_behind(T,B),now) : can_hide(T,B); occurs_at(missing_detections(T),now) } 1 :- halt(T).
occurs_at(leaves_fov(T),now) :- end(T).
occurs_at(enters_fov(new(O)),now) :- start(O).
occurs_at(unhides_from_behind(T,B),now) :- resume(T,_), hidden_by(T,B).
% an occluder cannot vanish in the frame it starts hiding someone
:- occurs_at(hides_behind(_,B),now), halt(B).
:- occurs_at(hides_behind(_,B),now), end(B).

% objective: ignores of live evidence, then IoU, then action/event costs
#minimize { 1@3,trk,T : ignore_trk(T), active(T); 1@3,det,O : ignore_det(O), not low_conf(O) }.
#maximize { S@2,T,O : assign(T,O), iou(T,O,S); S@2,T,O : resume(T,O), iou(T,O,S) }.
#minimize { W@1,start,O : start(O), cost(start,W);
            W@1,end,T : end(T), cost(end,W);
            W@1,halt,T : halt(T), cost(halt,W);
            W@1,resume,T : resume(T,_), cost(resume,W);
            W@1,missing,T : occurs_at(missing_detections(T),now), cost(missing,W);
            W@1,ignore_det,O : ignore_det(O), cost(ignore_det,W) }.

#show assign/2. #show start/1. #show end/1. #show halt/1. #show resume/2.
#show ignore_det/1. #show ignore_trk/1. #show occurs_at/2.
"""


def export_asp(p: ProblemSpec, cfg: EngineConfig) -> str:
    ctx = scene_context(p, cfg)
    fl = p.fluents
    facts: List[str] = [f"% frame {p.t}"]
    for tr in p.tracks:
        a = tr.id
        facts.append(f"trk({a}). type_of(trk({a}),{tr.class_label.value}).")
        if tr.status is TrackStatus.ACTIVE:
            facts.append(f"active({a}).")
            for other in p.tracks:
                if other.id != a and check_preconditions(EventAtom(EventKind.HIDES_BEHIND, (a, other.id)), fl, ctx):
                    facts.append(f"can_hide({a},{other.id}).")
        else:
            facts.append(f"halted({a}).")
            if tr.hidden_by is not None:
                facts.append(f"hidden_by({a},{tr.hidden_by}).")
                if check_preconditions(EventAtom(EventKind.UNHIDES_FROM_BEHIND, (a, tr.hidden_by)), fl, ctx):
                    facts.append(f"can_unhide({a},{tr.hidden_by}).")
        if check_preconditions(EventAtom(EventKind.LEAVES_FOV, (a,)), fl, ctx):
            facts.append(f"can_leave({a}).")
    born = SceneContext(**{**ctx.__dict__, "rects": {}})
    for j, obs in enumerate(p.observations):
        facts.append(f"det({j}). conf({j},{_scaled(obs.confidence)}). type_of(det({j}),{obs.class_label.value}).")
        if obs.confidence < cfg.conf_threshold:
            facts.append(f"low_conf({j}).")
        born.rects = {_NEWBORN: obs.rect}
        if check_preconditions(EventAtom(EventKind.ENTERS_FOV, (_NEWBORN,)), fl, born):
            facts.append(f"can_enter({j}).")
    for i, tr in enumerate(p.tracks):
        if not p.predictions[i].valid:
            continue
        for j in range(len(p.observations)):
            raw = float(p.iou[i, j])
            if raw > 0.0:
                facts.append(f"iou({tr.id},{j},{_scaled(raw)}).")
                if raw < cfg.iou_threshold:
                    facts.append(f"below_iou({tr.id},{j}).")
    if cfg.low_conf_starts:
        facts.append("low_conf_starts.")
    w = cfg.cost
    facts.append(
        f"cost(start,{w.start}). cost(end,{w.end}). cost(halt,{w.halt}). "
        f"cost(resume,{w.resume}). cost(missing,{w.missing}). cost(ignore_det,{w.ignore_det})."
    )
    return "\n".join(facts) + "\n\n" + _RULES


def hypothesis_signature(h: Hypothesis) -> Signature:
    """Action set with newborn ids erased, comparable to :func:`solve_with_clingo` output."""
    out = set()
    for a in h.actions:
        trk = None if a.kind is ActionKind.START else a.track
        out.add((a.kind.value, trk, a.obs))
    return frozenset(out)


def solve_with_clingo(program: str) -> Tuple[Signature, List[int]]:
    """Optimal action set and cost vector ``[penalty, -likelihood, cost]`` via clingo."""
    import clingo

    ctl = clingo.Control(["--opt-mode=opt", "--warn=none"])
    ctl.add("base", [], program)
    ctl.ground([("base", [])])
    best: Optional[Tuple[Signature, List[int]]] = None

    def on_model(m: "clingo.Model") -> None:
        nonlocal best
        acts = set()
        for sym in m.symbols(shown=True):
            name, args = sym.name, [s.number for s in sym.arguments if s.type == clingo.SymbolType.Number]
            if name in ("assign", "resume"):
                acts.add((name, args[0], args[1]))
            elif name in ("start", "ignore_det"):
                acts.add((name, None, args[0]))
            elif name in ("end", "halt", "ignore_trk"):
                acts.add((name, args[0], None))
        # clingo omits empty priority levels; place each cost at its level
        by_level = dict(zip(m.priority, m.cost))
        best = (frozenset(acts), [by_level.get(level, 0) for level in (3, 2, 1)])

    ctl.solve(on_model=on_model)
    if best is None:
        raise RuntimeError("ASP program has no model")
    return best
