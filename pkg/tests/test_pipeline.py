import math

import numpy as np
import pytest

import abtrack.pipeline as pipeline
from abtrack.abduction import TrackStatus
from abtrack.config import EngineConfig
from abtrack.events import EventKind, Visibility, hidden_by, replay, visibility
from abtrack.geometry import Rect
from abtrack.ingest import Detection, SceneSpec, generate_synthetic_scene
from abtrack.metrics import evaluate
from abtrack.pipeline import Engine, SequenceError, process_sequence

SIZE = (240.0, 200.0)
OCC = Rect(90, 70, 60, 60)


def crossing(T=60):
    """A static occluder with a smaller box passing behind it; the rear detection is suppressed while covered."""
    dets = {}
    for t in range(1, T + 1):
        x = 2 + 4 * (t - 1)
        row = [Detection(t, OCC, confidence=0.9)]
        if not (OCC.x <= x and x + 30 <= OCC.x2):
            row.append(Detection(t, Rect(x, 85, 30, 30), confidence=0.9))
        dets[t] = row
    return dets


def test_empty_stream():
    e = process_sequence({}, EngineConfig())
    assert e.tracks == [] and e.events == [] and e.warnings == [] and e.timing == []


def test_single_linear_object():
    dets = {t: [Detection(t, Rect(20 + 2 * t, 50, 30, 30), confidence=0.9)] for t in range(1, 41)}
    e = process_sequence(dets, EngineConfig(image_size=SIZE))
    assert len(e.tracks) == 1 and [tr.t for tr in e.tracks[0].history] == list(range(1, 41))
    assert [(r.t, r.event.kind) for r in e.events] == [(1, EventKind.ENTERS_FOV)]


def test_crossing_hides_and_unhides_with_same_id():
    e = process_sequence(crossing(), EngineConfig(image_size=SIZE))
    kinds = [(r.t, r.event.kind, r.event.args) for r in e.events if r.event.kind in
             (EventKind.HIDES_BEHIND, EventKind.UNHIDES_FROM_BEHIND)]
    assert kinds == [(23, EventKind.HIDES_BEHIND, (2, 1)), (31, EventKind.UNHIDES_FROM_BEHIND, (2, 1))]
    assert len(e.tracks) == 2
    hyp = e.hyp_frames()
    assert all(2 in [h[0] for h in hyp[t]] for t in list(range(1, 23)) + list(range(31, 61)))
    assert e.predictions and all(p.track_id == 2 and p.occluder_id == 1 for p in e.predictions)


def test_warning_only_while_occluded():
    cfg = EngineConfig(image_size=SIZE)
    cfg.anticipation.caution_region = (140.0, 0.0, 100.0, 200.0)
    e = process_sequence(crossing(), cfg)
    assert e.warnings
    for w in e.warnings:
        assert e.fluents.holds_at(visibility(w.track_id), w.t_issued) is Visibility.FULLY_OCCLUDED
    unhide = [r.t for r in e.events if r.event.kind is EventKind.UNHIDES_FROM_BEHIND][0]
    assert all(w.t_issued < unhide for w in e.warnings)


def test_gap_frames_are_processed():
    dets = {1: [Detection(1, Rect(0, 50, 30, 30))], 5: [Detection(5, Rect(0, 50, 30, 30))]}
    e = process_sequence(dets, EngineConfig(image_size=SIZE))
    assert [ft.t for ft in e.timing] == [1, 2, 3, 4, 5]


def test_out_of_order_raises():
    stream = [(2, []), (1, [])]
    with pytest.raises(SequenceError):
        process_sequence(stream, EngineConfig())
    eng = Engine(EngineConfig())
    with pytest.raises(SequenceError):
        eng.step(3, [Detection(4, Rect(0, 0, 5, 5))])


def test_online_no_lookahead(monkeypatch):
    done = []
    real = Engine.step

    def step(self, t, dets):
        out = real(self, t, dets)
        done.append(t)
        return out

    monkeypatch.setattr(Engine, "step", step)
    source = crossing(30)

    def stream():
        for t in sorted(source):
            # frame t may only be pulled once frame t - 1 is fully processed
            if t > 1 and done[-1:] != [t - 1]:
                raise AssertionError(f"frame {t} requested before frame {t - 1} finished")
            yield t, source[t]

    e = pipeline.process_sequence(stream(), EngineConfig(image_size=SIZE))
    assert len(e.timing) == 30


def scene_runs():
    for seed in range(6):
        spec = SceneSpec(n_tracks=2 + seed % 4, overlap_fraction=0.5, n_frames=80, dropout=0.1, jitter=2.0, seed=seed)
        gt, dets = generate_synthetic_scene(spec)
        yield spec, gt, process_sequence(dets, EngineConfig(image_size=spec.image_size))


def test_replay_and_fluent_invariants():
    for _, _, e in scene_runs():
        st = e.fluents
        assert replay(e.events) == st
        last = e.timing[-1].t + 1
        for trk in st.born:
            for t in range(st.born[trk], last + 1):
                occluders = [b for b in st.born if b != trk and st.holds_at(hidden_by(trk, b), t)]
                assert len(occluders) <= 1
                assert (st.holds_at(visibility(trk), t) is Visibility.FULLY_OCCLUDED) == bool(occluders)


def test_hides_and_unhides_alternate():
    for _, _, e in scene_runs():
        state = {}
        for r in e.events:
            k, a = r.event.kind, r.event.args[0]
            if k is EventKind.HIDES_BEHIND:
                assert not state.get(a)
                state[a] = True
            elif k is EventKind.UNHIDES_FROM_BEHIND:
                assert state.get(a)
                state[a] = False


def test_history_times_increase_and_ended_never_return():
    for _, _, e in scene_runs():
        for tr in e.tracks:
            ts = [h.t for h in tr.history]
            assert ts == sorted(set(ts))
            if tr.status is TrackStatus.ENDED:
                assert ts[-1] <= tr.ended_at


def _bounced(gt, gid, a, b):
    xy = np.array([[g.rect.x, g.rect.y] for t in range(a, b + 1) for g in gt[t] if g.gt_id == gid])
    return bool((np.abs(np.diff(xy, n=2, axis=0)) > 1e-6).any())


def test_clean_occlusion_keeps_identity():
    """Zero ID switches on noiseless crossings whose occlusion contains no wall bounce."""
    checked = 0
    for seed in range(30):
        spec = SceneSpec(n_tracks=2, overlap_fraction=1.0, n_frames=100, seed=seed)
        gt, dets = generate_synthetic_scene(spec)
        hidden = [t for t in gt if any(not g.visible for g in gt[t])]
        if not hidden:
            continue
        lo, hi = max(1, hidden[0] - 2), min(spec.n_frames, hidden[-1] + 1)
        if _bounced(gt, 1, lo, hi) or _bounced(gt, 2, lo, hi):
            continue
        r = evaluate(gt, process_sequence(dets, EngineConfig(image_size=spec.image_size)).hyp_frames())
        assert r.idsw == 0, seed
        checked += 1
    assert checked >= 10


def test_reappearance_matches_generator():
    """Predictions against the frame the generator un-suppresses the object, on bounce-free episodes."""
    checked = 0
    for seed in range(40):
        spec = SceneSpec(n_tracks=2, overlap_fraction=1.0, n_frames=120, seed=seed)
        gt, dets = generate_synthetic_scene(spec)
        # match the hides_behind gate to the generator's suppression rule
        e = process_sequence(dets, EngineConfig(image_size=spec.image_size, occlusion_iou=spec.occlusion_iou))
        diag = math.hypot(*spec.image_size)
        for h in (r for r in e.events if r.event.kind is EventKind.HIDES_BEHIND):
            tid = h.event.args[0]
            made = [p for p in e.predictions if p.track_id == tid and p.t_made > h.t]
            hidden = [g.gt_id for g in gt[h.t] if not g.visible]
            if not made or not hidden:
                continue
            gid = hidden[0]
            back = next((t for t in range(h.t, spec.n_frames + 1) if any(g.gt_id == gid and g.visible for g in gt[t])), None)
            if back is None or _bounced(gt, 1, h.t - 2, back) or _bounced(gt, 2, h.t - 2, back):
                continue
            p = min(made, key=lambda p: p.t_made)
            truth = [g.rect for g in gt[back] if g.gt_id == gid][0]
            assert abs(p.predicted_t - back) <= 2, (seed, h.t)
            assert math.hypot(truth.cx - p.predicted_rect.cx, truth.cy - p.predicted_rect.cy) <= 0.1 * diag
            checked += 1
    assert checked >= 20
