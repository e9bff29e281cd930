import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abtrack.abduction import build_problem, solve
from abtrack.asp import export_asp, hypothesis_signature, solve_with_clingo
from abtrack.config import EngineConfig
from abtrack.geometry import Rect
from abtrack.ingest import Detection

from conftest import IMAGE, make_track, random_problem

clingo = pytest.importorskip("clingo")


def test_empty_problem_has_empty_model(cfg):
    p = build_problem([], [], 1, cfg, image_size=IMAGE)
    prog = export_asp(p, cfg)
    assert "#minimize" in prog and "#maximize" in prog
    sig, cost = solve_with_clingo(prog)
    assert sig == frozenset() and cost == [0, 0, 0]


def test_single_assign(cfg):
    tr = make_track(1, Rect(50, 50, 20, 20))
    p = build_problem([tr], [Detection(2, Rect(52, 50, 20, 20), confidence=0.9)], 2, cfg, image_size=IMAGE)
    sig, _ = solve_with_clingo(export_asp(p, cfg))
    assert ("assign", 1, 0) in sig
    assert sig == hypothesis_signature(solve(p, cfg))


def test_two_by_two_matches_solver(cfg):
    tracks = [make_track(1, Rect(40, 40, 20, 20)), make_track(2, Rect(60, 40, 20, 20))]
    # boxes placed so IoUs are high for the cross pairs
    dets = [Detection(2, Rect(58, 40, 20, 20), confidence=0.9), Detection(2, Rect(42, 40, 20, 20), confidence=0.9)]
    p = build_problem(tracks, dets, 2, cfg, image_size=IMAGE)
    h = solve(p, cfg)
    sig, cost = solve_with_clingo(export_asp(p, cfg))
    assert sig == hypothesis_signature(h)
    assert tuple(cost) == h.objective.key()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_frames_same_objective(seed):
    cfg = EngineConfig(image_size=IMAGE)
    p = random_problem(np.random.default_rng(seed), cfg)
    h = solve(p, cfg)
    sig, cost = solve_with_clingo(export_asp(p, cfg))
    assert tuple(cost) == h.objective.key()
