import numpy as np
import pytest

from abtrack.abduction import Track, TrackStatus, build_problem
from abtrack.config import EngineConfig
from abtrack.geometry import Rect
from abtrack.ingest import ClassLabel, Detection
from abtrack.motion import kalman_init

IMAGE = (200.0, 200.0)


def make_track(tid, rect, status=TrackStatus.ACTIVE, hidden_by=None, cls=ClassLabel.PEDESTRIAN, cfg=None, born=1):
    cfg = cfg or EngineConfig()
    return Track(tid, cls, status, kalman_init(rect, cfg.kalman), born, born, hidden_by=hidden_by)


def random_problem(rng, cfg, max_tracks=4, max_dets=4, t=5):
    """A small random frame: clustered boxes so matches, occlusions and border cases all occur."""
    n_t = int(rng.integers(0, max_tracks + 1))
    n_d = int(rng.integers(0, max_dets + 1))
    centre = rng.uniform(10, 190, size=2)
    classes = [ClassLabel.PEDESTRIAN, ClassLabel.CAR]

    def box():
        w, h = rng.uniform(10, 40, size=2)
        x, y = centre + rng.normal(0, 25, size=2) - (w / 2, h / 2)
        return Rect(float(x), float(y), float(w), float(h))

    tracks = []
    ids = sorted(rng.choice(np.arange(1, 20), size=n_t, replace=False).tolist())
    for tid in ids:
        status = TrackStatus.ACTIVE if rng.random() < 0.7 else TrackStatus.HALTED
        occ = None
        others = [o for o in ids if o != tid]
        if status is TrackStatus.HALTED and others and rng.random() < 0.6:
            occ = int(rng.choice(others))
        cls = classes[0] if rng.random() < 0.85 else classes[1]
        tracks.append(make_track(tid, box(), status, occ, cls, cfg))
    dets = []
    for _ in range(n_d):
        if tracks and rng.random() < 0.7:
            base = tracks[int(rng.integers(len(tracks)))].kalman.rect
            r = Rect(base.x + rng.normal(0, 4), base.y + rng.normal(0, 4), base.w, base.h)
        else:
            r = box()
        cls = classes[0] if rng.random() < 0.85 else classes[1]
        dets.append(Detection(t, r, cls, float(rng.uniform(0.3, 1.0))))
    startup = bool(rng.random() < 0.15)
    return build_problem(tracks, dets, t, cfg, image_size=IMAGE, startup=startup, next_track_id=max(ids, default=0) + 1)


@pytest.fixture
def cfg():
    return EngineConfig(image_size=IMAGE)


# acceptance criteria report, one line per criterion at the end of the run
ACCEPTANCE = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (ok, detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")
