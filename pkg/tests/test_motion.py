import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abtrack.geometry import Rect
from abtrack.motion import (
    KalmanConfig,
    extrapolate,
    initial_covariance,
    kalman_init,
    kalman_predict,
    kalman_update,
)

ZERO_NOISE = KalmanConfig(q_pos=0.0, q_vel=0.0, r_pos=0.0, r_size=0.0)


class Scalar1D:
    """Textbook position/velocity Kalman filter in plain floats."""

    def __init__(self, x, p0, p0_vel, q_pos, q_vel, r):
        self.x, self.v = x, 0.0
        self.pxx, self.pxv, self.pvv = p0, 0.0, p0_vel
        self.q_pos, self.q_vel, self.r = q_pos, q_vel, r

    def predict(self):
        self.x += self.v
        pxx = self.pxx + 2 * self.pxv + self.pvv + self.q_pos
        pxv = self.pxv + self.pvv
        self.pxx, self.pxv, self.pvv = pxx, pxv, self.pvv + self.q_vel
        return self.x

    def update(self, z):
        s = self.pxx + self.r
        kx, kv = self.pxx / s, self.pxv / s
        innov = z - self.x
        self.x += kx * innov
        self.v += kv * innov
        pxx, pxv, pvv = self.pxx, self.pxv, self.pvv
        self.pxx = (1 - kx) * pxx
        self.pxv = (1 - kx) * pxv
        self.pvv = pvv - kv * pxv


def test_init_examples():
    cfg = KalmanConfig()
    st_ = kalman_init(Rect(10, 10, 4, 4), cfg)
    assert list(st_.mean) == [12, 12, 16, 1, 0, 0, 0, 0]
    assert kalman_init(Rect(0, 0, 2, 8), cfg).mean[3] == 0.25
    assert np.array_equal(st_.covariance, initial_covariance(cfg))


def test_predict_examples():
    cfg = KalmanConfig()
    s = kalman_init(Rect(10, 20, 4, 8), cfg)
    _, pred = kalman_predict(s, cfg)
    assert pred.rect.as_tuple() == pytest.approx(Rect(10, 20, 4, 8).as_tuple())
    mean = s.mean.copy()
    mean[0], mean[4] = 0.0, 5.0
    s2 = type(s)(mean, s.covariance)
    nxt, _ = kalman_predict(s2, cfg)
    assert nxt.mean[0] == 5.0


def test_zero_noise_linear_fit_matches_reference():
    cfg = ZERO_NOISE
    s = kalman_init(Rect(-2, 0, 4, 4), cfg)
    ref = Scalar1D(0.0, cfg.p0, cfg.p0_vel, 0.0, 0.0, 0.0)
    for z in (10.0, 20.0):
        s, _ = kalman_predict(s, cfg)
        ref.predict()
        s = kalman_update(s, Rect(z - 2, 0, 4, 4), cfg)
        ref.update(z)
    s, pred = kalman_predict(s, cfg)
    expect = ref.predict()
    assert pred.rect.cx == pytest.approx(expect, abs=1e-9)
    assert pred.rect.cx == pytest.approx(30.0, abs=1e-6)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8), st.floats(0.1, 20), st.floats(0.001, 2), st.floats(0.1, 20))
def test_cx_block_matches_scalar_oracle(zs, q_pos, q_vel, r):
    cfg = KalmanConfig(q_pos=q_pos, q_vel=q_vel, r_pos=r)
    s = kalman_init(Rect(-2, 0, 4, 4), cfg)
    ref = Scalar1D(0.0, cfg.p0, cfg.p0_vel, q_pos, q_vel, r)
    for z in zs:
        s, _ = kalman_predict(s, cfg)
        ref.predict()
        s = kalman_update(s, Rect(z - 2, 0, 4, 4), cfg)
        ref.update(z)
        assert s.mean[0] == pytest.approx(ref.x, rel=1e-7, abs=1e-7)
        assert s.mean[4] == pytest.approx(ref.v, rel=1e-7, abs=1e-7)


def test_one_step_textbook_update():
    cfg = KalmanConfig(r_pos=4.0, p0=12.0)
    s = kalman_init(Rect(8, 0, 4, 4), cfg)  # cx = 10
    post = kalman_update(s, Rect(13, 0, 4, 4), cfg)  # z = 15
    k = 12.0 / (12.0 + 4.0)
    assert post.mean[0] == pytest.approx(10 + k * (15 - 10))


def test_update_zero_innovation_and_infinite_noise():
    cfg = KalmanConfig()
    s = kalman_init(Rect(5, 5, 10, 20), cfg)
    s, pred = kalman_predict(s, cfg)
    same = kalman_update(s, pred.rect, cfg)
    assert np.allclose(same.mean, s.mean)
    huge = KalmanConfig(r_pos=1e300, r_size=1e300)
    moved = kalman_update(s, Rect(50, 50, 10, 20), huge)
    assert np.allclose(moved.mean, s.mean)


def test_non_finite_measurement_rejected():
    cfg = KalmanConfig()
    s = kalman_init(Rect(5, 5, 10, 20), cfg)

    class Bad:
        cx = cy = float("nan")
        w = h = 1.0

    with pytest.raises(ValueError):
        kalman_update(s, Bad(), cfg)


def test_area_clamp_flags():
    cfg = KalmanConfig()
    s = kalman_init(Rect(5, 5, 2, 2), cfg)
    mean = s.mean.copy()
    mean[6] = -10.0
    nxt, pred = kalman_predict(type(s)(mean, s.covariance), cfg)
    assert pred.clamped and nxt.mean[2] > 0 and pred.rect.area > 0


@settings(max_examples=50)
@given(st.lists(st.tuples(st.booleans(), st.floats(0, 100), st.floats(0, 100)), min_size=1, max_size=30))
def test_covariance_stays_symmetric_psd(ops):
    cfg = KalmanConfig()
    s = kalman_init(Rect(10, 10, 20, 30), cfg)
    for do_update, x, y in ops:
        s, _ = kalman_predict(s, cfg)
        if do_update:
            s = kalman_update(s, Rect(x, y, 20, 30), cfg)
        P = s.covariance
        assert np.array_equal(P, P.T)
        assert np.linalg.eigvalsh(P).min() >= -1e-9


def test_zero_noise_error_vanishes_within_five_frames():
    cfg = ZERO_NOISE
    truth = [Rect(10 + 3 * t, 20 - 2 * t, 10, 10) for t in range(8)]
    s = kalman_init(truth[0], cfg)
    for t in range(1, 6):
        s, pred = kalman_predict(s, cfg)
        s = kalman_update(s, truth[t], cfg)
    _, pred = kalman_predict(s, cfg)
    assert pred.rect.as_tuple() == pytest.approx(truth[6].as_tuple(), abs=1e-6)


def test_predict_deterministic():
    cfg = KalmanConfig()
    s = kalman_update(kalman_init(Rect(1, 2, 3, 4), cfg), Rect(2, 3, 3, 4), cfg)
    a, pa = kalman_predict(s, cfg)
    b, pb = kalman_predict(s, cfg)
    assert a.mean.tobytes() == b.mean.tobytes() and a.covariance.tobytes() == b.covariance.tobytes()
    assert pa == pb


def test_stationary_box_stable_within_three_frames():
    cfg = KalmanConfig()
    box = Rect(50, 60, 20, 40)
    s = kalman_init(box, cfg)
    for _ in range(3):
        s, _ = kalman_predict(s, cfg)
        s = kalman_update(s, box, cfg)
    _, pred = kalman_predict(s, cfg)
    assert pred.rect.as_tuple() == pytest.approx(box.as_tuple(), abs=0.5)


def test_extrapolate_constant_velocity():
    cfg = KalmanConfig()
    s = kalman_init(Rect(0, 0, 10, 10), cfg)
    mean = s.mean.copy()
    mean[4] = 5.0
    r = extrapolate(type(s)(mean, s.covariance), 4)
    assert r.x == pytest.approx(20.0)
