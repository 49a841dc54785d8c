import numpy as np
import pytest

from skymimic.controller import (SubjectTrack, kalman_step,
                                 localize_subject, next_waypoint)
from skymimic.geometry import (Intrinsics, Pose6D, look_at,
                               project_foreground)
from skymimic.imitation import make_action


def test_localize_depth_oracle():
    # normalized box height 0.2125 with focal 600 and a 1.7 m subject
    # inverts to a 10 m depth
    from skymimic.geometry import FgFeature
    box = FgFeature(0.5, 0.5, 0.07, 0.2125, 0.0)
    pos = localize_subject(box, Pose6D(np.zeros(3)), Intrinsics(), 1.7)
    assert np.allclose(pos, [10.0, 0.0, 0.0], atol=1e-9)


def test_localize_projection_roundtrip():
    rng = np.random.default_rng(21)
    K = Intrinsics()
    for _ in range(200):
        subj = Pose6D(np.array([rng.uniform(-20, 20), rng.uniform(-20, 20),
                                rng.uniform(0.5, 1.5)]),
                      yaw=rng.uniform(-np.pi, np.pi))
        cam_pos = subj.position + np.array([
            rng.uniform(5, 25) * np.cos(rng.uniform(-np.pi, np.pi)),
            rng.uniform(5, 25) * np.sin(rng.uniform(-np.pi, np.pi)),
            rng.uniform(1, 6)])
        cam = look_at(cam_pos, subj.position)
        fg = project_foreground(cam, K, subj, 1.7)
        back = localize_subject(fg, cam, K, 1.7)
        assert np.linalg.norm(back - subj.position) <= 1e-6


def test_localize_edge_box_bearing():
    K = Intrinsics()
    cam = Pose6D(np.zeros(3))
    subj = Pose6D(np.array([10.0, 4.0, 0.0]))  # offset to the left edge side
    fg = project_foreground(cam, K, subj, 1.7)
    back = localize_subject(fg, cam, K, 1.7)
    bearing_true = np.arctan2(subj.position[1], subj.position[0])
    bearing_back = np.arctan2(back[1], back[0])
    assert abs(bearing_back - bearing_true) < 1e-9


def test_localize_tiny_box_rejected():
    from skymimic.geometry import FgFeature
    with pytest.raises(ValueError):
        localize_subject(FgFeature(0.5, 0.5, 0.0, 5e-5, 0.0),
                         Pose6D(np.zeros(3)), Intrinsics(), 1.7)


def test_kalman_stationary_subject():
    pos = np.array([3.0, -2.0, 0.85])
    track = SubjectTrack(pos.copy())
    for _ in range(20):
        track, pred = kalman_step(track, pos)
    assert np.linalg.norm(pred - pos) < 1e-6


def test_kalman_constant_velocity():
    vel = np.array([2.0, 0.0, 0.0])
    track = SubjectTrack(np.zeros(3))
    dt = 0.25
    for k in range(1, 21):
        track, pred = kalman_step(track, vel * (k * dt), dt)
    truth_next = vel * (21 * dt)
    assert np.linalg.norm(pred - truth_next) < 1e-3


def test_kalman_covariance_psd_sweep():
    rng = np.random.default_rng(30)
    track = SubjectTrack(np.zeros(3))
    for _ in range(1000):
        z = track.position + rng.normal(0, 0.1, 3)
        track, _ = kalman_step(track, z)
        P = track.covariance
        assert np.allclose(P, P.T)
        assert np.min(np.linalg.eigvalsh(P)) >= -1e-9


def test_kalman_rejects_bad_dt():
    with pytest.raises(ValueError):
        kalman_step(SubjectTrack(np.zeros(3)), np.zeros(3), dt=0.0)


def test_waypoint_identity_when_satisfied():
    K = Intrinsics()
    subj = np.array([10.0, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    scale = K.focal * 1.7 / 10.0 / K.height
    action = make_action(np.zeros(3), [1.0, 0.0, 0.0], scale)
    wp = next_waypoint(drone, action, subj, K, 1.7)
    assert np.allclose(wp.position, drone.position)
    assert wp.yaw == drone.yaw and wp.pitch == drone.pitch


def test_waypoint_orientation_integration():
    K = Intrinsics()
    subj = np.array([10.0, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    scale = K.focal * 1.7 / 10.0 / K.height
    action = make_action([0.0, 0.2, 0.0], [1.0, 0.0, 0.0], scale)
    wp = next_waypoint(drone, action, subj, K, 1.7, dt=0.25)
    assert abs(wp.yaw - 0.05) < 1e-12
    assert wp.roll == 0.0


def test_waypoint_doubling_scale_halves_distance():
    K = Intrinsics()
    d0 = 4.8
    subj = np.array([d0, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    scale0 = K.focal * 1.7 / d0 / K.height
    action = make_action(np.zeros(3), [1.0, 0.0, 0.0], 2 * scale0)
    wp = next_waypoint(drone, action, subj, K, 1.7)
    assert abs(wp.position[0] - d0 / 2) / (d0 / 2) < 0.01


def test_waypoint_scale_match_precision():
    rng = np.random.default_rng(31)
    K = Intrinsics()
    for _ in range(50):
        d0 = rng.uniform(6.0, 12.0)
        subj = np.array([d0, 0.0, 0.0])
        drone = Pose6D(np.zeros(3))
        # target scale reachable within the 2.5 m step clamp
        d_target = d0 - rng.uniform(0.0, 2.4)
        target = K.focal * 1.7 / d_target / K.height
        action = make_action(np.zeros(3), [1.0, 0.0, 0.0], target)
        wp = next_waypoint(drone, action, subj, K, 1.7)
        achieved = K.focal * 1.7 / (d0 - wp.position[0]) / K.height
        assert abs(achieved - target) <= 1e-3


def test_waypoint_step_clamped():
    K = Intrinsics()
    subj = np.array([30.0, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    action = make_action(np.zeros(3), [1.0, 0.0, 0.0], 1.0)  # huge scale
    wp = next_waypoint(drone, action, subj, K, 1.7)
    assert np.linalg.norm(wp.position - drone.position) <= 10.0 * 0.25 + 1e-9


def test_waypoint_tangential_sweep_preserves_range():
    K = Intrinsics()
    d0 = 8.0
    subj = np.array([d0, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    scale = K.focal * 1.7 / d0 / K.height
    action = make_action([0.0, 0.3, 0.0], [0.0, 1.0, 0.0], scale)
    wp = next_waypoint(drone, action, subj, K, 1.7, dt=0.25)
    r = wp.position - subj
    assert np.linalg.norm(r) == pytest.approx(d0)
    swept = np.arctan2(r[1], r[0])
    assert swept == pytest.approx(np.pi + 0.3 * 0.25, abs=1e-9) \
        or swept == pytest.approx(-np.pi + 0.3 * 0.25, abs=1e-9)


def test_waypoint_moving_subject_anchor():
    K = Intrinsics()
    subj = np.array([10.0, 0.0, 0.0])
    subj_next = subj + np.array([0.0, 0.5, 0.0])
    drone = Pose6D(np.zeros(3))
    scale = K.focal * 1.7 / 10.0 / K.height
    action = make_action(np.zeros(3), [1.0, 0.0, 0.0], scale)
    wp = next_waypoint(drone, action, subj, K, 1.7, subject_next=subj_next)
    assert np.allclose(wp.position, drone.position + [0.0, 0.5, 0.0])


def test_waypoint_range_floor():
    K = Intrinsics()
    subj = np.array([1.5, 0.0, 0.0])
    drone = Pose6D(np.zeros(3))
    action = make_action(np.zeros(3), [1.0, 0.0, 0.0], 1.0)  # huge scale
    wp = next_waypoint(drone, action, subj, K, 0.5)
    assert np.linalg.norm(wp.position - subj) >= 1.0 - 1e-9
