import numpy as np
import pytest

from panotrack import motion
from panotrack.errors import ConfigError
from panotrack.geometry import Box3D

from oracles import kalman_predict_scalar, kalman_update_scalar

GROUPS = ("vehicles", "bikes", "pedestrian")


def random_state(rng, params):
    x = rng.normal(0, 5, 10)
    x[4:7] = np.abs(x[4:7]) + 0.5
    spread = rng.normal(0, 1, (10, 10))
    P = spread @ spread.T + np.eye(10)
    return motion.KalmanState(x, P)


def random_measurement(rng):
    z = rng.normal(0, 5, 7)
    z[4:7] = np.abs(z[4:7]) + 0.5
    return z


class TestParams:
    def test_vehicle_values(self):
        p = motion.params_for_group("vehicles")
        assert np.array_equal(np.diag(p.P0), [10.0] * 7 + [1e4] * 3)
        assert np.array_equal(
            np.diag(p.Q), [0, 0, 0, 1, 1, 1, 0.3, 0.01, 0.01, 0.01])
        assert np.array_equal(
            np.diag(p.R), [0.1, 0.1, 0.1, 1e4, 0.1, 0.1, 0.1])
        assert p.z_offset == (0.05, -0.1)

    def test_orientation_deweighted_everywhere(self):
        for group in GROUPS:
            assert motion.params_for_group(group).R[3, 3] == 1e4

    def test_pedestrian_values(self):
        p = motion.params_for_group("pedestrian")
        assert np.array_equal(
            np.diag(p.Q), [0, 0, 0, 1, 0.4, 0.4, 0.4, 0.01, 0.01, 0.01])
        assert p.z_offset == (0.028125, -0.1)

    def test_bike_offsets(self):
        assert motion.params_for_group("bikes").z_offset == (-0.025, 0.0625)

    def test_transition_structure(self):
        p = motion.params_for_group("vehicles")
        expected = np.eye(10)
        expected[0, 7] = expected[1, 8] = expected[2, 9] = 1.0
        assert np.array_equal(p.F, expected)
        assert np.array_equal(p.H, np.eye(7, 10))

    def test_unknown_group(self):
        with pytest.raises(ConfigError):
            motion.params_for_group("boats")


class TestInit:
    def test_box_at_origin(self):
        p = motion.params_for_group("vehicles")
        st = motion.init(Box3D(0, 0, 0, 1, 1, 1), p)
        assert np.array_equal(st.x, [0, 0, 0, 0, 1, 1, 1, 0, 0, 0])

    def test_velocity_zero_and_p0(self):
        for group in GROUPS:
            p = motion.params_for_group(group)
            st = motion.init(Box3D(3.0, -2.0, 1.0, 4.0, 2.0, 1.5), p)
            assert np.all(st.x[7:] == 0.0)
            assert np.array_equal(st.P, p.P0)


class TestPredict:
    def test_constant_velocity_step(self):
        p = motion.params_for_group("vehicles")
        st = motion.KalmanState(
            np.array([0, 0, 0, 0, 1, 1, 1, 1, 0, 0], dtype=float),
            p.P0.copy())
        out = motion.predict(st, p)
        assert np.array_equal(out.x[:3], [1, 0, 0])
        assert np.array_equal(out.x[3:7], st.x[3:7])

    def test_zero_velocity_keeps_state(self):
        p = motion.params_for_group("vehicles")
        st = motion.KalmanState(
            np.array([2, 3, 4, 0, 1, 1, 1, 0, 0, 0], dtype=float),
            p.P0.copy())
        out = motion.predict(st, p)
        assert np.array_equal(out.x, st.x)
        # diagonal grows by Q plus the velocity coupling through F
        expected = p.F @ p.P0 @ p.F.T + p.Q
        assert np.allclose(out.P, expected, atol=1e-12)

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(1)
        p = motion.params_for_group("vehicles")
        for _ in range(100):
            st = random_state(rng, p)
            got = motion.predict(st, p)
            ox, oP = kalman_predict_scalar(st.x, st.P, p.F, p.Q)
            assert np.abs(got.x - ox).max() < 1e-9
            assert np.abs(got.P - oP).max() < 1e-9


class TestUpdate:
    def test_zero_innovation_fixpoint(self):
        rng = np.random.default_rng(2)
        p = motion.params_for_group("bikes")
        st = motion.predict(random_state(rng, p), p)
        z = p.H @ st.x
        out = motion.update(st, z, p)
        assert np.abs(out.x - st.x).max() <= 1e-12

    def test_huge_r_freezes_component(self):
        p = motion.params_for_group("vehicles")
        huge = motion.KalmanParams(
            F=p.F, H=p.H, Q=p.Q,
            R=np.diag([1e12, 0.1, 0.1, 1e4, 0.1, 0.1, 0.1]),
            P0=p.P0, z_offset=p.z_offset)
        st = motion.init(Box3D(0, 0, 0, 1, 1, 1), huge)
        st = motion.predict(st, huge)
        z = np.array([5.0, 0, 0, 0, 1, 1, 1])
        out = motion.update(st, z, huge)
        assert abs(out.x[0] - st.x[0]) < 1e-6

    def test_matches_scalar_oracle(self):
        rng = np.random.default_rng(3)
        for group in GROUPS:
            p = motion.params_for_group(group)
            for _ in range(50):
                st = motion.predict(random_state(rng, p), p)
                z = random_measurement(rng)
                got = motion.update(st, z, p)
                ox, oP = kalman_update_scalar(st.x, st.P, z, p.H, p.R)
                ox[4:7] = np.maximum(ox[4:7], motion.DIM_FLOOR)
                assert np.abs(got.x - ox).max() < 1e-9
                assert np.abs(got.P - oP).max() < 1e-9

    def test_covariance_symmetry(self):
        rng = np.random.default_rng(4)
        p = motion.params_for_group("pedestrian")
        st = motion.init(Box3D(0, 0, 0, 0.6, 0.6, 1.7), p)
        for _ in range(20):
            st = motion.predict(st, p)
            st = motion.update(st, random_measurement(rng), p)
            assert np.abs(st.P - st.P.T).max() <= 1e-9

    def test_dims_clamped(self):
        p = motion.params_for_group("vehicles")
        st = motion.init(Box3D(0, 0, 0, 0.02, 0.02, 0.02), p)
        st = motion.predict(st, p)
        z = np.array([0, 0, 0, 0, -5.0, -5.0, -5.0])
        out = motion.update(st, z, p)
        assert np.all(out.x[4:7] >= motion.DIM_FLOOR)

    def test_velocity_learns_displacement_sign(self):
        p = motion.params_for_group("vehicles")
        st = motion.init(Box3D(0, 0, 0, 4, 2, 1.5), p)
        for k in (1, 2):
            st = motion.predict(st, p)
            z = np.array([1.5 * k, 0, 0, 0, 4, 2, 1.5])
            st = motion.update(st, z, p)
        assert st.x[7] > 0.5  # moving toward +1.5 m/frame
        assert abs(st.x[8]) < 0.1 and abs(st.x[9]) < 0.1

    def test_orientation_deadening(self):
        p = motion.params_for_group("vehicles")
        innovation = 1.0
        z = np.array([0, 0, 0, innovation, 4, 2, 1.5])

        st = motion.init(Box3D(0, 0, 0, 4, 2, 1.5), p)
        out = motion.update(st, z, p)
        # gain from the initial covariance: 10 / (10 + 1e4) < 0.1 %
        assert abs(out.x[3] - st.x[3]) < 1e-3 * innovation

        prior = motion.predict(st, p)
        out = motion.update(prior, z, p)
        # the theta process noise raises the gain to 11 / (11 + 1e4)
        assert abs(out.x[3] - prior.x[3]) < 1.2e-3 * innovation


class TestOffsets:
    def test_vehicle_example(self):
        p = motion.params_for_group("vehicles")
        z = motion.apply_offsets(np.array([0, 0, 1.0, 0, 4, 2, 1.5]), p)
        assert z[2] == pytest.approx(1.05)
        assert z[6] == pytest.approx(1.4)

    def test_bike_example(self):
        p = motion.params_for_group("bikes")
        z = motion.apply_offsets(np.array([0, 0, 0.0, 0, 1.8, 0.6, 1.0]), p)
        assert z[2] == pytest.approx(-0.025)
        assert z[6] == pytest.approx(1.0625)

    def test_pedestrian_example(self):
        p = motion.params_for_group("pedestrian")
        z = motion.apply_offsets(np.array([0, 0, 0.0, 0, 0.6, 0.6, 1.7]), p)
        assert z[2] == pytest.approx(0.028125)
        assert z[6] == pytest.approx(1.6)

    def test_other_components_untouched(self):
        p = motion.params_for_group("vehicles")
        raw = np.array([1.0, 2.0, 3.0, 0.5, 4.0, 2.0, 1.5])
        z = motion.apply_offsets(raw, p)
        assert np.array_equal(z[[0, 1, 3, 4, 5]], raw[[0, 1, 3, 4, 5]])

    def test_nonpositive_height_rejected(self):
        p = motion.params_for_group("vehicles")
        with pytest.raises(ValueError):
            motion.apply_offsets(np.array([0, 0, 0, 0, 1, 1, 0.05]), p)

    def test_correct_box_floors_height(self):
        p = motion.params_for_group("vehicles")
        out = motion.correct_box(Box3D(0, 0, 0, 1, 1, 0.05), p)
        assert out.h == motion.DIM_FLOOR
        assert out.cz == pytest.approx(0.05)
