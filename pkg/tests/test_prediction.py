"""Forward warping of filter state: splatting, rejection, hole filling."""

import numpy as np
import pytest

from egostereo.core import (
    DisparityMap,
    FilterState,
    StereoRig,
    VarianceMap,
    make_motion,
)
from egostereo.geometry import disparity_homography, warp_pixels
from egostereo.prediction import (
    PredictionParams,
    fill_zoom_holes,
    predict_maps,
    propagate_variance,
    reject_edges,
)

from helpers import make_rig


def _state_from(values, valid, var, frame=0):
    d = DisparityMap(np.asarray(values, float), np.asarray(valid, bool))
    p = VarianceMap(np.asarray(var, float))
    return FilterState(d, p, d.copy(), p.copy(), frame)


def test_propagate_variance_formula():
    # p' = (d_new / d_old)^2 * p + q
    assert propagate_variance(10.0, 20.0, 1.0, 0.5) == pytest.approx(4.5)
    assert propagate_variance(10.0, 10.0, 2.0, 0.0) == 2.0
    with pytest.raises(ValueError):
        propagate_variance(0.0, 5.0, 1.0, 0.5)


def test_identity_prediction_is_fixed_point():
    rig = make_rig(width=16, height=8, d_max=6)
    rng = np.random.default_rng(0)
    valid = rng.random(rig.shape) < 0.6
    values = np.where(valid, rng.uniform(0.5, 6.0, rig.shape), 0.0)
    var = np.where(valid, rng.uniform(0.1, 4.0, rig.shape), 0.0)
    state = _state_from(values, valid, var)
    out = predict_maps(
        state, np.eye(4), rig,
        PredictionParams(q=0.0, edge_reject=False, fill_holes=False),
    )
    assert np.array_equal(out.left.values, state.left.values)
    assert np.array_equal(out.left.valid, state.left.valid)
    assert np.array_equal(out.left_var.values, state.left_var.values)
    assert out.frame == state.frame + 1


def test_baseline_translation_shifts_by_disparity():
    # camera step of +b along x: (x, y, d) -> (x - d, y, d), so a constant
    # d = 4 map shifts left by 4 columns with variance grown by exactly q
    rig = make_rig(width=16, height=4, d_max=6)
    values = np.full(rig.shape, 4.0)
    var = np.full(rig.shape, 1.0)
    state = _state_from(values, np.ones(rig.shape, bool), var)
    T = make_motion(t=(-rig.b, 0.0, 0.0))
    out = predict_maps(
        state, T, rig, PredictionParams(q=0.5, edge_reject=False, fill_holes=False)
    )
    assert out.left.valid[:, : 16 - 4].all()
    assert not out.left.valid[:, 16 - 4 :].any()
    assert np.allclose(out.left.values[:, : 16 - 4], 4.0, atol=1e-12)
    assert np.allclose(out.left_var.values[:, : 16 - 4], 1.5, atol=1e-12)


def test_occlusion_keeps_largest_disparity():
    # two sources land on the same target pixel; the nearer one (larger
    # warped disparity) must win and carry its own variance
    rig = make_rig(width=16, height=4, d_max=6)
    values = np.zeros(rig.shape)
    valid = np.zeros(rig.shape, bool)
    var = np.zeros(rig.shape)
    values[1, 3], var[1, 3], valid[1, 3] = 3.0, 1.0, True
    values[1, 4], var[1, 4], valid[1, 4] = 4.0, 2.0, True
    state = _state_from(values, valid, var)
    T = make_motion(t=(-rig.b, 0.0, 0.0))  # (x, y, d) -> (x - d, y, d)
    out = predict_maps(
        state, T, rig, PredictionParams(q=0.5, edge_reject=False, fill_holes=False)
    )
    assert out.left.valid[1, 0]
    assert out.left.values[1, 0] == pytest.approx(4.0, abs=1e-12)
    assert out.left_var.values[1, 0] == pytest.approx(2.5, abs=1e-12)


def test_splat_matches_serial_row_major_oracle():
    # vectorized scatter with max-d collision handling must equal the plain
    # serial loop: larger warped d wins, ties go to the earlier source pixel
    rig = make_rig(width=24, height=12, d_max=10)
    params = PredictionParams(q=0.5, edge_reject=False, fill_holes=False)
    rng = np.random.default_rng(42)
    from scipy.spatial.transform import Rotation

    for trial in range(8):
        valid = rng.random(rig.shape) < 0.7
        values = np.where(valid, rng.uniform(0.5, 10.0, rig.shape), 0.0)
        var = np.where(valid, rng.uniform(0.1, 2.0, rig.shape), 0.0)
        state = _state_from(values, valid, var)
        rot = Rotation.from_rotvec(rng.normal(0, 0.01, 3)).as_matrix()
        T = make_motion(rot, rng.normal(0, 0.1, 3))
        out = predict_maps(state, T, rig, params)

        H = disparity_homography(rig, T)
        oracle_d = np.zeros(rig.shape)
        oracle_p = np.zeros(rig.shape)
        oracle_v = np.zeros(rig.shape, bool)
        for y in range(rig.height):
            for x in range(rig.width):
                if not valid[y, x]:
                    continue
                wx, wy, wd = warp_pixels(
                    rig, H, np.array([float(x)]), np.array([float(y)]),
                    np.array([values[y, x]]),
                )
                tx, ty = int(np.rint(wx[0])), int(np.rint(wy[0]))
                if not (0 <= tx < rig.width and 0 <= ty < rig.height):
                    continue
                if not (0.0 < wd[0] <= rig.d_max):
                    continue
                if not oracle_v[ty, tx] or wd[0] > oracle_d[ty, tx]:
                    oracle_v[ty, tx] = True
                    oracle_d[ty, tx] = wd[0]
                    oracle_p[ty, tx] = propagate_variance(
                        values[y, x], wd[0], var[y, x], params.q
                    )
        assert np.array_equal(out.left.valid, oracle_v)
        assert np.allclose(
            np.where(oracle_v, out.left.values, 0.0),
            np.where(oracle_v, oracle_d, 0.0), atol=1e-12,
        )
        assert np.allclose(
            np.where(oracle_v, out.left_var.values, 0.0),
            np.where(oracle_v, oracle_p, 0.0), atol=1e-12,
        )


def test_out_of_image_targets_are_dropped():
    rig = make_rig(width=16, height=4, d_max=8)
    values = np.full(rig.shape, 8.0)
    state = _state_from(values, np.ones(rig.shape, bool), np.ones(rig.shape))
    T = make_motion(t=(-rig.b, 0.0, 0.0))  # shift left by 8 columns
    out = predict_maps(
        state, T, rig, PredictionParams(edge_reject=False, fill_holes=False)
    )
    assert out.left.valid[:, : 16 - 8].all()
    assert not out.left.valid[:, 16 - 8 :].any()


def test_reject_edges_hand_case():
    # step of height 10 between columns 2 and 3; with a 3x3 window and
    # gamma_e = 3 exactly the two columns touching the step are rejected
    values = np.full((3, 7), 10.0)
    values[:, 3:] = 20.0
    disp = DisparityMap(values, np.ones((3, 7), bool))
    rejected = reject_edges(disp, gamma_e=3.0, edge_window=1)
    want = np.zeros((3, 7), bool)
    want[:, 2:4] = True
    assert np.array_equal(rejected, want)


def test_reject_edges_ignores_invalid_neighbors():
    # an invalid neighbor does not contribute to the local range
    values = np.full((3, 5), 10.0)
    valid = np.ones((3, 5), bool)
    values[1, 2] = 500.0
    valid[1, 2] = False
    disp = DisparityMap(np.where(valid, values, 0.0), valid)
    rejected = reject_edges(disp, gamma_e=3.0, edge_window=1)
    assert not rejected[valid].any()


def test_edge_rejection_applies_before_warping():
    rig = make_rig(width=16, height=4, d_max=8)
    values = np.full(rig.shape, 2.0)
    values[:, 8:] = 7.0  # step larger than gamma_e
    state = _state_from(values, np.ones(rig.shape, bool), np.ones(rig.shape))
    out = predict_maps(
        state, np.eye(4), rig,
        PredictionParams(q=0.0, gamma_e=3.0, edge_window=1,
                         edge_reject=True, fill_holes=False),
    )
    # identity motion: the rejected source columns are simply missing
    assert not out.left.valid[:, 7:9].any()
    assert out.left.valid[:, :7].all() and out.left.valid[:, 9:].all()


def test_fill_zoom_holes_hand_case():
    q, gamma_f = 0.5, 3.0
    d = np.zeros((5, 7))
    p = np.zeros((5, 7))
    v = np.zeros((5, 7), bool)

    def put(y, x, val, var):
        d[y, x], p[y, x], v[y, x] = val, var, True

    put(0, 2, 10.0, 1.0)
    put(0, 3, 8.0, 1.0)
    put(0, 6, 8.0, 1.0)
    put(2, 1, 10.0, 1.0)
    put(2, 3, 11.0, 2.0)
    put(4, 0, 5.0, 1.0)
    put(4, 2, 15.0, 1.0)

    disp, var = fill_zoom_holes(
        DisparityMap(d, v), VarianceMap(p), gamma_f=gamma_f, q=q
    )
    # horizontal pass: (2,2) between 10 and 11 -> 10.5, var max(1,2)+q
    assert disp.valid[2, 2]
    assert disp.values[2, 2] == pytest.approx(10.5)
    assert var.values[2, 2] == pytest.approx(2.5)
    # vertical pass runs on the updated map: (1,2) between 10 and the
    # freshly filled 10.5 -> 10.25, var max(1, 2.5)+q
    assert disp.valid[1, 2]
    assert disp.values[1, 2] == pytest.approx(10.25)
    assert var.values[1, 2] == pytest.approx(3.0)
    # neighbor difference at the threshold is NOT filled (strict <)
    assert not disp.valid[1, 3]  # |8 - 11| == gamma_f
    # wide gaps and over-threshold gaps stay open
    assert not disp.valid[0, 4] and not disp.valid[0, 5]
    assert not disp.valid[4, 1]  # |5 - 15| >= gamma_f
    assert not disp.valid[3, 2]  # |10.5 - 15| >= gamma_f after filling
    # originally valid pixels are untouched
    assert disp.values[0, 2] == 10.0 and var.values[0, 2] == 1.0
    assert disp.valid.sum() == 9


def test_predicted_state_respects_invariants():
    from egostereo.core import check_state

    rig = make_rig(width=32, height=16, d_max=12)
    rng = np.random.default_rng(5)
    valid = rng.random(rig.shape) < 0.8
    values = np.where(valid, rng.uniform(1.0, 12.0, rig.shape), 0.0)
    var = np.where(valid, rng.uniform(0.1, 3.0, rig.shape), 0.0)
    state = _state_from(values, valid, var)
    T = make_motion(t=(0.01, -0.02, 0.15))
    out = predict_maps(state, T, rig, PredictionParams())
    check_state(out, rig)
