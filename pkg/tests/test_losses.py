"""Loss families and the analytic-gradient rigid pose fitter."""

import numpy as np
import pytest

from hoirecon import losses
from hoirecon.geometry import geodesic_angle, matrix_to_rot6d, rot6d_to_matrix
from hoirecon.sequence import HoiSequence

IDENT6 = np.array([1.0, 0, 0, 0, 1.0, 0])


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def const_velocity_seq(n=6, vh=5, vo=4, fps=30.0, seed=0):
    """A scene where every trajectory is linear in time.

    All coordinates are multiples of 2^-10, so sums are exact and the
    second differences are exactly zero, not merely tiny.
    """
    rng = np.random.default_rng(seed)
    grid = lambda *shape: rng.integers(-1024, 1024, size=shape) * 2.0 ** -10
    t = np.arange(n)[:, None]
    base_h = grid(vh, 3)
    base_o = grid(vo, 3)
    base_j = grid(24, 3)
    vel = grid(3)
    return HoiSequence(
        root6d=np.tile(IDENT6, (n, 1)),
        theta=np.tile(IDENT6, (n, 24, 1)),
        beta=np.zeros((n, 10)),
        trans=0.125 * t * np.ones(3),
        obj_rot=np.tile(np.eye(3), (n, 1, 1)),
        obj_trans=0.015625 * t * np.ones(3) + 1.0,
        human_verts=base_h[None] + vel[None, None] * t[..., None],
        obj_verts=base_o[None] + vel[None, None] * t[..., None],
        joints=base_j[None] + vel[None, None] * t[..., None],
        fps=fps)


def clone(seq):
    return HoiSequence(root6d=seq.root6d.copy(), theta=seq.theta.copy(),
                       beta=seq.beta.copy(), trans=seq.trans.copy(),
                       obj_rot=seq.obj_rot.copy(), obj_trans=seq.obj_trans.copy(),
                       human_verts=seq.human_verts.copy(),
                       obj_verts=seq.obj_verts.copy(), joints=seq.joints.copy(),
                       fps=seq.fps)


EDGES = np.array([[0, 1], [1, 2], [2, 3], [3, 4], [4, 0]])


def test_total_is_zero_on_identical_constant_velocity():
    gt = const_velocity_seq()
    total, terms = losses.total_loss(clone(gt), gt, EDGES)
    assert total == 0.0
    assert all(v == 0.0 for v in terms.values())


def test_object_translation_hand_case():
    """Only the object translation is off, by (1,0,0): the parameter family
    totals exactly lambda_trans_o * 1 = 1.0."""
    gt = const_velocity_seq()
    pred = clone(gt)
    pred.obj_trans = pred.obj_trans + np.array([1.0, 0.0, 0.0])
    terms = losses.param_loss(pred, gt)
    assert abs(sum(terms.values()) - 1.0) < 1e-6
    assert abs(terms["param.trans_o"] - 1.0) < 1e-12
    assert terms["param.rot_o"] == 0.0


def test_object_rotation_90deg_hand_case():
    """Identity vs a 90-degree z-rotation: the 6D forms are (1,0,0,0,1,0)
    vs (0,1,0,-1,0,0), L1 distance 4, so the family totals 0.2 * 4 = 0.8."""
    gt = const_velocity_seq()
    pred = clone(gt)
    pred.obj_rot = np.tile(rot_z(np.pi / 2), (len(gt), 1, 1))
    terms = losses.param_loss(pred, gt)
    assert abs(sum(terms.values()) - 0.8) < 1e-6
    assert abs(terms["param.rot_o"] - 0.8) < 1e-9


def test_co_translation_mesh_case():
    """Translating human and object together moves vertices and joints but
    keeps edge lengths and the pelvis-object offset."""
    gt = const_velocity_seq()
    pred = clone(gt)
    t = np.array([0.2, -0.3, 0.5])  # |t|_1 = 1.0
    pred.human_verts = pred.human_verts + t
    pred.obj_verts = pred.obj_verts + t
    pred.joints = pred.joints + t
    pred.obj_trans = pred.obj_trans + t
    terms = losses.mesh_loss(pred, gt, EDGES)
    assert abs(terms["mesh.verts_h"] - 1.0) < 1e-9
    assert abs(terms["mesh.verts_o"] - 1.0) < 1e-9
    assert abs(terms["mesh.joints"] - 1.0) < 1e-9
    assert terms["mesh.edge"] < 1e-12
    assert terms["mesh.rel_dist"] < 1e-12


def test_scaling_about_pelvis_hits_edges_only():
    gt = const_velocity_seq()
    pred = clone(gt)
    pelvis = gt.pelvis[:, None, :]
    pred.human_verts = pelvis + 2.0 * (pred.human_verts - pelvis)
    terms = losses.mesh_loss(pred, gt, EDGES)
    assert terms["mesh.edge"] > 0.0
    assert terms["mesh.rel_dist"] < 1e-12
    assert terms["mesh.verts_o"] == 0.0


def test_constant_acceleration_regularizer_case():
    """pred == gt under a shared constant acceleration a0: velocity and
    acceleration mismatches vanish and only the two regularizers remain,
    totalling (lambda_reg_h + lambda_reg_o) * |a0|_1."""
    a0 = np.array([0.3, -0.2, 0.1])
    fps = 30.0
    n = 7
    gt = const_velocity_seq(n=n, fps=fps)
    tt = (np.arange(n) / fps)[:, None, None]
    quad = 0.5 * a0 * tt ** 2
    gt.human_verts = gt.human_verts + quad
    gt.obj_verts = gt.obj_verts + quad
    terms = losses.acc_loss(clone(gt), gt)
    w = losses.LossWeights()
    want = (w.reg_h + w.reg_o) * np.abs(a0).sum()
    assert abs(sum(terms.values()) - want) < 1e-6
    assert terms["acc.vel_h"] < 1e-9 and terms["acc.acc_o"] < 1e-9


def test_single_frame_spike_hand_case():
    """Static gt, one 1 cm spike on the object x at frame 4 of 8:
    velocity L1 = 2*eps*fps/(N-1), acceleration and regularizer L1 each
    (1+2+1)*eps*fps^2/(N-2)."""
    n, fps, eps, tau = 8, 10.0, 0.01, 4
    gt = const_velocity_seq(n=n, fps=fps)
    gt.human_verts = np.tile(gt.human_verts[0], (n, 1, 1))
    gt.obj_verts = np.tile(gt.obj_verts[0], (n, 1, 1))
    pred = clone(gt)
    pred.obj_verts[tau, :, 0] += eps
    terms = losses.acc_loss(pred, gt)
    w = losses.LossWeights()
    assert abs(terms["acc.vel_o"] - w.vel_o * 2 * eps * fps / (n - 1)) < 1e-12
    want_a = 4 * eps * fps * fps / (n - 2)
    assert abs(terms["acc.acc_o"] - w.acc_o * want_a) < 1e-12
    assert abs(terms["acc.reg_o"] - w.reg_o * want_a) < 1e-12
    assert terms["acc.vel_h"] == 0.0 and terms["acc.reg_h"] == 0.0


def test_acc_loss_time_reversal_invariant():
    rng = np.random.default_rng(1)
    gt = const_velocity_seq(n=9, seed=2)
    gt.human_verts = gt.human_verts + rng.normal(size=gt.human_verts.shape) * 0.01
    gt.obj_verts = gt.obj_verts + rng.normal(size=gt.obj_verts.shape) * 0.01
    pred = clone(gt)
    pred.human_verts = pred.human_verts + rng.normal(size=gt.human_verts.shape) * 0.01
    fwd = losses.acc_loss(pred, gt)
    rev_p, rev_g = clone(pred), clone(gt)
    for s in (rev_p, rev_g):
        s.human_verts = s.human_verts[::-1].copy()
        s.obj_verts = s.obj_verts[::-1].copy()
    rev = losses.acc_loss(rev_p, rev_g)
    for key in fwd:
        assert abs(fwd[key] - rev[key]) < 1e-12


def test_vertex_permutation_invariance():
    rng = np.random.default_rng(3)
    gt = const_velocity_seq(n=5, seed=4)
    pred = clone(gt)
    pred.human_verts = pred.human_verts + rng.normal(size=gt.human_verts.shape) * 0.02
    pred.obj_verts = pred.obj_verts + rng.normal(size=gt.obj_verts.shape) * 0.02
    base = losses.total_loss(pred, gt, EDGES)[0]
    ph = rng.permutation(gt.human_verts.shape[1])
    po = rng.permutation(gt.obj_verts.shape[1])
    inv = np.empty_like(ph)
    inv[ph] = np.arange(len(ph))
    pp, gg = clone(pred), clone(gt)
    for s in (pp, gg):
        s.human_verts = s.human_verts[:, ph]
        s.obj_verts = s.obj_verts[:, po]
    permuted = losses.total_loss(pp, gg, inv[EDGES])[0]
    assert abs(base - permuted) < 1e-12


def test_breakdown_sums_to_total():
    rng = np.random.default_rng(5)
    gt = const_velocity_seq(n=6, seed=6)
    pred = clone(gt)
    pred.trans = pred.trans + rng.normal(size=pred.trans.shape) * 0.1
    pred.obj_verts = pred.obj_verts + rng.normal(size=pred.obj_verts.shape) * 0.1
    total, terms = losses.total_loss(pred, gt, EDGES)
    assert abs(total - sum(terms.values())) < 1e-12
    assert total > 0.0


def test_l1_reduction_matches_loop():
    """Frame-averaged, component-summed L1 recomputed with plain loops."""
    rng = np.random.default_rng(7)
    gt = const_velocity_seq(n=5, seed=8)
    pred = clone(gt)
    pred.trans = pred.trans + rng.normal(size=pred.trans.shape)
    terms = losses.param_loss(pred, gt)
    acc = 0.0
    for t in range(len(gt)):
        acc += np.abs(pred.trans[t] - gt.trans[t]).sum()
    assert abs(terms["param.trans_h"] - acc / len(gt)) < 1e-12


def test_frame_count_errors():
    gt = const_velocity_seq(n=4)
    short = const_velocity_seq(n=3)
    with pytest.raises(ValueError, match="length"):
        losses.param_loss(short, gt)
    two = const_velocity_seq(n=2)
    with pytest.raises(ValueError, match="at least 3"):
        losses.acc_loss(clone(two), two)


# ---------------------------------------------------------------- fitter


def random_rotation(rng, max_angle=None):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = rng.uniform(0, max_angle if max_angle else np.pi)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(ang) * k + (1 - np.cos(ang)) * (k @ k)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(9)
    template = rng.normal(size=(30, 3))
    target = rng.normal(size=(30, 3))
    h = 1e-4
    for _ in range(20):
        r = rng.normal(size=6)
        if np.linalg.norm(r[:3]) < 0.3:  # stay off the degeneracy
            r[:3] += 1.0
        t = rng.normal(size=3)
        _, gr, gt_ = losses.pose_fit_loss_grad(r, t, template, target)
        fd = np.empty(9)
        for i in range(6):
            rp, rm = r.copy(), r.copy()
            rp[i] += h
            rm[i] -= h
            lp = losses.pose_fit_loss_grad(rp, t, template, target)[0]
            lm = losses.pose_fit_loss_grad(rm, t, template, target)[0]
            fd[i] = (lp - lm) / (2 * h)
        for i in range(3):
            tp, tm = t.copy(), t.copy()
            tp[i] += h
            tm[i] -= h
            lp = losses.pose_fit_loss_grad(r, tp, template, target)[0]
            lm = losses.pose_fit_loss_grad(r, tm, template, target)[0]
            fd[6 + i] = (lp - lm) / (2 * h)
        analytic = np.concatenate([gr, gt_])
        rel = np.abs(analytic - fd) / max(np.abs(fd).max(), 1e-12)
        assert rel.max() < 1e-4


def test_fit_recovers_small_offsets():
    rng = np.random.default_rng(10)
    for _ in range(5):
        template = rng.normal(size=(40, 3))
        rot = random_rotation(rng, max_angle=np.deg2rad(30))
        t = rng.normal(size=3) * 0.5
        target = template @ rot.T + t
        pose, curve = losses.fit_object_pose(template, target, steps=500, lr=0.1)
        assert geodesic_angle(pose.rotation, rot) < np.deg2rad(1.0)
        assert np.linalg.norm(pose.translation - t) < 1e-3
        assert curve[-1] < curve[0]


def test_fit_at_ground_truth_stops_immediately():
    rng = np.random.default_rng(11)
    template = rng.normal(size=(25, 3))
    rot = random_rotation(rng)
    t = rng.normal(size=3)
    target = template @ rot.T + t
    pose, curve = losses.fit_object_pose(template, target,
                                         init_r6d=matrix_to_rot6d(rot),
                                         init_trans=t)
    assert len(curve) == 1
    assert curve[0] < 1e-14
    assert geodesic_angle(pose.rotation, rot) < 1e-6


def test_fit_divergence_raises_with_curve():
    rng = np.random.default_rng(12)
    template = rng.normal(size=(30, 3)) * 3.0
    target = rng.normal(size=(30, 3)) * 3.0
    with pytest.raises(losses.FitDivergence) as exc:
        losses.fit_object_pose(template, target, steps=50, lr=10.0)
    curve = exc.value.curve
    assert len(curve) >= 2
    assert curve[-1] > 10.0 * curve[0]


def test_grad_shape_validation():
    with pytest.raises(ValueError, match="shapes differ"):
        losses.pose_fit_loss_grad(IDENT6, np.zeros(3), np.zeros((4, 3)),
                                  np.zeros((5, 3)))
    with pytest.raises(ValueError, match="degenerate"):
        losses.pose_fit_loss_grad(np.array([0, 0, 0, 0, 1.0, 0]), np.zeros(3),
                                  np.zeros((4, 3)), np.zeros((4, 3)))
