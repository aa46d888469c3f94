from __future__ import annotations

import math

import numpy as np
import pytest

from latentprm.geometry import (
    PROFILES,
    AxisAlignedBox,
    OccupancyGrid,
    Workspace,
    WorkspaceClass,
    collide,
    edge_steps,
    empty_workspace,
    forward_kinematics,
    generate_workspace,
    get_robot,
    interpolate,
    normalized_distance,
    rasterize,
    validate_edge,
    wrap_config,
)
from latentprm.samplers import CSpace

from oracles import brute_force_verdict, clearance_point2d, fk_homogeneous

ROBOT_TAGS = ["point2d", "boxchain7", "boxchain9", "boxchain8"]


def ws2d(*boxes):
    return Workspace(WorkspaceClass.S2D, (31, 31), tuple(AxisAlignedBox(a, b) for a, b in boxes))


# --------------------------------------------------------------- workspaces

@pytest.mark.parametrize("wclass", ["2DS", "3DO", "3DC"])
def test_generated_workspaces_respect_class_profile(wclass):
    prof = PROFILES[WorkspaceClass.parse(wclass)]
    for seed in range(20):
        ws = generate_workspace(wclass, seed)
        assert prof.count_range[0] <= len(ws.obstacles) <= prof.count_range[1]
        ext = np.asarray(ws.extents)
        for b in ws.obstacles:
            assert np.all(np.asarray(b.min) >= 0) and np.all(np.asarray(b.max) <= ext)
            assert np.all(np.asarray(b.min) < np.asarray(b.max))


def test_2ds_seed7_count_and_bounds():
    ws = generate_workspace("2DS", 7)
    assert 3 <= len(ws.obstacles) <= 5
    assert ws.extents == (31, 31)


def test_3dc_obstacles_share_one_size():
    ws = generate_workspace("3DC", 3)
    sizes = {tuple(np.asarray(b.max) - np.asarray(b.min)) for b in ws.obstacles}
    assert sizes == {(1.0, 1.0, 1.0)}


def test_generation_is_deterministic():
    assert generate_workspace("2DS", 7) == generate_workspace("2DS", 7)
    assert generate_workspace("3DO", 7).obstacles != generate_workspace("3DO", 8).obstacles


def test_workspace_json_round_trip(tmp_path):
    ws = generate_workspace("3DO", 11)
    ws.save(tmp_path / "w.json")
    assert Workspace.load(tmp_path / "w.json") == ws


def test_obstacle_outside_extents_rejected():
    with pytest.raises(ValueError):
        ws2d(((30, 30), (32, 31)))


def test_degenerate_box_rejected():
    with pytest.raises(ValueError):
        AxisAlignedBox((1, 1), (1, 2))


def test_unknown_class():
    with pytest.raises(ValueError):
        WorkspaceClass.parse("4DX")


# --------------------------------------------------------------- grids

def test_rasterize_empty_and_full():
    assert np.all(rasterize(empty_workspace("2DS")).values == -1)
    full = ws2d(((0, 0), (31, 31)))
    assert np.all(rasterize(full).values == 1)


def test_rasterize_single_unit_cell():
    g = rasterize(ws2d(((0, 0), (1, 1))))
    assert int(np.sum(g.values == 1)) == 1
    assert g.at(0, 0) == 1.0


def test_grid_flattening_is_x_fastest():
    ws = Workspace(WorkspaceClass.C3D, (11, 11, 11), (AxisAlignedBox((2, 3, 4), (3, 4, 5)),))
    g = rasterize(ws)
    idx = int(np.flatnonzero(g.values == 1)[0])
    assert idx == 2 + 11 * (3 + 11 * 4)


def test_grid_binary_round_trip(tmp_path):
    g = rasterize(generate_workspace("3DO", 2))
    g.save(tmp_path / "g.bin")
    back = OccupancyGrid.load(tmp_path / "g.bin")
    assert back == g and back.values.dtype == np.float32
    assert (tmp_path / "g.bin").read_bytes() == g.to_bytes()


def test_grid_rejects_other_values():
    with pytest.raises(ValueError):
        OccupancyGrid((2, 1), np.array([0.0, 1.0], dtype=np.float32))


def test_occupied_cell_centers_collide_as_points():
    ws = generate_workspace("2DS", 5)
    g = rasterize(ws)
    n, m = g.dims
    for i in range(n):
        for j in range(m):
            if g.at(i, j) > 0:
                c = np.array([i + 0.5, j + 0.5])
                assert any(b.contains(c) for b in ws.obstacles)


# --------------------------------------------------------------- robots and FK

@pytest.mark.parametrize("tag,dof,joints", [("point2d", 2, 0), ("boxchain7", 7, 1), ("boxchain9", 9, 3),
                                            ("boxchain8", 8, 5)])
def test_robot_dof_inventory(tag, dof, joints):
    r = get_robot(tag)
    assert r.dof == dof and r.joint_count == joints


def test_point2d_box_corners():
    (box,) = forward_kinematics(get_robot("point2d"), [15, 15])
    c = box.corners()[:, :2]
    assert np.allclose(c.min(0), [14.75, 14.75]) and np.allclose(c.max(0), [15.25, 15.25])


def test_boxchain7_zero_pose():
    boxes = forward_kinematics(get_robot("boxchain7"), np.zeros(7))
    assert np.allclose(boxes[0].center, [0.2, 0, 0])
    assert np.allclose(boxes[1].center, [0.6, 0, 0])
    for b in boxes:
        assert np.allclose(b.rotation, np.eye(3))


def test_boxchain9_joint1_quarter_turn_makes_perpendicular_links():
    r = get_robot("boxchain9")
    q = np.zeros(9)
    q[6] = math.pi / 2
    boxes = forward_kinematics(r, q)
    _, rots = fk_homogeneous(r, q)
    # The small link between two big links carries joint 1; the next big link shares its frame.
    a0 = boxes[0].rotation[:, 0]
    a2 = boxes[2].rotation[:, 0]
    assert abs(float(a0 @ a2)) < 1e-12
    assert abs(float(rots[0][:, 0] @ rots[2][:, 0])) < 1e-12


@pytest.mark.parametrize("tag", ROBOT_TAGS)
def test_fk_matches_homogeneous_transform_oracle(tag):
    r = get_robot(tag)
    ext = (31, 31) if r.dim == 2 else (11, 11, 11)
    cs = CSpace(r, ext)
    rng = np.random.default_rng(42)
    for q in cs.uniform(rng, 200):
        boxes = forward_kinematics(r, q)
        centers, rots = fk_homogeneous(r, q)
        for b, c, R in zip(boxes, centers, rots):
            assert np.allclose(b.center, c, atol=1e-12)
            assert np.allclose(b.rotation, R, atol=1e-12)


@pytest.mark.parametrize("tag", ROBOT_TAGS)
def test_fk_rotations_orthonormal_and_halves_rigid(tag):
    r = get_robot(tag)
    ext = (31, 31) if r.dim == 2 else (11, 11, 11)
    rng = np.random.default_rng(1)
    ref = [np.array(ln.half) for ln in r.links]
    for q in CSpace(r, ext).uniform(rng, 50):
        for b, h in zip(forward_kinematics(r, q), ref):
            assert np.allclose(b.rotation.T @ b.rotation, np.eye(3), atol=1e-9)
            assert np.array_equal(b.half, h)


def test_fk_dimension_mismatch():
    with pytest.raises(ValueError):
        forward_kinematics(get_robot("boxchain7"), np.zeros(6))


def test_office_robot_fits_its_bounding_envelope():
    boxes = forward_kinematics(get_robot("boxchain8"), [5, 5, 0, 0, 0, 0, 0, 0])
    base = boxes[0]
    assert np.allclose(2 * base.half, [1.5, 1.0, 0.5])
    arm_top = max(b.corners()[:, 2].max() for b in boxes[1:])
    assert arm_top == pytest.approx(0.5 + 5 * 0.4)


def test_wrap_config_range():
    mask = np.array([False, True])
    q = wrap_config(np.array([[3.0, math.pi], [3.0, -math.pi], [3.0, 7.0]]), mask)
    assert np.all(q[:, 1] >= -math.pi) and np.all(q[:, 1] < math.pi)
    assert q[0, 1] == pytest.approx(-math.pi)


# --------------------------------------------------------------- collision

def test_point_robot_basic_cases():
    r = get_robot("point2d")
    assert not collide(r, [15, 15], empty_workspace("2DS"))
    assert collide(r, [15, 15], ws2d(((10, 10), (20, 20))))


def test_touching_counts_as_collision():
    r = get_robot("point2d")
    ws = ws2d(((10, 10), (12, 12)))
    assert collide(r, [9.75, 11], ws)
    assert not collide(r, [9.75 - 1e-9, 11], ws)


def test_out_of_bounds_is_collision():
    r = get_robot("point2d")
    ws = empty_workspace("2DS")
    assert collide(r, [0.2, 15], ws)
    assert not collide(r, [0.25, 15], ws)
    r7 = get_robot("boxchain7")
    q = np.zeros(7)
    q[:3] = [-1.0, 5, 5]
    assert collide(r7, q, empty_workspace("3DC"))


def test_dimension_mismatch_between_robot_and_workspace():
    with pytest.raises(ValueError):
        collide(get_robot("boxchain7"), np.zeros(7), empty_workspace("2DS"))


def test_grazing_corner_at_30_degree_yaw():
    r = get_robot("boxchain7")
    ws = Workspace(WorkspaceClass.C3D, (11, 11, 11), (AxisAlignedBox((5, 5, 5), (6, 6, 6)),))
    yaw = math.radians(30)
    hits = []
    for dx in np.linspace(-0.3, 0.3, 61):
        q = np.array([4.5 + dx, 5.0, 5.5, yaw, 0, 0, 0])
        v = brute_force_verdict(r, q, ws)
        if v is not None:
            hits.append((collide(r, q, ws), v))
    assert hits and all(a == b for a, b in hits)
    assert {v for _, v in hits} == {True, False}


def _near_obstacle_config(rng, robot, ws):
    cs = CSpace(robot, ws.extents)
    q = cs.uniform(rng, 1)[0]
    if ws.obstacles and rng.random() < 0.8:
        b = ws.obstacles[rng.integers(len(ws.obstacles))]
        lo, hi = np.asarray(b.min, float), np.asarray(b.max, float)
        p = rng.uniform(lo - 0.6, hi + 0.6)
        for k, i in robot.trans_axes.items():
            q[k] = np.clip(p[i], 0, ws.extents[i])
    return q


def test_sat_agrees_with_point_containment_oracle_1000_cases():
    rng = np.random.default_rng(2024)
    classes = {"point2d": "2DS", "boxchain7": "3DC", "boxchain9": "3DC", "boxchain8": "3DO"}
    decided = disagreements = 0
    for case in range(1000):
        tag = ROBOT_TAGS[case % 4]
        r = get_robot(tag)
        ws = generate_workspace(classes[tag], 10_000 + case)
        q = _near_obstacle_config(rng, r, ws)
        v = brute_force_verdict(r, q, ws)
        if v is None:
            continue
        decided += 1
        disagreements += int(collide(r, q, ws) != v)
    assert disagreements == 0
    assert decided > 900


def test_sat_backends_agree():
    from latentprm.kernels import backend_module

    py = backend_module("python")
    cy = backend_module("cython")
    rng = np.random.default_rng(5)
    for tag, wc in [("point2d", "2DS"), ("boxchain9", "3DC"), ("boxchain8", "3DO")]:
        r = get_robot(tag)
        ws = generate_workspace(wc, 77)
        for _ in range(300):
            q = _near_obstacle_config(rng, r, ws)
            assert collide(r, q, ws, backend=py) == collide(r, q, ws, backend=cy)


# --------------------------------------------------------------- edges

def test_edge_endpoint_equal_is_single_check():
    r = get_robot("point2d")
    ws = empty_workspace("2DS")
    assert validate_edge(r, [5, 5], [5, 5], ws)


def test_edge_through_wall_fails():
    r = get_robot("point2d")
    ws = ws2d(((15, 0), (16, 31)))
    assert not validate_edge(r, [5, 15], [25, 15], ws)
    assert validate_edge(r, [5, 15], [14, 15], ws)


def test_edge_step_resolution():
    r = get_robot("boxchain7")
    q1 = np.zeros(7)
    q2 = q1.copy()
    q2[0] = 1.0
    assert edge_steps(r, q1, q2) >= 10
    q2[6] = 3.0
    assert edge_steps(r, q1, q2) >= 3.0 / 0.05


def test_edge_angles_take_short_arc():
    r = get_robot("boxchain7")
    q1 = np.array([5, 5, 5, 0, 0, 0, 3.1])
    q2 = np.array([5, 5, 5, 0, 0, 0, -3.1])
    mid = interpolate(r, q1, q2, 0.5)
    assert abs(abs(mid[6]) - math.pi) < 1e-12
    assert edge_steps(r, q1, q2) == 10


def test_edges_agree_with_finer_resolution_except_tight_clearance():
    r = get_robot("point2d")
    rng = np.random.default_rng(9)
    mismatches = 0
    tested = 0
    for case in range(100):
        ws = generate_workspace("2DS", 500 + case)
        cs = CSpace(r, ws.extents)
        while True:
            a, b = cs.uniform(rng, 2)
            if not collide(r, a, ws) and not collide(r, b, ws):
                break
        coarse = validate_edge(r, a, b, ws)
        fine = validate_edge(r, a, b, ws, resolution_scale=10.0)
        steps = edge_steps(r, a, b, 10.0) * 10
        path = a + np.linspace(0, 1, steps + 1)[:, None] * (b - a)
        clear = min(clearance_point2d(p, ws) for p in path)
        if clear < 0.05:
            continue
        tested += 1
        mismatches += int(coarse != fine)
    assert tested > 50 and mismatches == 0


def test_normalized_distance_wraps_angles():
    r = get_robot("boxchain7")
    ext = (11, 11, 11)
    a = np.array([0, 0, 0, 0, 0, 0, math.pi - 0.01])
    b = np.array([0, 0, 0, 0, 0, 0, -math.pi + 0.01])
    assert float(normalized_distance(r, ext, a, b)) == pytest.approx(0.02 / math.pi)
