"""Geometry tests: bundled scenes, Jacobians, symmetry maps, round-trips."""

from __future__ import annotations

import numpy as np
import pytest

from multimpact import (
    anitescu_resolve,
    build_ball,
    build_example,
    contact_jacobians,
    gap,
    is_impacting,
    list_examples,
    load_scene,
    reflect_map,
)
from multimpact.scenes import mass_matrix, scene_from_dict, scene_to_dict

ALL_SCENES = ("phone", "compass", "box_wall", "disk_stack")


def test_bundled_catalog():
    assert tuple(list_examples()) == ALL_SCENES
    for name in ALL_SCENES:
        problem, v0, meta = build_example(name)
        assert meta["name"] == name
        assert {"h", "n_steps", "m_trajectories"} <= meta.keys()
        assert is_impacting(problem, v0)
    with pytest.raises(KeyError):
        build_example("nonexistent")


def test_initial_gaps_are_closed():
    for name in ALL_SCENES:
        scene = load_scene(name)
        np.testing.assert_allclose(
            gap(scene, scene.initial_pose()), 0.0, atol=1e-9, err_msg=name
        )


@pytest.mark.parametrize("name", ALL_SCENES)
def test_normal_jacobian_is_gap_gradient(name, rng):
    scene = load_scene(name)
    q0 = scene.initial_pose()
    for trial in range(5):
        q = q0 + 0.05 * rng.standard_normal(q0.shape)
        jn, _ = contact_jacobians(scene, q)
        u = rng.standard_normal(q0.shape)
        tau = 1e-6
        fd = (gap(scene, q + tau * u) - gap(scene, q - tau * u)) / (2.0 * tau)
        np.testing.assert_allclose(jn @ u, fd, atol=1e-7)


def test_phone_jacobian_rows_frozen():
    problem, _, _ = build_example("phone")
    a, b = 0.07444, 0.16094
    np.testing.assert_allclose(problem.jn[0], [0.0, 1.0, a / 2.0], atol=1e-12)
    np.testing.assert_allclose(problem.jn[1], [0.0, 1.0, -a / 2.0], atol=1e-12)
    np.testing.assert_allclose(problem.jd[0], [-1.0, 0.0, -b / 2.0], atol=1e-12)
    np.testing.assert_allclose(problem.jd[2], [-1.0, 0.0, -b / 2.0], atol=1e-12)
    np.testing.assert_array_equal(problem.jd[1], -problem.jd[0])
    np.testing.assert_allclose(problem.mass, np.diag([0.19, 0.19, 0.0004978474556666667]))


def test_box_wall_contact_directions():
    problem, v0, _ = build_example("box_wall")
    # Contact A rests on the floor, contact B presses against the wall.
    np.testing.assert_allclose(problem.jn[0][:2], [0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(problem.jn[1][:2], [-1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(problem.jd[0][:2], [-1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(problem.jd[2][:2], [0.0, -1.0], atol=1e-12)
    # The initial slide approaches the wall but not the floor.
    rates = problem.jn @ v0
    assert rates[0] == pytest.approx(0.0, abs=1e-12)
    assert rates[1] < -0.5


def test_ball_problem_is_minimal():
    ball, v0, meta = build_ball()
    np.testing.assert_array_equal(ball.mass, [[1.0]])
    np.testing.assert_array_equal(ball.jn, [[1.0]])
    np.testing.assert_array_equal(ball.jd, [[0.0], [0.0]])
    np.testing.assert_array_equal(v0, [-1.0])
    assert meta["h"] == 1.0


def test_phone_reflection_symmetry():
    problem, v0, _ = build_example("phone")
    r = reflect_map("phone")
    np.testing.assert_allclose(r, np.diag([-1.0, 1.0, -1.0]))
    np.testing.assert_allclose(r @ v0, v0, atol=1e-15)
    np.testing.assert_allclose(r.T @ problem.mass @ r, problem.mass, atol=1e-15)
    # Reflection swaps the two corner contacts and flips tangents.
    np.testing.assert_allclose(problem.jn[0] @ r, problem.jn[1], atol=1e-12)
    np.testing.assert_allclose(problem.jd[0] @ r, -problem.jd[2], atol=1e-12)


def test_disk_stack_reflection_symmetry():
    problem, v0, _ = build_example("disk_stack")
    r = reflect_map("disk_stack")
    perm = [1, 0, 3, 2, 4]
    np.testing.assert_allclose(r.T @ problem.mass @ r, problem.mass, atol=1e-12)
    np.testing.assert_allclose(r @ v0, v0, atol=1e-15)
    np.testing.assert_allclose(problem.jn @ r, problem.jn[perm], atol=1e-12)
    np.testing.assert_allclose(
        problem.jd[0::2] @ r, -problem.jd[0::2][perm], atol=1e-12
    )


def test_reflection_rejects_asymmetric_scenes():
    for name in ("compass", "box_wall"):
        with pytest.raises(ValueError):
            reflect_map(name)


def test_reflected_resolution_commutes_on_the_phone():
    problem, v0, _ = build_example("phone")
    r = reflect_map("phone")
    v_perturbed = v0 + np.array([0.02, 0.0, 0.1])
    left = anitescu_resolve(problem, r @ v_perturbed)
    right = r @ anitescu_resolve(problem, v_perturbed)
    np.testing.assert_allclose(left, right, atol=1e-10)


def test_linkage_mass_matches_point_mass_reconstruction():
    scene = load_scene("compass")
    q = scene.initial_pose() + np.array([0.01, -0.02, 0.05, -0.03])
    length = float(scene.linkage["leg_length"])
    offset = length - float(scene.linkage["mass_offset"])
    leg_mass = float(scene.linkage["leg_mass"])
    expected = np.zeros((4, 4))
    for leg in range(2):
        phi = q[2 + leg]
        jac = np.zeros((2, 4))
        jac[:, :2] = np.eye(2)
        jac[:, 2 + leg] = offset * np.array([np.cos(phi), np.sin(phi)])
        expected += leg_mass * jac.T @ jac
    np.testing.assert_allclose(mass_matrix(scene, q), expected, atol=1e-12)
    eigenvalues = np.linalg.eigvalsh(mass_matrix(scene, q))
    assert eigenvalues.min() > 0.0


def test_scene_dict_round_trip():
    for name in ALL_SCENES:
        scene = load_scene(name)
        clone = scene_from_dict(scene_to_dict(scene))
        np.testing.assert_allclose(clone.initial_pose(), scene.initial_pose())
        np.testing.assert_allclose(clone.v0, scene.v0)
        assert [c.label for c in clone.contacts] == [c.label for c in scene.contacts]
        np.testing.assert_allclose(
            gap(clone, clone.initial_pose()), gap(scene, scene.initial_pose()), atol=1e-15
        )


def test_load_scene_from_file(tmp_path):
    import json

    scene = load_scene("phone")
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(scene_to_dict(scene)))
    clone = load_scene(path)
    np.testing.assert_allclose(clone.v0, scene.v0)
