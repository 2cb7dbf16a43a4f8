import json

import numpy as np
import pytest

from conftest import random_spd
from elastoscatter.acquisition import (Dataset, add_noise, build_H, dataset_from_dict,
                                       dataset_to_dict, direction_set, factorized_response,
                                       load_dataset, response_matrix, save_dataset,
                                       truth_from_scene)
from elastoscatter.errors import DatasetError, ParameterError
from elastoscatter.foldy_lax import NINE_CHANNELS, FoldyLaxSystem, Scene, scalar_far_field


def test_direction_set_single():
    d = direction_set(1)
    assert d.vectors.shape == (1, 3)
    assert np.linalg.norm(d.vectors[0]) == pytest.approx(1.0)


@pytest.mark.parametrize("scheme", ["fibonacci", "random"])
def test_direction_set_unit_and_off_pole(scheme):
    v = direction_set(200, scheme, seed=3).vectors
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-14)
    assert np.linalg.norm(v[:, :2], axis=1).min() > 1e-6


def test_direction_set_uniformity():
    assert np.linalg.norm(direction_set(100).vectors.mean(axis=0)) <= 0.1


def test_direction_set_determinism():
    np.testing.assert_array_equal(direction_set(20, "random", 7).vectors,
                                  direction_set(20, "random", 7).vectors)
    assert not np.array_equal(direction_set(20, "random", 7).vectors,
                              direction_set(20, "random", 8).vectors)


def test_direction_set_errors():
    with pytest.raises(ParameterError):
        direction_set(0)
    with pytest.raises(ParameterError):
        direction_set(5, "grid")


def test_build_H_p_at_origin(medium, dirs30):
    H = build_H("p", dirs30, [[0, 0, 0]], medium)
    np.testing.assert_allclose(H, dirs30.vectors.T, atol=1e-15)


@pytest.mark.parametrize("kind", ["p", "sh", "sv", "s"])
def test_build_H_subcolumns_unit(medium, dirs30, kind):
    centers = [[0.1, 0.2, 0.3], [-0.5, 0.4, 0.0]]
    H = build_H(kind, dirs30, centers, medium, (0.6, 0.8))
    norms = np.linalg.norm(H.reshape(2, 3, -1), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-14)


def test_build_H_sh_example(medium):
    H = build_H("sh", np.array([[1.0, 0, 0]]), [[0, 0, 0]], medium)
    np.testing.assert_allclose(H[:, 0], [0, 0, -1], atol=1e-15)


def test_build_H_phases(medium, dirs30):
    z = np.array([0.3, -0.1, 0.2])
    H = build_H("sv", dirs30, [z], medium)
    col = 4
    expected = np.exp(1j * medium.kappa_s * dirs30.vectors[col] @ z)
    pol = build_H("sv", dirs30, [[0, 0, 0]], medium)[:, col]
    np.testing.assert_allclose(H[:, col], expected * pol, atol=1e-14)


def test_build_H_needs_centers(medium, dirs30):
    with pytest.raises(ParameterError):
        build_H("p", dirs30, np.zeros((0, 3)), medium)


def test_response_single_pp(medium, dirs30):
    c = 0.4
    scene = Scene.point_scatterers(medium, [[0, 0, 0]], [c * np.eye(3)])
    F = response_matrix(scene, "PP", dirs30).F
    np.testing.assert_allclose(F, -c * dirs30.vectors @ dirs30.vectors.T, atol=1e-14)


def test_response_entries_match_scalar_far_field(point_scene):
    dirs = direction_set(6)
    sys = FoldyLaxSystem(point_scene)
    F = response_matrix(point_scene, "SvP", dirs, sys).F
    v = dirs.vectors
    for j, l in [(0, 0), (2, 5), (4, 1)]:
        assert F[j, l] == pytest.approx(scalar_far_field("SvP", v[j], v[l], point_scene, sys),
                                        rel=1e-13)


@pytest.mark.parametrize("channel", NINE_CHANNELS + ("PS", "SP", "SS"))
def test_factorization(point_scene, dirs30, channel):
    F = response_matrix(point_scene, channel, dirs30).F
    G = factorized_response(point_scene, channel, dirs30)
    assert np.linalg.norm(F - G) <= 1e-10 * np.linalg.norm(F)


@pytest.mark.parametrize("channel", ["PP", "ShSh", "SvP"])
def test_rank_two_scatterers(medium, channel):
    rng = np.random.default_rng(5)
    scene = Scene.point_scatterers(medium, [[0, 0, 0], [0.6, -0.3, 0.4]],
                                   [random_spd(rng) for _ in range(2)])
    s = np.linalg.svd(response_matrix(scene, channel, direction_set(20)).F, compute_uv=False)
    assert s[6] <= 1e-10 * s[0]
    assert s[5] / s[6] >= 1e6


def test_noise_zero_level(point_scene, dirs30):
    F = response_matrix(point_scene, "PP", dirs30)
    G = add_noise(F, 0.0, 1)
    np.testing.assert_array_equal(G.F, F.F)
    assert G.noise == {"level": 0.0, "seed": 1}


def test_noise_deterministic(point_scene, dirs30):
    F = response_matrix(point_scene, "PP", dirs30)
    np.testing.assert_array_equal(add_noise(F, 0.05, 9).F, add_noise(F, 0.05, 9).F)


def test_noise_magnitude(point_scene, dirs30):
    F = response_matrix(point_scene, "ShSh", dirs30)
    level = 0.03
    mean = np.mean([np.linalg.norm(add_noise(F, level, s).F - F.F) for s in range(100)])
    assert mean == pytest.approx(level * np.linalg.norm(F.F), rel=0.1)


def test_noise_negative_level(point_scene, dirs30):
    with pytest.raises(ParameterError):
        add_noise(response_matrix(point_scene, "PP", dirs30), -1.0, 0)


def test_dataset_round_trip_bitwise(tmp_path, point_scene, dirs30):
    F = add_noise(response_matrix(point_scene, "PSv", dirs30), 0.01, 2)
    ds = Dataset(F, truth_from_scene(point_scene))
    save_dataset(tmp_path / "d.json", ds)
    back = load_dataset(tmp_path / "d.json")
    np.testing.assert_array_equal(back.response.F, F.F)
    np.testing.assert_array_equal(back.response.directions.vectors, dirs30.vectors)
    assert back.response.channel == "PSv"
    assert back.response.medium == F.medium
    assert back.response.noise == {"level": 0.01, "seed": 2}
    assert back.has_truth
    np.testing.assert_array_equal(back.truth["centers"], point_scene.centers)


def test_dataset_without_truth(point_scene, dirs30):
    ds = Dataset(response_matrix(point_scene, "PP", dirs30))
    assert not dataset_from_dict(json.loads(json.dumps(dataset_to_dict(ds)))).has_truth


def test_dataset_unknown_version(point_scene, dirs30):
    d = dataset_to_dict(Dataset(response_matrix(point_scene, "PP", dirs30)))
    d["version"] = 2
    with pytest.raises(DatasetError, match="version"):
        dataset_from_dict(d)


def test_dataset_malformed(tmp_path, point_scene, dirs30):
    path = tmp_path / "bad.json"
    path.write_text('{"version": 1,\n "medium": [}')
    with pytest.raises(DatasetError, match="line 2"):
        load_dataset(path)
    d = dataset_to_dict(Dataset(response_matrix(point_scene, "PP", dirs30)))
    d["F"] = d["F"][:-1]
    with pytest.raises(DatasetError, match="shape"):
        dataset_from_dict(d)
    del d["medium"]
    with pytest.raises(DatasetError, match="medium"):
        dataset_from_dict(d)


def test_synthesis_deterministic(point_scene, dirs30):
    a = dataset_to_dict(Dataset(add_noise(response_matrix(point_scene, "SvSv", dirs30), 0.1, 4)))
    b = dataset_to_dict(Dataset(add_noise(response_matrix(point_scene, "SvSv", dirs30), 0.1, 4)))
    assert json.dumps(a) == json.dumps(b)
