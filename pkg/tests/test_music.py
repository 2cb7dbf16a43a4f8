import numpy as np
import pytest

from conftest import random_spd
from elastoscatter.acquisition import add_noise, direction_set, response_matrix
from elastoscatter.errors import ConfigError, ParameterError
from elastoscatter.foldy_lax import NINE_CHANNELS, Scene, parse_channel
from elastoscatter.music import (ImagingGrid, Pseudospectrum, locate, localization_error,
                                 noise_projector, pseudospectrum)
from elastoscatter.music import test_vector as phi
from elastoscatter.music import test_vectors as phis


@pytest.fixture(scope="module")
def two_scene():
    from elastoscatter import make_medium
    m = make_medium(2.0, 1.0, 2 * np.pi)
    rng = np.random.default_rng(5)
    return Scene.point_scatterers(m, [[0, 0, 0], [0.6, -0.3, 0.4]],
                                  [random_spd(rng) for _ in range(2)])


def test_signal_rank_threshold(two_scene):
    F = response_matrix(two_scene, "PP", direction_set(20))
    P = noise_projector(F, threshold=1e-8)
    assert P.signal_rank == 6
    assert P.basis.shape == (20, 14)


def test_projector_properties(two_scene):
    F = response_matrix(two_scene, "ShSv", direction_set(20))
    P = noise_projector(F).matrix
    assert np.abs(P @ P - P).max() <= 1e-10
    assert np.abs(P - P.conj().T).max() <= 1e-10
    assert np.trace(P).real == pytest.approx(14)
    cols = np.linalg.norm(P @ F.F, axis=0)
    assert np.all(cols <= 1e-10 * np.linalg.norm(F.F, axis=0))


def test_gram_mode_same_subspace(two_scene):
    F = response_matrix(two_scene, "PSh", direction_set(20))
    a = noise_projector(F).matrix
    b = noise_projector(F, gram=True, threshold=1e-12).matrix
    assert np.abs(a - b).max() <= 1e-8


def test_fixed_rank_errors():
    with pytest.raises(ParameterError):
        noise_projector(np.eye(5), rank=5)
    with pytest.raises(ParameterError):
        noise_projector(np.zeros((4, 4)))
    with pytest.raises(ParameterError):
        noise_projector(np.eye(5), threshold=1e-8)  # full rank: no noise space
    assert noise_projector(np.eye(5), rank=2).basis.shape == (5, 3)


def test_test_vector_examples(medium):
    dirs = direction_set(12)
    for j in (1, 2, 3):
        np.testing.assert_allclose(phi("p", j, [0, 0, 0], dirs, medium),
                                   dirs.vectors[:, j - 1], atol=1e-15)
    z = np.array([0.4, -1.2, 2.0])
    for kind in ("p", "sh", "sv"):
        np.testing.assert_allclose(np.abs(phis(kind, z, dirs, medium)),
                                   np.abs(phis(kind, np.zeros(3), dirs, medium)),
                                   atol=1e-14)
    assert phi("sh", 3, [0, 0, 0], np.array([[1.0, 0, 0]]), medium)[0] == pytest.approx(-1)
    with pytest.raises(ParameterError):
        phi("p", 4, [0, 0, 0], dirs, medium)


def test_test_vector_phase(medium):
    dirs = direction_set(8)
    z = np.array([0.1, 0.2, -0.3])
    expected = dirs.vectors[:, 0] * np.exp(-1j * medium.kappa_p * dirs.vectors @ z)
    np.testing.assert_allclose(phi("p", 1, z, dirs, medium), expected, atol=1e-15)


def test_single_scatterer_argmax_at_center(medium):
    center = np.array([0.2, -0.1, 0.3])
    scene = Scene.point_scatterers(medium, [center], [random_spd(np.random.default_rng(0))])
    F = response_matrix(scene, "PP", direction_set(30))
    grid = ImagingGrid.from_spacing(center - 0.5, center + 0.5, 0.1)
    ps = pseudospectrum(F, grid)
    best = grid.points[np.argmax(ps.values)]
    np.testing.assert_allclose(best, center, atol=1e-12)
    far = ImagingGrid(center + 10, center + 10.5, (3, 3, 3))
    assert pseudospectrum(F, far).values.max() <= 0.1 * ps.values.max()


def test_scale_invariance(two_scene):
    F = response_matrix(two_scene, "SvSv", direction_set(30))
    grid = ImagingGrid((-0.2, -0.5, -0.2), (0.8, 0.2, 0.6), (6, 5, 5))
    a = pseudospectrum(F, grid, threshold=1e-6)
    b = pseudospectrum(F.with_matrix((3 - 4j) * F.F), grid, threshold=1e-6)
    np.testing.assert_allclose(a.values, b.values, rtol=1e-6)


def test_kind_mismatch(two_scene):
    F = response_matrix(two_scene, "PSh", direction_set(20))
    grid = ImagingGrid((0, 0, 0), (1, 1, 1), (2, 2, 2))
    with pytest.raises(ConfigError):
        pseudospectrum(F, grid, kind="p")
    assert pseudospectrum(F, grid, kind="sh").kind == "sh"


def test_grid_validation():
    with pytest.raises(ParameterError):
        ImagingGrid((0, 0, 0), (-1, 1, 1), (3, 3, 3))
    with pytest.raises(ParameterError):
        ImagingGrid.from_spacing((0, 0, 0), (0, 1, 1), 0.1)
    with pytest.raises(ParameterError):
        ImagingGrid((0, 0, 0), (1, 1, 1), (0, 3, 3))
    g = ImagingGrid.from_spacing((0, 0, 0), (1, 1, 0.95), 0.1)
    assert g.counts == (11, 11, 11)
    assert g.h == pytest.approx(0.1)


@pytest.mark.parametrize("channel", NINE_CHANNELS)
def test_true_centers_dominate(point_scene, channel):
    F = response_matrix(point_scene, channel, direction_set(30))
    grid = ImagingGrid.from_spacing((-0.6, -0.2, -0.7), (0.9, 0.9, 0.5), 0.1)
    ps = pseudospectrum(F, grid)
    truth = point_scene.centers
    dist = np.linalg.norm(grid.points[:, None] - truth[None], axis=2).min(axis=1)
    outside = ps.values.ravel()[dist > np.sqrt(3) * grid.h]
    for z in truth:
        val = pseudospectrum(F, ImagingGrid(z, z, (1, 1, 1))).values.item()
        assert val > outside.max()


def _synthetic(grid, bumps):
    pts = grid.points
    v = np.zeros(len(pts))
    for center, height, width in bumps:
        v += height * np.exp(-np.sum((pts - center) ** 2, axis=1) / width**2)
    return Pseudospectrum(grid, v.reshape(grid.counts), np.stack([v.reshape(grid.counts)] * 3),
                          "p", "union", 0)


def test_locate_single_peak():
    grid = ImagingGrid((0, 0, 0), (1, 1, 1), (11, 11, 11))
    ps = _synthetic(grid, [((0.3, 0.5, 0.7), 1.0, 0.1)])
    found = locate(ps)
    np.testing.assert_allclose(found, [[0.3, 0.5, 0.7]], atol=1e-12)


def test_locate_two_peaks_descending():
    grid = ImagingGrid((0, 0, 0), (1, 1, 1), (11, 11, 11))
    ps = _synthetic(grid, [((0.2, 0.2, 0.2), 0.8, 0.08), ((0.8, 0.7, 0.6), 1.0, 0.08)])
    np.testing.assert_allclose(locate(ps), [[0.8, 0.7, 0.6], [0.2, 0.2, 0.2]], atol=1e-12)


def test_locate_expected_m_with_spurious_maxima():
    grid = ImagingGrid((0, 0, 0), (2, 2, 2), (21, 21, 21))
    main = [((0.3, 0.3, 0.3), 1.0, 0.1), ((1.5, 0.4, 1.2), 0.9, 0.1), ((0.8, 1.6, 0.9), 0.95, 0.1)]
    rng = np.random.default_rng(3)
    spurious = [(tuple(np.round(rng.uniform(0.2, 1.8, 3), 1)), 0.6, 0.07) for _ in range(5)]
    ps = _synthetic(grid, main + spurious)
    found = locate(ps, expected_M=3)
    assert len(found) == 3
    np.testing.assert_allclose(found, [main[0][0], main[2][0], main[1][0]], atol=1e-12)


def test_locate_empty_field(caplog):
    grid = ImagingGrid((0, 0, 0), (1, 1, 1), (3, 3, 3))
    ps = _synthetic(grid, [])
    ps = Pseudospectrum(grid, np.full(grid.counts, np.nan), ps.per_component, "p", "union", 0)
    assert locate(ps).shape == (0, 3)
    assert "no pseudospectrum peak" in caplog.text


def test_channel_equivalence(point_scene):
    dirs = direction_set(40)
    grid = ImagingGrid.from_spacing((-0.6, -0.2, -0.7), (0.9, 0.9, 0.5), 0.05)
    found = {}
    for ch in ("PP", "ShSh", "SvSv"):
        F = response_matrix(point_scene, ch, dirs)
        found[ch] = locate(pseudospectrum(F, grid), expected_M=3)
    for a in found:
        for b in found:
            # each location of a has a partner in b at most one cell away per axis
            d = np.abs(found[a][:, None] - found[b][None]).max(axis=2).min(axis=1)
            assert np.all(d <= grid.h * (1 + 1e-9))


def test_noise_monotonicity(point_scene):
    dirs = direction_set(30)
    F = response_matrix(point_scene, "PP", dirs)
    grid = ImagingGrid.from_spacing((-0.5, -0.15, -0.6), (0.85, 0.75, 0.35), 0.05)
    medians = []
    for level in (0.0, 0.005, 0.01, 0.02):
        errs = []
        for seed in range(20):
            G = add_noise(F, level, seed)
            ps = pseudospectrum(G, grid, rank=9)
            errs.append(localization_error(locate(ps, expected_M=3), point_scene.centers).mean())
        medians.append(np.median(errs))
    assert all(a <= b + 1e-12 for a, b in zip(medians, medians[1:]))


def test_localization_error_matching():
    err = localization_error([[1, 0, 0], [0, 0, 0]], [[0, 0, 0.1], [1, 0.2, 0]])
    np.testing.assert_allclose(sorted(err), [0.1, 0.2])


def test_csv_export_deterministic(tmp_path, two_scene):
    F = response_matrix(two_scene, "PP", direction_set(20))
    grid = ImagingGrid((-0.2, -0.4, -0.1), (0.7, 0.1, 0.5), (4, 3, 3))
    pseudospectrum(F, grid).to_csv(tmp_path / "a.csv")
    pseudospectrum(F, grid).to_csv(tmp_path / "b.csv")
    a = (tmp_path / "a.csv").read_text()
    assert a == (tmp_path / "b.csv").read_text()
    assert a.splitlines()[0] == "x,y,z,value"
    assert len(a.splitlines()) == 37


def test_parse_channel_consistency():
    assert parse_channel("SvP") == ("sv", "p")
