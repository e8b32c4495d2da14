import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest, kurtosis

from hds.core import (
    Bounds,
    EllipsoidModel,
    GaussianWeightSpec,
    HdsConfig,
    allocate_samples,
    apply_gaussian_weights,
    build_ellipsoids,
    denormalize,
    hds_generate,
    normalize,
    reject_and_fill,
    sample_ellipsoid,
    sequence_to_csv,
    sequence_to_json,
)
from hds.errors import ConfigurationError
from hds.rng import RngStream
from hds.sobol import SobolEngine


# ---------------------------------------------------------------------------
# bounds and frames
# ---------------------------------------------------------------------------

def test_bounds_validation():
    with pytest.raises(ConfigurationError):
        Bounds([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ConfigurationError):
        Bounds([0.0], [np.inf])
    b = Bounds.cube(-100.0, 100.0, 3)
    assert b.dims == 3
    assert np.all(b.range == 200.0)


def test_normalize_corners_and_midpoint():
    b = Bounds.cube(-100.0, 100.0, 4)
    assert np.all(normalize(b.lower[None, :], b) == 0.0)
    assert np.all(normalize(b.upper[None, :], b) == 1.0)
    assert np.all(normalize(np.zeros((1, 4)), b) == 0.5)


def test_denormalize_values():
    b = Bounds.cube(-100.0, 100.0, 2)
    assert np.all(denormalize(np.full((1, 2), 0.5), b) == 0.0)
    assert np.all(denormalize(np.zeros((1, 2)), b) == b.lower)
    b8 = Bounds.cube(0.0, 8.0, 1)
    assert denormalize(np.array([[0.25]]), b8)[0, 0] == 2.0


def test_frame_roundtrip():
    b = Bounds(np.array([-3.0, 2.0, 0.5]), np.array([7.0, 11.0, 0.75]))
    pts = np.random.default_rng(0).random((64, 3))
    back = normalize(denormalize(pts, b), b)
    assert np.abs(back - pts).max() <= 1e-12


# ---------------------------------------------------------------------------
# Gaussian weights
# ---------------------------------------------------------------------------

def test_weights_uniform_limit():
    pts = SobolEngine(2).draw(1024)
    spec = GaussianWeightSpec(mean=[0.5, 0.5], stddev=[1e6, 1e6])
    out = apply_gaussian_weights(pts, spec, Bounds.unit(2), RngStream(1))
    assert out.shape == pts.shape
    assert np.abs(out.mean(0) - pts.mean(0)).max() < 0.02


def test_weights_delta_limit_picks_nearest():
    pts = SobolEngine(2).draw(256)
    target = np.array([0.31, 0.77])
    nearest = pts[np.argmin(((pts - target) ** 2).sum(1))]
    spec = GaussianWeightSpec(mean=target, stddev=[1e-8, 1e-8])
    out = apply_gaussian_weights(pts, spec, Bounds.unit(2), RngStream(2))
    assert np.all(out == nearest)


def test_weights_tilted_mean_matches_quadrature():
    # independent oracle: mean of the uniform density tilted by the Gaussian
    mean, std = 0.25, 0.33
    weight = lambda t: math.exp(-((t - mean) ** 2) / (2.0 * std**2))
    z, _ = quad(weight, 0.0, 1.0)
    target, _ = quad(lambda t: t * weight(t), 0.0, 1.0)
    oracle = target / z  # ~0.366
    pts = SobolEngine(2).draw(4096)
    spec = GaussianWeightSpec(mean=[mean, mean], stddev=[std, std])
    out = apply_gaussian_weights(pts, spec, Bounds.unit(2), RngStream(3))
    assert np.abs(out.mean(0) - oracle).max() < 0.05


def test_weights_in_bounds_frame():
    # the same pull expressed in a [-100, 100] frame lands in the same place
    b = Bounds.cube(-100.0, 100.0, 2)
    pts = SobolEngine(2).draw(2048)
    spec = GaussianWeightSpec(mean=[-50.0, -50.0], stddev=[66.0, 66.0])
    out = apply_gaussian_weights(pts, spec, b, RngStream(4))
    assert np.all(out.mean(0) < 0.48)


def test_weights_validation():
    with pytest.raises(ConfigurationError):
        GaussianWeightSpec(mean=[0.5], stddev=[0.0])
    with pytest.raises(ConfigurationError):
        GaussianWeightSpec(mean=[np.nan], stddev=[1.0])


# ---------------------------------------------------------------------------
# ellipsoid construction and allocation
# ---------------------------------------------------------------------------

def test_build_ellipsoids_single_cluster():
    pts = np.random.default_rng(5).random((512, 3))
    models = build_ellipsoids(pts, 1, RngStream(5))
    assert len(models) == 1
    assert np.abs(models[0].center - pts.mean(0)).max() < 1e-6
    assert models[0].weight_count == 512
    centered = pts - pts.mean(0)
    top_var = np.linalg.eigvalsh(centered.T @ centered / 512).max()
    assert models[0].semi_axes.max() == pytest.approx(math.sqrt(top_var + 1e-12), rel=1e-6)


def test_build_ellipsoids_two_blobs():
    rng = np.random.default_rng(6)
    blob = lambda c: c + 0.03 * rng.standard_normal((300, 2))
    pts = np.vstack([blob(np.array([0.25, 0.25])), blob(np.array([0.75, 0.75]))])
    models = build_ellipsoids(pts, 2, RngStream(6))
    centers = np.sort([m.center[0] for m in models])
    assert np.abs(centers - [0.25, 0.75]).max() < 0.05
    for m in models:
        assert m.semi_axes.max() / m.semi_axes.min() < 1.5  # near-isotropic blobs


def test_build_ellipsoids_tiny_cluster_floor():
    pts = np.vstack([np.zeros((1, 4)), np.full((63, 4), 0.9)])
    models = build_ellipsoids(pts, 2, RngStream(7), epsilon=1e-12)
    singleton = min(models, key=lambda m: m.weight_count)
    assert singleton.weight_count == 1
    assert np.allclose(singleton.semi_axes, math.sqrt(1e-12))
    assert np.array_equal(singleton.rotation, np.eye(4))


def test_allocate_exact_proportions():
    assert allocate_samples([600, 400], 100).tolist() == [60, 40]


def test_allocate_rounding_repair():
    assert allocate_samples([3, 3, 3], 10).tolist() == [4, 3, 3]


def test_allocate_zero_is_allowed():
    assert allocate_samples([1, 999], 1).tolist() == [0, 1]


def test_allocate_conservation_random():
    rng = np.random.default_rng(8)
    for _ in range(500):
        k = int(rng.integers(1, 12))
        counts = rng.integers(1, 10_000, size=k)
        n = int(rng.integers(1, 5_000))
        alloc = allocate_samples(counts, n)
        assert alloc.sum() == n
        assert np.all(alloc >= 0)


# ---------------------------------------------------------------------------
# ellipsoid sampling
# ---------------------------------------------------------------------------

def _isotropic_model(dims, center=None, axis=1.0):
    return EllipsoidModel(
        center=np.full(dims, 0.5) if center is None else np.asarray(center, dtype=float),
        rotation=np.eye(dims),
        semi_axes=np.full(dims, axis),
        weight_count=1,
    )


def test_sample_ellipsoid_unit_ball_containment():
    model = _isotropic_model(3)
    pts = sample_ellipsoid(model, 2000, 1.0, SobolEngine(1), RngStream(9))
    r = np.linalg.norm(pts - 0.5, axis=1)
    assert r.max() <= 1.0 + 1e-9


def test_sample_ellipsoid_radial_law():
    # with lambda=1 and unit axes in 2D, (r/lambda)^2 is uniform on (0,1)
    model = _isotropic_model(2)
    pts = sample_ellipsoid(model, 4096, 1.0, SobolEngine(1), RngStream(10))
    r2 = np.sum((pts - 0.5) ** 2, axis=1)
    assert kstest(r2, "uniform").pvalue > 0.01


def test_sample_ellipsoid_axis_ratio():
    model = EllipsoidModel(
        center=np.zeros(2), rotation=np.eye(2), semi_axes=np.array([2.0, 1.0]), weight_count=1
    )
    pts = sample_ellipsoid(model, 8192, 1.0, SobolEngine(1), RngStream(11))
    var = pts.var(axis=0)
    assert var[0] / var[1] == pytest.approx(4.0, rel=0.2)


def test_sample_ellipsoid_rotation_applied():
    theta = math.pi / 4.0
    rot = np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]])
    model = EllipsoidModel(
        center=np.zeros(2), rotation=rot, semi_axes=np.array([3.0, 0.3]), weight_count=1
    )
    pts = sample_ellipsoid(model, 8192, 1.0, SobolEngine(1), RngStream(12))
    cov = np.cov(pts.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    main = eigvecs[:, np.argmax(eigvals)]
    # principal direction of the cloud matches the model's first axis
    assert abs(abs(main @ rot[0]) - 1.0) < 0.05


# ---------------------------------------------------------------------------
# rejection and void filling
# ---------------------------------------------------------------------------

def test_reject_and_fill_noop_preserves_order():
    pts = np.random.default_rng(13).random((50, 3))
    out, filled = reject_and_fill(pts, 50, RngStream(13))
    assert filled == 0
    assert np.array_equal(out, pts)


def test_reject_and_fill_drops_invalid():
    good = np.random.default_rng(14).random((30, 2))
    bad = good + 5.0
    out, filled = reject_and_fill(np.vstack([good, bad]), 30, RngStream(14))
    assert filled == 0
    assert np.array_equal(out, good)


def test_reject_and_fill_single_center():
    pts = np.tile([0.4, 0.6], (10, 1))
    out, filled = reject_and_fill(pts, 15, RngStream(15))
    assert out.shape == (15, 2)
    assert filled == 5
    # fill points cluster near the lone occupied location within the clamp
    assert np.abs(out[10:] - [0.4, 0.6]).max() < 5 * 0.01
    assert np.all((out >= 0.0) & (out <= 1.0))


def test_reject_and_fill_corner_ellipsoid():
    model = _isotropic_model(2, center=[0.0, 0.0], axis=1.0)
    cand = sample_ellipsoid(model, 400, 2.0, SobolEngine(1), RngStream(16))
    valid = np.all((cand >= 0) & (cand <= 1), axis=1)
    assert 0 < valid.sum() < 400  # the corner placement must reject something
    out, filled = reject_and_fill(cand, 300, RngStream(16))
    assert out.shape == (300, 2)
    assert np.all((out >= 0.0) & (out <= 1.0))
    assert filled == 300 - min(300, valid.sum())


def test_reject_and_fill_zero_valid_uses_centers():
    cand = np.full((20, 2), 7.7)
    centers = np.array([[0.2, 0.2], [0.8, 0.8]])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out, filled = reject_and_fill(cand, 40, RngStream(17), fallback_centers=centers)
    assert out.shape == (40, 2)
    assert filled == 40
    assert np.all((out >= 0.0) & (out <= 1.0))


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------

def test_hds_generate_deterministic():
    a = hds_generate(HdsConfig(n_samples=1000, dims=2, seed=12345))
    b = hds_generate(HdsConfig(n_samples=1000, dims=2, seed=12345))
    assert np.array_equal(a, b)


def test_hds_generate_containment_high_dim():
    b = Bounds.cube(-100.0, 100.0, 100)
    pts = hds_generate(HdsConfig(n_samples=1000, dims=100, bounds=b, seed=2))
    assert pts.shape == (1000, 100)
    assert pts.min() >= -100.0 and pts.max() <= 100.0


@pytest.mark.parametrize("n", [1, 2, 64])
@pytest.mark.parametrize("dims", [1, 2, 10])
def test_hds_generate_exact_counts(n, dims):
    pts = hds_generate(HdsConfig(n_samples=n, dims=dims, seed=n + dims))
    assert pts.shape == (n, dims)
    assert np.all((pts >= 0.0) & (pts <= 1.0))


def test_hds_generate_normalize_roundtrip():
    b = Bounds.cube(-5.0, 3.0, 4)
    unit = hds_generate(HdsConfig(n_samples=200, dims=4, bounds=b, seed=6, normalize=True))
    scaled = hds_generate(HdsConfig(n_samples=200, dims=4, bounds=b, seed=6, normalize=False))
    assert np.abs(denormalize(unit, b) - scaled).max() <= 1e-12


def test_hds_generate_k_override_skips_ahc():
    pts, details = hds_generate(
        HdsConfig(n_samples=300, dims=2, seed=4, n_ellipsoids=3), return_details=True
    )
    assert details.n_ellipsoids == 3
    assert details.merges == []
    assert len(details.models) == 3
    assert pts.shape == (300, 2)


def test_hds_generate_allocation_conserved():
    _, details = hds_generate(HdsConfig(n_samples=777, dims=3, seed=8), return_details=True)
    assert sum(m.allocation for m in details.models) == 777


def test_hds_generate_weighted_shifts_cloud():
    spec = GaussianWeightSpec(mean=[0.25, 0.25], stddev=[0.33, 0.33])
    pts = hds_generate(
        HdsConfig(n_samples=2000, dims=2, seed=9, weights=spec, normalize=True)
    )
    assert np.all(pts.mean(0) < 0.47)
    assert np.all(pts.mean(0) > 0.2)


def test_hds_generate_high_dim_marginals_bell_shaped():
    pts100 = hds_generate(HdsConfig(n_samples=4000, dims=100, seed=10, normalize=True))
    pts2 = hds_generate(HdsConfig(n_samples=4000, dims=2, seed=10, normalize=True))
    k100 = kurtosis(pts100, axis=0).mean()
    k2 = kurtosis(pts2, axis=0).mean()
    assert k100 > k2  # less platykurtic than the flat low-dimensional cloud


def test_hds_generate_rejects_bad_config():
    with pytest.raises(ConfigurationError):
        HdsConfig(n_samples=0, dims=3)
    with pytest.raises(ConfigurationError):
        HdsConfig(n_samples=10, dims=0)
    with pytest.raises(ConfigurationError):
        HdsConfig(n_samples=10, dims=3, bounds=Bounds.unit(2))


# ---------------------------------------------------------------------------
# export formats
# ---------------------------------------------------------------------------

def test_sequence_csv_format(tmp_path):
    pts = np.array([[0.25, 0.5], [0.75, 1.0]])
    path = tmp_path / "seq.csv"
    with open(path, "w") as fh:
        sequence_to_csv(pts, fh)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "x0,x1"
    assert [float(v) for v in lines[1].split(",")] == [0.25, 0.5]


def test_sequence_json_format(tmp_path):
    import json

    pts = np.array([[0.25, 0.5]])
    path = tmp_path / "seq.json"
    with open(path, "w") as fh:
        sequence_to_json(pts, "unit", fh)
    payload = json.loads(path.read_text())
    assert payload == {"dims": 2, "n": 1, "frame": "unit", "samples": [[0.25, 0.5]]}
    with pytest.raises(ConfigurationError):
        sequence_to_json(pts, "weird", fh)
