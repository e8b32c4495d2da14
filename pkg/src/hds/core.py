"""The hyperellipsoid density sampling pipeline.

Generation runs entirely in the unit cube: a Sobol pilot set is clustered,
each cluster becomes a PCA-oriented ellipsoid, samples are drawn uniformly
inside the scaled ellipsoids, and out-of-bounds draws are rejected with
sparse-region void filling making up any deficit. The result is mapped back
to the caller's bounds unless a normalized sequence was requested.
"""

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .clustering import (
    LinkageMerge,
    ahc_linkage,
    initial_cluster_count,
    minibatch_kmeans,
    select_cluster_count,
)
from .errors import ConfigurationError
from .numerics import (
    CONFIDENCE_ALPHA,
    marsaglia_unit_directions,
    pca_fit,
    radial_scale_factor,
    truncated_normal_rows,
)
from .rng import RngStream
from .sobol import SobolEngine, initial_sample_count

OVERSAMPLE_FACTOR = 1.5
OVERSAMPLE_PAD = 16
VOID_K_NEIGHBORS = 8
VOID_SPARSE_FRACTION = 0.10
VOID_STDDEV_CLAMP = (0.01, 0.3)
_BRUTE_FORCE_LIMIT = 20000


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

class Bounds:
    """Per-dimension box limits with strictly positive widths."""

    def __init__(self, lower, upper):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ConfigurationError("lower and upper must be equal-length vectors")
        if self.lower.size < 1:
            raise ConfigurationError("bounds need at least one dimension")
        if not np.all(np.isfinite(self.lower)) or not np.all(np.isfinite(self.upper)):
            raise ConfigurationError("bounds must be finite")
        if not np.all(self.upper > self.lower):
            raise ConfigurationError("upper must exceed lower in every dimension")

    @classmethod
    def cube(cls, lo: float, hi: float, dims: int) -> "Bounds":
        return cls(np.full(dims, lo), np.full(dims, hi))

    @classmethod
    def unit(cls, dims: int) -> "Bounds":
        return cls.cube(0.0, 1.0, dims)

    @property
    def dims(self) -> int:
        return self.lower.size

    @property
    def range(self) -> np.ndarray:
        return self.upper - self.lower


@dataclass
class GaussianWeightSpec:
    """Optional pull of the pilot samples toward a region of interest,
    expressed in the original-bounds frame."""

    mean: np.ndarray
    stddev: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.stddev = np.atleast_1d(np.asarray(self.stddev, dtype=np.float64))
        if not np.all(np.isfinite(self.mean)):
            raise ConfigurationError("weight mean must be finite")
        if np.any(self.stddev <= 0.0):
            raise ConfigurationError("weight stddev must be positive")


@dataclass
class EllipsoidModel:
    """One cluster's sampling geometry in the unit-cube frame."""

    center: np.ndarray
    rotation: np.ndarray  # rows are principal axes
    semi_axes: np.ndarray
    weight_count: int
    allocation: int = 0


@dataclass
class HdsConfig:
    n_samples: int
    dims: int
    bounds: Bounds | None = None
    seed: int = 0
    k_init: int | None = None
    n_ellipsoids: int | None = None
    weights: GaussianWeightSpec | None = None
    normalize: bool = False
    cap_exponent: int = 15
    epsilon: float = 1e-12
    alpha: float = CONFIDENCE_ALPHA

    def __post_init__(self):
        if self.n_samples < 1:
            raise ConfigurationError("n_samples must be >= 1")
        if self.dims < 1:
            raise ConfigurationError("dims must be >= 1")
        if self.bounds is None:
            self.bounds = Bounds.unit(self.dims)
        if self.bounds.dims != self.dims:
            raise ConfigurationError("bounds dimensionality does not match dims")
        if self.epsilon <= 0.0:
            raise ConfigurationError("epsilon must be positive")
        if self.weights is not None and (
            self.weights.mean.size != self.dims or self.weights.stddev.size != self.dims
        ):
            raise ConfigurationError("weight vectors must have length dims")


@dataclass
class HdsDetails:
    """Diagnostics from one generation run."""

    k_init: int
    n_ellipsoids: int
    merges: list[LinkageMerge] = field(default_factory=list)
    models: list[EllipsoidModel] = field(default_factory=list)
    n_initial: int = 0
    n_rejected: int = 0
    n_void_filled: int = 0


# ---------------------------------------------------------------------------
# frame changes
# ---------------------------------------------------------------------------

def normalize(points: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map points from the bounds frame onto the unit cube."""
    return (np.asarray(points, dtype=np.float64) - bounds.lower) / bounds.range


def denormalize(points: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Map unit-cube points back to the bounds frame (Hadamard scale + shift)."""
    return np.asarray(points, dtype=np.float64) * bounds.range + bounds.lower


# ---------------------------------------------------------------------------
# pipeline stages
# ---------------------------------------------------------------------------

def apply_gaussian_weights(
    initial: np.ndarray, spec: GaussianWeightSpec, bounds: Bounds, rng: RngStream
) -> np.ndarray:
    """Resample the pilot set with probability proportional to a separable
    Gaussian weight around the (bounds-frame) mean.

    Systematic resampling with replacement keeps the set size unchanged. A
    numerically all-zero weight vector falls back to the unweighted set.
    """
    initial = np.asarray(initial, dtype=np.float64)
    mean_u = (spec.mean - bounds.lower) / bounds.range
    std_u = spec.stddev / bounds.range
    z = (initial - mean_u) / std_u
    logw = -0.5 * np.sum(z * z, axis=1)
    logw -= logw.max()
    w = np.exp(logw)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        warnings.warn("all Gaussian weights underflowed; keeping the unweighted set")
        return initial.copy()
    w /= total
    n = initial.shape[0]
    positions = (rng.uniform() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(w), positions)
    return initial[np.minimum(idx, n - 1)]


def build_ellipsoids(
    initial: np.ndarray, k: int, rng: RngStream, epsilon: float = 1e-12
) -> list[EllipsoidModel]:
    """Final k-means fit plus per-cluster PCA geometry.

    Clusters with fewer than two members cannot orient an ellipsoid; they
    get the identity rotation with all axes at the epsilon floor.
    """
    initial = np.asarray(initial, dtype=np.float64)
    if k > initial.shape[0]:
        raise ConfigurationError("more ellipsoids than pilot samples")
    dims = initial.shape[1]
    model = minibatch_kmeans(initial, k, rng)
    out = []
    for j in range(model.k):
        members = initial[model.labels == j]
        if members.shape[0] < 2:
            rotation = np.eye(dims)
            semi_axes = np.full(dims, math.sqrt(epsilon))
        else:
            pca = pca_fit(members, epsilon)
            rotation = pca.components
            semi_axes = pca.semi_axes
        out.append(
            EllipsoidModel(
                center=model.centroids[j].copy(),
                rotation=rotation,
                semi_axes=semi_axes,
                weight_count=int(model.counts[j]),
            )
        )
    return out


def allocate_samples(counts, n_total: int) -> np.ndarray:
    """Proportional rounding of the target count over clusters, with the sum
    repaired one sample at a time against the largest cluster."""
    counts = np.atleast_1d(np.asarray(counts, dtype=np.float64))
    if counts.sum() < 1 or np.any(counts < 0):
        raise ConfigurationError("cluster counts must be nonnegative with positive sum")
    alloc = np.rint(n_total * counts / counts.sum()).astype(np.int64)
    order = np.lexsort((np.arange(counts.size), -counts))  # largest count, lowest index first
    while alloc.sum() < n_total:
        alloc[order[0]] += 1
    while alloc.sum() > n_total:
        for j in order:
            if alloc[j] > 0:
                alloc[j] -= 1
                break
    return alloc


def sample_ellipsoid(
    model: EllipsoidModel,
    count: int,
    radial_scale: float,
    sobol_radial: SobolEngine,
    rng: RngStream,
) -> np.ndarray:
    """Uniform draws inside the scaled ellipsoid (unit-cube frame, unclipped).

    Directions come from the polar method; radii use a shared 1-D Sobol
    block through q**(1/D), which makes the radial density uniform over the
    hypervolume; the affine map applies axes, rotation, and center.
    """
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    dims = model.center.size
    dirs = marsaglia_unit_directions(count, dims, rng)
    q = sobol_radial.draw(count)[:, 0]
    radii = q ** (1.0 / dims) * radial_scale
    scaled = dirs * radii[:, None] * model.semi_axes[None, :]
    return scaled @ model.rotation + model.center


_TREE_MAX_DIMS = 15


def _mean_knn_distance(points: np.ndarray, k_neighbors: int) -> np.ndarray:
    """Mean distance from each point to its k nearest neighbors (exact).

    Blocked brute force by default; a KD-tree takes over for large
    low-dimensional sets, where space partitioning actually prunes. Both
    routes are exact, so the switch only affects speed."""
    n, dims = points.shape
    k = min(k_neighbors, n - 1)
    if k < 1:
        return np.zeros(n)
    if n > _BRUTE_FORCE_LIMIT and dims <= _TREE_MAX_DIMS:
        dists, _ = cKDTree(points).query(points, k=k + 1, workers=-1)
        return dists[:, 1:].mean(axis=1)
    sq = np.sum(points**2, axis=1)
    out = np.empty(n)
    for start in range(0, n, 1024):
        block = points[start : start + 1024]
        d2 = np.maximum(
            np.sum(block**2, 1)[:, None] + sq[None, :] - 2.0 * block @ points.T, 0.0
        )
        rows = np.arange(block.shape[0])
        d2[rows, start + rows] = np.inf
        part = np.partition(d2, k - 1, axis=1)[:, :k]
        out[start : start + 1024] = np.sqrt(part).mean(axis=1)
    return out


def reject_and_fill(
    candidates: np.ndarray,
    n_target: int,
    rng: RngStream,
    k_neighbors: int = VOID_K_NEIGHBORS,
    fallback_centers: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Keep in-bounds candidates (order preserved) and fill any deficit with
    truncated normals centered on the sparsest kept samples.

    The mean k-nearest-neighbor distance ranks sparsity; the sparsest tenth
    serve round-robin as fill centers, each drawing with a per-dimension
    stddev equal to its own mean neighbor distance clamped to [0.01, 0.3].
    Fill points are in-bounds by construction, so one pass reaches the
    target. Returns (points, number of void-filled samples).
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.size == 0:
        candidates = candidates.reshape(0, 0 if fallback_centers is None else fallback_centers.shape[1])
    valid_mask = np.all((candidates >= 0.0) & (candidates <= 1.0), axis=1)
    kept = candidates[valid_mask][:n_target]

    if kept.shape[0] == n_target:
        return kept, 0

    if kept.shape[0] == 0:
        if fallback_centers is not None and len(fallback_centers) > 0:
            warnings.warn("no valid ellipsoid samples; filling from ellipsoid centers")
            idx = np.arange(n_target) % len(fallback_centers)
            centers = np.clip(fallback_centers[idx], 0.0, 1.0)
            stds = np.full(n_target, VOID_STDDEV_CLAMP[1])
            return truncated_normal_rows(centers, stds, rng), n_target
        warnings.warn("degenerate generation: no candidates and no centers; using Sobol points")
        dims = candidates.shape[1]
        return SobolEngine(dims).draw(n_target), n_target

    filled = 0
    while kept.shape[0] < n_target:
        deficit = n_target - kept.shape[0]
        base = kept
        if kept.shape[0] > _BRUTE_FORCE_LIMIT:
            # all-pairs distances at this size are prohibitive in any exact
            # scheme; rank sparsity on a seeded representative subsample
            base = kept[rng.permutation(kept.shape[0])[:_BRUTE_FORCE_LIMIT]]
        mean_d = _mean_knn_distance(base, k_neighbors)
        n_centers = max(1, math.ceil(VOID_SPARSE_FRACTION * base.shape[0]))
        sparsest = np.argsort(-mean_d, kind="stable")[:n_centers]
        picks = sparsest[np.arange(deficit) % n_centers]
        stds = np.clip(mean_d[picks], *VOID_STDDEV_CLAMP)
        kept = np.vstack([kept, truncated_normal_rows(base[picks], stds, rng)])
        filled += deficit
    return kept, filled


def hds_generate(config: HdsConfig, return_details: bool = False):
    """Run the full pipeline and return exactly n_samples x dims points.

    Stages: Sobol pilot set, optional Gaussian reweighting, pilot k-means,
    dendrogram cutoff for the ellipsoid count (skipped when an override is
    given), final k-means, per-cluster PCA, proportional allocation,
    in-ellipsoid sampling, rejection with void filling, and denormalization
    unless ``normalize`` asks for the unit-cube frame. Deterministic per seed.
    """
    bounds = config.bounds
    dims = config.dims
    rng = RngStream(config.seed)

    n_init = initial_sample_count(dims, config.cap_exponent)
    initial = SobolEngine(dims).draw(n_init)
    if config.weights is not None:
        initial = apply_gaussian_weights(
            initial, config.weights, bounds, rng.substream("weights")
        )

    merges: list[LinkageMerge] = []
    if config.n_ellipsoids is not None:
        if config.n_ellipsoids < 1:
            raise ConfigurationError("n_ellipsoids override must be >= 1")
        k_init = config.k_init or initial_cluster_count(dims)
        k = min(config.n_ellipsoids, n_init)
    else:
        k_init = min(config.k_init or initial_cluster_count(dims), n_init)
        pilot = minibatch_kmeans(initial, k_init, rng.substream("kmeans-init"))
        merges = ahc_linkage(pilot.centroids)
        k = select_cluster_count(merges)

    models = build_ellipsoids(initial, k, rng.substream("kmeans-final"), config.epsilon)
    alloc = allocate_samples([m.weight_count for m in models], config.n_samples)
    for model, a in zip(models, alloc):
        model.allocation = int(a)

    lam = radial_scale_factor(dims)
    radial = SobolEngine(1)
    pooled = []
    n_rejected = 0
    for j, model in enumerate(models):
        if model.allocation == 0:
            continue
        n_cand = math.ceil(OVERSAMPLE_FACTOR * model.allocation) + OVERSAMPLE_PAD
        cand = sample_ellipsoid(model, n_cand, lam, radial, rng.substream(f"ellipsoid-{j}"))
        ok = np.all((cand >= 0.0) & (cand <= 1.0), axis=1)
        n_rejected += int(n_cand - ok.sum())
        pooled.append(cand[ok][: model.allocation])
    pool = np.vstack(pooled) if pooled else np.empty((0, dims))

    centers = np.asarray([m.center for m in models])
    points, n_void = reject_and_fill(
        pool, config.n_samples, rng.substream("fill"), fallback_centers=centers
    )

    if not config.normalize:
        points = denormalize(points, bounds)
    if return_details:
        details = HdsDetails(
            k_init=k_init,
            n_ellipsoids=k,
            merges=merges,
            models=models,
            n_initial=n_init,
            n_rejected=n_rejected,
            n_void_filled=n_void,
        )
        return points, details
    return points


# ---------------------------------------------------------------------------
# sequence export
# ---------------------------------------------------------------------------

def sequence_to_csv(points: np.ndarray, fh) -> None:
    """CSV with header x0..x{D-1}, one row per sample."""
    points = np.atleast_2d(points)
    fh.write(",".join(f"x{d}" for d in range(points.shape[1])) + "\n")
    for row in points:
        fh.write(",".join(repr(float(v)) for v in row) + "\n")


def sequence_to_json(points: np.ndarray, frame: str, fh) -> None:
    """JSON object {dims, n, frame, samples}; frame is "unit" or "bounds"."""
    points = np.atleast_2d(points)
    if frame not in ("unit", "bounds"):
        raise ConfigurationError('frame must be "unit" or "bounds"')
    json.dump(
        {
            "dims": points.shape[1],
            "n": points.shape[0],
            "frame": frame,
            "samples": [[float(v) for v in row] for row in points],
        },
        fh,
    )
    fh.write("\n")
