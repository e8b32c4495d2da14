"""MiniBatch k-means and Ward-linkage agglomerative clustering with a
largest-gap dendrogram cutoff."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .rng import RngStream

DEFAULT_K_INIT = 100
DEFAULT_K_MAX = 10
_SEED_SUBSAMPLE = 2048


@dataclass
class KMeansModel:
    centroids: np.ndarray
    labels: np.ndarray
    counts: np.ndarray

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass
class LinkageMerge:
    left: int
    right: int
    distance: float
    size: int


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances, points x centers."""
    p2 = np.sum(points**2, axis=1)[:, None]
    c2 = np.sum(centers**2, axis=1)[None, :]
    return np.maximum(p2 + c2 - 2.0 * points @ centers.T, 0.0)


def _kmeans_pp(points: np.ndarray, k: int, rng: RngStream) -> np.ndarray:
    """k-means++ seeding on a seeded subsample of the data."""
    n = points.shape[0]
    if n > max(_SEED_SUBSAMPLE, k):
        idx = rng.permutation(n)[: max(_SEED_SUBSAMPLE, k)]
        pool = points[idx]
    else:
        pool = points
    m = pool.shape[0]
    centers = np.empty((k, points.shape[1]))
    first = int(rng.integers(m))
    centers[0] = pool[first]
    d2 = _sq_dists(pool, centers[:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # remaining mass is zero (duplicates); take any unchosen point
            pick = int(rng.integers(m))
        else:
            pick = int(rng.choice(m, 1, p=d2 / total)[0])
        centers[j] = pool[pick]
        d2 = np.minimum(d2, _sq_dists(pool, centers[j : j + 1])[:, 0])
    return centers


def minibatch_kmeans(
    points: np.ndarray,
    k: int,
    rng: RngStream,
    batch_size: int | None = None,
    max_batches: int = 100,
) -> KMeansModel:
    """Sculley-style mini-batch k-means, deterministic for a given stream.

    After the batch phase one full pass refreshes each center to its exact
    membership mean and assigns the returned labels; empty clusters are
    reseeded to the point currently farthest from its own centroid.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    if k > n:
        raise ConfigurationError(f"k={k} exceeds the number of points ({n})")
    if batch_size is None:
        batch_size = min(1024, n)

    centers = _kmeans_pp(points, k, rng)
    seen = np.zeros(k)
    for _ in range(max_batches):
        batch = points[rng.integers(n, size=batch_size)]
        assign = np.argmin(_sq_dists(batch, centers), axis=1)
        counts = np.bincount(assign, minlength=k).astype(np.float64)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, batch)
        hit = counts > 0
        seen[hit] += counts[hit]
        # per-center learning rate 1/seen pulls the center toward the batch mean
        eta = np.zeros(k)
        eta[hit] = counts[hit] / seen[hit]
        means = np.zeros_like(centers)
        means[hit] = sums[hit] / counts[hit, None]
        centers[hit] = (1.0 - eta[hit, None]) * centers[hit] + eta[hit, None] * means[hit]

    # final full pass: refresh centers from their full membership, then assign
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    counts = np.bincount(labels, minlength=k)
    sums = np.zeros_like(centers)
    np.add.at(sums, labels, points)
    nonempty = counts > 0
    centers[nonempty] = sums[nonempty] / counts[nonempty, None]
    labels = np.argmin(_sq_dists(points, centers), axis=1)
    for _ in range(k):
        counts = np.bincount(labels, minlength=k)
        empties = np.flatnonzero(counts == 0)
        if empties.size == 0:
            break
        point_d = _sq_dists(points, centers)[np.arange(n), labels]
        for j in empties:
            worst = int(np.argmax(point_d))
            centers[j] = points[worst]
            point_d[worst] = -1.0
        labels = np.argmin(_sq_dists(points, centers), axis=1)
    counts = np.bincount(labels, minlength=k)
    return KMeansModel(centroids=centers, labels=labels, counts=counts)


def initial_cluster_count(dims: int, default_k: int = DEFAULT_K_INIT) -> int:
    """Pilot centroid count: the default up to 100D, scaled down
    proportionally above that with a floor of 10."""
    if dims < 1:
        raise ConfigurationError("dims must be >= 1")
    if dims <= 100:
        return default_k
    return max(10, round(default_k * 100 / dims))


def ahc_linkage(centroids: np.ndarray) -> list[LinkageMerge]:
    """Ward-linkage merge sequence over the centroids (Lance-Williams).

    Node ids follow the usual convention: leaves are 0..K-1 and the cluster
    created by merge i is K+i. Fewer than two centroids merge nothing.
    """
    centroids = np.atleast_2d(np.asarray(centroids, dtype=np.float64))
    k = centroids.shape[0]
    if k < 2:
        return []
    d = np.sqrt(_sq_dists(centroids, centroids))
    np.fill_diagonal(d, np.inf)
    sizes = {i: 1 for i in range(k)}
    node_of = list(range(k))
    active = list(range(k))
    merges: list[LinkageMerge] = []
    next_id = k
    for _ in range(k - 1):
        sub = d[np.ix_(active, active)]
        flat = int(np.argmin(sub))
        ai, aj = divmod(flat, len(active))
        if ai > aj:
            ai, aj = aj, ai
        i, j = active[ai], active[aj]
        dist = d[i, j]
        ni, nj = sizes[node_of[i]], sizes[node_of[j]]
        left, right = sorted((node_of[i], node_of[j]))
        merges.append(LinkageMerge(left=left, right=right, distance=float(dist), size=ni + nj))
        # Lance-Williams Ward update against every other active cluster
        for m in active:
            if m in (i, j):
                continue
            nm = sizes[node_of[m]]
            dm = math.sqrt(
                max(
                    ((ni + nm) * d[i, m] ** 2 + (nj + nm) * d[j, m] ** 2 - nm * dist**2)
                    / (ni + nj + nm),
                    0.0,
                )
            )
            d[i, m] = d[m, i] = dm
        node_of[i] = next_id
        sizes[next_id] = ni + nj
        next_id += 1
        active.remove(j)
    return merges


def select_cluster_count(merges: list[LinkageMerge], k_max: int = DEFAULT_K_MAX) -> int:
    """Cluster count at the largest gap between consecutive merge distances.

    Only the final k_max merges are searched, so the result is capped at
    k_max; ties (including the no-gap case of equal distances) resolve
    toward the smallest count.
    """
    m = len(merges)
    if m == 0:
        return 1
    dist = [mg.distance for mg in merges]
    if m == 1:
        return 2 if dist[0] > 0.0 else 1
    best_gap = 0.0
    best_k = 1
    lo = max(2, m - k_max + 1)
    for i in range(lo, m + 1):  # 1-indexed merge positions
        gap = dist[i - 1] - dist[i - 2]
        k = m - i + 2
        if gap > 0.0 and gap >= best_gap:
            best_gap = gap
            best_k = min(k, k_max)
    return best_k
