"""Mathematical substrate: sphere directions, chi-squared quantiles, PCA,
and truncated normal draws."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigurationError
from .rng import RngStream

CONFIDENCE_ALPHA = 0.9999


# ---------------------------------------------------------------------------
# uniform directions on the unit sphere (Marsaglia polar method)
# ---------------------------------------------------------------------------

def _polar_normals(count: int, rng: RngStream) -> np.ndarray:
    """Standard normals generated pairwise by polar rejection."""
    out = np.empty(count)
    filled = 0
    while filled < count:
        # acceptance rate is pi/4; oversample enough pairs to finish in ~1 pass
        pairs = int((count - filled) / 1.5) + 16
        v = 2.0 * rng.uniform((pairs, 2)) - 1.0
        s = v[:, 0] ** 2 + v[:, 1] ** 2
        ok = (s > 0.0) & (s < 1.0)
        v, s = v[ok], s[ok]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        accepted = np.column_stack((v[:, 0] * factor, v[:, 1] * factor)).ravel()
        take = min(accepted.size, count - filled)
        out[filled : filled + take] = accepted[:take]
        filled += take
    return out


def marsaglia_unit_directions(count: int, dims: int, rng: RngStream) -> np.ndarray:
    """Rows are independent uniform directions on the unit sphere in R^dims."""
    if count < 1 or dims < 1:
        raise ConfigurationError("count and dims must be >= 1")
    dirs = _polar_normals(count * dims, rng).reshape(count, dims)
    norms = np.linalg.norm(dirs, axis=1)
    while np.any(norms < 1e-300):  # never divide a zero-norm draw; redraw it
        bad = norms < 1e-300
        dirs[bad] = _polar_normals(int(bad.sum()) * dims, rng).reshape(-1, dims)
        norms = np.linalg.norm(dirs, axis=1)
    return dirs / norms[:, None]


# ---------------------------------------------------------------------------
# chi-squared CDF / quantile via the regularized incomplete gamma function
# ---------------------------------------------------------------------------

_GAMMA_ITMAX = 500
_GAMMA_EPS = 1e-15


def _gamma_p_series(a: float, x: float) -> float:
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a: float, x: float) -> float:
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x): series for x < a+1, else
    1 minus the Lentz continued fraction for Q(a, x)."""
    if a <= 0.0:
        raise ConfigurationError("gamma shape must be positive")
    if x < 0.0:
        raise ConfigurationError("gamma argument must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


def chi2_cdf(x: float, dof: int) -> float:
    if dof < 1:
        raise ConfigurationError("dof must be >= 1")
    if x <= 0.0:
        return 0.0
    return regularized_gamma_p(dof / 2.0, x / 2.0)


def chi2_quantile(alpha: float, dof: int) -> float:
    """Inverse chi-squared CDF by bisection (200-step cap, 1e-12 bracket)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie strictly inside (0, 1)")
    if dof < 1:
        raise ConfigurationError("dof must be >= 1")
    lo = 0.0
    hi = dof + 10.0 * math.sqrt(2.0 * dof) + 10.0
    while chi2_cdf(hi, dof) < alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_cdf(mid, dof) < alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


def radial_scale_factor(dims: int) -> float:
    """Global ellipsoid radius: (0.55 - 0.01 ln D) * sqrt of the chi-squared
    critical value at the 0.9999 confidence level."""
    if dims < 1:
        raise ConfigurationError("dims must be >= 1")
    c_d = 0.55 - 0.01 * math.log(dims)
    if c_d <= 0.0:
        raise ConfigurationError("dimension-variant constant is nonpositive")
    return c_d * math.sqrt(chi2_quantile(CONFIDENCE_ALPHA, dims))


# ---------------------------------------------------------------------------
# PCA via cyclic Jacobi eigendecomposition of the covariance
# ---------------------------------------------------------------------------

@dataclass
class PcaResult:
    """Principal axes (rows of ``components``), their variances, the data
    mean, and the stabilized semi-axes sqrt(variance + epsilon)."""

    components: np.ndarray
    variances: np.ndarray
    mean: np.ndarray
    semi_axes: np.ndarray


def _jacobi_eigh(a: np.ndarray, max_sweeps: int = 100, tol: float = 1e-12):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns). Rotations whose
    off-diagonal entry is negligible against the current scale are skipped;
    convergence is off-diagonal Frobenius norm below tol * matrix norm.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(max(np.sum(a * a) - np.sum(a.diagonal() ** 2), 0.0))
        if off <= tol * scale:
            break
        thresh = off / (n * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= min(thresh, tol * scale):
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = 0.5 * (aqq - app) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return a.diagonal().copy(), v


def pca_fit(points: np.ndarray, epsilon: float = 1e-12) -> PcaResult:
    """Mean-centered covariance eigendecomposition with stabilized axes.

    Rank deficiency is not an error: zero-variance directions get the
    epsilon floor, so every semi-axis is at least sqrt(epsilon).
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[0] < 1:
        raise ConfigurationError("pca_fit needs at least one row")
    if epsilon <= 0.0:
        raise ConfigurationError("epsilon must be positive")
    mean = points.mean(axis=0)
    dims = points.shape[1]
    if points.shape[0] == 1:
        variances = np.zeros(dims)
        components = np.eye(dims)
    else:
        centered = points - mean
        cov = centered.T @ centered / points.shape[0]
        eigvals, eigvecs = _jacobi_eigh(cov)
        order = np.argsort(eigvals)[::-1]
        variances = np.maximum(eigvals[order], 0.0)
        components = eigvecs[:, order].T
        # deterministic sign: largest-magnitude entry of each axis is positive
        flip = np.sign(components[np.arange(dims), np.argmax(np.abs(components), axis=1)])
        flip[flip == 0] = 1.0
        components *= flip[:, None]
    return PcaResult(
        components=components,
        variances=variances,
        mean=mean,
        semi_axes=np.sqrt(variances + epsilon),
    )


# ---------------------------------------------------------------------------
# truncated normal draws inside the unit interval
# ---------------------------------------------------------------------------

def truncated_normal(
    center: np.ndarray,
    stddev: np.ndarray,
    count: int,
    rng: RngStream,
    lo: float = 0.0,
    hi: float = 1.0,
) -> np.ndarray:
    """``count`` independent draws of a normal conditioned to [lo, hi] per
    coordinate. Rejection sampling, with an inverse-CDF path for coordinates
    whose acceptance probability falls below 1%. Outputs are strictly
    inside the interval."""
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    stddev = np.broadcast_to(np.asarray(stddev, dtype=np.float64), center.shape).copy()
    if np.any(stddev <= 0.0):
        raise ConfigurationError("stddev must be positive")
    dims = center.shape[0]
    phi_lo = ndtr((lo - center) / stddev)
    phi_hi = ndtr((hi - center) / stddev)
    accept = phi_hi - phi_lo

    out = np.empty((count, dims))
    wide = accept >= 0.01
    if wide.any():
        c, s = center[wide], stddev[wide]
        vals = c + s * rng.normal((count, c.size))
        bad = (vals <= lo) | (vals >= hi)
        for _ in range(100):
            if not bad.any():
                break
            redraw = c + s * rng.normal((count, c.size))
            vals = np.where(bad, redraw, vals)
            bad = (vals <= lo) | (vals >= hi)
        if bad.any():  # starved rejection; rescue stragglers by inverse CDF
            p_lo = np.broadcast_to(phi_lo[wide], vals.shape)[bad]
            acc = np.broadcast_to(accept[wide], vals.shape)[bad]
            u = rng.uniform(int(bad.sum()))
            p = np.clip(p_lo + u * acc, 1e-15, 1.0 - 1e-15)
            vals[bad] = (
                np.broadcast_to(c, vals.shape)[bad]
                + np.broadcast_to(s, vals.shape)[bad] * ndtri(p)
            )
        out[:, wide] = vals

    narrow = ~wide
    if narrow.any():
        u = rng.uniform((count, int(narrow.sum())))
        p = phi_lo[narrow] + u * np.maximum(accept[narrow], 1e-300)
        p = np.clip(p, 1e-15, 1.0 - 1e-15)
        out[:, narrow] = center[narrow] + stddev[narrow] * ndtri(p)

    eps = 1e-12
    return np.clip(out, lo + eps, hi - eps)


def truncated_normal_draw(
    center: np.ndarray, stddev: np.ndarray, rng: RngStream, lo: float = 0.0, hi: float = 1.0
) -> np.ndarray:
    """Single point from the truncated normal (see ``truncated_normal``)."""
    return truncated_normal(center, stddev, 1, rng, lo, hi)[0]


def truncated_normal_rows(
    centers: np.ndarray,
    stddevs: np.ndarray,
    rng: RngStream,
    lo: float = 0.0,
    hi: float = 1.0,
) -> np.ndarray:
    """One truncated-normal point per row, each with its own center/stddev.

    Cell-wise rejection with an inverse-CDF rescue for cells the loop does
    not clear; same contract as ``truncated_normal`` otherwise."""
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    stds = np.asarray(stddevs, dtype=np.float64)
    if stds.ndim == 1:
        stds = stds[:, None]
    stds = np.broadcast_to(stds, centers.shape)
    if np.any(stds <= 0.0):
        raise ConfigurationError("stddev must be positive")
    vals = centers + stds * rng.normal(centers.shape)
    bad = (vals <= lo) | (vals >= hi)
    for _ in range(100):
        if not bad.any():
            break
        redraw = centers + stds * rng.normal(centers.shape)
        vals = np.where(bad, redraw, vals)
        bad = (vals <= lo) | (vals >= hi)
    if bad.any():
        phi_lo = ndtr((lo - centers) / stds)
        acc = ndtr((hi - centers) / stds) - phi_lo
        u = rng.uniform(int(bad.sum()))
        p = np.clip(phi_lo[bad] + u * np.maximum(acc[bad], 1e-300), 1e-15, 1.0 - 1e-15)
        vals[bad] = centers[bad] + stds[bad] * ndtri(p)
    eps = 1e-12
    return np.clip(vals, lo + eps, hi - eps)
