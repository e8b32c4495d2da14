"""L2-Star (Warnock) and Centered-L2 (Hickernell) discrepancy metrics.

Both are closed forms with an O(N^2 D) pairwise term, evaluated here in
row blocks. Per-pair products stay in float64 (they cannot underflow at
the dimensions supported); block sums accumulate in extended precision so
the D=100 near-unity products do not lose the small terms.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

_BLOCK = 256


@dataclass
class DiscrepancyReport:
    metric: str  # "L2Star" or "CenteredL2"
    value: float
    n: int
    dims: int

    def to_json(self) -> str:
        return json.dumps(
            {"metric": self.metric, "value": self.value, "n": self.n, "dims": self.dims}
        )


def _check_unit(samples: np.ndarray) -> np.ndarray:
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] < 1 or samples.size == 0:
        raise ConfigurationError("discrepancy needs a nonempty sample set")
    if samples.min() < 0.0 or samples.max() > 1.0:
        raise ConfigurationError("samples must lie in the unit cube")
    return samples


def l2_star(samples: np.ndarray) -> float:
    """Warnock L2-star discrepancy:
    T^2 = 3^-D - (2/N) sum_i prod_d (1-x_id^2)/2
        + (1/N^2) sum_ij prod_d (1 - max(x_id, x_jd)).
    """
    x = _check_unit(samples)
    n, d = x.shape
    single = np.longdouble(0)
    for i0 in range(0, n, _BLOCK):
        single += np.sum(np.prod((1.0 - x[i0 : i0 + _BLOCK] ** 2) / 2.0, axis=1))
    pair = np.longdouble(0)
    for i0 in range(0, n, _BLOCK):
        xi = x[i0 : i0 + _BLOCK]
        pair += np.sum(np.prod(1.0 - np.maximum(xi[:, None, :], x[None, :, :]), axis=2))
    t2 = np.longdouble(3.0) ** (-d) - (2.0 / n) * single + pair / (np.longdouble(n) ** 2)
    return float(np.sqrt(max(t2, np.longdouble(0))))


def centered_l2(samples: np.ndarray) -> float:
    """Hickernell centered L2 discrepancy (anchor at the cube center):
    C^2 = (13/12)^D - (2/N) sum_i prod_d (1 + |u_id|/2 - u_id^2/2)
        + (1/N^2) sum_ij prod_d (1 + |u_id|/2 + |u_jd|/2 - |x_id - x_jd|/2)
    with u = x - 1/2. Symmetric under per-coordinate reflection x -> 1-x.
    """
    x = _check_unit(samples)
    n, d = x.shape
    u = np.abs(x - 0.5)
    single = np.longdouble(0)
    for i0 in range(0, n, _BLOCK):
        ui = u[i0 : i0 + _BLOCK]
        single += np.sum(np.prod(1.0 + 0.5 * ui - 0.5 * ui**2, axis=1))
    pair = np.longdouble(0)
    for i0 in range(0, n, _BLOCK):
        ui, xi = u[i0 : i0 + _BLOCK], x[i0 : i0 + _BLOCK]
        f = (
            1.0
            + 0.5 * ui[:, None, :]
            + 0.5 * u[None, :, :]
            - 0.5 * np.abs(xi[:, None, :] - x[None, :, :])
        )
        pair += np.sum(np.prod(f, axis=2))
    c2 = np.longdouble(13.0 / 12.0) ** d - (2.0 / n) * single + pair / (np.longdouble(n) ** 2)
    return float(np.sqrt(max(c2, np.longdouble(0))))


_METRICS = {"L2Star": l2_star, "CenteredL2": centered_l2}


def report(samples: np.ndarray, metric: str) -> DiscrepancyReport:
    """Evaluate one metric by name and wrap the result."""
    if metric not in _METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}; choose from {sorted(_METRICS)}")
    samples = np.atleast_2d(np.asarray(samples))
    return DiscrepancyReport(
        metric=metric,
        value=_METRICS[metric](samples),
        n=samples.shape[0],
        dims=samples.shape[1],
    )
