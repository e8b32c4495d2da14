"""Differential evolution (best1bin) with an injectable initial population."""

import json
from dataclasses import dataclass, field

import numpy as np

from .core import Bounds, HdsConfig, denormalize, hds_generate
from .errors import ConfigurationError
from .rng import RngStream
from .sobol import SobolEngine

METHODS = ("HDS", "Sobol")


@dataclass
class DeConfig:
    f_range: tuple[float, float] = (0.5, 1.0)
    cr: float = 0.7
    max_iter: int = 100
    tol: float = 0.0
    seed: int = 0

    def __post_init__(self):
        f_lo, f_hi = self.f_range
        if not 0.0 < f_lo <= f_hi <= 2.0:
            raise ConfigurationError("mutation range must satisfy 0 < lo <= hi <= 2")
        if not 0.0 <= self.cr <= 1.0:
            raise ConfigurationError("crossover probability must lie in [0, 1]")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")


@dataclass
class DeResult:
    x: np.ndarray
    fun: float
    evaluations: int
    best_history: list[float] = field(default_factory=list)


@dataclass
class TrialRecord:
    """One optimization run's bookkeeping."""

    method: str
    function: str
    dims: int
    n: int
    trial: int
    final_error: float
    wall_time: float
    evaluations: int

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"method must be one of {METHODS}")
        self.final_error = max(float(self.final_error), 0.0)

    def to_csv_row(self) -> str:
        return (
            f"{self.method},{self.function},{self.dims},{self.n},{self.trial},"
            f"{self.final_error!r},{self.wall_time!r},{self.evaluations}"
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "function": self.function,
                "dims": self.dims,
                "n": self.n,
                "trial": self.trial,
                "final_error": self.final_error,
                "wall_time": self.wall_time,
                "evaluations": self.evaluations,
            }
        )


CSV_HEADER = "method,function,dims,n,trial,final_error,wall_time,evaluations"


def record_from_csv_row(row: str) -> TrialRecord:
    parts = row.strip().split(",")
    if len(parts) != 8:
        raise ConfigurationError(f"malformed record row: {row!r}")
    return TrialRecord(
        method=parts[0],
        function=parts[1],
        dims=int(parts[2]),
        n=int(parts[3]),
        trial=int(parts[4]),
        final_error=float(parts[5]),
        wall_time=float(parts[6]),
        evaluations=int(parts[7]),
    )


def best1bin_mutant(best: np.ndarray, r1: np.ndarray, r2: np.ndarray, f: float) -> np.ndarray:
    """Mutation vector v = best + F * (r1 - r2)."""
    return best + f * (np.asarray(r1) - np.asarray(r2))


def _distinct_pairs(n: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """For each member i, two distinct partner indices, both != i."""
    i = np.arange(n)
    r1 = rng.integers(n - 1, size=n)
    r1 = r1 + (r1 >= i)
    r2 = rng.integers(n - 2, size=n)
    lo = np.minimum(i, r1)
    hi = np.maximum(i, r1)
    r2 = r2 + (r2 >= lo)
    r2 = r2 + (r2 >= hi)
    return r1, r2


def differential_evolution(
    objective,
    bounds: Bounds,
    init_population: np.ndarray,
    config: DeConfig,
    objective_batch=None,
) -> DeResult:
    """best1bin DE over a box, starting from the given population.

    Per generation one dithered F is drawn, mutants form around the
    generation's best member, binomial crossover guarantees at least one
    crossed coordinate, out-of-bounds coordinates are resampled uniformly,
    and selection is greedy. With tol=0 the loop always runs max_iter
    generations, costing exactly N*(max_iter+1) evaluations.

    ``objective`` maps one point to a float; pass ``objective_batch``
    (matrix -> vector) to evaluate whole generations in one call.
    """
    pop = np.array(init_population, dtype=np.float64)
    if pop.ndim != 2 or pop.shape[0] < 5:
        raise ConfigurationError("population must be a matrix with at least 5 rows")
    n, dims = pop.shape
    if bounds.dims != dims:
        raise ConfigurationError("bounds dimensionality does not match the population")
    if np.any(pop < bounds.lower) or np.any(pop > bounds.upper):
        raise ConfigurationError("initial population must lie within bounds")

    if objective_batch is None:
        def objective_batch(points):
            return np.asarray([objective(p) for p in points], dtype=np.float64)

    def evaluate(points):
        vals = np.asarray(objective_batch(points), dtype=np.float64)
        vals[~np.isfinite(vals)] = np.inf  # failed evaluations always lose selection
        return vals

    rng = RngStream(config.seed).substream("de")
    f_lo, f_hi = config.f_range

    fitness = evaluate(pop)
    evaluations = n
    best_idx = int(np.argmin(fitness))
    history = [float(fitness[best_idx])]

    for _ in range(config.max_iter):
        f = f_lo + (f_hi - f_lo) * float(rng.uniform())
        best = pop[best_idx]
        r1, r2 = _distinct_pairs(n, rng)
        mutants = best1bin_mutant(best, pop[r1], pop[r2], f)

        cross = rng.uniform((n, dims)) < config.cr
        cross[np.arange(n), rng.integers(dims, size=n)] = True
        trials = np.where(cross, mutants, pop)

        oob = (trials < bounds.lower) | (trials > bounds.upper)
        if oob.any():
            uniform = bounds.lower + rng.uniform((n, dims)) * bounds.range
            trials = np.where(oob, uniform, trials)

        trial_fitness = evaluate(trials)
        evaluations += n
        improved = trial_fitness <= fitness
        pop[improved] = trials[improved]
        fitness[improved] = trial_fitness[improved]

        best_idx = int(np.argmin(fitness))
        history.append(float(fitness[best_idx]))
        if config.tol > 0.0 and np.std(fitness[np.isfinite(fitness)]) <= config.tol:
            break

    return DeResult(
        x=pop[best_idx].copy(),
        fun=float(fitness[best_idx]),
        evaluations=evaluations,
        best_history=history,
    )


def make_init_population(method: str, n: int, bounds: Bounds, seed: int) -> np.ndarray:
    """Initial population by method name, always exactly n rows in bounds.

    The Sobol route drops the leading all-zeros point so no member starts
    at the exact lower corner; the HDS route runs the full pipeline with
    the same seed.
    """
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}")
    if n < 1:
        raise ConfigurationError("population size must be >= 1")
    if method == "Sobol":
        engine = SobolEngine(bounds.dims)
        engine.fast_forward(1)
        return denormalize(engine.draw(n), bounds)
    return hds_generate(HdsConfig(n_samples=n, dims=bounds.dims, bounds=bounds, seed=seed))
