import json
import math

import numpy as np
import pytest

from hds.bench import (
    BENCH_DEFAULT_FUNCTIONS,
    FUNCTION_NAMES,
    ComparisonSummary,
    evaluate_function,
    format_summary_table,
    get_function,
    load_records,
    run_experiment,
    summarize,
    write_records,
)
from hds.de import TrialRecord
from hds.errors import ConfigurationError


# ---------------------------------------------------------------------------
# benchmark functions
# ---------------------------------------------------------------------------

def test_known_optima_at_origin():
    assert evaluate_function("sphere", np.zeros(7)) == 0.0
    assert evaluate_function("rastrigin", np.zeros(13)) == 0.0
    assert evaluate_function("griewank", np.zeros(4)) == 0.0
    assert evaluate_function("zakharov", np.zeros(4)) == 0.0
    assert evaluate_function("schwefel221", np.zeros(4)) == 0.0


def test_ackley_reference_value():
    # frozen from a 30-digit evaluation of the closed form at (1, 1)
    assert evaluate_function("ackley", np.ones(2)) == pytest.approx(
        3.6253849384403627, abs=1e-9
    )


def test_rosenbrock_optimum_at_ones():
    assert evaluate_function("rosenbrock", np.ones(6)) == 0.0
    assert evaluate_function("rosenbrock", np.zeros(2)) == 1.0


@pytest.mark.parametrize("name", FUNCTION_NAMES)
@pytest.mark.parametrize("dims", [2, 10, 30])
def test_optimum_consistency(name, dims):
    f = get_function(name, dims)
    assert abs(f(f.optimum) - f.f_star) <= 1e-9
    assert np.all(np.abs(f.optimum) <= 100.0)


@pytest.mark.parametrize("name", FUNCTION_NAMES)
def test_finite_on_bounds(name):
    rng = np.random.default_rng(0)
    x = rng.uniform(-100, 100, size=(64, 10))
    vals = get_function(name, 10)(x)
    assert vals.shape == (64,)
    assert np.all(np.isfinite(vals))


def test_shifts_are_deterministic():
    a = get_function("shifted_sphere", 10).optimum
    b = get_function("shifted_sphere", 10).optimum
    assert np.array_equal(a, b)
    assert not np.array_equal(a, get_function("shifted_sphere", 11).optimum[:10])


def test_rotation_is_orthogonal():
    f = get_function("shifted_rotated_rastrigin", 10)
    # rotating about the optimum keeps the function nonnegative
    x = f.optimum + np.random.default_rng(1).standard_normal((32, 10))
    assert np.all(f(x) >= 0.0)


def test_unknown_function_rejected():
    with pytest.raises(ConfigurationError):
        evaluate_function("mystery", np.zeros(3))


def test_default_suite_has_interior_optima():
    assert len(BENCH_DEFAULT_FUNCTIONS) >= 6
    for name in BENCH_DEFAULT_FUNCTIONS:
        f = get_function(name, 10)
        assert np.linalg.norm(f.optimum) > 1.0  # never the box center


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------

def test_run_experiment_counts(tmp_path):
    records = run_experiment(
        ["shifted_sphere", "shifted_ackley"], [5], [16], trials=3,
        out_csv=str(tmp_path / "records.csv"), max_iter=10,
    )
    assert len(records) == 2 * 1 * 1 * 3 * 2
    assert (tmp_path / "records.csv").exists()


def test_run_experiment_resume_no_duplicates(tmp_path):
    path = str(tmp_path / "records.csv")
    first = run_experiment(["shifted_sphere"], [4], [16], trials=3, out_csv=path, max_iter=5)
    again = run_experiment(["shifted_sphere"], [4], [16], trials=3, out_csv=path, max_iter=5)
    assert len(first) == len(again) == 6
    assert len(load_records(path)) == 6


def test_run_experiment_interrupted_resume_identical(tmp_path):
    full_path = str(tmp_path / "full.csv")
    run_experiment(["shifted_sphere"], [4], [16], trials=3, out_csv=full_path, max_iter=5)
    complete = load_records(full_path)

    partial_path = str(tmp_path / "partial.csv")
    write_records(complete[:5], partial_path)
    run_experiment(["shifted_sphere"], [4], [16], trials=3, out_csv=partial_path, max_iter=5)
    resumed = load_records(partial_path)

    # identical content up to wall clock; rows already present were not rerun
    strip = lambda r: (r.method, r.function, r.dims, r.n, r.trial, r.final_error, r.evaluations)
    assert [strip(r) for r in resumed] == [strip(r) for r in complete]
    assert resumed[:5] == complete[:5]


def test_run_experiment_deterministic(tmp_path):
    a = run_experiment(["shifted_sphere"], [3], [16], trials=2,
                       out_csv=str(tmp_path / "a.csv"), max_iter=5)
    b = run_experiment(["shifted_sphere"], [3], [16], trials=2,
                       out_csv=str(tmp_path / "b.csv"), max_iter=5)
    assert [r.final_error for r in a] == [r.final_error for r in b]


def test_run_experiment_needs_two_trials():
    with pytest.raises(ConfigurationError):
        run_experiment(["sphere"], [2], [8], trials=1)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

def _record(method, function="f", dims=5, n=16, trial=0, error=1.0, wall=1.0):
    return TrialRecord(method=method, function=function, dims=dims, n=n,
                       trial=trial, final_error=error, wall_time=wall, evaluations=n)


def test_geometric_mean_definition():
    records = []
    for trial, (h, s) in enumerate([(1.0, 1.0), (10.0, 10.0), (100.0, 100.0)]):
        records.append(_record("HDS", trial=trial, error=h))
        records.append(_record("Sobol", trial=trial, error=s))
    summary = summarize(records)[0]
    assert summary.hds_gm_error == pytest.approx(10.0)
    assert summary.sobol_gm_error == pytest.approx(10.0)
    assert summary.ratio == pytest.approx(1.0)


def test_identical_methods_no_effect():
    records = []
    for trial, e in enumerate([0.5, 2.0, 8.0, 1.0]):
        records.append(_record("HDS", trial=trial, error=e))
        records.append(_record("Sobol", trial=trial, error=e))
    summary = summarize(records)[0]
    assert summary.ratio == pytest.approx(1.0)
    assert summary.p_value >= 0.99
    assert summary.ci95_low <= 1.0 <= summary.ci95_high


def test_unpaired_records_rejected():
    records = [_record("HDS", trial=0), _record("Sobol", trial=1)]
    with pytest.raises(ConfigurationError):
        summarize(records)


def test_duplicate_records_rejected():
    records = [_record("HDS"), _record("HDS"), _record("Sobol")]
    with pytest.raises(ConfigurationError):
        summarize(records)


def test_ratio_scale_invariance():
    base, scaled = [], []
    rng = np.random.default_rng(5)
    for trial in range(8):
        h, s = float(rng.uniform(0.1, 10)), float(rng.uniform(0.1, 10))
        base += [_record("HDS", trial=trial, error=h), _record("Sobol", trial=trial, error=s)]
        scaled += [_record("HDS", trial=trial, error=h * 1e6),
                   _record("Sobol", trial=trial, error=s * 1e6)]
    assert summarize(base)[0].ratio == pytest.approx(summarize(scaled)[0].ratio, rel=1e-9)


def test_error_floor_prevents_log_zero():
    records = [_record("HDS", trial=0, error=0.0), _record("Sobol", trial=0, error=1.0),
               _record("HDS", trial=1, error=0.0), _record("Sobol", trial=1, error=1.0)]
    summary = summarize(records)[0]
    assert math.isfinite(summary.ratio)
    assert summary.hds_gm_error == pytest.approx(1e-12)


def test_bootstrap_deterministic():
    rng = np.random.default_rng(6)
    records = []
    for trial in range(10):
        records.append(_record("HDS", trial=trial, error=float(rng.uniform(0.5, 2))))
        records.append(_record("Sobol", trial=trial, error=float(rng.uniform(0.5, 2))))
    a = summarize(records, bootstrap_seed=1)[0]
    b = summarize(records, bootstrap_seed=1)[0]
    c = summarize(records, bootstrap_seed=2)[0]
    assert (a.ci95_low, a.ci95_high) == (b.ci95_low, b.ci95_high)
    assert (a.ci95_low, a.ci95_high) != (c.ci95_low, c.ci95_high)


def test_runtime_ratio_convention():
    # HDS slower (more wall time) must give a ratio below 1
    records = [_record("HDS", trial=0, wall=2.0), _record("Sobol", trial=0, wall=1.0),
               _record("HDS", trial=1, wall=2.0), _record("Sobol", trial=1, wall=1.0)]
    assert summarize(records)[0].runtime_ratio == pytest.approx(0.5)


def test_summary_table_shape():
    records = [_record("HDS"), _record("Sobol"),
               _record("HDS", trial=1, error=2.0), _record("Sobol", trial=1, error=3.0)]
    summaries = summarize(records)
    table = format_summary_table(summaries)
    lines = table.split("\n")
    assert len(lines) == 2
    for column in ("N", "D", "HDS Err.", "Sobol Err.", "Ratio", "p-Val", "CI95"):
        assert column in lines[0]
    payload = [s.to_dict() for s in summaries]
    assert json.loads(json.dumps(payload)) == payload
