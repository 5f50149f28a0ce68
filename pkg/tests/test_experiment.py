import math

import numpy as np
import pytest

from spindle import experiment as ex
from spindle.errors import (ConfigError, ExperimentError, HullError, InsufficientReplications,
                            NonpositiveValue)
from spindle.experiment import (ExperimentConfig, SampleRecord, estimate_moments, fit_exponent,
                                fit_moments, moments_csv, read_moments_csv, read_records_csv,
                                records_csv, run_experiment)
from spindle.theory import CIRCLE_VERTEX_LIMIT

CIRCLE = {"kind": "circle", "rho": 1.0}


def synthetic(values_f0, values_missed, n=100):
    return [SampleRecord(n, i, int(f), 1.0, float(m))
            for i, (f, m) in enumerate(zip(values_f0, values_missed))]


# configuration ---------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(r=0.5),
    dict(n_grid=(100, 100)),
    dict(n_grid=(200, 100)),
    dict(n_grid=()),
    dict(reps=0),
    dict(workers=0),
    dict(seed=-1),
    dict(model={"kind": "hexagon"}),
])
def test_config_rejections(kwargs):
    base = dict(model=CIRCLE, r=2.0, n_grid=(100, 200), reps=3)
    with pytest.raises(ConfigError):
        ExperimentConfig(**{**base, **kwargs}).validate()


def test_config_message_names_r_m():
    with pytest.raises(ConfigError, match="r_M"):
        ExperimentConfig(CIRCLE, 0.5, (10,), 2).validate()


def test_boundary_radius_admitted():
    ExperimentConfig(CIRCLE, 1.0, (10,), 2).validate()


# runs ------------------------------------------------------------------------

def test_single_point_run():
    recs = run_experiment(ExperimentConfig(CIRCLE, 2.0, (1,), 1, seed=3))
    assert len(recs) == 1
    assert recs[0].f0 == 1
    assert recs[0].missed_area == pytest.approx(math.pi)


def test_worker_count_does_not_change_output():
    cfg = dict(model={"kind": "ellipse", "a": 1.0, "b": 0.8}, r=2.0, n_grid=(50, 400), reps=12, seed=9)
    one = records_csv(run_experiment(ExperimentConfig(**cfg, workers=1)))
    three = records_csv(run_experiment(ExperimentConfig(**cfg, workers=3)))
    assert one == three


def test_records_sorted_and_reproducible():
    cfg = ExperimentConfig(CIRCLE, 2.0, (20, 40), 5, seed=1)
    recs = run_experiment(cfg)
    assert [(r.n, r.rep) for r in recs] == [(n, k) for n in (20, 40) for k in range(5)]
    assert recs == run_experiment(cfg)


def test_different_seeds_differ():
    a = run_experiment(ExperimentConfig(CIRCLE, 2.0, (100,), 4, seed=1))
    b = run_experiment(ExperimentConfig(CIRCLE, 2.0, (100,), 4, seed=2))
    assert [r.hull_area for r in a] != [r.hull_area for r in b]


def test_circle_mean_vertex_count():
    recs = run_experiment(ExperimentConfig(CIRCLE, 1.0, (10_000,), 200, seed=11))
    (m,) = estimate_moments(recs)
    assert abs(m.mean_f0 - CIRCLE_VERTEX_LIMIT) <= 3 * m.se_mean_f0


def test_incident_rate_enforced(monkeypatch):
    calls = {"k": 0}
    real = ex.hull_fast

    def flaky(points, r, incidents=None):
        calls["k"] += 1
        if calls["k"] % 2:
            raise HullError("forced")
        return real(points, r, incidents)

    monkeypatch.setattr(ex, "hull_fast", flaky)
    incidents = []
    with pytest.raises(ExperimentError):
        run_experiment(ExperimentConfig(CIRCLE, 2.0, (30,), 10), incidents)
    assert len(incidents) == 5
    assert all(i["reason"] == "HullError" for i in incidents)


def test_rare_incidents_tolerated(monkeypatch):
    real = ex.hull_fast

    def once(points, r, incidents=None):
        if len(points) == 17 and not once.done:
            once.done = True
            raise HullError("forced")
        return real(points, r, incidents)

    once.done = False
    monkeypatch.setattr(ex, "hull_fast", once)
    incidents = []
    recs = run_experiment(ExperimentConfig(CIRCLE, 2.0, tuple(range(1, 1101)), 1), incidents)
    assert len(recs) == 1100 and len(incidents) == 1
    # the oracle re-run reproduces the fast result
    monkeypatch.setattr(ex, "hull_fast", real)
    assert recs[16] == run_experiment(ExperimentConfig(CIRCLE, 2.0, (17,), 1))[0]


# estimation ----------------------------------------------------------------------

def test_constant_records_zero_variance():
    (m,) = estimate_moments(synthetic([7] * 10, [0.25] * 10))
    assert m.var_f0 == 0.0 and m.var_missed == 0.0
    assert m.mean_f0 == 7.0 and m.mean_missed == 0.25


def test_known_normal_moments():
    x = np.random.default_rng(0).standard_normal(10_000)
    (m,) = estimate_moments(synthetic(np.zeros(10_000), x))
    assert abs(m.mean_missed) <= 3 / math.sqrt(10_000)
    assert abs(m.var_missed - 1) <= 3 * math.sqrt(2 / 10_000)
    assert m.jk_se_var_missed == pytest.approx(m.se_var_missed, rel=0.1)


def test_interval_coverage():
    gen = np.random.default_rng(1)
    hit_mean = hit_var = 0
    for _ in range(100):
        x = gen.normal(2.0, 3.0, 400)
        (m,) = estimate_moments(synthetic(np.zeros(400), x))
        hit_mean += abs(m.mean_missed - 2.0) <= 3 * m.se_mean_missed
        hit_var += abs(m.var_missed - 9.0) <= 3 * m.se_var_missed
    assert hit_mean >= 95 and hit_var >= 95


def test_insufficient_replications():
    with pytest.raises(InsufficientReplications):
        estimate_moments(synthetic([3], [0.1]))


def test_variance_grows_with_n():
    recs = run_experiment(ExperimentConfig(CIRCLE, 2.0, (256, 4096), 150, seed=4))
    small, large = estimate_moments(recs)
    assert large.var_f0 > small.var_f0


# fitting ---------------------------------------------------------------------

def test_exact_power_laws():
    ns = [2**k for k in range(10, 18)]
    fit = fit_exponent([(n, 7 * n ** (1 / 3)) for n in ns])
    assert fit.slope == pytest.approx(1 / 3, abs=1e-12)
    assert fit.slope_stderr < 1e-12
    assert fit.points_used == 8
    assert fit_exponent([(n, 2 * n ** (-5 / 3)) for n in ns]).slope == pytest.approx(-5 / 3, abs=1e-12)


def test_noisy_power_law():
    gen = np.random.default_rng(2)
    ns = [2**k for k in range(10, 18)]
    for _ in range(20):
        fit = fit_exponent([(n, n**0.5 * (1 + 0.05 * gen.standard_normal())) for n in ns])
        assert abs(fit.slope - 0.5) <= 3 * fit.slope_stderr + 1e-3


def test_weighted_fit_ignores_noisy_point():
    pairs = [(10, 10.0), (100, 100.0), (1000, 1000.0), (10_000, 1e6)]
    fit = fit_exponent(pairs, weights=[1, 1, 1, 1e-12])
    assert fit.slope == pytest.approx(1.0, abs=1e-6)


def test_fit_errors():
    with pytest.raises(NonpositiveValue):
        fit_exponent([(1, 1.0), (2, 0.0), (3, 1.0)])
    with pytest.raises(ValueError):
        fit_exponent([(1, 1.0), (2, 2.0)])


# csv -------------------------------------------------------------------------

def test_csv_round_trip():
    recs = run_experiment(ExperimentConfig(CIRCLE, 2.0, (30, 60, 90), 4, seed=5))
    text = records_csv(recs)
    assert text.splitlines()[0] == "n,rep,f0,hull_area,missed_area"
    assert read_records_csv(text) == recs
    moments = estimate_moments(recs)
    mtext = moments_csv(moments)
    assert mtext.splitlines()[0] == ("n,M,mean_f0,se_mean_f0,var_f0,se_var_f0,"
                                     "mean_missed,se_mean_missed,var_missed,se_var_missed")
    back = read_moments_csv(mtext)
    assert [m.var_missed for m in back] == [m.var_missed for m in moments]
    assert fit_moments(back, "var_f0").points_used == 3
    assert "\r" not in text
