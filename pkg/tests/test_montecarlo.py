import json

import numpy as np
import pytest

from ssgauss.errors import DomainError, GateError, GridError
from ssgauss.hermite import HermiteFunction, builtin_family
from ssgauss.limitvar import sigma_q_sq
from ssgauss.models import make_model
from ssgauss.montecarlo import (
    exact_variance,
    functional,
    kolmogorov_sf,
    ks_test_normal,
    run_experiment,
)

H2 = builtin_family("single_hermite", 2)


def test_functional_zero_below_first_gridpoint():
    rows = np.zeros(16)
    assert functional(rows, H2, 32, 0.01) == 0.0


def test_functional_constant_rows():
    # He_2(0) = -1 on every term
    rows = np.zeros(16)
    assert functional(rows, H2, 16, 1.0) == pytest.approx(-16.0 / 4.0)
    assert functional(rows, H2, 16, 0.5) == pytest.approx(-8.0 / 4.0)


def test_functional_grid_overflow():
    with pytest.raises(GridError):
        functional(np.zeros(8), H2, 16, 1.0)


def test_exact_variance_brownian_values():
    m = make_model("fbm", H=0.5)
    assert exact_variance(m, H2, 128, 1.0) == 2.0
    assert exact_variance(m, H2, 128, 0.5) == 1.0


def test_exact_variance_additive_over_chaoses():
    m = make_model("swanson")
    mix = HermiteFunction(coeffs={2: 0.8, 3: -1.3}, rank=2, l2_norm_sq=0.0)
    only2 = HermiteFunction(coeffs={2: 0.8}, rank=2, l2_norm_sq=0.0)
    only3 = HermiteFunction(coeffs={3: -1.3}, rank=3, l2_norm_sq=0.0)
    n = 64
    total = exact_variance(m, mix, n, 1.0)
    parts = exact_variance(m, only2, n, 1.0) + exact_variance(m, only3, n, 1.0)
    assert total == pytest.approx(parts, rel=1e-12)


def test_exact_variance_approaches_series_limit():
    m = make_model("swanson")
    target = sigma_q_sq(0.5, 2).value
    gaps = [abs(exact_variance(m, H2, n, 1.0) - target) for n in (128, 512, 2048)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_exact_variance_linear_in_time():
    # Brownian-limit property at high resolution
    m = make_model("fbm", H=0.3)
    n = 4096
    from ssgauss.covgrid import increment_cov
    ic = increment_cov(m, n, n)
    ts = np.linspace(0.125, 1.0, 8)
    vs = np.array([exact_variance(m, H2, n, t, ic=ic) for t in ts])
    slope, intercept = np.polyfit(ts, vs, 1)
    fitted = slope * ts + intercept
    ss_res = float(np.sum((vs - fitted) ** 2))
    ss_tot = float(np.sum((vs - vs.mean()) ** 2))
    assert 1.0 - ss_res / ss_tot >= 0.999


def test_kolmogorov_sf_against_scipy():
    kolmogorov = pytest.importorskip("scipy.special").kolmogorov
    for lam in (0.3, 0.7, 1.0, 1.18, 1.5, 2.5):
        assert kolmogorov_sf(lam) == pytest.approx(float(kolmogorov(lam)), abs=1e-12)


def test_ks_against_scipy_reference():
    stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(123)
    x = rng.standard_normal(500)
    d, p = ks_test_normal(x)
    ref = stats.kstest(x, "norm", mode="asymp")
    assert d == pytest.approx(ref.statistic, abs=1e-12)
    assert p == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-12)


def test_run_experiment_small_brownian():
    m = make_model("fbm", H=0.5)
    res = run_experiment(m, H2, 128, [0.5, 1.0], M=400, seed=7)
    assert res.passed
    for ts in res.times:
        assert abs(ts.sample_var - ts.exact_var) <= 4.0 * ts.se_var
        assert ts.exact_var == pytest.approx(2.0 * ts.t, rel=1e-12)
        assert ts.predicted_var == pytest.approx(2.0 * ts.t, rel=1e-12)
    assert len(res.cross) == 1
    assert abs(res.cross[0].cov) <= 4.0 * res.cross[0].se
    # reproducible end to end
    res2 = run_experiment(m, H2, 128, [0.5, 1.0], M=400, seed=7)
    assert json.loads(res.to_json()) == json.loads(res2.to_json())


def test_run_experiment_all_pairs_flag():
    m = make_model("fbm", H=0.5)
    res = run_experiment(m, H2, 64, [0.25, 0.5, 1.0], M=200, seed=1, all_pairs=True)
    assert len(res.cross) == 3  # every pair of the three increments


def test_run_experiment_gates():
    m = make_model("fbm", H=0.8)  # alpha = 1.6 >= 1.5
    with pytest.raises(GateError):
        run_experiment(m, H2, 64, [1.0], M=200, seed=0)
    f1 = HermiteFunction(coeffs={1: 1.0}, rank=1, l2_norm_sq=1.0)
    with pytest.raises(GateError):
        run_experiment(make_model("fbm", H=0.5), f1, 64, [1.0], M=200, seed=0)
    with pytest.raises(DomainError):
        run_experiment(make_model("fbm", H=0.5), H2, 64, [1.0], M=50, seed=0)
    with pytest.raises(DomainError):
        run_experiment(make_model("fbm", H=0.5), H2, 64, [], M=200, seed=0)


def test_experiment_summary_rows():
    m = make_model("fbm", H=0.5)
    res = run_experiment(m, H2, 64, [1.0], M=150, seed=3)
    rows = res.summary_rows()
    assert list(rows[0]) == ["t", "exact_var", "sample_var", "se",
                             "kurtosis_ratio", "ks_stat", "ks_p"]
    assert rows[0]["t"] == 1.0
