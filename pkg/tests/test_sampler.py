import numpy as np
import pytest

from ssgauss.covgrid import IncrementCovariance, increment_cov
from ssgauss.errors import DomainError
from ssgauss.models import make_model
from ssgauss.sampler import (
    CholeskyFactor,
    cholesky,
    draw,
    normal_icdf,
    read_batch,
    sample_batch,
    write_batch,
)


def _manual_ic(cov, n=2):
    std = np.sqrt(np.diag(cov))
    corr = cov / np.outer(std, std)
    np.fill_diagonal(corr, 1.0)
    return IncrementCovariance(model=make_model("fbm", H=0.5), n=n,
                               N=cov.shape[0], cov=cov, std=std, corr=corr)


def test_cholesky_brownian_grid():
    ic = increment_cov(make_model("fbm", H=0.5), 4, 4)
    factor = cholesky(ic)
    assert factor.jitter == 0.0
    assert np.array_equal(factor.L, np.eye(4) / 2.0)


def test_cholesky_diagonal_input():
    factor = cholesky(_manual_ic(np.diag([4.0, 1.0])))
    assert np.array_equal(factor.L, np.diag([2.0, 1.0]))


def test_cholesky_swanson_without_jitter():
    ic = increment_cov(make_model("swanson"), 256, 256)
    factor = cholesky(ic)
    assert factor.jitter == 0.0
    # eigenvalue oracle for the same matrix
    assert np.linalg.eigvalsh(ic.cov).min() >= -1e-12 * np.trace(ic.cov)


def test_cholesky_escalates_then_fails():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    from ssgauss.errors import NumericalError
    with pytest.raises(NumericalError):
        cholesky(_manual_ic(bad))


def test_normal_icdf_against_scipy():
    ndtri = pytest.importorskip("scipy.special").ndtri
    u = np.linspace(1e-10, 1.0 - 1e-10, 20001)
    assert np.max(np.abs(normal_icdf(u) - ndtri(u))) <= 1e-13
    assert normal_icdf(0.5) == 0.0
    with pytest.raises(DomainError):
        normal_icdf(0.0)
    with pytest.raises(DomainError):
        normal_icdf(1.0)


def test_draw_is_deterministic_per_replica():
    factor = CholeskyFactor(L=np.eye(1000), jitter=0.0, n=1000, N=1000)
    a = draw(factor, seed=99, replica=5)
    b = draw(factor, seed=99, replica=5)
    assert np.array_equal(a, b)
    c = draw(factor, seed=99, replica=6)
    corr = np.corrcoef(a, c)[0, 1]
    assert abs(corr) < 0.1  # 3/sqrt(N) band for distinct streams


def test_identity_draw_moments():
    factor = CholeskyFactor(L=np.eye(10_000), jitter=0.0, n=1, N=10_000)
    z = draw(factor, seed=7, replica=0)
    assert abs(z.mean()) < 0.05
    assert z.var() == pytest.approx(1.0, abs=0.05)


def test_batch_shapes_and_determinism():
    m = make_model("fbm", H=0.5)
    one = sample_batch(m, 16, 16, 1, seed=3)
    assert one.increments.shape == (1, 16)
    b1 = sample_batch(m, 16, 16, 700, seed=3, threads=1)
    b8 = sample_batch(m, 16, 16, 700, seed=3, threads=8)
    assert np.array_equal(b1.increments, b8.increments)
    assert np.array_equal(b1.normalized, b8.normalized)
    # row i is the replica-i stream regardless of batch size
    assert np.array_equal(b1.increments[0], one.increments[0])


def test_batch_empirical_covariance_in_band():
    m = make_model("fbm", H=0.7)
    M, N = 2000, 64
    ic = increment_cov(m, 64, N)
    batch = sample_batch(m, 64, N, M, seed=2024, ic=ic)
    emp = batch.increments.T @ batch.increments / M
    band = np.sqrt((np.outer(np.diag(ic.cov), np.diag(ic.cov)) + ic.cov**2) / M)
    assert np.max(np.abs(emp - ic.cov)) <= 5.0 * np.max(band)
    var = batch.normalized.var(axis=0, ddof=1)
    assert np.all(var >= 1.0 - 5.0 / np.sqrt(M))
    assert np.all(var <= 1.0 + 5.0 / np.sqrt(M))


def test_batch_rejects_empty():
    with pytest.raises(DomainError):
        sample_batch(make_model("fbm", H=0.5), 8, 8, 0, seed=1)


def test_binary_round_trip(tmp_path):
    m = make_model("swanson")
    batch = sample_batch(m, 8, 8, 5, seed=10)
    path = tmp_path / "batch.bin"
    write_batch(batch, path)
    header, data = read_batch(path)
    assert header == {"n": 8, "N": 8, "M": 5, "seed": 10}
    assert np.array_equal(data, batch.increments)
