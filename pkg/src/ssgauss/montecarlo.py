"""Replicated experiments probing the Brownian limit of Hermite variations.

The functional under study is

    F_n(t) = n^(-1/2) sum_{j < floor(n t)} f(Y_j),    Y_j = DX_j / ||DX_j||,

which is zero when floor(n t) < 1.  Its second moment admits an exact
finite-n oracle through chaos orthogonality,

    E[F_n(t)^2] = sum_q q! c_q^2 (1/n) sum_{j,k < floor(nt)} corr[j,k]^q,

so Monte Carlo output can be held against a non-random target at every n
rather than only against the n -> infinity limit.  The experiment
records, per grid time: sample variance (bootstrap standard error),
fourth-moment ratio E[F^4] / (3 E[F^2]^2), a one-sample KS test of
F_n(t)/sqrt(exact variance) against the standard normal, and the
covariance of consecutive path increments of F_n (which the limit says
vanish).  KS standardization uses the exact finite-n variance, not the
limit value, to keep slow variance convergence from contaminating the
shape test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__ as _VERSION
from .covgrid import IncrementCovariance, increment_cov
from .errors import DomainError, GateError, GridError
from .hermite import HermiteFunction
from .limitvar import sigma_sq
from .models import Model
from .sampler import cholesky, sample_batch

__all__ = [
    "functional",
    "exact_variance",
    "exact_variance_from_corr",
    "run_experiment",
    "ExperimentResult",
    "TimeStats",
    "CrossStats",
    "kolmogorov_sf",
    "ks_test_normal",
]

DEFAULT_M = 4000
MIN_REPLICAS = 100
BOOTSTRAP_B = 1000

# verdict tolerances, in units of the corresponding standard errors
TOLERANCES = {
    "var_se_mult": 4.0,
    "kurt_se_mult": 5.0,
    "ks_p_min": 1.0e-3,
    "cross_se_mult": 4.0,
}


def _num_increments(n: int, t: float) -> int:
    return int(math.floor(n * t))


def functional(rows: np.ndarray, f: HermiteFunction, n: int, t: float):
    """F_n(t) for one normalized row (returns float) or a batch (M,) array."""
    arr = np.asarray(rows, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    m = _num_increments(n, t)
    if m > arr.shape[1]:
        raise GridError(f"floor(n*t) = {m} exceeds the sampled grid N = {arr.shape[1]}")
    if m < 1:
        out = np.zeros(arr.shape[0])
    else:
        out = f.evaluate(arr[:, :m]).sum(axis=1) / math.sqrt(n)
    return float(out[0]) if single else out


def exact_variance_from_corr(corr: np.ndarray, f: HermiteFunction, n: int, t: float) -> float:
    """The orthogonality-based oracle for E[F_n(t)^2], given corr."""
    m = _num_increments(n, t)
    if m > corr.shape[0]:
        raise GridError(f"floor(n*t) = {m} exceeds the covariance grid N = {corr.shape[0]}")
    if m < 1:
        return 0.0
    sub = corr[:m, :m]
    total = 0.0
    for q, c in sorted(f.coeffs.items()):
        total += math.factorial(q) * c * c * float(np.sum(sub**q)) / n
    return total


def exact_variance(model: Model, f: HermiteFunction, n: int, t: float,
                   ic: IncrementCovariance | None = None) -> float:
    """Exact E[F_n(t)^2]; assembles the covariance grid unless one is passed."""
    if ic is None:
        m = _num_increments(n, t)
        if m < 1:
            return 0.0
        ic = increment_cov(model, n, m)
    return exact_variance_from_corr(ic.corr, f, n, t)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov against the standard normal.

def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution.

    Alternating series for large argument, Jacobi-transformed series for
    small; the crossover at 1.18 keeps both branches short.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        t = math.exp(-math.pi**2 / (8.0 * lam * lam))
        cdf = math.sqrt(2.0 * math.pi) / lam * (t + t**9 + t**25 + t**49)
        return 1.0 - cdf
    total = 0.0
    for k in range(1, 101):
        term = (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * lam * lam)
        total += term
        if abs(term) < 1.0e-16:
            break
    return max(0.0, min(1.0, 2.0 * total))


def _normal_cdf(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.array([math.erf(v / math.sqrt(2.0)) for v in x]))


def ks_test_normal(sample: np.ndarray) -> tuple[float, float]:
    """One-sample KS statistic and asymptotic p-value against N(0, 1)."""
    x = np.sort(np.asarray(sample, dtype=float))
    m = x.size
    cdf = _normal_cdf(x)
    grid = np.arange(1, m + 1, dtype=float) / m
    d_plus = float(np.max(grid - cdf))
    d_minus = float(np.max(cdf - (grid - 1.0 / m)))
    d = max(d_plus, d_minus)
    return d, kolmogorov_sf(math.sqrt(m) * d)


# ---------------------------------------------------------------------------
# Experiment records.

@dataclass(frozen=True)
class TimeStats:
    t: float
    num_terms: int
    mean: float
    sample_var: float
    se_var: float
    fourth_moment: float
    kurtosis_ratio: float
    se_kurtosis: float
    ks_stat: float
    ks_p: float
    exact_var: float
    predicted_var: float
    var_ok: bool
    kurt_ok: bool
    ks_ok: bool


@dataclass(frozen=True)
class CrossStats:
    t_lo: float
    t_mid: float
    t_hi: float
    cov: float
    se: float
    ok: bool


@dataclass(frozen=True)
class ExperimentResult:
    """Reproducible record of one replicated experiment.

    Verdicts are pure functions of the stored statistics and the
    tolerances echoed in config, so they can be re-derived from the JSON.
    """

    config: dict
    times: list[TimeStats] = field(default_factory=list)
    cross: list[CrossStats] = field(default_factory=list)
    passed: bool = False
    version: str = _VERSION

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "times": [vars(ts) | {} for ts in self.times],
            "cross": [vars(cs) | {} for cs in self.cross],
            "passed": self.passed,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), indent=2, **kwargs)

    def summary_rows(self) -> list[dict]:
        cols = ("t", "exact_var", "sample_var", "se", "kurtosis_ratio", "ks_stat", "ks_p")
        return [
            dict(zip(cols, (ts.t, ts.exact_var, ts.sample_var, ts.se_var,
                            ts.kurtosis_ratio, ts.ks_stat, ts.ks_p)))
            for ts in self.times
        ]


def derive_verdicts(times: list[dict], cross: list[dict], tol: dict) -> bool:
    """Recompute the overall verdict from stored statistics (used by the
    report command to audit a saved run)."""
    ok = True
    for ts in times:
        ok &= abs(ts["sample_var"] - ts["exact_var"]) <= tol["var_se_mult"] * ts["se_var"]
        ok &= abs(ts["kurtosis_ratio"] - 1.0) <= tol["kurt_se_mult"] * ts["se_kurtosis"]
        ok &= ts["ks_p"] >= tol["ks_p_min"]
    for cs in cross:
        ok &= abs(cs["cov"]) <= tol["cross_se_mult"] * cs["se"]
    return bool(ok)


def _bootstrap_moments(values: np.ndarray, seed: int, stream: int,
                       B: int = BOOTSTRAP_B) -> tuple[float, float]:
    """Bootstrap standard errors of the sample variance and of the
    fourth-moment ratio, from a dedicated Philox stream."""
    m = values.size
    key = np.array([seed & (2**64 - 1), (1 << 32) + stream], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    idx = rng.integers(0, m, size=(B, m))
    draws = values[idx]
    m2 = np.mean(draws**2, axis=1) - np.mean(draws, axis=1) ** 2
    m4 = np.mean(draws**4, axis=1)
    kurt = m4 / (3.0 * np.maximum(np.mean(draws**2, axis=1), 1e-300) ** 2)
    return float(np.std(m2, ddof=1)), float(np.std(kurt, ddof=1))


def run_experiment(model: Model, f: HermiteFunction, n: int, t_grid,
                   M: int = DEFAULT_M, seed: int = 0, threads: int = 1,
                   all_pairs: bool = False) -> ExperimentResult:
    """Replicated CLT experiment over a time grid.

    Computes per-time variance/kurtosis/KS statistics with their verdicts
    and the pairwise covariances of path increments of F_n (consecutive
    pairs by default, every pair with all_pairs).
    """
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] <= 0.0:
        raise DomainError("t_grid must contain positive times")
    if M < MIN_REPLICAS:
        raise DomainError(f"M={M} below the minimum replication {MIN_REPLICAS}")
    if f.rank < 2 or model.alpha >= 2.0 - 1.0 / f.rank:
        raise GateError(
            f"applicability gate: need rank d >= 2 and alpha < 2 - 1/d; "
            f"got alpha={model.alpha}, d={f.rank}"
        )

    N = _num_increments(n, t_grid[-1])
    if N < 1:
        raise GridError(f"floor(n*max t) = {N}; nothing to sample")
    ic = increment_cov(model, n, N)
    factor = cholesky(ic)
    batch = sample_batch(model, n, N, M, seed, threads=threads, ic=ic, factor=factor)

    limit = sigma_sq(f, model.alpha)

    # evaluate f once, then every F_n(t) is a prefix sum
    vals = f.evaluate(batch.normalized)
    prefix = np.cumsum(vals, axis=1) / math.sqrt(n)

    def F_at(t: float) -> np.ndarray:
        m = _num_increments(n, t)
        return prefix[:, m - 1] if m >= 1 else np.zeros(M)

    tol = TOLERANCES
    times: list[TimeStats] = []
    for i, t in enumerate(t_grid):
        F = F_at(t)
        exact = exact_variance_from_corr(ic.corr, f, n, t)
        s_var = float(np.var(F, ddof=1))
        m2 = float(np.mean(F**2))
        m4 = float(np.mean(F**4))
        kurt = m4 / (3.0 * m2 * m2)
        se_var, se_kurt = _bootstrap_moments(F, seed, i)
        ks_stat, ks_p = ks_test_normal(F / math.sqrt(exact))
        times.append(TimeStats(
            t=t, num_terms=_num_increments(n, t), mean=float(np.mean(F)),
            sample_var=s_var, se_var=se_var, fourth_moment=m4,
            kurtosis_ratio=kurt, se_kurtosis=se_kurt,
            ks_stat=ks_stat, ks_p=ks_p, exact_var=exact,
            predicted_var=limit.sigma_sq * t,
            var_ok=abs(s_var - exact) <= tol["var_se_mult"] * se_var,
            kurt_ok=abs(kurt - 1.0) <= tol["kurt_se_mult"] * se_kurt,
            ks_ok=ks_p >= tol["ks_p_min"],
        ))

    cross: list[CrossStats] = []
    grid0 = [0.0] + t_grid
    G = [F_at(t2) - F_at(t1) for t1, t2 in zip(grid0[:-1], grid0[1:])]
    pairs = (
        [(i, j) for i in range(len(G)) for j in range(i + 1, len(G))]
        if all_pairs else [(i, i + 1) for i in range(len(G) - 1)]
    )
    for i, j in pairs:
        prod = G[i] * G[j]
        cov = float(np.mean(prod) - np.mean(G[i]) * np.mean(G[j]))
        se = float(np.std(prod, ddof=1) / math.sqrt(M))
        cross.append(CrossStats(
            t_lo=grid0[i], t_mid=grid0[i + 1], t_hi=grid0[j + 1],
            cov=cov, se=se, ok=abs(cov) <= tol["cross_se_mult"] * se,
        ))

    passed = all(ts.var_ok and ts.kurt_ok and ts.ks_ok for ts in times) and \
        all(cs.ok for cs in cross)
    config = {
        "model": model.describe(),
        "f": f.describe(),
        "n": int(n),
        "t_grid": t_grid,
        "M": int(M),
        "seed": int(seed),
        "tolerances": dict(tol),
        "sigma_sq": limit.sigma_sq,
    }
    return ExperimentResult(config=config, times=times, cross=cross, passed=passed)
