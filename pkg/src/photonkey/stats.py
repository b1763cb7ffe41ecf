"""Statistical tests backing the Monte-Carlo validation suites.

Every test reports a p-value and a pass flag at the shared significance
ALPHA = 1e-3; "pass" means the null (uniform / independent / matching the
stated law) is not rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

__all__ = [
    "ALPHA",
    "TestResult",
    "chi2_uniformity",
    "chi2_independence",
    "poisson_gof",
    "binomial_gof",
    "permutation_mi",
    "discrete_mi",
    "normal_ci",
]

ALPHA = 1e-3


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    dof: int
    pvalue: float

    @property
    def passed(self) -> bool:
        return self.pvalue > ALPHA

    def summary(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return f"{self.name}: stat={self.statistic:.4f} dof={self.dof} p={self.pvalue:.3e} [{verdict}]"


def chi2_uniformity(counts: np.ndarray, name: str = "uniformity") -> TestResult:
    """Pearson chi-square against the uniform law over the observed cells."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0 or counts.size < 2:
        raise ValueError("need at least two cells with observations")
    expected = total / counts.size
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = counts.size - 1
    return TestResult(name, stat, dof, float(sps.chi2.sf(stat, dof)))


def _pool_bins(counts: np.ndarray, expected: np.ndarray, min_expected: float = 5.0):
    """Pool adjacent cells until every pooled cell expects >= min_expected."""
    c: list[float] = []
    e: list[float] = []
    acc_c = acc_e = 0.0
    for ci, ei in zip(counts, expected):
        acc_c += ci
        acc_e += ei
        if acc_e >= min_expected:
            c.append(acc_c)
            e.append(acc_e)
            acc_c = acc_e = 0.0
    if acc_e > 0.0 and e:
        c[-1] += acc_c
        e[-1] += acc_e
    if len(e) < 2:
        raise ValueError("too few observations for a chi-square test")
    return np.asarray(c), np.asarray(e)


def poisson_gof(samples: np.ndarray, mean: float, name: str = "poisson-gof") -> TestResult:
    """Chi-square goodness of fit of integer samples to Poisson(mean)."""
    samples = np.asarray(samples)
    n = samples.size
    kmax = int(samples.max()) if n else 0
    counts = np.bincount(samples, minlength=kmax + 1).astype(np.float64)
    ks = np.arange(kmax + 1)
    pmf = sps.poisson.pmf(ks, mean)
    pmf = np.append(pmf, max(1.0 - pmf.sum(), 0.0))
    counts = np.append(counts, 0.0)
    c, e = _pool_bins(counts, pmf * n)
    stat = float(((c - e) ** 2 / e).sum())
    dof = c.size - 1
    return TestResult(name, stat, dof, float(sps.chi2.sf(stat, dof)))


def binomial_gof(samples: np.ndarray, n_trials: int, p: float, name: str = "binomial-gof") -> TestResult:
    """Chi-square goodness of fit of integer samples to Binomial(n_trials, p)."""
    samples = np.asarray(samples)
    n = samples.size
    counts = np.bincount(samples, minlength=n_trials + 1).astype(np.float64)
    pmf = sps.binom.pmf(np.arange(n_trials + 1), n_trials, p)
    c, e = _pool_bins(counts, pmf * n)
    stat = float(((c - e) ** 2 / e).sum())
    dof = c.size - 1
    return TestResult(name, stat, dof, float(sps.chi2.sf(stat, dof)))


def chi2_independence(
    x: np.ndarray, y: np.ndarray, name: str = "independence", min_expected: float = 5.0
) -> TestResult:
    """Chi-square independence test on the joint histogram of two integer samples.

    Cells with expected count below min_expected are folded into their
    nearest kept neighbour along each axis (tail binning).
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.size != y.size:
        raise ValueError("paired samples required")

    # Fold each axis's upper tail so every joint cell expects at least
    # min_expected under independence (marginal product >= threshold^2/N).
    threshold = math.ceil(math.sqrt(min_expected * x.size))

    def fold(v: np.ndarray) -> np.ndarray:
        cnt = np.bincount(v)
        tail = np.cumsum(cnt[::-1])[::-1]
        ok = np.nonzero(tail >= threshold)[0]
        lim = max(int(ok[-1]) if ok.size else 0, 1)
        return np.minimum(v, lim)

    xc, yc = fold(x), fold(y)
    table = np.zeros((int(xc.max()) + 1, int(yc.max()) + 1), dtype=np.int64)
    np.add.at(table, (xc, yc), 1)
    table = table[table.sum(axis=1) > 0][:, table.sum(axis=0) > 0]
    if table.shape[0] < 2 or table.shape[1] < 2:
        return TestResult(name, 0.0, 0, 1.0)
    res = sps.chi2_contingency(table)
    return TestResult(name, float(res.statistic), int(res.dof), float(res.pvalue))


def discrete_mi(x: np.ndarray, y: np.ndarray) -> float:
    """Plug-in mutual information (nats) of two integer sequences."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    nx = int(x.max()) + 1
    joint = np.zeros((nx, int(y.max()) + 1), dtype=np.float64)
    np.add.at(joint, (x, y), 1.0)
    joint /= joint.sum()
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float((joint[nz] * np.log(joint[nz] / (px @ py)[nz])).sum())


def permutation_mi(
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    n_perm: int = 4999,
    max_n: int = 20000,
    name: str = "permutation-mi",
) -> TestResult:
    """Permutation test of MI(x; y) = 0.

    The p-value is the fraction of label permutations whose plug-in MI
    reaches the observed one; independence passes when p > ALPHA.
    """
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.size != y.size:
        raise ValueError("paired samples required")
    if x.size > max_n:
        idx = rng.choice(x.size, size=max_n, replace=False)
        x, y = x[idx], y[idx]
    observed = discrete_mi(x, y)
    hits = 0
    for _ in range(n_perm):
        if discrete_mi(x, rng.permutation(y)) >= observed:
            hits += 1
    pvalue = (hits + 1) / (n_perm + 1)
    return TestResult(name, observed, 0, float(pvalue))


def normal_ci(samples: np.ndarray, z: float = 1.96) -> tuple[float, float]:
    """(mean, half-width) normal-approximation confidence interval."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = float(samples.mean())
    if samples.size < 2:
        return mean, math.inf
    half = z * float(samples.std(ddof=1)) / math.sqrt(samples.size)
    return mean, half
