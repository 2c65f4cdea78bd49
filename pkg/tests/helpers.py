"""Shared generators and comparison helpers for the test suite."""

import numpy as np

# Deployed e-values sit mathematically at exactly 1/level on the decision
# boundary (the construction is one-hot there), so thresholded comparisons
# of independently computed values need a one-sided relative guard.
REL_GUARD = 1e-9


def thresholded(evalue: float, alpha: float) -> bool:
    """Guarded version of ``evalue >= 1/alpha``."""
    return bool(evalue * alpha >= 1.0 - REL_GUARD)


def random_mdr_instance(rng, max_n=40, tied=False):
    """Random (calib, test_score) pair; ``tied`` draws integer scores."""
    n = int(rng.integers(1, max_n + 1))
    if tied:
        scores = rng.integers(0, 5, size=n).astype(float)
        test_score = float(rng.integers(0, 5))
    else:
        scores = rng.normal(size=n)
        test_score = float(rng.normal())
    risks = rng.uniform(size=n)
    return list(zip(scores, risks)), test_score


def random_sdr_instance(rng, max_n=12, max_m=12, tied=False, weighted=False,
                        binary_risks=False):
    """Random (calib, tests) instance for the selective procedures."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    if tied:
        cs = rng.integers(0, 5, size=n).astype(float)
        ts = rng.integers(0, 5, size=m).astype(float)
    else:
        cs = rng.normal(size=n)
        ts = rng.normal(size=m)
    if binary_risks:
        risks = (rng.uniform(size=n) < rng.uniform(0.2, 0.8)).astype(float)
    else:
        risks = rng.uniform(size=n)
    if weighted:
        wc = rng.uniform(0.2, 5.0, size=n)
        wt = rng.uniform(0.2, 5.0, size=m)
        return list(zip(cs, risks, wc)), list(zip(ts, wt))
    return list(zip(cs, risks)), list(ts)


def exchangeable_pairs(rng, n, m, kind="smooth"):
    """Draw n+m exchangeable (score, risk) pairs with risk tied to score.

    ``smooth`` risks are continuous in (0, 1); ``excess``-style risks carry a
    point mass at zero; ``binary`` risks live on {0, 1}.
    """
    s = rng.normal(size=n + m)
    if kind == "smooth":
        base = 1.0 / (1.0 + np.exp(-1.5 * s))
        risk = np.clip(base + 0.25 * rng.normal(size=n + m), 0.0, 1.0)
    elif kind == "excess":
        raw = s + 0.5 * rng.normal(size=n + m)
        risk = np.clip(np.where(raw > 0.3, raw / 3.0, 0.0), 0.0, 1.0)
    elif kind == "binary":
        p = 1.0 / (1.0 + np.exp(-1.5 * s))
        risk = (rng.uniform(size=n + m) < p).astype(float)
    else:
        raise ValueError(kind)
    return s[:n], risk[:n], s[n:], risk[n:]


def risk_evalue_products(test_risks, evalues):
    """L * E with the measure-theoretic 0 * inf = 0 convention."""
    test_risks = np.asarray(test_risks, dtype=float)
    evalues = np.asarray(evalues, dtype=float)
    return np.where(test_risks == 0.0, 0.0, test_risks * evalues)


def mc_bound_ok(per_rep_means, bound=1.0, k_se=3.0):
    """True when mean(per_rep_means) <= bound + k_se * SE."""
    arr = np.asarray(per_rep_means, dtype=float)
    se = arr.std(ddof=1) / np.sqrt(arr.size)
    return arr.mean() <= bound + k_se * se, float(arr.mean()), float(se)
