"""Marginal deployment-risk (MDR) decisions and e-values.

A single test point is deployed when its risk-adjusted e-value reaches
``1 / alpha``; the e-value is the infimum over candidate risk values
``ell in [0, 1]`` of

    (n + 1) * 1{s_test <= t(ell)}
    -------------------------------------------------------------
    sum_i L_i * 1{s_i <= t(ell)} + ell * 1{s_test <= t(ell)}

with ``t(ell)`` the largest pooled score whose empirical risk estimate

    F(t; ell) = [sum_i L_i 1{s_i <= t} + ell * 1{s_test <= t}] / (n + 1)

stays below ``gamma``.  For ``gamma <= alpha`` the thresholded decision
reduces exactly to one comparison,

    deploy  <=>  (1 + sum_i L_i 1{s_i <= s_test}) / (n + 1) <= gamma,

which is what :func:`mdr_decide` evaluates.  The weighted variants replace
every calibration term by its weighted version and ``n + 1`` by the total
weight, giving finite-sample control under covariate shift with known (or
plugged-in) weights.

:func:`mdr_evalue_oracle` / :func:`weighted_mdr_evalue_oracle` transcribe the
defining infimum by brute force for verification; :func:`mdr_evalue` computes
the same value exactly through the selective-risk kernel specialized to a
single test point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Levels, TestPoint, ValidatedBatch, validate_batch
from .sdr import _BOUNDARY_TOL, _oracle_ell_candidates, _require_unit_weights, _sdr_kernel

__all__ = [
    "MdrDecision",
    "mdr_decide",
    "weighted_mdr_decide",
    "mdr_evalue",
    "weighted_mdr_evalue",
    "mdr_evalue_oracle",
    "weighted_mdr_evalue_oracle",
]


@dataclass(frozen=True)
class MdrDecision:
    """Deploy/abstain outcome for one test point.

    ``empirical_stat`` is the left-hand statistic of the shortcut comparison;
    ``evalue_lower_bound`` is the exact e-value (diagnostic only): the
    decision at any level ``alpha'`` with ``1/alpha'`` below this bound would
    also deploy.
    """

    deploy: bool
    empirical_stat: float
    evalue_lower_bound: float


def _single_point_batch(calib, test) -> ValidatedBatch:
    if isinstance(calib, ValidatedBatch):
        raise ValueError("pass raw calibration samples together with one test point")
    tests = [test if isinstance(test, TestPoint) else float(test)]
    return validate_batch(calib, tests)


def _stat_and_interval(batch: ValidatedBatch, j: int, levels: Levels) -> tuple[float, bool]:
    """Shortcut statistic for test point ``j`` plus, for ``gamma > alpha``,
    whether the extra no-crossing condition over all pooled thresholds holds."""
    sj = batch.test_scores[j]
    wj = batch.test_weights[j]
    total_w = wj + float(np.sum(batch.calib_weights))
    covered = batch.calib_scores <= sj
    stat = (wj + float(np.sum(batch.calib_weights[covered] * batch.calib_risks[covered]))) / total_w
    if levels.gamma <= levels.alpha:
        return stat, True

    # For gamma > alpha, additionally require that no pooled threshold t and
    # candidate risk ell in [0, 1] put the statistic inside (alpha, gamma];
    # linearity in ell reduces this to checking the two endpoints per t.
    # Only prefix values attained at actual thresholds count, so tied scores
    # share the final value of their tie group.
    order = np.argsort(batch.calib_scores, kind="stable")
    sorted_scores = batch.calib_scores[order]
    raw_prefix = np.cumsum((batch.calib_weights * batch.calib_risks)[order])
    last = np.searchsorted(sorted_scores, sorted_scores, side="right") - 1
    prefix = raw_prefix[last]
    k = np.searchsorted(sorted_scores, sj, side="right")
    p_at_test = prefix[k - 1] if k > 0 else 0.0
    p_values = np.append(prefix, p_at_test)
    bad = (p_values <= levels.gamma * total_w) & (wj + p_values > levels.alpha * total_w)
    return stat, not bool(np.any(bad))


def mdr_decide(calib, test_score: float, levels: Levels) -> MdrDecision:
    """Deploy/abstain decision for one test point under exchangeability.

    Parameters
    ----------
    calib : sequence of CalibSample / (score, risk) pairs
        Labeled calibration data with unit weights.
    test_score : float
        Score of the candidate test point.
    levels : Levels
        Target level ``alpha`` and calibration level ``gamma`` (default
        ``alpha``; values below ``alpha`` only make the rule stricter).
    """
    batch = _single_point_batch(calib, test_score)
    _require_unit_weights(batch, "mdr_decide")
    stat, interval_ok = _stat_and_interval(batch, 0, levels)
    deploy = bool(stat <= levels.gamma) and interval_ok
    evalue = float(_sdr_kernel(batch, levels.gamma)[0][0])
    return MdrDecision(deploy=deploy, empirical_stat=float(stat), evalue_lower_bound=evalue)


def weighted_mdr_decide(calib, test, levels: Levels) -> MdrDecision:
    """Covariate-shift analogue of :func:`mdr_decide`; ``test`` carries the
    test point's weight.  Unit weights reproduce the unweighted decision, and
    rescaling all weights by a common factor changes nothing."""
    batch = _single_point_batch(calib, test)
    stat, interval_ok = _stat_and_interval(batch, 0, levels)
    deploy = bool(stat <= levels.gamma) and interval_ok
    evalue = float(_sdr_kernel(batch, levels.gamma)[0][0])
    return MdrDecision(deploy=deploy, empirical_stat=float(stat), evalue_lower_bound=evalue)


def mdr_evalue(calib, test_score: float, gamma: float) -> float:
    """Exact MDR e-value (the defining infimum), computed via the
    selective-risk kernel specialized to a single test point."""
    batch = _single_point_batch(calib, test_score)
    _require_unit_weights(batch, "mdr_evalue")
    return float(_sdr_kernel(batch, gamma)[0][0])


def weighted_mdr_evalue(calib, test, gamma: float) -> float:
    """Exact weighted MDR e-value for one test point."""
    batch = _single_point_batch(calib, test)
    return float(_sdr_kernel(batch, gamma)[0][0])


# ---------------------------------------------------------------------------
# Brute-force oracles: direct transcription of the defining infimum, used to
# verify the shortcut decision and the kernel.
# ---------------------------------------------------------------------------

def mdr_evalue_oracle(calib, test_score: float, gamma: float,
                      ell_grid_size: int = 1001, ell_set=None) -> float:
    """Brute-force MDR e-value: minimize the defining objective over a
    uniform candidate-risk grid augmented with the closed-form breakpoints of
    the threshold map.  ``ell_set`` restricts the infimum to an explicit
    finite set of attainable risk values instead."""
    batch = _single_point_batch(calib, test_score)
    _require_unit_weights(batch, "mdr_evalue_oracle")
    return _weighted_mdr_oracle(batch, gamma, ell_grid_size, ell_set)


def weighted_mdr_evalue_oracle(calib, test, gamma: float,
                               ell_grid_size: int = 1001, ell_set=None) -> float:
    """Weighted analogue of :func:`mdr_evalue_oracle`."""
    batch = _single_point_batch(calib, test)
    return _weighted_mdr_oracle(batch, gamma, ell_grid_size, ell_set)


def _weighted_mdr_oracle(batch: ValidatedBatch, gamma: float,
                         ell_grid_size: int, ell_set) -> float:
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    s_test = batch.test_scores[0]
    w_test = batch.test_weights[0]
    total_w = w_test + float(np.sum(batch.calib_weights))
    thresholds = np.unique(np.concatenate([batch.calib_scores, [s_test]]))
    calib_below = batch.calib_scores[None, :] <= thresholds[:, None]
    wl_sum = calib_below @ (batch.calib_weights * batch.calib_risks)
    covers = (s_test <= thresholds).astype(float)

    breakpoints = (gamma * total_w - wl_sum) / w_test
    ells = _oracle_ell_candidates(ell_grid_size, breakpoints, ell_set)

    best = np.inf
    for ell in ells:
        f = (wl_sum + w_test * ell * covers) / total_w
        feasible = np.flatnonzero(f <= gamma + _BOUNDARY_TOL)
        if feasible.size == 0:
            return 0.0
        t = thresholds[feasible[-1]]
        if s_test > t:
            return 0.0
        denom = wl_sum[feasible[-1]] + w_test * ell
        best = min(best, total_w / denom if denom > 0.0 else np.inf)
    return float(best)


# ---------------------------------------------------------------------------
# Vectorized batch decisions, used by the CLI and the simulation harness.
# Each test point forms its own pooled score set with the calibration data.
# ---------------------------------------------------------------------------

def deploy_mask(batch: ValidatedBatch, levels: Levels) -> np.ndarray:
    """Deploy decisions for every test point in the batch at once."""
    order = np.argsort(batch.calib_scores, kind="stable")
    sorted_scores = batch.calib_scores[order]
    prefix = np.cumsum((batch.calib_weights * batch.calib_risks)[order])
    prefix0 = np.concatenate([[0.0], prefix])
    k = np.searchsorted(sorted_scores, batch.test_scores, side="right")
    total_w = np.sum(batch.calib_weights) + batch.test_weights
    stats = (batch.test_weights + prefix0[k]) / total_w
    mask = stats <= levels.gamma
    if levels.gamma > levels.alpha:
        for j in np.flatnonzero(mask):
            _, ok = _stat_and_interval(batch, j, levels)
            mask[j] = mask[j] and ok
    return mask
