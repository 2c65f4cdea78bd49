"""E-values for selective deployment-risk (SDR) control.

Each test point ``j`` receives a risk-adjusted e-value built from the pooled
calibration/test scores: a score cutoff is calibrated so that a plug-in
estimate of the selective risk stays below ``gamma``, and the e-value is the
infimum over candidate risk values ``ell in [0, 1]`` of

    (n + 1) * 1{s_j <= t_j(ell)}
    ---------------------------------------------------------
    ell * 1{s_j <= t_j(ell)} + sum_i L_i * 1{s_i <= t_j(ell)}

where ``t_j(ell)`` is the largest pooled score whose estimated selective risk

    FR_j(t; ell) = [ell * 1{s_j <= t} + sum_i L_i 1{s_i <= t}]
                   / (1 + #{other test points <= t}) * m / (n + 1)

does not exceed ``gamma``.  Feeding these e-values to the eBH filter (see
:mod:`score_kit.selection`) controls the SDR at the target level in finite
samples, for any score function.

Under covariate shift with weights ``w``, the same construction applies with
every calibration term weighted by ``w_i``, ``n + 1`` replaced by
``w_j + sum_i w_i``, and the ``ell`` term weighted by ``w_j``.

:func:`sdr_evalues` / :func:`weighted_sdr_evalues` compute the infimum
exactly in ``O((n+m) m + (n+m) log(n+m))`` by reducing the continuous search
over ``ell`` to the finite breakpoint set where the threshold map changes
value.  :func:`sdr_evalues_oracle` / :func:`weighted_sdr_evalues_oracle` are
deliberately separate brute-force transcriptions used for verification, and
:func:`sdr_evalues_conservative` implements a simpler, slightly conservative
variant that avoids the infimum altogether.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ValidatedBatch, validate_batch

__all__ = [
    "SdrEvalueSet",
    "sdr_evalues",
    "weighted_sdr_evalues",
    "sdr_evalues_oracle",
    "weighted_sdr_evalues_oracle",
    "sdr_evalues_conservative",
    "sdr_evalues_at",
]


@dataclass(frozen=True)
class SdrEvalueSet:
    """Per-test-point e-values plus threshold diagnostics.

    ``thresholds_at_0[j]`` / ``thresholds_at_1[j]`` are the score cutoffs
    ``t_j(0)`` / ``t_j(1)`` at the endpoints of the candidate-risk interval;
    ``nan`` means no pooled score was feasible.  ``evalues[j]`` is zero
    whenever the test score exceeds ``thresholds_at_1[j]``.
    """

    evalues: np.ndarray
    thresholds_at_0: np.ndarray
    thresholds_at_1: np.ndarray

    def __post_init__(self) -> None:
        for a in (self.evalues, self.thresholds_at_0, self.thresholds_at_1):
            a.flags.writeable = False


def _require_unit_weights(batch: ValidatedBatch, name: str) -> None:
    if not batch.has_unit_weights:
        raise ValueError(f"{name} is the unweighted path; use the weighted_ variant for non-unit weights")


def _tied_prefix(sorted_vals: np.ndarray, contrib: np.ndarray) -> np.ndarray:
    """Inclusive prefix sums over a sorted array where tied values share the
    final value of their tie group (a vectorized backward pass)."""
    raw = np.cumsum(contrib)
    last = np.searchsorted(sorted_vals, sorted_vals, side="right") - 1
    return raw[last]


def _sdr_kernel(batch: ValidatedBatch, gamma: float):
    """Exact e-values via the breakpoint reduction, shared by the unweighted
    and weighted paths (unit weights recover the exchangeable formulas).

    Returns ``(evalues, t0, t1)`` with ``nan`` marking absent thresholds.
    """
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    n, m = batch.n, batch.m
    pooled = np.concatenate([batch.calib_scores, batch.test_scores])
    order = np.argsort(pooled, kind="stable")
    vals = pooled[order]
    is_test = np.zeros(n + m, dtype=bool)
    is_test[n:] = True
    is_test = is_test[order]
    risk_contrib = np.concatenate([batch.calib_weights * batch.calib_risks, np.zeros(m)])[order]

    # A[i] = sum of weighted calibration risks with score <= vals[i];
    # ntest[i] = number of test scores <= vals[i].  Ties share prefix values.
    A = _tied_prefix(vals, risk_contrib)
    ntest = _tied_prefix(vals, is_test.astype(float))
    calib_wsum = float(np.sum(batch.calib_weights))

    evalues = np.zeros(m)
    t0_arr = np.full(m, np.nan)
    t1_arr = np.full(m, np.nan)

    for j in range(m):
        sj = batch.test_scores[j]
        wj = batch.test_weights[j]
        total_w = calib_wsum + wj
        covers = vals >= sj                      # 1{s_j <= t}
        denom = 1.0 + ntest - covers             # 1 + #{other tests <= t}, always >= 1
        factor = m / total_w
        fr0 = A / denom * factor
        fr1 = (A + wj * covers) / denom * factor
        feas0 = fr0 <= gamma
        feas1 = fr1 <= gamma

        idx0 = np.flatnonzero(feas0)
        if idx0.size:
            t0_arr[j] = vals[idx0[-1]]
        idx1 = np.flatnonzero(feas1)
        if idx1.size == 0:
            continue               # no threshold at ell = 1 -> e-value 0
        i1 = idx1[-1]
        t1 = vals[i1]
        t1_arr[j] = t1
        if sj > t1:
            continue               # test score never covered -> e-value 0
        if t0_arr[j] == t1:
            evalues[j] = total_w / (wj + A[i1])
            continue

        # Candidate thresholds between t(1) and t(0):  ell_bar(t) solves
        # FR_j(t; ell) = gamma; a threshold is attained by some ell only if
        # no strictly larger feasible threshold has a larger ell_bar.
        ell_bar = (gamma * total_w * denom / m - A) / wj
        cand = np.where(feas0, ell_bar, -np.inf)
        suffix = np.maximum.accumulate(cand[::-1])[::-1]
        nxt = np.searchsorted(vals, vals, side="right")
        larger_best = np.where(nxt < n + m, suffix[np.minimum(nxt, n + m - 1)], -np.inf)
        keep = feas0 & (vals >= t1) & (vals <= t0_arr[j]) & (ell_bar >= larger_best)
        keep |= (vals == t1) & feas0   # t(1) is always attained (ell_bar >= 1 there)
        ell = np.clip(ell_bar[keep], 0.0, 1.0)   # ell is a risk value in [0, 1]
        denom_e = wj * ell + A[keep]
        with np.errstate(divide="ignore"):
            evalues[j] = float(np.min(np.where(denom_e > 0.0, total_w / denom_e, np.inf)))

    return evalues, t0_arr, t1_arr


def sdr_evalues(calib, tests, gamma: float) -> SdrEvalueSet:
    """Exact SDR e-values for exchangeable data (unit weights).

    Parameters
    ----------
    calib : sequence of CalibSample / (score, risk) pairs, or ValidatedBatch
    tests : sequence of TestPoint / bare scores
    gamma : float
        Internal calibration level; set equal to the eBH target level for
        maximum power.

    Returns
    -------
    SdrEvalueSet
        One e-value per test point, exactly equal to the defining infimum.
    """
    batch = validate_batch(calib, tests)
    _require_unit_weights(batch, "sdr_evalues")
    ev, t0, t1 = _sdr_kernel(batch, gamma)
    return SdrEvalueSet(ev, t0, t1)


def weighted_sdr_evalues(calib, tests, gamma: float) -> SdrEvalueSet:
    """Exact SDR e-values under covariate shift, using the weights carried by
    the calibration samples and test points.  With unit weights this reduces
    to :func:`sdr_evalues` exactly."""
    batch = validate_batch(calib, tests)
    ev, t0, t1 = _sdr_kernel(batch, gamma)
    return SdrEvalueSet(ev, t0, t1)


# ---------------------------------------------------------------------------
# Brute-force oracles.  These transcribe the defining infimum directly:
# for every candidate ell, scan all pooled thresholds for the largest
# feasible one and evaluate the objective.  They share no code with the
# kernel above and exist to verify it.
# ---------------------------------------------------------------------------

# Feasibility guard: the infimum is attained at breakpoints where the
# estimated risk equals gamma exactly in real arithmetic; the guard keeps
# those boundary thresholds feasible under floating-point rounding.
_BOUNDARY_TOL = 1e-12


def _oracle_ell_candidates(grid_size: int, breakpoints: np.ndarray, ell_set) -> np.ndarray:
    if ell_set is not None:
        ells = np.asarray(sorted(set(float(x) for x in ell_set)), dtype=float)
        if ells.size == 0:
            raise ValueError("ell_set must be non-empty")
        return ells
    if grid_size < 2:
        raise ValueError(f"ell_grid_size must be >= 2, got {grid_size!r}")
    grid = np.linspace(0.0, 1.0, grid_size)
    bp = breakpoints[np.isfinite(breakpoints)]
    bp = np.clip(bp, 0.0, 1.0)
    return np.unique(np.concatenate([grid, [0.0, 1.0], bp]))


def _weighted_sdr_evalue_oracle_one(batch: ValidatedBatch, j: int, gamma: float,
                                    ell_grid_size: int, ell_set) -> float:
    m = batch.m
    sj = batch.test_scores[j]
    wj = batch.test_weights[j]
    total_w = wj + float(np.sum(batch.calib_weights))
    pooled = np.concatenate([batch.calib_scores, batch.test_scores])
    thresholds = np.unique(pooled)

    # Sums at every threshold by direct comparison (no prefix machinery).
    calib_below = batch.calib_scores[None, :] <= thresholds[:, None]
    wl_sum = calib_below @ (batch.calib_weights * batch.calib_risks)
    others = np.delete(batch.test_scores, j)
    n_other = np.sum(others[None, :] <= thresholds[:, None], axis=1)
    covers = (sj <= thresholds).astype(float)

    breakpoints = (gamma * total_w * (1.0 + n_other) / m - wl_sum) / wj
    ells = _oracle_ell_candidates(ell_grid_size, breakpoints, ell_set)

    best = np.inf
    for ell in ells:
        fr = (wj * ell * covers + wl_sum) / (1.0 + n_other) * (m / total_w)
        feasible = np.flatnonzero(fr <= gamma + _BOUNDARY_TOL)
        if feasible.size == 0:
            return 0.0
        t = thresholds[feasible[-1]]
        if sj > t:
            return 0.0
        denom = wj * ell + wl_sum[feasible[-1]]
        value = total_w / denom if denom > 0.0 else np.inf
        best = min(best, value)
    return float(best)


def sdr_evalues_oracle(calib, tests, gamma: float, ell_grid_size: int = 1001,
                       ell_set=None) -> SdrEvalueSet:
    """Brute-force SDR e-values: per test point, minimize the defining
    objective over a uniform candidate-risk grid augmented with the
    closed-form breakpoints of the threshold map (so the infimum over the
    whole interval is attained exactly).

    ``ell_set`` restricts the infimum to an explicit finite set of attainable
    risk values instead (e.g. ``{0, 1}`` for binary risks), in which case the
    grid is not used.
    """
    batch = validate_batch(calib, tests)
    _require_unit_weights(batch, "sdr_evalues_oracle")
    return weighted_sdr_evalues_oracle(batch, None, gamma, ell_grid_size, ell_set)


def weighted_sdr_evalues_oracle(calib, tests, gamma: float, ell_grid_size: int = 1001,
                                ell_set=None) -> SdrEvalueSet:
    """Weighted analogue of :func:`sdr_evalues_oracle`."""
    if not gamma > 0.0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    batch = validate_batch(calib, tests)
    ev = np.array([
        _weighted_sdr_evalue_oracle_one(batch, j, gamma, ell_grid_size, ell_set)
        for j in range(batch.m)
    ])
    t0 = np.array([_oracle_threshold(batch, j, gamma, 0.0) for j in range(batch.m)])
    t1 = np.array([_oracle_threshold(batch, j, gamma, 1.0) for j in range(batch.m)])
    return SdrEvalueSet(ev, t0, t1)


def _oracle_threshold(batch: ValidatedBatch, j: int, gamma: float, ell: float) -> float:
    m = batch.m
    sj = batch.test_scores[j]
    wj = batch.test_weights[j]
    total_w = wj + float(np.sum(batch.calib_weights))
    thresholds = np.unique(np.concatenate([batch.calib_scores, batch.test_scores]))
    calib_below = batch.calib_scores[None, :] <= thresholds[:, None]
    wl_sum = calib_below @ (batch.calib_weights * batch.calib_risks)
    others = np.delete(batch.test_scores, j)
    n_other = np.sum(others[None, :] <= thresholds[:, None], axis=1)
    covers = (sj <= thresholds).astype(float)
    fr = (wj * ell * covers + wl_sum) / (1.0 + n_other) * (m / total_w)
    feasible = np.flatnonzero(fr <= gamma + _BOUNDARY_TOL)
    return float(thresholds[feasible[-1]]) if feasible.size else np.nan


def sdr_evalues_at(calib, tests, gamma: float, ell: float) -> np.ndarray:
    """Evaluate the SDR e-value objective at a single fixed candidate risk
    ``ell`` (no infimum).  ``ell = 1`` gives the variant that, for binary
    risks with ``gamma`` equal to the eBH level, makes eBH selection coincide
    with BH on clipped conformal p-values."""
    batch = validate_batch(calib, tests)
    if not (0.0 <= ell <= 1.0):
        raise ValueError(f"ell must lie in [0, 1], got {ell!r}")
    out = np.empty(batch.m)
    for j in range(batch.m):
        t = _oracle_threshold(batch, j, gamma, ell)
        sj = batch.test_scores[j]
        wj = batch.test_weights[j]
        if np.isnan(t) or sj > t:
            out[j] = 0.0
            continue
        covered = batch.calib_scores <= t
        denom = wj * ell + float(np.sum(batch.calib_weights[covered] * batch.calib_risks[covered]))
        total_w = wj + float(np.sum(batch.calib_weights))
        out[j] = total_w / denom if denom > 0.0 else np.inf
    return out


# ---------------------------------------------------------------------------
# Conservative construction: replaces the per-point infimum by a pair of
# stopping-time thresholds, trading a little power for simplicity.
# ---------------------------------------------------------------------------

def sdr_evalues_conservative(calib, tests, alpha: float) -> SdrEvalueSet:
    """Simpler, slightly conservative SDR e-values.

    For each test point ``j``,

        e_j = 1{s_j <= t_hat_j} / #{test scores <= t_tilde} * m / alpha,

    where ``t_hat_j`` is the largest pooled score whose estimated selective
    risk (counting the test point's own risk as 1) stays below ``alpha`` and
    ``t_tilde`` is its analogue without the test term.  The e-value is zero
    when ``t_hat_j`` does not exist or no test score falls below ``t_tilde``.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    batch = validate_batch(calib, tests)
    _require_unit_weights(batch, "sdr_evalues_conservative")
    n, m = batch.n, batch.m

    thresholds = np.unique(np.concatenate([batch.calib_scores, batch.test_scores]))
    calib_below = batch.calib_scores[None, :] <= thresholds[:, None]
    risk_sum = calib_below @ batch.calib_risks
    test_count = np.sum(batch.test_scores[None, :] <= thresholds[:, None], axis=1)

    def largest_feasible(numerator: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(test_count > 0, numerator / np.maximum(test_count, 1),
                             np.where(numerator > 0, np.inf, 0.0))
        fr = ratio * (m / (n + 1.0))
        feasible = np.flatnonzero(fr <= alpha)
        return float(thresholds[feasible[-1]]) if feasible.size else np.nan

    t_tilde = largest_feasible(risk_sum)
    denom_count = int(np.sum(batch.test_scores <= t_tilde)) if not np.isnan(t_tilde) else 0

    evalues = np.zeros(m)
    t_hat = np.full(m, np.nan)
    for j in range(m):
        sj = batch.test_scores[j]
        t_hat[j] = largest_feasible(risk_sum + (sj <= thresholds))
        if np.isnan(t_hat[j]) or sj > t_hat[j] or denom_count == 0:
            continue
        evalues[j] = (m / alpha) / denom_count

    t_tilde_arr = np.full(m, t_tilde)
    return SdrEvalueSet(evalues, t_tilde_arr, t_hat)
