"""Controlling the average risk among the predictions you keep.

Walkthrough: with many test points at once, controlling the average risk per
deployed point (rather than the total) calls for e-values plus the eBH
step-up filter.  Boosting the e-values with uniform draws can only enlarge
the kept set, without losing the guarantee; this script shows all three
variants side by side with their realized average risks.
"""

import numpy as np

import score_kit as sk

rng = np.random.default_rng(7)
setting = sk.DgpSetting(1)
risk = sk.canonical_risk(1)
alpha = 0.3

train_x, train_y = sk.generate_dataset(setting, 1000, rng)
calib_x, calib_y = sk.generate_dataset(setting, 800, rng)
test_x, test_y = sk.generate_dataset(setting, 100, rng)

model = sk.knn_fit(train_x, sk.risk_of(risk, 0.0, train_y), k=25)
calib = list(zip(sk.knn_predict(model, calib_x), sk.risk_of(risk, 0.0, calib_y)))
test_scores = list(sk.knn_predict(model, test_x))
true_test_risk = sk.risk_of(risk, 0.0, test_y)

# Exact e-values; the diagnostics expose the calibrated score cutoffs.
evset = sk.sdr_evalues(calib, test_scores, gamma=alpha)
positive = int((evset.evalues > 0).sum())
print(f"e-values: {positive} of {len(test_scores)} positive, "
      f"largest {evset.evalues.max():.2f}")

variants = {
    "plain eBH": sk.ebh(evset.evalues, alpha),
    "heterogeneous boost": sk.boost_hete(evset.evalues, alpha,
                                         1.0 - rng.uniform(size=len(test_scores))),
    "homogeneous boost": sk.boost_homo(evset.evalues, alpha, 1.0 - float(rng.uniform())),
}

print(f"\ntarget average risk per deployed point: {alpha}")
for name, result in variants.items():
    sdr, _, _ = sk.compute_metrics(result, true_test_risk, np.ones_like(true_test_risk))
    print(f"{name:22s} kept {len(result.selected):3d}  realized avg risk {sdr:.4f}")

# The simpler conservative construction trades a little power for a
# grid-free formula.
cons = sk.sdr_evalues_conservative(calib, test_scores, alpha=alpha)
kept = sk.ebh(cons.evalues, alpha).selected
print(f"{'conservative variant':22s} kept {len(kept):3d}")
