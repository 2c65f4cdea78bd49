"""Deciding when to trust a model, one prediction at a time.

Walkthrough: a regression model predicts outcomes on the first synthetic
benchmark process.  Deploying a prediction costs us whenever the outcome is
large (an "excess" risk).  We calibrate on labeled data and deploy test
predictions only while the marginal deployment risk stays below a budget.
The guarantee is an expectation over fresh draws, so the script averages the
realized risk over replicates and it lands just below each budget.
"""

import numpy as np

import score_kit as sk

setting = sk.DgpSetting(1)
risk = sk.canonical_risk(1)           # y * 1{y > 2} / 6, in [0, 1]
alphas = (0.05, 0.1, 0.2, 0.3)
reps = 50

realized = {a: [] for a in alphas}
deployed = {a: [] for a in alphas}
rng = np.random.default_rng(0)
for _ in range(reps):
    train_x, train_y = sk.generate_dataset(setting, 1000, rng)
    calib_x, calib_y = sk.generate_dataset(setting, 500, rng)
    test_x, test_y = sk.generate_dataset(setting, 200, rng)

    # Scores rank test points by predicted risk; any score function keeps the
    # guarantee, a better one just deploys more often.
    model = sk.knn_fit(train_x, sk.risk_of(risk, 0.0, train_y), k=25)
    batch = sk.validate_batch(
        list(zip(sk.knn_predict(model, calib_x), sk.risk_of(risk, 0.0, calib_y))),
        list(sk.knn_predict(model, test_x)))
    true_risk = sk.risk_of(risk, 0.0, test_y)

    for a in alphas:
        mask = sk.deploy_mask(batch, sk.Levels(a))
        realized[a].append(float(np.mean(true_risk * mask)))
        deployed[a].append(int(mask.sum()))

print(f"{'budget':>7s} {'deployed/200':>13s} {'realized risk':>14s}")
for a in alphas:
    print(f"{a:7.2f} {np.mean(deployed[a]):13.1f} {np.mean(realized[a]):14.4f}")

# The one-shot decision for a single candidate is a single comparison; the
# e-value behind it is available as a diagnostic.
calib = list(zip(batch.calib_scores, batch.calib_risks))
d = sk.mdr_decide(calib, float(batch.test_scores[0]), sk.Levels(0.2))
print(f"\nlast replicate, first test point: deploy={d.deploy}, "
      f"statistic={d.empirical_stat:.4f}, e-value={d.evalue_lower_bound:.2f}")
