"""
From curves to prices
=====================

Expected revenue of a bid is ``b * mu(b, x)``. The revenue-optimal bid is the
grid point maximizing it; the policy error compares that bid under a fitted
model with the bid under the true curve.
"""

import numpy as np

from bidlab import synthdata as sd
from bidlab.estimators import OracleModel, fit_logistic, fit_naive
from bidlab.evaluation import BidGrid, optimal_bid, optimal_bids, policy_error

cov = sd.synthesize_covariates(n=2000, d=13, n_dummy=4, seed=0)
truth = sd.draw_ground_truth(sd.RICHARDS, cov, seed=1)
data = sd.generate_dataset(cov, truth, sd.draw_bias(5.0, cov, seed=2), seed=3)
parts = sd.split(data, seed=4)
grid = BidGrid.from_bids(parts.train.bids)

# %%
# One customer, by hand.
x = parts.test.x[0]
best = optimal_bid(lambda b: truth.response(b, x)[0], grid)
print(f"customer 0: optimal bid {best:.3f}, acceptance there {truth.response(best, x)[0]:.3f}, "
      f"historical bid {parts.test.bids[0]:.3f}")

# %%
# A whole test set.
logistic = fit_logistic(parts.train)
true_best = optimal_bids(OracleModel(truth), parts.test.x, grid)
model_best = optimal_bids(logistic, parts.test.x, grid)
print(f"mean optimal bid: truth {true_best.mean():.3f}, logistic {model_best.mean():.3f}")

for name, model in (("oracle", OracleModel(truth)), ("logistic", logistic),
                    ("naive", fit_naive(parts.train))):
    print(f"policy error {name:<9} {policy_error(model, parts.test, truth, grid):.4f}")

# %%
# Ties go to the lower bid.
print("flat revenue ->", optimal_bid(lambda b: 0.2 / max(b, 1e-9), np.array([0.3, 0.6, 0.9])))
