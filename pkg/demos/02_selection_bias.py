"""
Bid selection bias
==================

Historical bids are drawn from a Beta distribution whose mode depends on the
customer. ``theta`` sets how tightly bids cluster around that mode: at 0 every
bid is uniform, at 20 the covariates almost dictate the bid.
"""

import numpy as np

from bidlab import synthdata as sd

cov = sd.synthesize_covariates(n=4000, d=13, n_dummy=4, seed=0)
truth = sd.draw_ground_truth(sd.RICHARDS, cov, seed=1)

print(" theta   corr(bid, mode)   bid sd   P(accept)")
for theta in (0.0, 2.5, 5.0, 10.0, 20.0):
    bias = sd.draw_bias(theta, cov, seed=2)
    data = sd.generate_dataset(cov, truth, bias, seed=3)
    r = np.corrcoef(data.bids, bias.phi(cov.values))[0, 1]
    print(f"{theta:6.1f}   {r:15.3f}   {data.bids.std():6.3f}   {data.outcomes.mean():9.3f}")

# %%
# With strong bias, a customer's bid says a lot about who they are, and the
# observed data cover only a thin band of each customer's curve.
# Counterfactual estimators have to extrapolate outside that band.
data = sd.generate_dataset(cov, truth, sd.draw_bias(20.0, cov, seed=2), seed=3)
parts = sd.split(data, seed=4)
print(f"\nsplit sizes: train {parts.train.n}, validation {parts.validation.n}, test {parts.test.n}")
