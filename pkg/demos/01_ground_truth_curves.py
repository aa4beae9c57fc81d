"""
Ground-truth bid-response curves
================================

Two families of decreasing acceptance curves, one per customer. Each curve
starts near 1 for a free loan and falls off as the offered rate rises.
"""

import numpy as np

from bidlab import synthdata as sd

# A small covariate matrix: 9 Gaussian columns plus 4 binary ones.
cov = sd.synthesize_covariates(n=500, d=13, n_dummy=4, seed=0)
bids = np.linspace(0.0, 1.0, 11)

# %%
# Richards curves have a plateau, a drop around ``delta`` and a floor.
# Five customers, five different shapes.
richards = sd.draw_ground_truth(sd.RICHARDS, cov, seed=1)
print("Richards, first five customers")
print("b     " + " ".join(f"{b:5.1f}" for b in bids))
for i, row in enumerate(richards.curves(bids, cov.values[:5])):
    print(f"x[{i}]  " + " ".join(f"{p:5.3f}" for p in row))

# %%
# The parameters behind those curves.
alpha, beta, gamma, delta = richards.curve_parameters(cov.values[:5])
for name, v in zip(("alpha", "beta", "gamma", "delta"), (alpha, beta, gamma, delta)):
    print(f"{name:>6}: " + " ".join(f"{p:5.3f}" for p in v))

# %%
# Stacked sigmoids add a second step, so a curve can fall twice.
stacked = sd.draw_ground_truth(sd.STACKED_SIGMOID, cov, seed=1)
print("\nStacked sigmoid, first five customers")
for i, row in enumerate(stacked.curves(bids, cov.values[:5])):
    print(f"x[{i}]  " + " ".join(f"{p:5.3f}" for p in row))

# %%
# Every curve is non-increasing in the bid.
fine = np.linspace(0.0, 1.0, 65)
worst = max(np.diff(t.curves(fine, cov.values), axis=1).max() for t in (richards, stacked))
print(f"\nlargest upward step over 500 customers x 64 intervals: {worst:.2e}")
