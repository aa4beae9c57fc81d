"""
Fitting the estimators
======================

Every method learns mu_hat(b, x) from factual data only. Here each one is fit
on the same biased dataset and scored against the hidden ground truth. The
network grids are shrunk so the script finishes in under a minute.
"""

from bidlab import synthdata as sd
from bidlab.estimators import METHODS, fit_method
from bidlab.evaluation import BidGrid, evaluate

cov = sd.synthesize_covariates(n=2000, d=13, n_dummy=4, seed=0)
truth = sd.draw_ground_truth(sd.STACKED_SIGMOID, cov, seed=1)
data = sd.generate_dataset(cov, truth, sd.draw_bias(10.0, cov, seed=2), seed=3)
parts = sd.split(data, seed=4)
grid = BidGrid.from_bids(parts.train.bids)  # evaluate only where bids were observed

quick = {"width": [32], "batch_size": [64], "steps": [500, 1000], "learning_rate": [0.01]}
grids = {
    "random_forest": {"n_trees": [100], "max_depth": [None, 10]},
    "mlp": quick,
    "drnet": dict(quick, strata=[10]),
    "vcnet": quick,
}

print(f"{'method':<14} {'MISE':>7} {'MISE-R':>7} {'PE':>7} {'Brier':>7}   chosen")
for method in METHODS:
    model = fit_method(method, parts.train, parts.validation, grids.get(method), seed=5)
    rep = evaluate(model, parts.test, truth, grid)
    cells = ["n.a." if v is None else f"{v:.4f}" for v in (rep.mise, rep.mise_r, rep.pe, rep.bs)]
    print(f"{method:<14} " + " ".join(f"{c:>7}" for c in cells) + f"   {model.chosen_hyperparameters}")

# %%
# With a couple of thousand noisy 0/1 outcomes the networks start to memorize
# within a few hundred steps; keeping the best validation checkpoint is what
# stops them from drifting further.
#
# Naive pricing has no response curve: it just repeats the historical bid,
# so only its policy error is defined.
