"""Fit an ordinary Kriging model to the Forrester function and look at it.

We start from eight evenly spaced points, endpoints included, let particle
swarm pick the correlation length, then compare predictions
and 95% intervals against the truth on a handful of probe points. The
closed-form leave-one-out error comes for free at the end.

Swap in tplhd(8, 1) to see a failure mode. Its cell-centred points miss
the steep rise at x = 1, the samples look like noise to the likelihood,
and the optimum correlation length collapses so the mean goes flat.
"""

import numpy as np

from artifact.benchfns import get_problem
from artifact.designspace import Dataset, denormalize
from artifact.gpcore import confidence_interval, fit, gmse, q2

problem = get_problem("forrester")
Z = np.linspace(0, 1, 8).reshape(-1, 1)
data = Dataset(Z, problem.hf(denormalize(Z, problem.domain)), problem.domain)

model = fit(data)
print(f"theta = {model.theta[0]:.4f}, sigma2 = {model.sigma2:.4f}")

print("\n    x     truth      mean    95% interval")
for x in np.linspace(0, 1, 9):
    p = model.predict_one([x])
    lo, hi = confidence_interval(p)
    truth = problem.hf(np.array([[x]]))[0]
    print(f"{x:5.3f} {truth:9.3f} {p.mean:9.3f}   [{lo:7.3f}, {hi:7.3f}]")

# the interval collapses at the samples
print("\nvariance at the design points:", np.round(model.predict(Z)[1], 12))
print(f"LOO GMSE {gmse(model):.4f}, Q2 {q2(model):.4f}")
