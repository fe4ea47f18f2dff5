"""Borrow a cheap low-fidelity model to fix a sparse high-fidelity one.

Four expensive Forrester samples are not enough for ordinary Kriging to
see the dip near x = 0.75. Seven samples of the cheap linear-transformed
variant carry the shape; hierarchical Kriging uses the low-fidelity
prediction as its trend and only has to learn a scale factor.
"""

import numpy as np

from artifact.benchfns import get_problem
from artifact.designspace import Dataset
from artifact.gpcore import fit
from artifact.multifidelity import fit_hk

p = get_problem("forrester")
hx = np.array([[0.0], [0.4], [0.6], [1.0]])
lx = np.array([[0.0], [0.1], [0.4], [0.6], [0.75], [0.9], [1.0]])
hf = Dataset(hx, p.hf(hx), p.domain)
lf = Dataset(lx, p.lf(lx), p.domain)

ok = fit(hf)
hk = fit_hk(lf, hf)

G = np.linspace(0, 1, 501).reshape(-1, 1)
truth = p.hf(G)
for name, m in (("ordinary", ok), ("hierarchical", hk)):
    err = m.predict_mean(G) - truth
    print(f"{name:>12}: RMSE {np.sqrt(np.mean(err ** 2)):.3f}, worst {np.max(np.abs(err)):.3f}")
print(f"scale factor on the LF trend: {hk.mu_hf:.3f}")
