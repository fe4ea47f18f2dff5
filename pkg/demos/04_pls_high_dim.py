"""Fit a 10-D Kriging model through a 4-component PLS projection.

With ten inputs the likelihood search runs over ten correlation lengths;
projecting onto four PLS directions leaves only four, so the swarm needs
far fewer likelihood evaluations. Each evaluation costs more, though: the
kernel is a product over components of weighted full-dimensional distances.
On a single run the two wall times can come out close; over several seeds
the reduced model fits faster, at some cost in accuracy.
"""

import time

import numpy as np

from artifact.benchfns import get_problem
from artifact.designspace import Dataset, denormalize, tplhd
from artifact.gpcore import OptimizerConfig, fit
from artifact.metrics import compute_metrics
from artifact.plsreduce import fit_plsok

p = get_problem("wong10")
Z = tplhd(150, 10)
data = Dataset(Z, p.hf(denormalize(Z, p.domain)), p.domain)
test = np.random.default_rng(3).random((2000, 10))
truth = p.hf(denormalize(test, p.domain))
cfg = OptimizerConfig(particles_per_dim=10, iters_per_dim=10, polish_sweeps=10)

for label, build in (("PLS-OK h=4", lambda: fit_plsok(data, 4, cfg)), ("OK", lambda: fit(data, optimizer=cfg))):
    t = time.perf_counter()
    model = build()
    dt = time.perf_counter() - t
    rep = compute_metrics(truth, model.predict_mean(test))
    print(f"{label:>11}: fit {dt:6.2f}s  RMSE {rep.rmse:.3f}  R2 {rep.r2:.3f}")
