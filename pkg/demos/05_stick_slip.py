"""Poke at the belt-driven friction oscillator.

First a trajectory and its sticking time, then the largest Lyapunov
exponent across a sweep of forcing frequencies. Positive exponents mark
chaotic response; values near zero are quasi-periodic, so the 0/1 label
flickers there.
"""

import numpy as np

from artifact.dynamics import OscillatorParams, chaos_label, integrate, largest_lyapunov, sticking_time

p = OscillatorParams(Omega=0.6)
tr = integrate(p, t_end=60.0, t_eval=np.linspace(0, 60, 7))
print("X(t):", np.round(tr.X, 4))
print(f"sticking time in [150, 250]: {sticking_time(p):.2f}")

for om in np.linspace(0.2, 2.0, 7):
    lam = largest_lyapunov(OscillatorParams(Omega=om))
    print(f"Omega {om:4.2f}: LLE {lam:+.4f}  label {chaos_label(lam)}")
