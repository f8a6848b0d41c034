"""From particles to the McKean-Vlasov ODE.

Simulate the Example model at growing N from the same initial proportions
and compare the replicate mean with the limit ODE.
"""
import numpy as np

from blockgibbs import example_model, integrate
from blockgibbs.experiments import lln_sweep

spec = example_model()
q0 = np.tile([0.8, 0.2], (4, 1))

ode = integrate(spec, q0, 50.0)
print("ODE state-1 coordinates at t = 50:", np.round(ode.values[-1, :, 0], 4))

for r in lln_sweep(spec, (100, 400, 1600), q0=q0, replicates=10, seed=0):
    print(f"N = {r.N:5d}: sup-in-time gap of the replicate mean {r.gap:.4f}, "
          f"median single-run gap {np.median(r.replicate_gaps):.4f}")
