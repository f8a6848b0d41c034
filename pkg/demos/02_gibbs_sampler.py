"""The N-particle Metropolis chain and its Gibbs law.

On a tiny system every configuration can be listed, so the stationary law
is known exactly and the simulated chain can be checked against it.
"""
import numpy as np

from blockgibbs import Configuration, detailed_balance_check, exact_stationary, example_model
from blockgibbs.finite_system import configuration_space_walk, occupation_frequencies

spec = example_model(class_size=1)       # two blocks, one node per class: N = 4
pi = exact_stationary(spec)
print(f"{len(pi)} configurations; detailed-balance residual {detailed_balance_check(spec):.1e}")

# Walk the configuration space for a long time and record where the chain sits.
T = 20000.0
times, idx = configuration_space_walk(spec, Configuration([1, 1, 1, 1]), T, seed=1)
freq = occupation_frequencies(spec, times, idx, T)
print(f"{len(times) - 1} jumps")
print(" config   exact   simulated")
for k in np.argsort(-pi)[:6]:
    states = np.unravel_index(k, (2,) * 4)
    print(f"  {''.join(str(s + 1) for s in states)}   {pi[k]:.4f}  {freq[k]:.4f}")

# The kernel charges every disagreeing interacting pair, so the two fully
# aligned configurations carry the most mass.
