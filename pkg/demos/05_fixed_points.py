"""Fixed points of the limit system and their stability.

At beta = 4 the Example model has the symmetric point and two ordered
points; weak coupling leaves only the symmetric one.
"""
import numpy as np

from blockgibbs import example_model, find_all_fixed_points
from blockgibbs.fixed_points import summary_line

pts = find_all_fixed_points(example_model(beta=4.0), n_starts=200, seed=0)
print(summary_line(pts))
for p in pts:
    print(f"  {p.classification:8s} state-1 {np.round(p.point[:, 0], 4)}  F = {p.F_value:.5f}  "
          f"eigenvalue real parts {np.round(p.eigen_real_parts, 3)}")

# A coarse sweep in beta shows where the ordered points appear.
for beta in (0.5, 1.0, 1.5, 2.0, 3.0, 4.0):
    found = find_all_fixed_points(example_model(beta=beta), n_starts=40, seed=1)
    print(f"beta = {beta:3.1f}: {summary_line(found)}")
