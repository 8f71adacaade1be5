"""Follow a branch of positive states in lam and rescale one to prescribed masses.

With mu1 = mu2 = 1 and beta = 2, the branch leaving the first semitrivial
family near lam = 0.137 sweeps |u|/|v| from about 100 down to 1e-3 and lands
on the second family near lam = 7.29.

Run:  python demos/branch_and_normalization.py   (a few seconds)
"""

import numpy as np

from coupled_nls.continuation import endpoint_extrapolation, normalized_solution, ratio_range
from coupled_nls.spectral import curves, ell

beta = 2.0
c = curves(1.0, 1.0, lam_grid=np.geomspace(1e-3, 1e3, 81))
print(f"bifurcation points: ell1 = {ell(1, beta, c):.6f}, ell2 = {ell(2, beta, c):.6f}")

sol, branch = normalized_solution(c, beta, a=2.0, b=1.0)
lo, hi = ratio_range(branch)
print(f"\nbranch from {branch.origin}: {len(branch)} points, ends with '{branch.termination}'")
print(f"  |u|/|v| covers [{lo:.3g}, {hi:.3g}]")
end = endpoint_extrapolation(branch)
if end:
    print(f"  component {end['component']} vanishes near lam = {end['lambda']:.6f}")

print("\nsample points (lam, |u|/|v|)")
for p in branch.points[:: max(1, len(branch) // 8)]:
    print(f"  {p.lam:10.6f}  {p.rho:12.6g}")

d = sol.diagnostics
print("\nnormalized solution with |u| = 2, |v| = 1")
print(f"  lam1 = {sol.lam1:.10f}, lam2 = {sol.lam2:.10f}")
print(f"  masses {d['mass_u']:.12f}, {d['mass_v']:.12f}")
print(f"  residual {d['residual_inf']:.2e}")
