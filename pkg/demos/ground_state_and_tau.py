"""The scalar ground state and the weighted eigenvalue behind the coupling thresholds.

Run:  python demos/ground_state_and_tau.py
"""

import numpy as np

from coupled_nls.groundstate import ground_state_on, shooting_central_value
from coupled_nls.radial import make_grid
from coupled_nls.spectral import curves, tau, tau0

grid = make_grid(20.0, 2000)
gs = ground_state_on(grid)
print("ground state U of -Delta U + U = U^3 in R^3")
print(f"  U(0) on the grid      {gs.central_value:.10f}")
print(f"  U(0) by shooting      {shooting_central_value():.10f}")
print(f"  Sobolev constant S    {gs.sobolev_S:.10f}")
print(f"  |U|_2                 {gs.mass:.10f}")
print(f"  residual              {gs.residual:.2e}")

# tau(s): the smallest t with -Delta phi + s phi = t U^2 phi.  At s = 1 the
# ground state itself is an eigenfunction, so tau(1) = 1.
print("\ntau(s)")
for s in (0.01, 0.1, 1.0, 10.0):
    r = tau(s, gs=gs)
    print(f"  s = {s:6g}   tau = {r.tau:.10f}   residual {r.residual:.1e}")

t0 = tau0(gs)
print(f"\ntau(0) by extrapolation in the domain radius: {t0.value:.8f} +- {t0.error:.1e}")

# The two bifurcation curves for mu1 = mu2 = 1 cross at lam = 1.
c = curves(1.0, 1.0, lam_grid=np.geomspace(0.1, 10.0, 21), tau0_result=t0)
print(f"\ncurves(1, 1): crossing at lam* = {c.lam_star:.10f}, beta* = {c.beta_star:.10f}")
for lam, b1, b2 in list(zip(c.lam, c.beta1, c.beta2))[::5]:
    print(f"  lam = {lam:8.4g}   beta1 = {b1:.6f}   beta2 = {b2:.6f}")
