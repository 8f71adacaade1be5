"""Where positive states exist: multistart evidence on a frequency grid.

For mu = (1, 2) and beta = 1.5, beta lies between the self-interaction
strengths.  The run records, for each lam, whether k randomized Newton starts
find a positive state; every 'no-solution-evidence' cell keeps its failed
attempts and their seeds.

Run:  python demos/existence_map.py
"""

import numpy as np

from coupled_nls.regions import map_frequency_plane

mu1, mu2, beta = 1.0, 2.0, 1.5
cells = map_frequency_plane(mu1, mu2, beta, lam_grid=np.geomspace(0.05, 20.0, 9), k=6, seed=1)
for cell in cells:
    ev = cell.evidence
    extra = ""
    if cell.state is not None:
        extra = f"|u|/|v| = {cell.state.rho:.4g}"
    else:
        outcomes = sorted({rec["outcome"] for rec in ev["records"]})
        extra = "attempts ended as: " + ", ".join(outcomes)
    print(f"lam = {cell.value:8.4g}  {cell.verdict:22s} {extra}")
