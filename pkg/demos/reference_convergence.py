"""Solve the manufactured case at uniform orders and watch the error fall.

The N=5 solve is the reference every other demo starts from; it takes
roughly fifteen seconds. The lower orders are quick.

    python demos/reference_convergence.py
"""
import numpy as np

from dgtau.maps import fit_loglinear
from dgtau.mesh import build_cartesian_mesh
from dgtau.operator import exact_solution
from dgtau.solver import discretization_error, solve_steady

rows = []
for n in range(2, 6):
    mesh = build_cartesian_mesh(4, 4, (n, n))
    Q, rep = solve_steady(mesh, exact_solution(mesh), tolerance=1e-10)
    err = discretization_error(Q, mesh)
    rows.append((n, err.l2))
    print(f"N={n}: {rep.iterations:5d} iterations, residual {rep.final_residual_inf:.1e}, "
          f"L2 error {err.l2:.3e}, max error {err.linf:.3e}")

fit = fit_loglinear(rows)
# a straight line in log10(error) against N is spectral convergence
print(f"log10 error falls {-fit.slope:.2f} per order (r^2 = {fit.r_squared:.3f})")
print(f"error ratio N=2 to N=5: {rows[0][1] / rows[-1][1]:.0f}x, "
      f"{np.log10(rows[0][1] / rows[-1][1]):.1f} decades")
