"""Truncation error maps on the element that holds the Gaussian peak.

Builds the three estimators from one P=(5,5) reference and compares them
with the exact truncation error along the N1 = 4 row, where the
high-order extrapolation should follow the curve and the iso-line
extrapolation keeps falling after the exact error has levelled off.

    python demos/peak_element_maps.py
"""
from dgtau.estimation import directional_series, exact_tau, full_product_estimates
from dgtau.maps import build_map_full_product, build_map_high_order, build_map_low_order
from dgtau.mesh import build_cartesian_mesh
from dgtau.operator import ISOLATED, NON_ISOLATED, count_evaluations, exact_solution
from dgtau.solver import solve_steady

mesh = build_cartesian_mesh(4, 4, (5, 5))
Q, rep = solve_steady(mesh, exact_solution(mesh), tolerance=1e-10)
eid = mesh.locate(0.5, 0.5)
print(f"reference converged in {rep.iterations} iterations; peak element {eid}")

for flavor in (NON_ISOLATED, ISOLATED):
    with count_evaluations() as directional:
        s1, s2 = directional_series(Q, mesh, eid, flavor)
    with count_evaluations() as product:
        inner = build_map_full_product(full_product_estimates(Q, mesh, eid, flavor))
    high = build_map_high_order(s1, s2, 10)
    low = build_map_low_order(inner, (5, 5), 10)
    print(f"\n{flavor.name.lower()}: {directional.count} operator evaluations for the "
          f"directional series, {product.count} for the full product")
    print(" N2      exact   high-order    low-order")
    for n2 in range(1, 11):
        ex = exact_tau(mesh, eid, (4, n2), flavor).value_inf
        print(f"{n2:3d}  {ex:9.3e}    {high[(4, n2)]:9.3e}    {low[(4, n2)]:9.3e}")
