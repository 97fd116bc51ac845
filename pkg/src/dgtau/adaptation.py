"""Order selection from truncation error maps and threshold sweeps."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .estimation import directional_series, exact_tau_all, full_product_estimates
from .maps import (DEFAULT_MAP_MAX, MapMethod, TauMap, build_map_full_product,
                   build_map_high_order, build_map_low_order, iso_line_fits)
from .mesh import Mesh, Orders, dof_count
from .operator import ISOLATED, NON_ISOLATED, Flavor, GlobalSolution, exact_solution
from .physics import AIR, AdmissibilityError, GasParameters

log = logging.getLogger(__name__)

PLAN_HEADER = ["element_id", "N1", "N2", "dofs", "predicted_tau"]


def default_thresholds(count: int = 13) -> np.ndarray:
    """``count`` values log-spaced over [1e-7, 1e-1]."""
    return np.logspace(-7, -1, count)


def select_orders(tau_map: TauMap, tau_max: float, n_min: int = 1,
                  n_max: int = DEFAULT_MAP_MAX) -> Orders:
    """Cheapest ``(N1, N2)`` in ``[n_min, n_max]^2`` whose map value is ``<= tau_max``.

    Ties go to the smaller ``max(N1, N2)``, then the smaller ``N1``. Falls
    back to ``(n_max, n_max)`` when no cell qualifies.
    """
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    if not 1 <= n_min <= n_max:
        raise ValueError(f"invalid order range [{n_min}, {n_max}]")
    if not tau_map.covers(n_min, n_max):
        raise ValueError(f"map does not cover [{n_min}, {n_max}]^2")
    best, best_key = None, None
    for n1 in range(n_min, n_max + 1):
        for n2 in range(n_min, n_max + 1):
            if tau_map[(n1, n2)] <= tau_max:
                key = (dof_count((n1, n2)), max(n1, n2), n1)
                if best_key is None or key < best_key:
                    best, best_key = (n1, n2), key
    return best if best is not None else (n_max, n_max)


def select_orders_low_order(inner: TauMap, reference: Orders, tau_max: float,
                            n_min: int = 1, n_max: int = DEFAULT_MAP_MAX) -> Orders:
    """Order choice of the iso-line method.

    A qualifying inner cell is taken directly when one exists; otherwise each
    order is picked on its own from the extended iso-line ``N_j = P_j - 1``.
    """
    if not tau_max > 0:
        raise ValueError("tau_max must be positive")
    P1, P2 = reference
    best, best_key = None, None
    for n1 in range(max(n_min, 1), min(P1 - 1, n_max) + 1):
        for n2 in range(max(n_min, 1), min(P2 - 1, n_max) + 1):
            if inner[(n1, n2)] <= tau_max:
                key = (dof_count((n1, n2)), max(n1, n2), n1)
                if best_key is None or key < best_key:
                    best, best_key = (n1, n2), key
    if best is not None:
        return best
    fits = iso_line_fits(inner, reference, max(n_max, inner.n_max))

    def first_below(line):
        for n in range(n_min, n_max + 1):
            if line[n - 1] <= tau_max:
                return n
        return n_max

    return first_below(fits.line1), first_below(fits.line2)


@dataclass
class AdaptationPlan:
    orders: list[Orders]
    tau_max: float
    n_min: int
    n_max: int
    predicted: list[float]

    def __post_init__(self):
        for o in self.orders:
            if not all(self.n_min <= n <= self.n_max for n in o):
                raise ValueError(f"orders {o} outside [{self.n_min}, {self.n_max}]")

    @property
    def total_dofs(self) -> int:
        return sum(dof_count(o) for o in self.orders)

    def uniform(self) -> Orders | None:
        """The shared orders if every element has the same, else None."""
        return self.orders[0] if len(set(self.orders)) == 1 else None


def plan_adaptation(maps: Sequence[TauMap], tau_max: float, n_min: int = 1,
                    n_max: int = DEFAULT_MAP_MAX) -> AdaptationPlan:
    orders, predicted = [], []
    for m in sorted(maps, key=lambda m: m.element_id):
        o = select_orders(m, tau_max, n_min, n_max)
        orders.append(o)
        predicted.append(m[o])
    return AdaptationPlan(orders, tau_max, n_min, n_max, predicted)


def plan_adaptation_low_order(inners: Sequence[TauMap], reference: Orders, tau_max: float,
                              n_min: int = 1, n_max: int = DEFAULT_MAP_MAX) -> AdaptationPlan:
    """Plan with the iso-line method's per-direction order choice."""
    orders, predicted = [], []
    for inner in sorted(inners, key=lambda m: m.element_id):
        o = select_orders_low_order(inner, reference, tau_max, n_min, n_max)
        orders.append(o)
        predicted.append(build_map_low_order(inner, reference, max(n_max, inner.n_max))[o])
    return AdaptationPlan(orders, tau_max, n_min, n_max, predicted)


def write_plan_csv(path, plan: AdaptationPlan) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PLAN_HEADER)
        for eid, (o, p) in enumerate(zip(plan.orders, plan.predicted)):
            w.writerow([eid, o[0], o[1], dof_count(o), f"{p:.9e}"])


def build_element_maps(Q_P: GlobalSolution, mesh: Mesh, flavor: Flavor = ISOLATED,
                       n_max: int = DEFAULT_MAP_MAX, gas: GasParameters = AIR,
                       jobs: int = 1, method: MapMethod = MapMethod.HIGH_ORDER) -> list[TauMap]:
    """Per-element maps: high-order maps from the directional series, or
    full-product inner maps (``method=FULL_PRODUCT``) for the iso-line method."""
    if method not in (MapMethod.HIGH_ORDER, MapMethod.FULL_PRODUCT):
        raise ValueError(f"cannot build {method} maps from a reference solution")

    def one(eid):
        if method is MapMethod.FULL_PRODUCT:
            return build_map_full_product(full_product_estimates(Q_P, mesh, eid, flavor, gas),
                                          n_max)
        s1, s2 = directional_series(Q_P, mesh, eid, flavor, gas)
        return build_map_high_order(s1, s2, n_max)

    ids = range(len(mesh.elements))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, ids))
    return [one(e) for e in ids]


@dataclass
class SweepRow:
    tau_max: float
    plan: AdaptationPlan
    achieved: dict[Flavor, float]
    converged: bool | None = None
    iterations: int | None = None
    note: str = ""


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)

    def achieved(self, flavor: Flavor) -> np.ndarray:
        return np.array([r.achieved[flavor] for r in self.rows])

    def thresholds(self) -> np.ndarray:
        return np.array([r.tau_max for r in self.rows])


def achieved_tau(mesh: Mesh, flavor: Flavor, gas: GasParameters = AIR) -> float:
    """Largest per-element exact truncation error on ``mesh``."""
    return max(s.value_inf for s in exact_tau_all(mesh, flavor, gas))


def sweep_thresholds(mesh: Mesh, maps: Sequence[TauMap], thresholds=None, n_min: int = 1,
                     n_max: int = DEFAULT_MAP_MAX, gas: GasParameters = AIR,
                     resolve: bool = False, solve_kwargs: dict | None = None,
                     planner: Callable[[float], AdaptationPlan] | None = None) -> SweepResult:
    """Plan, optionally re-solve, and measure the achieved error for each threshold.

    The achieved error is the exact truncation error of the adapted orders in
    both flavors. It depends only on the orders, so the re-solve is off by
    default; when on, its convergence status is recorded per row and a
    failure does not stop the sweep. ``planner`` replaces the default
    minimum-DOF selection over ``maps``.
    """
    from .solver import solve_steady

    th = default_thresholds() if thresholds is None else np.asarray(thresholds, dtype=float)
    if np.any(th <= 0):
        raise ValueError("thresholds must be positive")
    if np.any(np.diff(th) < 0):
        raise ValueError("thresholds must be sorted ascending")
    result = SweepResult()
    cache: dict[tuple, dict] = {}
    for t in th:
        plan = planner(float(t)) if planner else plan_adaptation(maps, float(t), n_min, n_max)
        key = tuple(plan.orders)
        if key not in cache:
            adapted = mesh.with_orders(plan.orders)
            cache[key] = {f: achieved_tau(adapted, f, gas) for f in (NON_ISOLATED, ISOLATED)}
        row = SweepRow(float(t), plan, dict(cache[key]))
        if resolve:
            adapted = mesh.with_orders(plan.orders)
            try:
                _, rep = solve_steady(adapted, exact_solution(adapted, gas), gas=gas,
                                      **(solve_kwargs or {}))
                row.converged, row.iterations = rep.converged, rep.iterations
            except AdmissibilityError as exc:
                row.converged, row.note = False, str(exc)
            if not row.converged:
                log.warning("re-solve did not converge for tau_max=%.3e", t)
        result.rows.append(row)
    return result


def write_sweep_csv(path, result: SweepResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau_max", "total_dofs", "achieved_non_isolated", "achieved_isolated",
                    "converged"])
        for r in result.rows:
            w.writerow([f"{r.tau_max:.9e}", r.plan.total_dofs,
                        f"{r.achieved[NON_ISOLATED]:.9e}", f"{r.achieved[ISOLATED]:.9e}",
                        "" if r.converged is None else int(r.converged)])
