"""Fine-to-coarse truncation error estimation.

A converged solution of orders ``P = (P1, P2)`` is interpolated down to
``N = (N1, N2)`` on one element at a time (neighbours keep their native
orders) and the coarse operator is evaluated there. Coarsening only one
direction yields that direction's component of the truncation error; the two
components add up to the full estimate.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .basis import gauss_basis, interpolation_matrix, projection_matrix
from .mesh import Mesh, Orders, with_element_orders
from .operator import (NON_ISOLATED, Flavor, GlobalSolution, exact_solution,
                       interpolate_element, mass_matrix, spatial_operator)
from .physics import AIR, GasParameters, advective_flux, manufactured_state


class Kind(enum.Enum):
    ESTIMATED = "estimated"
    EXACT = "exact"
    DIRECTIONAL_1 = "directional_1"
    DIRECTIONAL_2 = "directional_2"
    COMPOSED = "composed"


@dataclass(frozen=True)
class TauSample:
    element_id: int
    orders: Orders
    value_inf: float
    value_l2: float
    flavor: Flavor
    kind: Kind

    def value(self, norm: str = "inf") -> float:
        return self.value_inf if norm == "inf" else self.value_l2


@dataclass
class DirectionalSeries:
    """Norms of the truncation error when coarsening only ``direction``."""

    element_id: int
    direction: int
    reference: Orders
    orders: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    flavor: Flavor = NON_ISOLATED
    # pointwise (mass-divided) residual fields, kept for field-level composition
    fields: list[np.ndarray] = field(default_factory=list, repr=False)
    jacobian: float = 1.0

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.orders, self.orders[1:])):
            raise ValueError("series orders must be strictly increasing")

    def points(self) -> list[tuple[int, float]]:
        return list(zip(self.orders, self.values))

    def at(self, n: int) -> float:
        return self.values[self._index(n)]

    def field_at(self, n: int) -> np.ndarray:
        if not self.fields:
            raise ValueError("series was built without fields")
        return self.fields[self._index(n)]

    def _index(self, n: int) -> int:
        try:
            return self.orders.index(n)
        except ValueError:
            raise KeyError(f"order {n} not in series {self.orders}") from None


def element_norms(values: np.ndarray, mass: np.ndarray) -> tuple[float, float]:
    """(max-norm of the mass-weighted values, L2 norm of the pointwise field)."""
    linf = float(np.max(np.abs(values)))
    l2 = float(np.sqrt(np.sum(values ** 2 / mass[None])))
    return linf, l2


def coarsen_solution(Q: GlobalSolution, element_id: int, target: Orders) -> GlobalSolution:
    """Copy of ``Q`` with one element interpolated down to ``target`` orders."""
    q = Q[element_id]
    native = (q.shape[1] - 1, q.shape[2] - 1)
    if target[0] > native[0] or target[1] > native[1]:
        raise ValueError(f"cannot coarsen element {element_id} from {native} up to {tuple(target)}")
    out = list(Q)
    if tuple(target) != native:
        out[element_id] = interpolate_element(q, target)
    return out


def _sample(mesh, element_id, target, R, flavor, kind):
    e = mesh.elements[element_id]
    mass = mass_matrix(replace(e, orders=tuple(target)))
    linf, l2 = element_norms(R, mass)
    return TauSample(element_id, tuple(target), linf, l2, flavor, kind)


def _estimate_field(Q_P, mesh, element_id, target, flavor, gas):
    Qc = coarsen_solution(Q_P, element_id, target)
    coarse_mesh = with_element_orders(mesh, element_id, target)
    return spatial_operator(Qc, coarse_mesh, flavor, gas=gas)[element_id]


def estimate_tau(Q_P: GlobalSolution, mesh: Mesh, element_id: int, target: Orders,
                 flavor: Flavor = NON_ISOLATED, gas: GasParameters = AIR,
                 kind: Kind = Kind.ESTIMATED) -> TauSample:
    """Truncation error estimate of ``element_id`` at ``target`` orders."""
    target = tuple(int(n) for n in target)
    R = _estimate_field(Q_P, mesh, element_id, target, flavor, gas)
    return _sample(mesh, element_id, target, R, flavor, kind)


def exact_tau(mesh: Mesh, element_id: int, target: Orders, flavor: Flavor = NON_ISOLATED,
              gas: GasParameters = AIR) -> TauSample:
    """Operator applied to exact nodal samples, ``element_id`` at ``target`` orders.

    Other elements hold exact samples at their own orders in ``mesh``.
    """
    target = tuple(int(n) for n in target)
    m = with_element_orders(mesh, element_id, target)
    R = spatial_operator(exact_solution(m, gas), m, flavor, gas=gas)[element_id]
    return _sample(mesh, element_id, target, R, flavor, Kind.EXACT)


def exact_tau_all(mesh: Mesh, flavor: Flavor = NON_ISOLATED,
                  gas: GasParameters = AIR) -> list[TauSample]:
    """Exact truncation error of every element at the mesh's own orders."""
    R = spatial_operator(exact_solution(mesh, gas), mesh, flavor, gas=gas)
    return [_sample(mesh, k, e.orders, r, flavor, Kind.EXACT)
            for k, (e, r) in enumerate(zip(mesh.elements, R))]


def directional_series(Q_P: GlobalSolution, mesh: Mesh, element_id: int,
                       flavor: Flavor = NON_ISOLATED, gas: GasParameters = AIR,
                       norm: str = "inf") -> tuple[DirectionalSeries, DirectionalSeries]:
    """Estimates at ``(N1, P2)`` for ``N1 < P1`` and at ``(P1, N2)`` for ``N2 < P2``.

    Costs ``(P1 - 1) + (P2 - 1)`` operator evaluations.
    """
    if norm not in ("inf", "l2"):
        raise ValueError(f"unknown norm {norm!r}")
    e = mesh.elements[element_id]
    P1, P2 = e.orders
    s1 = DirectionalSeries(element_id, 1, (P1, P2), flavor=flavor, jacobian=e.jacobian)
    s2 = DirectionalSeries(element_id, 2, (P1, P2), flavor=flavor, jacobian=e.jacobian)
    for series, targets in ((s1, [(n, P2) for n in range(1, P1)]),
                            (s2, [(P1, n) for n in range(1, P2)])):
        for target in targets:
            R = _estimate_field(Q_P, mesh, element_id, target, flavor, gas)
            mass = mass_matrix(replace(e, orders=target))
            series.orders.append(target[series.direction - 1])
            series.values.append(element_norms(R, mass)[0 if norm == "inf" else 1])
            series.fields.append(R / mass[None])
    return s1, s2


def full_product_estimates(Q_P: GlobalSolution, mesh: Mesh, element_id: int,
                           flavor: Flavor = NON_ISOLATED, gas: GasParameters = AIR
                           ) -> dict[Orders, TauSample]:
    """Direct estimates for every ``N_i < P_i``: ``(P1 - 1)(P2 - 1)`` evaluations."""
    P1, P2 = mesh.elements[element_id].orders
    return {(n1, n2): estimate_tau(Q_P, mesh, element_id, (n1, n2), flavor, gas)
            for n1 in range(1, P1) for n2 in range(1, P2)}


def compose_theorem1(series1: DirectionalSeries, series2: DirectionalSeries,
                     target: Orders, mode: str = "norm") -> TauSample:
    """Combine the two directional components at ``target``.

    ``mode="norm"`` adds the series norms. ``mode="field"`` L2-projects each
    pointwise directional field onto the ``target`` nodes, sums them, and
    measures the result like a direct estimate (needs series built with
    fields). Raises ``KeyError`` if either order lies outside its series;
    extending the series beyond the reference orders is done by the map
    builders.
    """
    if series1.direction == 2 and series2.direction == 1:
        series1, series2 = series2, series1
        target = (target[1], target[0])
    n1, n2 = (int(n) for n in target)
    if mode == "norm":
        v = series1.at(n1) + series2.at(n2)
        return TauSample(series1.element_id, (n1, n2), v, float("nan"),
                         series1.flavor, Kind.COMPOSED)
    if mode != "field":
        raise ValueError(f"unknown composition mode {mode!r}")
    P1, P2 = series1.reference
    f1 = series1.field_at(n1)  # orders (n1, P2)
    f2 = series2.field_at(n2)  # orders (P1, n2)
    total = (np.matmul(f1, projection_matrix(P2, n2).T)
             + np.matmul(projection_matrix(P1, n1), f2))
    mass = np.outer(gauss_basis(n1).weights, gauss_basis(n2).weights) * series1.jacobian
    linf, l2 = element_norms(total * mass[None], mass)
    return TauSample(series1.element_id, (n1, n2), linf, l2, series1.flavor, Kind.COMPOSED)


def isolated_interpolation_oracle(mesh: Mesh, element_id: int, target: Orders,
                                  gas: GasParameters = AIR, extra: int = 6,
                                  exact: Callable = manufactured_state) -> float:
    """Max-norm of ``(div(F - I^N F), phi)`` at the order-``target`` nodes.

    The exact flux is represented by its interpolant of orders ``target + extra``.
    Only the inviscid flux enters: the viscous flux of the manufactured state
    is identically zero.
    """
    e = mesh.elements[element_id]
    n1, n2 = target
    c1, c2 = gauss_basis(n1), gauss_basis(n2)
    f1, f2 = gauss_basis(n1 + extra), gauss_basis(n2 + extra)
    sx, sy = e.metric_scale

    def flux_at(b1, b2):
        x, y = e.to_physical(b1.nodes[:, None], b2.nodes[None, :])
        shape = (b1.size, b2.size)
        q = exact(np.broadcast_to(x, shape), np.broadcast_to(y, shape), gas)
        return advective_flux(q, gas)

    def divergence(f, g, b1, b2):
        return (sx * np.einsum("ik,vkj->vij", b1.diff_matrix, f)
                + sy * np.einsum("jk,vik->vij", b2.diff_matrix, g))

    fine_div = divergence(*flux_at(f1, f2), f1, f2)
    A = interpolation_matrix(f1, c1)
    B = interpolation_matrix(f2, c2)
    fine_at_coarse = np.einsum("ai,vij,bj->vab", A, fine_div, B)
    coarse_div = divergence(*flux_at(c1, c2), c1, c2)
    w = np.outer(c1.weights, c2.weights) * e.jacobian
    return float(np.max(np.abs(w[None] * (fine_at_coarse - coarse_div))))
