"""Cartesian meshes of the unit square with per-element anisotropic orders."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basis import MAX_ORDER

BOUNDARY = -1

Orders = tuple[int, int]


def dof_count(orders: Orders) -> int:
    """Nodal values per conserved variable in an element of ``orders``."""
    n1, n2 = orders
    if n1 < 1 or n2 < 1:
        raise ValueError(f"orders must be >= 1, got {orders}")
    return (n1 + 1) * (n2 + 1)


@dataclass(frozen=True)
class Element:
    id: int
    grid: tuple[int, int]
    cell_origin: tuple[float, float]
    cell_size: tuple[float, float]
    orders: Orders

    @property
    def jacobian(self) -> float:
        return self.cell_size[0] * self.cell_size[1] / 4.0

    @property
    def metric_scale(self) -> tuple[float, float]:
        """(dxi/dx, deta/dy) for the affine map of [-1, 1]^2 onto the cell."""
        return 2.0 / self.cell_size[0], 2.0 / self.cell_size[1]

    @property
    def center(self) -> tuple[float, float]:
        return (self.cell_origin[0] + 0.5 * self.cell_size[0],
                self.cell_origin[1] + 0.5 * self.cell_size[1])

    def to_physical(self, xi, eta):
        x0, y0 = self.cell_origin
        hx, hy = self.cell_size
        return x0 + 0.5 * hx * (np.asarray(xi) + 1.0), y0 + 0.5 * hy * (np.asarray(eta) + 1.0)


@dataclass(frozen=True)
class Face:
    """Interface between ``left`` and ``right``; the normal points left -> right.

    ``axis`` 0 means the normal is +x (left is the -x neighbour), 1 means +y.
    Either side may be ``BOUNDARY``. ``left_order`` / ``right_order`` are the
    polynomial orders of the two traces along the face (0 for a boundary side).
    """

    left: int
    right: int
    axis: int
    left_order: int
    right_order: int

    @property
    def normal(self) -> tuple[float, float]:
        return (1.0, 0.0) if self.axis == 0 else (0.0, 1.0)

    @property
    def is_boundary(self) -> bool:
        return self.left == BOUNDARY or self.right == BOUNDARY


@dataclass(frozen=True)
class Mesh:
    nx: int
    ny: int
    elements: tuple[Element, ...]
    faces: tuple[Face, ...] = field(repr=False)

    @property
    def orders(self) -> list[Orders]:
        return [e.orders for e in self.elements]

    def element_at(self, i: int, j: int) -> Element:
        return self.elements[j * self.nx + i]

    def locate(self, x: float, y: float) -> int:
        """Id of the element whose half-open cell contains (x, y)."""
        i = min(int(x * self.nx), self.nx - 1)
        j = min(int(y * self.ny), self.ny - 1)
        return j * self.nx + i

    def neighbor(self, eid: int, side: str) -> int:
        """Neighbour across side ``'-x' | '+x' | '-y' | '+y'`` (or BOUNDARY)."""
        i, j = self.elements[eid].grid
        di, dj = {"-x": (-1, 0), "+x": (1, 0), "-y": (0, -1), "+y": (0, 1)}[side]
        ii, jj = i + di, j + dj
        if 0 <= ii < self.nx and 0 <= jj < self.ny:
            return jj * self.nx + ii
        return BOUNDARY

    def with_orders(self, orders) -> "Mesh":
        """Same tessellation with new per-element orders (uniform if one pair given)."""
        return build_cartesian_mesh(self.nx, self.ny, orders)

    def total_dofs(self) -> int:
        return sum(dof_count(e.orders) for e in self.elements)


def _normalise_orders(orders, n: int, max_order: int) -> list[Orders]:
    arr = np.asarray(orders, dtype=int)
    if arr.shape == (2,):
        out = [(int(arr[0]), int(arr[1]))] * n
    elif arr.shape == (n, 2):
        out = [(int(a), int(b)) for a, b in arr]
    else:
        raise ValueError(f"orders must be a pair or {n} pairs, got shape {arr.shape}")
    for o in out:
        if min(o) < 1 or max(o) > max_order:
            raise ValueError(f"orders {o} outside [1, {max_order}]")
    return out


def build_cartesian_mesh(nx: int, ny: int, orders: Orders | Sequence[Orders] = (5, 5),
                         max_order: int = MAX_ORDER) -> Mesh:
    """Uniform ``nx`` x ``ny`` tessellation of [0, 1]^2.

    Elements are numbered row-major from the lower-left corner:
    ``id = j * nx + i``.
    """
    if int(nx) < 1 or int(ny) < 1:
        raise ValueError(f"nx and ny must be positive, got {nx}, {ny}")
    nx, ny = int(nx), int(ny)
    per_elem = _normalise_orders(orders, nx * ny, max_order)
    hx, hy = 1.0 / nx, 1.0 / ny
    elements = tuple(
        Element(j * nx + i, (i, j), (i * hx, j * hy), (hx, hy), per_elem[j * nx + i])
        for j in range(ny) for i in range(nx)
    )

    faces: list[Face] = []
    # faces normal to x, ordered by column of vertical lines
    for j in range(ny):
        for i in range(nx + 1):
            left = j * nx + i - 1 if i > 0 else BOUNDARY
            right = j * nx + i if i < nx else BOUNDARY
            lo = elements[left].orders[1] if left != BOUNDARY else 0
            ro = elements[right].orders[1] if right != BOUNDARY else 0
            faces.append(Face(left, right, 0, lo, ro))
    for j in range(ny + 1):
        for i in range(nx):
            left = (j - 1) * nx + i if j > 0 else BOUNDARY
            right = j * nx + i if j < ny else BOUNDARY
            lo = elements[left].orders[0] if left != BOUNDARY else 0
            ro = elements[right].orders[0] if right != BOUNDARY else 0
            faces.append(Face(left, right, 1, lo, ro))
    return Mesh(nx, ny, elements, tuple(faces))


def with_element_orders(mesh: Mesh, eid: int, orders: Orders) -> Mesh:
    """Copy of ``mesh`` with a single element's orders changed."""
    new = list(mesh.orders)
    new[eid] = tuple(orders)
    return mesh.with_orders(new)


__all__ = ["BOUNDARY", "Element", "Face", "Mesh", "build_cartesian_mesh",
           "dof_count", "with_element_orders"]
