"""Versioned plain-text solution snapshots.

Layout::

    dgtau-solution 1
    mesh <nx> <ny>
    element <id> <N1> <N2>
    <(N1+1)*(N2+1) values of rho, row-major in (i, j)>
    ... three more lines for rho*u, rho*v, rho*e
"""
from __future__ import annotations

import numpy as np

from .mesh import Mesh, build_cartesian_mesh
from .physics import NVAR

MAGIC = "dgtau-solution"
VERSION = 1


def write_solution(path, mesh: Mesh, Q) -> None:
    with open(path, "w") as fh:
        fh.write(f"{MAGIC} {VERSION}\n")
        fh.write(f"mesh {mesh.nx} {mesh.ny}\n")
        for e, q in zip(mesh.elements, Q):
            n1, n2 = e.orders
            if q.shape != (NVAR, n1 + 1, n2 + 1):
                raise ValueError(f"element {e.id}: shape {q.shape} does not match orders {e.orders}")
            fh.write(f"element {e.id} {n1} {n2}\n")
            for v in range(NVAR):
                fh.write(" ".join(repr(float(a)) for a in q[v].ravel()) + "\n")


def read_solution(path) -> tuple[Mesh, list[np.ndarray]]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ValueError(f"{path}: not a solution snapshot")
    if int(head[1]) != VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {head[1]}")
    _, nx, ny = lines[1].split()
    nx, ny = int(nx), int(ny)
    orders, Q = [], []
    pos = 2
    for k in range(nx * ny):
        tag, eid, n1, n2 = lines[pos].split()
        if tag != "element" or int(eid) != k:
            raise ValueError(f"{path}: expected element {k}, got {lines[pos]!r}")
        n1, n2 = int(n1), int(n2)
        vals = [np.array(lines[pos + 1 + v].split(), dtype=float) for v in range(NVAR)]
        Q.append(np.stack(vals).reshape(NVAR, n1 + 1, n2 + 1))
        orders.append((n1, n2))
        pos += 1 + NVAR
    return build_cartesian_mesh(nx, ny, orders), Q
