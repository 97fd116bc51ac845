"""Explicit pseudo-time marching to steady state and error diagnostics."""
from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import gauss_basis, interpolation_matrix
from .mesh import Mesh
from .operator import NON_ISOLATED, GlobalSolution, discretization
from .physics import AIR, GasParameters, manufactured_source, manufactured_state, sound_speed

log = logging.getLogger(__name__)

# Carpenter & Kennedy five-stage, fourth-order, 2N-storage scheme
_LSRK_A = (0.0,
           -567301805773.0 / 1357537059087.0,
           -2404267990393.0 / 2016746695238.0,
           -3550918686646.0 / 2091501179385.0,
           -1275806237668.0 / 842570457699.0)
_LSRK_B = (1432997174477.0 / 9575080441755.0,
           5161836677717.0 / 13612068292357.0,
           1720146321549.0 / 2090206949498.0,
           3134564353537.0 / 4481467310338.0,
           2277821191437.0 / 14882151754819.0)


@dataclass
class SolveReport:
    iterations: int
    final_residual_inf: float
    converged: bool
    wall_time: float
    history: list[tuple[int, float]] = field(default_factory=list, repr=False)


@dataclass
class ErrorNorms:
    l2: float
    linf: float
    element_linf: list[float]


def stable_time_step(disc, Q: np.ndarray, cfl: float) -> float:
    """Global step from the advective wave speed and an ``h / (N+1)^2`` spacing."""
    gas = disc.gas
    c = sound_speed(Q, gas)
    u = np.abs(Q[1] / Q[0])
    v = np.abs(Q[2] / Q[0])
    mask = disc.mask
    lam_x = np.max(np.where(mask, u + c, 0.0), axis=(1, 2))
    lam_y = np.max(np.where(mask, v + c, 0.0), axis=(1, 2))
    n1 = np.array([o[0] + 1 for o in disc.orders], dtype=float)
    n2 = np.array([o[1] + 1 for o in disc.orders], dtype=float)
    inv_dx = n1 ** 2 / disc.hx
    inv_dy = n2 ** 2 / disc.hy
    dt_adv = cfl / np.max(lam_x * inv_dx + lam_y * inv_dy)
    # diffusive limit with nu ~ mu * gamma / (Pr * Re * rho)
    nu = gas.mu * max(gas.gamma / gas.prandtl, 4.0 / 3.0) / (gas.reynolds * np.min(Q[0][mask]))
    dt_visc = 0.25 * cfl / (nu * np.max(inv_dx ** 2 + inv_dy ** 2))
    return float(min(dt_adv, dt_visc))


def solve_steady(mesh: Mesh, initial: GlobalSolution, tolerance: float = 1e-10,
                 max_iterations: int = 200_000, cfl: float = 1.8,
                 gas: GasParameters = AIR, exterior: Callable = manufactured_state,
                 source: Callable | None = manufactured_source,
                 history_csv: str | None = None, log_every: int = 5000):
    """March ``dQ/dt = [M]^-1 ([M] S - F(Q))`` until ``||[M] S - F||_inf <= tolerance``.

    Returns the last iterate and a :class:`SolveReport`; running out of
    iterations is reported through ``converged=False``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    disc = discretization(mesh, gas, exterior, source)
    inv_mass = np.where(disc.mask, 1.0 / np.where(disc.mask, disc.mass, 1.0), 0.0)[None]
    Q = disc.pack(initial)
    k = np.zeros_like(Q)
    t0 = time.perf_counter()
    history: list[tuple[int, float]] = []
    dt = stable_time_step(disc, Q, cfl)
    it = 0
    res = np.inf
    while True:
        R = disc.residual(Q, NON_ISOLATED)
        res = float(np.max(np.abs(R)))
        history.append((it, res))
        if res <= tolerance or it >= max_iterations or not np.isfinite(res):
            break
        if it % 100 == 0:
            dt = stable_time_step(disc, Q, cfl)
        if log_every and it % log_every == 0:
            log.info("iteration %d residual %.3e", it, res)
        # first stage reuses R
        k = dt * R * inv_mass
        Q = Q + _LSRK_B[0] * k
        for a, b in zip(_LSRK_A[1:], _LSRK_B[1:]):
            k = a * k + dt * disc.residual(Q, NON_ISOLATED) * inv_mass
            Q = Q + b * k
        it += 1
    report = SolveReport(it, res, res <= tolerance, time.perf_counter() - t0, history)
    if history_csv:
        write_history(history_csv, history)
    return disc.unpack(Q), report


def write_history(path: str, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "residual_inf"])
        for it, r in history:
            w.writerow([it, f"{r:.10e}"])


def discretization_error(Q: GlobalSolution, mesh: Mesh, gas: GasParameters = AIR,
                         exact: Callable = manufactured_state, oversample: int = 4) -> ErrorNorms:
    """Norms of ``exact - Q`` on a Gauss rule ``oversample`` orders above each element's."""
    total = 0.0
    per_elem = []
    for q, e in zip(Q, mesh.elements):
        n1, n2 = q.shape[1] - 1, q.shape[2] - 1
        f1, f2 = gauss_basis(n1 + oversample), gauss_basis(n2 + oversample)
        A = interpolation_matrix(gauss_basis(n1), f1)
        B = interpolation_matrix(gauss_basis(n2), f2)
        fine = np.einsum("ai,vij,bj->vab", A, q, B)
        x, y = e.to_physical(f1.nodes[:, None], f2.nodes[None, :])
        shape = (f1.size, f2.size)
        err = exact(np.broadcast_to(x, shape), np.broadcast_to(y, shape), gas) - fine
        w = np.outer(f1.weights, f2.weights) * e.jacobian
        total += float(np.sum(w[None] * err ** 2))
        per_elem.append(float(np.max(np.abs(err))))
    return ErrorNorms(float(np.sqrt(total)), max(per_elem), per_elem)
