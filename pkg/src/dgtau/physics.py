"""Two-dimensional compressible Navier-Stokes physics.

States are arrays whose first axis holds the conserved variables
``(rho, rho*u, rho*v, rho*e)``; any trailing shape is broadcast over.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NVAR = 4


class AdmissibilityError(ValueError):
    """Raised when a state has non-positive density or pressure."""


@dataclass(frozen=True)
class GasParameters:
    gamma: float = 1.4
    prandtl: float = 0.72
    reynolds: float = 1000.0
    mach: float = 0.5
    mu: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "prandtl", "reynolds", "mach", "mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")

    @property
    def heat_coefficient(self) -> float:
        # kappa / ((gamma - 1) Pr M^2) with kappa = mu
        return self.mu / ((self.gamma - 1.0) * self.prandtl * self.mach ** 2)


AIR = GasParameters()


def pressure(q: np.ndarray, gas: GasParameters = AIR) -> np.ndarray:
    rho, ru, rv, re = q
    return (gas.gamma - 1.0) * (re - 0.5 * (ru * ru + rv * rv) / rho)


def primitive(q: np.ndarray, gas: GasParameters = AIR) -> np.ndarray:
    """``(u, v, T)`` with ``T = gamma M^2 p / rho``."""
    rho = q[0]
    p = pressure(q, gas)
    return np.stack([q[1] / rho, q[2] / rho, gas.gamma * gas.mach ** 2 * p / rho])


def conserved(rho, u, v, p, gas: GasParameters = AIR) -> np.ndarray:
    rho, u, v, p = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (rho, u, v, p)))
    return np.stack([rho, rho * u, rho * v, p / (gas.gamma - 1.0) + 0.5 * rho * (u * u + v * v)])


def check_admissible(q: np.ndarray, gas: GasParameters = AIR) -> None:
    rho = q[0]
    p = pressure(q, gas)
    if not (np.all(rho > 0) and np.all(p > 0)):
        raise AdmissibilityError(
            f"inadmissible state: min rho={np.min(rho):.3e}, min p={np.min(p):.3e}")


def sound_speed(q: np.ndarray, gas: GasParameters = AIR) -> np.ndarray:
    return np.sqrt(gas.gamma * pressure(q, gas) / q[0])


def advective_flux(q: np.ndarray, gas: GasParameters = AIR, check: bool = True):
    """Inviscid fluxes ``(f, g)`` in x and y."""
    if check:
        check_admissible(q, gas)
    rho, ru, rv, re = q
    u, v = ru / rho, rv / rho
    p = pressure(q, gas)
    f = np.stack([ru, ru * u + p, ru * v, u * (re + p)])
    g = np.stack([rv, rv * u, rv * v + p, v * (re + p)])
    return f, g


def viscous_flux(q: np.ndarray, grad: np.ndarray, gas: GasParameters = AIR):
    """Diffusive fluxes ``(f, g)``, already scaled by ``1/Re``.

    ``grad`` holds the gradients of the primitive quantities ``(u, v, T)``
    with shape ``(2, 3, ...)``: ``grad[0]`` are x-derivatives, ``grad[1]``
    y-derivatives. Constant viscosity ``mu``; Stokes hypothesis for the
    bulk viscosity.
    """
    rho = q[0]
    u, v = q[1] / rho, q[2] / rho
    (ux, vx, Tx), (uy, vy, Ty) = grad[0], grad[1]
    mu = gas.mu
    div = ux + vy
    txx = mu * (2.0 * ux - 2.0 / 3.0 * div)
    tyy = mu * (2.0 * vy - 2.0 / 3.0 * div)
    txy = mu * (uy + vx)
    k = gas.heat_coefficient
    zero = np.zeros_like(rho)
    inv_re = 1.0 / gas.reynolds
    f = np.stack([zero, txx, txy, u * txx + v * txy + k * Tx]) * inv_re
    g = np.stack([zero, txy, tyy, u * txy + v * tyy + k * Ty]) * inv_re
    return f, g


def roe_flux(qL: np.ndarray, qR: np.ndarray, normal, gas: GasParameters = AIR,
             check: bool = True) -> np.ndarray:
    """Roe numerical flux ``F*(qL, qR) . n`` for a unit ``normal = (nx, ny)``."""
    if check:
        check_admissible(qL, gas)
        check_admissible(qR, gas)
    nx, ny = normal
    gm1 = gas.gamma - 1.0

    def split(q):
        rho = q[0]
        u, v = q[1] / rho, q[2] / rho
        un = u * nx + v * ny
        ut = -u * ny + v * nx
        p = gm1 * (q[3] - 0.5 * rho * (u * u + v * v))
        H = (q[3] + p) / rho
        return rho, un, ut, p, H

    rL, unL, utL, pL, HL = split(qL)
    rR, unR, utR, pR, HR = split(qR)

    sL, sR = np.sqrt(rL), np.sqrt(rR)
    wsum = sL + sR
    un = (sL * unL + sR * unR) / wsum
    ut = (sL * utL + sR * utR) / wsum
    H = (sL * HL + sR * HR) / wsum
    c2 = gm1 * (H - 0.5 * (un * un + ut * ut))
    c = np.sqrt(c2)
    rho = sL * sR

    drho, dp, dun, dut = rR - rL, pR - pL, unR - unL, utR - utL
    a1 = (dp - rho * c * dun) / (2.0 * c2)
    a2 = drho - dp / c2
    a3 = rho * dut
    a4 = (dp + rho * c * dun) / (2.0 * c2)
    l1, l2, l4 = np.abs(un - c), np.abs(un), np.abs(un + c)

    k1, k2, k3, k4 = l1 * a1, l2 * a2, l2 * a3, l4 * a4
    diss = np.stack([
        k1 + k2 + k4,
        k1 * (un - c) + k2 * un + k4 * (un + c),
        (k1 + k2 + k4) * ut + k3,
        k1 * (H - un * c) + k2 * 0.5 * (un * un + ut * ut) + k3 * ut + k4 * (H + un * c),
    ])

    def normal_flux(rho_, un_, ut_, p_, H_):
        m = rho_ * un_
        return np.stack([m, m * un_ + p_, m * ut_, m * H_])

    flux = 0.5 * (normal_flux(rL, unL, utL, pL, HL) + normal_flux(rR, unR, utR, pR, HR) - diss)
    fn, ft = flux[1], flux[2]
    return np.stack([flux[0], fn * nx - ft * ny, fn * ny + ft * nx, flux[3]])


# --- manufactured solution -------------------------------------------------

def _bump(x, y):
    X, Y = np.asarray(x, dtype=float) - 0.5, np.asarray(y, dtype=float) - 0.5
    return X, Y, np.exp(-5.0 * (4.0 * X * X + Y * Y))


def manufactured_state(x, y, gas: GasParameters = AIR) -> np.ndarray:
    """Gaussian density/pressure bump advected diagonally: rho = p, u = v = 1."""
    _, _, g = _bump(x, y)
    rho = g + 1.0
    return conserved(rho, 1.0, 1.0, rho, gas)


def manufactured_source(x, y, gas: GasParameters = AIR) -> np.ndarray:
    """Divergence of the inviscid flux of the manufactured state.

    The viscous flux vanishes identically for this field (u, v and T are
    constant), so the result does not depend on Re, Pr, M or mu.
    """
    X, Y, g = _bump(x, y)
    # d rho/dx = -40 X g, d rho/dy = -10 Y g
    rx, ry = -40.0 * X * g, -10.0 * Y * g
    energy = 1.0 / (gas.gamma - 1.0) + 2.0
    return np.stack([rx + ry, 2.0 * rx + ry, rx + 2.0 * ry, energy * (rx + ry)])
