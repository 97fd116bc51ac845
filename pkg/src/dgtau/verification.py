"""Finite-difference check of the manufactured source against the flux divergence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .physics import AIR, GasParameters, _bump, advective_flux, manufactured_source, manufactured_state


@dataclass(frozen=True)
class SourceCheck:
    points: int
    max_abs_mismatch: float
    max_rel_mismatch: float
    worst_point: tuple[float, float]
    rtol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_mismatch <= self.rtol


def verify_source(source: Callable = manufactured_source, state: Callable = manufactured_state,
                  gas: GasParameters = AIR, n_side: int = 10, step: float = 1e-5,
                  rtol: float = 1e-6) -> SourceCheck:
    """Compare ``source`` with central differences of the advective flux of ``state``.

    The sample points form an ``n_side x n_side`` grid of cell centres of
    the unit square. Mismatches are relative to the largest source
    magnitude on the grid, per variable.
    """
    c = (np.arange(n_side) + 0.5) / n_side
    x, y = np.meshgrid(c, c, indexing="ij")
    x, y = x.ravel(), y.ravel()
    fxp, _ = advective_flux(state(x + step, y, gas), gas)
    fxm, _ = advective_flux(state(x - step, y, gas), gas)
    _, gyp = advective_flux(state(x, y + step, gas), gas)
    _, gym = advective_flux(state(x, y - step, gas), gas)
    fd = (fxp - fxm + gyp - gym) / (2.0 * step)
    s = source(x, y, gas)
    diff = np.abs(fd - s)
    scale = np.max(np.abs(fd), axis=1, keepdims=True)
    rel = diff / np.where(scale > 0, scale, 1.0)
    k = np.unravel_index(np.argmax(rel), rel.shape)[1]
    return SourceCheck(x.size, float(diff.max()), float(rel.max()),
                       (float(x[k]), float(y[k])), rtol)


def source_with_flipped_exponent(x, y, gas: GasParameters = AIR) -> np.ndarray:
    """The source with the exponent sign reversed (a known-wrong variant)."""
    X, Y, g = _bump(x, y)
    g = 1.0 / g
    rx, ry = -40.0 * X * g, -10.0 * Y * g
    energy = 1.0 / (gas.gamma - 1.0) + 2.0
    return np.stack([rx + ry, 2.0 * rx + ry, rx + 2.0 * ry, energy * (rx + ry)])
