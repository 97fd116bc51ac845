"""Legendre-Gauss nodal bases on [-1, 1].

Nodes are the roots of the Legendre polynomial of degree ``order + 1``; all
Lagrange evaluation is done in barycentric form.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_ORDER = 20

_NEWTON_TOL = 1e-15
_NEWTON_MAXITER = 100


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate L_n and L_n' by the three-term recurrence."""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p = x.copy()
    for k in range(2, n + 1):
        p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


def _gauss_nodes_weights(order: int) -> tuple[np.ndarray, np.ndarray]:
    n = order + 1
    if n == 1:
        return np.array([0.0]), np.array([2.0])
    k = np.arange(n)
    # Chebyshev-Gauss points as initial guess, ascending
    x = -np.cos((2 * k + 1) * np.pi / (2 * n))
    for _ in range(_NEWTON_MAXITER):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= _NEWTON_TOL:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if n % 2 == 1:
        x[n // 2] = 0.0
    return x, w


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrix(nodes: np.ndarray, bary: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix ``A[j, i] = l_i(x[j])`` for the Lagrange basis on ``nodes``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = bary[None, :] / diff
    out = terms / terms.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        out[rows] = exact[rows].astype(float)
    return out


def _diff_matrix(nodes: np.ndarray, bary: np.ndarray) -> np.ndarray:
    n = nodes.size
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = (bary[j] / bary[i]) / (nodes[i] - nodes[j])
        D[i, i] = -D[i].sum()
    return D


@dataclass(frozen=True, eq=False)
class NodalBasis:
    """Lagrange basis on the ``order + 1`` Legendre-Gauss points."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray
    barycentric_weights: np.ndarray
    diff_matrix: np.ndarray
    left: np.ndarray  # l_i(-1)
    right: np.ndarray  # l_i(+1)

    @property
    def size(self) -> int:
        return self.order + 1

    def lagrange(self, x) -> np.ndarray:
        return lagrange_matrix(self.nodes, self.barycentric_weights, x)

    def interpolate(self, values: np.ndarray, x) -> np.ndarray:
        """Evaluate the interpolant of nodal ``values`` (first axis) at ``x``."""
        return np.tensordot(self.lagrange(x), values, axes=(1, 0))


@lru_cache(maxsize=None)
def _cached_basis(order: int) -> NodalBasis:
    nodes, weights = _gauss_nodes_weights(order)
    bary = barycentric_weights(nodes)
    D = _diff_matrix(nodes, bary)
    ends = lagrange_matrix(nodes, bary, np.array([-1.0, 1.0]))
    for a in (nodes, weights, bary, D, ends):
        a.setflags(write=False)
    return NodalBasis(order, nodes, weights, bary, D, ends[0], ends[1])


def gauss_basis(order: int, max_order: int = MAX_ORDER) -> NodalBasis:
    """Legendre-Gauss nodal basis of polynomial ``order``.

    Bases are cached per order and are read-only, so a single instance may
    be shared freely between threads.
    """
    order = int(order)
    if order < 0:
        raise ValueError(f"order must be non-negative, got {order}")
    if order > max_order:
        raise ValueError(f"order {order} exceeds the supported maximum {max_order}")
    return _cached_basis(order)


@lru_cache(maxsize=None)
def _cached_interp(src: int, dst: int) -> np.ndarray:
    a, b = _cached_basis(src), _cached_basis(dst)
    if src == dst:
        m = np.eye(src + 1)
    else:
        m = a.lagrange(b.nodes)
    m.setflags(write=False)
    return m


def interpolation_matrix(src: NodalBasis, dst: NodalBasis) -> np.ndarray:
    """``(dst+1) x (src+1)`` matrix with entries ``l_i^src(x_j^dst)``."""
    return _cached_interp(src.order, dst.order)


def differentiation_matrix(basis: NodalBasis) -> np.ndarray:
    """Collocation derivative: ``D @ f(nodes)`` gives the interpolant's slope at the nodes."""
    return basis.diff_matrix


@lru_cache(maxsize=None)
def _cached_projection(src: int, dst: int) -> np.ndarray:
    if dst >= src:
        return _cached_interp(src, dst)
    a, b = _cached_basis(src), _cached_basis(dst)
    # Gauss rule of order src integrates l_j^dst * p (degree src + dst) exactly
    m = (b.lagrange(a.nodes).T * a.weights[None, :]) / b.weights[:, None]
    m.setflags(write=False)
    return m


def projection_matrix(src_order: int, dst_order: int) -> np.ndarray:
    """L2 projection between 1D Gauss nodal spaces (interpolation when refining)."""
    return _cached_projection(int(src_order), int(dst_order))
