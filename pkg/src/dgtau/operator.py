"""DGSEM spatial operators on Cartesian meshes with anisotropic orders.

The discrete system for every element is

    [M] dQ/dt + F(Q) = [M] S,

with a diagonal mass matrix ``[M]_ij = w_i w_j J``. ``residual`` returns the
mass-weighted functional ``[M] S - F(Q)``.

Two flavours of ``F`` are provided. ``NON_ISOLATED`` couples elements through
the Roe flux (advection) and Bassi-Rebay 1 (diffusion); faces whose traces
have different orders are handled on a mortar of the larger order. The
``ISOLATED`` flavour replaces every numerical flux by the element's own
interior flux trace, so each element only sees its own nodal values.

Internally all elements are evaluated together: per-element matrices are
zero-padded to the largest order present, so mixed-order meshes need no
Python loop over elements. Arrays are laid out variable-first,
``(nvar, element, i, j)``.
"""
from __future__ import annotations

import contextlib
import enum
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .basis import gauss_basis, interpolation_matrix, projection_matrix
from .mesh import BOUNDARY, Mesh, Orders
from .physics import (AIR, NVAR, AdmissibilityError, GasParameters, advective_flux,
                      manufactured_source, manufactured_state, pressure,
                      primitive, roe_flux, viscous_flux)

GlobalSolution = list  # list of (4, N1+1, N2+1) arrays, one per element


class Flavor(enum.Enum):
    NON_ISOLATED = "non_isolated"
    ISOLATED = "isolated"


NON_ISOLATED = Flavor.NON_ISOLATED
ISOLATED = Flavor.ISOLATED

# filler for padded nodes; any admissible state works, its contributions are zeroed
_PAD_STATE = np.array([1.0, 0.0, 0.0, 2.5])

_active_counters: list["EvaluationCounter"] = []


class EvaluationCounter:
    count: int = 0

    def __init__(self):
        self.count = 0


@contextlib.contextmanager
def count_evaluations():
    """Count operator evaluations performed inside the ``with`` block."""
    counter = EvaluationCounter()
    _active_counters.append(counter)
    try:
        yield counter
    finally:
        _active_counters.remove(counter)


def _pad2(rows: Sequence[np.ndarray], n: int, m: int | None = None) -> np.ndarray:
    """Stack 1D or 2D arrays, zero-padding trailing dims to ``n`` (and ``m``)."""
    out_shape = (len(rows), n) if m is None else (len(rows), n, m)
    out = np.zeros(out_shape)
    for k, r in enumerate(rows):
        if m is None:
            out[k, :r.shape[0]] = r
        else:
            out[k, :r.shape[0], :r.shape[1]] = r
    return out


class _FaceSet:
    """All faces normal to one axis, with mortar operators and gather indices."""

    def __init__(self, mesh: Mesh, axis: int, ntan: int, ghost_fn, gas):
        K = len(mesh.elements)
        faces = [f for f in mesh.faces if f.axis == axis]
        self.axis = axis
        self.normal = (1.0, 0.0) if axis == 0 else (0.0, 1.0)
        sizes = []
        for f in faces:
            lo = f.left_order if f.left != BOUNDARY else f.right_order
            ro = f.right_order if f.right != BOUNDARY else f.left_order
            sizes.append((lo, ro, max(lo, ro)))
        nm = max(s[2] for s in sizes) + 1
        self.nm = nm
        self.IL = _pad2([projection_matrix(lo, m) for lo, _, m in sizes], nm, ntan)
        self.IR = _pad2([projection_matrix(ro, m) for _, ro, m in sizes], nm, ntan)
        self.PL = _pad2([projection_matrix(m, lo) for lo, _, m in sizes], ntan, nm)
        self.PR = _pad2([projection_matrix(m, ro) for _, ro, m in sizes], ntan, nm)
        fill = np.zeros((NVAR, len(faces), nm))
        for k, (_, _, m) in enumerate(sizes):
            fill[:, k, m + 1:] = _PAD_STATE[:, None]
        self.mortar_fill = fill

        # gather sources: traces are stacked as [plus side (K), minus side (K), ghosts]
        ghosts, ghost_src = [], []
        left_q, right_q, left_g, right_g = [], [], [], []
        plus_face = np.full(K, -1)
        minus_face = np.full(K, -1)
        for k, f in enumerate(faces):
            if f.left != BOUNDARY:
                plus_face[f.left] = k
            if f.right != BOUNDARY:
                minus_face[f.right] = k
            if f.left == BOUNDARY:
                e = mesh.elements[f.right]
                ghosts.append(self._ghost(e, -1, ntan, ghost_fn, gas))
                left_q.append(2 * K + len(ghosts) - 1)
                left_g.append(K + f.right)  # gradient: interior minus-side trace
                right_q.append(K + f.right)
                right_g.append(K + f.right)
            elif f.right == BOUNDARY:
                e = mesh.elements[f.left]
                ghosts.append(self._ghost(e, +1, ntan, ghost_fn, gas))
                left_q.append(f.left)
                left_g.append(f.left)
                right_q.append(2 * K + len(ghosts) - 1)
                right_g.append(f.left)
            else:
                left_q.append(f.left)
                left_g.append(f.left)
                right_q.append(K + f.right)
                right_g.append(K + f.right)
        self.ghost_q = (np.stack(ghosts, axis=1) if ghosts
                        else np.zeros((NVAR, 0, ntan)))
        self.ghost_w = primitive(self.ghost_q, gas) if ghosts else np.zeros((3, 0, ntan))
        self.left_q = np.array(left_q)
        self.right_q = np.array(right_q)
        self.left_g = np.array(left_g)
        self.right_g = np.array(right_g)
        self.plus_face = plus_face
        self.minus_face = minus_face
        self.nfaces = len(faces)

    def _ghost(self, elem, side, ntan, ghost_fn, gas):
        out = np.tile(_PAD_STATE[:, None], (1, ntan))
        if self.axis == 0:
            b = gauss_basis(elem.orders[1])
            xface = elem.cell_origin[0] + (elem.cell_size[0] if side > 0 else 0.0)
            _, y = elem.to_physical(0.0, b.nodes)
            x = np.full_like(y, xface)
        else:
            b = gauss_basis(elem.orders[0])
            yface = elem.cell_origin[1] + (elem.cell_size[1] if side > 0 else 0.0)
            x, _ = elem.to_physical(b.nodes, 0.0)
            y = np.full_like(x, yface)
        out[:, :b.size] = ghost_fn(x, y, gas)
        return out

    def to_mortar(self, left, right, nvar_fill=True):
        """Interpolate per-face side traces ``(nv, F, ntan)`` to the mortar."""
        mL = np.matmul(self.IL, left[..., None])[..., 0]
        mR = np.matmul(self.IR, right[..., None])[..., 0]
        if nvar_fill:
            mL = mL + self.mortar_fill
            mR = mR + self.mortar_fill
        return mL, mR

    def to_sides(self, mortar_values):
        """Project mortar values back; return per-element (plus, minus) side arrays."""
        mv = mortar_values[..., None]
        onL = np.matmul(self.PL, mv)[..., 0]
        onR = np.matmul(self.PR, mv)[..., 0]
        plus = onL[:, self.plus_face]
        minus = onR[:, self.minus_face]
        return plus, minus


class Discretization:
    """Precomputed padded operators for one mesh / order configuration."""

    def __init__(self, mesh: Mesh, gas: GasParameters = AIR,
                 exterior: Callable = manufactured_state,
                 source: Callable | None = manufactured_source):
        self.mesh = mesh
        self.gas = gas
        self.orders: list[Orders] = mesh.orders
        K = len(mesh.elements)
        self.K = K
        n1 = max(o[0] for o in self.orders) + 1
        n2 = max(o[1] for o in self.orders) + 1
        self.n1, self.n2 = n1, n2
        b1 = [gauss_basis(o[0]) for o in self.orders]
        b2 = [gauss_basis(o[1]) for o in self.orders]

        self.W1 = _pad2([b.weights for b in b1], n1)
        self.W2 = _pad2([b.weights for b in b2], n2)
        with np.errstate(divide="ignore"):
            self.invW1 = np.where(self.W1 > 0, 1.0 / np.where(self.W1 > 0, self.W1, 1.0), 0.0)
            self.invW2 = np.where(self.W2 > 0, 1.0 / np.where(self.W2 > 0, self.W2, 1.0), 0.0)
        # weak derivative: DT[e, i, k] = w_k D_ki
        self.DT1 = _pad2([(b.diff_matrix * b.weights[:, None]).T for b in b1], n1, n1)
        self.DT2t = _pad2([b.diff_matrix * b.weights[:, None] for b in b2], n2, n2)
        self.L1m = _pad2([b.left for b in b1], n1)
        self.L1p = _pad2([b.right for b in b1], n1)
        self.L2m = _pad2([b.left for b in b2], n2)
        self.L2p = _pad2([b.right for b in b2], n2)
        self._Lx = np.stack([self.L1m, self.L1p], axis=1)  # (K, 2, n1)
        self._Ly = np.stack([self.L2m, self.L2p], axis=2)  # (K, n2, 2)
        self.hx = np.array([e.cell_size[0] for e in mesh.elements])
        self.hy = np.array([e.cell_size[1] for e in mesh.elements])
        jac = self.hx * self.hy / 4.0
        self.mass = self.W1[:, :, None] * self.W2[:, None, :] * jac[:, None, None]
        self.mask = self.mass > 0

        X = np.empty((K, n1, n2))
        Y = np.empty((K, n1, n2))
        for k, e in enumerate(mesh.elements):
            cx, cy = e.center
            X[k], Y[k] = cx, cy
            xs, ys = e.to_physical(b1[k].nodes, b2[k].nodes)
            X[k, :b1[k].size, :b2[k].size] = xs[:, None]
            Y[k, :b1[k].size, :b2[k].size] = ys[None, :]
        self.X, self.Y = X, Y
        if source is None:
            self.weighted_source = np.zeros((NVAR, K, n1, n2))
        else:
            self.weighted_source = source(X, Y, gas) * self.mass[None]
        self.exterior = exterior

        self.xfaces = _FaceSet(mesh, 0, n2, exterior, gas)
        self.yfaces = _FaceSet(mesh, 1, n1, exterior, gas)
        self.evaluations = 0

    # -- layout helpers -------------------------------------------------
    def pack(self, Q: GlobalSolution) -> np.ndarray:
        out = np.empty((NVAR, self.K, self.n1, self.n2))
        out[...] = _PAD_STATE[:, None, None, None]
        for k, (q, o) in enumerate(zip(Q, self.orders)):
            if q.shape != (NVAR, o[0] + 1, o[1] + 1):
                raise ValueError(f"element {k}: values shape {q.shape} does not match orders {o}")
            out[:, k, :o[0] + 1, :o[1] + 1] = q
        return out

    def unpack(self, arr: np.ndarray) -> GlobalSolution:
        return [arr[:, k, :o[0] + 1, :o[1] + 1].copy() for k, o in enumerate(self.orders)]

    def exact_packed(self, fn: Callable = manufactured_state) -> np.ndarray:
        q = fn(self.X, self.Y, self.gas)
        q[:, ~self.mask] = _PAD_STATE[:, None]
        return q

    # -- operator pieces -------------------------------------------------
    def _traces(self, U):
        """Traces of nodal values on the four sides: (x-, x+, y-, y+)."""
        x = np.matmul(self._Lx, U)
        y = np.matmul(U, self._Ly)
        return x[..., 0, :], x[..., 1, :], y[..., 0], y[..., 1]

    def _weak_divergence(self, F, G, fxm, fxp, gym, gyp):
        """Mass-weighted weak divergence of (F, G) given normal face fluxes."""
        hx = self.hx[None, :, None, None]
        hy = self.hy[None, :, None, None]
        vol1 = np.matmul(self.DT1[None], F)
        vol2 = np.matmul(G, self.DT2t[None])
        sx = (fxp[:, :, None, :] * self.L1p[None, :, :, None]
              - fxm[:, :, None, :] * self.L1m[None, :, :, None] - vol1)
        sy = (gyp[:, :, :, None] * self.L2p[None, :, None, :]
              - gym[:, :, :, None] * self.L2m[None, :, None, :] - vol2)
        return (0.5 * hy * self.W2[None, :, None, :] * sx
                + 0.5 * hx * self.W1[None, :, :, None] * sy)

    def _face_average(self, fs: _FaceSet, plus, minus, ghost):
        stacked = np.concatenate([plus, minus, ghost], axis=1)
        mL, mR = fs.to_mortar(stacked[:, fs.left_q], stacked[:, fs.right_q], nvar_fill=False)
        return fs.to_sides(0.5 * (mL + mR))

    def gradients(self, W: np.ndarray, flavor: Flavor) -> np.ndarray:
        """BR1 gradients of nodal primitives ``W (3, K, n1, n2)`` -> ``(2, 3, K, n1, n2)``."""
        wxm, wxp, wym, wyp = self._traces(W)
        if flavor is NON_ISOLATED:
            sxp, sxm = self._face_average(self.xfaces, wxp, wxm, self.xfaces.ghost_w)
            syp, sym = self._face_average(self.yfaces, wyp, wym, self.yfaces.ghost_w)
        else:
            sxm, sxp, sym, syp = wxm, wxp, wym, wyp
        dxi = (sxp[:, :, None, :] * self.L1p[None, :, :, None]
               - sxm[:, :, None, :] * self.L1m[None, :, :, None]
               - np.matmul(self.DT1[None], W)) * self.invW1[None, :, :, None]
        deta = (syp[:, :, :, None] * self.L2p[None, :, None, :]
                - sym[:, :, :, None] * self.L2m[None, :, None, :]
                - np.matmul(W, self.DT2t[None])) * self.invW2[None, :, None, :]
        gx = dxi * (2.0 / self.hx)[None, :, None, None]
        gy = deta * (2.0 / self.hy)[None, :, None, None]
        return np.stack([gx, gy])

    def _numerical_flux(self, fs: _FaceSet, qs, gs):
        """Roe minus averaged viscous flux on the mortar, projected to both sides."""
        qxm, qxp, ghost_q = qs
        gm, gp = gs
        stacked_q = np.concatenate([qxp, qxm, ghost_q], axis=1)
        qL, qR = fs.to_mortar(stacked_q[:, fs.left_q], stacked_q[:, fs.right_q])
        # gradients: (2, 3, K, ntan) per side -> flatten (6, ...)
        stacked_g = np.concatenate([gp, gm], axis=2).reshape(6, -1, gp.shape[-1])
        gL, gR = fs.to_mortar(stacked_g[:, fs.left_g], stacked_g[:, fs.right_g], nvar_fill=False)
        gL = gL.reshape(2, 3, *gL.shape[1:])
        gR = gR.reshape(2, 3, *gR.shape[1:])
        fa = roe_flux(qL, qR, fs.normal, self.gas, check=False)
        ax = fs.axis
        fvL = viscous_flux(qL, gL, self.gas)[ax]
        fvR = viscous_flux(qR, gR, self.gas)[ax]
        return fs.to_sides(fa - 0.5 * (fvL + fvR))

    def residual(self, Q: np.ndarray, flavor: Flavor = NON_ISOLATED) -> np.ndarray:
        """Mass-weighted ``[M] S - F(Q)`` for a packed solution."""
        self.evaluations += 1
        for c in _active_counters:
            c.count += 1
        gas = self.gas
        rho = Q[0]
        p = pressure(Q, gas)
        if not (np.all(rho > 0) and np.all(p > 0)):
            bad = np.argwhere((rho <= 0) | (p <= 0))[0]
            raise AdmissibilityError(
                f"inadmissible state in element {bad[0]} at node {tuple(bad[1:])}")
        fa, ga = advective_flux(Q, gas, check=False)
        W = primitive(Q, gas)
        grad = self.gradients(W, flavor)
        fv, gv = viscous_flux(Q, grad, gas)
        F = fa - fv
        G = ga - gv
        if flavor is NON_ISOLATED:
            qxm, qxp, qym, qyp = self._traces(Q)
            gxm, gxp, gym, gyp = self._traces_grad(grad)
            fxp, fxm = self._numerical_flux(self.xfaces, (qxm, qxp, self.xfaces.ghost_q),
                                            (gxm, gxp))
            gyp_, gym_ = self._numerical_flux(self.yfaces, (qym, qyp, self.yfaces.ghost_q),
                                              (gym, gyp))
        else:
            fxm, fxp, _, _ = self._traces(F)
            _, _, gym_, gyp_ = self._traces(G)
        div = self._weak_divergence(F, G, fxm, fxp, gym_, gyp_)
        return self.weighted_source - div

    def _traces_grad(self, grad):
        g = grad.reshape(6, *grad.shape[2:])
        xm, xp, ym, yp = self._traces(g)
        shp = lambda a: a.reshape(2, 3, *a.shape[1:])
        return shp(xm), shp(xp), shp(ym), shp(yp)

    def pointwise(self, R: np.ndarray) -> np.ndarray:
        """Divide a mass-weighted functional by the diagonal mass matrix."""
        out = np.zeros_like(R)
        np.divide(R, self.mass[None], out=out, where=self.mask[None])
        return out


@lru_cache(maxsize=512)
def _cached_discretization(nx, ny, orders, gas, exterior, source):
    from .mesh import build_cartesian_mesh
    return Discretization(build_cartesian_mesh(nx, ny, list(orders)), gas, exterior, source)


def discretization(mesh: Mesh, gas: GasParameters = AIR, exterior: Callable = manufactured_state,
                   source: Callable | None = manufactured_source) -> Discretization:
    """Cached :class:`Discretization` for a mesh's current orders."""
    return _cached_discretization(mesh.nx, mesh.ny, tuple(mesh.orders), gas, exterior, source)


# --- functional interface ---------------------------------------------------

def mass_matrix(element) -> np.ndarray:
    """Diagonal mass entries ``w_i w_j J`` as an ``(N1+1, N2+1)`` array."""
    b1, b2 = gauss_basis(element.orders[0]), gauss_basis(element.orders[1])
    return np.outer(b1.weights, b2.weights) * element.jacobian


def interpolate_element(values: np.ndarray, target: Orders) -> np.ndarray:
    """Tensor-product interpolation of ``(nv, N1+1, N2+1)`` nodal values to ``target`` orders."""
    n1, n2 = values.shape[1] - 1, values.shape[2] - 1
    A = interpolation_matrix(gauss_basis(n1), gauss_basis(target[0]))
    B = interpolation_matrix(gauss_basis(n2), gauss_basis(target[1]))
    return np.einsum("ai,vij,bj->vab", A, values, B)


def mortar_project(trace: np.ndarray, target_order: int) -> np.ndarray:
    """L2 projection of a face trace (last axis = nodes) onto ``target_order``."""
    src = trace.shape[-1] - 1
    return trace @ projection_matrix(src, target_order).T


def exact_solution(mesh: Mesh, gas: GasParameters = AIR,
                   fn: Callable = manufactured_state) -> GlobalSolution:
    """Nodal samples of ``fn`` at each element's own orders."""
    out = []
    for e in mesh.elements:
        b1, b2 = gauss_basis(e.orders[0]), gauss_basis(e.orders[1])
        x, y = e.to_physical(b1.nodes[:, None], b2.nodes[None, :])
        out.append(fn(np.broadcast_to(x, (b1.size, b2.size)),
                      np.broadcast_to(y, (b1.size, b2.size)), gas))
    return out


def constant_solution(mesh: Mesh, state) -> GlobalSolution:
    state = np.asarray(state, dtype=float)
    return [np.broadcast_to(state[:, None, None], (NVAR, o[0] + 1, o[1] + 1)).copy()
            for o in mesh.orders]


def coarsen(Q: GlobalSolution, eval_orders: Sequence[Orders]) -> GlobalSolution:
    out = []
    for k, (q, target) in enumerate(zip(Q, eval_orders)):
        native = (q.shape[1] - 1, q.shape[2] - 1)
        if target[0] > native[0] or target[1] > native[1]:
            raise ValueError(f"element {k}: cannot evaluate at {tuple(target)} above native {native}")
        out.append(q if tuple(target) == native else interpolate_element(q, target))
    return out


def br1_gradients(Q: GlobalSolution, mesh: Mesh, gas: GasParameters = AIR,
                  exterior: Callable = manufactured_state,
                  flavor: Flavor = NON_ISOLATED) -> list[np.ndarray]:
    """Lifted gradients of ``(u, v, T)`` per element, shape ``(2, 3, N1+1, N2+1)``."""
    disc = discretization(mesh, gas, exterior, None)
    W = primitive(disc.pack(Q), gas)
    g = disc.gradients(W, flavor)
    return [g[:, :, k, :o[0] + 1, :o[1] + 1].copy() for k, o in enumerate(disc.orders)]


def spatial_operator(Q: GlobalSolution, mesh: Mesh, flavor: Flavor = NON_ISOLATED,
                     eval_orders: Sequence[Orders] | None = None, gas: GasParameters = AIR,
                     exterior: Callable = manufactured_state,
                     source: Callable | None = manufactured_source) -> GlobalSolution:
    """Per-element mass-weighted ``[M] S - F(Q)``, optionally at coarsened orders.

    Each element's values are first interpolated to ``eval_orders`` (which may
    not exceed the element's native orders), then the operator of the
    corresponding mesh is applied.
    """
    native = [(q.shape[1] - 1, q.shape[2] - 1) for q in Q]
    if len(Q) != len(mesh.elements):
        raise ValueError("solution and mesh have different element counts")
    if eval_orders is None:
        eval_orders = native
    eval_orders = [tuple(int(n) for n in o) for o in eval_orders]
    Qc = coarsen(Q, eval_orders)
    target_mesh = mesh if list(mesh.orders) == eval_orders else mesh.with_orders(eval_orders)
    disc = discretization(target_mesh, gas, exterior, source)
    return disc.unpack(disc.residual(disc.pack(Qc), flavor))


__all__ = [
    "Flavor", "NON_ISOLATED", "ISOLATED", "Discretization", "discretization",
    "mass_matrix", "interpolate_element", "mortar_project", "exact_solution",
    "constant_solution", "coarsen", "br1_gradients", "spatial_operator",
    "count_evaluations", "GlobalSolution",
]
