"""Finite-element solver for the quasistatic Reynolds equation on the annulus.

Solves ``-div(h^3 grad p) = 6 Re* r beta sin(theta - phase) - sigma dh/dt``
with ``p = p_I`` on the inner ring and ``p = p_O`` on the outer ring, using
continuous bilinear elements on an :class:`~sealsim.mesh.AnnulusMesh`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .mesh import INNER, OUTER, REF_VERTS, AnnulusMesh, hanging_constraints
from .model import BearingConfig


_QUAD_SHAPES = kernels.shape_values(kernels.QUAD_REF)  # (9, 4)


class NonPositiveGap(ArithmeticError):
    """The film thickness is not positive somewhere on the domain."""

    def __init__(self, value: float, location: tuple[float, float]):
        self.value = float(value)
        self.location = (float(location[0]), float(location[1]))
        super().__init__(f"non-positive gap {self.value:.3e} at x={self.location[0]:.4f}, y={self.location[1]:.4f}")


class SolverDiverged(RuntimeError):
    pass


class OutOfFilm(ValueError):
    pass


@dataclass(frozen=True)
class FilmSnapshot:
    """State of the film needed for one quasistatic pressure solve."""

    h_s: float
    h_r: float
    dh_dt: float = 0.0
    beta: float = 0.0
    source_phase: float = 0.0
    sigma_t: float = 1.0
    re_star: float = 1.0

    @classmethod
    def from_config(cls, cfg: BearingConfig, h_s: float, h_r: float = 0.0, dh_dt: float = 0.0):
        return cls(h_s, h_r, dh_dt, cfg.beta, cfg.source_phase, cfg.sigma_t, cfg.re_star)

    def _tilt(self, x, y):
        # r sin(theta - phase) in Cartesian form
        return y * math.cos(self.source_phase) - x * math.sin(self.source_phase)

    def gap_xy(self, x, y):
        return self.h_s - self.h_r - self.beta * self._tilt(x, y)

    def source_xy(self, x, y):
        return 6.0 * self.re_star * self.beta * self._tilt(x, y) - self.sigma_t * self.dh_dt


def source_term(r, theta, snapshot: FilmSnapshot):
    s = snapshot
    return 6.0 * s.re_star * r * s.beta * np.sin(np.asarray(theta) - s.source_phase) - s.sigma_t * s.dh_dt


class Discretization:
    """Mesh-dependent data shared by every solve on one mesh version."""

    def __init__(self, mesh: AnnulusMesh):
        self.mesh = mesh
        self.version = mesh.version
        self.cells = mesh.active_cells()
        self.coords = mesh.cell_coords(self.cells)
        self.qp = kernels.quad_points(self.coords)
        self.nodes = mesh.node_ids()
        n_vert = len(mesh.vertices)
        self.node_of_vertex = np.full(n_vert, -1, dtype=int)
        self.node_of_vertex[self.nodes] = np.arange(len(self.nodes))
        self.conn = self.node_of_vertex[mesh.cell_vertices(self.cells)]
        self.n_nodes = len(self.nodes)
        self.node_xy = mesh.vertices[self.nodes]

        # sparsity pattern of the unconstrained nodal matrix
        n = self.n_nodes
        rows = np.repeat(self.conn, 4, axis=1).ravel()
        cols = np.tile(self.conn, (1, 4)).ravel()
        keys, self._scatter = np.unique(rows * n + cols, return_inverse=True)
        self._pat_rows = keys // n
        self._pat_cols = keys % n
        self._indptr = np.concatenate([[0], np.cumsum(np.bincount(self._pat_rows, minlength=n))])

        # constraints: nodal vector = P_f u_free + P_d u_dirichlet
        self.constraints = hanging_constraints(mesh)
        hanging = np.zeros(n, dtype=bool)
        tags = mesh.vertex_tags[self.nodes]
        for v in self.constraints:
            hanging[self.node_of_vertex[v]] = True
        self.hanging = hanging
        self.dirichlet = np.flatnonzero(~hanging & (tags != 0))
        self.free = np.flatnonzero(~hanging & (tags == 0))
        self.inner = tags == INNER
        self.outer = tags == OUTER
        col_of = np.full(n, -1, dtype=int)
        col_of[self.free] = np.arange(len(self.free))
        dcol_of = np.full(n, -1, dtype=int)
        dcol_of[self.dirichlet] = np.arange(len(self.dirichlet))
        fr, fc, fw, dr, dc, dw = [], [], [], [], [], []
        for i in np.concatenate([self.free, self.dirichlet]):
            (fr if col_of[i] >= 0 else dr).append(i)
            (fc if col_of[i] >= 0 else dc).append(col_of[i] if col_of[i] >= 0 else dcol_of[i])
            (fw if col_of[i] >= 0 else dw).append(1.0)
        for v, masters in self.constraints.items():
            i = self.node_of_vertex[v]
            for mv, w in masters:
                j = self.node_of_vertex[mv]
                if col_of[j] >= 0:
                    fr.append(i), fc.append(col_of[j]), fw.append(w)
                else:
                    dr.append(i), dc.append(dcol_of[j]), dw.append(w)
        self.P_f = sp.csr_matrix((fw, (fr, fc)), shape=(n, len(self.free)))
        self.P_d = sp.csr_matrix((dw, (dr, dc)), shape=(n, len(self.dirichlet)))
        self.P_fT = self.P_f.T.tocsr()
        self._interfaces = None

    @property
    def n_dofs(self) -> int:
        """Number of nodal coefficients, hanging nodes included."""
        return self.n_nodes

    def nodal_matrix(self, ke: np.ndarray) -> sp.csr_matrix:
        data = np.bincount(self._scatter, weights=ke.ravel(), minlength=len(self._pat_rows))
        n = self.n_nodes
        return sp.csr_matrix((data, self._pat_cols, self._indptr), shape=(n, n))

    def nodal_vector(self, fe: np.ndarray) -> np.ndarray:
        return np.bincount(self.conn.ravel(), weights=fe.ravel(), minlength=self.n_nodes)

    def dirichlet_values(self, p_inner: float, p_outer: float) -> np.ndarray:
        d = self.dirichlet
        return np.where(self.inner[d], p_inner, np.where(self.outer[d], p_outer, 0.0))

    # ---------------------------------------------------------- interfaces
    def interfaces(self):
        """Interior edge segments between pairs of active cells.

        Returns ``(ia, la, ib, lb, p0, p1)``: positions of the two cells in
        ``self.cells``, their local edge numbers and the segment endpoints.
        The segment is the edge of the finer cell.
        """
        if self._interfaces is not None:
            return self._interfaces
        mesh = self.mesh
        pos = {int(c): k for k, c in enumerate(self.cells)}
        xy = mesh.vertices
        ia, la, ib, lb, p0, p1 = [], [], [], [], [], []
        for c in self.cells:
            c = int(c)
            lc = mesh.level(c)
            for le in range(4):
                for n, ln in mesh.edge_neighbors(c, le):
                    lnv = mesh.level(n)
                    if lnv > lc or (lnv == lc and n < c):
                        continue
                    va, vb = mesh.edge(c, le)
                    ia.append(pos[c]), la.append(le), ib.append(pos[n]), lb.append(ln)
                    p0.append(xy[va]), p1.append(xy[vb])
        self._interfaces = (
            np.array(ia, dtype=int),
            np.array(la, dtype=int),
            np.array(ib, dtype=int),
            np.array(lb, dtype=int),
            np.array(p0, dtype=float).reshape(-1, 2),
            np.array(p1, dtype=float).reshape(-1, 2),
        )
        return self._interfaces


def discretization(mesh: AnnulusMesh) -> Discretization:
    disc = mesh._cache.get("disc")
    if disc is None or disc.version != mesh.version:
        disc = Discretization(mesh)
        mesh._cache["disc"] = disc
    return disc


@dataclass
class LinearSystem:
    disc: Discretization
    matrix: sp.csr_matrix
    rhs: np.ndarray
    u_dirichlet: np.ndarray
    nodal_matrix: sp.csr_matrix
    nodal_load: np.ndarray


@dataclass
class PressureField:
    """Nodal values of the bilinear pressure approximation."""

    mesh: AnnulusMesh
    disc: Discretization
    values: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def constraints(self):
        return self.disc.constraints

    def cell_values(self) -> np.ndarray:
        """Nodal values per active cell, ``(n_cells, 4)``."""
        return self.values[self.disc.conn]

    def at_vertex(self, v: int) -> float:
        return float(self.values[self.disc.node_of_vertex[v]])

    def quad_values(self) -> np.ndarray:
        return self.cell_values() @ _QUAD_SHAPES.T


def assemble(
    mesh: AnnulusMesh,
    snapshot: FilmSnapshot | None,
    bc: tuple[float, float] = (1.0, 2.0),
    coefficient=None,
    source=None,
) -> LinearSystem:
    """Assemble the condensed linear system for one film state.

    ``coefficient(x, y)`` and ``source(x, y)`` override the film-derived
    ``h^3`` and right-hand side; both are evaluated at quadrature points.
    """
    disc = discretization(mesh)
    x, y = disc.qp[..., 0], disc.qp[..., 1]
    if coefficient is None:
        h = snapshot.gap_xy(x, y)
        k = int(np.argmin(h))
        if h.flat[k] <= 0.0:
            raise NonPositiveGap(h.flat[k], (x.flat[k], y.flat[k]))
        kcoef = h**3
    else:
        kcoef = np.broadcast_to(coefficient(x, y), x.shape)
    if source is None:
        fval = snapshot.source_xy(x, y) if snapshot is not None else np.zeros_like(x)
    else:
        fval = np.broadcast_to(source(x, y), x.shape)
    fval = np.broadcast_to(fval, x.shape)
    ke, fe = kernels.element_system(disc.coords, kcoef, fval)
    a_full = disc.nodal_matrix(ke)
    b_full = disc.nodal_vector(fe)
    u_d = disc.dirichlet_values(*bc)
    rhs = disc.P_fT @ (b_full - a_full @ (disc.P_d @ u_d))
    a_ff = (disc.P_fT @ a_full @ disc.P_f).tocsr()
    return LinearSystem(disc, a_ff, rhs, u_d, a_full, b_full)


def _pcg(a, b, tol, maxiter):
    """Jacobi-preconditioned conjugate gradients."""
    dinv = 1.0 / a.diagonal()
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return x, 0
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        ap = a @ p
        step = rz / (p @ ap)
        x += step * p
        r -= step * ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverDiverged(f"CG did not reach rel. residual {tol:g} in {maxiter} iterations")


def solve_pressure(system: LinearSystem, tol: float = 1e-10, method: str = "direct", maxiter: int | None = None) -> PressureField:
    a, b = system.matrix, system.rhs
    disc = system.disc
    its = 0
    if len(b) == 0:
        u_f = b
    elif method == "cg":
        u_f, its = _pcg(a, b, tol, maxiter or 20 * len(b) + 100)
    else:
        u_f = spla.spsolve(a.tocsc(), b)
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(b - a @ u_f) / bnorm if bnorm > 0 else 0.0
    if not np.all(np.isfinite(u_f)):
        raise SolverDiverged("non-finite pressure solution")
    values = disc.P_f @ u_f + disc.P_d @ system.u_dirichlet
    return PressureField(disc.mesh, disc, values, {"residual": float(res), "iterations": its})


def solve_film(mesh: AnnulusMesh, snapshot: FilmSnapshot, cfg: BearingConfig) -> PressureField:
    system = assemble(mesh, snapshot, (cfg.p_inner, cfg.p_outer))
    return solve_pressure(system, cfg.solver_tol, cfg.solver)


def integrate(field: PressureField, fn=None) -> float:
    """Integral over the meshed domain of ``fn(x, y, p)`` (default ``p``)."""
    disc = field.disc
    pq = field.quad_values()
    vals = pq if fn is None else fn(disc.qp[..., 0], disc.qp[..., 1], pq)
    return float(np.sum(kernels.cell_integrals(disc.coords, vals)))


def pressure_force(field: PressureField, p_ambient: float = 1.0) -> float:
    return integrate(field, lambda x, y, p: p - p_ambient)


def l2_error(field: PressureField, exact) -> float:
    """L2 distance to ``exact(x, y)`` with the assembly quadrature."""
    return math.sqrt(integrate(field, lambda x, y, p: (p - exact(x, y)) ** 2))


# ------------------------------------------------------------------ Kelly
_EDGE_GX = kernels.GAUSS_X
_EDGE_GW = kernels.GAUSS_W


def _edge_param(coords, le, pts):
    """Reference coordinates of points lying on local edge ``le``."""
    a = coords[np.arange(len(le)), le]
    b = coords[np.arange(len(le)), (le + 1) % 4]
    d = b - a
    t = np.einsum("nd,nd->n", pts - a, d) / np.einsum("nd,nd->n", d, d)
    ra, rb = REF_VERTS[le], REF_VERTS[(le + 1) % 4]
    return ra + t[:, None] * (rb - ra)


def kelly_indicator(field: PressureField) -> np.ndarray:
    """Kelly error indicator per active cell, ordered as ``mesh.active_cells()``.

    Every interior segment contributes its full squared normal-gradient jump
    to both neighbouring cells; boundary edges contribute nothing.
    """
    disc = field.disc
    ia, la, ib, lb, p0, p1 = disc.interfaces()
    eta2 = np.zeros(len(disc.cells))
    if len(ia) == 0:
        return eta2
    u = field.cell_values()
    ca, cb = disc.coords[ia], disc.coords[ib]
    d = p1 - p0
    length = np.linalg.norm(d, axis=1)
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
    acc = np.zeros(len(ia))
    for s, w in zip(_EDGE_GX, _EDGE_GW):
        pts = p0 + s * d
        ga = kernels.gradients_at(ca, u[ia], _edge_param(ca, la, pts))
        gb = kernels.gradients_at(cb, u[ib], _edge_param(cb, lb, pts))
        jump = np.einsum("nd,nd->n", ga - gb, normal)
        acc += w * jump**2
    acc *= length
    np.add.at(eta2, ia, acc)
    np.add.at(eta2, ib, acc)
    eta2 *= field.mesh.cell_diameters(disc.cells)
    return np.sqrt(eta2)


# ------------------------------------------------------------------ velocity
def _invert_bilinear(coords, x, y, iters=30):
    """Newton inversion of the bilinear map for every cell at point ``(x, y)``."""
    ref = np.full((len(coords), 2), 0.5)
    target = np.array([x, y])
    for _ in range(iters):
        nv = kernels.shape_values(ref)
        pos = np.einsum("na,nad->nd", nv, coords)
        dn = _kernels_ref_grads(ref)
        jac = np.einsum("nak,nad->ndk", dn, coords)
        delta = np.linalg.solve(jac, (target - pos)[..., None])[..., 0]
        ref = ref + delta
        if np.max(np.abs(delta)) < 1e-14:
            break
    return ref


def _kernels_ref_grads(ref):
    from ._kernels_py import shape_ref_gradients

    return shape_ref_gradients(ref)


def locate(field: PressureField, x: float, y: float, tol: float = 1e-10):
    """Active cell position and reference point containing ``(x, y)``.

    Ties on shared edges go to the lowest cell id.
    """
    coords = field.disc.coords
    lo, hi = coords.min(axis=1), coords.max(axis=1)
    cand = np.flatnonzero((lo[:, 0] - tol <= x) & (x <= hi[:, 0] + tol) & (lo[:, 1] - tol <= y) & (y <= hi[:, 1] + tol))
    if len(cand) == 0:
        raise OutOfFilm(f"point ({x}, {y}) is outside the meshed domain")
    ref = _invert_bilinear(coords[cand], x, y)
    inside = np.all((ref >= -tol) & (ref <= 1 + tol), axis=1)
    if not inside.any():
        raise OutOfFilm(f"point ({x}, {y}) is outside the meshed domain")
    k = cand[inside][np.argmin(field.disc.cells[cand[inside]])]
    return int(k), np.clip(ref[np.flatnonzero(cand == k)[0]], 0.0, 1.0)


def pressure_gradient(field: PressureField, x: float, y: float) -> np.ndarray:
    k, ref = locate(field, x, y)
    return kernels.gradients_at(field.disc.coords[k : k + 1], field.cell_values()[k : k + 1], ref[None])[0]


def velocity_profile(r: float, theta: float, z: float, field: PressureField, snapshot: FilmSnapshot):
    """Radial and azimuthal film velocities ``(u, v)`` at height ``z``."""
    s = snapshot
    x, y = r * math.cos(theta), r * math.sin(theta)
    h = s.gap_xy(x, y)
    z_top = s.h_s
    z_bot = s.h_s - h  # local rotor surface
    if not (z_bot - 1e-14 <= z <= z_top + 1e-14):
        raise OutOfFilm(f"z={z} outside film [{z_bot}, {z_top}]")
    g = pressure_gradient(field, x, y)
    dp_dr = g[0] * math.cos(theta) + g[1] * math.sin(theta)
    dp_dth = r * (-g[0] * math.sin(theta) + g[1] * math.cos(theta))
    prof = (z - z_top) * (z - z_bot)
    u = 0.5 * dp_dr * prof
    v = dp_dth * prof / (2.0 * s.re_star * r) - (r / h) * (z - z_top)
    return u, v
