"""Hierarchical quadrilateral mesh of the annulus ``a < |x| < 1``.

Cells are stored in a refinement forest rooted at a structured ``n_r x n_theta``
coarse grid. Only *active* cells (the leaves currently in use) carry degrees
of freedom. Refinement is by quadrisection; meshes are kept 1-irregular and
the resulting hanging nodes are tied to the coarse edge they bisect.

Local vertex order of every cell is ``(r-, th-), (r+, th-), (r+, th+), (r-, th+)``
so that all cells are counter-clockwise in the plane and local edge ``k``
runs from local vertex ``k`` to ``k + 1``.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .model import ConfigError

INTERIOR, INNER, OUTER = 0, 1, 2

REFINE, KEEP, COARSEN = 1, 0, -1

# reference coordinates of the four local vertices
REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


class MeshError(RuntimeError):
    pass


class AnnulusMesh:
    """Adaptive quadrilateral mesh of an annulus.

    Parameters
    ----------
    a : float
        Inner radius, ``0 < a < 1``.
    n_r, n_theta : int
        Number of coarse cells in the radial and azimuthal directions.
    max_level : int
        Number of refinement levels allowed above the coarse mesh.
    """

    def __init__(self, a: float, n_r: int = 8, n_theta: int = 40, max_level: int = 6):
        if not (0.0 < a < 1.0):
            raise ConfigError(f"a: inner radius must lie in (0, 1) (got {a!r})")
        if n_r < 1 or n_theta < 4:
            raise ConfigError(f"need n_r >= 1 and n_theta >= 4 (got {n_r}, {n_theta})")
        self.a = float(a)
        self.n_r = int(n_r)
        self.n_theta = int(n_theta)
        self.max_level = int(max_level)

        self._xy: list[tuple[float, float]] = []
        self._tag: list[int] = []
        self._verts: list[tuple[int, int, int, int]] = []
        self._level: list[int] = []
        self._parent: list[int] = []
        self._children: list[tuple[int, int, int, int] | None] = []
        self._active: list[bool] = []
        self._mid: dict[tuple[int, int], int] = {}
        self._half_parent: dict[tuple[int, int], tuple[int, int]] = {}
        self._center: dict[int, int] = {}

        self.version = 0
        self._cache: dict = {}
        self._build_coarse()

    # ------------------------------------------------------------------ build
    def _add_vertex(self, x: float, y: float, tag: int) -> int:
        self._xy.append((x, y))
        self._tag.append(tag)
        return len(self._xy) - 1

    def _add_cell(self, verts, level: int, parent: int) -> int:
        self._verts.append(tuple(verts))
        self._level.append(level)
        self._parent.append(parent)
        self._children.append(None)
        self._active.append(True)
        return len(self._verts) - 1

    def _build_coarse(self) -> None:
        radii = np.linspace(self.a, 1.0, self.n_r + 1)
        thetas = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        ids = np.empty((self.n_r + 1, self.n_theta), dtype=int)
        for i, r in enumerate(radii):
            tag = INNER if i == 0 else OUTER if i == self.n_r else INTERIOR
            for j, th in enumerate(thetas):
                ids[i, j] = self._add_vertex(r * math.cos(th), r * math.sin(th), tag)
        for j in range(self.n_theta):
            jp = (j + 1) % self.n_theta
            for i in range(self.n_r):
                self._add_cell((ids[i, j], ids[i + 1, j], ids[i + 1, jp], ids[i, jp]), 0, -1)
        self.n_coarse = len(self._verts)
        self._touch()

    def _touch(self) -> None:
        self.version += 1
        self._cache = {}

    # -------------------------------------------------------------- queries
    @property
    def vertices(self) -> np.ndarray:
        if "xy" not in self._cache:
            self._cache["xy"] = np.array(self._xy, dtype=float)
        return self._cache["xy"]

    @property
    def vertex_tags(self) -> np.ndarray:
        if "tag" not in self._cache:
            self._cache["tag"] = np.array(self._tag, dtype=int)
        return self._cache["tag"]

    def active_cells(self) -> np.ndarray:
        if "active" not in self._cache:
            self._cache["active"] = np.flatnonzero(np.array(self._active, dtype=bool))
        return self._cache["active"]

    @property
    def n_active(self) -> int:
        return len(self.active_cells())

    def level(self, cell: int) -> int:
        return self._level[cell]

    def parent(self, cell: int) -> int:
        return self._parent[cell]

    def children(self, cell: int):
        return self._children[cell]

    def is_active(self, cell: int) -> bool:
        return self._active[cell]

    def cell_vertices(self, cells=None) -> np.ndarray:
        if cells is None:
            cells = self.active_cells()
        allv = self._cache.get("cv")
        if allv is None:
            allv = self._cache["cv"] = np.array(self._verts, dtype=int)
        return allv[np.asarray(cells, dtype=int)]

    def cell_coords(self, cells=None) -> np.ndarray:
        """Vertex coordinates, shape ``(n, 4, 2)``."""
        return self.vertices[self.cell_vertices(cells)]

    def levels(self, cells=None) -> np.ndarray:
        if cells is None:
            cells = self.active_cells()
        return np.asarray(self._level, dtype=int)[np.asarray(cells, dtype=int)]

    def node_ids(self) -> np.ndarray:
        """Sorted ids of vertices used by active cells (the mesh nodes)."""
        if "nodes" not in self._cache:
            self._cache["nodes"] = np.unique(self.cell_vertices().ravel())
        return self._cache["nodes"]

    def cell_areas(self, cells=None) -> np.ndarray:
        xy = self.cell_coords(cells)
        x, y = xy[..., 0], xy[..., 1]
        return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y, axis=1)

    def total_area(self) -> float:
        return float(np.sum(self.cell_areas()))

    def cell_diameters(self, cells=None) -> np.ndarray:
        xy = self.cell_coords(cells)
        d1 = np.linalg.norm(xy[:, 2] - xy[:, 0], axis=1)
        d2 = np.linalg.norm(xy[:, 3] - xy[:, 1], axis=1)
        return np.maximum(d1, d2)

    def edge(self, cell: int, le: int) -> tuple[int, int]:
        v = self._verts[cell]
        return v[le], v[(le + 1) % 4]

    # ------------------------------------------------------------ adjacency
    def _edge_owners(self) -> dict:
        owners = self._cache.get("owners")
        if owners is None:
            owners = defaultdict(list)
            for c in self.active_cells():
                v = self._verts[c]
                for le in range(4):
                    owners[_key(v[le], v[(le + 1) % 4])].append((int(c), le))
            self._cache["owners"] = owners
        return owners

    def _finer_owners(self, key, exclude: int) -> list:
        """Active owners of proper sub-edges of ``key`` (any depth)."""
        m = self._mid.get(key)
        if m is None:
            return []
        owners = self._edge_owners()
        out = []
        for half in (_key(key[0], m), _key(m, key[1])):
            hit = [o for o in owners.get(half, ()) if o[0] != exclude]
            if hit:
                out.extend(hit)
            else:
                out.extend(self._finer_owners(half, exclude))
        return out

    def edge_neighbors(self, cell: int, le: int) -> list[tuple[int, int]]:
        """Active cells across local edge ``le`` of ``cell`` as ``(cell, local_edge)``.

        Empty for boundary edges. May return a coarser cell, a same-level cell
        or the finer cells covering the edge.
        """
        owners = self._edge_owners()
        key = _key(*self.edge(cell, le))
        same = [o for o in owners.get(key, ()) if o[0] != cell]
        if same:
            return same
        finer = self._finer_owners(key, cell)
        if finer:
            return finer
        k = key
        while k in self._half_parent:
            k = self._half_parent[k]
            coarse = [o for o in owners.get(k, ()) if o[0] != cell]
            if coarse:
                return coarse
        return []

    def neighbor_pairs(self) -> list[tuple[int, int]]:
        """All unordered pairs of edge-adjacent active cells."""
        pairs = set()
        for c in self.active_cells():
            for le in range(4):
                for n, _ in self.edge_neighbors(int(c), le):
                    pairs.add((min(int(c), n), max(int(c), n)))
        return sorted(pairs)

    def is_one_irregular(self) -> bool:
        lev = self._level
        return all(abs(lev[a] - lev[b]) <= 1 for a, b in self.neighbor_pairs())

    # ------------------------------------------------------------ hanging nodes
    def hanging_nodes(self) -> dict[int, tuple[int, int]]:
        """Map hanging vertex -> endpoints of the coarse edge it bisects."""
        if "hang" in self._cache:
            return self._cache["hang"]
        owners = self._edge_owners()
        hang = {}
        for c in self.active_cells():
            v = self._verts[c]
            for le in range(4):
                key = _key(v[le], v[(le + 1) % 4])
                m = self._mid.get(key)
                if m is None or len(owners.get(key, ())) > 1:
                    continue
                halves = (_key(key[0], m), _key(m, key[1]))
                if any(h in owners for h in halves):
                    hang[m] = key
        self._cache["hang"] = hang
        return hang

    # ------------------------------------------------------------ refinement
    def _midpoint(self, va: int, vb: int) -> int:
        key = _key(va, vb)
        m = self._mid.get(key)
        if m is not None:
            return m
        (xa, ya), (xb, yb) = self._xy[va], self._xy[vb]
        x, y = 0.5 * (xa + xb), 0.5 * (ya + yb)
        ta, tb = self._tag[va], self._tag[vb]
        tag = INTERIOR
        if ta == tb and ta != INTERIOR:
            # boundary edge: snap onto the exact circle
            tag = ta
            radius = self.a if ta == INNER else 1.0
            s = radius / math.hypot(x, y)
            x, y = x * s, y * s
        m = self._add_vertex(x, y, tag)
        self._mid[key] = m
        self._half_parent[_key(va, m)] = key
        self._half_parent[_key(m, vb)] = key
        return m

    def _refine_cell(self, c: int) -> None:
        self._active[c] = False
        kids = self._children[c]
        if kids is not None:
            for k in kids:
                self._active[k] = True
            return
        v0, v1, v2, v3 = self._verts[c]
        m01, m12 = self._midpoint(v0, v1), self._midpoint(v1, v2)
        m23, m30 = self._midpoint(v2, v3), self._midpoint(v3, v0)
        xs = [self._xy[v] for v in (v0, v1, v2, v3)]
        cc = self._add_vertex(sum(p[0] for p in xs) / 4, sum(p[1] for p in xs) / 4, INTERIOR)
        self._center[c] = cc
        lev = self._level[c] + 1
        self._children[c] = (
            self._add_cell((v0, m01, cc, m30), lev, c),
            self._add_cell((m01, v1, m12, cc), lev, c),
            self._add_cell((cc, m12, v2, m23), lev, c),
            self._add_cell((m30, cc, m23, v3), lev, c),
        )

    def _coarsen_parent(self, p: int) -> None:
        for k in self._children[p]:
            self._active[k] = False
        self._active[p] = True

    def refine_all(self, times: int = 1) -> "AnnulusMesh":
        for _ in range(times):
            self.refine_and_coarsen({int(c): REFINE for c in self.active_cells()}, enforce_max=False)
        return self

    def refine_and_coarsen(self, marks, enforce_max: bool = True) -> "AnnulusMesh":
        """Apply refine/coarsen marks with 1-irregular closure, in place.

        ``marks`` is either a mapping ``cell -> flag`` or a sequence of flags
        aligned with :meth:`active_cells`. Flags are ``REFINE``, ``KEEP`` and
        ``COARSEN``. Infeasible marks are dropped silently.
        """
        active = self.active_cells()
        if isinstance(marks, dict):
            flag = {int(c): int(marks.get(int(c), KEEP)) for c in active}
        else:
            marks = list(marks)
            if len(marks) != len(active):
                raise MeshError("marks must align with active cells")
            flag = {int(c): int(m) for c, m in zip(active, marks)}
        lev = self._level

        for c, f in flag.items():
            if f == REFINE and enforce_max and lev[c] >= self.max_level:
                flag[c] = KEEP
            elif f == COARSEN and lev[c] == 0:
                flag[c] = KEEP

        def group_ok(p):
            kids = self._children[p]
            return all(self._active[k] and flag.get(k) == COARSEN for k in kids)

        # only complete sibling groups may coarsen
        for c, f in flag.items():
            if f == COARSEN and not group_ok(self._parent[c]):
                flag[c] = KEEP

        def final(c):
            return lev[c] + (1 if flag[c] == REFINE else -1 if flag[c] == COARSEN else 0)

        def cancel_group(c):
            for k in self._children[self._parent[c]]:
                if flag.get(k) == COARSEN:
                    flag[k] = KEEP

        pairs = self.neighbor_pairs()
        changed = True
        while changed:
            changed = False
            for a, b in pairs:
                fa, fb = final(a), final(b)
                if abs(fa - fb) <= 1:
                    continue
                hi, lo = (a, b) if fa > fb else (b, a)
                if flag[lo] == COARSEN:
                    cancel_group(lo)
                elif flag[hi] == COARSEN:
                    cancel_group(hi)
                elif flag[lo] == KEEP:
                    flag[lo] = REFINE
                else:
                    flag[hi] = KEEP
                changed = True

        parents = sorted({self._parent[c] for c, f in flag.items() if f == COARSEN})
        refine = sorted(c for c, f in flag.items() if f == REFINE)
        if not parents and not refine:
            return self
        for p in parents:
            self._coarsen_parent(p)
        for c in refine:
            self._refine_cell(c)
        self._touch()
        return self

    # ------------------------------------------------------------ misc
    def copy(self) -> "AnnulusMesh":
        new = AnnulusMesh.__new__(AnnulusMesh)
        new.__dict__.update(self.__dict__)
        for name in ("_xy", "_tag", "_verts", "_level", "_parent", "_children", "_active"):
            setattr(new, name, list(getattr(self, name)))
        for name in ("_mid", "_half_parent", "_center"):
            setattr(new, name, dict(getattr(self, name)))
        new._cache = {}
        return new

    def active_signature(self) -> tuple:
        """Hashable description of the active cell set (for equality tests)."""
        return tuple(int(c) for c in self.active_cells())

    def __repr__(self):
        return (
            f"AnnulusMesh(a={self.a}, coarse={self.n_r}x{self.n_theta}, "
            f"active={self.n_active}, nodes={len(self.node_ids())})"
        )


def build_coarse_annulus(a: float, n_r: int, n_theta: int, max_level: int = 6) -> AnnulusMesh:
    return AnnulusMesh(a, n_r, n_theta, max_level)


def refine_and_coarsen(mesh: AnnulusMesh, marks) -> AnnulusMesh:
    return mesh.refine_and_coarsen(marks)


def hanging_constraints(mesh: AnnulusMesh) -> dict[int, list[tuple[int, float]]]:
    """Constraint set: hanging vertex -> ``[(master, weight), ...]``.

    A hanging vertex whose coarse-edge endpoint is itself hanging is expanded
    recursively, so every master returned is an unconstrained node.
    """
    direct = mesh.hanging_nodes()
    resolved: dict[int, list[tuple[int, float]]] = {}

    def expand(v):
        if v not in direct:
            return {v: 1.0}
        out: dict[int, float] = defaultdict(float)
        for end in direct[v]:
            for m, w in expand(end).items():
                out[m] += 0.5 * w
        return out

    for v in direct:
        resolved[v] = sorted(expand(v).items())
    return resolved


def polygon_annulus_area(a: float, n_segments: int) -> float:
    """Area between the regular ``n``-gons inscribed in radii ``a`` and 1."""
    return 0.5 * n_segments * math.sin(2.0 * math.pi / n_segments) * (1.0 - a * a)
