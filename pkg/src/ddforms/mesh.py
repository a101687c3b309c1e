"""Oriented simplicial complexes, relative chain complexes and Betti numbers.

A mesh is a pair (T, U): a finite simplicial complex T together with a
subcomplex U of marked simplices encoding boundary conditions.  Chain
matrices are assembled over the unmarked simplices only, which realizes the
relative chain complex as a quotient by deletion.  Ranks of the integer
chain matrices are computed exactly (fraction-free elimination), so Betti
numbers carry no floating point tolerance.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction


class MeshError(ValueError):
    """Invalid mesh input (bad indices, duplicate cells, broken closure)."""


@dataclass(frozen=True)
class Simplex:
    """An oriented simplex, identified by its ascending vertex tuple.

    ``orientation`` is an ordering of the same vertices; ascending order is
    the positive orientation.  Top-dimensional cells in matching ambient
    dimension may carry a swapped ordering so that their orientation is the
    Euclidean one.
    """

    vertices: tuple
    orientation: tuple = None

    def __post_init__(self):
        if not self.vertices:
            raise MeshError("simplex needs at least one vertex")
        if any(a >= b for a, b in zip(self.vertices, self.vertices[1:])):
            raise MeshError(f"vertices must be strictly increasing: {self.vertices}")
        if self.orientation is None:
            object.__setattr__(self, "orientation", self.vertices)
        elif tuple(sorted(self.orientation)) != self.vertices:
            raise MeshError("orientation must permute the vertex tuple")

    @property
    def dim(self):
        return len(self.vertices) - 1

    def faces(self):
        """All codimension-one faces, as ascending vertex tuples."""
        v = self.vertices
        return [v[:j] + v[j + 1:] for j in range(len(v))]

    def subsimplices(self):
        """All nonempty sub-vertex-tuples, including the simplex itself."""
        v = self.vertices
        out = []
        for r in range(1, len(v) + 1):
            out.extend(itertools.combinations(v, r))
        return out

    def __repr__(self):
        return f"Simplex{self.vertices}"


def _permutation_parity(seq, target):
    """Sign of the permutation taking ``seq`` to ``target``."""
    perm = [target.index(x) for x in seq]
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


class RelativePair:
    """A simplicial complex T with a marked subcomplex U and coordinates."""

    def __init__(self, coords, simplices, marked, top_dim=None):
        self.coords = tuple(tuple(float(x) for x in p) for p in coords)
        self.ambient_dim = len(self.coords[0]) if self.coords else 0
        if any(len(p) != self.ambient_dim for p in self.coords):
            raise MeshError("inconsistent coordinate dimensions")
        self._by_dim = {}
        self._lookup = {}
        for s in simplices:
            self._by_dim.setdefault(s.dim, []).append(s)
            self._lookup[s.vertices] = s
        for d in self._by_dim:
            self._by_dim[d].sort(key=lambda s: s.vertices)
        self.marked = frozenset(marked)
        self.top_dim = top_dim if top_dim is not None else max(self._by_dim, default=0)
        self._cache = {}
        self._validate()

    def _validate(self):
        for s in self._lookup.values():
            for f in s.faces():
                if len(f) >= 1 and f not in self._lookup:
                    raise MeshError(f"complex not closed: missing face {f} of {s}")
        for v in self.marked:
            if v not in self._lookup:
                raise MeshError(f"marked simplex {v} not in complex")
            for r in range(1, len(v)):
                for f in itertools.combinations(v, r):
                    if f not in self.marked:
                        raise MeshError(f"marked set not closed under faces at {f}")

    # -- queries ----------------------------------------------------------

    def simplices(self, m):
        """All m-simplices of T, sorted by vertex tuple."""
        return list(self._by_dim.get(m, []))

    def stratum(self, m):
        """Unmarked m-simplices T^m \\ U^m, sorted by vertex tuple."""
        return [s for s in self._by_dim.get(m, []) if s.vertices not in self.marked]

    def all_simplices(self):
        for m in sorted(self._by_dim):
            yield from self._by_dim[m]

    def contains(self, vertices):
        return tuple(vertices) in self._lookup

    def simplex(self, vertices):
        return self._lookup[tuple(vertices)]

    def is_marked(self, simplex):
        v = simplex.vertices if isinstance(simplex, Simplex) else tuple(simplex)
        return v in self.marked

    def points(self, simplex):
        return [self.coords[v] for v in simplex.vertices]

    def diameter(self, simplex):
        pts = self.points(simplex)
        best = 0.0
        for a, b in itertools.combinations(pts, 2):
            best = max(best, math.dist(a, b))
        return best

    def boundary_facets(self):
        """Facets of T contained in exactly one top-dimensional cell."""
        count = {}
        for c in self._by_dim.get(self.top_dim, []):
            for f in c.faces():
                count[f] = count.get(f, 0) + 1
        return [self._lookup[f] for f, n in sorted(count.items()) if n == 1]

    def __repr__(self):
        sizes = {m: len(self._by_dim[m]) for m in sorted(self._by_dim)}
        return f"RelativePair(n={self.top_dim}, sizes={sizes}, marked={len(self.marked)})"


# -- construction ---------------------------------------------------------


def _euclid_orientation(vertices, coords):
    """Reorder an n-cell in ambient dim n to positive Euclidean volume."""
    import numpy as np

    pts = [coords[v] for v in vertices]
    edges = np.array([[pj - p0 for pj, p0 in zip(p, pts[0])] for p in pts[1:]])
    det = float(np.linalg.det(edges))
    if det == 0.0:
        raise MeshError(f"degenerate cell {vertices}")
    if det < 0:
        v = list(vertices)
        v[-1], v[-2] = v[-2], v[-1]
        return tuple(v)
    return tuple(vertices)


def build_complex(cells, vertices, marked=()):
    """Close a list of cells (vertex-index lists) into a RelativePair.

    ``marked`` lists simplices whose closure forms the subcomplex U.  Cells
    of full ambient dimension are stored with Euclidean (positive volume)
    orientation.
    """
    coords = [tuple(float(x) for x in p) for p in vertices]
    nv = len(coords)
    if not cells:
        raise MeshError("no cells given")
    if len(set(coords)) != nv:
        raise MeshError("coincident vertex coordinates")
    seen = set()
    members = {}
    for cell in cells:
        key = tuple(sorted(cell))
        if len(set(cell)) != len(cell):
            raise MeshError(f"repeated vertex in cell {cell}")
        if any(v < 0 or v >= nv for v in cell):
            raise MeshError(f"vertex index out of range in cell {cell}")
        if key in seen:
            raise MeshError(f"duplicate cell {cell}")
        seen.add(key)
        orientation = key
        if len(key) - 1 == len(coords[0]):
            orientation = _euclid_orientation(key, coords)
        members[key] = Simplex(key, orientation)
        for r in range(1, len(key)):
            for f in itertools.combinations(key, r):
                members.setdefault(f, Simplex(f))
    marked_closed = set()
    for msub in marked:
        key = tuple(sorted(msub))
        if key not in members:
            raise MeshError(f"marked simplex {msub} absent from the complex")
        for r in range(1, len(key) + 1):
            for f in itertools.combinations(key, r):
                marked_closed.add(f)
    return RelativePair(coords, members.values(), marked_closed)


# -- orientation and chain matrices ---------------------------------------


def orientation_sign(face, cell):
    """The incidence sign o(F, C) for a codimension-one face F of C."""
    fset = set(face.vertices)
    cset = set(cell.vertices)
    if not fset < cset or len(cset) - len(fset) != 1 or face.dim != cell.dim - 1:
        raise MeshError(f"{face} is not a codimension-1 face of {cell}")
    (absent,) = cset - fset
    j = cell.orientation.index(absent)
    induced = tuple(v for v in cell.orientation if v != absent)
    return (-1) ** j * _permutation_parity(induced, face.orientation)


def boundary_matrix(pair, m):
    """Relative boundary matrix from the m-stratum to the (m-1)-stratum.

    Integer entries o(F, C); rows for marked simplices are omitted.
    """
    if m < 1 or m > pair.top_dim:
        raise MeshError(f"boundary dimension {m} out of range")
    rows = pair.stratum(m - 1)
    cols = pair.stratum(m)
    row_index = {s.vertices: i for i, s in enumerate(rows)}
    mat = [[0] * len(cols) for _ in rows]
    for j, c in enumerate(cols):
        for f in c.faces():
            i = row_index.get(f)
            if i is not None:
                mat[i][j] = orientation_sign(pair.simplex(f), c)
    return mat


def integer_rank(mat):
    """Exact rank of an integer matrix (fraction-free Bareiss elimination)."""
    a = [row[:] for row in mat]
    rows = len(a)
    cols = len(a[0]) if rows else 0
    rank = 0
    prev = 1
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                a[i][j] = (a[r][c] * a[i][j] - a[i][c] * a[r][j]) // prev
            a[i][c] = 0
        prev = a[r][c]
        rank += 1
        r += 1
        if r == rows:
            break
    return rank


def betti_numbers(pair):
    """Relative Betti numbers b_0 .. b_n of (T, U), exactly over the rationals."""
    n = pair.top_dim
    dims = [len(pair.stratum(m)) for m in range(n + 1)]
    ranks = [0] * (n + 2)
    for m in range(1, n + 1):
        mat = boundary_matrix(pair, m)
        ranks[m] = integer_rank(mat) if mat and mat[0] else 0
    return [dims[m] - ranks[m] - ranks[m + 1] for m in range(n + 1)]


# -- patches and skeletons ------------------------------------------------


def patch_pair(pair, simplex):
    """The local element patch (M_F, N_F) around a simplex F.

    M_F collects every simplex sharing a top-dimensional supersimplex with
    F; N_F is the part of its (n-1)-skeleton not containing F, together
    with any marked members.
    """
    f = simplex if isinstance(simplex, Simplex) else pair.simplex(simplex)
    if not pair.contains(f.vertices):
        raise MeshError(f"{f} not in complex")
    n = pair.top_dim
    fset = set(f.vertices)
    members = {}
    for c in pair.simplices(n):
        if fset <= set(c.vertices):
            for g in c.subsimplices():
                members[g] = pair.simplex(g)
    marked = set()
    for g in members:
        if len(g) - 1 <= n - 1 and (not fset <= set(g) or g in pair.marked):
            marked.add(g)
    return RelativePair(pair.coords, members.values(), marked, top_dim=n)


def check_local_patch_condition(pair):
    """Per-simplex relative patch homology report (vanishing below top index).

    Returns a dict with per-simplex Betti vectors of (M_F, N_F), the list of
    failing simplices, and the overall verdict.
    """
    n = pair.top_dim
    entries = {}
    failures = []
    for f in pair.all_simplices():
        local = patch_pair(pair, f)
        b = betti_numbers(local)
        entries[f.vertices] = b
        if any(b[m] != 0 for m in range(n)):
            failures.append(f.vertices)
    return {
        "betti": entries,
        "failures": failures,
        "passed": not failures,
    }


def skeleton_pair(pair, m):
    """The m-skeleton pair (T^[m] \\ U^m, U^[m-1]).

    The top-dimensional marked simplices are removed from the complex and
    the remaining marked set is truncated one dimension below, which keeps
    the local patch condition inheritable skeleton by skeleton.
    """
    if m < 0 or m > pair.top_dim:
        raise MeshError(f"skeleton dimension {m} out of range")
    members = []
    for d in range(m + 1):
        for s in pair.simplices(d):
            if d == m and s.vertices in pair.marked:
                continue
            members.append(s)
    marked = {v for v in pair.marked if len(v) - 1 <= m - 1}
    return RelativePair(pair.coords, members, marked, top_dim=m)


# -- mesh catalog ---------------------------------------------------------


def _grid_cells_2d(keep):
    """Triangulate the listed unit squares (i, j) with a consistent diagonal."""
    verts = {}
    cells = []

    def vid(i, j):
        if (i, j) not in verts:
            verts[(i, j)] = len(verts)
        return verts[(i, j)]

    for (i, j) in keep:
        a, b = vid(i, j), vid(i + 1, j)
        c, d = vid(i + 1, j + 1), vid(i, j + 1)
        cells.append([a, b, c])
        cells.append([a, c, d])
    coords = [None] * len(verts)
    for (i, j), k in verts.items():
        coords[k] = (float(i), float(j))
    return cells, coords


def _kuhn_cells_3d(keep):
    """Kuhn triangulation (6 tetrahedra per cube) of the listed unit cubes."""
    verts = {}
    cells = []

    def vid(p):
        if p not in verts:
            verts[p] = len(verts)
        return verts[p]

    axes = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    for base in keep:
        for perm in itertools.permutations(range(3)):
            path = [base]
            p = base
            for ax in perm:
                p = tuple(p[t] + axes[ax][t] for t in range(3))
                path.append(p)
            cells.append([vid(q) for q in path])
    coords = [None] * len(verts)
    for p, k in verts.items():
        coords[k] = tuple(float(x) for x in p)
    return cells, coords


def _half_marked(pair):
    """Boundary facets with lowest centroid in the last coordinate (a disk
    on the boundary for the catalog meshes), as input to build_complex."""
    facets = pair.boundary_facets()
    if not facets:
        return []

    def level(f):
        pts = pair.points(f)
        return sum(p[-1] for p in pts) / len(pts)

    lo = min(level(f) for f in facets)
    return [list(f.vertices) for f in facets if level(f) < lo + 1e-9]


def generate_mesh(name, size=1, mark="none"):
    """Catalog meshes with boundary marking mode none / full / half."""
    if size < 1:
        raise MeshError(f"invalid subdivision parameter {size}")
    if name == "interval":
        cells = [[i, i + 1] for i in range(size)]
        coords = [(float(i),) for i in range(size + 1)]
    elif name == "triangle":
        cells = [[0, 1, 2]]
        coords = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    elif name == "tetrahedron":
        cells = [[0, 1, 2, 3]]
        coords = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)]
    elif name == "square_grid":
        keep = [(i, j) for i in range(size) for j in range(size)]
        cells, coords = _grid_cells_2d(keep)
    elif name == "annulus":
        w = size + 2
        hole = set(itertools.product(range(1, 1 + size), repeat=2))
        keep = [(i, j) for i in range(w) for j in range(w) if (i, j) not in hole]
        cells, coords = _grid_cells_2d(keep)
    elif name == "cube_tet":
        cells, coords = _kuhn_cells_3d([(0, 0, 0)])
    elif name == "solid_ring":
        w = size + 2
        hole = set(itertools.product(range(1, 1 + size), repeat=2))
        keep = [(i, j, 0) for i in range(w) for j in range(w) if (i, j) not in hole]
        cells, coords = _kuhn_cells_3d(keep)
    elif name == "sphere_boundary":
        p = size
        nv = p + 2
        coords = [tuple(0.0 for _ in range(p + 1))]
        for i in range(p + 1):
            coords.append(tuple(1.0 if t == i else 0.0 for t in range(p + 1)))
        cells = [list(c) for c in itertools.combinations(range(nv), p + 1)]
    else:
        raise MeshError(f"unknown catalog mesh {name!r}")

    pair = build_complex(cells, coords)
    if mark == "none":
        marked = []
    elif mark == "full":
        marked = [list(f.vertices) for f in pair.boundary_facets()]
    elif mark == "half":
        marked = _half_marked(pair)
    else:
        raise MeshError(f"unknown marking mode {mark!r}")
    if marked:
        pair = build_complex(cells, coords, marked)
    return pair


# -- mesh files -----------------------------------------------------------


def load_mesh_file(path):
    """Read the JSON mesh format (ambient_dim, vertices, cells, marked)."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MeshError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("ambient_dim", "vertices", "cells"):
        if key not in data:
            raise MeshError(f"{path}: missing field {key!r}")
    if any(len(p) != data["ambient_dim"] for p in data["vertices"]):
        raise MeshError(f"{path}: vertex coordinates disagree with ambient_dim")
    return build_complex(data["cells"], data["vertices"], data.get("marked", []))


def save_mesh_file(pair, path):
    n = pair.top_dim
    data = {
        "ambient_dim": pair.ambient_dim,
        "vertices": [list(p) for p in pair.coords],
        "cells": [list(s.vertices) for s in pair.simplices(n)],
        "marked": sorted(list(v) for v in pair.marked),
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")
