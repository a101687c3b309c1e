"""Global broken form spaces over mesh strata and assembled operators.

A broken space is a direct sum of per-simplex element spaces over one or
several strata (m, k): k-forms attached to the unmarked m-simplices.  The
module assembles the piecewise exterior derivative D, the signed trace sum
T, and the combined distributional derivative on graded spaces, together
with mesh-weighted Gram matrices, metric adjoints and kernel subspaces.
"""

from __future__ import annotations

import itertools

import numpy as np

from ddforms.mesh import MeshError, orientation_sign
from ddforms.polyforms import geometry


class AssemblyError(ValueError):
    """Inconsistent spaces or operators."""


def mesh_weight(pair, simplex, top=None):
    """The scaling weight h_C^(top - dim C) of the mesh inner product.

    h_C is the diameter of C, or the mean diameter of adjacent edges when
    C is a vertex.
    """
    top = pair.top_dim if top is None else top
    key = ("hweight", simplex.vertices)
    h = pair._cache.get(key)
    if h is None:
        if simplex.dim >= 1:
            h = pair.diameter(simplex)
        else:
            v = simplex.vertices[0]
            lengths = [pair.diameter(e) for e in pair.simplices(1)
                       if v in e.vertices]
            if not lengths:
                raise MeshError(f"isolated vertex {v} has no adjacent edges")
            h = sum(lengths) / len(lengths)
        pair._cache[key] = h
    return h ** (top - simplex.dim)


def _element_gram(pair, family, m, k, simplex):
    key = ("elgram", family.kind, family.r, m, k, simplex.vertices)
    G = pair._cache.get(key)
    if G is None:
        space = family.space(m, k)
        G = space.gram(geometry(pair, simplex)) if space.size else np.zeros((0, 0))
        pair._cache[key] = G
    return G


class _Stratum:
    __slots__ = ("m", "k", "simplices", "block", "offset", "index")

    def __init__(self, m, k, simplices, block, offset):
        self.m = m
        self.k = k
        self.simplices = simplices
        self.block = block
        self.offset = offset
        self.index = {s.vertices: i for i, s in enumerate(simplices)}


class BrokenSpace:
    """Direct sum of element spaces over strata (m, k), with a Gram matrix.

    Strata are kept in decreasing simplex dimension; the sign and weight
    conventions refer to ``sign_top`` and ``weight_top`` (both default to
    the mesh's top dimension), which skeleton constructions override.
    """

    def __init__(self, pair, strata, family, weight_top=None, sign_top=None,
                 weighted=True):
        self.pair = pair
        self.family = family
        self.weight_top = pair.top_dim if weight_top is None else weight_top
        self.sign_top = pair.top_dim if sign_top is None else sign_top
        self.weighted = weighted
        strata = sorted(set(strata), key=lambda mk: (-mk[0], mk[1]))
        if len({m for m, _ in strata}) != len(strata):
            raise AssemblyError("two strata on the same simplex dimension")
        self.strata = []
        offset = 0
        for m, k in strata:
            if not (0 <= k <= m):
                raise AssemblyError(f"invalid stratum (m={m}, k={k})")
            simplices = pair.stratum(m)
            block = family.space(m, k).size
            self.strata.append(_Stratum(m, k, simplices, block, offset))
            offset += block * len(simplices)
        self.dim = offset
        self._gram = None

    @property
    def key(self):
        return (id(self.pair), tuple((s.m, s.k) for s in self.strata),
                self.family, self.weight_top, self.sign_top, self.weighted)

    def stratum(self, m, k=None):
        for s in self.strata:
            if s.m == m and (k is None or s.k == k):
                return s
        return None

    def stratum_slice(self, m):
        s = self.stratum(m)
        if s is None:
            raise AssemblyError(f"no stratum on dimension {m}")
        return slice(s.offset, s.offset + s.block * len(s.simplices))

    def block_slice(self, stratum, i):
        start = stratum.offset + i * stratum.block
        return slice(start, start + stratum.block)

    @property
    def gram(self):
        if self._gram is None:
            G = np.zeros((self.dim, self.dim))
            for s in self.strata:
                for i, c in enumerate(s.simplices):
                    w = mesh_weight(self.pair, c, self.weight_top) \
                        if self.weighted else 1.0
                    sl = self.block_slice(s, i)
                    G[sl, sl] = w * _element_gram(
                        self.pair, self.family, s.m, s.k, c)
            self._gram = G
        return self._gram

    def describe(self):
        return [(s.m, s.k, len(s.simplices), s.block) for s in self.strata]

    def __repr__(self):
        return f"BrokenSpace(dim={self.dim}, strata={self.describe()})"


class LinearOp:
    """A matrix between two broken spaces (or coordinate spaces)."""

    def __init__(self, domain, codomain, matrix):
        matrix = np.asarray(matrix, float)
        if matrix.shape != (codomain.dim, domain.dim):
            raise AssemblyError(
                f"operator shape {matrix.shape} does not match spaces "
                f"({codomain.dim}, {domain.dim})")
        self.domain = domain
        self.codomain = codomain
        self.matrix = matrix

    def __call__(self, x):
        return self.matrix @ x

    def compose(self, other):
        """self after other."""
        if other.codomain.dim != self.domain.dim:
            raise AssemblyError("composition dimension mismatch")
        return LinearOp(other.domain, self.codomain, self.matrix @ other.matrix)

    def norm(self):
        return float(np.linalg.norm(self.matrix))

    def __repr__(self):
        return f"LinearOp({self.codomain.dim}x{self.domain.dim})"


def adjoint(op):
    """Adjoint with respect to the two spaces' Gram inner products."""
    M_dom = op.domain.gram
    M_cod = op.codomain.gram
    mat = np.linalg.solve(M_dom, op.matrix.T @ M_cod)
    return LinearOp(op.codomain, op.domain, mat)


class Subspace:
    """A subspace of a broken space with a Gram-orthonormal basis."""

    def __init__(self, ambient, basis):
        basis = np.asarray(basis, float)
        if basis.ndim != 2:
            basis = basis.reshape(ambient.dim, -1)
        self.ambient = ambient
        self.basis = basis
        self.dim = basis.shape[1]

    @property
    def gram(self):
        return np.eye(self.dim)

    def orthonormality_defect(self):
        return float(np.linalg.norm(
            self.basis.T @ self.ambient.gram @ self.basis - np.eye(self.dim)))

    def __repr__(self):
        return f"Subspace(dim={self.dim} of {self.ambient.dim})"


def gram_orthonormalize(gram, columns):
    """Orthonormalize independent columns with respect to a Gram matrix."""
    columns = np.asarray(columns, float)
    if columns.shape[1] == 0:
        return columns
    L = np.linalg.cholesky(gram)
    Q, _R = np.linalg.qr(L.T @ columns)
    return np.linalg.solve(L.T, Q)


def broken_space(pair, m, k, family, weight_top=None):
    """The single-stratum space of k-forms on the unmarked m-simplices."""
    return BrokenSpace(pair, [(m, k)], family, weight_top=weight_top)


def graded_space(pair, m, k, b, family, kind="down", weight_top=None,
                 sign_top=None):
    """Graded broken space: "down" stacks (m-j, k-j), "up" stacks (m+j, k+j)
    for j = 0..b-1, dropping combinatorially empty strata."""
    strata = []
    for j in range(b):
        mk = (m - j, k - j) if kind == "down" else (m + j, k + j)
        mj, kj = mk
        if 0 <= kj <= mj and mj <= pair.top_dim:
            strata.append(mk)
    return BrokenSpace(pair, strata, family, weight_top=weight_top,
                       sign_top=sign_top)


def operator_D(pair, m, k, family, weight_top=None):
    """Piecewise exterior derivative on the (m, k) stratum."""
    src = broken_space(pair, m, k, family, weight_top)
    tgt = BrokenSpace(pair, [(m, min(k + 1, m))] if k + 1 <= m else [],
                      family, weight_top=weight_top)
    if k + 1 > m:
        return LinearOp(src, BrokenSpace(pair, [], family, weight_top=weight_top),
                        np.zeros((0, src.dim)))
    A = np.zeros((tgt.dim, src.dim))
    _fill_D(A, src.stratum(m, k), tgt.stratum(m, k + 1), family, 1.0)
    return LinearOp(src, tgt, A)


def operator_T(pair, m, k, family, weight_top=None):
    """Signed trace-sum (jump) operator from the m- to the (m-1)-stratum."""
    if m < 1:
        raise AssemblyError("trace operator needs m >= 1")
    src = broken_space(pair, m, k, family, weight_top)
    if k > m - 1:
        return LinearOp(src, BrokenSpace(pair, [], family, weight_top=weight_top),
                        np.zeros((0, src.dim)))
    tgt = broken_space(pair, m - 1, k, family, weight_top)
    A = np.zeros((tgt.dim, src.dim))
    _fill_T(A, pair, src.stratum(m, k), tgt.stratum(m - 1, k), family, 1.0)
    return LinearOp(src, tgt, A)


def _fill_D(A, src, tgt, family, factor):
    block = family.d_matrix(src.m, src.k)
    for i, _c in enumerate(src.simplices):
        rs = tgt.offset + i * tgt.block
        cs = src.offset + i * src.block
        A[rs:rs + tgt.block, cs:cs + src.block] += factor * block
    return A


def _fill_T(A, pair, src, tgt, family, factor):
    m, k = src.m, src.k
    for i, c in enumerate(src.simplices):
        cs = src.offset + i * src.block
        for j in range(m + 1):
            fverts = c.vertices[:j] + c.vertices[j + 1:]
            fi = tgt.index.get(fverts)
            if fi is None:
                continue
            sign = orientation_sign(pair.simplex(fverts), c)
            block = family.trace_matrix(m, k, j)
            rs = tgt.offset + fi * tgt.block
            A[rs:rs + tgt.block, cs:cs + src.block] += factor * sign * block
    return A


def derivative_operator(space):
    """The distributional exterior derivative of a graded broken space.

    Each stratum (m, k) contributes (-1)^i D into (m, k+1) and -(-1)^i T
    into (m-1, k), where i = sign_top - m; invalid targets are dropped.
    """
    pair, family = space.pair, space.family
    targets = set()
    for s in space.strata:
        if s.k + 1 <= s.m:
            targets.add((s.m, s.k + 1))
        if s.m >= 1 and s.k <= s.m - 1:
            targets.add((s.m - 1, s.k))
    tgt = BrokenSpace(pair, targets, family, weight_top=space.weight_top,
                      sign_top=space.sign_top, weighted=space.weighted)
    A = np.zeros((tgt.dim, space.dim))
    for s in space.strata:
        sign = (-1.0) ** (space.sign_top - s.m)
        if s.k + 1 <= s.m:
            _fill_D(A, s, tgt.stratum(s.m, s.k + 1), family, sign)
        if s.m >= 1 and s.k <= s.m - 1:
            _fill_T(A, pair, s, tgt.stratum(s.m - 1, s.k), family, -sign)
    return LinearOp(space, tgt, A)


def matrix_nullspace(mat, rtol=1e-9):
    """Orthonormal (Euclidean) nullspace columns of a dense matrix."""
    mat = np.asarray(mat, float)
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        return np.eye(mat.shape[1])
    u, s, vt = np.linalg.svd(mat)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(smax, 1.0)))
    return vt[rank:].T.copy()


def kernel_space(pair, m, k, family, which, weight_top=None, rtol=1e-9):
    """Kernel subspaces: "vertical" = ker T (single-valued traces, the
    conforming space), "horizontal" = ker D (piecewise-constant-like)."""
    if which == "vertical":
        op = operator_T(pair, m, k, family, weight_top) if m >= 1 else None
    elif which == "horizontal":
        op = operator_D(pair, m, k, family, weight_top)
    else:
        raise AssemblyError(f"unknown kernel kind {which!r}")
    if op is None:
        space = broken_space(pair, m, k, family, weight_top)
        null = np.eye(space.dim)
    else:
        space = op.domain
        null = matrix_nullspace(op.matrix, rtol)
    basis = gram_orthonormalize(space.gram, null)
    return Subspace(space, basis)


def export_matrix(matrix, path, tol=0.0):
    """Write a matrix in a plain coordinate text format.

    First line: rows cols nnz.  Then one "row col value" triple per line,
    0-based, in row-major order.
    """
    matrix = np.asarray(matrix, float)
    entries = [(i, j, matrix[i, j])
               for i in range(matrix.shape[0])
               for j in range(matrix.shape[1])
               if abs(matrix[i, j]) > tol]
    with open(path, "w") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]} {len(entries)}\n")
        for i, j, v in entries:
            fh.write(f"{i} {j} {v:.17g}\n")
