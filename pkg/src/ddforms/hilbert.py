"""Finite-dimensional Hilbert complex machinery.

A complex instance is a sequence of inner-product spaces with differential
matrices whose consecutive compositions vanish.  Harmonic spaces, Hodge
decompositions, the Hodge Laplacian and its solve, and metric Moore-Penrose
pseudoinverses are all computed after whitening: the Cholesky factor of
each Gram matrix maps to an orthonormal frame, where plain SVD machinery
gives the metric-correct answers.
"""

from __future__ import annotations

import numpy as np

from ddforms.assembly import (AssemblyError, LinearOp, Subspace,
                              matrix_nullspace)


class ComplexInstance:
    """Spaces with differentials diffs[i]: spaces[i] -> spaces[i+1]."""

    def __init__(self, spaces, diffs, label="", check=True, tol=1e-10):
        if len(diffs) != len(spaces) - 1:
            raise AssemblyError("need one differential per consecutive pair")
        for i, d in enumerate(diffs):
            if d.matrix.shape != (spaces[i + 1].dim, spaces[i].dim):
                raise AssemblyError(f"differential {i} has the wrong shape")
        self.spaces = list(spaces)
        self.diffs = list(diffs)
        self.label = label
        if check:
            for i in range(len(diffs) - 1):
                a, b = diffs[i + 1].matrix, diffs[i].matrix
                scale = max(np.linalg.norm(a) * np.linalg.norm(b), 1.0)
                if np.linalg.norm(a @ b) > tol * scale:
                    raise AssemblyError(
                        f"{label or 'complex'}: differentials {i}, {i + 1} "
                        "do not compose to zero")

    def __len__(self):
        return len(self.spaces)

    def dims(self):
        return [s.dim for s in self.spaces]

    def whitening(self, i):
        return _chol(self.spaces[i].gram)

    def whitened_diff(self, i):
        """The differential i expressed between orthonormal frames."""
        L0 = self.whitening(i)
        L1 = self.whitening(i + 1)
        return L1.T @ _solve_lt(L0, self.diffs[i].matrix)

    def __repr__(self):
        return f"ComplexInstance({self.label!r}, dims={self.dims()})"


def _chol(gram):
    if gram.shape[0] == 0:
        return np.zeros((0, 0))
    return np.linalg.cholesky(gram)


def _solve_lt(L, mat):
    """Right-solve mat @ inv(L.T) for a lower-triangular Cholesky factor."""
    if L.shape[0] == 0:
        return mat
    return np.linalg.solve(L, mat.T).T


def _unwhiten(L, cols):
    if L.shape[0] == 0:
        return cols
    return np.linalg.solve(L.T, cols)


def _range_basis(mat, rtol=1e-9):
    """Orthonormal basis of the column span."""
    if mat.shape[1] == 0 or mat.shape[0] == 0:
        return np.zeros((mat.shape[0], 0))
    u, s, _vt = np.linalg.svd(mat, full_matrices=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(smax, 1.0)))
    return u[:, :rank]


def harmonic_space(cx, i, rtol=1e-9):
    """Harmonic forms at index i: ker d_i intersected with ker d*_{i-1}.

    Computed as the nullspace of the whitened stacked matrix
    [d_i; d_{i-1}^T]; the returned basis is Gram-orthonormal.
    """
    rows = []
    n = cx.spaces[i].dim
    if i < len(cx.diffs):
        rows.append(cx.whitened_diff(i))
    if i > 0:
        rows.append(cx.whitened_diff(i - 1).T)
    if rows:
        null = matrix_nullspace(np.vstack(rows), rtol)
    else:
        null = np.eye(n)
    basis = _unwhiten(cx.whitening(i), null)
    return Subspace(cx.spaces[i], basis)


def betti_from_complex(cx, rtol=1e-9):
    """Homology dimensions at every index via harmonic spaces."""
    return [harmonic_space(cx, i, rtol).dim for i in range(len(cx))]


def hodge_decompose(x, cx, i, rtol=1e-9):
    """Split x into exact, coexact and harmonic parts, Gram-orthogonally."""
    L = cx.whitening(i)
    xw = L.T @ x if L.shape[0] else np.asarray(x, float)
    if i > 0:
        Bex = _range_basis(cx.whitened_diff(i - 1), rtol)
    else:
        Bex = np.zeros((cx.spaces[i].dim, 0))
    if i < len(cx.diffs):
        Bco = _range_basis(cx.whitened_diff(i).T, rtol)
    else:
        Bco = np.zeros((cx.spaces[i].dim, 0))
    x_ex = Bex @ (Bex.T @ xw)
    x_co = Bco @ (Bco.T @ xw)
    x_h = xw - x_ex - x_co
    return tuple(_unwhiten(L, c) for c in (x_ex, x_co, x_h))


def hodge_laplacian(cx, i):
    """The operator d*_i d_i + d_{i-1} d*_{i-1}, Gram-self-adjoint."""
    from ddforms.assembly import adjoint

    n = cx.spaces[i].dim
    mat = np.zeros((n, n))
    if i < len(cx.diffs):
        d = cx.diffs[i]
        mat += adjoint(d).matrix @ d.matrix
    if i > 0:
        d = cx.diffs[i - 1]
        mat += d.matrix @ adjoint(d).matrix
    return LinearOp(cx.spaces[i], cx.spaces[i], mat)


def laplace_solve(cx, i, f, rtol=1e-9):
    """Solve the Hodge-Laplace problem: u orthogonal to harmonics with
    Laplacian(u) = f - p, p the harmonic part of f.  Returns (u, p)."""
    L = cx.whitening(i)
    fw = L.T @ f if L.shape[0] else np.asarray(f, float)
    lap = np.zeros((cx.spaces[i].dim, cx.spaces[i].dim))
    if i < len(cx.diffs):
        a = cx.whitened_diff(i)
        lap += a.T @ a
    if i > 0:
        a = cx.whitened_diff(i - 1)
        lap += a @ a.T
    h = harmonic_space(cx, i, rtol)
    hw = L.T @ h.basis if L.shape[0] else h.basis
    pw = hw @ (hw.T @ fw)
    uw = np.linalg.pinv(lap, rcond=rtol) @ (fw - pw)
    return _unwhiten(L, uw), _unwhiten(L, pw)


def pseudoinverse(op, rtol=1e-9):
    """Metric Moore-Penrose pseudoinverse of an operator between spaces."""
    L_dom = _chol(op.domain.gram)
    L_cod = _chol(op.codomain.gram)
    Aw = _solve_lt(L_dom, op.matrix)
    if L_cod.shape[0]:
        Aw = L_cod.T @ Aw
    pw = np.linalg.pinv(Aw, rcond=rtol)
    if L_cod.shape[0]:
        pw = pw @ L_cod.T
    mat = _unwhiten(L_dom, pw)
    return LinearOp(op.codomain, op.domain, mat)


def subspace_transfer(a, b):
    """The matrix of Gram pairings between two orthonormal subspace bases."""
    if a.ambient is not b.ambient and a.ambient.dim != b.ambient.dim:
        raise AssemblyError("subspaces live in different ambient spaces")
    return a.basis.T @ a.ambient.gram @ b.basis


def subspace_equality_defect(a, b):
    """Zero iff the two subspaces coincide: combines the dimension gap and
    the deviation of the principal cosines from one."""
    if a.dim != b.dim:
        return float(abs(a.dim - b.dim))
    if a.dim == 0:
        return 0.0
    s = np.linalg.svd(subspace_transfer(a, b), compute_uv=False)
    return float(np.max(np.abs(s - 1.0)))
