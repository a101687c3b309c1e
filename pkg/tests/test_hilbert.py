import numpy as np
import pytest

from ddforms.assembly import (AssemblyError, LinearOp, operator_D,
                              operator_T)
from ddforms.hilbert import (ComplexInstance, betti_from_complex,
                             harmonic_space, hodge_decompose,
                             hodge_laplacian, laplace_solve, pseudoinverse,
                             subspace_equality_defect, subspace_transfer)
from ddforms.mesh import betti_numbers
from ddforms.polyforms import whitney
from ddforms import distrib


@pytest.fixture(scope="module")
def annulus_cx(catalog):
    pair = catalog("annulus", 1, "full")
    return distrib.conforming_complex(pair, whitney())


def test_complex_validates_composition(catalog):
    cx = distrib.total_complex(catalog("annulus"), whitney())
    bad = [LinearOp(cx.spaces[i], cx.spaces[i + 1],
                    np.ones_like(cx.diffs[i].matrix))
           for i in range(len(cx.diffs))]
    with pytest.raises(AssemblyError):
        ComplexInstance(cx.spaces, bad, "broken-on-purpose")


def test_harmonic_dims_match_betti(catalog, annulus_cx):
    pair = catalog("annulus", 1, "full")
    betti = betti_numbers(pair)
    dims = betti_from_complex(annulus_cx)
    n = pair.top_dim
    assert dims == [betti[n - k] for k in range(n + 1)]


def test_harmonic_equals_laplacian_kernel(annulus_cx):
    for i in range(len(annulus_cx)):
        h = harmonic_space(annulus_cx, i)
        lap = hodge_laplacian(annulus_cx, i)
        s = np.linalg.svd(lap.matrix, compute_uv=False)
        kdim = int(np.sum(s < 1e-9 * max(s[0], 1.0)))
        assert kdim == h.dim
        if h.dim:
            resid = np.linalg.norm(lap.matrix @ h.basis)
            assert resid < 1e-9


def test_hodge_decomposition(annulus_cx):
    rng = np.random.default_rng(5)
    i = 1
    gram = annulus_cx.spaces[i].gram
    x = rng.standard_normal(annulus_cx.spaces[i].dim)
    ex, co, h = hodge_decompose(x, annulus_cx, i)
    assert np.linalg.norm(ex + co + h - x) < 1e-10
    assert abs(ex @ gram @ co) < 1e-10
    assert abs(ex @ gram @ h) < 1e-10
    assert abs(co @ gram @ h) < 1e-10


def test_hodge_projector_identities(annulus_cx):
    # exact part of an exact vector is itself; harmonic of harmonic likewise
    i = 1
    d = annulus_cx.diffs[0]
    rng = np.random.default_rng(6)
    v = d.matrix @ rng.standard_normal(annulus_cx.spaces[0].dim)
    ex, co, h = hodge_decompose(v, annulus_cx, i)
    assert np.linalg.norm(ex - v) < 1e-9 * max(np.linalg.norm(v), 1.0)
    hb = harmonic_space(annulus_cx, i).basis[:, 0]
    ex, co, h = hodge_decompose(hb, annulus_cx, i)
    assert np.linalg.norm(h - hb) < 1e-9


def test_rank_identity(annulus_cx):
    # rank of d_i equals dim of space i+1 minus the codifferential kernel
    for i in range(len(annulus_cx.diffs)):
        a = annulus_cx.whitened_diff(i)
        rank = np.linalg.matrix_rank(a, tol=1e-9)
        coker = a.shape[0] - np.linalg.matrix_rank(a.T, tol=1e-9)
        assert rank == annulus_cx.spaces[i + 1].dim - coker


def test_laplace_solve(annulus_cx):
    rng = np.random.default_rng(7)
    for i in range(len(annulus_cx)):
        dim = annulus_cx.spaces[i].dim
        if dim == 0:
            continue
        f = rng.standard_normal(dim)
        u, p = laplace_solve(annulus_cx, i, f)
        lap = hodge_laplacian(annulus_cx, i)
        resid = np.linalg.norm(lap.matrix @ u - (f - p))
        assert resid < 1e-8 * max(np.linalg.norm(f), 1.0)
        h = harmonic_space(annulus_cx, i)
        if h.dim:
            gram = annulus_cx.spaces[i].gram
            assert np.linalg.norm(h.basis.T @ gram @ u) < 1e-8


def test_laplace_solve_harmonic_source(annulus_cx):
    h = harmonic_space(annulus_cx, 1)
    f = h.basis[:, 0]
    u, p = laplace_solve(annulus_cx, 1, f)
    assert np.linalg.norm(u) < 1e-9
    assert np.linalg.norm(p - f) < 1e-9


def test_pseudoinverse_contracts(catalog):
    pair = catalog("annulus")
    fam = whitney()
    for op in (operator_T(pair, 2, 0, fam), operator_T(pair, 2, 1, fam),
               operator_D(pair, 2, 0, fam), operator_D(pair, 1, 0, fam)):
        E = pseudoinverse(op)
        A, P = op.matrix, E.matrix
        scale = max(np.linalg.norm(A), 1.0)
        assert np.linalg.norm(A @ P @ A - A) < 1e-10 * scale
        assert np.linalg.norm(P @ A @ P - P) < 1e-10 * max(np.linalg.norm(P), 1.0)
        # gram self-adjointness of both products
        gd, gc = op.domain.gram, op.codomain.gram
        ap = gc @ (A @ P)
        pa = gd @ (P @ A)
        assert np.linalg.norm(ap - ap.T) < 1e-10 * max(np.linalg.norm(ap), 1.0)
        assert np.linalg.norm(pa - pa.T) < 1e-10 * max(np.linalg.norm(pa), 1.0)


def test_pseudoinverse_of_identity(annulus_cx):
    sp = annulus_cx.spaces[1]
    op = LinearOp(sp, sp, np.eye(sp.dim))
    E = pseudoinverse(op)
    assert np.linalg.norm(E.matrix - np.eye(sp.dim)) < 1e-10


def test_subspace_equality_defect(annulus_cx):
    h = harmonic_space(annulus_cx, 1)
    assert subspace_equality_defect(h, h) < 1e-12
    t = subspace_transfer(h, h)
    assert np.allclose(t, np.eye(h.dim))
