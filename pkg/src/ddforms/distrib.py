"""Distributional complexes over a mesh and their harmonic space theory.

This module builds every complex family the library knows: per-stratum
horizontal and vertical complexes, conforming and chain-like complexes,
the redirected complexes that interpolate between them, the full graded
(total) complex, and their skeleton variants.  On top of the builders sit
the regularizing operators, the isomorphism steps between harmonic spaces
of consecutive gradings, and end-to-end verification routines: homology
dimensions against the mesh's Betti numbers, the full isomorphism chain
from simplicial homology to conforming harmonic forms, the double-complex
exactness checks, and the skeleton projection isomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ddforms.mesh import betti_numbers, skeleton_pair
from ddforms.polyforms import (check_geometric_decomposition,
                               check_local_exactness)
from ddforms.mesh import check_local_patch_condition
from ddforms.assembly import (AssemblyError, BrokenSpace, LinearOp, Subspace,
                              broken_space, derivative_operator,
                              graded_space, gram_orthonormalize, kernel_space,
                              matrix_nullspace, operator_D, operator_T,
                              adjoint)
from ddforms.hilbert import (ComplexInstance, harmonic_space, pseudoinverse,
                             subspace_equality_defect)


class CoordSpace:
    """A kernel subspace in its own orthonormal coordinates.

    Appears as a space of a complex instance: dimension is the subspace
    dimension and the Gram matrix is the identity.  ``embed`` maps
    coordinates back to the ambient broken space.
    """

    def __init__(self, subspace, label=""):
        self.subspace = subspace
        self.dim = subspace.dim
        self.label = label
        self.gram = np.eye(self.dim)

    @property
    def ambient(self):
        return self.subspace.ambient

    def embed(self, x):
        return self.subspace.basis @ x

    def __repr__(self):
        return f"CoordSpace({self.label!r}, dim={self.dim})"


def _cached(pair, key, builder):
    if key not in pair._cache:
        pair._cache[key] = builder()
    return pair._cache[key]


def inject_matrix(small, big):
    """Stratum-wise injection of one broken space into a larger one."""
    A = np.zeros((big.dim, small.dim))
    for s in small.strata:
        t = big.stratum(s.m, s.k)
        if t is None or t.block != s.block or len(t.simplices) != len(s.simplices):
            raise AssemblyError(
                f"stratum (m={s.m}, k={s.k}) does not embed")
        size = s.block * len(s.simplices)
        A[t.offset:t.offset + size, s.offset:s.offset + size] = np.eye(size)
    return A


def _kernel(pair, m, k, family, which, weight_top=None):
    key = ("kernel", which, family, m, k, weight_top)
    return _cached(pair, key, lambda: kernel_space(
        pair, m, k, family, which, weight_top))


def _restricted_diff(pair, sub_src, sub_tgt, target_m):
    """Differential between two kernel subspaces, in their coordinates.

    Applies the graded derivative of the ambient single-stratum space and
    keeps the rows of the target stratum; the remaining rows must vanish
    on the subspace (that is what makes the restriction well defined).
    """
    d_full = derivative_operator(sub_src.ambient)
    img = d_full.matrix @ sub_src.basis
    comp = np.zeros((sub_tgt.ambient.dim, sub_src.dim))
    rest = img.copy()
    if d_full.codomain.stratum(target_m) is not None:
        sl = d_full.codomain.stratum_slice(target_m)
        comp = img[sl]
        rest[sl] = 0.0
    if np.linalg.norm(rest) > 1e-8 * max(1.0, np.linalg.norm(img)):
        raise AssemblyError("restricted differential leaves the subspace")
    mat = sub_tgt.basis.T @ sub_tgt.ambient.gram @ comp
    resid = np.linalg.norm(comp - sub_tgt.basis @ mat)
    if resid > 1e-8 * max(1.0, np.linalg.norm(comp)):
        raise AssemblyError("differential image falls outside the subspace")
    return mat


def _transition_diff(sub_src, target_space, target_m):
    """Differential from a kernel subspace into a broken graded space."""
    d_full = derivative_operator(sub_src.ambient)
    img = d_full.matrix @ sub_src.basis
    mat = np.zeros((target_space.dim, sub_src.dim))
    rest = img.copy()
    ts = d_full.codomain.stratum(target_m)
    if ts is not None:
        sl = d_full.codomain.stratum_slice(target_m)
        rows = img[sl]
        rest[sl] = 0.0
        tt = target_space.stratum(target_m)
        size = tt.block * len(tt.simplices)
        mat[tt.offset:tt.offset + size] = rows
    if np.linalg.norm(rest) > 1e-8 * max(1.0, np.linalg.norm(img)):
        raise AssemblyError("transition map leaves extra components")
    return mat


def redirected_lambda(pair, family, k0, weight_top=None):
    """The degree-redirected complex: conforming spaces below k0, then the
    graded broken spaces with the distributional derivative.

    k0 = 0 gives the fully graded (total) complex; k0 = n + 1 gives the
    conforming complex.
    """
    n = pair.top_dim
    if not 0 <= k0 <= n + 1:
        raise AssemblyError(f"redirect degree {k0} out of range")
    key = ("redirL", family, k0, weight_top)

    def build():
        spaces = []
        subs = [_kernel(pair, n, k, family, "vertical", weight_top)
                for k in range(min(k0, n + 1))]
        for k, sub in enumerate(subs):
            spaces.append(CoordSpace(sub, f"L{k}(conf)"))
        ops = []
        for k in range(len(subs) - 1):
            mat = _restricted_diff(pair, subs[k], subs[k + 1], n)
            ops.append(LinearOp(spaces[k], spaces[k + 1], mat))
        if k0 <= n:
            cur = BrokenSpace(pair, [(n, k0)], family, weight_top=weight_top)
            spaces.append(cur)
            if subs:
                ops.append(LinearOp(spaces[k0 - 1], cur,
                                    _transition_diff(subs[-1], cur, n)))
            for _i in range(k0, n):
                d = derivative_operator(cur)
                spaces.append(d.codomain)
                ops.append(d)
                cur = d.codomain
        return ComplexInstance(spaces, ops, f"redirected-degree({k0})")

    return _cached(pair, key, build)


def redirected_gamma(pair, family, m0, weight_top=None):
    """The stratum-redirected complex: piecewise-constant-like (kernel of
    the cellwise derivative) spaces above stratum m0, then graded broken
    spaces.  m0 = n gives the total complex, m0 = -1 the chain-like one.
    """
    n = pair.top_dim
    if not -1 <= m0 <= n:
        raise AssemblyError(f"redirect stratum {m0} out of range")
    key = ("redirG", family, m0, weight_top)

    def build():
        spaces = []
        ops = []
        subs = []
        for m in range(n, m0, -1):
            subs.append(_kernel(pair, m, 0, family, "horizontal", weight_top))
        for i, sub in enumerate(subs):
            spaces.append(CoordSpace(sub, f"G0(T{n - i})"))
        for i in range(len(subs) - 1):
            mat = _restricted_diff(pair, subs[i], subs[i + 1], n - i - 1)
            ops.append(LinearOp(spaces[i], spaces[i + 1], mat))
        if m0 >= 0:
            cur = BrokenSpace(pair, [(m0, 0)], family, weight_top=weight_top)
            spaces.append(cur)
            if subs:
                ops.append(LinearOp(spaces[-2], cur,
                                    _transition_diff(subs[-1], cur, m0)))
            for _i in range(m0):
                d = derivative_operator(cur)
                spaces.append(d.codomain)
                ops.append(d)
                cur = d.codomain
        return ComplexInstance(spaces, ops, f"redirected-stratum({m0})")

    return _cached(pair, key, build)


def total_complex(pair, family, weight_top=None, weighted=True):
    if weighted:
        return redirected_lambda(pair, family, 0, weight_top)
    key = ("totalUW", family, weight_top)

    def build():
        n = pair.top_dim
        cur = BrokenSpace(pair, [(n, 0)], family, weight_top=weight_top,
                          weighted=False)
        spaces = [cur]
        ops = []
        for _i in range(n):
            d = derivative_operator(cur)
            spaces.append(d.codomain)
            ops.append(d)
            cur = d.codomain
        return ComplexInstance(spaces, ops, "total(unweighted)")

    return _cached(pair, key, build)


def conforming_complex(pair, family, weight_top=None):
    return redirected_lambda(pair, family, pair.top_dim + 1, weight_top)


def chainlike_complex(pair, family, weight_top=None):
    return redirected_gamma(pair, family, -1, weight_top)


def horizontal_complex(pair, family, m, weight_top=None):
    """The cellwise-derivative complex on the m-stratum (one row of the
    double complex, without augmentation)."""
    spaces = [broken_space(pair, m, k, family, weight_top)
              for k in range(m + 1)]
    ops = []
    for k in range(m):
        op = operator_D(pair, m, k, family, weight_top)
        ops.append(LinearOp(spaces[k], spaces[k + 1], op.matrix))
    return ComplexInstance(spaces, ops, f"horizontal(m={m})")


def vertical_complex(pair, family, k, weight_top=None, augmented=True):
    """The trace-jump complex at form degree k (one column of the double
    complex), optionally augmented by the single-valued space in front."""
    n = pair.top_dim
    spaces = []
    ops = []
    if augmented:
        sub = _kernel(pair, n, k, family, "vertical", weight_top)
        spaces.append(CoordSpace(sub, f"L{k}(conf)"))
    prev = None
    for m in range(n, k - 1, -1):
        sp = broken_space(pair, m, k, family, weight_top)
        if augmented and m == n:
            ops.append(LinearOp(spaces[0], sp, spaces[0].subspace.basis))
        if prev is not None:
            t = operator_T(pair, m + 1, k, family, weight_top)
            ops.append(LinearOp(prev, sp, t.matrix))
        spaces.append(sp)
        prev = sp
    return ComplexInstance(spaces, ops, f"vertical(k={k})")


# -- harmonic spaces ------------------------------------------------------


def harmonic_lambda(pair, family, k, b, weight_top=None):
    """The degree-k harmonic space at grading depth b (b = 1..k+1)."""
    if not 1 <= b <= k + 1:
        raise AssemblyError(f"grading depth {b} out of range for degree {k}")
    cx = redirected_lambda(pair, family, k - b + 1, weight_top)
    return harmonic_space(cx, k)


def harmonic_gamma(pair, family, m, b, weight_top=None):
    """The chain-side harmonic space over the m-stratum at depth b."""
    n = pair.top_dim
    if not 1 <= b <= n - m + 1:
        raise AssemblyError(f"grading depth {b} out of range for stratum {m}")
    cx = redirected_gamma(pair, family, m + b - 1, weight_top)
    return harmonic_space(cx, n - m)


def harmonic_conforming(pair, family, k, weight_top=None):
    return harmonic_space(conforming_complex(pair, family, weight_top), k)


def harmonic_chain(pair, family, m, weight_top=None):
    cx = chainlike_complex(pair, family, weight_top)
    return harmonic_space(cx, pair.top_dim - m)


def _embedded(coord_harmonic, space):
    """View a CoordSpace harmonic basis inside its ambient broken space."""
    basis = space.subspace.basis @ coord_harmonic.basis
    return Subspace(space.ambient, basis)


# -- regularizers and isomorphism steps -----------------------------------


def regularizer_R(pair, family, k, b, weight_top=None):
    """The preimage regularizer on the degree-graded space at depth b.

    Subtracts the derivative of a right-inverse lift of the deepest graded
    component; the result of applying it to a cocycle has vanishing
    deepest component and an unchanged derivative.
    """
    n = pair.top_dim
    if not 2 <= b <= k + 1:
        raise AssemblyError(f"depth {b} out of range for regularizer (k={k})")
    cx = redirected_lambda(pair, family, k - b + 1, weight_top)
    sp = cx.spaces[k]
    sp_prev = cx.spaces[k - 1]
    d_prev = cx.diffs[k - 1]
    deep_m, deep_k = n - b + 1, k - b + 1
    t_op = operator_T(pair, deep_m + 1, deep_k, family, weight_top)
    E = pseudoinverse(t_op)
    proj = np.zeros((E.domain.dim, sp.dim))
    sl = sp.stratum_slice(deep_m)
    proj[:, sl] = np.eye(E.domain.dim)
    inj = np.zeros((sp_prev.dim, E.codomain.dim))
    sl = sp_prev.stratum_slice(deep_m + 1)
    inj[sl, :] = np.eye(E.codomain.dim)
    mat = np.eye(sp.dim) - (-1.0) ** (b + 1) * (
        d_prev.matrix @ inj @ E.matrix @ proj)
    return LinearOp(sp, sp, mat)


def regularizer_S(pair, family, m, b, weight_top=None):
    """Chain-side mirror of regularizer_R on the stratum-graded space."""
    n = pair.top_dim
    if not 2 <= b <= n - m + 1:
        raise AssemblyError(f"depth {b} out of range for regularizer (m={m})")
    cx = redirected_gamma(pair, family, m + b - 1, weight_top)
    idx = n - m
    sp = cx.spaces[idx]
    sp_prev = cx.spaces[idx - 1]
    d_prev = cx.diffs[idx - 1]
    deep_m, deep_k = m + b - 1, b - 1
    d_op = operator_D(pair, deep_m, deep_k - 1, family, weight_top)
    P = pseudoinverse(d_op)
    proj = np.zeros((P.domain.dim, sp.dim))
    sl = sp.stratum_slice(deep_m)
    proj[:, sl] = np.eye(P.domain.dim)
    inj = np.zeros((sp_prev.dim, P.codomain.dim))
    sl = sp_prev.stratum_slice(deep_m)
    inj[sl, :] = np.eye(P.codomain.dim)
    mat = np.eye(sp.dim) + (-1.0) ** (b + n - m) * (
        d_prev.matrix @ inj @ P.matrix @ proj)
    return LinearOp(sp, sp, mat)


def _cocycle_projector(cx, i):
    """Gram-orthogonal projection onto the kernel of the differential at
    index i; the identity when there is no outgoing differential."""
    sp = cx.spaces[i]
    if i >= len(cx.diffs) or cx.diffs[i].matrix.shape[0] == 0:
        return np.eye(sp.dim)
    K = matrix_nullspace(cx.diffs[i].matrix)
    Kb = gram_orthonormalize(sp.gram, K)
    return Kb @ (Kb.T @ sp.gram)


def iso_step(pair, family, side, index, b, weight_top=None, project=True,
             smin_tol=1e-6):
    """One harmonic-space transfer between grading depths b-1 and b.

    side "lambda" fixes the form degree (index = k), side "gamma" fixes
    the stratum (index = m).  The transfer composes the adjoint of the
    regularizer with the cocycle projection and is reported with its
    smallest relative singular value; the underlying theory makes it a
    bijection.
    """
    n = pair.top_dim
    if side == "lambda":
        k = index
        cx = redirected_lambda(pair, family, k - b + 1, weight_top)
        reg = regularizer_R(pair, family, k, b, weight_top)
        h_src = harmonic_lambda(pair, family, k, b - 1, weight_top)
        h_tgt = harmonic_lambda(pair, family, k, b, weight_top)
        pos = k
    elif side == "gamma":
        m = index
        cx = redirected_gamma(pair, family, m + b - 1, weight_top)
        reg = regularizer_S(pair, family, m, b, weight_top)
        h_src = harmonic_gamma(pair, family, m, b - 1, weight_top)
        h_tgt = harmonic_gamma(pair, family, m, b, weight_top)
        pos = n - m
    else:
        raise AssemblyError(f"unknown side {side!r}")
    sp = cx.spaces[pos]
    emb = inject_matrix(h_src.ambient, sp)
    src_vectors = emb @ h_src.basis
    rstar = adjoint(reg).matrix
    moved = rstar @ src_vectors
    Q = _cocycle_projector(cx, pos) if project else np.eye(sp.dim)
    image = Q @ moved
    transfer = h_tgt.basis.T @ sp.gram @ image
    if h_src.dim:
        pairing = src_vectors.T @ sp.gram @ image
        pairing_defect = float(np.linalg.norm(pairing - np.eye(h_src.dim)))
    else:
        pairing_defect = 0.0
    if h_src.dim and h_src.dim == h_tgt.dim:
        s = np.linalg.svd(transfer, compute_uv=False)
        smin_rel = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    else:
        smin_rel = 1.0 if h_src.dim == h_tgt.dim else 0.0
    ok = h_src.dim == h_tgt.dim and (h_src.dim == 0 or smin_rel > smin_tol)
    return {
        "side": side,
        "index": index,
        "b": b,
        "src_dim": h_src.dim,
        "tgt_dim": h_tgt.dim,
        "smin_rel": smin_rel,
        "pairing_defect": pairing_defect,
        "ok": bool(ok),
        "transfer": transfer,
    }


def exactness_witness(pair, family, k, b, weight_top=None):
    """Constructive pairing witnesses for harmonic forms at depth b-1.

    For each harmonic basis vector at depth b-1, builds a preimage-style
    potential by the right-inverse recursion and reports the relative
    defect of the pairing of its derivative with the harmonic form, which
    the theory forces to equal the squared norm.
    """
    n = pair.top_dim
    if not 2 <= b <= k + 1:
        raise AssemblyError("depth out of range")
    h = harmonic_lambda(pair, family, k, b - 1, weight_top)
    if h.dim == 0:
        return []
    amb = h.ambient
    xi_space = graded_space(pair, n, k - 1, b - 1, family,
                            weight_top=weight_top)
    d_xi = derivative_operator(xi_space)
    emb = inject_matrix(amb, d_xi.codomain)
    pinvs = {}
    t_ops = {}
    out = []
    for col in range(h.dim):
        omega = h.basis[:, col]
        xi = np.zeros(xi_space.dim)
        prev = None
        for j in range(b - 1):
            mj, kj = n - j, k - j
            st = amb.stratum(mj)
            size = st.block * len(st.simplices)
            wj = omega[st.offset:st.offset + size]
            rhs = wj.copy()
            if j >= 1:
                t = t_ops.get(mj + 1)
                if t is None:
                    t = t_ops[mj + 1] = operator_T(pair, mj + 1, kj, family,
                                                   weight_top)
                rhs = rhs - (-1.0) ** j * (t.matrix @ prev)
            key = (mj, kj - 1)
            P = pinvs.get(key)
            if P is None:
                P = pinvs[key] = pseudoinverse(
                    operator_D(pair, mj, kj - 1, family, weight_top))
            xij = (-1.0) ** j * (P.matrix @ rhs)
            sl = xi_space.stratum_slice(mj)
            xi[sl] = xij
            prev = xij
        dxi = d_xi.matrix @ xi
        w_emb = emb @ omega
        value = dxi @ d_xi.codomain.gram @ w_emb
        norm2 = w_emb @ d_xi.codomain.gram @ w_emb
        out.append(abs(value - norm2) / max(norm2, 1e-30))
    return out


# -- end-to-end verification ----------------------------------------------


def _betti(pair):
    return _cached(pair, ("betti",), lambda: betti_numbers(pair))


def verify_chain(pair, family, k, weight_top=None, smin_tol=1e-6):
    """The full isomorphism chain from simplicial homology at index n-k to
    the conforming harmonic space of degree k.

    Returns a report with one entry per step: equalities are checked as
    subspace coincidences, isomorphism steps by the singular values of the
    harmonic transfer matrices, and the central identity by comparing the
    two graded complexes space by space and matrix by matrix.
    """
    n = pair.top_dim
    m = n - k
    target = _betti(pair)[m]
    steps = []

    def record(label, ok, **extra):
        entry = {"label": label, "ok": bool(ok)}
        entry.update(extra)
        steps.append(entry)

    # simplicial homology vs the chain-complex harmonic space
    c0 = harmonic_chain(pair, family, m, weight_top)
    record("homology vs chain harmonic", c0.dim == target,
           dims=(target, c0.dim))

    # depth-1 equality on the chain side
    cg1 = harmonic_gamma(pair, family, m, 1, weight_top)
    chain_cx = chainlike_complex(pair, family, weight_top)
    emb0 = _embedded(c0, chain_cx.spaces[n - m])
    defect = subspace_equality_defect(emb0, cg1)
    record("chain harmonic depth-1 equality", defect < 1e-8, defect=defect)

    # chain-side isomorphism steps
    for b in range(2, k + 2):
        st = iso_step(pair, family, "gamma", m, b, weight_top,
                      smin_tol=smin_tol)
        record(f"chain transfer depth {b - 1}->{b}",
               st["ok"] and st["src_dim"] == target,
               dims=(st["src_dim"], st["tgt_dim"]), smin=st["smin_rel"])

    # central identity: the two maximal graded complexes coincide
    tg = redirected_gamma(pair, family, n, weight_top)
    tl = redirected_lambda(pair, family, 0, weight_top)
    same = len(tg) == len(tl)
    max_diff = 0.0
    if same:
        for i in range(len(tg)):
            a, bsp = tg.spaces[i], tl.spaces[i]
            if [(s.m, s.k) for s in a.strata] != [(s.m, s.k) for s in bsp.strata]:
                same = False
                break
        for i in range(len(tg.diffs)):
            max_diff = max(max_diff, float(np.linalg.norm(
                tg.diffs[i].matrix - tl.diffs[i].matrix)))
        same = same and max_diff < 1e-12
    record("central graded identity", same, matrix_defect=max_diff)

    # degree-side isomorphism steps
    for b in range(k + 1, 1, -1):
        st = iso_step(pair, family, "lambda", k, b, weight_top,
                      smin_tol=smin_tol)
        record(f"degree transfer depth {b - 1}->{b}",
               st["ok"] and st["src_dim"] == target,
               dims=(st["src_dim"], st["tgt_dim"]), smin=st["smin_rel"])

    # depth-1 equality on the degree side
    h1 = harmonic_lambda(pair, family, k, 1, weight_top)
    hc = harmonic_conforming(pair, family, k, weight_top)
    conf_cx = conforming_complex(pair, family, weight_top)
    embc = _embedded(hc, conf_cx.spaces[k])
    defect = subspace_equality_defect(embc, h1)
    record("conforming harmonic depth-1 equality", defect < 1e-8,
           defect=defect)
    record("conforming dimension", hc.dim == target, dims=(target, hc.dim))

    dims = [target, c0.dim, cg1.dim]
    dims += [harmonic_gamma(pair, family, m, b, weight_top).dim
             for b in range(2, k + 2)]
    dims += [harmonic_lambda(pair, family, k, b, weight_top).dim
             for b in range(k + 1, 0, -1)]
    dims.append(hc.dim)
    return {
        "degree": k,
        "betti": target,
        "chain_dims": dims,
        "steps": steps,
        "passed": all(s["ok"] for s in steps) and all(d == target for d in dims),
    }


def skeleton_projection(pair, family, k, weight_top=None, smin_tol=1e-6):
    """The codimension-one skeleton isomorphism at degree k >= 2.

    Projects the depth-2 harmonic space of the full mesh onto the
    single-valued cocycles living on the skeleton stratum and compares the
    image with the skeleton's conforming harmonic space at degree k-1.
    """
    n = pair.top_dim
    if k < 2:
        raise AssemblyError("the skeleton projection needs k >= 2")
    h2 = harmonic_lambda(pair, family, k, 2)
    amb = h2.ambient
    skel = skeleton_pair(pair, n - 1)
    skel_cx = conforming_complex(skel, family, weight_top=n)
    h_skel = harmonic_space(skel_cx, k - 1)
    skel_amb = skel_cx.spaces[k - 1].ambient

    # single-valued cocycles inside the stratum (n-1, k-1)
    t_rows = operator_T(skel, n - 1, k - 1, family, weight_top=n) \
        if n - 1 >= 1 else None
    d_rows = operator_D(skel, n - 1, k - 1, family, weight_top=n)
    stack = [d_rows.matrix]
    if t_rows is not None:
        stack.append(t_rows.matrix)
    K = matrix_nullspace(np.vstack(stack))
    Kb = gram_orthonormalize(skel_amb.gram, K)

    comp = h2.basis[amb.stratum_slice(n - 1)]
    projected = Kb @ (Kb.T @ (skel_amb.gram @ comp))
    h_skel_emb = skel_cx.spaces[k - 1].subspace.basis @ h_skel.basis
    transfer = h_skel_emb.T @ skel_amb.gram @ projected
    if h2.dim and h2.dim == h_skel.dim:
        s = np.linalg.svd(transfer, compute_uv=False)
        smin_rel = float(s[-1] / s[0]) if s[0] > 0 else 0.0
    else:
        smin_rel = 1.0 if h2.dim == h_skel.dim else 0.0
    ok = h2.dim == h_skel.dim and (h2.dim == 0 or smin_rel > smin_tol)
    return {
        "degree": k,
        "dims": (h2.dim, h_skel.dim),
        "smin_rel": smin_rel,
        "transfer": transfer,
        "ok": bool(ok),
    }


def skeleton_degree_zero_identity(pair, family, m):
    """Dimension identity for the degree-0 skeleton harmonic space.

    The cocycle space of 0-forms over the m-skeleton splits into the chain
    harmonic space at stratum m plus the traces of the one-higher-stratum
    cellwise-constant space.
    """
    n = pair.top_dim
    if m < 0 or m > n:
        raise AssemblyError("stratum out of range")
    skel = skeleton_pair(pair, m)
    d0 = operator_D(skel, m, 0, family, weight_top=n)
    stack = [d0.matrix]
    if m >= 1:
        t0 = operator_T(skel, m, 0, family, weight_top=n)
        stack.append(t0.matrix)
    lhs = matrix_nullspace(np.vstack(stack)).shape[1]
    rhs = harmonic_chain(pair, family, m).dim
    if m + 1 <= n:
        gamma_up = _kernel(pair, m + 1, 0, family, "horizontal")
        t = operator_T(pair, m + 1, 0, family)
        img = t.matrix @ gamma_up.basis
        rhs += int(np.linalg.matrix_rank(img, tol=1e-9))
    return {"stratum": m, "lhs": int(lhs), "rhs": int(rhs),
            "ok": bool(lhs == rhs)}


def check_subcomplex_nesting(pair, family, k0, weight_top=None):
    """The redirected complex at k0 embeds block-wise into the one at
    k0 - 1 from index k0 - 1 on (with the conforming space embedded by its
    basis).  Returns the largest commutation defect."""
    n = pair.top_dim
    if not 1 <= k0 <= n:
        raise AssemblyError("nesting needs 1 <= k0 <= n")
    cxa = redirected_lambda(pair, family, k0, weight_top)
    cxb = redirected_lambda(pair, family, k0 - 1, weight_top)

    def emb(i):
        sa = cxa.spaces[i]
        sb = cxb.spaces[i]
        if isinstance(sa, CoordSpace):
            if isinstance(sb, CoordSpace):
                basis_a = sa.subspace.basis
                basis_b = sb.subspace.basis
                return basis_b.T @ sb.ambient.gram @ basis_a
            return inject_matrix(sa.ambient, sb) @ sa.subspace.basis
        return inject_matrix(sa, sb)

    defect = 0.0
    for i in range(max(k0 - 2, 0), n):
        lhs = cxb.diffs[i].matrix @ emb(i)
        rhs = emb(i + 1) @ cxa.diffs[i].matrix
        defect = max(defect, float(np.linalg.norm(lhs - rhs)))
    return defect


def verify_double_complex(pair, family, weight_top=None):
    """Row and column exactness of the broken double complex plus the
    dimension identities tying harmonic spaces to Betti numbers."""
    n = pair.top_dim
    report = {"rows": {}, "columns": {}, "dimensions": {}, "passed": True}

    for m in range(n + 1):
        ranks = {}
        dims = {}
        for k in range(m + 1):
            sp = broken_space(pair, m, k, family, weight_top)
            dims[k] = sp.dim
            if k < m:
                op = operator_D(pair, m, k, family, weight_top)
                ranks[k] = int(np.linalg.matrix_rank(op.matrix, tol=1e-9)) \
                    if op.matrix.size else 0
            else:
                ranks[k] = 0
        cells = len(pair.stratum(m))
        entries = {}
        ok_all = True
        for k in range(m + 1):
            nullity = dims[k] - ranks[k]
            if k == 0:
                ok = nullity == cells
            else:
                ok = nullity == ranks[k - 1]
            entries[k] = {"dim": dims[k], "kernel": nullity, "ok": bool(ok)}
            ok_all = ok_all and ok
        report["rows"][m] = {"indices": entries, "ok": bool(ok_all)}
        report["passed"] = report["passed"] and ok_all

    for k in range(n + 1):
        dims = {}
        ranks = {}
        for m in range(n, k - 1, -1):
            sp = broken_space(pair, m, k, family, weight_top)
            dims[m] = sp.dim
            if m < n:
                op = operator_T(pair, m + 1, k, family, weight_top)
                ranks[m] = int(np.linalg.matrix_rank(op.matrix, tol=1e-9)) \
                    if op.matrix.size else 0
            else:
                ranks[m] = 0
        conf = _kernel(pair, n, k, family, "vertical", weight_top).dim
        entries = {}
        ok_all = True
        for m in range(n, k - 1, -1):
            out_rank = ranks.get(m - 1, 0) if m > k else 0
            nullity = dims[m] - out_rank
            if m == n:
                ok = nullity == conf
            else:
                ok = nullity == ranks[m]
            entries[m] = {"dim": dims[m], "kernel": nullity, "ok": bool(ok)}
            ok_all = ok_all and ok
        report["columns"][k] = {"indices": entries, "ok": bool(ok_all)}
        report["passed"] = report["passed"] and ok_all

    betti = _betti(pair)
    for k in range(n + 1):
        hk = harmonic_conforming(pair, family, k, weight_top).dim
        ck = harmonic_chain(pair, family, n - k, weight_top).dim
        ok = hk == betti[n - k] == ck
        report["dimensions"][k] = {
            "conforming": hk, "chain": ck, "betti": betti[n - k],
            "ok": bool(ok)}
        report["passed"] = report["passed"] and ok
    return report


def harmonic_family(pair, family, weight_top=None):
    """Dimension table of every graded harmonic space on this mesh."""
    n = pair.top_dim
    report = {"lambda": {}, "gamma": {}, "conforming": {}, "chain": {}}
    for k in range(n + 1):
        report["conforming"][k] = harmonic_conforming(
            pair, family, k, weight_top).dim
        for b in range(1, k + 2):
            report["lambda"][(k, b)] = harmonic_lambda(
                pair, family, k, b, weight_top).dim
    for m in range(n + 1):
        report["chain"][m] = harmonic_chain(pair, family, m, weight_top).dim
        for b in range(1, n - m + 2):
            report["gamma"][(m, b)] = harmonic_gamma(
                pair, family, m, b, weight_top).dim
    return report


@dataclass(frozen=True)
class FamilySpec:
    """Names one complex family: the kind plus its fixed index.

    kinds: "horizontal" (index = stratum m), "vertical" (index = degree k),
    "conforming", "chainlike", "total", "redirected_lambda" (index = k0),
    "redirected_gamma" (index = m0), "skeleton_lambda" (index = skeleton
    dimension m), "skeleton_gamma" (index = skeleton dimension m).
    """

    kind: str
    index: int = 0


def build_family(pair, family, spec, weight_top=None, strict=False):
    """Build the complex instance a FamilySpec names."""
    if strict:
        check_conditions(pair, family, strict=True)
    n = pair.top_dim
    kind = spec.kind
    if kind == "horizontal":
        return horizontal_complex(pair, family, spec.index, weight_top)
    if kind == "vertical":
        return vertical_complex(pair, family, spec.index, weight_top)
    if kind == "conforming":
        return conforming_complex(pair, family, weight_top)
    if kind == "chainlike":
        return chainlike_complex(pair, family, weight_top)
    if kind == "total":
        return total_complex(pair, family, weight_top)
    if kind == "redirected_lambda":
        return redirected_lambda(pair, family, spec.index, weight_top)
    if kind == "redirected_gamma":
        return redirected_gamma(pair, family, spec.index, weight_top)
    if kind == "skeleton_lambda":
        return total_complex(skeleton_pair(pair, spec.index), family,
                             weight_top=n if weight_top is None else weight_top)
    if kind == "skeleton_gamma":
        return chainlike_complex(skeleton_pair(pair, spec.index), family,
                                 weight_top=n if weight_top is None else weight_top)
    raise AssemblyError(f"unknown complex kind {kind!r}")


def check_conditions(pair, family, strict=False):
    """The three structural conditions a family must satisfy on a mesh:
    per-simplex exactness, face decomposition, and local patch homology."""
    n = pair.top_dim
    exact = {m: check_local_exactness(family, m) for m in range(n + 1)
             if pair.simplices(m)}
    decomp = {k: check_geometric_decomposition(pair, family, k)
              for k in range(n + 1)}
    patch = check_local_patch_condition(pair)
    passed = all(r["passed"] for r in exact.values()) and \
        all(r["passed"] for r in decomp.values()) and patch["passed"]
    if strict and not passed:
        raise AssemblyError("family/mesh condition check failed")
    return {"local_exactness": exact, "decomposition": decomp,
            "patch": patch, "passed": bool(passed)}
