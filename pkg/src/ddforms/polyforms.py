"""Polynomial differential forms on a single simplex.

Forms are stored in barycentric coordinates: each term is a monomial
lambda^alpha times a wedge of barycentric differentials d(lambda_i).  The
wedge part is kept canonical by eliminating d(lambda_0) through the
relation sum_i d(lambda_i) = 0, and the polynomial part can be reduced to
the variables lambda_1..lambda_m for unique coefficient vectors.  On top
of this the module provides the exterior derivative, traces, wedge, Hodge
star, codifferential, exact L2 inner products, the standard polynomial
element families, trace-free (bubble) subspaces and extension operators,
and checkers for local exactness and geometric decomposability.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ddforms.mesh import _permutation_parity


class FormError(ValueError):
    """Invalid differential-form operation (dimension or degree mismatch)."""


class FamilyError(ValueError):
    """An element family fails a structural requirement."""


# -- combinatorial helpers ------------------------------------------------


def _sort_with_parity(seq):
    """Sort an index tuple, returning (sorted tuple, permutation sign).

    Returns sign 0 when the tuple has a repeated index (the wedge is zero).
    """
    if len(set(seq)) != len(seq):
        return (), 0
    srt = tuple(sorted(seq))
    return srt, _permutation_parity(seq, srt)


@lru_cache(maxsize=None)
def _canon_wedge(indices, m):
    """Expand a wedge of d(lambda_i) into the canonical frame on {1..m}.

    Any occurrence of index 0 is replaced via d(lambda_0) = -sum of the
    others.  Returns a dict from strictly increasing tuples in {1..m} to
    integer coefficients.
    """
    indices = tuple(indices)
    if 0 in indices:
        pos = indices.index(0)
        out = {}
        for i in range(1, m + 1):
            rep = indices[:pos] + (i,) + indices[pos + 1:]
            for sig, c in _canon_wedge(rep, m).items():
                out[sig] = out.get(sig, 0) - c
        return {s: c for s, c in out.items() if c}
    srt, sign = _sort_with_parity(indices)
    return {srt: sign} if sign else {}


def _compositions(total, parts):
    """All tuples of ``parts`` nonnegative integers summing to ``total``."""
    if parts == 0:
        return [()] if total == 0 else []
    out = []
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            out.append((head,) + rest)
    return out


@lru_cache(maxsize=None)
def _one_minus_sum_power(a, m):
    """Expansion of (1 - x_1 - ... - x_m)^a as {exponent tuple: coeff}."""
    out = {}
    for combo in _compositions_leq(a, m):
        s = sum(combo)
        coeff = (-1) ** s * math.factorial(a)
        coeff //= math.factorial(a - s)
        for j in combo:
            coeff //= math.factorial(j)
        out[combo] = float(coeff)
    return out


@lru_cache(maxsize=None)
def _compositions_leq(total, parts):
    """All tuples of ``parts`` nonnegative integers summing to <= total."""
    out = []
    for t in range(total + 1):
        out.extend(_compositions(t, parts))
    return tuple(out)


# -- forms ----------------------------------------------------------------


class BarycentricForm:
    """A polynomial differential form on an m-simplex.

    ``terms`` maps (alpha, sigma) to a coefficient, where alpha is an
    exponent tuple over lambda_0..lambda_m and sigma is a strictly
    increasing tuple in {1..m} naming the wedge d(lambda_sigma).
    """

    __slots__ = ("dim", "degree", "terms")

    def __init__(self, dim, degree, terms=None):
        self.dim = dim
        self.degree = degree
        self.terms = dict(terms) if terms else {}

    def _add(self, key, coeff):
        c = self.terms.get(key, 0.0) + coeff
        if c:
            self.terms[key] = c
        else:
            self.terms.pop(key, None)

    @classmethod
    def zero(cls, dim, degree):
        return cls(dim, degree)

    @classmethod
    def monomial(cls, dim, alpha, indices=(), coeff=1.0):
        """The form coeff * lambda^alpha * wedge of d(lambda_i) over indices.

        ``indices`` may mention index 0 and need not be sorted; the result
        is canonicalized.
        """
        alpha = tuple(alpha)
        if len(alpha) != dim + 1:
            raise FormError(f"exponent tuple has length {len(alpha)}, need {dim + 1}")
        f = cls(dim, len(indices))
        for sig, c in _canon_wedge(tuple(indices), dim).items():
            f._add((alpha, sig), coeff * c)
        return f

    def _like(self, other):
        if self.dim != other.dim:
            raise FormError("forms live on simplices of different dimension")

    def __add__(self, other):
        self._like(other)
        if self.degree != other.degree:
            raise FormError("degree mismatch in sum")
        out = BarycentricForm(self.dim, self.degree, self.terms)
        for key, c in other.terms.items():
            out._add(key, c)
        return out

    def __sub__(self, other):
        return self + other * (-1.0)

    def __mul__(self, scalar):
        out = BarycentricForm(self.dim, self.degree)
        for key, c in self.terms.items():
            out._add(key, c * scalar)
        return out

    __rmul__ = __mul__

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for c in self.terms.values())

    def derivative(self):
        """Exterior derivative, canonicalized.  Top-degree input gives 0."""
        out = BarycentricForm(self.dim, self.degree + 1)
        if self.degree >= self.dim:
            return out
        for (alpha, sig), c in self.terms.items():
            for i, ai in enumerate(alpha):
                if ai == 0:
                    continue
                na = alpha[:i] + (ai - 1,) + alpha[i + 1:]
                for nsig, w in _canon_wedge((i,) + sig, self.dim).items():
                    out._add((na, nsig), c * ai * w)
        return out

    def wedge(self, other):
        self._like(other)
        out = BarycentricForm(self.dim, self.degree + other.degree)
        if out.degree > self.dim:
            raise FormError("wedge degree exceeds simplex dimension")
        for (a1, s1), c1 in self.terms.items():
            for (a2, s2), c2 in other.terms.items():
                srt, sign = _sort_with_parity(s1 + s2)
                if sign:
                    alpha = tuple(x + y for x, y in zip(a1, a2))
                    out._add((alpha, srt), c1 * c2 * sign)
        return out

    def trace(self, positions):
        """Pull back to the face spanned by the given vertex positions.

        ``positions`` is the increasing tuple of local vertex indices of
        the face inside this simplex.  Terms involving a dropped
        barycentric variable or its differential vanish.
        """
        positions = tuple(positions)
        kept = set(positions)
        remap = {p: i for i, p in enumerate(positions)}
        mf = len(positions) - 1
        out = BarycentricForm(mf, self.degree)
        if self.degree > mf:
            return out
        for (alpha, sig), c in self.terms.items():
            if any(a > 0 and i not in kept for i, a in enumerate(alpha)):
                continue
            if any(i not in kept for i in sig):
                continue
            na = tuple(alpha[p] for p in positions)
            new_idx = tuple(remap[i] for i in sig)
            for nsig, w in _canon_wedge(new_idx, mf).items():
                out._add((na, nsig), c * w)
        return out

    def reduced(self):
        """Coefficients over the reduced frame (lambda_0 eliminated).

        The result maps (alpha with alpha[0] = 0, sigma) to coefficients
        and is a unique representation of the form.
        """
        out = {}
        m = self.dim
        for (alpha, sig), c in self.terms.items():
            rest = alpha[1:]
            for combo, w in _one_minus_sum_power(alpha[0], m).items():
                na = (0,) + tuple(r + e for r, e in zip(rest, combo))
                key = (na, sig)
                v = out.get(key, 0.0) + c * w
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)
        return out

    def render(self):
        """Deterministic human-readable expansion (for debugging/goldens)."""
        parts = []
        for (alpha, sig), c in sorted(self.terms.items()):
            mono = "".join(
                f"L{i}" + (f"^{a}" if a > 1 else "")
                for i, a in enumerate(alpha) if a
            )
            wedge = "^".join(f"dL{i}" for i in sig)
            body = "*".join(x for x in (mono, wedge) if x) or "1"
            parts.append(f"{c:+.12g}*{body}")
        return " ".join(parts) if parts else "0"

    def __repr__(self):
        return f"BarycentricForm(dim={self.dim}, degree={self.degree}, {self.render()})"


def _form_poly_degree(form):
    return max((sum(a) for (a, _s) in form.terms), default=0)


@lru_cache(maxsize=None)
def reduced_frame(m, k, R):
    """Ordered reduced frame keys for k-forms of polynomial degree <= R."""
    keys = []
    for alpha in _compositions_leq(R, m):
        for sig in itertools.combinations(range(1, m + 1), k):
            keys.append(((0,) + alpha, sig))
    keys.sort()
    return tuple(keys)


def coeff_vector(form, frame):
    index = _frame_index(frame)
    v = np.zeros(len(frame))
    for key, c in form.reduced().items():
        if key not in index:
            raise FormError(f"term {key} outside frame")
        v[index[key]] = c
    return v


@lru_cache(maxsize=None)
def _frame_index(frame):
    return {key: i for i, key in enumerate(frame)}


def _nullspace(mat, rtol=1e-9):
    """Orthonormal nullspace basis columns of a dense matrix (SVD)."""
    mat = np.asarray(mat, float)
    if mat.size == 0:
        return np.eye(mat.shape[1])
    u, s, vt = np.linalg.svd(mat)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rtol * max(smax, 1.0)))
    return vt[rank:].T.copy()


# -- geometry -------------------------------------------------------------


class SimplexGeometry:
    """Metric data of an embedded m-simplex: volume, gradient Gram, star."""

    def __init__(self, points, parity=1):
        pts = np.asarray(points, float)
        self.points = pts
        self.dim = len(pts) - 1
        self.parity = parity
        m = self.dim
        if m == 0:
            self.volume = 1.0
            self.grad_gram = np.zeros((1, 1))
            self.vol_coeff = float(parity)
            return
        edges = pts[1:] - pts[0]
        M = edges @ edges.T
        det = float(np.linalg.det(M))
        scale = float(np.max(np.abs(M))) or 1.0
        if det <= 1e-24 * scale ** m:
            raise FormError("degenerate simplex geometry")
        self.volume = math.sqrt(det) / math.factorial(m)
        Gsub = np.linalg.inv(M)
        G = np.zeros((m + 1, m + 1))
        G[1:, 1:] = Gsub
        G[0, 1:] = -Gsub.sum(axis=0)
        G[1:, 0] = -Gsub.sum(axis=1)
        G[0, 0] = Gsub.sum()
        self.grad_gram = G
        # volume form = vol_coeff * dL1^...^dLm
        self.vol_coeff = parity * math.factorial(m) * self.volume

    def metric(self, sigma, tau):
        """Pointwise inner product g(dL_sigma, dL_tau) of constant wedges."""
        if len(sigma) != len(tau):
            raise FormError("degree mismatch in metric pairing")
        if not sigma:
            return 1.0
        sub = self.grad_gram[np.ix_(sigma, tau)]
        return float(np.linalg.det(sub))

    def integrate_monomial(self, alpha):
        """Exact integral of lambda^alpha over the simplex."""
        m = self.dim
        num = math.prod(math.factorial(a) for a in alpha) * math.factorial(m)
        return self.volume * num / math.factorial(sum(alpha) + m)

    def inner_product(self, w, e):
        """L2 inner product of two equal-degree forms on this simplex."""
        if w.degree != e.degree or w.dim != self.dim or e.dim != self.dim:
            raise FormError("inner product needs equal degrees on this simplex")
        total = 0.0
        for (a1, s1), c1 in w.terms.items():
            for (a2, s2), c2 in e.terms.items():
                g = self.metric(s1, s2)
                if g:
                    alpha = tuple(x + y for x, y in zip(a1, a2))
                    total += c1 * c2 * g * self.integrate_monomial(alpha)
        return total

    def star(self, form):
        """Hodge star with respect to the stored orientation."""
        m = self.dim
        k = form.degree
        out = BarycentricForm(m, m - k)
        all_idx = range(1, m + 1)
        for (alpha, sig), c in form.terms.items():
            for tau in itertools.combinations(all_idx, k):
                g = self.metric(tau, sig)
                if not g:
                    continue
                rho = tuple(i for i in all_idx if i not in tau)
                _srt, sign = _sort_with_parity(tau + rho)
                out._add((alpha, rho), c * sign * g * self.vol_coeff)
        return out

    def star_inverse(self, form):
        """Inverse Hodge star, mapping j-forms back to (m-j)-forms."""
        k = self.dim - form.degree
        return self.star(form) * float((-1) ** (k * (self.dim - k)))

    def codifferential(self, form):
        """delta = (-1)^(m(k+1)+1) * star d star; zero on 0-forms."""
        m, k = self.dim, form.degree
        if k == 0:
            return BarycentricForm(m, 0)
        sign = float((-1) ** (m * (k + 1) + 1))
        return self.star(self.star(form).derivative()) * sign

    def volume_form(self):
        m = self.dim
        alpha = tuple(0 for _ in range(m + 1))
        return BarycentricForm.monomial(m, alpha, tuple(range(1, m + 1)),
                                        self.vol_coeff)

    def face(self, positions):
        """Geometry of the face at the given vertex positions (ascending
        orientation)."""
        return SimplexGeometry(self.points[list(positions)])


def geometry(pair, simplex):
    """SimplexGeometry of a mesh simplex, honoring its stored orientation."""
    parity = _permutation_parity(simplex.orientation, simplex.vertices)
    return SimplexGeometry(pair.points(simplex), parity)


def l2_inner_product(w, e, geo):
    return geo.inner_product(w, e)


def exterior_derivative(form):
    return form.derivative()


def wedge(w, e):
    return w.wedge(e)


def hodge_star(form, geo):
    return geo.star(form)


def codifferential(form, geo):
    return geo.codifferential(form)


def trace_to_face(form, positions):
    return form.trace(positions)


def normal_trace(form, positions, geo, face_geo=None):
    """The normal trace: inverse face star of the trace of the star."""
    if face_geo is None:
        face_geo = geo.face(positions)
    starred = geo.star(form)
    return face_geo.star_inverse(starred.trace(positions))


def stokes_residual(w, e, geo, relative=False):
    """Integration-by-parts residual |<dw,e> - <w,delta e> - boundary sum|.

    Faces are taken with ascending orientation, so the incidence sign of
    the j-th facet is (-1)^j.  With ``relative`` the residual is divided
    by the sum of the term magnitudes (floored at one), which keeps the
    measure meaningful on poorly shaped simplices.
    """
    m = geo.dim
    t1 = geo.inner_product(w.derivative(), e)
    t2 = geo.inner_product(w, geo.codifferential(e))
    rhs = 0.0
    scale = abs(t1) + abs(t2)
    for j in range(m + 1):
        positions = tuple(i for i in range(m + 1) if i != j)
        fg = geo.face(positions)
        tw = w.trace(positions)
        ne = normal_trace(e, positions, geo, fg)
        term = (-1) ** j * fg.inner_product(tw, ne)
        rhs += term
        scale += abs(term)
    residual = abs(t1 - t2 - rhs)
    if relative:
        return residual / max(scale, 1.0)
    return residual


# -- element spaces -------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """A polynomial element family: ``trimmed`` (P_r minus) or ``full``.

    The full family assigns decreasing polynomial degree r - k to k-forms
    so that the exterior derivative stays inside the family.
    """

    kind: str
    r: int

    def __post_init__(self):
        if self.kind not in ("trimmed", "full"):
            raise FamilyError(f"unknown family kind {self.kind!r}")
        if self.r < 1:
            raise FamilyError("polynomial degree must be >= 1")

    @property
    def label(self):
        return f"{self.kind}(r={self.r})"

    def space(self, m, k):
        return _family_space(self.kind, self.r, m, k)

    def d_matrix(self, m, k):
        return _d_matrix(self.kind, self.r, m, k)

    def trace_matrix(self, m, k, j):
        return _trace_matrix(self.kind, self.r, m, k, j)

    def bubble(self, m, k):
        return _bubble_space(self.kind, self.r, m, k)


def whitney(r=1):
    """The trimmed family; r = 1 gives the classical lowest-order forms."""
    return Family("trimmed", r)


class ElementSpace:
    """A space of k-forms on one m-simplex, given by a basis of forms."""

    def __init__(self, dim, degree, basis, frame_degree):
        self.dim = dim
        self.degree = degree
        self.basis = list(basis)
        self.frame_degree = frame_degree
        self.frame = reduced_frame(dim, max(degree, 0), frame_degree)
        if self.basis:
            self.matrix = np.column_stack(
                [coeff_vector(f, self.frame) for f in self.basis])
        else:
            self.matrix = np.zeros((len(self.frame), 0))

    @property
    def size(self):
        return len(self.basis)

    def coefficients(self, form, tol=1e-8):
        """Coordinates of a form in this basis; errors if not a member."""
        v = coeff_vector(form, self.frame)
        if self.size == 0:
            if np.linalg.norm(v) > tol:
                raise FormError("form not in the zero space")
            return np.zeros(0)
        sol, *_ = np.linalg.lstsq(self.matrix, v, rcond=None)
        if np.linalg.norm(self.matrix @ sol - v) > tol * max(1.0, np.linalg.norm(v)):
            raise FormError("form is not a member of the element space")
        return sol

    def from_coefficients(self, coeffs):
        out = BarycentricForm(self.dim, self.degree)
        for c, f in zip(coeffs, self.basis):
            if c:
                out = out + f * float(c)
        return out

    def gram(self, geo):
        n = self.size
        G = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                G[i, j] = G[j, i] = geo.inner_product(self.basis[i], self.basis[j])
        return G


def whitney_form(m, rho):
    """The lowest-order form attached to the sub-vertex-tuple rho."""
    k = len(rho) - 1
    f = BarycentricForm(m, k)
    for i, v in enumerate(rho):
        rest = rho[:i] + rho[i + 1:]
        alpha = tuple(1 if t == v else 0 for t in range(m + 1))
        for sig, c in _canon_wedge(rest, m).items():
            f._add((alpha, sig), (-1) ** i * c)
    return f


def _monomial_times(alpha, form):
    out = BarycentricForm(form.dim, form.degree)
    for (a, sig), c in form.terms.items():
        na = tuple(x + y for x, y in zip(a, alpha))
        out._add((na, sig), c)
    return out


def _empty_space(m, k, R):
    return ElementSpace(m, max(k, 0), [], R)


@lru_cache(maxsize=None)
def _family_space(kind, r, m, k):
    if k < 0 or k > m:
        return _empty_space(m, k, 0)
    if kind == "trimmed":
        return _trimmed_space(m, k, r)
    rp = r - k
    if rp < 0:
        return _empty_space(m, k, 0)
    return _full_space(m, k, rp)


def _full_space(m, k, rp):
    """All k-forms of polynomial degree <= rp: monomial frame is a basis."""
    basis = []
    for alpha in sorted(_compositions_leq(rp, m)):
        for sig in itertools.combinations(range(1, m + 1), k):
            basis.append(BarycentricForm.monomial(m, (0,) + alpha, sig))
    return ElementSpace(m, k, basis, rp)


def _trimmed_space(m, k, r):
    """Span of lambda^alpha * whitney(rho), |alpha| = r-1, greedily reduced
    to an independent basis in generator order."""
    frame = reduced_frame(m, k, r)
    basis = []
    vectors = []
    for rho in itertools.combinations(range(m + 1), k + 1):
        w = whitney_form(m, rho)
        for alpha in sorted(_compositions(r - 1, m + 1)):
            gen = _monomial_times(alpha, w)
            v = coeff_vector(gen, frame)
            nv = np.linalg.norm(v)
            if nv < 1e-12:
                continue
            if vectors:
                A = np.column_stack(vectors)
                sol, *_ = np.linalg.lstsq(A, v, rcond=None)
                if np.linalg.norm(A @ sol - v) < 1e-8 * nv:
                    continue
            basis.append(gen)
            vectors.append(v)
    return ElementSpace(m, k, basis, r)


def trimmed_dimension(m, k, r):
    """Closed-form dimension of the trimmed space (used as an oracle)."""
    return math.comb(r + k - 1, k) * math.comb(r + m, m - k)


def build_element_space(m, k, family, variant="plain"):
    """Element space on an m-simplex: the family space or its bubble.

    ``variant`` is "plain" or "bubble".  For the full family this returns
    degree r regardless of k (the complex-forming degree pattern is applied
    by Family.space).
    """
    if variant == "bubble":
        return family.bubble(m, k)
    if family.kind == "full":
        return _full_space(m, k, family.r) if 0 <= k <= m else _empty_space(m, k, 0)
    return family.space(m, k)


# -- derivative / trace matrices, bubbles, extensions ---------------------


def _solve_in_space(space, forms, tol=1e-8):
    """Coefficient matrix of the given forms in a space's basis."""
    frame = reduced_frame(space.dim, space.degree, max(
        space.frame_degree, max((_form_poly_degree(f) for f in forms), default=0)))
    target = np.zeros((len(frame), space.size))
    if space.size:
        target = np.column_stack([coeff_vector(f, frame) for f in space.basis])
    out = np.zeros((space.size, len(forms)))
    for j, f in enumerate(forms):
        v = coeff_vector(f, frame)
        if space.size == 0:
            if np.linalg.norm(v) > tol:
                raise FamilyError("form falls outside the zero target space")
            continue
        sol, *_ = np.linalg.lstsq(target, v, rcond=None)
        if np.linalg.norm(target @ sol - v) > tol * max(1.0, np.linalg.norm(v)):
            raise FamilyError("family is not closed under the requested operation")
        out[:, j] = sol
    return out


@lru_cache(maxsize=None)
def _d_matrix(kind, r, m, k):
    """Matrix of the exterior derivative space(m,k) -> space(m,k+1)."""
    src = _family_space(kind, r, m, k)
    tgt = _family_space(kind, r, m, k + 1)
    if src.size == 0 or k >= m:
        return np.zeros((tgt.size, src.size))
    return _solve_in_space(tgt, [f.derivative() for f in src.basis])


@lru_cache(maxsize=None)
def _trace_matrix(kind, r, m, k, j):
    """Matrix of the trace onto the facet omitting local vertex j."""
    src = _family_space(kind, r, m, k)
    tgt = _family_space(kind, r, m - 1, k)
    positions = tuple(i for i in range(m + 1) if i != j)
    if src.size == 0 or tgt.size == 0:
        if src.size and k <= m - 1:
            for f in src.basis:
                if not f.trace(positions).is_zero(1e-12):
                    raise FamilyError("nonzero trace into an empty face space")
        return np.zeros((tgt.size, src.size))
    return _solve_in_space(tgt, [f.trace(positions) for f in src.basis])


@lru_cache(maxsize=None)
def _bubble_space(kind, r, m, k):
    """The trace-free subspace of the family space on an m-simplex.

    Returns (space, coeffs) with coeffs mapping the bubble basis into the
    parent basis.
    """
    src = _family_space(kind, r, m, k)
    if src.size == 0:
        return src, np.zeros((0, 0))
    if m == 0 or k > m - 1:
        return src, np.eye(src.size)
    rows = [_trace_matrix(kind, r, m, k, j) for j in range(m + 1)]
    stacked = np.vstack(rows)
    null = _nullspace(stacked)
    basis = [src.from_coefficients(null[:, i]) for i in range(null.shape[1])]
    return ElementSpace(m, k, basis, src.frame_degree), null


def bubble_dimension(kind, r, m, k):
    return _bubble_space(kind, r, m, k)[0].size


@lru_cache(maxsize=None)
def _full_support_generators(kind, r, mf, k):
    """Symbolic generators on an mf-simplex touching every vertex.

    Each generator is (alpha, idx): for the trimmed family idx names a
    lowest-order form, for the full family a literal wedge.  Every local
    vertex appears in the monomial support or the index set, which makes
    instantiations on a larger simplex vanish on faces missing a vertex.
    """
    gens = []
    everything = set(range(mf + 1))
    if kind == "trimmed":
        for rho in itertools.combinations(range(mf + 1), k + 1):
            for alpha in sorted(_compositions(r - 1, mf + 1)):
                supp = {i for i, a in enumerate(alpha) if a}
                if supp | set(rho) == everything:
                    gens.append((alpha, rho))
    else:
        rp = r - k
        if rp < 0:
            return ()
        for sig in itertools.combinations(range(mf + 1), k):
            for alpha in sorted(_compositions_leq(rp, mf + 1)):
                supp = {i for i, a in enumerate(alpha) if a}
                if supp | set(sig) == everything:
                    gens.append((alpha, sig))
    return tuple(gens)


def _instantiate_generator(kind, alpha, idx, positions, mc):
    """Realize a symbolic face generator inside an mc-simplex."""
    alpha_c = [0] * (mc + 1)
    for p, a in zip(positions, alpha):
        alpha_c[p] = a
    mapped = tuple(positions[i] for i in idx)
    if kind == "trimmed":
        return _monomial_times(tuple(alpha_c), whitney_form(mc, mapped))
    return BarycentricForm.monomial(mc, tuple(alpha_c), mapped)


@lru_cache(maxsize=None)
def _extension_lift(kind, r, mf, k):
    """Least-squares representation of the bubble basis over the
    full-support generators; raises if the span is insufficient."""
    bubble, _coeffs = _bubble_space(kind, r, mf, k)
    gens = _full_support_generators(kind, r, mf, k)
    if bubble.size == 0:
        return gens, np.zeros((len(gens), 0))
    if not gens:
        raise FamilyError(
            f"{kind}(r={r}): no full-support generators for k={k} on dim {mf}")
    frame = bubble.frame
    G = np.column_stack([
        coeff_vector(_instantiate_generator(kind, a, i, tuple(range(mf + 1)), mf),
                     frame)
        for a, i in gens])
    B = np.column_stack([coeff_vector(f, frame) for f in bubble.basis])
    lift = np.linalg.pinv(G) @ B
    if np.linalg.norm(G @ lift - B) > 1e-8 * max(1.0, np.linalg.norm(B)):
        raise FamilyError(
            f"{kind}(r={r}): bubble space on dim {mf}, k={k} is not covered "
            "by full-support generators; no extension operator available")
    return gens, lift


def extension(form, positions, mc, family):
    """Extend a trace-free form on a face into the mc-simplex.

    ``positions`` locates the face's vertices inside the larger simplex.
    The extension restricts back to the original form, vanishes on faces
    not containing the source face, and lands in the family space.
    """
    mf = len(positions) - 1
    bubble, _coeffs = _bubble_space(family.kind, family.r, mf, form.degree)
    c = bubble.coefficients(form)
    gens, lift = _extension_lift(family.kind, family.r, mf, form.degree)
    gc = lift @ c
    out = BarycentricForm(mc, form.degree)
    for w, (alpha, idx) in zip(gc, gens):
        if abs(w) > 1e-14:
            out = out + _instantiate_generator(
                family.kind, alpha, idx, tuple(positions), mc) * float(w)
    return out


# -- family condition checkers --------------------------------------------


def check_local_exactness(family, m):
    """Exactness of the per-simplex polynomial sequence on an m-simplex.

    Checks that the constants span ker of the first derivative and that
    kernel and range dimensions match at every later index, including
    surjectivity onto the top-degree space.
    """
    report = {"dim": m, "family": family.label, "indices": {}, "passed": True}
    ranks = {}
    for k in range(m + 1):
        d = family.d_matrix(m, k)
        ranks[k] = int(np.linalg.matrix_rank(d, tol=1e-9)) if d.size else 0
    for k in range(m + 1):
        n = family.space(m, k).size
        nullity = n - ranks[k]
        if k == 0:
            ok = nullity == 1 and n >= 1
            if ok and n:
                space = family.space(m, 0)
                const = BarycentricForm.monomial(m, tuple([0] * (m + 1)), ())
                try:
                    space.coefficients(const)
                except FormError:
                    ok = False
        elif k < m:
            ok = nullity == ranks[k - 1]
        else:
            ok = n - ranks.get(k - 1, 0) == (0 if m > 0 else 1)
            if m == 0:
                ok = n == 1
        report["indices"][k] = {"dim": n, "kernel": nullity, "ok": bool(ok)}
        report["passed"] = report["passed"] and ok
    return report


def _check_extension_identities(family, mf, k, mc, tol=1e-9):
    """Trace/extension identities for one face-in-simplex configuration."""
    bubble, _ = _bubble_space(family.kind, family.r, mf, k)
    if bubble.size == 0:
        return True
    for positions in itertools.combinations(range(mc + 1), mf + 1):
        pos_set = set(positions)
        for f in bubble.basis:
            ext = extension(f, positions, mc, family)
            back = ext.trace(positions)
            if not (back - f).is_zero(tol):
                return False
            for gsize in range(max(mf + 1, k + 1), mc + 1):
                for gpos in itertools.combinations(range(mc + 1), gsize):
                    gset = set(gpos)
                    if gset == set(range(mc + 1)):
                        continue
                    tr = ext.trace(gpos)
                    if pos_set <= gset:
                        remap = tuple(sorted(gset)).index
                        inner = tuple(remap(p) for p in positions)
                        via = extension(f, inner, gsize - 1, family)
                        if not (tr - via).is_zero(tol):
                            return False
                    elif not tr.is_zero(tol):
                        return False
    return True


def check_geometric_decomposition(pair, family, k):
    """Face-by-face decomposition of the element spaces on a mesh's strata.

    For each simplex dimension present, verifies that extended bubble
    spaces of all faces are independent and jointly span the element
    space, and that the trace/extension identities hold.
    """
    n = pair.top_dim
    report = {"family": family.label, "degree": k, "dims": {}, "passed": True}
    for m in range(k, n + 1):
        if not pair.simplices(m):
            continue
        space = family.space(m, k)
        columns = []
        frame = reduced_frame(m, k, space.frame_degree)
        for mf in range(k, m + 1):
            bubble, _ = _bubble_space(family.kind, family.r, mf, k)
            if bubble.size == 0:
                continue
            for positions in itertools.combinations(range(m + 1), mf + 1):
                for f in bubble.basis:
                    ext = extension(f, positions, m, family)
                    space.coefficients(ext)
                    columns.append(coeff_vector(ext, frame))
        count = len(columns)
        if count:
            rank = int(np.linalg.matrix_rank(np.column_stack(columns), tol=1e-9))
        else:
            rank = 0
        identities = all(
            _check_extension_identities(family, mf, k, m)
            for mf in range(k, m + 1))
        ok = count == space.size and rank == space.size and identities
        report["dims"][m] = {
            "space_dim": space.size,
            "bubble_sum": count,
            "rank": rank,
            "identities": bool(identities),
            "ok": bool(ok),
        }
        report["passed"] = report["passed"] and ok
    return report


def check_trace_surjectivity(family, m, k):
    """Whether traces onto a facet hit the facet's whole element space."""
    if m == 0 or k > m - 1:
        return True
    tgt = family.space(m - 1, k)
    t = family.trace_matrix(m, k, 0)
    if tgt.size == 0:
        return True
    return int(np.linalg.matrix_rank(t, tol=1e-9)) == tgt.size
