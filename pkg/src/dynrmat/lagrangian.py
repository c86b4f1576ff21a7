"""The double d = g + g, Lagrangian subalgebras l(S, mu) and characteristic pairs.

Elements of d are stored as rows of length ``2 * dim``: the first half is
``X``, the second ``Y``.  The invariant form is
``((X1, Y1), (X2, Y2)) = 1/2 (kappa(Y1, Y2) - kappa(X1, X2))``.

``g`` sits in ``d`` as the diagonal, ``g*`` as ``{(X_- + k, X_+ - k)}``; a
covector ``(X, Y)`` in ``g*`` corresponds under the Killing form to the
element ``(Y - X) / 2`` of ``g``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg
import sympy

from .dynr import (
    Classification,
    NearPole,
    RMatrixFamily,
    closed_roots,
    lambda0_from_constants,
    multiplicativity_residual,
    root_pairing,
)
from .multivec import AlgebraMismatch, sharp, standard_r

RANK_TOL = 1e-10
INTERSECTION_TOL = 1e-8


class NotTransverse(ValueError):
    pass


class NotClassifiable(ValueError):
    pass


class NotLagrangian(NotClassifiable):
    pass


class CayleyPole(ZeroDivisionError):
    pass


# -- elements and subspaces ---------------------------------------------------------

@dataclass(frozen=True)
class DoubleElement:
    X: np.ndarray
    Y: np.ndarray

    @property
    def row(self):
        return np.concatenate([self.X, self.Y])

    def __add__(self, other):
        return DoubleElement(self.X + other.X, self.Y + other.Y)

    def __mul__(self, c):
        return DoubleElement(c * self.X, c * self.Y)

    __rmul__ = __mul__


def d_form(alg, a, b):
    """``1/2 (kappa(Y1, Y2) - kappa(X1, X2))`` for rows or ``DoubleElement``s."""
    a, b = _row(alg, a), _row(alg, b)
    K = alg.killing_np
    n = alg.dim
    return 0.5 * (a[n:] @ K @ b[n:] - a[:n] @ K @ b[:n])


def form_matrix(alg):
    K = alg.killing_np
    z = np.zeros_like(K)
    return 0.5 * np.block([[-K, z], [z, K]])


def d_bracket(alg, a, b):
    a, b = _row(alg, a), _row(alg, b)
    n = alg.dim
    return np.concatenate([alg.bracket_np(a[:n], b[:n]), alg.bracket_np(a[n:], b[n:])])


def _row(alg, a):
    if isinstance(a, DoubleElement):
        a = a.row
    a = np.asarray(a)
    if a.shape != (2 * alg.dim,):
        raise AlgebraMismatch(f"element of length {a.shape} for dim {alg.dim}")
    return a


@dataclass
class DSubspace:
    """Subspace of ``d`` spanned by the rows of ``basis``.

    ``exact`` optionally carries the same rows as tuples of ``Fraction``.
    """

    alg: object
    basis: np.ndarray
    exact: tuple = None

    def __post_init__(self):
        self.basis = np.atleast_2d(np.asarray(self.basis, dtype=complex))
        if self.basis.size == 0:
            self.basis = np.zeros((0, 2 * self.alg.dim), complex)
        if self.basis.shape[1] != 2 * self.alg.dim:
            raise AlgebraMismatch("basis rows have the wrong length")

    @property
    def dim(self):
        return self.basis.shape[0]

    def rank(self, tol=RANK_TOL):
        if self.exact is not None:
            return sympy.Matrix(self.exact).rank()
        if self.dim == 0:
            return 0
        s = np.linalg.svd(self.basis, compute_uv=False)
        return int((s > tol * max(1.0, s[0])).sum())

    def is_independent(self, tol=RANK_TOL):
        return self.rank(tol) == self.dim

    def orthonormal(self):
        """Orthonormal columns spanning the subspace (standard Hermitian product)."""
        return scipy.linalg.orth(self.basis.T)

    def distance(self, v):
        """Least-squares distance of ``v`` from the span, relative to ``max(1, |v|)``."""
        Q = self.orthonormal()
        r = v - Q @ (Q.conj().T @ v)
        return np.linalg.norm(r) / max(1.0, np.linalg.norm(v))

    def to_json(self):
        n = self.alg.dim
        out = []
        for row in self.basis:
            out.append({"X": [_cjson(z) for z in row[:n]], "Y": [_cjson(z) for z in row[n:]]})
        return {"algebra": self.alg.cartan_type.to_json(), "dim": self.dim, "basis": out}

    @classmethod
    def from_json(cls, alg, data):
        rows = []
        for b in data["basis"]:
            rows.append([_cparse(z) for z in b["X"]] + [_cparse(z) for z in b["Y"]])
        if any(len(r) != 2 * alg.dim for r in rows):
            raise AlgebraMismatch("basis rows have the wrong length")
        return cls(alg, np.array(rows, dtype=complex).reshape(len(rows), 2 * alg.dim))


def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _cparse(z):
    if isinstance(z, dict):
        return complex(float(z.get("re", 0)), float(z.get("im", 0)))
    return complex(z)


def principal_angle(U, V):
    """Largest principal angle between two subspaces (``pi/2`` if dimensions differ)."""
    if U.dim != V.dim:
        return np.pi / 2
    if U.dim == 0:
        return 0.0
    return float(np.max(scipy.linalg.subspace_angles(U.basis.T, V.basis.T)))


# -- standard subspaces ----------------------------------------------------------------

def _unit(alg, a):
    v = np.zeros(alg.dim)
    v[a] = 1.0
    return v


def diagonal(alg):
    rows = [np.concatenate([_unit(alg, a), _unit(alg, a)]) for a in range(alg.dim)]
    exact = tuple(tuple(Fraction(int(x)) for x in r) for r in rows)
    return DSubspace(alg, np.array(rows), exact)


def cartan_diagonal(alg):
    rows = [np.concatenate([_unit(alg, a), _unit(alg, a)]) for a in range(alg.rank)]
    return DSubspace(alg, np.array(rows))


def dual_subspace(alg):
    """``g*`` inside ``d``: ``{(X_- + k, X_+ - k)}``."""
    n = alg.rank
    rows = []
    for i in range(n):
        rows.append(np.concatenate([_unit(alg, i), -_unit(alg, i)]))
    for a in alg.positive_roots:
        z = np.zeros(alg.dim)
        rows.append(np.concatenate([z, _unit(alg, alg.e_index(a))]))
        rows.append(np.concatenate([_unit(alg, alg.f_index(a)), z]))
    return DSubspace(alg, np.array(rows))


def _mu_vector(alg, mu):
    return np.zeros(alg.rank, complex) if mu is None else np.asarray(mu, complex)


def build_l(alg, S, mu=None):
    """``l(S, mu)``: h-diagonal, ``(E_a, e^{2<a,mu>} E_a)``, ``(E_-a, e^{-2<a,mu>} E_-a)``
    for ``a`` in ``[S]`` and ``(E_-a, 0)``, ``(0, E_a)`` for the remaining roots."""
    S = frozenset(S)
    closure = closed_roots(alg, S)
    mu_v = _mu_vector(alg, mu)
    exact_ok = not np.any(mu_v)
    rows, exact = [], []
    zero = np.zeros(alg.dim)
    for i in range(alg.rank):
        rows.append(np.concatenate([_unit(alg, i), _unit(alg, i)]))
        exact.append((i, i, 1))
    for a in alg.positive_roots:
        e, f = alg.e_index(a), alg.f_index(a)
        if a in closure:
            phi = cmath.exp(2 * root_pairing(a, mu_v))
            rows.append(np.concatenate([_unit(alg, e), phi * _unit(alg, e)]))
            rows.append(np.concatenate([_unit(alg, f), _unit(alg, f) / phi]))
            exact += [(e, e, 1), (f, f, 1)]
        else:
            rows.append(np.concatenate([_unit(alg, f), zero]))
            rows.append(np.concatenate([zero, _unit(alg, e)]))
            exact += [(f, None, 0), (None, e, 0)]
    ex = None
    if exact_ok:
        ex = []
        for x, y, _ in exact:
            r = [Fraction(0)] * (2 * alg.dim)
            if x is not None:
                r[x] = Fraction(1)
            if y is not None:
                r[alg.dim + y] = Fraction(1)
            ex.append(tuple(r))
        ex = tuple(ex)
    return DSubspace(alg, np.array(rows), ex)


# -- checks ----------------------------------------------------------------------------

@dataclass
class LagrangianReport:
    dim_ok: bool
    isotropy_residual: float
    closure_residual: float

    def passed(self, iso_tol=1e-12, closure_tol=1e-9):
        return self.dim_ok and self.isotropy_residual <= iso_tol and self.closure_residual <= closure_tol

    def to_json(self):
        return {
            "dim_ok": self.dim_ok,
            "isotropy_residual": self.isotropy_residual,
            "closure_residual": self.closure_residual,
        }


def isotropy_residual(W):
    B = W.basis
    return float(np.abs(B @ form_matrix(W.alg) @ B.T).max(initial=0.0))


def closure_residual(W):
    alg = W.alg
    n = alg.dim
    B = W.basis
    C = alg.structure_tensor
    X = np.einsum("ia,jb,abc->ijc", B[:, :n], B[:, :n], C, optimize=True)
    Y = np.einsum("ia,jb,abc->ijc", B[:, n:], B[:, n:], C, optimize=True)
    br = np.concatenate([X, Y], axis=2).reshape(-1, 2 * n)
    Q = W.orthonormal()
    res = br - (br @ Q.conj()) @ Q.T
    norms = np.maximum(1.0, np.linalg.norm(br, axis=1))
    return float((np.linalg.norm(res, axis=1) / norms).max(initial=0.0))


def is_lagrangian_subalgebra(W):
    return LagrangianReport(
        dim_ok=W.dim == W.alg.dim and W.is_independent(),
        isotropy_residual=isotropy_residual(W),
        closure_residual=closure_residual(W),
    )


def diagonal_intersection(W, tol=INTERSECTION_TOL):
    """Basis of ``W`` intersected with the diagonal copy of ``g``."""
    alg = W.alg
    n = alg.dim
    if W.exact is not None:
        M = sympy.Matrix(W.exact)
        diff = M[:, :n] - M[:, n:]
        null = diff.T.nullspace()
        rows = [tuple(Fraction(int(x.p), int(x.q)) for x in (v.T * M)) for v in null]
        arr = np.array([[float(x) for x in r] for r in rows]) if rows else np.zeros((0, 2 * n))
        return DSubspace(alg, arr, tuple(rows))
    B = W.basis
    diff = B[:, :n] - B[:, n:]
    # left null vectors c with c @ diff = 0
    U, s, Vh = np.linalg.svd(diff.T)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int((s > tol * scale).sum())
    null = Vh[rank:].conj()
    return DSubspace(alg, null @ B)


# -- characteristic pairs --------------------------------------------------------------

@dataclass
class CharPair:
    """``J = sum_a J_a E_a ^ E_-a`` with ``W0 = h + graph(J#|h-perp)``."""

    alg: object
    J: dict
    invariance_residual: float = 0.0

    def bivector(self):
        from .multivec import pair_bivector

        out = standard_r(self.alg) * 0
        for a, c in self.J.items():
            if c != 0:
                out = out + pair_bivector(self.alg, a) * complex(c)
        return out

    def to_json(self):
        return {
            "J": [{"root": list(a), **_cjson(v)} for a, v in sorted(self.J.items())],
            "invariance_residual": self.invariance_residual,
        }


def covector_basis(alg):
    """``h-perp`` in ``g*``: ``(0, E_a)`` and ``(E_-a, 0)`` with their roots."""
    out = []
    z = np.zeros(alg.dim)
    for a in alg.positive_roots:
        out.append((a, +1, np.concatenate([z, _unit(alg, alg.e_index(a))])))
        out.append((a, -1, np.concatenate([_unit(alg, alg.f_index(a)), z])))
    return out


def covector_to_g(alg, row):
    n = alg.dim
    return 0.5 * (row[n:] - row[:n])


def _refined_solve(M, pinv, b, steps=3):
    """Least squares with residuals in extended precision.

    Small entries of the solution (large Cayley constants) keep their relative
    accuracy; a plain double solve only fixes them to ``eps * |solution|``.
    """
    Ml = M.astype(np.clongdouble)
    bl = np.asarray(b).astype(np.clongdouble)
    x = pinv @ b
    for _ in range(steps):
        r = bl - Ml @ x.astype(np.clongdouble)
        x = x + pinv @ r.astype(complex)
    return x


def extract_char_pair(W0, tol=INTERSECTION_TOL):
    """Solve ``J# xi + xi`` in ``W0`` (mod the Cartan diagonal) for each ``xi``."""
    alg = W0.alg
    n, r = alg.dim, alg.rank
    if W0.dim != n:
        raise NotTransverse(f"subspace has dimension {W0.dim}, expected {n}")
    roots_diag = np.array([np.concatenate([_unit(alg, a), _unit(alg, a)]) for a in range(r, n)])
    M = np.concatenate([W0.basis.T, -roots_diag.T], axis=1)
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= tol * max(1.0, s[0]):
        raise NotTransverse("W0 meets the diagonal beyond h or is not in graph position")
    J = {}
    resid = 0.0
    pinv = np.linalg.pinv(M)
    for a, sign, xi in covector_basis(alg):
        sol = _refined_solve(M, pinv, xi)
        Z = np.zeros(n, complex)
        Z[r:] = sol[W0.dim:]
        # xi pairs with (0, e_a) -> e_a / 2 and (f_a, 0) -> -f_a / 2; J# maps both to (J_a / 2) x
        idx = alg.e_index(a) if sign > 0 else alg.f_index(a)
        val = 2.0 * Z[idx]
        other = np.delete(Z, idx)
        resid = max(resid, float(np.abs(other).max(initial=0.0)))
        if a in J:
            resid = max(resid, abs(J[a] - val))
        else:
            J[a] = complex(val)
        resid = max(resid, np.linalg.norm(M @ sol - xi))
    return CharPair(alg, J, resid)


def cayley_of(c, tol=1e-12, minus_one=None):
    """Cayley transform ``(c + 1)(c - 1)^{-1}`` of a scalar or a square matrix."""
    if np.isscalar(c) or np.ndim(c) == 0:
        c = complex(c)
        if abs(c - 1) < tol:
            raise CayleyPole(f"|c - 1| = {abs(c - 1):.3g}")
        return (c + 1) / (c - 1)
    c = np.asarray(c, complex)
    I = np.eye(c.shape[0])
    m = c - I
    if c.shape[0] and np.linalg.svd(m, compute_uv=False)[-1] < tol:
        raise CayleyPole("c - 1 is singular")
    return (c + I) @ np.linalg.inv(m)


def n_circ_indices(alg, S):
    closure = closed_roots(alg, S)
    out = []
    for a in alg.positive_roots:
        if a in closure:
            out += [(a, +1, alg.e_index(a)), (a, -1, alg.f_index(a))]
    return out


@dataclass
class CayleyReport:
    eigen_residual: float
    invariance_residual: float
    multiplicativity: float
    eigenvalues: dict = field(default_factory=dict)

    def passed(self, tol=1e-9):
        return max(self.eigen_residual, self.invariance_residual, self.multiplicativity) <= tol


def cayley_eigencheck(fam, lam):
    """Compare the Cayley transform of ``r#`` on ``n°`` with ``e^{2<a, lam + lambda0>}``."""
    from .dynr import eval_r

    alg = fam.alg
    lam = np.asarray(lam, complex)
    R = sharp(eval_r(fam, lam))
    idx = n_circ_indices(alg, fam.S)
    if not idx:
        return CayleyReport(0.0, 0.0, 0.0, {})
    cols = [k for _, _, k in idx]
    rest = [k for k in range(alg.dim) if k not in cols]
    block = R[np.ix_(cols, cols)]
    leak = float(np.abs(R[np.ix_(rest, cols)]).max(initial=0.0))
    phi = cayley_of(block)
    shifted = lam + fam.lambda0
    target = np.array([cmath.exp(2 * s * root_pairing(a, shifted)) for a, s, _ in idx])
    resid = float(np.abs(phi - np.diag(target)).max() / max(1.0, np.abs(target).max()))
    eig = {a: complex(phi[j, j]) for j, (a, s, _) in enumerate(idx) if s > 0}
    mult = multiplicativity_residual(alg, eig)
    for j, (a, s, _) in enumerate(idx):
        if s < 0:
            mult = max(mult, abs(phi[j, j] * eig[a] - 1))
    return CayleyReport(resid, leak, mult, eig)


def w_of_lambda(fam, lam):
    """``W(lam) = h + {tau#(lam) xi + xi : xi in h-perp}``."""
    alg = fam.alg
    n = alg.dim
    T = sharp(fam.twist(lam))
    rows = [np.concatenate([_unit(alg, i), _unit(alg, i)]) for i in range(alg.rank)]
    for _, _, xi in covector_basis(alg):
        z = T @ covector_to_g(alg, xi)
        rows.append(np.concatenate([z, z]) + xi)
    return DSubspace(alg, np.array(rows))


# -- classification and extension ------------------------------------------------------

def classify_subspace(W0, tol=1e-9, zero_tol=1e-10):
    """Recover ``(S, e^{2<a, lambda0>}, lambda0)`` from a Lagrangian ``W0`` with ``W0 ∩ g = h``."""
    alg = W0.alg
    cp = extract_char_pair(W0)
    if cp.invariance_residual > tol * 10:
        raise NotClassifiable(f"J is not h-invariant (residual {cp.invariance_residual:.3g})")
    support = {a for a, j in cp.J.items() if abs(j) > zero_tol}
    S = frozenset(i for i, a in enumerate(alg.simple_roots) if a in support)
    if support != closed_roots(alg, S):
        raise NotClassifiable("roots with nonzero J are not the closure of simple roots")
    constants = {}
    for a in support:
        try:
            constants[a] = cayley_of(cp.J[a] + 1)
        except CayleyPole as exc:  # pragma: no cover - excluded by support test
            raise NotClassifiable(str(exc)) from exc
    mult = multiplicativity_residual(alg, constants)
    if mult > tol:
        raise NotClassifiable(f"Cayley eigenvalues are not multiplicative (residual {mult:.3g})")
    n = alg.rank
    return Classification(
        alg, S, constants, lambda0_from_constants(alg, S, constants), np.zeros((n, n), complex),
        [], {"multiplicativity": mult, "invariance": cp.invariance_residual},
    )


@dataclass
class Extension:
    family: RMatrixFamily
    mu: np.ndarray
    angle: float
    classification: Classification

    def to_json(self):
        return {
            "family": self.family.to_json(),
            "mu": [_cjson(z) for z in self.mu],
            "verification": {"max_principal_angle": self.angle},
        }


def extend_from_point(W0, mu, lag_tol=1e-9):
    """Family ``(S, lambda0 - mu, 0)`` whose fiber at ``mu`` is ``W0``."""
    rep = is_lagrangian_subalgebra(W0)
    if not rep.passed(lag_tol, lag_tol):
        raise NotLagrangian(
            f"input is not a Lagrangian subalgebra (isotropy {rep.isotropy_residual:.3g}, "
            f"closure {rep.closure_residual:.3g}, dim_ok {rep.dim_ok})"
        )
    cls = classify_subspace(W0)
    mu = np.asarray(mu, complex)
    fam = RMatrixFamily(W0.alg, cls.S, cls.lambda0 - mu)
    try:
        angle = principal_angle(w_of_lambda(fam, mu), W0)
    except NearPole as exc:
        raise NotClassifiable(str(exc)) from exc
    return Extension(fam, mu, angle, cls)


# -- exact structural checks -----------------------------------------------------------

def k_ideal_violations(alg, S):
    """Root pairs breaking ``[n°, k] ⊆ k`` or ``[k, k] ⊆ k`` (checked on structure constants)."""
    closure = closed_roots(alg, S)
    bad = []
    for sign in (+1, -1):
        idx = alg.e_index if sign > 0 else alg.f_index
        k = {idx(a) for a in alg.positive_roots if a not in closure}
        nc = {idx(a) for a in closure}
        for a in k | nc:
            for b in k:
                for c in alg.struct.get((a, b), {}):
                    if c not in k:
                        bad.append((sign, alg.weights[a], alg.weights[b]))
    return bad
