"""The Courant algebroid E = (TU + T*U) x (g + g) on sections with closed-form jets.

A fiber element ``(xi, eta; X, Y)`` is a vector of length ``2n + 2 dim``:

* ``xi``  tangent part, coordinates ``t_i`` of ``xi = sum t_i hcheck_i``
  (the vector field ``sum t_i d/dlam_i``);
* ``eta`` cotangent part, coordinates ``c_i`` of ``eta = sum c_i h_i``
  (the 1-form ``sum c_i dlam_i``);
* ``X, Y`` coordinate vectors in ``g``.

Inner product: ``1/2 (<xi1, eta2> + <eta1, xi2>) + 1/4 (<Y1, Y2> - <X1, X2>)``.

The bracket of two sections is determined by the pointwise bracket of
constant sections together with the Leibniz rule
``[e1, f e2] = f [e1, e2] + (rho(e1) f) e2 - (e1, e2) D f`` and
antisymmetry.  On 1-jets ``(v, dv)`` this gives

    [s1, s2] = [v1, v2]_0 + d_{rho v1} v2 - d_{rho v2} v1
               + sum_i ((d_i v1, v2) - (v1, d_i v2)) h_i   (in the eta slot)
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dynr import NearPole, RJet, alt_d, cdybe_residual, closed_roots, root_pairing
from .multivec import MultiVector, ad_action, schouten, sharp, standard_r


class JetMissing(ValueError):
    pass


# -- fiber layout ----------------------------------------------------------------------

@dataclass(frozen=True)
class Layout:
    n: int
    dim: int

    @property
    def size(self):
        return 2 * self.n + 2 * self.dim

    @property
    def xi(self):
        return slice(0, self.n)

    @property
    def eta(self):
        return slice(self.n, 2 * self.n)

    @property
    def X(self):
        return slice(2 * self.n, 2 * self.n + self.dim)

    @property
    def Y(self):
        return slice(2 * self.n + self.dim, self.size)


def layout(alg):
    return Layout(alg.rank, alg.dim)


def fiber(alg, xi=None, eta=None, X=None, Y=None):
    """Fiber vector from coordinates (``xi``, ``eta`` length n; ``X``, ``Y`` length dim)."""
    L = layout(alg)
    v = np.zeros(L.size, complex)
    for sl, part in ((L.xi, xi), (L.eta, eta), (L.X, X), (L.Y, Y)):
        if part is not None:
            v[sl] = part
    return v


def tangent_coords(alg, k):
    """Coordinates ``t`` of a Cartan element ``k`` (g-coordinates) in the hcheck basis."""
    return np.array([k @ alg.killing_np @ h for h in alg.normalized.np["h"]])


def cotangent_coords(alg, k):
    """Coordinates ``c`` of a Cartan element ``k`` in the basis ``h_i``."""
    return np.array([k @ alg.killing_np @ h for h in alg.normalized.np["hcheck"]])


def _inner(alg, a, b):
    L = layout(alg)
    K = alg.killing_np
    return 0.5 * (a[L.xi] @ b[L.eta] + a[L.eta] @ b[L.xi]) + 0.25 * (
        a[L.Y] @ (K @ b[L.Y]) - a[L.X] @ (K @ b[L.X])
    )


def e_inner(alg, a, b):
    """Symmetric pairing on the fiber, evaluated symmetrically so that it is exactly symmetric."""
    return 0.5 * (_inner(alg, a, b) + _inner(alg, b, a))


def const_bracket(alg, a, b):
    """Pointwise bracket of constant sections: ``(0, 0; [X1, X2], [Y1, Y2])``."""
    L = layout(alg)

    def raw(p, q):
        out = np.zeros(L.size, complex)
        out[L.X] = alg.bracket_np(p[L.X], q[L.X])
        out[L.Y] = alg.bracket_np(p[L.Y], q[L.Y])
        return out

    return 0.5 * (raw(a, b) - raw(b, a))


# -- coefficient functions -------------------------------------------------------------

class Fn:
    def value(self, lam):
        raise NotImplementedError

    def grad(self, lam):
        raise NotImplementedError

    def __mul__(self, other):
        return Product(self, other)


@dataclass(frozen=True)
class Const(Fn):
    c: complex = 1.0

    def value(self, lam):
        return complex(self.c)

    def grad(self, lam):
        return np.zeros(len(lam), complex)


@dataclass(frozen=True)
class Coord(Fn):
    i: int

    def value(self, lam):
        return complex(lam[self.i])

    def grad(self, lam):
        g = np.zeros(len(lam), complex)
        g[self.i] = 1
        return g


@dataclass(frozen=True)
class ExpRoot(Fn):
    """``coeff * exp(scale * <alpha, lam> + shift)``."""

    alpha: tuple
    scale: float = 2.0
    shift: complex = 0j
    coeff: complex = 1.0

    def value(self, lam):
        return self.coeff * cmath.exp(self.scale * root_pairing(self.alpha, lam) + self.shift)

    def grad(self, lam):
        return self.scale * self.value(lam) * np.asarray(self.alpha, dtype=float)


@dataclass(frozen=True)
class CothRoot(Fn):
    """``coth(<alpha, lam> + shift)``."""

    alpha: tuple
    shift: complex = 0j

    def value(self, lam):
        x = root_pairing(self.alpha, lam) + self.shift
        if abs(cmath.sinh(x)) < 1e-12:
            raise NearPole(self.alpha, abs(cmath.sinh(x)))
        return 1 / cmath.tanh(x)

    def grad(self, lam):
        c = self.value(lam)
        return (1 - c * c) * np.asarray(self.alpha, dtype=float)


@dataclass(frozen=True)
class Product(Fn):
    f: Fn
    g: Fn

    def value(self, lam):
        return self.f.value(lam) * self.g.value(lam)

    def grad(self, lam):
        return self.f.grad(lam) * self.g.value(lam) + self.f.value(lam) * self.g.grad(lam)


# -- sections --------------------------------------------------------------------------

@dataclass(frozen=True)
class ESection:
    """``sum_k f_k b_k`` with closed-form coefficient functions ``f_k``."""

    terms: tuple
    label: str = ""

    @classmethod
    def const(cls, vec, label=""):
        return cls(((Const(1.0), np.asarray(vec, complex)),), label)

    def jet(self, lam):
        lam = np.asarray(lam, complex)
        size = len(self.terms[0][1]) if self.terms else 0
        v = np.zeros(size, complex)
        P = np.zeros((len(lam), size), complex)
        for f, b in self.terms:
            v += f.value(lam) * b
            P += np.outer(f.grad(lam), b)
        return v, P

    def value(self, lam):
        return self.jet(lam)[0]

    def scaled(self, f):
        return ESection(tuple((Product(f, g), b) for g, b in self.terms), self.label)

    def __add__(self, other):
        return ESection(self.terms + other.terms, self.label or other.label)


@dataclass(frozen=True)
class JetSection:
    """A section known only through its 1-jet at one point."""

    lam: np.ndarray
    v: np.ndarray
    P: np.ndarray = None
    label: str = ""

    def jet(self, lam):
        if not np.allclose(np.asarray(lam, complex), self.lam, rtol=0, atol=0):
            raise JetMissing("jet requested away from its base point")
        if self.P is None:
            raise JetMissing(f"section {self.label!r} carries no partial derivatives")
        return self.v, self.P


def gram(alg):
    """Matrix of ``e_inner`` on fiber coordinates."""
    L = layout(alg)
    K = alg.killing_np
    G = np.zeros((L.size, L.size))
    G[L.xi, L.eta] = G[L.eta, L.xi] = 0.5 * np.eye(L.n)
    G[L.X, L.X] = -0.25 * K
    G[L.Y, L.Y] = 0.25 * K
    return G


def bracket_table(alg, jets):
    """``B[i, j] = [s_i, s_j]`` for sections given by 1-jets ``(v, dv)``.

    Every term is formed as ``A[i, j] - A[j, i]``, so ``B`` is exactly antisymmetric.
    """
    L = layout(alg)
    V = np.array([v for v, _ in jets])
    P = np.array([p for _, p in jets])
    C = alg.structure_tensor
    m = len(jets)
    out = np.zeros((m, m, L.size), complex)
    for sl in (L.X, L.Y):
        A = np.einsum("ia,jb,abc->ijc", V[:, sl], V[:, sl], C, optimize=True)
        out[:, :, sl] = 0.5 * (A - A.transpose(1, 0, 2))
    # d_{rho v_i} v_j
    A = np.einsum("ik,jkN->ijN", V[:, L.xi], P)
    out += A - A.transpose(1, 0, 2)
    # (d_k v_i, v_j) h_k
    A = np.einsum("ikN,NM,jM->ijk", P, gram(alg), V)
    out[:, :, L.eta] += A - A.transpose(1, 0, 2)
    return out


def bracket_block(alg, left, right):
    """``B[i, j] = [l_i, r_j]`` for two lists of 1-jets; same terms as ``bracket_table``."""
    L = layout(alg)
    V1, P1 = np.array([v for v, _ in left]), np.array([p for _, p in left])
    V2, P2 = np.array([v for v, _ in right]), np.array([p for _, p in right])
    C = alg.structure_tensor
    G = gram(alg)
    out = np.zeros((len(left), len(right), L.size), complex)
    for sl in (L.X, L.Y):
        out[:, :, sl] = np.einsum("ia,jb,abc->ijc", V1[:, sl], V2[:, sl], C, optimize=True)
    out += np.einsum("ik,jkN->ijN", V1[:, L.xi], P2) - np.einsum("jk,ikN->ijN", V2[:, L.xi], P1)
    out[:, :, L.eta] += np.einsum("ikN,NM,jM->ijk", P1, G, V2) - np.einsum("jkN,NM,iM->ijk", P2, G, V1)
    return out


def axiom_residuals(alg, sections, fns, lam):
    """Worst anchor and Leibniz residuals over all ordered pairs of ``sections`` at ``lam``.

    Vectorized form of ``anchor_residual`` and ``leibniz_residual``.
    """
    L = layout(alg)
    lam = np.asarray(lam, complex)
    jets = [s.jet(lam) for s in sections]
    V = np.array([v for v, _ in jets])
    P = np.array([p for _, p in jets])
    B = bracket_table(alg, jets)
    comm = np.einsum("id,jdk->ijk", V[:, L.xi], P[:, :, L.xi])
    anchor_worst = float(np.abs(B[:, :, L.xi] - (comm - comm.transpose(1, 0, 2))).max(initial=0.0))
    G = gram(alg)
    E = 0.5 * (V @ G @ V.T + (V @ G @ V.T).T)
    leib_worst = 0.0
    for f in fns:
        df = f.grad(lam)
        lhs = bracket_block(alg, jets, [s.scaled(f).jet(lam) for s in sections])
        Df = np.zeros(L.size, complex)
        Df[L.eta] = df
        rhs = f.value(lam) * B + (V[:, L.xi] @ df)[:, None, None] * V[None, :, :] - E[:, :, None] * Df
        scale = np.maximum(1.0, np.abs(lhs).max(axis=2))
        leib_worst = max(leib_worst, float((np.abs(lhs - rhs).max(axis=2) / scale).max(initial=0.0)))
    return anchor_worst, leib_worst


def bracket_from_jets(alg, j1, j2):
    return bracket_table(alg, [j1, j2])[0, 1]


def courant_bracket_at(alg, s1, s2, lam):
    return bracket_from_jets(alg, s1.jet(lam), s2.jet(lam))


def anchor(alg, v):
    return v[layout(alg).xi]


def anchor_residual(alg, s1, s2, lam):
    """``|rho [s1, s2] - [rho s1, rho s2]|`` with the vector-field commutator on coordinates."""
    L = layout(alg)
    (v1, P1), (v2, P2) = s1.jet(lam), s2.jet(lam)
    lhs = bracket_from_jets(alg, (v1, P1), (v2, P2))[L.xi]
    # [V1, V2](lam_j) = V1(V2^j) - V2(V1^j)
    rhs = np.array([v1[L.xi] @ P2[:, j] - v2[L.xi] @ P1[:, j] for j in range(L.n)])
    return float(np.abs(lhs - rhs).max(initial=0.0))


def leibniz_residual(alg, e1, e2, f, lam):
    """``[e1, f e2] - f [e1, e2] - (rho(e1) f) e2 + (e1, e2) D f``, relative to ``max(1, |lhs|)``."""
    L = layout(alg)
    lam = np.asarray(lam, complex)
    lhs = courant_bracket_at(alg, e1, e2.scaled(f), lam)
    v1, _ = e1.jet(lam)
    v2, _ = e2.jet(lam)
    df = f.grad(lam)
    Df = np.zeros(L.size, complex)
    Df[L.eta] = df
    rhs = (
        f.value(lam) * courant_bracket_at(alg, e1, e2, lam)
        + (v1[L.xi] @ df) * v2
        - e_inner(alg, v1, v2) * Df
    )
    return float(np.abs(lhs - rhs).max() / max(1.0, np.abs(lhs).max()))


def designated_sections(alg):
    """Designated section set for the pointwise axiom checks."""
    nb = alg.normalized.np
    n = alg.rank
    out = []
    a1 = alg.simple_roots[0]
    top = alg.positive_roots[-1]
    for i in range(n):
        t = np.eye(n)[i]
        out.append(ESection.const(fiber(alg, xi=t), f"d/dlam{i + 1}"))
        out.append(ESection.const(fiber(alg, eta=t), f"dlam{i + 1}"))
        out.append(ESection.const(fiber(alg, xi=t, X=nb["hcheck"][i], Y=-nb["hcheck"][i]), f"k{i + 1}"))
        out.append(ESection.const(fiber(alg, eta=t, X=nb["h"][i], Y=nb["h"][i]), f"h{i + 1}"))
        out.append(ESection(((Coord(i), fiber(alg, xi=np.eye(n)[0])),), f"lam{i + 1} d/dlam1"))
    for a in (a1, top):
        E, Em = nb["E"][a], nb["Em"][a]
        out.append(
            ESection.const(fiber(alg, X=E)) + ESection(((ExpRoot(a), fiber(alg, Y=E)),), f"E{list(a)}")
        )
        out.append(
            ESection.const(fiber(alg, X=Em))
            + ESection(((ExpRoot(tuple(-c for c in a)), fiber(alg, Y=Em)),), f"E-{list(a)}")
        )
        out.append(ESection(((CothRoot(a, 0.3 + 0.1j), fiber(alg, X=E, Y=Em)),), f"coth E{list(a)}"))
    out.append(ESection(((Coord(0) * ExpRoot(a1, 1.0), fiber(alg, xi=np.eye(n)[-1], Y=nb["h"][0])),), "mixed"))
    return out


# -- Dirac fibers ----------------------------------------------------------------------

@dataclass
class FiberSpace:
    alg: object
    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[0]

    def rank(self, tol=1e-10):
        s = np.linalg.svd(self.basis, compute_uv=False)
        return int((s > tol * max(1.0, s[0])).sum())

    def orthonormal(self):
        return scipy.linalg.orth(self.basis.T)

    def isotropy_residual(self):
        B = self.basis
        return float(np.abs(B @ gram(self.alg) @ B.T).max(initial=0.0))

    def angle_to(self, other):
        if self.dim != other.dim:
            return np.pi / 2
        return float(np.max(scipy.linalg.subspace_angles(self.basis.T, other.basis.T)))


@dataclass(frozen=True)
class LVariant:
    """Deformations of the spanning sections used as falsification controls.

    ``exponent`` replaces the 2 in ``e^{2<a, lam + lambda0>}``; ``c_product``
    multiplies the positive-root coefficients so that ``C_a C_-a = c_product``.
    """

    exponent: float = 2.0
    c_product: complex = 1.0


def L_sections(fam, variant=LVariant()):
    """Spanning sections ``(k, 0; k, -k)``, ``(0, h; h, h)``, ``(0, 0; X, phi X)``, ``(0, 0; Y_-, Y_+)``."""
    alg = fam.alg
    nb = alg.normalized.np
    n = alg.rank
    out = []
    for i in range(n):
        t = np.eye(n)[i]
        out.append(ESection.const(fiber(alg, xi=t, X=nb["hcheck"][i], Y=-nb["hcheck"][i]), f"k{i + 1}"))
    for i in range(n):
        t = np.eye(n)[i]
        out.append(ESection.const(fiber(alg, eta=t, X=nb["h"][i], Y=nb["h"][i]), f"h{i + 1}"))
    closure = closed_roots(alg, fam.S)
    s = variant.exponent
    for a in alg.positive_roots:
        E, Em = nb["E"][a], nb["Em"][a]
        if a in closure:
            x0 = root_pairing(a, fam.lambda0)
            neg = tuple(-c for c in a)
            out.append(
                ESection.const(fiber(alg, X=E))
                + ESection(((ExpRoot(a, s, s * x0, variant.c_product), fiber(alg, Y=E)),), f"E{list(a)}")
            )
            out.append(
                ESection.const(fiber(alg, X=Em))
                + ESection(((ExpRoot(neg, s, -s * x0), fiber(alg, Y=Em)),), f"E-{list(a)}")
            )
        else:
            out.append(ESection.const(fiber(alg, X=Em), f"k-{list(a)}"))
            out.append(ESection.const(fiber(alg, Y=E), f"k+{list(a)}"))
    return out


def _require_no_gauge(fam):
    if np.any(fam.omega):
        raise ValueError("the Dirac fiber is defined for families with omega = 0")


def build_L_fiber(fam, lam, variant=LVariant()):
    _require_no_gauge(fam)
    fam.check_poles(lam)
    return FiberSpace(fam.alg, np.array([s.value(lam) for s in L_sections(fam, variant)]))


def graph_fiber(fam, lam):
    """Graph of ``theta# + tau#`` over the ``A*`` fiber ``{(0, h; X_- + k, X_+ - k)}``."""
    alg = fam.alg
    nb = alg.normalized.np
    n = alg.rank
    T = sharp(fam.twist(lam))
    rows = []
    for j in range(n):
        h = nb["h"][j]
        rows.append(fiber(alg, eta=np.eye(n)[j], X=h, Y=h))
    for i in range(n):
        k = nb["hcheck"][i]
        Z = T @ (-k)
        rows.append(fiber(alg, xi=np.eye(n)[i], X=k + Z, Y=-k + Z))
    for a in alg.positive_roots:
        E, Em = nb["E"][a], nb["Em"][a]
        Z = T @ (0.5 * E)
        rows.append(fiber(alg, X=Z, Y=Z + E))
        Z = T @ (-0.5 * Em)
        rows.append(fiber(alg, X=Z + Em, Y=Z))
    return FiberSpace(alg, np.array(rows))


@dataclass
class DiracReport:
    max_residual: float
    per_sample: list
    pairs: int
    worst_pair: tuple = ()

    def passed(self, tol=1e-9):
        return self.max_residual <= tol

    def to_json(self):
        return {
            "max_residual": self.max_residual,
            "per_sample": self.per_sample,
            "pairs_checked": self.pairs,
            "worst_pair": list(self.worst_pair),
        }


def dirac_closure_check(fam, samples, variant=LVariant()):
    """Max membership residual of ``[s_i, s_j](lam)`` in the span of the sections at ``lam``."""
    _require_no_gauge(fam)
    alg = fam.alg
    sections = L_sections(fam, variant)
    worst, worst_pair, per, pairs = 0.0, (), [], 0
    for lam in samples:
        lam = np.asarray(lam, complex)
        fam.check_poles(lam)
        jets = [s.jet(lam) for s in sections]
        Q = scipy.linalg.orth(np.array([v for v, _ in jets]).T)
        B = bracket_table(alg, jets).reshape(-1, layout(alg).size)
        res = B - (B @ Q.conj()) @ Q.T
        r = np.linalg.norm(res, axis=1) / np.maximum(1.0, np.linalg.norm(B, axis=1))
        pairs += len(r)
        local = float(r.max(initial=0.0))
        if local > worst:
            i, j = divmod(int(r.argmax()), len(jets))
            worst, worst_pair = local, (sections[i].label, sections[j].label)
        per.append(float(local))
    return DiracReport(float(worst), per, pairs, worst_pair)


# -- Hamiltonian operators and characteristic pairs -------------------------------------

def _twist_jet(fam_or_jet, lam):
    if isinstance(fam_or_jet, RJet):
        return fam_or_jet.twisted()
    return fam_or_jet.twist_jet(lam)


def constant_twist(tau, lam):
    """Twist jet of a constant bivector ``tau`` (all partials zero)."""
    alg = tau.alg
    return RJet(np.asarray(lam, complex), tau, [MultiVector(alg) for _ in range(alg.rank)], twist=True)


def mc_residual(fam_or_jet, lam=None):
    """``(max_i |[h_i, tau]|, CDYBE residual)`` of the Maurer-Cartan equation for ``theta + tau``."""
    jet = _twist_jet(fam_or_jet, lam)
    tau = jet.value
    alg = tau.alg
    h_part = max(
        (ad_action(alg.normalized.h[i], tau).max_abs() for i in range(alg.rank)), default=0.0
    )
    return float(h_part), float(cdybe_residual(jet).norm)


@dataclass
class CharPairReport:
    subalgebroid: float
    mc_mod_h: float
    covector_closure: float

    def passed(self, tol=1e-9):
        return max(self.subalgebroid, self.mc_mod_h, self.covector_closure) <= tol

    def to_json(self, tol=1e-9):
        return {
            "condition1_subalgebroid": self.subalgebroid,
            "condition2_mc_mod_h": self.mc_mod_h,
            "condition3_covector_closure": self.covector_closure,
            "passed": self.passed(tol),
        }


def mod_h(m, n):
    """Projection of a multivector to the exterior algebra of ``g / h``."""
    return MultiVector(m.alg, {k: v for k, v in m.terms.items() if all(i >= n for i in k)})


def r_bracket(alg, x, y):
    """Bracket on ``g*`` transported to ``g``: ``[Rx, y] + [x, Ry]`` with ``R = pi_+ - pi_-``."""
    R = np.array([float(sum(w)) for w in alg.weights])
    R = np.sign(R)
    return alg.bracket_np(R * x, y) + alg.bracket_np(x, R * y)


def charpair_dirac_check(fam_or_jet, lam=None):
    """The three conditions for ``(U x h, tau)`` to define a Dirac structure."""
    jet = _twist_jet(fam_or_jet, lam)
    tau = jet.value
    alg = tau.alg
    n = alg.rank
    nb = alg.normalized.np
    # 1: U x h is a subalgebroid ([h, h] = 0 on structure constants)
    c1 = max(
        (abs(float(s)) for (a, b), v in alg.struct.items() if a < n and b < n for s in v.values()),
        default=0.0,
    )
    # 2: d_* tau + 1/2 [tau, tau] + Alt(d tau) vanishes mod h
    r0 = standard_r(alg)
    terms = [schouten(r0, tau), schouten(tau, tau) * 0.5, alt_d(jet)]
    total = terms[0] + terms[1] + terms[2]
    scale = max(1.0, *(t.max_abs() for t in terms))
    c2 = mod_h(total, n).max_abs() / scale
    # 3: covectors in h-perp close under [.,.] + [.,.]_tau (their h-pairings vanish)
    T = sharp(tau)
    K = alg.killing_np
    Z = np.array([nb["E"][a] for a in alg.positive_roots] + [nb["Em"][a] for a in alg.positive_roots])
    TZ = Z @ T.T
    c3 = 0.0
    for j in range(n):
        A = alg.ad_matrix_np(nb["h"][j])
        M = Z @ K @ A @ TZ.T  # M[b, a] = kappa(z_b, [h_j, T z_a])
        c3 = max(c3, float(np.abs(M - M.T).max(initial=0.0)))
    R = np.sign([float(sum(w)) for w in alg.weights])
    C = alg.structure_tensor
    RB = np.einsum("ia,jb,abc->ijc", Z * R, Z, C, optimize=True)
    RB = RB + np.einsum("ia,jb,abc->ijc", Z, Z * R, C, optimize=True)
    c3 = max(c3, float(np.abs(RB @ K @ nb["h"].T).max(initial=0.0)))
    return CharPairReport(float(c1), float(c2), float(c3))
