"""Complex simple Lie algebras over Q, built from defining matrix realizations.

The algebra is generated from Chevalley generators ``e_i, f_i`` given as
integer matrices in a weight basis, so every generated bracket is already a
weight vector and the root decomposition comes for free.  The basis of the
algebra is ``[h_1..h_n, e_alpha (alpha > 0), f_alpha (alpha > 0)]`` where
``h_i = [e_i, f_i]``.  All structure constants and the Killing form are exact
rationals.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

Root = tuple  # integer coordinates in the simple-root basis

SUPPORTED = (
    ("A", 1), ("A", 2), ("A", 3), ("A", 4),
    ("B", 2), ("B", 3), ("C", 2), ("C", 3),
    ("D", 4), ("G", 2),
)


class UnsupportedType(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CartanType:
    series: str
    rank: int

    def __post_init__(self):
        if (self.series, self.rank) not in SUPPORTED:
            raise UnsupportedType(f"unsupported Cartan type {self.series}{self.rank}")

    @classmethod
    def parse(cls, text):
        """Accept ``"A2"``, ``("A", 2)`` or ``{"series": "A", "rank": 2}``."""
        if isinstance(text, CartanType):
            return text
        if isinstance(text, dict):
            return cls(str(text["series"]).upper(), int(text["rank"]))
        if isinstance(text, (tuple, list)):
            return cls(str(text[0]).upper(), int(text[1]))
        s = str(text).strip().upper()
        if len(s) < 2 or not s[1:].isdigit():
            raise UnsupportedType(f"cannot parse Cartan type {text!r}")
        return cls(s[0], int(s[1:]))

    def to_json(self):
        return {"series": self.series, "rank": self.rank}

    def __str__(self):
        return f"{self.series}{self.rank}"


def cartan_matrix(ct):
    """Bourbaki-ordered Cartan matrix, ``A[i][j] = <alpha_i^vee, alpha_j>``."""
    n = ct.rank
    A = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    for i in range(n - 1):
        A[i][i + 1] = A[i + 1][i] = -1
    if ct.series == "B":
        A[n - 1][n - 2] = -2
    elif ct.series == "C":
        A[n - 2][n - 1] = -2
    elif ct.series == "D":
        A[n - 2][n - 1] = A[n - 1][n - 2] = 0
        A[n - 3][n - 1] = A[n - 1][n - 3] = -1
    elif ct.series == "G":
        A[0][1] = -3
    return A


def classical_positive_root_count(ct):
    n = ct.rank
    return {
        "A": n * (n + 1) // 2,
        "B": n * n,
        "C": n * n,
        "D": n * (n - 1),
        "G": 6,
    }[ct.series]


# -- defining representations -------------------------------------------------

def _unit(N, i, j):
    m = np.zeros((N, N), dtype=object)
    m[:, :] = 0
    m[i, j] = 1
    return m


def _antiskew(N, i, j):
    # element of so(N) for the antidiagonal form
    return _unit(N, i, j) - _unit(N, N - 1 - j, N - 1 - i)


def _chevalley_generators(ct):
    n = ct.rank
    if ct.series == "A":
        N = n + 1
        es = [_unit(N, i, i + 1) for i in range(n)]
    elif ct.series == "B":
        N = 2 * n + 1
        es = [_antiskew(N, i, i + 1) for i in range(n)]
    elif ct.series == "C":
        N = 2 * n
        es = [_antiskew(N, i, i + 1) for i in range(n - 1)] + [_unit(N, n - 1, n)]
    elif ct.series == "D":
        N = 2 * n
        es = [_antiskew(N, i, i + 1) for i in range(n - 1)] + [_antiskew(N, n - 2, n)]
    elif ct.series == "G":
        # 7-dim representation; weight order
        # 2a1+a2, a1+a2, a1, 0, -a1, -a1-a2, -2a1-a2
        N = 7
        e1 = _unit(N, 0, 1) + 2 * _unit(N, 2, 3) + 2 * _unit(N, 3, 4) + _unit(N, 5, 6)
        f1 = _unit(N, 1, 0) + _unit(N, 3, 2) + _unit(N, 4, 3) + _unit(N, 6, 5)
        e2 = _unit(N, 1, 2) + _unit(N, 4, 5)
        f2 = _unit(N, 2, 1) + _unit(N, 5, 4)
        return [e1, e2], [f1, f2]
    else:  # pragma: no cover
        raise UnsupportedType(str(ct))
    fs = [e.T.copy() for e in es]
    if ct.series == "B":
        # short simple root: the transpose gives [e, f] = H / 2
        fs[-1] = 2 * fs[-1]
    return es, fs


def _comm(a, b):
    return a.dot(b) - b.dot(a)


def _is_zero(m):
    return not any(x != 0 for x in m.flat)


def _generate_root_vectors(gens, n):
    """Root vectors reached from simple-root generators by repeated brackets."""
    found = {}
    for i, g in enumerate(gens):
        found[tuple(int(i == k) for k in range(n))] = g
    level = list(found)
    while level:
        nxt = []
        for beta in level:
            for i, g in enumerate(gens):
                v = _comm(g, found[beta])
                if _is_zero(v):
                    continue
                gamma = tuple(b + (k == i) for k, b in enumerate(beta))
                if gamma not in found:
                    found[gamma] = v
                    nxt.append(gamma)
        level = nxt
    return found


# -- the algebra ---------------------------------------------------------------

@dataclass(frozen=True)
class RootDatum:
    simple_roots: tuple
    positive_roots: tuple

    @property
    def roots(self):
        return self.positive_roots + tuple(tuple(-c for c in a) for a in self.positive_roots)


def height(alpha):
    return sum(alpha)


class SimpleLieAlgebra:
    """Exact-rational simple Lie algebra with a root-graded basis.

    Attributes:
      cartan_type: the ``CartanType``.
      rank, dim: rank and dimension.
      labels: basis labels.
      weights: weight (root coordinates, zero for Cartan elements) of each
        basis vector.
      struct: sparse structure constants ``{(a, b): {c: Fraction}}`` meaning
        ``[x_a, x_b] = sum_c struct[a, b][c] x_c`` (only nonzero brackets).
    """

    def __init__(self, ct):
        self.cartan_type = ct
        n = self.rank = ct.rank
        es, fs = _chevalley_generators(ct)
        hs = [_comm(e, f) for e, f in zip(es, fs)]
        pos = _generate_root_vectors(es, n)
        neg = _generate_root_vectors(fs, n)
        roots = sorted(pos, key=lambda a: (height(a), tuple(-c for c in a)))
        self.root_datum = RootDatum(
            simple_roots=tuple(roots[:n]),
            positive_roots=tuple(roots),
        )
        self._mats = list(hs) + [pos[a] for a in roots] + [neg[a] for a in roots]
        self.dim = len(self._mats)
        self.labels = tuple(
            [f"h{i + 1}" for i in range(n)]
            + [f"e{list(a)}" for a in roots]
            + [f"f{list(a)}" for a in roots]
        )
        zero = tuple(0 for _ in range(n))
        self.weights = tuple(
            [zero] * n + list(roots) + [tuple(-c for c in a) for a in roots]
        )
        self._index_of_weight = {w: k for k, w in enumerate(self.weights) if any(w)}
        self._diag_solver = _exact_left_inverse(
            [[Fraction(h[j, j]) for h in hs] for j in range(hs[0].shape[0])]
        )
        self.struct = self._structure_constants()

    # -- construction helpers
    def _coords_of_matrix(self, m, weight):
        if not any(weight):
            diag = [Fraction(m[j, j]) for j in range(m.shape[0])]
            coeffs = [sum(r * d for r, d in zip(row, diag)) for row in self._diag_solver]
            check = sum((c * self._mats[i] for i, c in enumerate(coeffs)), start=0 * m)
            if not _is_zero(check - m):
                raise ArithmeticError("Cartan element outside span of h_i")
            return {i: c for i, c in enumerate(coeffs) if c != 0}
        k = self._index_of_weight.get(weight)
        if k is None:
            if not _is_zero(m):
                raise ArithmeticError(f"nonzero bracket of non-root weight {weight}")
            return {}
        b = self._mats[k]
        p = next(idx for idx, x in np.ndenumerate(b) if x != 0)
        c = Fraction(m[p]) / Fraction(b[p])
        if not _is_zero(m - c * b):
            raise ArithmeticError("root space is not one-dimensional")
        return {k: c} if c != 0 else {}

    def _structure_constants(self):
        out = {}
        for a, b in itertools.permutations(range(self.dim), 2):
            if a > b:
                continue
            w = tuple(x + y for x, y in zip(self.weights[a], self.weights[b]))
            coeffs = self._coords_of_matrix(_comm(self._mats[a], self._mats[b]), w)
            if coeffs:
                out[a, b] = coeffs
                out[b, a] = {c: -v for c, v in coeffs.items()}
        return out

    # -- indices
    @property
    def positive_roots(self):
        return self.root_datum.positive_roots

    @property
    def simple_roots(self):
        return self.root_datum.simple_roots

    def e_index(self, alpha):
        """Basis index of the root vector of ``alpha`` (positive or negative)."""
        return self._index_of_weight[tuple(alpha)]

    def f_index(self, alpha):
        return self._index_of_weight[tuple(-c for c in alpha)]

    # -- exact arithmetic on coordinate vectors
    def bracket(self, x, y):
        """Exact bracket of coordinate vectors (sequences of rationals)."""
        out = [Fraction(0)] * self.dim
        xs = [(a, v) for a, v in enumerate(x) if v != 0]
        ys = [(b, v) for b, v in enumerate(y) if v != 0]
        for a, xa in xs:
            for b, yb in ys:
                for c, s in self.struct.get((a, b), {}).items():
                    out[c] += xa * yb * s
        return tuple(out)

    def basis_vector(self, a):
        return tuple(Fraction(int(k == a)) for k in range(self.dim))

    @cached_property
    def bracket_table(self):
        """``{(a, b): ((c, coeff), ...)}`` with exact coefficients."""
        return {k: tuple(v.items()) for k, v in self.struct.items()}

    @cached_property
    def bracket_table_float(self):
        return {k: tuple((c, float(s)) for c, s in v.items()) for k, v in self.struct.items()}

    @cached_property
    def structure_tensor(self):
        """Dense float tensor ``C[a, b, c]``."""
        C = np.zeros((self.dim,) * 3)
        for (a, b), v in self.struct.items():
            for c, s in v.items():
                C[a, b, c] = float(s)
        return C

    def bracket_np(self, x, y):
        return np.einsum("abc,a,b->c", self.structure_tensor, x, y)

    def ad_matrix_np(self, x):
        """Float matrix of ``ad x`` acting on coordinate column vectors."""
        return np.einsum("abc,a->cb", self.structure_tensor, x)

    # -- Killing form
    @cached_property
    def killing(self):
        """Exact Killing Gram matrix ``trace(ad x_a ad x_b)`` as nested tuples."""
        ad = []
        for a in range(self.dim):
            m = {}
            for d in range(self.dim):
                for c, s in self.struct.get((a, d), {}).items():
                    m[c, d] = s
            ad.append(m)
        K = [[Fraction(0)] * self.dim for _ in range(self.dim)]
        for a in range(self.dim):
            for b in range(a, self.dim):
                if any(x + y for x, y in zip(self.weights[a], self.weights[b])):
                    continue
                adb = ad[b]
                val = sum((v * adb.get((d, c), 0) for (c, d), v in ad[a].items()), Fraction(0))
                K[a][b] = K[b][a] = val
        return tuple(tuple(row) for row in K)

    @cached_property
    def killing_np(self):
        return np.array([[float(v) for v in row] for row in self.killing])

    def kappa(self, x, y):
        K = self.killing
        return sum(
            (xa * K[a][b] * yb for a, xa in enumerate(x) if xa != 0 for b, yb in enumerate(y) if yb != 0),
            Fraction(0),
        )

    @cached_property
    def normalized(self):
        return normalized_basis(self)

    def __repr__(self):
        return f"SimpleLieAlgebra({self.cartan_type}, dim={self.dim})"


def _exact_left_inverse(rows):
    """Left inverse ``(M^T M)^{-1} M^T`` of a full-column-rank rational matrix."""
    import sympy

    M = sympy.Matrix(rows)
    L = (M.T * M).inv() * M.T
    return [[Fraction(int(v.p), int(v.q)) for v in L.row(i)] for i in range(L.rows)]


_CACHE = {}


def build_algebra(ct):
    """Build (and memoize) the simple Lie algebra of the given Cartan type."""
    ct = CartanType.parse(ct)
    if ct not in _CACHE:
        _CACHE[ct] = SimpleLieAlgebra(ct)
    return _CACHE[ct]


def killing_form(alg):
    return alg.killing


# -- normalized basis ------------------------------------------------------------

@dataclass(frozen=True)
class NormalizedBasis:
    """``E_alpha``, ``E_-alpha`` with ``kappa(E_alpha, E_-alpha) = 1``.

    ``h[i]`` is ``h_{alpha_i} = [E_{alpha_i}, E_{-alpha_i}]`` and ``hcheck[i]``
    is the Killing-dual basis of ``h``.  All vectors are exact coordinate tuples.
    """

    E: dict
    Em: dict
    h_alpha: dict
    h: tuple
    hcheck: tuple
    pair_norm: dict  # kappa(e_alpha, f_alpha)

    @cached_property
    def np(self):
        f = lambda v: np.array([float(c) for c in v])
        return {
            "E": {a: f(v) for a, v in self.E.items()},
            "Em": {a: f(v) for a, v in self.Em.items()},
            "h": np.array([f(v) for v in self.h]),
            "hcheck": np.array([f(v) for v in self.hcheck]),
        }


def normalized_basis(alg):
    E, Em, h_alpha, norms = {}, {}, {}, {}
    for a in alg.positive_roots:
        e = alg.basis_vector(alg.e_index(a))
        f = alg.basis_vector(alg.f_index(a))
        k = alg.kappa(e, f)
        norms[a] = k
        E[a] = e
        Em[a] = tuple(c / k for c in f)
        h_alpha[a] = alg.bracket(E[a], Em[a])
    h = tuple(h_alpha[a] for a in alg.simple_roots)
    n = alg.rank
    gram = [[alg.kappa(h[i], h[j]) for j in range(n)] for i in range(n)]
    import sympy

    inv = sympy.Matrix(gram).inv()
    hcheck = tuple(
        tuple(
            sum((Fraction(int(inv[i, k].p), int(inv[i, k].q)) * h[k][c] for k in range(n)), Fraction(0))
            for c in range(alg.dim)
        )
        for i in range(n)
    )
    return NormalizedBasis(E=E, Em=Em, h_alpha=h_alpha, h=h, hcheck=hcheck, pair_norm=norms)


def pairing(alg, alpha, v):
    """``<alpha, lambda> = kappa(h_alpha, lambda)``.

    ``v`` is either a full coordinate vector of a Cartan element or a vector of
    ``n`` coordinates ``lambda_i`` with ``lambda = sum lambda_i hcheck_i``.
    """
    nb = alg.normalized
    v = list(v)
    if len(v) == alg.dim:
        if any(c != 0 for c in v[alg.rank:]):
            raise DimensionMismatch("pairing needs an element of the Cartan subalgebra")
        lam = v
    elif len(v) == alg.rank:
        lam = [sum(v[i] * nb.hcheck[i][c] for i in range(alg.rank)) for c in range(alg.dim)]
    else:
        raise DimensionMismatch(f"expected {alg.rank} or {alg.dim} coordinates, got {len(v)}")
    alpha = tuple(alpha)
    if alpha in nb.h_alpha:
        ha = nb.h_alpha[alpha]
    else:
        ha = tuple(-c for c in nb.h_alpha[tuple(-c for c in alpha)])
    K = alg.killing
    return sum(ha[a] * K[a][b] * lam[b] for a in range(alg.rank) for b in range(alg.rank))


def dump_basis(alg):
    """JSON-ready basis dump with exact ``"p/q"`` structure constants."""
    return {
        "algebra": alg.cartan_type.to_json(),
        "dim": alg.dim,
        "labels": list(alg.labels),
        "roots": [list(w) for w in alg.weights],
        "structure_constants": [
            {"i": a, "j": b, "k": c, "c": fraction_str(s)}
            for (a, b), v in sorted(alg.struct.items())
            if a < b
            for c, s in sorted(v.items())
        ],
    }


def fraction_str(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
