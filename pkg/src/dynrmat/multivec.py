"""Exterior algebra over a simple Lie algebra and the Schouten bracket.

A ``MultiVector`` is a sparse map from strictly increasing basis-index tuples
to coefficients.  Coefficients are exact (``int``/``Fraction``) as long as
every input is exact; any float or complex input promotes the result to
complex double.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .rootsys import fraction_str

# Global sign of the Schouten bracket.  Fixed by the sl2 calibration in
# ``dynr.calibrate_conventions``.
SCHOUTEN_SIGN = 1


class AlgebraMismatch(ValueError):
    pass


def _is_exact(c):
    return isinstance(c, Rational)


def merge_keys(I, J):
    """Wedge two sorted index tuples: ``(sign, key)`` or ``None`` if they overlap."""
    if not I:
        return 1, J
    if not J:
        return 1, I
    out = []
    i = j = 0
    inversions = 0
    while i < len(I) and j < len(J):
        a, b = I[i], J[j]
        if a == b:
            return None
        if a < b:
            out.append(a)
            i += 1
        else:
            out.append(b)
            inversions += len(I) - i
            j += 1
    out.extend(I[i:])
    out.extend(J[j:])
    return (-1 if inversions % 2 else 1), tuple(out)


class MultiVector:
    __slots__ = ("alg", "terms")

    def __init__(self, alg, terms=None):
        self.alg = alg
        self.terms = {}
        for k, v in (terms or {}).items():
            if v != 0:
                self.terms[tuple(k)] = v

    # -- construction
    @classmethod
    def zero(cls, alg):
        return cls(alg)

    @classmethod
    def scalar(cls, alg, c):
        return cls(alg, {(): c})

    @classmethod
    def vector(cls, alg, vec):
        """Degree-1 element from a coordinate vector."""
        if len(vec) != alg.dim:
            raise AlgebraMismatch(f"vector of length {len(vec)} for dim {alg.dim}")
        return cls(alg, {(a,): _plain(c) for a, c in enumerate(vec) if c != 0})

    @classmethod
    def basis(cls, alg, *idx):
        out = cls(alg, {(): 1})
        for a in idx:
            out = out ^ cls(alg, {(a,): 1})
        return out

    # -- inspection
    @property
    def degrees(self):
        return sorted({len(k) for k in self.terms})

    @property
    def degree(self):
        ds = self.degrees
        if len(ds) > 1:
            raise ValueError("inhomogeneous multivector")
        return ds[0] if ds else 0

    @property
    def exact(self):
        return all(_is_exact(v) for v in self.terms.values())

    def part(self, deg):
        return MultiVector(self.alg, {k: v for k, v in self.terms.items() if len(k) == deg})

    def coeff(self, *idx):
        """Coefficient of ``x_{i1} ^ ... ^ x_{ik}`` (indices in any order)."""
        sign, key = 1, ()
        for a in idx:
            r = merge_keys(key, (a,))
            if r is None:
                return 0
            s, key = r
            sign *= s
        return sign * self.terms.get(key, 0)

    def max_abs(self):
        return max((abs(complex(v)) for v in self.terms.values()), default=0.0)

    def is_zero(self, tol=0.0):
        return self.max_abs() <= tol

    def to_complex(self):
        return MultiVector(self.alg, {k: complex(v) for k, v in self.terms.items()})

    # -- vector space
    def _check(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        if other.alg is not self.alg:
            raise AlgebraMismatch("multivectors over different algebras")
        return True

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return MultiVector(self.alg, t)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return MultiVector(self.alg, {k: -v for k, v in self.terms.items()})

    def __mul__(self, c):
        if isinstance(c, MultiVector):
            return NotImplemented
        c = _plain(c)
        return MultiVector(self.alg, {k: c * v for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        if _is_exact(c):
            return self * (Fraction(1) / Fraction(c))
        return self * (1 / c)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, MultiVector):
            return NotImplemented
        return (self - other).terms == {}

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda k: (len(k), k)):
            name = "^".join(self.alg.labels[a] for a in k) or "1"
            v = self.terms[k]
            parts.append(f"({fraction_str(v) if _is_exact(v) else v})*{name}")
        return " + ".join(parts)

    # -- serialization
    def to_json(self):
        ds = self.degrees
        out = {"deg": ds[0] if len(ds) == 1 else ds, "terms": []}
        for k in sorted(self.terms, key=lambda k: (len(k), k)):
            re, im = _split(self.terms[k])
            out["terms"].append({"idx": list(k), "re": re, "im": im})
        return out

    @classmethod
    def from_json(cls, alg, data):
        terms = {}
        for t in data["terms"]:
            re, im = _parse_num(t["re"]), _parse_num(t.get("im", "0"))
            terms[tuple(t["idx"])] = re if im == 0 else complex(re) + 1j * complex(im).real
        for k in terms:
            if list(k) != sorted(set(k)):
                raise ValueError(f"keys must be strictly increasing, got {k}")
        return cls(alg, terms)


def _plain(c):
    if isinstance(c, (np.floating, np.complexfloating)):
        return complex(c)
    if isinstance(c, np.integer):
        return int(c)
    return c


def _split(v):
    if _is_exact(v):
        return fraction_str(v), "0"
    v = complex(v)
    return repr(v.real), repr(v.imag)


def _parse_num(s):
    if isinstance(s, (int, float)):
        return s
    s = str(s)
    if any(ch in s for ch in ".eEn"):
        return float(s)
    return Fraction(s)


# -- products ----------------------------------------------------------------------

def wedge(a, b):
    if a.alg is not b.alg:
        raise AlgebraMismatch("multivectors over different algebras")
    out = {}
    for I, x in a.terms.items():
        for J, y in b.terms.items():
            r = merge_keys(I, J)
            if r is None:
                continue
            s, K = r
            out[K] = out.get(K, 0) + s * x * y
    return MultiVector(a.alg, out)


def _insert(c, K):
    """Prepend index ``c`` to sorted ``K``: ``(sign, key)`` or ``None``."""
    pos = 0
    for k in K:
        if k == c:
            return None
        if k < c:
            pos += 1
        else:
            break
    return (-1 if pos % 2 else 1), K[:pos] + (c,) + K[pos:]


def _schouten_keys(I, J, table):
    """Schouten bracket of basis monomials, as ``{key: coeff}``.

    ``[x_I, x_J] = sum_{p,q} (-1)^{p+q} [x_{I_p}, x_{J_q}] ^ x_{I-p} ^ x_{J-q}``.
    """
    out = {}
    for p, a in enumerate(I):
        Ir = I[:p] + I[p + 1:]
        for q, b in enumerate(J):
            br = table.get((a, b))
            if not br:
                continue
            r = merge_keys(Ir, J[:q] + J[q + 1:])
            if r is None:
                continue
            s0, rest = r
            s0 = s0 if (p + q) % 2 == 0 else -s0
            for c, v in br:
                r2 = _insert(c, rest)
                if r2 is None:
                    continue
                s1, K = r2
                out[K] = out.get(K, 0) + s0 * s1 * v
    return out


def schouten(a, b, sign=None):
    """Schouten bracket extending the Lie bracket by the graded Leibniz rule."""
    if a.alg is not b.alg:
        raise AlgebraMismatch("multivectors over different algebras")
    alg = a.alg
    exact = a.exact and b.exact
    table = alg.bracket_table if exact else alg.bracket_table_float
    out = {}
    for I, x in a.terms.items():
        if not I:
            continue
        for J, y in b.terms.items():
            if not J:
                continue
            xy = x * y
            for K, v in _schouten_keys(I, J, table).items():
                out[K] = out.get(K, 0) + xy * v
    s = SCHOUTEN_SIGN if sign is None else sign
    res = MultiVector(alg, out)
    return res if s == 1 else -res


def ad_action(x, m):
    """Derivation extension of ``ad x`` to the exterior algebra.

    ``x`` is a coordinate vector (or a degree-1 ``MultiVector``).
    """
    if not isinstance(x, MultiVector):
        x = MultiVector.vector(m.alg, x)
    alg = m.alg
    exact = x.exact and m.exact
    table = alg.bracket_table if exact else alg.bracket_table_float
    out = {}
    for (a,), xa in x.terms.items():
        for K, v in m.terms.items():
            for p, b in enumerate(K):
                for c, s in table.get((a, b), ()):
                    r = _insert(c, K[:p] + K[p + 1:])
                    if r is None:
                        continue
                    sign, key = r
                    # moving c back to slot p costs (-1)^p relative to the front
                    if p % 2:
                        sign = -sign
                    out[key] = out.get(key, 0) + sign * xa * v * s
    return MultiVector(alg, out)


@dataclass
class InvarianceReport:
    max_residual: float
    per_generator: dict

    @property
    def invariant(self):
        return self.max_residual == 0


def is_ad_invariant(m, tol=None):
    """Max residual of ``ad_action`` over the generators ``h_i, E_{+-alpha_i}``."""
    alg = m.alg
    nb = alg.normalized
    gens = {}
    for i, a in enumerate(alg.simple_roots):
        gens[f"h{i + 1}"] = nb.h[i]
        gens[f"E+{i + 1}"] = nb.E[a]
        gens[f"E-{i + 1}"] = nb.Em[a]
    per = {name: ad_action(v, m).max_abs() for name, v in gens.items()}
    return InvarianceReport(max(per.values(), default=0.0), per)


def sharp(b):
    """Matrix of ``b#`` with ``(x^y)#(z) = kappa(y, z) x - kappa(x, z) y``.

    Exact bivectors give an object array of Fractions, otherwise complex.
    """
    if b.degrees not in ([2], []):
        raise ValueError("sharp needs a bivector")
    alg = b.alg
    if b.exact:
        C = np.zeros((alg.dim, alg.dim), dtype=object)
        C[:, :] = Fraction(0)
        K = np.array(alg.killing, dtype=object)
    else:
        C = np.zeros((alg.dim, alg.dim), dtype=complex)
        K = alg.killing_np
    for (i, j), v in b.terms.items():
        C[i, j] += v
    return (C - C.T).dot(K)


def cybe_rhs(alg):
    """``1/2 [r0, r0]``, the right-hand side of the modified CDYBE."""
    key = "_cybe_rhs"
    cached = alg.__dict__.get(key)
    if cached is None:
        r0 = standard_r(alg)
        cached = schouten(r0, r0) * Fraction(1, 2)
        alg.__dict__[key] = cached
    return cached


def pair_bivector(alg, alpha):
    """``E_alpha ^ E_-alpha`` for a positive root."""
    k = alg.normalized.pair_norm[tuple(alpha)]
    return MultiVector(alg, {(alg.e_index(alpha), alg.f_index(alpha)): Fraction(1) / k})


def standard_r(alg, order=None):
    """``r0 = sum_{alpha > 0} E_alpha ^ E_-alpha``."""
    out = MultiVector(alg)
    for a in order if order is not None else alg.positive_roots:
        out = out + pair_bivector(alg, a)
    return out


def h_vector(alg, i):
    """Degree-1 multivector for ``h_i = h_{alpha_i}``."""
    return MultiVector.vector(alg, alg.normalized.h[i])
