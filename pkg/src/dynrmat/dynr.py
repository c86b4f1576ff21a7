"""Dynamical r-matrix families, CDYBE residuals and classification.

A family is parameterized by a subset ``S`` of simple roots, a shift
``lambda0`` in h (coordinates w.r.t. the Killing-dual basis ``hcheck``) and a
constant skew gauge matrix ``omega``:

    r(lam) = omega + sum_{a in [S]} coth<a, lam + lambda0> E_a ^ E_-a
                   + sum_{a not in [S]} E_a ^ E_-a

The twist ``tau = r - r0`` is evaluated directly as ``2 / (exp(2x) - 1)`` so
that it keeps full relative precision where ``coth x`` is close to 1.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import multivec
from .multivec import MultiVector, cybe_rhs, h_vector, pair_bivector, schouten, standard_r
from .rootsys import build_algebra

POLE_TOL = 1e-6

# Calibrated convention constants (see ``calibrate_conventions``).
ODE_SIGN = 1


class NearPole(ValueError):
    def __init__(self, root, value=None):
        self.root = root
        self.value = value
        super().__init__(f"coth pole: |sinh<{list(root)}, lam + lambda0>| = {value}")


class NotDynamical(ValueError):
    pass


def closed_roots(alg, S):
    """Positive roots whose support lies inside ``S`` (0-based simple indices)."""
    S = frozenset(S)
    return frozenset(
        a for a in alg.positive_roots if all(c == 0 or i in S for i, c in enumerate(a))
    )


def root_pairing(alpha, lam):
    """``<alpha, lam>`` for ``lam`` in hcheck-coordinates: ``sum n_i lam_i``."""
    return complex(np.dot(np.asarray(alpha, dtype=float), np.asarray(lam, dtype=complex)))


@dataclass(frozen=True)
class RMatrixFamily:
    alg: object
    S: frozenset
    lambda0: np.ndarray = None
    omega: np.ndarray = None

    def __post_init__(self):
        n = self.alg.rank
        S = frozenset(int(i) for i in self.S)
        if any(not 0 <= i < n for i in S):
            raise ValueError(f"simple-root indices must lie in 0..{n - 1}")
        object.__setattr__(self, "S", S)
        l0 = np.zeros(n, complex) if self.lambda0 is None else np.asarray(self.lambda0, complex)
        om = np.zeros((n, n), complex) if self.omega is None else np.asarray(self.omega, complex)
        if l0.shape != (n,) or om.shape != (n, n):
            raise ValueError("lambda0 / omega have the wrong shape")
        if np.abs(om + om.T).max(initial=0) > 0:
            raise ValueError("omega must be skew")
        object.__setattr__(self, "lambda0", l0)
        object.__setattr__(self, "omega", om)

    @classmethod
    def make(cls, ct, S=(), lambda0=None, omega=None):
        return cls(build_algebra(ct), frozenset(S), lambda0, omega)

    @property
    def closure(self):
        return closed_roots(self.alg, self.S)

    def arguments(self, lam):
        """``{alpha: <alpha, lam + lambda0>}`` over ``[S]``."""
        shifted = np.asarray(lam, complex) + self.lambda0
        return {a: root_pairing(a, shifted) for a in self.alg.positive_roots if a in self.closure}

    def check_poles(self, lam, tol=POLE_TOL):
        for a, x in self.arguments(lam).items():
            s = abs(cmath.sinh(x))
            if s < tol:
                raise NearPole(a, s)

    def tau_coefficients(self, lam, tol=POLE_TOL):
        """``{alpha: (tau_alpha, d tau_alpha / d lam_i)}`` for every positive root."""
        self.check_poles(lam, tol)
        args = self.arguments(lam)
        out = {}
        for a in self.alg.positive_roots:
            if a in args:
                t = 2.0 / np.expm1(2 * args[a])
                dt = -t * (t + 2)  # d/dx (coth x - 1) = 1 - coth^2 x
                out[a] = (complex(t), dt * np.asarray(a, dtype=float))
            else:
                out[a] = (0j, np.zeros(self.alg.rank, complex))
        return out

    def omega_bivector(self):
        alg = self.alg
        out = MultiVector(alg)
        n = alg.rank
        for i in range(n):
            for j in range(n):
                if self.omega[i, j] != 0:
                    out = out + (h_vector(alg, i) ^ h_vector(alg, j)) * complex(self.omega[i, j])
        return out

    def twist(self, lam, tol=POLE_TOL):
        """``tau(lam) = r(lam) - r0``."""
        return self.twist_jet(lam, tol).value

    def twist_jet(self, lam, tol=POLE_TOL):
        coeffs = {a: c for a, c in self.tau_coefficients(lam, tol).items() if c[0] != 0}
        return jet_from_coefficients(self.alg, lam, coeffs, self.omega_bivector())

    def jet(self, lam, tol=POLE_TOL):
        return self.twist_jet(lam, tol).untwisted()

    def to_json(self):
        return {
            "algebra": self.alg.cartan_type.to_json(),
            "S": sorted(i + 1 for i in self.S),
            "lambda0": [_cjson(z) for z in self.lambda0],
            "omega": [[_cjson(z) for z in row] for row in self.omega],
        }

    @classmethod
    def from_json(cls, data):
        alg = build_algebra(data["algebra"])
        n = alg.rank
        S = frozenset(int(i) - 1 for i in data.get("S", []))
        l0 = [_cparse(z) for z in data.get("lambda0", [0] * n)]
        om = data.get("omega")
        om = None if om is None else [[_cparse(z) for z in row] for row in om]
        return cls(alg, S, l0, om)


def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _cparse(z):
    if isinstance(z, dict):
        return complex(float(z.get("re", 0)), float(z.get("im", 0)))
    return complex(z)


@dataclass
class RJet:
    """Value and first partials of a bivector-valued function at ``lam``.

    ``twist=True`` marks a jet of ``tau = r - r0`` rather than of ``r``.
    """

    lam: np.ndarray
    value: MultiVector
    partials: list
    twist: bool = False

    def untwisted(self):
        if not self.twist:
            return self
        return RJet(self.lam, self.value + standard_r(self.value.alg), self.partials, False)

    def twisted(self):
        if self.twist:
            return self
        return RJet(self.lam, self.value - standard_r(self.value.alg), self.partials, True)


def jet_from_coefficients(alg, lam, coeffs, omega_bivector=None):
    """Twist jet of ``omega + sum tau_a E_a ^ E_-a`` from ``{alpha: (tau_a, grad tau_a)}``.

    Lets user-supplied (possibly non-solution) families enter the verifiers.
    """
    value = MultiVector(alg) if omega_bivector is None else omega_bivector
    partials = [MultiVector(alg) for _ in range(alg.rank)]
    for a, (t, dt) in coeffs.items():
        P = pair_bivector(alg, a)
        value = value + P * complex(t)
        for i in range(alg.rank):
            if dt[i] != 0:
                partials[i] = partials[i] + P * complex(dt[i])
    return RJet(np.asarray(lam, complex), value, partials, twist=True)


def eval_r(fam, lam, tol=POLE_TOL):
    return fam.jet(lam, tol).value


def alt_d(jet):
    """``Alt(dr) = sum_i h_i ^ dr/dlam_i``."""
    alg = jet.value.alg
    out = MultiVector(alg)
    for i, p in enumerate(jet.partials):
        if p.terms:
            out = out + (h_vector(alg, i) ^ p)
    return out


def alt_dr(fam, lam, tol=POLE_TOL):
    return alt_d(fam.twist_jet(lam, tol))


def finite_difference_jet(fam, lam, step=1e-5, tol=POLE_TOL):
    """Central-difference partials of ``r`` (used as an independent oracle)."""
    lam = np.asarray(lam, complex)
    partials = []
    for i in range(fam.alg.rank):
        d = np.zeros_like(lam)
        d[i] = step
        partials.append((eval_r(fam, lam + d, tol) - eval_r(fam, lam - d, tol)) * (1 / (2 * step)))
    return RJet(lam, eval_r(fam, lam, tol), partials)


@dataclass
class CdybeResult:
    residual: MultiVector
    abs_norm: float
    scale: float

    @property
    def norm(self):
        return self.abs_norm / self.scale if self.scale else self.abs_norm


def cdybe_residual(fam_or_jet, lam=None, tol=POLE_TOL):
    """``Alt(dr) + 1/2 [r, r] - 1/2 [r0, r0]`` at ``lam``.

    Accepts a family (with ``lam``) or an ``RJet`` of ``r`` or of the twist.
    ``norm`` is relative to the largest coefficient among the three terms.
    """
    jet = fam_or_jet if isinstance(fam_or_jet, RJet) else fam_or_jet.jet(lam, tol)
    jet = jet.untwisted()
    alt = alt_d(jet)
    half = schouten(jet.value, jet.value) * 0.5
    rhs = cybe_rhs(jet.value.alg)
    res = alt + half - rhs
    scale = max(alt.max_abs(), half.max_abs(), rhs.max_abs())
    return CdybeResult(res, res.max_abs(), scale)


def zero_weight_residual(fam_or_r, lam=None, tol=POLE_TOL):
    """``max_i |[h_i, r(lam)]|``."""
    r = fam_or_r if isinstance(fam_or_r, MultiVector) else eval_r(fam_or_r, lam, tol)
    alg = r.alg
    return max(
        (multivec.ad_action(alg.normalized.h[i], r).max_abs() for i in range(alg.rank)),
        default=0.0,
    )


def tau_of(jet, alpha):
    """``(tau_alpha, grad tau_alpha)`` read off a jet (twist or full)."""
    alg = jet.value.alg
    i, j = alg.e_index(alpha), alg.f_index(alpha)
    k = alg.normalized.pair_norm[tuple(alpha)]
    t = complex(jet.value.coeff(i, j) * k)
    if not jet.twist:
        t -= 1
    grad = np.array([complex(p.coeff(i, j) * k) for p in jet.partials])
    return t, grad


def ode_residual(fam_or_jet, lam=None, roots=None, sign=None, tol=POLE_TOL):
    """``max |d tau_a/d lam_i + sign * <a, h*_i> (tau_a + 2) tau_a|`` over a, i."""
    if isinstance(fam_or_jet, RJet):
        jet = fam_or_jet
        roots = jet.value.alg.positive_roots if roots is None else roots
    else:
        jet = fam_or_jet.twist_jet(lam, tol)
        roots = fam_or_jet.closure if roots is None else roots
    s = ODE_SIGN if sign is None else sign
    worst = 0.0
    for a in roots:
        t, grad = tau_of(jet, a)
        for i, n_i in enumerate(a):
            worst = max(worst, abs(grad[i] + s * n_i * (t + 2) * t))
    return worst


@dataclass
class DichotomyReport:
    zero_counts: dict
    samples: int
    passed: bool
    offending: list = field(default_factory=list)


def vanishing_dichotomy_check(jets, zero_tol=0.0):
    """Each ``tau_alpha`` vanishes at all samples or at none."""
    jets = list(jets)
    if len(jets) < 2:
        raise ValueError("need at least two samples")
    alg = jets[0].value.alg
    counts = {}
    for a in alg.positive_roots:
        counts[a] = sum(abs(tau_of(j, a)[0]) <= zero_tol for j in jets)
    bad = [a for a, c in counts.items() if 0 < c < len(jets)]
    return DichotomyReport(counts, len(jets), not bad, bad)


def family_dichotomy_check(fam, samples, zero_tol=0.0):
    return vanishing_dichotomy_check([fam.twist_jet(lam) for lam in samples], zero_tol)


# -- classification ------------------------------------------------------------------

@dataclass
class Classification:
    alg: object
    S: frozenset
    constants: dict  # C_alpha = exp(2 <alpha, lambda0>) for alpha in [S]
    lambda0: np.ndarray
    omega: np.ndarray
    eigenvalues: list = field(default_factory=list)  # per sample: {alpha: exp(2<alpha, lam + lambda0>)}
    residuals: dict = field(default_factory=dict)

    def to_json(self):
        fmt = lambda d: [{"root": list(a), **_cjson(v)} for a, v in sorted(d.items())]
        return {
            "algebra": self.alg.cartan_type.to_json(),
            "S": sorted(i + 1 for i in self.S),
            "eigenvalues": fmt(self.constants),
            "sample_eigenvalues": [fmt(e) for e in self.eigenvalues],
            "lambda0_representative": [_cjson(z) for z in self.lambda0],
            "omega": [[_cjson(z) for z in row] for row in self.omega],
            "residuals": self.residuals,
        }

    def family(self, shift=None):
        l0 = self.lambda0 if shift is None else self.lambda0 - np.asarray(shift, complex)
        return RMatrixFamily(self.alg, self.S, l0, self.omega)


def lambda0_from_constants(alg, S, constants):
    """Principal-branch ``lambda0`` with ``<alpha_i, lambda0> = log(C_i) / 2`` on S."""
    l0 = np.zeros(alg.rank, complex)
    for i in S:
        l0[i] = cmath.log(constants[alg.simple_roots[i]]) / 2
    return l0


def multiplicativity_residual(alg, constants):
    """``max |C_a C_b - C_{a+b}| / |C_{a+b}|`` over composable pairs."""
    worst = 0.0
    for a in constants:
        for b in constants:
            c = tuple(x + y for x, y in zip(a, b))
            if c in constants:
                worst = max(worst, abs(constants[a] * constants[b] - constants[c]) / abs(constants[c]))
    return worst


def classify_from_samples(samples, twist=False, zero_tol=1e-12, tol=1e-9):
    """Recover ``(S, lambda0, omega)`` from sampled values of ``r`` (or ``tau``).

    ``samples`` is a sequence of ``(lam, MultiVector)`` with at least two
    generic points.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    alg = samples[0][1].alg
    n = alg.rank
    r0 = standard_r(alg)
    taus = []
    omegas = []
    for lam, v in samples:
        t = v if twist else v - r0
        coeffs = {}
        rest = dict(t.terms)
        for a in alg.positive_roots:
            key = (alg.e_index(a), alg.f_index(a))
            coeffs[a] = complex(rest.pop(key, 0)) * complex(alg.normalized.pair_norm[a])
        om = np.zeros((n, n), complex)
        for key, c in list(rest.items()):
            if len(key) == 2 and key[1] < n:
                rest.pop(key)
                om[key[0], key[1]] = complex(c)
        leftover = max((abs(complex(c)) for c in rest.values()), default=0.0)
        if leftover > tol:
            raise NotDynamical(f"components outside the zero-weight form (max {leftover:.3g})")
        taus.append((np.asarray(lam, complex), coeffs))
        omegas.append(_omega_from_hc(alg, om))
    for om in omegas[1:]:
        if np.abs(om - omegas[0]).max() > tol * max(1.0, np.abs(omegas[0]).max()):
            raise NotDynamical("gauge term varies between samples")

    nonzero = {a: [abs(c[a]) > zero_tol for _, c in taus] for a in alg.positive_roots}
    for a, flags in nonzero.items():
        if any(flags) and not all(flags):
            raise NotDynamical(f"tau_{list(a)} vanishes at some samples only")
    support = {a for a, flags in nonzero.items() if all(flags)}
    S = frozenset(i for i, a in enumerate(alg.simple_roots) if a in support)
    if support != closed_roots(alg, S):
        raise NotDynamical("roots with nonzero tau are not the closure of simple roots")

    per_sample = []
    consts = {a: [] for a in support}
    for lam, c in taus:
        eig = {}
        for a in support:
            t = c[a]
            if abs(t) < zero_tol:
                raise NearPole(a, 0.0)
            phi = (t + 2) / t
            eig[a] = phi
            consts[a].append(phi * cmath.exp(-2 * root_pairing(a, lam)))
        per_sample.append(eig)
    constants = {}
    spread = 0.0
    for a, vals in consts.items():
        constants[a] = vals[0]
        spread = max(spread, max(abs(v - vals[0]) / abs(vals[0]) for v in vals))
    if spread > tol:
        raise NotDynamical(f"Cayley constants are not constant across samples (spread {spread:.3g})")
    mult = multiplicativity_residual(alg, constants)
    if mult > tol:
        raise NotDynamical(f"Cayley constants are not multiplicative (residual {mult:.3g})")
    return Classification(
        alg, S, constants, lambda0_from_constants(alg, S, constants), omegas[0],
        per_sample, {"constant_spread": spread, "multiplicativity": mult},
    )


def _omega_from_hc(alg, om_hc):
    """Convert ``sum_{a<b} c_ab H_a ^ H_b`` (Chevalley coroots) into skew ``omega``.

    ``H_a = kappa(e_a, f_a) h_a``, and ``sum_{i,j} omega_ij h_i ^ h_j`` counts
    each unordered pair twice.
    """
    n = alg.rank
    k = np.array([float(alg.normalized.pair_norm[a]) for a in alg.simple_roots])
    om = np.zeros((n, n), complex)
    for a in range(n):
        for b in range(a + 1, n):
            v = om_hc[a, b] * k[a] * k[b] / 2
            om[a, b], om[b, a] = v, -v
    return om


# -- calibration and sampling ----------------------------------------------------------

def calibrate_conventions(lam=0.7 + 0.1j):
    """Pick the Schouten and ODE signs that make the sl2 family consistent.

    Returns ``(schouten_sign, ode_sign)``: the Schouten sign under which the
    sl2 coth family has zero CDYBE residual, and the ODE sign under which it
    then has zero ODE residual.
    """
    fam = RMatrixFamily.make("A1", S={0})
    jet = fam.jet([lam])
    alg = fam.alg
    best = {}
    for s in (1, -1):
        half = schouten(jet.value, jet.value, sign=s) * 0.5
        rhs = schouten(standard_r(alg), standard_r(alg), sign=s) * Fraction(1, 2)
        best[s] = (alt_d(jet) + half - rhs).max_abs()
    schouten_sign = min(best, key=best.get)
    ode = {s: ode_residual(fam, [lam], sign=s) for s in (1, -1)}
    return schouten_sign, min(ode, key=ode.get)


def check_conventions():
    got = calibrate_conventions()
    want = (multivec.SCHOUTEN_SIGN, ODE_SIGN)
    if got != want:
        raise RuntimeError(f"convention calibration drifted: calibrated {got}, stored {want}")
    return got


def random_lambda0(alg, rng, re=(-0.5, 0.5), im=(0.0, 0.3)):
    n = alg.rank
    return rng.uniform(*re, n) + 1j * rng.uniform(*im, n)


def random_omega(alg, rng, scale=0.5):
    n = alg.rank
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (m - m.T) / 2


def generic_samples(fam, rng, count, re=(0.3, 1.5), im=(0.0, 0.3), tol=POLE_TOL, max_tries=1000):
    """Sample ``count`` points avoiding ``|sinh<a, lam + lambda0>| < tol``."""
    out = []
    n = fam.alg.rank
    for _ in range(max_tries):
        lam = rng.uniform(*re, n) + 1j * rng.uniform(*im, n)
        try:
            fam.check_poles(lam, tol)
        except NearPole:
            continue
        out.append(lam)
        if len(out) == count:
            return out
    raise RuntimeError("could not find generic sample points")


def all_subsets(n):
    from itertools import combinations

    return [frozenset(c) for k in range(n + 1) for c in combinations(range(n), k)]
