import cmath

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from dynrmat import dynr
from dynrmat.dynr import NearPole, RMatrixFamily, closed_roots, root_pairing
from dynrmat.lagrangian import (
    CayleyPole,
    DoubleElement,
    DSubspace,
    NotLagrangian,
    NotTransverse,
    build_l,
    cartan_diagonal,
    cayley_eigencheck,
    cayley_of,
    classify_subspace,
    covector_basis,
    d_bracket,
    d_form,
    diagonal,
    diagonal_intersection,
    extend_from_point,
    extract_char_pair,
    is_lagrangian_subalgebra,
    k_ideal_violations,
    principal_angle,
    w_of_lambda,
)
from dynrmat.rootsys import build_algebra

from conftest import ALL_TYPES

PROP_TYPES = ["A1", "A2", "B2", "C2", "G2", "A3"]
coord = st.floats(-0.5, 0.5, allow_nan=False)


@st.composite
def generic_l(draw, types=PROP_TYPES):
    alg = build_algebra(draw(st.sampled_from(types)))
    S = frozenset(draw(st.sets(st.integers(0, alg.rank - 1))))
    l0 = np.array([complex(draw(coord), draw(st.floats(0.01, 0.3))) for _ in range(alg.rank)])
    fam = RMatrixFamily(alg, S, l0)
    try:
        fam.check_poles(np.zeros(alg.rank), 1e-3)
    except NearPole:
        assume(False)
    return alg, S, l0


def pad(alg, X=None, Y=None):
    z = np.zeros(alg.dim)
    return np.concatenate([z if X is None else X, z if Y is None else Y])


# -- the form


def test_d_form_examples(sl2):
    nb = sl2.normalized.np
    a = (1,)
    x = DoubleElement(nb["E"][a], nb["E"][a])
    y = DoubleElement(nb["Em"][a], nb["Em"][a])
    assert d_form(sl2, x, y) == 0
    assert d_form(sl2, pad(sl2, nb["E"][a]), pad(sl2, nb["Em"][a])) == -0.5


@given(st.sampled_from(PROP_TYPES), st.data())
def test_d_form_symmetric(ct, data):
    alg = build_algebra(ct)
    v = st.lists(st.floats(-2, 2), min_size=2 * alg.dim, max_size=2 * alg.dim)
    a, b = np.array(data.draw(v)), np.array(data.draw(v))
    assert d_form(alg, a, b) == pytest.approx(d_form(alg, b, a), abs=1e-12)


def test_d_bracket_componentwise(sl3):
    a, b = np.arange(16.0), np.arange(16.0)[::-1].copy()
    br = d_bracket(sl3, a, b)
    assert np.allclose(br[:8], sl3.bracket_np(a[:8], b[:8]))
    assert np.allclose(br[8:], sl3.bracket_np(a[8:], b[8:]))


# -- build_l


def test_build_l_empty_is_standard(sl3):
    W = build_l(sl3, frozenset())
    assert W.dim == sl3.dim == sl3.rank + 2 * len(sl3.positive_roots)
    assert W.rank() == W.dim


def test_build_l_full_at_zero_is_diagonal(sl3):
    import sympy

    W, D = build_l(sl3, {0, 1}), diagonal(sl3)
    assert sympy.Matrix(W.exact + D.exact).rank() == sl3.dim == W.rank()


def test_build_l_sl2_exponent(sl2):
    mu = [0.3]  # <alpha, mu> = 0.3 on sl2
    assert root_pairing((1,), mu) == pytest.approx(0.3)
    W = build_l(sl2, {0}, mu)
    nb = sl2.normalized.np
    v = pad(sl2, nb["E"][(1,)], np.exp(0.6) * nb["E"][(1,)])
    assert W.distance(v) <= 1e-14
    assert W.distance(pad(sl2, nb["E"][(1,)], np.exp(0.3) * nb["E"][(1,)])) > 1e-3


@given(generic_l(types=ALL_TYPES))
def test_build_l_lagrangian(args):
    alg, S, l0 = args
    W = build_l(alg, S, l0)
    rep = is_lagrangian_subalgebra(W)
    assert rep.dim_ok
    assert rep.isotropy_residual <= 1e-12
    assert rep.closure_residual <= 1e-9
    assert diagonal_intersection(W).dim == alg.rank


def test_lagrangian_examples(sl2):
    nb = sl2.normalized.np
    a = (1,)
    h = nb["h"][0]
    assert is_lagrangian_subalgebra(diagonal(sl2)).passed()
    # Borel-type subspace: a Lagrangian subalgebra
    borel = DSubspace(sl2, [pad(sl2, nb["E"][a]), pad(sl2, h, h), pad(sl2, None, nb["E"][a])])
    assert is_lagrangian_subalgebra(borel).passed()
    # isotropic but not closed: [(E, E), (E-, E-)] = (h, h) escapes
    open_ = DSubspace(sl2, [pad(sl2, nb["E"][a], nb["E"][a]), pad(sl2, nb["Em"][a], nb["Em"][a]), pad(sl2, h, -h)])
    rep = is_lagrangian_subalgebra(open_)
    assert rep.isotropy_residual == 0
    assert rep.closure_residual > 0.1


# -- diagonal intersection


def test_diagonal_intersection_examples(sl3, rng):
    assert diagonal_intersection(diagonal(sl3)).dim == sl3.dim
    W = build_l(sl3, {0, 1}, [0.2 + 0.1j, -0.15 + 0.05j])
    assert diagonal_intersection(W).dim == sl3.rank
    noisy = DSubspace(sl3, W.basis + 1e-12 * rng.normal(size=W.basis.shape))
    assert diagonal_intersection(noisy, tol=1e-8).dim == sl3.rank
    inter = diagonal_intersection(W)
    assert principal_angle(inter, cartan_diagonal(sl3)) <= 1e-12


def test_exact_intersection(sl3):
    W = build_l(sl3, frozenset())
    assert W.exact is not None
    inter = diagonal_intersection(W)
    assert inter.exact is not None and len(inter.exact) == sl3.rank


# -- characteristic pairs


@given(generic_l())
def test_char_pair_of_l(args):
    alg, S, l0 = args
    cp = extract_char_pair(build_l(alg, S, l0))
    closure = closed_roots(alg, S)
    assert cp.invariance_residual <= 1e-9
    for a, j in cp.J.items():
        if a in closure:
            want = 1 / cmath.tanh(root_pairing(a, l0)) - 1
            assert abs(j - want) <= 1e-9 * max(1.0, abs(want))
        else:
            assert abs(j) <= 1e-12


def test_char_pair_of_dual_is_zero(sl3):
    rows = [r for _, _, r in covector_basis(sl3)]
    W = DSubspace(sl3, np.vstack([cartan_diagonal(sl3).basis, np.array(rows)]))
    cp = extract_char_pair(W)
    assert max(abs(j) for j in cp.J.values()) <= 1e-15


def test_char_pair_of_diagonal_not_transverse(sl3):
    with pytest.raises(NotTransverse):
        extract_char_pair(diagonal(sl3))


# -- Cayley


def test_cayley_scalar_examples():
    x = 0.4 + 0.3j
    assert cayley_of(1 / cmath.tanh(x)) == pytest.approx(cmath.exp(2 * x), rel=1e-14)
    assert cayley_of(0) == -1
    with pytest.raises(CayleyPole):
        cayley_of(1.0)


def test_cayley_matrix():
    c = np.diag([2.0, 3.0])
    assert np.allclose(cayley_of(c), np.diag([3.0, 2.0]))
    with pytest.raises(CayleyPole):
        cayley_of(np.eye(2))


@pytest.mark.parametrize("ct", ALL_TYPES)
def test_cayley_eigencheck(ct, rng):
    alg = build_algebra(ct)
    for S in dynr.all_subsets(alg.rank):
        fam = RMatrixFamily(alg, S, dynr.random_lambda0(alg, rng))
        for lam in dynr.generic_samples(fam, rng, 2):
            rep = cayley_eigencheck(fam, lam)
            assert rep.passed(1e-9), rep


@pytest.mark.parametrize("ct", ALL_TYPES)
def test_k_ideals(ct):
    alg = build_algebra(ct)
    for S in dynr.all_subsets(alg.rank):
        assert k_ideal_violations(alg, S) == []


# -- W(lambda)


def test_w_constant_family(sl3):
    fam = RMatrixFamily(sl3, frozenset())
    W1, W2 = w_of_lambda(fam, [0.4, 0.5]), w_of_lambda(fam, [1.1, 0.3j])
    assert principal_angle(W1, W2) <= 1e-15
    assert principal_angle(W1, build_l(sl3, frozenset())) <= 1e-15


def test_w_sl2_moves(sl2):
    fam = RMatrixFamily(sl2, {0}, [0.1j])
    W1, W2 = w_of_lambda(fam, [0.5]), w_of_lambda(fam, [0.9])
    assert principal_angle(W1, W2) > 1e-2
    assert is_lagrangian_subalgebra(W1).passed() and is_lagrangian_subalgebra(W2).passed()


@given(generic_l(), st.floats(0.3, 1.5), st.floats(0, 0.3))
def test_w_equals_l_shifted(args, re, im):
    alg, S, l0 = args
    fam = RMatrixFamily(alg, S, l0)
    lam = np.full(alg.rank, complex(re, im)) * np.linspace(1, 0.7, alg.rank)
    try:
        fam.check_poles(lam, 1e-3)
    except NearPole:
        assume(False)
    assert principal_angle(w_of_lambda(fam, lam), build_l(alg, S, lam + l0)) <= 1e-9


# -- classification and extension


@given(generic_l())
def test_classify_roundtrip(args):
    alg, S, l0 = args
    cls = classify_subspace(build_l(alg, S, l0))
    assert cls.S == S
    for a, phi in cls.constants.items():
        want = cmath.exp(2 * root_pairing(a, l0))
        assert abs(phi - want) <= 1e-9 * abs(want)
    # multiplicativity on composable pairs
    for a in cls.constants:
        for b in cls.constants:
            c = tuple(x + y for x, y in zip(a, b))
            if c in cls.constants:
                assert abs(cls.constants[a] * cls.constants[b] - cls.constants[c]) <= 1e-9 * abs(cls.constants[c])


def test_extend_examples(sl3):
    l0 = np.array([0.2 + 0.1j, -0.1 + 0.05j])
    W0 = build_l(sl3, {0, 1}, l0)
    ext0 = extend_from_point(W0, np.zeros(2))
    assert np.allclose(ext0.family.lambda0, l0, atol=1e-12)
    mu = np.array([0.3, 0.1j])
    ext = extend_from_point(W0, mu)
    assert np.allclose(ext.family.lambda0, l0 - mu, atol=1e-12)
    assert ext.angle <= 1e-9
    std = extend_from_point(build_l(sl3, frozenset()), mu)
    assert std.family.S == frozenset()


def test_extension_shift(sl3):
    W0 = build_l(sl3, {0}, [0.2 + 0.1j, 0.3])
    mu1, mu2 = np.array([0.4, 0.1]), np.array([0.9 + 0.1j, 0.5])
    f1, f2 = extend_from_point(W0, mu1).family, extend_from_point(W0, mu2).family
    for lam in ([0.5, 0.7], [1.2 + 0.2j, 0.4]):
        lam = np.array(lam, complex)
        assert principal_angle(w_of_lambda(f1, lam), w_of_lambda(f2, lam + (mu2 - mu1))) <= 1e-9


def test_extend_rejects_non_lagrangian(sl3):
    W = build_l(sl3, {0, 1}, [0.2, 0.1])
    B = W.basis.copy()
    B[0, 3] += 1.0
    with pytest.raises(NotLagrangian):
        extend_from_point(DSubspace(sl3, B), np.zeros(2))


def test_subspace_json_roundtrip(sl3):
    W = build_l(sl3, {1}, [0.2 + 0.1j, 0.3])
    back = DSubspace.from_json(sl3, W.to_json())
    assert np.array_equal(back.basis, W.basis)
