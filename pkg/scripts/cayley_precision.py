"""Relative error of recovered Cayley constants against |C| = e^{2 Re<a, mu>}.

Compares the refined extraction with a plain double-precision least-squares
solve on the same float subspace. Prints one row per sample, sorted by |C|.
"""

import cmath

import numpy as np

from dynrmat import dynr, lagrangian
from dynrmat.dynr import RMatrixFamily
from dynrmat.rootsys import build_algebra


def plain_constants(W0):
    alg = W0.alg
    n, r = alg.dim, alg.rank
    diag = np.array([np.concatenate([lagrangian._unit(alg, a)] * 2) for a in range(r, n)])
    M = np.concatenate([W0.basis.T, -diag.T], axis=1)
    out = {}
    for a, sign, xi in lagrangian.covector_basis(alg):
        if sign < 0:
            continue
        sol = np.linalg.lstsq(M, xi, rcond=None)[0]
        z = np.zeros(n, complex)
        z[r:] = sol[W0.dim:]
        j = 2 * z[alg.e_index(a)]
        if abs(j) > 1e-12:
            out[a] = lagrangian.cayley_of(j + 1)
    return out


def main():
    rng = np.random.default_rng(5)
    rows = []
    for ct in ["A2", "B3", "C3", "D4"]:
        alg = build_algebra(ct)
        fam = RMatrixFamily(alg, frozenset(range(alg.rank)), dynr.random_lambda0(alg, rng))
        for lam in dynr.generic_samples(fam, rng, 4, re=(0.3, 2.5)):
            W = lagrangian.w_of_lambda(fam, lam)
            refined = {a: lagrangian.cayley_of(j + 1) for a, j in lagrangian.extract_char_pair(W).J.items() if abs(j) > 1e-12}
            plain = plain_constants(W)
            for a, c in refined.items():
                want = cmath.exp(2 * dynr.root_pairing(a, lam + fam.lambda0))
                rows.append((abs(want), abs(plain[a] - want) / abs(want), abs(c - want) / abs(want), ct))
    rows.sort()
    print(f"{'|C|':>10} {'plain':>10} {'refined':>10}  type")
    for c, p, r, ct in rows[:: max(1, len(rows) // 25)]:
        print(f"{c:10.3e} {p:10.2e} {r:10.2e}  {ct}")


if __name__ == "__main__":
    main()
