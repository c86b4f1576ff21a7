"""Command-line front end: ``dynrmat {algebra info, verify, classify, extend, export}``.

Exit codes: 0 all checks pass, 1 a check (or classification) fails, 2 configuration error.
Reports are UTF-8 JSON with sorted keys; identical configuration and seed give identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import courant, dynr, lagrangian
from .dynr import NearPole, NotDynamical, RJet, RMatrixFamily
from .lagrangian import DSubspace, NotClassifiable, NotTransverse
from .multivec import MultiVector, h_vector, standard_r
from .rootsys import SUPPORTED, CartanType, UnsupportedType, build_algebra, cartan_matrix, dump_basis, fraction_str

DEFAULT_TOLS = {"residual": 1e-9, "weight": 1e-12, "fd": 1e-6}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    algebra: str = "A1"
    S: tuple = None  # 0-based simple-root indices, None when unset
    all_s: bool = False
    lambda0: tuple = None
    mu: str = None  # parsed against the input's algebra
    seed: int = 0
    samples: int = 3
    tols: dict = field(default_factory=lambda: dict(DEFAULT_TOLS))
    perturb: float = 0.0
    out: str = None
    input: str = None
    what: str = None
    basis: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.samples < 1:
            raise ConfigError("samples must be positive")
        for k, v in self.tols.items():
            if not v > 0:
                raise ConfigError(f"tolerance {k} must be positive")

    def header(self):
        d = asdict(self)
        d["S"] = None if self.S is None else [i + 1 for i in self.S]
        d["lambda0"] = None if self.lambda0 is None else [_cjson(z) for z in self.lambda0]
        return d


# -- parsing ---------------------------------------------------------------------------

def _cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def parse_complex_list(text, n, name):
    try:
        vals = tuple(complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse --{name} {text!r}: {exc}") from exc
    if len(vals) != n:
        raise ConfigError(f"--{name} needs {n} entries, got {len(vals)}")
    return vals


def parse_s(text, n):
    if text is None:
        return None
    try:
        S = tuple(sorted({int(t) for t in text.replace(" ", "").split(",") if t}))
    except ValueError as exc:
        raise ConfigError(f"cannot parse --s {text!r}") from exc
    if any(not 1 <= i <= n for i in S):
        raise ConfigError(f"--s indices must lie in 1..{n}")
    return tuple(i - 1 for i in S)


def build_parser():
    p = argparse.ArgumentParser(prog="dynrmat", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", default="A1", help="Cartan type, e.g. A2")
    common.add_argument("--s", default=None, help="comma-separated 1-based simple roots; '' for none")
    common.add_argument("--lambda0", default=None, help="comma-separated complex coordinates")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=3)
    common.add_argument("--tol-residual", type=float, default=DEFAULT_TOLS["residual"])
    common.add_argument("--tol-weight", type=float, default=DEFAULT_TOLS["weight"])
    common.add_argument("--tol-fd", type=float, default=DEFAULT_TOLS["fd"])
    common.add_argument("--out", default=None, help="write JSON here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("algebra", help="algebra data")
    alg_sub = alg.add_subparsers(dest="what", required=True)
    info = alg_sub.add_parser("info", parents=[common], help="summary of an algebra")
    info.add_argument("--basis", action="store_true", help="include exact structure constants")

    v = sub.add_parser("verify", parents=[common], help="run the verification suite")
    v.add_argument("--all-s", action="store_true", help="every subset of simple roots")
    v.add_argument("--perturb", type=float, default=0.0, metavar="EPS",
                   help="add EPS times a weight-breaking bivector to r (falsification control)")

    c = sub.add_parser("classify", parents=[common], help="classify a subspace or sampled r")
    c.add_argument("input", help="JSON file: subspace basis or r samples")

    e = sub.add_parser("extend", parents=[common], help="extend a Lagrangian subalgebra to a family")
    e.add_argument("input", help="JSON file with a subspace basis")
    e.add_argument("--mu", default=None, help="base point (default 0)")

    x = sub.add_parser("export", parents=[common], help="write JSON artifacts")
    x.add_argument("what", choices=["basis", "family", "l", "diagonal", "samples"])
    return p


def config_from_args(args):
    try:
        ct = CartanType.parse(args.algebra)
    except UnsupportedType as exc:
        raise ConfigError(f"{exc}; supported: {', '.join(s + str(r) for s, r in SUPPORTED)}") from exc
    n = ct.rank
    cfg = RunConfig(
        command=args.command if args.command != "algebra" else "algebra info",
        algebra=str(ct),
        S=parse_s(args.s, n),
        all_s=getattr(args, "all_s", False),
        lambda0=None if args.lambda0 is None else parse_complex_list(args.lambda0, n, "lambda0"),
        mu=getattr(args, "mu", None),
        seed=args.seed,
        samples=args.samples,
        tols={"residual": args.tol_residual, "weight": args.tol_weight, "fd": args.tol_fd},
        perturb=getattr(args, "perturb", 0.0),
        out=args.out,
        input=getattr(args, "input", None),
        what=getattr(args, "what", None),
        basis=getattr(args, "basis", False),
    )
    if cfg.all_s and cfg.S is not None:
        raise ConfigError("--all-s and --s are mutually exclusive")
    if cfg.command == "verify" and cfg.samples < 2:
        raise ConfigError("verify needs --samples >= 2")
    return cfg


# -- output ----------------------------------------------------------------------------

def dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=True) + "\n"


def emit(cfg, obj):
    text = dumps(obj)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


# -- families and samples ----------------------------------------------------------------

def families(cfg, alg, rng):
    if cfg.all_s:
        subsets = dynr.all_subsets(alg.rank)
    else:
        subsets = [frozenset(cfg.S or ())]
    out = []
    for S in subsets:
        l0 = np.array(cfg.lambda0, complex) if cfg.lambda0 is not None else dynr.random_lambda0(alg, rng)
        out.append(RMatrixFamily(alg, S, l0))
    return out


def perturbation(alg, eps):
    """``eps E_a1 ^ E_a2`` (rank >= 2) or ``eps E_a1 ^ h_1``: both break the equations."""
    nb = alg.normalized.np
    a = alg.simple_roots
    second = MultiVector.vector(alg, nb["E"][a[1]]) if alg.rank > 1 else h_vector(alg, 0)
    return (MultiVector.vector(alg, nb["E"][a[0]]) ^ second) * eps


def _check(name, value, tol, detail=None):
    value = float(value)
    out = {"name": name, "value": value, "tol": tol, "passed": bool(value <= tol)}
    if detail is not None:
        out["detail"] = detail
    return out


def verify_family(fam, samples, cfg):
    alg = fam.alg
    tr, tw, tfd = cfg.tols["residual"], cfg.tols["weight"], cfg.tols["fd"]
    extra = perturbation(alg, cfg.perturb) if cfg.perturb else MultiVector(alg)

    def jet(lam):
        j = fam.jet(lam)
        return RJet(j.lam, j.value + extra, j.partials)

    jets = [jet(lam) for lam in samples]
    checks = []
    checks.append(_check("cdybe", max(dynr.cdybe_residual(j).norm for j in jets), tr))
    checks.append(_check("zero_weight", max(dynr.zero_weight_residual(j.value) for j in jets), tw))
    fd = 0.0
    for lam in samples:
        a = dynr.alt_dr(fam, lam)
        b = dynr.alt_d(dynr.finite_difference_jet(fam, lam))
        if a.terms or b.terms:
            fd = max(fd, (a - b).max_abs() / max(a.max_abs(), 1e-300))
    checks.append(_check("alt_dr_finite_difference", fd, tfd))
    checks.append(_check("ode", max(dynr.ode_residual(fam, lam) for lam in samples), tr))
    dich = dynr.family_dichotomy_check(fam, samples)
    checks.append(_check("vanishing_dichotomy", 0.0 if dich.passed else 1.0, 0.5, [list(a) for a in dich.offending]))

    cay = [lagrangian.cayley_eigencheck(fam, lam) for lam in samples]
    checks.append(_check("cayley_eigenvalues", max(c.eigen_residual for c in cay), tr))
    checks.append(_check("cayley_multiplicativity", max(c.multiplicativity for c in cay), tr))
    checks.append(_check("k_ideals", len(lagrangian.k_ideal_violations(alg, fam.S)), 0))

    W0 = lagrangian.build_l(alg, fam.S, fam.lambda0)
    rep = lagrangian.is_lagrangian_subalgebra(W0)
    checks.append(_check("l_dimension", 0.0 if rep.dim_ok else 1.0, 0.5))
    checks.append(_check("l_isotropy", rep.isotropy_residual, tw))
    checks.append(_check("l_closure", rep.closure_residual, tr))
    checks.append(_check("l_diagonal_intersection", abs(lagrangian.diagonal_intersection(W0).dim - alg.rank), 0))

    angles, classify_err, s_ok = [], 0.0, True
    for lam in samples:
        W = lagrangian.w_of_lambda(fam, lam)
        angles.append(lagrangian.principal_angle(W, lagrangian.build_l(alg, fam.S, lam + fam.lambda0)))
        cls = lagrangian.classify_subspace(W)
        s_ok &= cls.S == fam.S
        for a, phi in cls.constants.items():
            want = np.exp(2 * dynr.root_pairing(a, lam + fam.lambda0))
            classify_err = max(classify_err, abs(phi - want) / abs(want))
    checks.append(_check("w_equals_l", max(angles), tr))
    checks.append(_check("classify_S", 0.0 if s_ok else 1.0, 0.5))
    checks.append(_check("classify_eigenvalues", classify_err, tr))
    ext = lagrangian.extend_from_point(W0, samples[0])
    checks.append(_check("extension", ext.angle, tr))

    fib = [courant.build_L_fiber(fam, lam) for lam in samples]
    checks.append(_check("L_isotropy", max(F.isotropy_residual() for F in fib), tw))
    checks.append(_check("L_graph", max(F.angle_to(courant.graph_fiber(fam, lam)) for F, lam in zip(fib, samples)), tr))
    d = courant.dirac_closure_check(fam, samples)
    checks.append(_check("dirac_closure", d.max_residual, tr, list(d.worst_pair)))
    mc = [courant.mc_residual(j.twisted()) for j in jets]
    checks.append(_check("mc_h_invariance", max(m[0] for m in mc), tw))
    checks.append(_check("mc_cdybe", max(m[1] for m in mc), tr))
    cp = [courant.charpair_dirac_check(j.twisted()) for j in jets]
    checks.append(_check("charpair_subalgebroid", max(c.subalgebroid for c in cp), tr))
    checks.append(_check("charpair_mc_mod_h", max(c.mc_mod_h for c in cp), tr))
    checks.append(_check("charpair_covector_closure", max(c.covector_closure for c in cp), tr))
    return checks


# -- commands --------------------------------------------------------------------------

def cmd_algebra_info(cfg):
    alg = build_algebra(cfg.algebra)
    K = alg.killing
    out = {
        "algebra": alg.cartan_type.to_json(),
        "dim": alg.dim,
        "rank": alg.rank,
        "positive_roots": [list(a) for a in alg.positive_roots],
        "cartan_matrix": [list(map(int, row)) for row in cartan_matrix(alg.cartan_type)],
        "killing_gram": [[fraction_str(x) for x in row] for row in K],
        "pair_norm": {",".join(map(str, a)): fraction_str(v) for a, v in alg.normalized.pair_norm.items()},
    }
    if cfg.basis:
        out["basis"] = dump_basis(alg)
    emit(cfg, out)
    return 0


def cmd_verify(cfg):
    alg = build_algebra(cfg.algebra)
    rng = np.random.default_rng(cfg.seed)
    fams, failed = [], []
    for fam in families(cfg, alg, rng):
        samples = dynr.generic_samples(fam, rng, cfg.samples)
        try:
            checks = verify_family(fam, samples, cfg)
        except (NearPole, NotDynamical, NotClassifiable, NotTransverse) as exc:
            checks = [{"name": "exception", "passed": False, "detail": f"{type(exc).__name__}: {exc}"}]
        entry = fam.to_json()
        entry["samples"] = [[_cjson(z) for z in lam] for lam in samples]
        entry["checks"] = checks
        fams.append(entry)
        label = "S=" + ",".join(str(i + 1) for i in sorted(fam.S))
        failed += [f"{label}:{c['name']}" for c in checks if not c["passed"]]
    emit(cfg, {
        "command": "verify",
        "config": cfg.header(),
        "seed": cfg.seed,
        "tolerances": cfg.tols,
        "families": fams,
        "failed_checks": failed,
        "passed": not failed,
    })
    for f in failed:
        print(f"FAILED {f}", file=sys.stderr)
    return 0 if not failed else 1


def _read_subspace(data):
    if "algebra" not in data or "basis" not in data:
        raise ConfigError("subspace JSON needs 'algebra' and 'basis'")
    alg = build_algebra(data["algebra"])
    try:
        return DSubspace.from_json(alg, data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed subspace JSON: {exc}") from exc


def cmd_classify(cfg):
    data = load_json(cfg.input)
    out = {"command": "classify", "input": cfg.input}
    try:
        if "samples" in data:
            alg = build_algebra(data["algebra"])
            samples = [
                (np.array([dynr._cparse(z) for z in s["lambda"]]), MultiVector.from_json(alg, s["r"]))
                for s in data["samples"]
            ]
            cls = dynr.classify_from_samples(samples, tol=cfg.tols["residual"])
        else:
            cls = lagrangian.classify_subspace(_read_subspace(data), tol=cfg.tols["residual"])
    except (NotTransverse, NotClassifiable, NotDynamical, NearPole) as exc:
        out["error"] = {"type": type(exc).__name__, "reason": str(exc)}
        emit(cfg, out)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out["classification"] = cls.to_json()
    emit(cfg, out)
    return 0


def cmd_extend(cfg):
    W0 = _read_subspace(load_json(cfg.input))
    n = W0.alg.rank
    mu = np.zeros(n, complex) if cfg.mu is None else np.array(parse_complex_list(cfg.mu, n, "mu"))
    out = {"command": "extend", "input": cfg.input}
    try:
        ext = lagrangian.extend_from_point(W0, mu, lag_tol=cfg.tols["residual"])
    except (NotTransverse, NotClassifiable) as exc:
        out["error"] = {"type": type(exc).__name__, "reason": str(exc)}
        emit(cfg, out)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out.update(ext.to_json())
    ok = ext.angle <= cfg.tols["residual"]
    out["verification"]["passed"] = ok
    emit(cfg, out)
    return 0 if ok else 1


def cmd_export(cfg):
    alg = build_algebra(cfg.algebra)
    rng = np.random.default_rng(cfg.seed)
    S = frozenset(cfg.S or ())
    l0 = np.array(cfg.lambda0, complex) if cfg.lambda0 is not None else np.zeros(alg.rank, complex)
    fam = RMatrixFamily(alg, S, l0)
    if cfg.what == "basis":
        out = dump_basis(alg)
    elif cfg.what == "family":
        out = fam.to_json()
    elif cfg.what == "l":
        out = lagrangian.build_l(alg, S, l0).to_json()
    elif cfg.what == "diagonal":
        out = lagrangian.diagonal(alg).to_json()
    else:
        samples = dynr.generic_samples(fam, rng, max(cfg.samples, 2))
        out = {
            "algebra": alg.cartan_type.to_json(),
            "family": fam.to_json(),
            "samples": [
                {"lambda": [_cjson(z) for z in lam], "r": dynr.eval_r(fam, lam).to_json()} for lam in samples
            ],
        }
    emit(cfg, out)
    return 0


COMMANDS = {
    "algebra info": cmd_algebra_info,
    "verify": cmd_verify,
    "classify": cmd_classify,
    "extend": cmd_extend,
    "export": cmd_export,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        dynr.check_conventions()
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, UnsupportedType) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
