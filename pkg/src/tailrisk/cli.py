"""Command-line interface: ``tailrisk <command> ...``.

Exit codes: 0 ok, 2 input error, 3 spec error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._io import dumps, read_table, write_csv
from .deviation import reference_bound, reference_young, verify_deviation
from .divergence import young_exp, young_power, young_subexp
from .empirical import EmpiricalDistribution
from .errors import ConstructionError, DomainError, InputError, NumericalError
from .extremal import (krein_condition, lorentz_norm, marcinkiewicz_norm, marcinkiewicz_quasi,
                       orlicz_for_fundamental, tm_risk)
from .fundamental import (FundamentalFunction, check_reference, divergence_from_young,
                          divergence_table, fundamental, least_concave_majorant, log_grid,
                          make_fundamental, marcinkiewicz_coincidence, reference,
                          reference_from_table, tabulated_fundamental, young_from_envelope)
from .learn import Dataset, TrainConfig, train
from .riskspec import FAMILIES, MEASURES, RiskSpec, evaluate

EXIT_OK, EXIT_INPUT, EXIT_SPEC, EXIT_NUMERIC = 0, 2, 3, 4


# ------------------------------------------------------------ helpers

def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConstructionError(f"{path}: invalid JSON ({exc})") from exc


def _load_samples(path: str) -> EmpiricalDistribution:
    cols = read_table(path, required=("x",))
    try:
        return EmpiricalDistribution.from_samples(cols["x"], cols.get("w"))
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _risk_from_args(args) -> RiskSpec:
    if args.spec:
        return RiskSpec.from_dict(_load_json(args.spec))
    if not args.risk:
        raise ConstructionError("give --risk FAMILY or --spec FILE")
    return RiskSpec(family=args.risk, epsilon=args.epsilon, alpha=args.alpha, p=args.p,
                    measure=args.measure)


def _reference(name: str):
    if os.path.exists(name):
        return reference_from_table(_load_json(name), os.path.basename(name))
    return reference(name)


def _fundamental(name: str) -> FundamentalFunction:
    if os.path.exists(name):
        return tabulated_fundamental(_load_json(name), os.path.basename(name))
    return fundamental(name)


def _young(name: str):
    key, _, arg = name.partition(":")
    if key == "x2":
        return young_power(2.0)
    if key == "power":
        return young_power(float(arg))
    if key == "subexp":
        return young_subexp()
    if key == "exp":
        return young_exp()
    raise ConstructionError(f"unknown Young function {name!r}; use x2, power:p, subexp or exp")


def _emit(obj, out: str | None = None) -> None:
    text = dumps(obj)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------- commands

def cmd_eval(args) -> int:
    spec = _risk_from_args(args)
    d = _load_samples(args.input)
    res = evaluate(d, spec)
    _emit({
        "measure": spec.measure,
        "family": spec.family,
        "value": res.value,
        "t_star": res.t_star,
        "mu_star": res.mu_star,
        "epsilon": float(spec.epsilon),
        "diagnostics": {
            "n": d.n,
            "iterations": res.iterations,
            "tolerance": res.tolerance_achieved,
            "boundary": res.boundary,
            "renormalized_weights": d.renormalized,
        },
    })
    return EXIT_OK


def cmd_construct(args) -> int:
    ref = _reference(args.reference)
    chk = check_reference(ref)
    if chk.status == "invalid":
        raise ConstructionError(f"reference {ref.name} rejected: {chk.message}")
    young = young_from_envelope(ref, args.side)
    div = divergence_from_young(young, args.epsilon)
    table = divergence_table(div, args.table_size)
    coin = marcinkiewicz_coincidence(young)
    env = young.meta["envelope"]
    if args.side == "dual":
        def phi_fn(t):
            return np.asarray(t, dtype=float) * env(t)
    else:
        def phi_fn(t):
            return 1.0 / env(t)
    phi = make_fundamental(phi_fn, "constructed")
    ts = log_grid(25)
    spec = RiskSpec(family="custom", epsilon=args.epsilon, f_table=tuple(map(tuple, table)), meta={
        "reference": ref.name,
        "side": args.side,
        "check": chk.status,
        "majorant": bool(young.meta["majorant"]),
        "coincidence": bool(coin.coincides),
        "coincidence_indeterminate": bool(coin.indeterminate),
        "krein": bool(krein_condition(phi)),
        "fundamental": [[float(t), float(phi(t))] for t in ts],
    })
    _emit(spec.to_dict(), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    d = _load_samples(args.input)
    phi = _fundamental(args.fundamental)
    if args.majorant and not phi.concave:
        phi = least_concave_majorant(phi)
    if not phi.concave:
        raise ConstructionError(f"{phi.name} is not concave; pass --majorant to use its least concave majorant")
    m_quasi = marcinkiewicz_quasi(d, phi)
    m = marcinkiewicz_norm(d, phi)
    o = orlicz_for_fundamental(d, phi)
    lam = lorentz_norm(d, phi)
    tm = tm_risk(d.abs(), phi) if phi.zero_limit == 0 else None
    tol = 1e-9 * max(1.0, abs(lam))
    _emit({
        "fundamental": phi.name,
        "marcinkiewicz_quasi": m_quasi,
        "marcinkiewicz": m,
        "orlicz": o,
        "lorentz": lam,
        "tm": tm,
        "sandwich_ok": bool(m <= o + tol and o <= lam + tol),
        # tm is a risk measure for phi/phi(1); phi(1) tm compares with the norm
        "tm_le_lorentz": None if tm is None else bool(tm * float(phi(1.0)) <= lam + tol),
    })
    return EXIT_OK


def cmd_deviation(args) -> int:
    d = _load_samples(args.input)
    if bool(args.reference) == bool(args.young):
        raise ConstructionError("give exactly one of --reference or --young")
    ref = _reference(args.reference) if args.reference else None
    psi = reference_young(ref) if ref is not None else _young(args.young)
    top = float(np.max(np.abs(d.values)))
    xmax = args.xmax if args.xmax else (1.5 * top if top > 0 else 1.0)
    if not xmax > 0:
        raise DomainError("--xmax must be positive")
    grid = np.linspace(xmax / args.points, xmax, args.points)
    rep = verify_deviation(d, psi, grid)
    out = rep.as_dict()
    if ref is not None and rep.norm > 0:
        rb = reference_bound(ref, d, grid, psi=psi)
        for row, b in zip(out["rows"], np.atleast_1d(rb)):
            row["reference_bound"] = float(b)
    _emit(out)
    return EXIT_OK if rep.passed else EXIT_NUMERIC


def cmd_train(args) -> int:
    cols = read_table(args.features, required=("y",))
    names = [c for c in cols if c not in ("y", "w")]
    if not names:
        raise InputError(f"{args.features}: no feature columns")
    X = np.column_stack([cols[c] for c in names])
    data = Dataset(X, cols["y"], cols.get("w"))
    cfg_obj = _load_json(args.config)
    if not isinstance(cfg_obj, dict) or "risk" not in cfg_obj:
        raise ConstructionError("training config needs a 'risk' object")
    allowed = {"risk", "loss", "step_size", "max_epochs", "tolerance", "seed", "init_scale"}
    extra = set(cfg_obj) - allowed
    if extra:
        raise ConstructionError(f"unknown training-config keys: {sorted(extra)}")
    kw = {k: v for k, v in cfg_obj.items() if k != "risk"}
    try:
        cfg = TrainConfig(risk=RiskSpec.from_dict(cfg_obj["risk"]), **kw)
    except DomainError as exc:
        raise ConstructionError(str(exc)) from exc
    res = train(data, cfg)
    _emit({
        "features": names,
        "weights": res.params[:-1].tolist(),
        "bias": float(res.params[-1]),
        "objective": res.history[-1],
        "epochs": res.epochs,
        "converged": res.converged,
        "fallbacks": res.fallbacks,
    }, args.out)
    if args.history:
        write_csv(args.history, ["epoch", "objective"],
                  [(i, float(v)) for i, v in enumerate(res.history)])
    return EXIT_OK


def cmd_plotdata(args) -> int:
    phis = [_fundamental(n) for n in args.fundamental]
    ts = log_grid(args.points, args.tmin)
    cols = [np.asarray(p(ts), dtype=float) for p in phis]
    rows = [[float(t)] + [float(c[i]) for c in cols] for i, t in enumerate(ts)]
    header = ["t"] + list(args.fundamental)
    if args.out:
        write_csv(args.out, header, rows)
    else:
        write_csv(sys.stdout, header, rows)
    return EXIT_OK


# ------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tailrisk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"tailrisk {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a risk measure on a sample CSV")
    p.add_argument("input", help="CSV with column x and optional weights w")
    p.add_argument("--risk", choices=FAMILIES, help="divergence family")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--measure", choices=MEASURES, default="divergence")
    p.add_argument("--spec", help="risk-spec JSON file (overrides --risk)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("construct", help="build a divergence from a reference tail")
    p.add_argument("--reference", required=True,
                   help="exponential, pareto:p, log-ratio or a JSON file of [t, Y*(t)] pairs")
    p.add_argument("--side", choices=("dual", "primal"), default="dual")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--table-size", type=int, default=None)
    p.add_argument("--out", help="write the risk spec here instead of stdout")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("compare", help="Marcinkiewicz, Orlicz, Lorentz and TM values")
    p.add_argument("input")
    p.add_argument("--fundamental", required=True, help="catalog name or JSON table")
    p.add_argument("--majorant", action="store_true", help="replace phi by its concave majorant")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("deviation", help="check Orlicz tail bounds on a sample")
    p.add_argument("input")
    p.add_argument("--reference", help="reference tail with Y*(1) = 1")
    p.add_argument("--young", help="x2, power:p, subexp or exp")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--xmax", type=float)
    p.set_defaults(func=cmd_deviation)

    p = sub.add_parser("train", help="risk-averse linear model training")
    p.add_argument("features", help="CSV with feature columns, target y and optional w")
    p.add_argument("config", help="JSON training config")
    p.add_argument("--out")
    p.add_argument("--history", help="CSV file for the objective per epoch")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plotdata", help="tabulate fundamental functions")
    p.add_argument("--fundamental", nargs="+", required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--tmin", type=float, default=1e-6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plotdata)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConstructionError, DomainError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except (NumericalError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
