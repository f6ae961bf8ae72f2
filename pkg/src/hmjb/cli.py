"""Command-line interface: ``hmjb fit | simulate | table | moments | coeffs``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

from .dataio import load_csv
from .errors import GrammarError, HMJBError, InvalidParam
from .families import exact_T, parse_family
from .harness import TEST_GRAMMAR, SimulationConfig, parse_test, run_replications
from .influence import build_influence, jb_coefficients
from .moments import MODEL_GRAMMAR, parse_model, theoretical_ncem
from .stats import (
    chi2_general,
    chi2_symmetric,
    classical_jb,
    general_test,
    ks_test,
)
from .tables import TABLE_IDS, reproduce_table

TAIL_NAMES = {"two": "two_sided_abs", "one": "one_sided_abs"}


def _usage(parse):
    """Wrap a grammar parser so that grammar errors become usage errors (exit 2)."""

    def convert(text):
        try:
            return parse(text)
        except InvalidParam as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    convert.__name__ = parse.__name__
    return convert


def _json_default(o):
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(type(o).__name__)


def _emit(doc: dict, text: str, as_json: bool) -> None:
    if as_json:
        print(json.dumps(doc, indent=2, sort_keys=False, default=_json_default))
    else:
        print(text)


def _cmd_fit(args) -> int:
    model = parse_model(args.model)
    data = load_csv(args.data)
    family = args.family
    tail = TAIL_NAMES[args.tail]
    reports = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for spec in args.test or [parse_test("general")]:
            if spec.kind == "general":
                rep = general_test(data, model, family, args.k, args.variance, tail)
            elif spec.kind == "chi2sym":
                rep = chi2_symmetric(data, model, spec.p)
            elif spec.kind == "chi2gen":
                rep = chi2_general(data, model, spec.p)
            elif spec.kind == "jb":
                rep = classical_jb(data)
            else:
                rep = ks_test(data, model)
            reports.append(rep)
    notes: list[str] = []
    for rep in reports:
        notes.extend(w for w in rep.warnings if w not in notes)
    config = {
        "data": str(args.data),
        "n": int(data.size),
        "model": model.describe(),
        "k": args.k,
        "family": family.describe(),
        "tests": [t.label for t in args.test or [parse_test("general")]],
        "variance_source": args.variance,
        "tail": tail,
    }
    doc = {"config": config, "results": [r.to_dict() for r in reports], "warnings": notes}
    text = "\n\n".join(r.to_text() for r in reports)
    if notes:
        text += "\n\nwarnings:\n" + "\n".join(f"  - {w}" for w in notes)
    _emit(doc, text, args.json)
    return 0


def _cmd_simulate(args) -> int:
    cfg = SimulationConfig(
        model_true=parse_model(args.true),
        model_null=parse_model(args.null),
        family=args.family,
        k=args.k,
        n=args.n,
        B=args.B,
        seed=args.seed,
        tests=tuple(args.test or [parse_test("general")]),
        tail=TAIL_NAMES[args.tail],
        variance_source=args.variance,
    )
    res = run_replications(cfg, workers=args.workers)
    doc = res.to_dict()
    lines = [f"{key}: {v}" for key, v in doc["config"].items()]
    for agg in res.tests:
        lines.append("")
        lines.append(f"[{agg.test}]")
        for key, v in agg.to_dict().items():
            if key == "test" or v is None:
                continue
            lines.append(f"  {key:<18} {v:.6g}" if isinstance(v, float) else f"  {key:<18} {v}")
    if res.warnings:
        lines += ["", "warnings:"] + [f"  - {w}" for w in res.warnings]
    _emit(doc, "\n".join(lines), args.json)
    return 0


def _cmd_table(args) -> int:
    tab = reproduce_table(args.table_id, scale=args.scale, B=args.B, seed=args.seed,
                          tail=TAIL_NAMES[args.tail])
    _emit(tab.to_dict(), tab.render(), args.json)
    return 0


def _cmd_moments(args) -> int:
    model = parse_model(args.model)
    L = min(args.order, model.max_order)
    raw = list(model.raw_moments.raw[: L + 1])
    central = list(model.central[: L + 1])
    ncems = [
        {"p": p, "b": nc.b, "a": nc.a}
        for p in range(2, L // 2 + 1)
        for nc in [theoretical_ncem(model, p)]
    ]
    doc = {"model": model.describe(), "raw": raw, "central": central, "ncem": ncems}
    lines = [f"model {model.describe()}", f"{'l':>3}  {'raw':>16}  {'central':>16}"]
    lines += [f"{ell:>3}  {r:>16.10g}  {c:>16.10g}" for ell, (r, c) in enumerate(zip(raw, central))]
    lines += ["", f"{'p':>3}  {'b_p':>16}  {'a_p':>16}"]
    lines += [f"{d['p']:>3}  {d['b']:>16.10g}  {d['a']:>16.10g}" for d in ncems]
    _emit(doc, "\n".join(lines), args.json)
    return 0


def _cmd_coeffs(args) -> int:
    model = parse_model(args.model)
    family = args.family
    rows = []
    for p in range(2, args.k + 1):
        c = jb_coefficients(p, model, check_singular=False)
        rows.append({"p": p, "bj": c.bj, "aj": c.aj, "abj": c.abj, "delta": c.delta})
    inf = build_influence(args.k, family, model)
    doc = {
        "model": model.describe(),
        "family": family.describe(),
        "k": args.k,
        "coefficients": rows,
        "T": exact_T(family, args.k, model),
        "sigma2": inf.sigma2,
        "sigma": math.sqrt(inf.sigma2),
    }
    lines = [f"model {model.describe()}, family {family.describe()}, k={args.k}", ""]
    lines.append(f"{'p':>3}  {'bj':>14}  {'aj':>14}  {'abj':>14}  {'delta':>14}")
    lines += [
        f"{r['p']:>3}  {r['bj']:>14.8g}  {r['aj']:>14.8g}  {r['abj']:>14.8g}  {r['delta']:>14.8g}"
        for r in rows
    ]
    lines += ["", f"T       {doc['T']:.10g}", f"sigma2  {doc['sigma2']:.10g}", f"sigma   {doc['sigma']:.10g}"]
    _emit(doc, "\n".join(lines), args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hmjb",
        description="High-moment Jarque-Bera goodness-of-fit tests.",
        epilog=f"models: {MODEL_GRAMMAR}; families: square | theta:<theta>,<power>; "
        f"tests: {TEST_GRAMMAR}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, k=True, family=True, tail=True):
        if k:
            p.add_argument("--k", type=int, default=3, help="highest NCEM order (default 3)")
        if family:
            p.add_argument("--family", type=_usage(parse_family), default=parse_family("square"),
                           help="square | theta:<theta>,<power>")
        if tail:
            p.add_argument("--tail", choices=sorted(TAIL_NAMES), default="two",
                           help="p-value of |t*|: two-sided (default) or one-sided")
        p.add_argument("--json", action="store_true", help="emit one JSON document")

    p = sub.add_parser("fit", help="test a data file against a model")
    p.add_argument("--data", required=True, help="CSV/text file, one number per line")
    p.add_argument("--model", required=True, help=MODEL_GRAMMAR)
    p.add_argument("--test", action="append", type=_usage(parse_test),
                   help=f"repeatable; {TEST_GRAMMAR}")
    p.add_argument("--variance", choices=["exact", "plugin"], default="exact")
    common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("simulate", help="Monte Carlo replication protocol")
    p.add_argument("--true", required=True, help="data-generating model")
    p.add_argument("--null", required=True, help="hypothesized model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test", action="append", type=_usage(parse_test),
                   help=f"repeatable; {TEST_GRAMMAR}")
    p.add_argument("--variance", choices=["exact", "plugin"], default="exact")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("table", help="recompute a published table")
    p.add_argument("table_id", choices=TABLE_IDS)
    p.add_argument("--scale", type=float, default=1.0, help="multiply published n values")
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tail", choices=sorted(TAIL_NAMES), default="one")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("moments", help="raw/central moments and NCEMs of a model")
    p.add_argument("--model", required=True, help=MODEL_GRAMMAR)
    p.add_argument("--order", type=int, default=12)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("coeffs", help="chi-square coefficients and sigma_k^2 of a model")
    p.add_argument("--model", required=True, help=MODEL_GRAMMAR)
    common(p, tail=False)
    p.set_defaults(func=_cmd_coeffs)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GrammarError as exc:
        parser.error(str(exc))
    except HMJBError as exc:
        print(f"hmjb: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"hmjb: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
