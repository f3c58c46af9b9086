"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 a checked assertion failed,
4 budget exceeded.  Every run with ``--out`` writes ``summary.json``, whose
manifest replays the run via ``repfn replay <summary.json>`` or
``--config <summary.json>``.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import experiments as ex
from .counting import count_profile, expected_delta_small, expected_profile
from .errors import AssertionFailure, BudgetExceeded, ConfigError
from .model import PHI_KINDS, Equation, GrowthSpec, MeasureSpec, check_delta, validate_orpi
from .report import RunManifest, Table, emit_report, load_config
from .sampler import SampledSet, counting_law_report, sample_set

_NOT_CONFIG = {"config", "out", "threads", "func", "command", "subcommand"}


# -- option helpers -------------------------------------------------------------


def _add_measure(p, eq=True):
    g = p.add_argument_group("measure")
    g.add_argument("--h", type=int)
    g.add_argument("--kappa", type=float)
    g.add_argument("--phi", choices=PHI_KINDS)
    g.add_argument("--table", help="phi table as x:y,x:y,...")
    g.add_argument("--c", type=float, help="measure constant (default: normalized)")
    g.add_argument("--eps", type=float, help="use the zero-density measure with this epsilon")
    if eq:
        p.add_argument("--eq", "--b", dest="eq", help="coefficients, e.g. 1,2")


def _add_common(p, seed=False):
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="INI file or JSON manifest with option values")
    if seed:
        p.add_argument("--seed", type=int, help="master seed (required)")
        p.add_argument("--threads", type=int, help="worker threads (default REPFN_THREADS)")


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _eq(args) -> Equation:
    _need(args, "eq")
    return Equation.parse(str(args.eq))


def _ints(text) -> list[int]:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(float(t)) for t in str(text).split(",") if t.strip()]


def _growth(args) -> GrowthSpec:
    if args.eps is not None and args.h is not None and args.kappa is None and args.phi is None:
        return GrowthSpec(args.h, 0.0, "plain_log")
    _need(args, "h", "kappa")
    table = None
    if args.table:
        table = tuple(tuple(float(v) for v in pt.split(":")) for pt in str(args.table).split(","))
    return GrowthSpec(args.h, args.kappa, args.phi or ("table" if table else "constant"), table)


def _measure(args, eq: Equation | None) -> MeasureSpec:
    if args.eps is not None and args.c is None:
        _need(args, "h")
        if eq is None:
            raise ConfigError("--eps needs --eq")
        return asy.mt3_measure(args.eps, args.h, eq)
    g = _growth(args)
    if args.c is not None:
        return MeasureSpec(g, args.c)
    if eq is None or eq.length != g.h:
        raise ConfigError("--c is required unless the equation length equals h")
    return MeasureSpec(g, asy.mt1_constant(g, eq))


def _assertions_table(d: dict) -> Table:
    return Table("assertions", ["assertion", "passed"], [{"assertion": k, "passed": bool(v)} for k, v in d.items()])


def _rows_table(name, rows, columns=None) -> Table:
    if columns is None:
        columns = list(rows[0]) if rows else []
    return Table(name, columns, rows)


# -- handlers: each returns (tables, summary dict, one-line text) ---------------------


def _profile_rows(values):
    ints = np.issubdtype(values.dtype, np.integer)
    return [{"n": n, "value": int(v) if ints else float(v)} for n, v in enumerate(values.tolist())]


def cmd_count(args):
    eq = _eq(args)
    _need(args, "N")
    if args.set:
        A = SampledSet.from_rle(Path(args.set).read_text())
    else:
        _need(args, "seed")
        A = sample_set(_measure(args, eq), args.N, args.seed, args.trial)
    prof = count_profile(A, eq, args.N)
    zeros = int(np.sum((prof.counts == 0) & (np.arange(args.N + 1) % eq.gcd == 0)))
    line = f"count eq={eq} N={args.N} r(N)={int(prof.counts[-1])} zeros={zeros}"
    return [Table("count_profile", ["n", "value"], _profile_rows(prof.counts))], {"zeros": zeros}, line, prof.to_csv()


def cmd_expect(args):
    eq = _eq(args)
    _need(args, "N")
    m = _measure(args, eq)
    if args.kind == "delta_small":
        _need(args, "delta")
        prof = expected_delta_small(m, eq, args.N, args.delta)
    else:
        prof = expected_profile(m, eq, args.N, args.kind)
    line = f"expect kind={args.kind} eq={eq} N={args.N} value(N)={float(prof.values[-1]):.6g}"
    return [Table("expectation_profile", ["n", "value"], _profile_rows(prof.values))], {"measure": m.to_dict()}, line, prof.to_csv()


def _diff_result(name, direct, closed, extra=None):
    row = {"direct": float(direct), "closed": float(closed), "abs_diff": abs(float(direct) - float(closed))}
    row.update(extra or {})
    line = f"{name}: direct={direct:.12g} closed={closed:.12g} |diff|={row['abs_diff']:.3g}"
    return [_rows_table(name.replace("-", "_"), [row])], row, line, None


def cmd_beta_sum(args):
    _need(args, "alpha", "beta", "n")
    d = asy.beta_sum(args.alpha, args.beta, args.L, args.r, args.n)
    c = asy.beta_sum(args.alpha, args.beta, args.L, args.r, args.n, "closed")
    return _diff_result("beta-sum", d, c)


def cmd_power_sum(args):
    _need(args, "omega", "n")
    eq = _eq(args)
    d = asy.power_sum(args.omega, eq, args.n)
    c = asy.power_sum(args.omega, eq, args.n, "closed")
    return _diff_result("power-sum", d, c, {"ratio": d / c if c else float("nan")})


def _closed_table(name, forms: dict) -> Table:
    rows = [{"term": k, **v.to_dict()} for k, v in forms.items()]
    return _rows_table(name, rows, ["term", "coefficient", "exponent", "error_exponent", "log_power"])


def cmd_expected_r(args):
    eq = _eq(args)
    m = _measure(args, eq)
    cf = asy.expected_r_closed_form(m, eq)
    line = f"expected-r: coefficient={cf.coefficient:.12g} exponent={cf.exponent:g} log_power={cf.log_power}"
    summary = {"closed_form": cf.to_dict(), "measure": m.to_dict()}
    if args.N:
        E = float(expected_profile(m, eq, args.N).values[args.N])
        summary["exact_at_N"] = E
        summary["ratio_at_N"] = E / float(cf.evaluate(args.N))
        line += f" exact/closed(N)={summary['ratio_at_N']:.6f}"
    return [_closed_table("closed_form", {"main": cf})], summary, line, None


def cmd_mt12(args):
    _need(args, "C", "kappa", "h")
    eq = _eq(args)
    forms = asy.mt12_profile(args.C, args.kappa, args.h, eq)
    mn, er = forms["main"], forms["error"]
    line = f"mt12: main={mn.coefficient:.12g}*n^{mn.exponent:g} error=n^{er.exponent:g}(log n)^{er.log_power}"
    return [_closed_table("mt12", forms)], {k: v.to_dict() for k, v in forms.items()}, line, None


def cmd_mt3(args):
    _need(args, "eps", "h")
    eq = _eq(args)
    c = asy.mt3_constant(args.eps, args.h, eq)
    coef = asy.expected_r_closed_form(asy.mt3_measure(args.eps, args.h, eq), eq).coefficient
    row = {"c": c, "log_coefficient": coef, "target": 1 - args.eps}
    return [_rows_table("mt3", [row])], row, f"mt3: c={c:.12g} coefficient on log n={coef:.12g}", None


def cmd_sample(args):
    _need(args, "N", "seed")
    m = _measure(args, Equation.parse(args.eq) if args.eq else None)
    if args.law:
        rep = counting_law_report(m, args.N, args.trials, args.seed)
        rows = rep.rows()
        line = f"sample law: ratio at x={rows[-1]['x']} is {rows[-1]['ratio']:.6f}"
        return [_rows_table("counting_law", rows, ["x", "empirical_mean", "expected", "law", "ratio"])], {}, line, None
    A = sample_set(m, args.N, args.seed, args.trial)
    size = int(A.membership[1:].sum())
    line = f"sample N={args.N} seed={args.seed} trial={args.trial} |A∩[1,N]|={size}"
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "set.rle").write_text(A.to_rle())
    return [], {"size": size}, line, A.to_rle()


def _cfg(args, eq, m, checkpoints=None) -> ex.ExperimentConfig:
    _need(args, "N", "trials", "seed")
    return ex.ExperimentConfig(m, eq, args.N, args.trials, args.seed, getattr(args, "delta", None), _ints(args.checkpoints) or (checkpoints or []), args.eps)


def cmd_concentration(args):
    eq = _eq(args)
    m = _measure(args, eq)
    cps = _ints(args.checkpoints) or ex.default_checkpoints(max(2, args.N // 10), args.N) if args.N else None
    rep = ex.run_concentration(_cfg(args, eq, m, cps), args.threads)
    a = rep.assertions()
    rows = rep.rows()
    cols = ["n", "mean", "sd", "expected", "closed_form", "max_rel_dev", "within_3se", "sandwich_violations", "greedy_sandwich_violations", "decomposition_failures"]
    line = f"concentration: {int(rep.within_3se.sum())}/{len(rows)} checkpoints within 3 SE; " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in a.items())
    summary = {"assertions": a, "seeds": {"master_seed": args.seed, "trials": args.trials}}
    return [_rows_table("concentration", rows, cols), _assertions_table(a)], summary, line, None


def cmd_zeros(args):
    eq = _eq(args)
    m = _measure(args, eq)
    rep = ex.run_zero_density(_cfg(args, eq, m), args.threads)
    a = rep.assertions()
    line = f"zeros: E(r(N))/log N={rep.expected_over_log_N:.4f}; " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in a.items())
    summary = {"assertions": a, "expected_over_log_N": rep.expected_over_log_N, "seeds": {"master_seed": args.seed, "trials": args.trials}}
    tables = [
        _rows_table("zero_checkpoints", rep.rows(), ["n", "zero_frequency", "lower_bound", "bound_ok", "expected", "target"]),
        _rows_table("zero_windows", rep.window_rows(), ["j", "start", "end", "total_zeros", "hit_rate"]),
        _rows_table("zero_trials", [{"trial": t, "zeros": int(z)} for t, z in enumerate(rep.trial_totals)], ["trial", "zeros"]),
        _assertions_table(a),
    ]
    return tables, summary, line, None


def cmd_delta(args):
    eq = _eq(args)
    m = _measure(args, eq)
    ns = _ints(args.n) or [200, 400, 800, 1600]
    rows = [{"n": n, "m": int(args.ratio * n), "delta": ex.delta_correlation(m, eq, n, int(args.ratio * n))} for n in ns]
    decays = all(b["delta"] < a["delta"] for a, b in zip(rows, rows[1:]))
    line = "delta: " + " ".join(f"D({r['n']},{r['m']})={r['delta']:.4g}" for r in rows) + f" decreasing={decays}"
    return [_rows_table("delta", rows, ["n", "m", "delta"])], {"decreasing": decays}, line, None


def cmd_stohr(args):
    rep = ex.raikov_stohr_check(args.K)
    a = rep.assertions()
    line = f"stohr K={args.K}: C={rep.C:.4f}; " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in a.items())
    summary = {"assertions": a, "C": rep.C}
    return [_rows_table("stohr", rep.rows(), ["k", "n", "ordered", "unordered", "distinct", "required"]), _assertions_table(a)], summary, line, None


def cmd_validate(args):
    g = _growth(args)
    rep = validate_orpi(g, args.N)
    a = {"orpi": rep.passed}
    if args.delta is not None:
        try:
            check_delta(g, args.delta)
            a["delta_range"] = True
        except ConfigError:
            a["delta_range"] = False
    rows = [{"x": float(x), "ratio": float(r)} for x, r in rep.rows()]
    line = f"validate: median ratio={rep.median:.4g} band_ok={rep.band_ok} settle={rep.settle_ratio:.3f}; " + ", ".join(f"{k}={'pass' if v else 'FAIL'}" for k, v in a.items())
    return [_rows_table("orpi", rows, ["x", "ratio"]), _assertions_table(a)], {"assertions": a}, line, None


# -- parser ---------------------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="repfn", description="Representation functions of random sets.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    leaves: dict[str, argparse.ArgumentParser] = {}

    def leaf(container, name, func, path, **kw):
        p = container.add_parser(name, **kw)
        p.set_defaults(func=func, subcommand=path)
        leaves[path] = p
        return p

    p = leaf(sub, "count", cmd_count, "count", help="count profile of a sampled or given set")
    _add_measure(p)
    _add_common(p, seed=True)
    p.add_argument("--N", type=int)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--set", help="run-length encoded set file")

    p = leaf(sub, "expect", cmd_expect, "expect", help="exact expectation profile")
    _add_measure(p)
    _add_common(p)
    p.add_argument("--N", type=int)
    p.add_argument("--kind", choices=("r", "rho", "delta_small"), default="r")
    p.add_argument("--delta", type=float)

    asym = sub.add_parser("asymptote", help="closed-form asymptotics")
    asub = asym.add_subparsers(dest="subcommand_asym", metavar="form")
    p = leaf(asub, "beta-sum", cmd_beta_sum, "asymptote beta-sum")
    _add_common(p)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=int, default=1)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--n", type=int)
    p = leaf(asub, "power-sum", cmd_power_sum, "asymptote power-sum")
    _add_common(p)
    p.add_argument("--omega", type=float)
    p.add_argument("--eq", "--b", dest="eq")
    p.add_argument("--n", type=int)
    p = leaf(asub, "expected-r", cmd_expected_r, "asymptote expected-r")
    _add_measure(p)
    _add_common(p)
    p.add_argument("--N", type=int, help="also compare with the exact expectation at N")
    p = leaf(asub, "mt12", cmd_mt12, "asymptote mt12")
    _add_common(p)
    p.add_argument("--C", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--h", type=int)
    p.add_argument("--eq", "--b", dest="eq")
    p = leaf(asub, "mt3", cmd_mt3, "asymptote mt3")
    _add_common(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--h", type=int)
    p.add_argument("--eq", "--b", dest="eq")

    p = leaf(sub, "sample", cmd_sample, "sample", help="draw a random set")
    _add_measure(p)
    _add_common(p, seed=True)
    p.add_argument("--N", type=int)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--law", action="store_true", help="report the counting-function law")
    p.add_argument("--trials", type=int, default=20)

    exp = sub.add_parser("experiment", help="Monte Carlo experiments")
    esub = exp.add_subparsers(dest="subcommand_exp", metavar="experiment")
    for name, func in (("concentration", cmd_concentration), ("zeros", cmd_zeros)):
        p = leaf(esub, name, func, f"experiment {name}")
        _add_measure(p)
        _add_common(p, seed=True)
        p.add_argument("--N", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--checkpoints", help="comma separated targets")
        if name == "concentration":
            p.add_argument("--delta", type=float)
    p = leaf(esub, "delta", cmd_delta, "experiment delta")
    _add_measure(p)
    _add_common(p)
    p.add_argument("--n", help="comma separated n values")
    p.add_argument("--ratio", type=float, default=2.0, help="m = ratio * n")

    p = leaf(sub, "stohr", cmd_stohr, "stohr", help="Raikov-Stohr basis check")
    _add_common(p)
    p.add_argument("--K", type=int, default=10)

    p = leaf(sub, "validate", cmd_validate, "validate", help="check a growth spec")
    _add_measure(p, eq=False)
    _add_common(p)
    p.add_argument("--N", type=int, default=10**6)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("replay", help="re-run from a JSON manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    return parser, leaves


_STOCHASTIC = {"count", "sample", "experiment concentration", "experiment zeros"}


def _parse(argv):
    parser, leaves = build_parser()
    args = parser.parse_args(argv)
    if args.command == "replay":
        sub, _ = load_config(args.manifest)
        if not sub:
            raise ConfigError("manifest has no subcommand")
        extra = ["--config", args.manifest]
        if args.out:
            extra += ["--out", args.out]
        if args.threads:
            extra += ["--threads", str(args.threads)]
        return _parse(sub.split() + extra)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        raise ConfigError("a command is required")
    if args.config:
        sub, opts = load_config(args.config)
        if sub and sub != args.subcommand:
            raise ConfigError(f"config is for '{sub}', not '{args.subcommand}'")
        leaf = leaves[args.subcommand]
        known = {a.dest for a in leaf._actions}
        unknown = set(opts) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        leaf.set_defaults(**{k: v for k, v in opts.items() if k not in _NOT_CONFIG})
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = _parse(argv)
        except SystemExit as exc:
            return 2 if exc.code not in (0, None) else 0
        if args.subcommand in _STOCHASTIC and not (args.subcommand == "count" and args.set):
            _need(args, "seed")
        tables, summary, line, stdout_text = args.func(args)
        config = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_CONFIG and not k.startswith("subcommand_")}
        manifest = RunManifest(args.subcommand, config, getattr(args, "seed", None))
        if args.out:
            emit_report(tables, summary, manifest, args.out)
            print(line)
        elif stdout_text is not None:
            sys.stdout.write(stdout_text)
            print(line, file=sys.stderr)
        else:
            print(line)
        failed = [k for k, v in (summary.get("assertions") or {}).items() if not v]
        if failed:
            raise AssertionFailure("failed: " + ", ".join(failed))
    except ConfigError as exc:
        print(f"repfn: error: {exc}", file=sys.stderr)
        return 2
    except AssertionFailure as exc:
        print(f"repfn: assertion failure: {exc}", file=sys.stderr)
        return 3
    except BudgetExceeded as exc:
        print(f"repfn: budget exceeded: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
