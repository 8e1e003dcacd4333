"""Command-line driver: declarative run configs, subcommands, JSON output.

The config is a commented, sectioned INI file (see demos/configs/).  Every run
echoes its fully-resolved configuration inside the JSON result, so a run can
be reproduced from its own output; apart from the timestamp field the output
is byte-deterministic.  Exit code 0 means every verdict in the run PASSed.
"""

import argparse
import configparser
import json
import sys
import time

from .errors import ConfigError, PadicLError
from .lfunc import (VarietySpec, euler_product_L, lfun_congruence_check,
                    verify_power_decomposition)
from .polygons import basis_sequence, generic_newton_polygon, newton_polygon
from .ring import RingSpec, enumerate_teichmuller_points
from .series import FrobLift, TruncSeries
from .sigma_module import SigmaModule, char_poly
from .trace_formula import (additive_trace_check, entireness_profile,
                            trace_formula_L)


def load_config(path):
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError("cannot read config file %r" % path)
    return cp


def resolve(cp, overrides=None):
    """Build the working objects from a parsed config (+ CLI overrides)."""
    overrides = overrides or {}
    try:
        ring_sec = cp["ring"]
    except KeyError:
        raise ConfigError("config needs a [ring] section")
    p = ring_sec.getint("p")
    if p is None:
        raise ConfigError("[ring] p is required")
    a = ring_sec.getint("a", 1)
    e = ring_sec.getint("e", 1)
    N = overrides.get("prec") or ring_sec.getint("N", 8)
    eis_unit = ring_sec.getint("eis_unit", 1)
    modulus = None
    if ring_sec.get("modulus"):
        modulus = tuple(int(x) for x in ring_sec.get("modulus").split(","))
    try:
        spec = RingSpec(p, a=a, e=e, N=N, eis_unit=eis_unit, modulus=modulus)
    except ValueError as exc:
        raise ConfigError("bad ring spec: %s" % exc)
    nvars = cp.getint("series", "nvars", fallback=1)
    cap = overrides.get("cap") or cp.getint("series", "cap", fallback=None)
    if cp.has_section("frobenius") and cp["frobenius"]:
        images = []
        for i in range(nvars):
            text = cp["frobenius"].get("sigma%d" % (i + 1))
            if text is None:
                raise ConfigError("[frobenius] needs sigma%d" % (i + 1))
            images.append(TruncSeries.from_text(spec, nvars, text, cap=cap))
        try:
            lift = FrobLift(spec, nvars, images)
        except ValueError as exc:
            raise ConfigError("bad Frobenius lift: %s" % exc)
    else:
        lift = FrobLift.standard(spec, nvars)
    modules = {}
    for sec in cp.sections():
        if not sec.startswith("module"):
            continue
        name = sec.split(".", 1)[1] if "." in sec else "phi"
        rank = cp[sec].getint("rank")
        entries = [ln.strip() for ln in cp[sec].get("matrix", "").strip().splitlines()
                   if ln.strip()]
        if rank is None or len(entries) != rank * rank:
            raise ConfigError(
                "[%s] needs rank and rank^2 matrix entry lines (got %d)"
                % (sec, len(entries)))
        try:
            modules[name] = SigmaModule.from_text(
                spec, lift, rank, entries, label=cp[sec].get("label", name),
                cap=cap)
        except Exception as exc:
            raise ConfigError("bad matrix in [%s]: %s" % (sec, exc))
    variety = None
    if cp.has_section("variety") and cp["variety"].get("equations"):
        eqs = [TruncSeries.from_text(spec, nvars, ln.strip())
               for ln in cp["variety"]["equations"].strip().splitlines()
               if ln.strip()]
        variety = VarietySpec(nvars, eqs)
    task = dict(cp["task"]) if cp.has_section("task") else {}
    resolved = {
        "ring": spec.to_dict(),
        "series": {"nvars": nvars, "cap": cap},
        "frobenius": lift.to_text(),
        "modules": {k: {"rank": m.rank,
                        "matrix": [e.to_text() for row in m.G for e in row],
                        "label": m.label}
                    for k, m in modules.items()},
        "variety": variety.to_dict() if variety else None,
        "task": task,
    }
    return {"spec": spec, "lift": lift, "modules": modules,
            "variety": variety, "task": task, "resolved": resolved}


def _emit(payload, args, all_pass):
    payload["resolved_config"] = payload.get("resolved_config")
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if all_pass else 1


def _main_module(ctx):
    if not ctx["modules"]:
        raise ConfigError("no [module.*] section in the config")
    if "phi" in ctx["modules"]:
        return ctx["modules"]["phi"]
    return ctx["modules"][sorted(ctx["modules"])[0]]


def cmd_lfun(ctx, args):
    mod = _main_module(ctx)
    D = args.deg or int(ctx["task"].get("d", 4))
    method = ctx["task"].get("method", args.method or "euler")
    out = {"resolved_config": ctx["resolved"], "command": "lfun", "method": method}
    ok = True
    if method in ("euler", "both"):
        Le = euler_product_L(mod, X=ctx["variety"], D=D, jobs=args.jobs)
        out["euler"] = Le.to_dict()
    if method in ("trace", "both"):
        if ctx["variety"] is not None:
            raise ConfigError(
                "the trace formula runs over affine space; reduce the variety "
                "first (see the reduce subcommand)")
        Lt, dets = trace_formula_L(mod, D=D, B=args.basis_cap)
        out["trace"] = Lt.to_dict()
        out["determinants"] = [d.to_dict() for d in dets]
    if method == "both":
        cmp_ = Le.compare(Lt)
        out["agreement"] = cmp_
        ok = cmp_["agree"]
    return out, ok


def cmd_polygon(ctx, args):
    mod = _main_module(ctx)
    out = {"resolved_config": ctx["resolved"], "command": "polygon"}
    bs = basis_sequence(mod)
    bp = bs.polygon()
    out["basis_sequence"] = bs.h
    out["basis_polygon"] = bp.to_dict()
    out["basis_polygon_plot"] = bp.ascii_plot()
    fibers = []
    degrees = [int(x) for x in ctx["task"].get("degrees", "1").split(",")]
    for d in degrees:
        for pt in enumerate_teichmuller_points(mod.nvars, d, mod.spec):
            if pt.orbit_len != d:
                continue
            np_ = newton_polygon(char_poly(mod, pt))
            fibers.append({"point": list(pt.residues), "degree": d,
                           "newton": np_.to_dict(), "plot": np_.ascii_plot()})
    out["fibers"] = fibers
    return out, True


def cmd_hn(ctx, args):
    from .hodge_newton import hn_filtration

    mod = _main_module(ctx)
    filt = hn_filtration(mod, cap=args.cap)
    out = {
        "resolved_config": ctx["resolved"], "command": "hn",
        "blocks": [{"slope": lev, "rank": b.rank,
                    "matrix": [e.to_text() for row in b.G for e in row]}
                   for lev, b in filt.blocks],
        "transition": [e.to_text() for row in filt.transition for e in row],
        "residual_ord": filt.residual_ord(),
        "diagonal_matches": filt.diagonal_matches(),
    }
    ok = filt.residual_ord() is None and filt.diagonal_matches()
    return out, ok


def cmd_reduce(ctx, args):
    from .exp_reduction import (PhiTwist, ideal_compatible_lift, lift_module,
                                ramified_spec, reduce_to_affine,
                                splitting_function, w_k_table)

    if ctx["variety"] is None:
        raise ConfigError("reduce needs a [variety] section")
    spec = ctx["spec"]
    mod = _main_module(ctx)
    D = args.deg or int(ctx["task"].get("d", 2))
    k = int(ctx["task"].get("k", 1))
    lift = ideal_compatible_lift(ctx["variety"], spec)
    lifted = lift_module([[mod.G[i][j] for j in range(mod.rank)]
                          for i in range(mod.rank)], ctx["variety"], spec,
                         mod.rank, label=mod.label, lift=lift)
    star = ramified_spec(spec.p, spec.a, 1, spec.N)
    E = splitting_function(star, spec.q)
    star_eqs = [TruncSeries.from_text(star, mod.nvars, f.to_text())
                for f in ctx["variety"].equations]
    twist = PhiTwist(E, star_eqs, mod.nvars, len(star_eqs), None)
    rep = reduce_to_affine(lifted, twist, D=D, k=k)
    wk = w_k_table(twist, ctx["variety"], 1)
    out = {"resolved_config": ctx["resolved"], "command": "reduce",
           "identity": rep, "w_1_table": wk,
           "w_1_csv": _wk_csv(wk)}
    return out, rep["pass"] and wk["pass"]


def _wk_csv(wk):
    lines = ["x,on_X,ok"]
    for row in wk["rows"]:
        lines.append("%s,%d,%d" % ("|".join(map(str, row["x"])),
                                   int(row["on_X"]), int(row["ok"])))
    return "\n".join(lines)


def cmd_verify(ctx, args):
    suite = args.suite
    mod = _main_module(ctx) if ctx["modules"] else None
    D = args.deg or int(ctx["task"].get("d", 3))
    out = {"resolved_config": ctx["resolved"], "command": "verify",
           "suite": suite}
    if suite == "trace":
        rep = additive_trace_check(mod, B=args.basis_cap)
        out["report"] = rep
        ok = rep["pass"]
    elif suite == "entire":
        Le = euler_product_L(mod, D=D)
        Lt, dets = trace_formula_L(mod, D=D, B=args.basis_cap)
        prof = entireness_profile(Le, dets[-1])
        out["report"] = prof
        ok = prof["pass"] and Le.compare(Lt)["agree"]
    elif suite == "mazur":
        bs = basis_sequence(mod)
        bp = bs.polygon()
        from .polygons import compare_polygons

        verdicts = []
        for pt in enumerate_teichmuller_points(mod.nvars, 1, mod.spec):
            np_ = newton_polygon(char_poly(mod, pt))
            verdicts.append(compare_polygons(np_, bp)["verdict"])
        ok = all(v == "lies_on_or_above" for v in verdicts)
        out["report"] = {"fibers": verdicts, "basis_polygon": bp.to_dict()}
    elif suite == "specialization":
        rep = generic_newton_polygon(mod, degrees=(1, 2))["report"]
        out["report"] = rep
        ok = rep["all_on_or_above"]
    elif suite == "decomposition":
        from .hodge_newton import verify_unit_root_decomposition

        rep = verify_unit_root_decomposition(mod, X=ctx["variety"], D=D)
        out["report"] = {"pass": rep["pass"], "comparison": rep["comparison"]}
        ok = rep["pass"]
    elif suite == "power":
        k = int(ctx["task"].get("k", 2))
        rep = verify_power_decomposition(mod, X=ctx["variety"], k=k, D=D)
        out["report"] = {"pass": rep["pass"], "comparison": rep["comparison"]}
        ok = rep["pass"]
    elif suite == "congruence":
        k1 = int(ctx["task"].get("k1", 1))
        m = int(ctx["task"].get("m", 0))
        from .lfunc import big_N

        k2 = k1 + big_N(mod.spec.q, mod.rank) * mod.spec.p ** m
        rep = lfun_congruence_check(mod, k1=k1, k2=k2, m=m, D=D)
        out["report"] = {"pass": rep["pass"], "k1": k1, "k2": k2,
                         "first_divergence": rep["first_divergence"]}
        ok = rep["pass"]
    else:
        raise ConfigError("unknown verify suite %r" % suite)
    out["verdict"] = "PASS" if ok else "FAIL"
    return out, ok


def cmd_selftest(args):
    """A small built-in battery: the dual pipeline, the additive trace
    formula, and a Mazur check, on canned examples."""
    spec = RingSpec(3, N=6)
    lift = FrobLift.standard(spec, 1)
    results = {}
    ok = True
    ident = SigmaModule.identity(spec, lift)
    Le = euler_product_L(ident, D=3)
    Lt, dets = trace_formula_L(ident, D=3)
    agree = Le.compare(Lt)["agree"]
    zeta_ok = [c.coords[0] for c in Le.coeffs] == [1, 3, 9, 27]
    results["zeta_A1_both_pipelines"] = "PASS" if (agree and zeta_ok) else "FAIL"
    ok &= agree and zeta_ok
    tr = additive_trace_check(ident)
    results["additive_trace"] = "PASS" if tr["pass"] else "FAIL"
    ok &= tr["pass"]
    mod = SigmaModule.from_text(spec, lift, 2, ["1 + 3 * X1", "X1", "3", "3"])
    agree2 = euler_product_L(mod, D=3).compare(trace_formula_L(mod, D=3)[0])["agree"]
    results["rank2_dual_pipeline"] = "PASS" if agree2 else "FAIL"
    ok &= agree2
    bs = basis_sequence(mod)
    from .polygons import compare_polygons

    maz = all(
        compare_polygons(newton_polygon(char_poly(mod, pt)),
                         bs.polygon())["verdict"] == "lies_on_or_above"
        for pt in enumerate_teichmuller_points(1, 1, spec)
    )
    results["mazur_bound"] = "PASS" if maz else "FAIL"
    ok &= maz
    return {"command": "selftest", "results": results,
            "resolved_config": None}, bool(ok)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="padicl",
        description="p-adic L-functions of sigma-modules: Euler products, "
                    "the Monsky trace formula, slope decompositions.")
    ap.add_argument("--config", help="run configuration (INI)")
    ap.add_argument("--deg", type=int, default=None,
                    help="L-series truncation degree D")
    ap.add_argument("--prec", type=int, default=None,
                    help="ring precision N override")
    ap.add_argument("--cap", type=int, default=None,
                    help="series degree cap override")
    ap.add_argument("--basis-cap", type=int, default=None, dest="basis_cap",
                    help="Dwork operator monomial cap B")
    ap.add_argument("--jobs", type=int, default=1,
                    help="worker pool size for per-orbit work")
    ap.add_argument("--out", help="write the JSON result to a file")
    sub = ap.add_subparsers(dest="command", required=True)
    p_lfun = sub.add_parser("lfun", help="L-function by Euler product and/or trace formula")
    p_lfun.add_argument("--method", choices=["euler", "trace", "both"],
                        default=None)
    sub.add_parser("polygon", help="Newton/basis polygons with ASCII plots")
    sub.add_parser("hn", help="Hodge-Newton filtration")
    sub.add_parser("reduce", help="exponential-sum reduction to affine space")
    p_ver = sub.add_parser("verify", help="verification suites")
    p_ver.add_argument("suite", choices=["mazur", "specialization",
                                         "decomposition", "power",
                                         "congruence", "trace", "entire"])
    sub.add_parser("selftest", help="built-in smoke battery")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            payload, ok = cmd_selftest(args)
        else:
            if not args.config:
                raise ConfigError("--config is required for this command")
            ctx = resolve(load_config(args.config),
                          {"prec": args.prec, "cap": args.cap})
            if args.command == "lfun":
                payload, ok = cmd_lfun(ctx, args)
            elif args.command == "polygon":
                payload, ok = cmd_polygon(ctx, args)
            elif args.command == "hn":
                payload, ok = cmd_hn(ctx, args)
            elif args.command == "reduce":
                payload, ok = cmd_reduce(ctx, args)
            elif args.command == "verify":
                payload, ok = cmd_verify(ctx, args)
            else:
                raise ConfigError("unknown command %r" % args.command)
    except PadicLError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)},
                         indent=2))
        return 2
    return _emit(payload, args, ok)


if __name__ == "__main__":
    sys.exit(main())
