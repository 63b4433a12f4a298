"""``brwlab`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or parameter error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from brwlab import __version__, curves, series, verify
from brwlab import sim
from brwlab.dynsys import Controls, Direction, integrate
from brwlab.errors import DomainError, InternalError, ParameterError
from brwlab.model import (
    ModelParams,
    derive_constants,
    gamma_eigenvalue,
    linearization_at_one_one,
)
from brwlab.output import OutputDir, RunManifest, fmt
from brwlab.svg import Figure, Polyline

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3

PAPER_FIGURES = {"super": (1.0, 4.0, 4.0), "crit": (1.0, 4.0, 0.5)}

GLOBAL_DEFAULTS = {
    "seed": 0,
    "out_dir": None,
    "reps": None,
    "horizon": None,
    "json": False,
    "workers": 1,
    "q_plus": 1.0,
    "q_minus": 4.0,
    "beta": 0.5,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(suppress: bool) -> argparse.ArgumentParser:
    d = (lambda k: argparse.SUPPRESS) if suppress else (lambda k: GLOBAL_DEFAULTS[k])
    p = _Parser(add_help=False)
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=d("seed"))
    g.add_argument("--out-dir", default=d("out_dir"), help="write CSV/SVG/manifest here")
    g.add_argument("--reps", type=int, default=d("reps"))
    g.add_argument("--horizon", type=float, default=d("horizon"))
    g.add_argument("--json", action="store_true", default=d("json"), help="print JSON to stdout")
    g.add_argument("--workers", type=int, default=d("workers"))
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of flag values; flags win")
    m = p.add_argument_group("model")
    m.add_argument("--q-plus", type=float, default=d("q_plus"))
    m.add_argument("--q-minus", type=float, default=d("q_minus"))
    m.add_argument("--beta", type=float, default=d("beta"))
    return p


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = _common(suppress)
    ap = _Parser(prog="brwlab", description="Two-type branching random walk lab.")
    ap.add_argument("--version", action="version", version=f"brwlab {__version__}")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sub.add_parser("params", parents=[common], help="derived constants and spectra")

    p = sub.add_parser("portrait", parents=[common], help="phase portrait bundle")
    p.add_argument("--paper-figure", choices=sorted(PAPER_FIGURES), default=d(None))
    p.add_argument("--grid", default=d(None),
                   help="start points 'x,y;x,y;...' (empty string for none)")
    p.add_argument("--grid-n", type=int, default=d(None), help="n x n interior grid of starts")
    p.add_argument("--direction", choices=[e.value for e in Direction], default=d("reversed"))

    p = sub.add_parser("series", parents=[common], help="coefficients of A(y)")
    p.add_argument("--n-max", type=int, default=d(series.DEFAULT_N_MAX))

    p = sub.add_parser("curve", parents=[common], help="the probabilistic curves")
    p.add_argument("--which", choices=["hpm", "hmp", "both"], default=d("both"))
    p.add_argument("--tol", type=float, default=d(curves.DEFAULT_TOL))

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimates")
    p.add_argument("--quantity", choices=["levels", "pgf", "winding", "dip", "tree"], default=d("levels"))
    p.add_argument("--root", choices=["plus", "minus"], default=d("plus"))
    p.add_argument("--side", choices=["plus", "minus", "both"], default=d("both"))
    p.add_argument("--phis", default=d("0"), help="comma-separated levels >= 0")
    p.add_argument("--theta", type=float, default=d(0.5))
    p.add_argument("--n-max", type=int, default=d(1), help="winding stages")
    p.add_argument("--budget", type=int, default=d(sim.DEFAULT_BUDGET))
    p.add_argument("--release", type=float, default=d(sim.DEFAULT_RELEASE))

    p = sub.add_parser("sweep", parents=[common], help="nested beta coupling (beta0 = --beta)")
    p.add_argument("--betas", default=d(None), help="comma-separated rates <= --beta")
    p.add_argument("--psi", type=float, default=d(0.0))
    p.add_argument("--budget", type=int, default=d(sim.DEFAULT_BUDGET))
    p.add_argument("--release", type=float, default=d(sim.DEFAULT_RELEASE))

    p = sub.add_parser("chain", parents=[common], help="single-chain functionals")
    p.add_argument("--mode", choices=[m.value for m in sim.ChainMode],
                   default=d(sim.ChainMode.FIRST_PASSAGE_LAPLACE.value))
    p.add_argument("--times", default=d("5,10,20"))
    p.add_argument("--eps", type=float, default=d(0.05))

    p = sub.add_parser("verify", parents=[common], help="acceptance battery")
    p.add_argument("--fast", action="store_true", default=d(False))
    p.add_argument("--only", default=d(None), help="comma-separated check ids")
    p.add_argument("--expect", action="append", default=d(None), metavar="KEY=VALUE",
                   help="override an expected constant (harness self-test)")
    return ap


def parse_args(argv) -> argparse.Namespace:
    """Defaults, then the ``--config`` file, then explicit flags."""
    args = build_parser().parse_args(argv)
    explicit = vars(build_parser(suppress=True).parse_args(argv))
    cfg_path = explicit.pop("config", None)
    if cfg_path:
        try:
            with open(cfg_path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc}") from exc
        if isinstance(cfg, dict) and isinstance(cfg.get("config"), dict):
            cfg = cfg["config"]  # a run manifest
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        known = vars(args)
        for k, v in cfg.items():
            key = k.replace("-", "_")
            if key == "command":
                continue
            if key not in known:
                raise UsageError(f"unknown config key {k!r} for '{args.command}'")
            if key not in explicit:
                setattr(args, key, v)
    return args


def _params(args) -> ModelParams:
    return ModelParams(args.q_plus, args.q_minus, args.beta)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=_json_default))
    else:
        print(text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _finish(args, out: OutputDir, params, tolerances: dict) -> None:
    if out.enabled:
        man = RunManifest(
            params=params.as_dict() if params else None,
            command=args.command,
            seed=args.seed,
            config=_config(args),
            tolerances=tolerances,
        )
        out.write_manifest(man)


def cmd_params(args) -> int:
    p = _params(args)
    dc = derive_constants(p)
    spec = linearization_at_one_one(p)
    mu = 0.5 * (p.q_minus - p.q_plus)
    report = {
        "params": p.as_dict(),
        "derived": dc.as_dict(),
        "spectral": spec.as_dict(),
        "gamma_min": {"mu_star": mu, "gamma": gamma_eigenvalue(p, mu), "minus_beta_c": -dc.beta_c},
    }
    print(json.dumps(report, indent=2, sort_keys=True, default=_json_default))
    out = OutputDir(args.out_dir)
    out.write("params.json", json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    _finish(args, out, p, {"critical_rtol": 1e-12})
    return EXIT_OK


def _portrait_starts(args, direction: Direction) -> list[tuple[float, float]]:
    if args.grid is not None:
        pts = []
        for chunk in args.grid.split(";"):
            if not chunk.strip():
                continue
            xy = _floats(chunk)
            if len(xy) != 2:
                raise UsageError(f"bad start point {chunk!r}")
            pts.append((xy[0], xy[1]))
        return pts
    if args.grid_n is not None:
        g = [(i + 1) / (args.grid_n + 1) for i in range(args.grid_n)]
        return [(a, b) for a in g for b in g]
    # fan entering the square through the edges where this direction points inward
    ks = [k / 10 for k in range(1, 10)]
    if direction is Direction.REVERSED:
        return [(k, 1.0) for k in ks] + [(k, 0.0) for k in ks]
    return [(0.0, k) for k in ks] + [(1.0, k) for k in ks]


def cmd_portrait(args) -> int:
    if args.paper_figure:
        qp, qm, b = PAPER_FIGURES[args.paper_figure]
        args.q_plus, args.q_minus, args.beta = qp, qm, b
    p = _params(args)
    direction = Direction(args.direction)
    horizon = args.horizon if args.horizon is not None else 20.0
    out = OutputDir(args.out_dir)
    dc = derive_constants(p)
    fig = Figure(title=f"q+={p.q_plus:g}, q-={p.q_minus:g}, beta={p.beta:g} ({dc.regime.value})")
    traj_info = []
    for i, start in enumerate(_portrait_starts(args, direction)):
        try:
            tr = integrate(p, start, direction, horizon, Controls(emit_step=0.02))
        except DomainError as exc:
            traj_info.append({"start": list(start), "error": str(exc)})
            fig.notes.append(f"start {start}: {exc}")
            continue
        fig.add(Polyline(list(tr.x), list(tr.y), stroke="#7a8fb5", width=0.8))
        name = f"traj_{i:03d}.csv"
        out.write(name, tr.to_csv())
        traj_info.append({"start": list(start), "exit": tr.exit.value, "file": name})

    curve_info = {}
    for key, fn, colour in (("hpm", curves.hpm_curve, "#b00"), ("hmp", curves.hmp_curve, "#060")):
        try:
            c = fn(p)
        except Exception as exc:  # annotate and keep going
            curve_info[key] = {"error": f"{type(exc).__name__}: {exc}"}
            fig.notes.append(f"{key}: {type(exc).__name__}: {exc}")
            continue
        fig.add(Polyline(list(c.points.x), list(c.points.y), stroke=colour, width=3.0, label=c.kind.value))
        out.write(f"curve_{key}.csv", c.points.to_csv())
        curve_info[key] = c.summary()
    if args.paper_figure == "crit":
        seg = curves.slope_segment(p, 20)
        m = dc.m
        xs = [1.0 - 1.0 / m] + list(seg[:, 0]) + [1.0]
        ys = [0.0] + list(seg[:, 1]) + [1.0]
        fig.add(Polyline(xs, ys, stroke="black", width=1.5, dashed=True, label="slope m"))
        out.write("triangle.csv", "x,y\n" + "".join(f"{fmt(a)},{fmt(b)}\n" for a, b in zip(xs, ys)))
    stamp = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    out.write("portrait.svg", fig.render(timestamp=stamp))
    _finish(args, out, p, {"rtol": Controls().rtol, "atol": Controls().atol,
                           "ball_radius": Controls().ball_radius, "shooting_tol": curves.DEFAULT_TOL})
    payload = {"params": p.as_dict(), "regime": dc.regime.value, "curves": curve_info,
               "trajectories": traj_info}
    lines = [f"regime {dc.regime.value}; {len(traj_info)} trajectories"]
    for k, v in curve_info.items():
        if "error" in v:
            lines.append(f"{k}: FAILED {v['error']}")
        else:
            lines.append(f"{k}: value_at_0 {v['value_at_0']:.8f}, value_at_1- {v['value_at_1_minus']:.8f} ({v['method']})")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK


def cmd_series(args) -> int:
    p = _params(args)
    c = series.compute_coeffs(p, args.n_max)
    summ = series.summary(c, p)
    summ["bound_holds"] = c.partial_sum <= c.bound + 1e-12
    out = OutputDir(args.out_dir)
    out.write("series.csv", c.to_csv())
    _finish(args, out, p, {"bound_slack": 1e-12})
    text = (f"a1 {fmt(c.a[1])}\npartial sum (n <= {c.n_max}) {fmt(c.partial_sum)}\n"
            f"bound q+/(q-+beta) {fmt(c.bound)}  holds: {summ['bound_holds']}\n"
            f"tail estimate (heuristic, not a bound) {summ['tail_estimate_heuristic']:.3g}")
    _emit(args, summ, text)
    return EXIT_OK


def cmd_curve(args) -> int:
    p = _params(args)
    out = OutputDir(args.out_dir)
    info = {}
    horizon = args.horizon if args.horizon is not None else curves.DEFAULT_HORIZON
    if args.which in ("hpm", "both"):
        c = curves.hpm_curve(p, args.tol, horizon)
        info["hpm"] = c.summary()
        out.write("curve_hpm.csv", c.points.to_csv())
    if args.which in ("hmp", "both"):
        c = curves.hmp_curve(p, horizon)
        info["hmp"] = c.summary()
        out.write("curve_hmp.csv", c.points.to_csv())
    _finish(args, out, p, {"shooting_tol": args.tol, "rtol": Controls().rtol})
    lines = []
    for k, v in info.items():
        br = f" bracket [{fmt(v['bracket'][0])}, {fmt(v['bracket'][1])}]" if v["bracket"] else ""
        lines.append(f"{k} ({v['method']}): value_at_0 {fmt(v['value_at_0'])}{br}; "
                     f"value_at_1- {fmt(v['value_at_1_minus'])}; exit {v['exit']}")
    _emit(args, {"params": p.as_dict(), "curves": info}, "\n".join(lines))
    return EXIT_OK


def _mc_kw(args) -> dict:
    return {
        "reps": args.reps if args.reps is not None else sim.DEFAULT_REPS,
        "seed": args.seed,
        "horizon": args.horizon if args.horizon is not None else sim.DEFAULT_HORIZON,
        "workers": args.workers,
    }


def _estimates_text(ests) -> str:
    rows = []
    for e in ests:
        where = "" if e.phi is None else f" phi={e.phi:g}"
        th = "" if e.theta is None else f" theta={e.theta:g}"
        if e.bracket_only:
            rows.append(f"{e.quantity}{where}{th}: bracket [{e.low:.6g}, {e.high:.6g}] (no point estimate)")
        else:
            rows.append(f"{e.quantity}{where}{th}: {e.mean:.6g} +- {e.std_error:.2g} "
                        f"bracket [{e.low:.6g}, {e.high:.6g}] censored {e.censor_fraction:.3g}")
    return "\n".join(rows)


def cmd_simulate(args) -> int:
    p = _params(args)
    kw = _mc_kw(args)
    out = OutputDir(args.out_dir)
    phis = _floats(args.phis)
    if args.quantity == "tree":
        tree = sim.simulate_tree(p, args.root, kw["horizon"], args.budget, args.seed)
        rows = ["id,parent,ptype_at_birth,birth_time,death_time,lineage_max,lineage_min,path"]
        for r in tree.records:
            path = " ".join(f"{fmt(t)}:{fmt(x)}:{'+' if ty.sign > 0 else '-'}" for t, x, ty in r.path)
            rows.append(f"{r.id},{'' if r.parent is None else r.parent},{r.ptype_at_birth.value},"
                        f"{fmt(r.birth_time)},{'' if r.death_time is None else fmt(r.death_time)},"
                        f"{fmt(r.lineage_max)},{fmt(r.lineage_min)},{path}")
        out.write("tree.csv", "\n".join(rows) + "\n")
        lc = sim.level_counts(tree, phis)
        payload = {"particles": len(tree.records), "censored": tree.censored,
                   "n_plus": lc.n_plus.tolist(), "n_minus": lc.n_minus.tolist(), "phis": phis}
        _finish(args, out, p, {})
        _emit(args, payload, f"{len(tree.records)} particles, censored {tree.censored}; "
                             f"N+ {lc.n_plus.tolist()} N- {lc.n_minus.tolist()} at {phis}")
        return EXIT_OK
    if args.quantity == "levels":
        plus = phis if args.side in ("plus", "both") else []
        minus = phis if args.side in ("minus", "both") else []
        ests = list(sim.level_means(p, args.root, plus, minus, budget=args.budget,
                                    release=args.release, **kw).values())
    elif args.quantity == "pgf":
        side = "minus" if args.side == "minus" else "plus"
        ests = [sim.estimate_pgf(p, args.root, ph, args.theta, count=side, budget=args.budget,
                                 release=args.release, **kw) for ph in phis]
    elif args.quantity == "winding":
        ests = list(sim.winding_means(p, args.n_max, budget=args.budget, release=args.release,
                                      **kw).values())
    else:
        ests = [sim.dip_fraction(p, kw["horizon"], kw["reps"], kw["seed"], args.budget, kw["workers"])]
    out.write("estimates.csv", sim.to_csv(ests))
    _finish(args, out, p, {"release": args.release, "budget": args.budget, "horizon": kw["horizon"]})
    _emit(args, {"estimates": [e.as_dict() for e in ests]}, _estimates_text(ests))
    return EXIT_OK


def cmd_sweep(args) -> int:
    p = _params(args)
    kw = _mc_kw(args)
    betas = _floats(args.betas) if args.betas else [p.beta * f for f in (1.0, 0.9, 0.8, 0.6, 0.4, 0.2)]
    sw = sim.nested_sweep(p, betas, horizon=kw["horizon"], reps=kw["reps"], seed=kw["seed"],
                          psi=args.psi, budget=args.budget, release=args.release, workers=kw["workers"])
    out = OutputDir(args.out_dir)
    out.write("sweep.csv", sw.to_csv())
    _finish(args, out, p, {"release": args.release, "budget": args.budget, "horizon": kw["horizon"]})
    payload = {"betas": sw.betas, "estimates": [e.as_dict() for e in sw.estimates],
               "pathwise_monotone_fraction": sw.pathwise_monotone_fraction,
               "means_nondecreasing": sw.means_nondecreasing}
    text = _estimates_text(sw.estimates) + (
        f"\npathwise monotone in {100 * sw.pathwise_monotone_fraction:.2f}% of replicates; "
        f"means nondecreasing: {sw.means_nondecreasing}")
    _emit(args, payload, text)
    return EXIT_OK


def cmd_chain(args) -> int:
    p = _params(args)
    kw = _mc_kw(args)
    mode = sim.ChainMode(args.mode)
    if mode is sim.ChainMode.FIRST_PASSAGE_LAPLACE:
        fp_h = args.horizon if args.horizon is not None else 60.0
        ests = [sim.chain_functionals(p, mode, {"horizon": fp_h}, kw["reps"], kw["seed"], kw["workers"])]
        extra = {"a1": series.a1_closed_form(p)}
    else:
        ests = sim.chain_functionals(p, mode, {"times": _floats(args.times), "eps": args.eps},
                                     kw["reps"], kw["seed"], kw["workers"])
        extra = {}
    out = OutputDir(args.out_dir)
    out.write("chain.csv", sim.to_csv(ests))
    _finish(args, out, p, {})
    text = _estimates_text(ests)
    if extra:
        text += f"\na1 (closed form) {fmt(extra['a1'])}"
    _emit(args, {"estimates": [e.as_dict() for e in ests]} | extra, text)
    return EXIT_OK


def cmd_verify(args) -> int:
    overrides = {}
    for item in args.expect or []:
        if "=" not in item:
            raise UsageError(f"--expect needs KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            overrides[k.strip()] = float(v)
        except ValueError as exc:
            raise UsageError(f"bad value in --expect {item!r}") from exc
    try:
        st = verify.Settings.make(fast=args.fast, seed=args.seed, overrides=overrides,
                                  workers=args.workers)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc
    if args.reps is not None:
        st.reps = args.reps
    if args.horizon is not None:
        st.horizon = args.horizon
    only = [int(v) for v in _floats(args.only)] if args.only else None
    if only and any(i not in verify.CHECKS for i in only):
        raise UsageError(f"--only ids must be in 1..{len(verify.CHECKS)}")
    echo = None if args.json else print
    results = verify.run_battery(st, only, echo=echo)
    n_pass = sum(r.status == "PASS" for r in results)
    if args.json:
        print(json.dumps({"results": [r.as_dict() for r in results], "reps": st.reps,
                          "seed": st.seed}, indent=2, default=_json_default))
    else:
        print(f"{n_pass}/{len(results)} passed")
    out = OutputDir(args.out_dir)
    out.write("verify.json", json.dumps([r.as_dict() for r in results], indent=2,
                                        default=_json_default) + "\n")
    _finish(args, out, None, {"n_se": st.expected["n_se"], "reps": st.reps})
    return verify.exit_code(results)


COMMANDS = {
    "params": cmd_params,
    "portrait": cmd_portrait,
    "series": cmd_series,
    "curve": cmd_curve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "chain": cmd_chain,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"brwlab: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, DomainError) as exc:
        print(f"brwlab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InternalError as exc:
        print(f"brwlab: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        print(f"brwlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
