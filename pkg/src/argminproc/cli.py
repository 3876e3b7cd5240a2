"""
Command-line front end.

Usage: ``argminproc <subcommand> [flags]``; run ``argminproc -h`` for the
list.  Output goes to stdout (JSON by default, CSV with ``--format csv``),
progress and usage errors to stderr.

Exit status: 0 all requested checks pass, 1 a check failed, 2 usage error,
3 numerical convergence failure.

A ``--config FILE`` of flat ``key = value`` lines (``#`` comments) supplies
defaults for the subcommand's flags; flags given on the command line win and
unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .errors import ArgminError, DomainError, NonConvergence, UnstableInversion

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------

def _round(obj, precision):
    """Round every float in a JSON-like structure to ``precision`` significant digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.{precision}g}")
    if isinstance(obj, (np.floating,)):
        return _round(float(obj), precision)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v, precision) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v, precision) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist(), precision)
    return obj


def _json(obj, precision):
    return json.dumps(_round(obj, precision), indent=2, sort_keys=True)


def _csv(header, rows, precision):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    fmt = f"{{:.{precision}g}}"
    for r in rows:
        w.writerow([fmt.format(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, csv_text_or_None, passed)
# ---------------------------------------------------------------------------

def cmd_simulate(a):
    from .extract import argmin_trajectory
    from .pathsim import SeedSpec, simulate_brownian, simulate_stable
    seed = SeedSpec(a.seed, a.stream)
    if a.model == "brownian":
        path = simulate_brownian(a.horizon, a.dt, seed)
    else:
        path = simulate_stable(a.alpha, a.beta, a.horizon, a.dt, seed)
    traj = argmin_trajectory(path, a.window)
    n = path.values.shape[0]
    alpha = np.full(n, np.nan)
    alpha[: traj.samples.shape[0]] = traj.samples
    rows = [(float(t), float(v), "" if np.isnan(al) else float(al))
            for t, v, al in zip(path.times, path.values, alpha)]
    text = _csv(["t", "value", "alpha"], rows, a.precision)
    payload = {"model": a.model, "dt": a.dt, "horizon": path.horizon, "window": a.window,
               "seed": seed.to_dict(), "t": path.times, "value": path.values,
               "alpha": traj.samples,
               "jumps": [{"time": float(j["time"]), "from": float(j["from_level"]),
                          "to": float(j["to_level"]), "kind": int(j["kind"])} for j in traj.jumps]}
    return payload, text, True


def cmd_kernel(a):
    from .brownian_laws import StableParams, tabulate_kernel, transition_kernel, stable_transition_kernel
    rho = None
    if a.stable_alpha is not None or a.stable_beta is not None:
        if a.stable_alpha is None or a.stable_beta is None:
            raise UsageError("--stable-alpha and --stable-beta go together")
        rho = StableParams(a.stable_alpha, a.stable_beta).rho
    ys = a.y_grid or list(np.linspace(0.0, 1.0, 101)[1:-1])
    text, atoms = tabulate_kernel([a.x], [a.t], ys, rho=rho, precision=a.precision)
    K = transition_kernel(a.x, a.t) if rho is None or rho == 0.5 else stable_transition_kernel(rho, a.x, a.t)
    mass = K.total_mass(1e-9)
    rows = list(csv.reader(io.StringIO(text)))[1:]
    payload = {"x": a.x, "t": a.t, "rho": 0.5 if rho is None else rho,
               "y": ys, "density": [float(r[3]) for r in rows],
               "atom": atoms[0] if atoms else None, "total_mass": mass,
               "checks": [{"description": "kernel mass", "value": abs(mass - 1.0),
                           "threshold": 1e-6, "pass": abs(mass - 1.0) <= 1e-6}]}
    return payload, text, abs(mass - 1.0) <= 1e-6


def cmd_renewal(a):
    from .renewal_laws import build_renewal_law
    law = build_renewal_law(a.a, a.b, a.horizon, a.dt)
    mass = law.g.integral()
    mean = law.g.mean()
    target = math.pi * math.sqrt(a.a * a.b)
    every = max(1, int(a.every))
    ok = 0.995 <= mass <= 1.0 + 1e-9 and abs(mean / target - 1.0) <= 0.01
    payload = {"a": a.a, "b": a.b, "horizon": a.horizon, "dt": a.dt, "every": every,
               "mass": mass, "mean": mean, "mean_target": target,
               "t": law.g.times[::every], "h": law.h.values[::every],
               "g": law.g.values[::every], "f_delay": law.f_delay.values[::every],
               "checks": [{"description": "mass of g in [0.995, 1]", "value": mass, "pass": 0.995 <= mass <= 1.0 + 1e-9},
                          {"description": "mean within 1% of pi sqrt(ab)",
                           "value": abs(mean / target - 1.0), "threshold": 0.01,
                           "pass": abs(mean / target - 1.0) <= 0.01}]}
    return payload, law.to_csv(a.precision, every), ok


def cmd_laplace(a):
    from .renewal_laws import TRANSFORMS
    f = TRANSFORMS[a.law]
    vals = [float(f(l)) for l in a.lambda_grid]
    text = _csv(["lambda", f"phi_{a.law}"], zip(a.lambda_grid, vals), a.precision)
    return {"law": a.law, "lambda": a.lambda_grid, "phi": vals}, text, True


def cmd_identities(a):
    from .renewal_laws import transform_consistency, verify_identity
    checks = []
    rows = []
    for lam in a.lambda_grid:
        for which in ("sqrt_kernel", "dg_kernel"):
            d = verify_identity(which, lam)
            rows.append((which, lam, d))
            checks.append({"description": f"integral identity {which} at lambda={lam:g}",
                           "value": d, "threshold": 1e-9, "pass": d < 1e-9})
    cons = transform_consistency(a.lambda_grid)
    for key, thr in (("delta_forms", 1e-10), ("T1_product", 0.0), ("stationary_delay", 1e-12)):
        checks.append({"description": f"transform consistency: {key}", "value": cons[key],
                       "threshold": thr, "pass": cons[key] <= thr})
        rows.append((key, "", cons[key]))
    ok = all(c["pass"] for c in checks)
    text = _csv(["check", "lambda", "defect"], rows, a.precision)
    return {"lambda": a.lambda_grid, "checks": checks, "pass": ok}, text, ok


def cmd_chain(a):
    from .discrete_chain import (WalkLawInput, chain_law, chain_law_ssrw, chain_law_theta,
                                 compare_theta_printed_forms)
    if a.model == "ssrw":
        law = chain_law_ssrw(a.N)
        if not a.exact:
            law = law.as_float()
    elif a.model == "theta":
        if a.theta is None:
            raise UsageError("--model theta needs --theta")
        law = chain_law(WalkLawInput.theta(a.theta, a.N + 1), a.N)
        law.meta["closed_form_max_diff"] = float(max(
            np.max(np.abs(law.P - chain_law_theta(a.theta, a.N).P)),
            np.max(np.abs(law.pi - chain_law_theta(a.theta, a.N).pi))))
        law.meta["printed_form_report"] = compare_theta_printed_forms(a.theta, a.N)
    else:
        if not a.prob_ge or not a.prob_gt:
            raise UsageError("--model custom needs --prob-ge and --prob-gt")
        law = chain_law(WalkLawInput(tuple(a.prob_ge), tuple(a.prob_gt)), a.N)
    ok = law.check()
    d = law.to_dict(a.precision)
    d["pass"] = bool(ok)
    rows = [(k, str(v)) for k, v in enumerate(d["pi"])]
    text = _csv(["k", "pi"], rows, a.precision)
    text += _csv(["i"] + [f"P_{j}" for j in range(a.N + 1)],
                 [[i] + [str(v) for v in row] for i, row in enumerate(d["P"])], a.precision)
    return d, text, ok


def cmd_verify(a):
    from .harness import run_suite
    cfg = {"suite": a.suite, "seed": a.seed, "dt": a.dt, "threads": a.threads,
           "timing": a.timing}
    if a.samples is not None:
        cfg["samples"] = a.samples
    if a.select is not None:
        cfg["select"] = [s for s in a.select.split(",") if s]
    if a.dump_dir:
        cfg["dump_dir"] = a.dump_dir
    print(f"running suite {a.suite!r} (seed {a.seed}, dt {a.dt:g})", file=sys.stderr)
    rep = run_suite(cfg)
    rows = [(e.name, c.key, c.report.statistic_name, c.report.value, c.report.threshold,
             c.report.sample_size, c.report.passed)
            for e in rep.experiments for c in e.checks]
    text = _csv(["experiment", "check", "statistic", "value", "threshold", "n", "pass"],
                rows, a.precision)
    payload = rep.to_dict()
    if rep.convergence_failure:
        payload["_exit"] = EXIT_CONVERGENCE
    return payload, text, rep.passed


def cmd_invert(a):
    from .renewal_laws import cdf_J, density_J
    if a.law != "J":
        raise UsageError("only --law J is supported")
    dens, spread, cdf = [], [], []
    for t in a.t_grid:
        r = density_J(t, order=a.order, full_output=True)
        dens.append(r.value)
        spread.append(r.spread)
        cdf.append(float(cdf_J(t)))
    text = _csv(["t", "density", "spread", "cdf"], zip(a.t_grid, dens, spread, cdf), a.precision)
    return {"law": "J", "order": a.order, "t": a.t_grid, "density": dens, "spread": spread,
            "cdf": cdf}, text, True


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file supplying flag defaults")
    common.add_argument("--precision", type=int, default=12, help="significant digits (default 12)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=1, help="worker cap")

    p = _Parser(prog="argminproc", description="Argmin process of Brownian motion and random walks.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="path and argmin trajectory")
    s.add_argument("--model", choices=("brownian", "stable"), default="brownian")
    s.add_argument("--horizon", type=float, default=5.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--window", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=1.5)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("kernel", parents=[common], help="tabulate the transition kernel")
    s.add_argument("--x", type=float, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--stable-alpha", type=float)
    s.add_argument("--stable-beta", type=float)
    s.add_argument("--y-grid", type=_floats)
    s.set_defaults(func=cmd_kernel)

    s = sub.add_parser("renewal", parents=[common], help="tabulate h, g and the delay density")
    s.add_argument("--a", type=float, default=1.0)
    s.add_argument("--b", type=float, default=1.0)
    s.add_argument("--horizon", type=float, default=30.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--every", type=int, default=100, help="output every k-th grid point")
    s.set_defaults(func=cmd_renewal)

    s = sub.add_parser("laplace", parents=[common], help="Laplace transforms of J, T1, Delta, D-G")
    s.add_argument("--law", choices=("J", "T1", "Delta", "DG"), required=True)
    s.add_argument("--lambda-grid", type=_floats, default=[0.5, 1.0, 2.0])
    s.set_defaults(func=cmd_laplace)

    s = sub.add_parser("identities", parents=[common], help="analytic identity checks")
    s.add_argument("--lambda-grid", type=_floats, default=[0.5, 1.0, 2.0, 5.0, 10.0])
    s.set_defaults(func=cmd_identities)

    s = sub.add_parser("chain", parents=[common], help="argmin chain of a random walk")
    s.add_argument("--model", choices=("ssrw", "theta", "custom"), required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--exact", action="store_true", help="rational output (ssrw)")
    s.add_argument("--theta", type=float)
    s.add_argument("--prob-ge", type=_floats, help="P(S_n >= 0), n=1..N+1")
    s.add_argument("--prob-gt", type=_floats, help="P(S_n > 0), n=1..N+1")
    s.set_defaults(func=cmd_chain)

    s = sub.add_parser("verify", parents=[common], help="Monte Carlo acceptance suite")
    s.add_argument("--suite", choices=("smoke", "default", "acceptance"), default="default")
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--samples", type=int)
    s.add_argument("--select", help="comma-separated experiment keys")
    s.add_argument("--timing", action="store_true", help="record runtimes (breaks byte-reproducibility)")
    s.add_argument("--dump-dir", help="write sample CSVs here")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("invert", parents=[common], help="numerical inversion of the law of J")
    s.add_argument("--law", choices=("J",), default="J")
    s.add_argument("--t-grid", type=_floats, default=[0.5, 1.5, 2.0, 3.0])
    s.add_argument("--order", type=int, default=16)
    s.set_defaults(func=cmd_invert)
    return p


def _read_config(fname):
    out = []
    try:
        fh = open(fname)
    except OSError as err:
        raise UsageError(f"cannot read config file: {err}")
    with fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{fname}:{lineno}: expected key=value")
            k, v = (s.strip() for s in line.split("=", 1))
            out.append((k, v))
    return out


def _config_tokens(subparser, items):
    """Translate config entries into argv tokens, rejecting unknown keys."""
    known = {}
    for act in subparser._actions:
        for opt in act.option_strings:
            if opt.startswith("--"):
                known[opt[2:]] = act
                known[opt[2:].replace("-", "_")] = act
    tokens = []
    for k, v in items:
        act = known.get(k)
        if act is None or k in ("config", "help"):
            raise UsageError(f"unknown config key {k!r}")
        flag = act.option_strings[-1]
        if isinstance(act, argparse._StoreTrueAction):
            if v.lower() in ("1", "true", "yes", "on"):
                tokens.append(flag)
            elif v.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {k!r} expects a boolean")
        else:
            tokens += [flag, v]
    return tokens


def _find_config(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse(argv, parser=None):
    parser = parser or build_parser()
    argv = list(argv)
    choices = parser._subparsers._group_actions[0].choices
    cmd_pos = next((i for i, tok in enumerate(argv) if tok in choices), None)
    cfg = _find_config(argv)
    if cfg is not None and cmd_pos is not None:
        tokens = _config_tokens(choices[argv[cmd_pos]], _read_config(cfg))
        argv = argv[: cmd_pos + 1] + tokens + argv[cmd_pos + 1:]
    args = parser.parse_args(argv)
    if getattr(args, "command", None) is None:
        raise UsageError("a subcommand is required (see --help)")
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
        if args.precision < 1 or args.precision > 17:
            raise UsageError("--precision must be between 1 and 17")
        payload, text, ok = args.func(args)
    except UsageError as err:
        print(str(err), file=sys.stderr)
        return EXIT_USAGE
    except (NonConvergence, UnstableInversion) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}, indent=2))
        return EXIT_CONVERGENCE
    except (DomainError, ArgminError, ValueError) as err:
        print(f"argminproc: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_USAGE
    code = payload.pop("_exit", None) if isinstance(payload, dict) else None
    if args.format == "csv":
        sys.stdout.write(text)
    else:
        sys.stdout.write(_json(payload, args.precision) + "\n")
    if code is not None:
        return code
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
