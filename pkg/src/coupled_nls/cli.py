"""Command-line front end.

    python -m coupled_nls [--config PATH] [--out DIR] [--seed N] [--format F] COMMAND ...

Exit status: 0 success, 2 parameter or configuration error, 3 solver
non-convergence, 4 range or domain error.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import output
from .config import FORMATS, RunConfig, load_config
from .continuation import (
    StepOptions,
    build_branch,
    endpoint_extrapolation,
    normalized_solution,
    ratio_profile,
    ratio_range,
    round_trip_error,
    seed_explicit,
    trace_branch,
)
from .coupled import (
    NewtonOptions,
    explicit_solution_lambda1,
    grid_for_window,
    make_state,
    newton_solve,
    random_start,
    semitrivial_state,
)
from .errors import CoupledNLSError, DomainError, ParameterError, RangeError
from .groundstate import ground_state_on, shooting_central_value
from .radial import make_grid, resample
from .regions import (
    default_frequency_grid,
    default_ratio_grid,
    estimate_eta,
    map_frequency_plane,
    map_mass_plane,
)
from .spectral import curves, ell, grid_for_shift, tau, tau0

DEFAULT_SHIFTS = (0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)


def _positive(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return x


def _global_options(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="key = value run configuration")
    parser.add_argument("--out", metavar="DIR", default=default, help="output directory")
    parser.add_argument("--seed", type=int, metavar="N", default=default, help="random seed")
    parser.add_argument("--format", choices=FORMATS, action="append", default=default,
                        help="restrict output to this format (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="coupled-nls",
        description="Radial solutions of a cubic two-component Schrodinger system in R^3.",
    )
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_options(p, suppress=True)
        return p

    def mus(p, beta=True):
        p.add_argument("--mu1", type=_positive, default=1.0)
        p.add_argument("--mu2", type=_positive, default=1.0)
        if beta:
            p.add_argument("--beta", type=_positive, required=True)

    p = command("groundstate", "ground state U of -Delta U + U = U^3 and its diagnostics")
    p.add_argument("--r-max", type=_positive)
    p.add_argument("--n", type=int)

    p = command("tau", "weighted eigenvalue tau(s) and the limit tau0")
    p.add_argument("--s", type=float, nargs="+", default=list(DEFAULT_SHIFTS))
    p.add_argument("--tau0", action="store_true", help="also extrapolate tau0")

    p = command("curves", "bifurcation curves beta1, beta2 and their crossing")
    mus(p, beta=False)

    p = command("solve", "Newton solve at fixed (lambda, beta)")
    mus(p)
    p.add_argument("--lambda", dest="lam", type=_positive, required=True)
    p.add_argument("--seed-from", choices=("decoupled", "explicit", "semitrivial", "file"),
                   default="decoupled")
    p.add_argument("--family", type=int, choices=(1, 2), default=1,
                   help="semitrivial family for --seed-from semitrivial")
    p.add_argument("--file", metavar="CSV", help="r,u,v profile for --seed-from file")

    p = command("continue", "trace a branch in lambda at fixed beta")
    mus(p)
    p.add_argument("--family", choices=("1", "2", "explicit"), required=True)
    p.add_argument("--lambda-min", type=_positive)
    p.add_argument("--lambda-max", type=_positive)

    p = command("normalize", "solution with prescribed masses |u| = a, |v| = b")
    mus(p)
    p.add_argument("--a", type=_positive, required=True)
    p.add_argument("--b", type=_positive, required=True)
    p.add_argument("--lambda-min", type=_positive)
    p.add_argument("--lambda-max", type=_positive)

    p = command("regions", "evidence map over mass ratios or frequency ratios")
    mus(p)
    p.add_argument("--plane", choices=("mass", "frequency"), required=True)
    p.add_argument("--values", type=_positive, nargs="+", help="explicit cell coordinates")
    p.add_argument("--count", type=int, help="number of log-spaced cells")
    p.add_argument("--lo", type=_positive)
    p.add_argument("--hi", type=_positive)
    p.add_argument("--probes", type=int, help="multistart count per cell")
    p.add_argument("--eta", type=int, choices=(1, 2),
                   help="frequency plane: also estimate the threshold eta_1 or eta_2")
    return parser


# -- helpers -----------------------------------------------------------------


def effective_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.format:
        changes["formats"] = ",".join(f for f in FORMATS if f in args.format)
    return cfg.replace(**changes) if changes else cfg


def _newton_opts(cfg):
    return NewtonOptions(tol=cfg.newton_tol)


def _step_opts(cfg):
    return StepOptions(ds0=cfg.ds0, ds_min=cfg.ds_min, ds_max=cfg.ds_max, grow=cfg.step_grow,
                       shrink=cfg.step_shrink, max_points=cfg.max_points, tol=cfg.newton_tol)


def _curve(cfg, mu1, mu2):
    lam = np.logspace(math.log10(cfg.curve_lambda_min), math.log10(cfg.curve_lambda_max),
                      cfg.curve_points)
    return curves(mu1, mu2, lam, h=cfg.spectral_h, tol=cfg.eig_tol)


def _window(cfg, args):
    lo = args.lambda_min if args.lambda_min is not None else cfg.lambda_min
    hi = args.lambda_max if args.lambda_max is not None else cfg.lambda_max
    if not lo < hi:
        raise ParameterError(f"need lambda-min < lambda-max, got {lo}, {hi}")
    return lo, hi


def solve_grid(cfg, lam):
    """The configured base grid, enlarged and refined as lam requires."""
    need = grid_for_window(min(lam, 1.0), max(lam, 1.0), h=cfg.branch_h,
                           decay=cfg.branch_decay, r_min=cfg.r_max)
    n = max(need.n, int(math.ceil(cfg.n * need.r_max / cfg.r_max)))
    return make_grid(need.r_max, n)


def _state_record(state):
    return {
        "lambda": state.lam,
        "beta": state.beta,
        "mu1": state.mu1,
        "mu2": state.mu2,
        "classification": state.classification,
        "iterations": state.iterations,
        "grid": {"r_max": state.grid.r_max, "n": state.grid.n},
        "diagnostics": dict(state.diagnostics),
    }


def _branch_summary(branch):
    pts = branch.points
    lo, hi = ratio_range(branch)
    lams = branch.lambdas
    out = {
        "beta": branch.beta,
        "mu1": branch.mu1,
        "mu2": branch.mu2,
        "origin": branch.origin,
        "origin_lambda": branch.origin_lambda,
        "termination": branch.termination,
        "points": len(pts),
        "lambda_range": [float(lams.min()), float(lams.max())],
        "rho_range": [lo, hi],
        "max_residual_inf": max(p.state.diagnostics["residual_inf"] for p in pts),
        "max_pohozaev_rel": max(p.state.diagnostics["pohozaev_rel"] for p in pts),
        "folds": [list(e[1:]) for e in branch.events],
        "grid": {"r_max": branch.grid.r_max, "n": branch.grid.n},
    }
    end = endpoint_extrapolation(branch)
    if end is not None:
        out["endpoint_extrapolation"] = end
    return out


class Outputs:
    """Collects (name, kind, text) and writes them with provenance headers."""

    def __init__(self, cfg, command, args):
        self.cfg = cfg
        self.prov = output.provenance(cfg, command, args)
        self.items = []

    def add(self, name, kind, payload):
        self.items.append((name, kind, payload))

    def write(self):
        wanted = set(self.cfg.format_list())
        paths = []
        for name, kind, payload in self.items:
            if kind not in wanted:
                continue
            if kind == "json":
                text = output.emit_json(payload, self.prov)
            else:
                text = output.with_provenance(kind, payload, self.prov)
            paths.append(output.write_text(os.path.join(self.cfg.out_dir, name), text))
        echo = output.csv_preamble(self.prov) + self.cfg.text(with_output=False)
        paths.append(output.write_text(
            os.path.join(self.cfg.out_dir, f"{self.prov['command']}.config"), echo))
        return paths


# -- commands ----------------------------------------------------------------


def cmd_groundstate(cfg, args, out):
    grid = make_grid(args.r_max or cfg.r_max, args.n or cfg.n)
    gs = ground_state_on(grid)
    a = shooting_central_value()
    l44 = gs.l4**4
    rec = {
        "grid": {"r_max": grid.r_max, "n": grid.n},
        "central_value": gs.central_value,
        "shooting_central_value": a,
        "central_value_rel_diff": abs(gs.central_value - a) / a,
        "residual": gs.residual,
        "mass": gs.mass,
        "l4_norm4": l44,
        "grad_norm2": gs.grad2,
        "S": gs.sobolev_S,
        "identity_rel": abs(l44 - gs.grad2 - gs.mass**2) / l44,
    }
    out.add("groundstate.json", "json", rec)
    out.add("groundstate.csv", "csv", output.emit_profile_csv(grid, gs.values, name="U"))
    return f"U(0) = {gs.central_value:.12g} (shooting {a:.12g}), residual {gs.residual:.2e}"


def cmd_tau(cfg, args, out):
    rows, recs = [], []
    for s in args.s:
        if s < 0:
            raise ParameterError(f"shift must be nonnegative, got {s}")
        r = tau(s, grid=grid_for_shift(s, h=cfg.spectral_h), tol=cfg.eig_tol)
        rows.append((s, r.tau, r.residual, r.iterations))
        recs.append({"s": s, "tau": r.tau, "residual": r.residual, "iterations": r.iterations})
    rec = {"values": recs}
    if args.tau0:
        t0 = tau0(h=cfg.spectral_h)
        rec["tau0"] = {"value": t0.value, "error": t0.error, "radii": list(t0.radii),
                       "sequence": list(t0.sequence), "exponent": t0.exponent,
                       "warning": t0.warning}
    out.add("tau.json", "json", rec)
    out.add("tau.csv", "csv", output.emit_csv(["s", "tau", "residual", "iterations"], rows))
    return "; ".join(f"tau({s:g}) = {t:.10g}" for s, t, *_ in rows)


def cmd_curves(cfg, args, out):
    c = _curve(cfg, args.mu1, args.mu2)
    rec = {
        "mu1": c.mu1, "mu2": c.mu2, "lambda_star": c.lam_star, "beta_star": c.beta_star,
        "tau0": c.tau0, "tau0_error": c.tau0_error,
        "lambda": c.lam, "beta1": c.beta1, "beta2": c.beta2,
    }
    out.add("curves.json", "json", rec)
    out.add("curves.csv", "csv", output.emit_csv(["lambda", "beta1", "beta2"],
                                                   zip(c.lam, c.beta1, c.beta2)))
    out.add("curves.svg", "svg", output.emit_svg_curves(c))
    return f"lambda* = {c.lam_star:.12g}, beta* = {c.beta_star:.12g}, tau0 = {c.tau0:.8g}"


def _read_profile(path, grid):
    try:
        with open(path, encoding="utf-8") as fh:
            header, rows = output.read_csv(fh.read())
    except OSError as exc:
        raise ParameterError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise ParameterError(f"{path}: {exc}") from exc
    if header[:3] != ["r", "u", "v"] or not rows:
        raise ParameterError(f"{path}: expected columns r,u,v")
    data = np.array(rows)
    # nodes sit at (i - 1/2) h, so r_max is half a step past the last one
    src = make_grid(data[-1, 0] + 0.5 * (data[1, 0] - data[0, 0]), len(data))
    return resample(src, data[:, 1], grid.nodes), resample(src, data[:, 2], grid.nodes)


def cmd_solve(cfg, args, out):
    lam, beta, mu1, mu2 = args.lam, args.beta, args.mu1, args.mu2
    grid = solve_grid(cfg, lam)
    gs = ground_state_on(grid)
    if args.seed_from == "explicit":
        ex = explicit_solution_lambda1(mu1, mu2, beta, gs=gs)
        u0, v0 = ex.u.values, ex.v.values
    elif args.seed_from == "semitrivial":
        st = semitrivial_state(args.family, lam, beta, mu1, mu2, grid)
        u0, v0 = st.u.values, st.v.values
    elif args.seed_from == "file":
        if not args.file:
            raise ParameterError("--seed-from file needs --file")
        u0, v0 = _read_profile(args.file, grid)
    else:
        u0, v0 = random_start(grid, lam, mu1, mu2, gs)
    guess = make_state(grid, lam, beta, mu1, mu2, u0, v0)
    state = newton_solve(guess, opts=_newton_opts(cfg))
    out.add("solve.json", "json", _state_record(state))
    out.add("solve.csv", "csv", output.emit_profile_csv(grid, state.u.values, state.v.values))
    d = state.diagnostics
    return (f"{state.classification} state: rho = {d['rho']:.12g}, "
            f"residual {d['residual_inf']:.2e}, Pohozaev {d['pohozaev_rel']:.2e}")


def cmd_continue(cfg, args, out):
    window = _window(cfg, args)
    if args.family == "explicit":
        grid = grid_for_window(min(window[0], 1.0), max(window[1], 1.0), h=cfg.branch_h,
                               decay=cfg.branch_decay, r_min=cfg.r_max)
        seed = seed_explicit(args.beta, args.mu1, args.mu2, grid)
        branch = trace_branch(seed, window, _step_opts(cfg))
    else:
        c = _curve(cfg, args.mu1, args.mu2)
        branch = build_branch(args.beta, c, int(args.family), window, None, _step_opts(cfg),
                              cfg.seed_eps, cfg.branch_h, cfg.branch_decay)
    summary = _branch_summary(branch)
    if args.family != "explicit":
        summary["ell"] = {}
        for f in (1, 2):
            try:
                summary["ell"][str(f)] = ell(f, args.beta, c)
            except (DomainError, RangeError):
                summary["ell"][str(f)] = None
    out.add("branch.csv", "csv", output.emit_branch_csv(branch))
    out.add("branch.json", "json", summary)
    out.add("branch.svg", "svg", output.emit_svg_ratio(ratio_profile(branch)))
    lo, hi = summary["rho_range"]
    return (f"{len(branch)} points, termination: {branch.termination}, "
            f"rho in [{lo:.6g}, {hi:.6g}]")


def cmd_normalize(cfg, args, out):
    window = _window(cfg, args)
    c = _curve(cfg, args.mu1, args.mu2)
    sol, branch = normalized_solution(
        c, args.beta, args.a, args.b, window, None, _step_opts(cfg), cfg.seed_eps,
        cfg.branch_h, cfg.branch_decay, cfg.ratio_tol,
    )
    rec = {
        "lambda1": sol.lam1,
        "lambda2": sol.lam2,
        "a": sol.a,
        "b": sol.b,
        "a_requested": args.a,
        "b_requested": args.b,
        "alpha": sol.alpha,
        "beta": sol.beta,
        "mu1": sol.mu1,
        "mu2": sol.mu2,
        "diagnostics": sol.diagnostics,
        "round_trip_error": round_trip_error(sol),
        "source": _state_record(sol.source),
        "branch": {"origin": branch.origin, "termination": branch.termination,
                   "points": len(branch)},
        "grid": {"r_max": sol.grid.r_max, "n": sol.grid.n},
    }
    out.add("normalized.json", "json", rec)
    out.add("normalized.csv", "csv", output.emit_profile_csv(sol.grid, sol.u.values, sol.v.values))
    return (f"lambda1 = {sol.lam1:.12g}, lambda2 = {sol.lam2:.12g}, "
            f"residual {sol.diagnostics['residual_inf']:.2e}")


REGION_HEADER = ["index", "coordinate", "value", "verdict", "probes", "lambda", "rho",
                 "residual_inf", "pohozaev_rel"]


def cmd_regions(cfg, args, out):
    k = args.probes or cfg.probes
    if k < 1:
        raise ParameterError(f"probes must be >= 1, got {k}")
    if args.values:
        values = sorted(args.values)
    else:
        default = default_ratio_grid() if args.plane == "mass" else default_frequency_grid()
        lo = args.lo or default[0]
        hi = args.hi or default[-1]
        count = args.count or len(default)
        if count < 1 or not lo <= hi:
            raise ParameterError("need count >= 1 and lo <= hi")
        values = list(np.logspace(math.log10(lo), math.log10(hi), count))
    grid_opts = {"probe_h": cfg.probe_h, "h": cfg.branch_h, "decay": cfg.branch_decay}
    eta = None
    if args.plane == "mass":
        c = _curve(cfg, args.mu1, args.mu2)
        cells = map_mass_plane(args.mu1, args.mu2, args.beta, values, c,
                               (cfg.lambda_min, cfg.lambda_max), k, cfg.seed, None,
                               _step_opts(cfg), **grid_opts)
    elif args.eta:
        eta = estimate_eta(args.eta, args.beta, args.mu1, args.mu2, values, k, cfg.seed,
                           grid_opts=grid_opts)
        cells = list(eta.cells)
    else:
        cells = map_frequency_plane(args.mu1, args.mu2, args.beta, values, k, cfg.seed, grid_opts)
    rows = []
    for c in cells:
        ev = c.evidence
        rows.append((c.index, c.coordinate, c.value, c.verdict, ev.get("probes"),
                     ev.get("lambda"), ev.get("rho"), ev.get("residual_inf"),
                     ev.get("pohozaev_rel")))
    rec = {"plane": args.plane, "mu1": args.mu1, "mu2": args.mu2, "beta": args.beta,
           "probes_per_cell": k, "cells": [c.summary() for c in cells]}
    if eta is not None:
        rec["eta"] = {"which": eta.which, "value": eta.value, "bracket": list(eta.bracket)}
    out.add("regions.csv", "csv", output.emit_csv(REGION_HEADER, rows))
    out.add("regions.json", "json", rec)
    ordered = sorted(cells, key=lambda c: c.value)
    out.add("regions.svg", "svg", output.emit_svg_regions(ordered))
    counts = {}
    for c in cells:
        counts[c.verdict] = counts.get(c.verdict, 0) + 1
    return ", ".join(f"{v}: {n}" for v, n in sorted(counts.items()))


COMMANDS = {
    "groundstate": cmd_groundstate,
    "tau": cmd_tau,
    "curves": cmd_curves,
    "solve": cmd_solve,
    "continue": cmd_continue,
    "normalize": cmd_normalize,
    "regions": cmd_regions,
}


def _arg_record(args):
    skip = {"config", "out", "seed", "format", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args)
        out = Outputs(cfg, args.command, _arg_record(args))
        message = COMMANDS[args.command](cfg, args, out)
        paths = out.write()
    except CoupledNLSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(message)
    for p in paths:
        print(f"wrote {p}")
    return 0
