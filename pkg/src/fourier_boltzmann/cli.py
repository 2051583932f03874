"""Command-line entry point.

Every subcommand reads one TOML config (see ``config.py``), writes CSV files
plus ``manifest.json`` into ``--out``, and exits 0 on success, 1 when a bound
or check fails, 2 on a configuration or domain error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import replace
from importlib import metadata

import numpy as np

from . import acceptance
from .bobylev import _kernel_alpha0, cutoff_limit, evolve, stability_experiment
from .charfun import RadialCharFn, classify, knorm, knorm_diff, mnorm_re, parse_family
from .config import RunConfig, load_config
from .dsmc import empirical_charfn, run_dsmc
from .errors import (BoundViolation, ConfigError, DivergenceError, DomainError, NumericError,
                     UnsupportedError)
from .kernel import lambda_limit, rate_constants
from .moments import laplacian_lift, second_moment
from .povzner import povzner_check

log = logging.getLogger("fourier_boltzmann")

SUBCOMMANDS = ("constants", "norms", "classify", "evolve", "stability", "limit", "povzner-check",
               "dsmc", "verify-all")


class CheckFailed(Exception):
    """A bound or acceptance check did not hold; the outputs are still written."""


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path: str, header, rows) -> str:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


class Run:
    def __init__(self, cfg: RunConfig, out: str):
        self.cfg = cfg
        self.out = out
        self.files: list[str] = []
        self.summary: dict = {}
        os.makedirs(out, exist_ok=True)

    def csv(self, name: str, header, rows) -> None:
        self.files.append(os.path.basename(write_csv(os.path.join(self.out, name), header, rows)))

    def kernel(self):
        return self.cfg.kernel.build()

    def initial(self):
        ini = self.cfg.initial
        if ini.csv:
            return RadialCharFn.from_csv(ini.csv)
        return parse_family(ini.family)

    def solver(self):
        cfg = self.cfg.solver
        a0, inf = _kernel_alpha0(self.kernel())
        try:
            cfg.validate(a0, inf)
        except DomainError as exc:
            raise ConfigError(f"[solver]: {exc}") from None
        return cfg


def _analytic(phi, what: str):
    if isinstance(phi, RadialCharFn):
        raise UnsupportedError(f"{what} needs an analytic initial family, not a CSV sample")
    return phi


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(run: Run) -> None:
    kern = run.kernel()
    exps = [float(a) for a in run.cfg.constants.exponents]
    rows = []
    if kern.is_bounded:
        c = rate_constants(kern, exps)
        rows = [(a, c.gamma[a], c.lam[a], c.gamma2, c.residual[a]) for a in exps]
        run.summary["gamma2"] = c.gamma2
    else:
        for a in exps:
            try:
                lam, err = lambda_limit(kern, a, return_error=True)
            except DivergenceError:
                lam, err = math.inf, math.nan
            rows.append((a, math.inf, lam, math.inf, err))
    run.csv("constants.csv", ["exponent", "gamma", "lambda", "gamma2", "residual"], rows)


def _norm_row(name, res):
    return (name, res.value, res.tail, res.divergent, res.inconclusive, res.slope)


NORM_HEADER = ["quantity", "value", "tail", "divergent", "inconclusive", "slope"]


def cmd_norms(run: Run) -> None:
    phi = run.initial()
    psi = parse_family(run.cfg.compare.family)
    nc = run.cfg.norms
    rows = [_norm_row(f"knorm_alpha({nc.alpha:g})", knorm(phi, nc.alpha)),
            _norm_row(f"knorm_beta({nc.beta:g})", knorm(phi, nc.beta)),
            _norm_row(f"mnorm_alpha({nc.alpha:g})", mnorm_re(phi, nc.alpha))]
    try:
        rows.append(_norm_row(f"mnorm_alpha_diff({nc.alpha:g})", mnorm_re(phi, nc.alpha, psi)))
    except UnsupportedError as exc:
        log.warning("difference M-norm skipped: %s", exc)
    rows.append(_norm_row(f"knorm_alpha_diff({nc.alpha:g})", knorm_diff(phi, psi, nc.alpha)))
    m2 = second_moment(phi)
    rows.append(("second_moment", m2.value, math.nan, m2.divergent, False, math.nan))
    run.csv("norms.csv", NORM_HEADER, rows)


def cmd_classify(run: Run) -> None:
    phi = run.initial()
    cc = run.cfg.classify
    targets = [("initial", phi)]
    if cc.lift_n > 0:
        lift = laplacian_lift(phi, cc.lift_n)
        targets.append((f"lift_{cc.lift_n}", lift.normalized))
        run.summary["lift_psi0"] = lift.psi0
    rows = []
    for name, fn in targets:
        c = classify(fn, cc.alpha)
        rows.append((name, cc.alpha, c.in_K_alpha, c.in_M_tilde_alpha, c.knorm.value, c.mnorm.value,
                     c.obstruction or ""))
    run.csv("classify.csv", ["target", "alpha", "in_K_alpha", "in_M_tilde_alpha", "knorm", "mnorm",
                             "obstruction"], rows)


def _snapshot_rows(trace):
    r = trace.snapshots[0].radii
    cols = [s.values.real for s in trace.snapshots]
    return [(r[i], *(c[i] for c in cols)) for i in range(r.size)]


def cmd_evolve(run: Run) -> None:
    cfg = run.solver()
    trace = evolve(run.initial(), run.kernel(), cfg, run.cfg.grid)
    table = trace.table()
    keys = list(table[0])
    run.csv("trace.csv", keys, [[row[k] for k in keys] for row in table])
    run.csv("snapshots.csv", ["r"] + [f"phi_t{t:g}" for t in trace.times], _snapshot_rows(trace))
    run.summary["trace_constants"] = trace.constants
    run.summary["steps"] = len(trace.steps)


def cmd_stability(run: Run) -> None:
    cfg = run.solver()
    cc = run.cfg.compare
    rep = stability_experiment(run.initial(), parse_family(cc.family), run.kernel(), cfg, cc.C,
                               cc.slack, run.cfg.grid)
    keys = list(rep.rows[0])
    run.csv("stability.csv", keys, [[row[k] for k in keys] for row in rep.rows])
    run.summary.update(alpha_ok=rep.alpha_ok, fourier_ok=rep.fourier_ok, worst_time=rep.worst_time)
    if not rep.ok:
        raise CheckFailed(f"stability bound failed (alpha_ok={rep.alpha_ok}, "
                          f"fourier_ok={rep.fourier_ok}, worst t={rep.worst_time})")


def cmd_limit(run: Run) -> None:
    cfg = run.solver()
    rep = cutoff_limit(run.initial(), run.kernel(), run.cfg.limit.n_list, cfg, run.cfg.grid)
    pairs = [f"{a:g}->{b:g}" for a, b in zip(rep.levels[:-1], rep.levels[1:])]
    rows = [(t, p, g) for t in rep.times for p, g in zip(pairs, rep.cauchy_gaps[t])]
    run.csv("limit_gaps.csv", ["t", "levels", "beta_gap"], rows)
    run.csv("limit_sup.csv", ["levels", "sup_gap"], list(zip(pairs, rep.sup_gaps)))
    run.csv("continuity.csv", ["s", "t", "gap_beta", "ratio"],
            [(r["s"], r["t"], r["gap_beta"], r["ratio"]) for r in rep.continuity_rows])
    run.summary.update(continuity_C=rep.continuity_C, monotone=rep.monotone,
                       lambda_beta=rep.lambda_beta)


def cmd_povzner(run: Run) -> None:
    pc = run.cfg.povzner
    rep = povzner_check(run.kernel(), pc.n, pc.alpha, pc.samples, run.cfg.seed, pc.delta)
    run.csv("povzner.csv", ["quantity", "value"], rep.rows())
    run.summary["passed"] = rep.passed()
    if not rep.passed():
        raise CheckFailed("Povzner checks failed")


def cmd_dsmc(run: Run) -> None:
    dc = run.cfg.dsmc
    fam = _analytic(run.initial(), "dsmc")
    kern = run.kernel()
    p = 2 * dc.moment_n + dc.moment_alpha
    sim = run_dsmc(fam, kern, dc.N, dc.dt, dc.horizon, run.cfg.seed, dc.record_times, (2.0, p))
    keys = list(sim.moments[0])
    run.csv("dsmc_moments.csv", ["t"] + keys,
            [[t] + [m[k] for k in keys] for t, m in zip(sim.times, sim.moments)])
    # spectral reference on the same record times
    scfg = run.solver()
    scfg = replace(scfg, horizon=dc.horizon, record_times=tuple(sim.times), diagnostics=False)
    trace = evolve(fam, kern, scfg, run.cfg.grid)
    radii = trace.snapshots[0].radii
    band = 5.0 / math.sqrt(dc.N)
    rows, worst = [], 0.0
    for t, ens in zip(sim.times, sim.ensembles):
        emp = empirical_charfn(ens, radii)
        ref = trace.at(t)
        gap = float(np.max(np.abs(emp.deficit - ref.deficit)))
        worst = max(worst, gap)
        rows.append((t, gap, band))
    run.csv("dsmc_gap.csv", ["t", "sup_gap", "band"], rows)
    run.summary.update(energy_drift=sim.energy_drift, worst_gap=worst, band=band)
    if worst > band:
        raise CheckFailed(f"DSMC gap {worst:.3g} exceeds 5/sqrt(N) = {band:.3g}")


def cmd_verify_all(run: Run, only=None) -> None:
    results = acceptance.run_all(only, echo=print)
    run.csv("acceptance.csv", ["criterion", "title", "passed", "seconds", "details"],
            [(r.number, r.title, r.passed, r.seconds,
              json.dumps(r.details, default=str, sort_keys=True).replace(",", ";"))
             for r in results])
    failed = [r.number for r in results if not r.passed]
    run.summary.update(passed=[r.number for r in results if r.passed], failed=failed)
    if failed:
        raise CheckFailed(f"criteria failed: {failed}")


COMMANDS = {"constants": cmd_constants, "norms": cmd_norms, "classify": cmd_classify,
            "evolve": cmd_evolve, "stability": cmd_stability, "limit": cmd_limit,
            "povzner-check": cmd_povzner, "dsmc": cmd_dsmc, "verify-all": cmd_verify_all}


# ---------------------------------------------------------------------------
# manifest


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("numpy", "scipy", "sympy", "mpmath", "artifact"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _kernel_summary(cfg: RunConfig) -> dict:
    try:
        kern = cfg.kernel.build()
    except DomainError as exc:
        return {"error": str(exc)}
    info = {"kernel": kern.describe()}
    exps = sorted({0.0, 2.0, float(cfg.solver.alpha), float(cfg.solver.beta)})
    exps = [a for a in exps if 0.0 <= a <= 2.0]
    if kern.is_bounded:
        info["constants"] = rate_constants(kern, exps).as_dict()
    return info


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def write_manifest(run: Run, command: str, status: int, wall: float, message: str = "") -> None:
    man = {"command": command, "exit_code": status, "message": message,
           "config": run.cfg.as_dict(), "seed": run.cfg.seed, "workers": run.cfg.workers,
           "versions": _versions(), "wall_time_s": wall,
           "started": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "outputs": run.files,
           "summary": run.summary, **_kernel_summary(run.cfg)}
    with open(os.path.join(run.out, "manifest.json"), "w") as fh:
        json.dump(_jsonable(man), fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fourier-boltzmann",
                                 description="Fourier-space Maxwellian-molecule toolkit")
    ap.add_argument("command", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="TOML run configuration")
    ap.add_argument("--out", default="runs/latest", help="artifact directory")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--workers", type=int, help="overrides the config worker count")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. solver.alpha=1.2 (repeatable)")
    ap.add_argument("--only", type=int, nargs="+", help="verify-all: run only these criteria")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    run = Run(cfg, args.out)
    t0 = time.perf_counter()
    status, message = 0, ""
    try:
        if args.command == "verify-all":
            cmd_verify_all(run, args.only)
        else:
            COMMANDS[args.command](run)
    except (CheckFailed, BoundViolation, NumericError) as exc:
        status, message = 1, f"{type(exc).__name__}: {exc}"
    except (ConfigError, DomainError, DivergenceError, UnsupportedError) as exc:
        status, message = 2, f"{type(exc).__name__}: {exc}"
    wall = time.perf_counter() - t0
    write_manifest(run, args.command, status, wall, message)
    if message:
        print(message, file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
