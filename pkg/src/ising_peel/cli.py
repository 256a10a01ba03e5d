"""Command-line entry point: ``ising-peel <command> ...``.

Every command writes its data (CSV or JSON) to ``--out`` or stdout and
builds a run manifest (argv, resolved options with their source, seeds,
package versions, approximation flags, wall time).  The manifest hash is
stamped into the data, and the manifest itself lands next to ``--out`` as
``<out>.manifest.json`` or wherever the global ``--manifest`` points.

Exit codes: 0 success, 1 provider error (JSON on stderr) or failed
verification, 2 usage error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import metadata

import click
import numpy as np

from .curves import NU_C

THREADS_ENV = "ISING_PEEL_THREADS"
CRITICAL_SNAP_DIGITS = 4


# ---------------------------------------------------------------------------
# parameter parsing


def parse_nu(text) -> float:
    """A coupling given as a decimal, a ratio "a/b", or "c" for the critical value."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s.lower() == "c":
        return NU_C
    try:
        value = float(Fraction(s)) if "/" in s else float(s)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"cannot read {text!r} as a coupling (decimal, a/b or c)") from None
    # a decimal agreeing with nu_c in every one of at least 4 printed places means nu_c
    digits = len(s.partition(".")[2]) if "." in s and "e" not in s.lower() else 0
    if digits >= CRITICAL_SNAP_DIGITS and round(NU_C, digits) == value:
        return NU_C
    return value


class NuType(click.ParamType):
    name = "nu"

    def convert(self, value, param, ctx):
        try:
            return parse_nu(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


class ListType(click.ParamType):
    """Comma-separated values, or a:b:n for n evenly spaced points."""

    name = "list"

    def __init__(self, item=float):
        self.item = item

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [self.item(v) for v in value]
        try:
            s = str(value)
            if s.count(":") == 2:
                a, b, n = s.split(":")
                return [float(x) for x in np.linspace(self.item(a), self.item(b), int(n))]
            return [self.item(x) for x in s.split(",") if x.strip()]
        except ValueError as e:
            self.fail(f"bad list {value!r}: {e}", param, ctx)


NU = NuType()


# ---------------------------------------------------------------------------
# manifest and output


def _versions():
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "mpmath", "click"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def _plain(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    return x


class Run:
    """Bookkeeping for one command invocation."""

    def __init__(self, ctx: click.Context):
        root = ctx.find_root()
        self.argv = list(root.obj.get("argv", []))
        self.manifest_path = root.obj.get("manifest")
        self.command = ctx.command_path
        self.config = {
            name: {"value": _plain(value), "source": _source(ctx, name)}
            for name, value in sorted(ctx.params.items())
        }
        self.seeds: list = []
        self.approx: set[str] = set()
        self.start = time.perf_counter()
        self.precision = ctx.params.get("precision") or 12

    def flag(self, what):
        self.approx.add(what)

    @property
    def core(self):
        return {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "seeds": self.seeds,
            "versions": _versions(),
        }

    @property
    def digest(self):
        blob = json.dumps(self.core, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def manifest(self):
        return {**self.core, "hash": self.digest, "approx_flags": sorted(self.approx),
                "wall_time_s": round(time.perf_counter() - self.start, 3)}

    def _fmt(self, x):
        if isinstance(x, (bool, np.bool_)):
            return "true" if x else "false"
        if isinstance(x, (float, np.floating)):
            return "nan" if math.isnan(x) else f"{float(x):.{self.precision}g}"
        return "" if x is None else str(x)

    def _round(self, x):
        if isinstance(x, (float, np.floating)) and math.isfinite(x):
            return float(f"{float(x):.{self.precision}g}")
        return _plain(x)

    def emit(self, rows, columns, fmt, out, extra=None):
        """Write rows in the chosen format, then the manifest."""
        if fmt == "json":
            body = {"manifest": self.digest, "rows": [{c: self._round(r.get(c)) for c in columns} for r in rows]}
            if extra:
                body.update(_plain(extra))
            text = json.dumps(body, indent=1) + "\n"
        else:
            buf = io.StringIO()
            buf.write(f"# manifest sha256:{self.digest}\n")
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([self._fmt(r.get(c)) for c in columns])
            text = buf.getvalue()
        self.write(text, out)

    def write(self, text, out):
        if out:
            with open(out, "w") as fh:
                fh.write(text)
        else:
            click.echo(text, nl=False)
        path = self.manifest_path or (f"{out}.manifest.json" if out else None)
        if path:
            with open(path, "w") as fh:
                json.dump(self.manifest(), fh, indent=1, default=str)
                fh.write("\n")


def _source(ctx, name):
    src = ctx.get_parameter_source(name)
    return {"COMMANDLINE": "flag", "DEFAULT_MAP": "config", "ENVIRONMENT": "env"}.get(
        src.name if src else "", "default")


def threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise click.UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise click.UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def pool_map(fn, jobs):
    """Run fn over jobs on at most ISING_PEEL_THREADS worker processes, preserving order."""
    jobs = list(jobs)
    n = min(threads(), len(jobs))
    if n <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, jobs))


def output_options(default_format="csv"):
    def deco(f):
        f = click.option("--precision", type=click.IntRange(1, 17), default=12, show_default=True,
                         help="Significant digits for floats.")(f)
        f = click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=default_format,
                         show_default=True)(f)
        f = click.option("--out", type=click.Path(dir_okay=False), default=None,
                         help="Output file (stdout when omitted).")(f)
        return f
    return deco


# ---------------------------------------------------------------------------
# root group


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file of option defaults, nested by command name.")
@click.option("--manifest", type=click.Path(dir_okay=False), default=None,
              help="Where to write the run manifest (default: next to --out).")
@click.version_option(package_name="artifact")
@click.pass_context
def cli(ctx, config_file, manifest):
    """Ising-decorated triangulations: enumeration, curves, asymptotics, peeling, maps."""
    ctx.ensure_object(dict)
    ctx.obj["manifest"] = manifest
    if config_file:
        with open(config_file) as fh:
            try:
                cfg = json.load(fh)
            except json.JSONDecodeError as e:
                raise click.BadParameter(f"config is not valid JSON: {e}", param_hint="--config") from None
        if not isinstance(cfg, dict):
            raise click.BadParameter("config must be a JSON object", param_hint="--config")
        ctx.default_map = cfg


# ---------------------------------------------------------------------------
# enum


@cli.command("enum")
@click.option("--pmax", type=click.IntRange(0), required=True)
@click.option("--qmax", type=click.IntRange(0), default=0, show_default=True)
@click.option("--nmax", type=click.IntRange(0), required=True)
@output_options("json")
@click.pass_context
def enum_cmd(ctx, pmax, qmax, nmax, out, fmt, precision):
    """Exact counts of Ising triangulations by (p, q, faces n, monochromatic edges m)."""
    from .enumeration import build_count_table

    run = Run(ctx)
    tab = build_count_table(pmax, qmax, nmax)
    rows = [r for r in tab.to_rows(pmax, qmax) if r["p"] + r["q"] <= pmax + qmax]
    run.emit(rows, ["p", "q", "n", "m", "count"], fmt, out)


# ---------------------------------------------------------------------------
# curves


@cli.command("curves")
@click.option("--nu", type=NU, default=None, help="Single coupling.")
@click.option("--grid", type=ListType(parse_nu), default=None, help="Couplings: a:b:n or a comma list.")
@output_options()
@click.pass_context
def curves_cmd(ctx, nu, grid, out, fmt, precision):
    """Critical-line point (S_c, t_c, u_c, H_c) for each coupling."""
    from . import curves

    if nu is None and not grid:
        raise click.UsageError("give --nu or --grid")
    run = Run(ctx)
    rows = []
    for v in ([nu] if nu is not None else []) + list(grid or []):
        tp = curves.critical_point(v)
        j1 = curves.eval_J1(tp.R) if tp.branch == "high" else None
        rows.append({"nu": tp.nu, "R": tp.R, "branch": tp.branch, "S_c": tp.S_c, "t_c": tp.t_c,
                     "u_c": tp.u_c, "H_c": tp.H_c, "J1": j1, "approx": False})
    run.emit(rows, ["nu", "R", "branch", "S_c", "t_c", "u_c", "H_c", "J1", "approx"], fmt, out)


# ---------------------------------------------------------------------------
# asympt


@cli.group("asympt")
def asympt():
    """Scaling functions, the T_m limit law and contour-integral checks."""


@asympt.command("c-lambda")
@click.option("--phase", type=click.Choice(["low", "critical", "high"]), required=True)
@click.option("--grid", type=ListType(), default="0.125:8:64", show_default=True,
              help="lambda values: a:b:n or a comma list.")
@output_options()
@click.pass_context
def c_lambda_cmd(ctx, phase, grid, out, fmt, precision):
    """The diagonal scaling function c(lambda)."""
    from . import asymptotics as asy

    run = Run(ctx)
    rows = [{"lambda": lam, "phase": phase, "c": asy.c_lambda(phase, lam), "approx": False} for lam in grid]
    run.emit(rows, ["lambda", "phase", "c", "approx"], fmt, out)


@asympt.command("scaling-cdf")
@click.option("--lambda", "lam", type=float, default=1.0, show_default=True)
@click.option("--t", "ts", type=ListType(), default="0.1,0.5,1,2,5,10", show_default=True)
@output_options()
@click.pass_context
def scaling_cdf_cmd(ctx, lam, ts, out, fmt, precision):
    """Limit of Prob(T_m > t p) for q/p -> lambda at criticality."""
    from . import asymptotics as asy

    run = Run(ctx)
    rows = [{"lambda": lam, "t": t, "survival": asy.scaling_cdf(lam, t), "approx": False} for t in ts]
    run.emit(rows, ["lambda", "t", "survival", "approx"], fmt, out)


@asympt.command("contour")
@click.option("--which", type=click.Choice(["lowT_kernel", "highT_ctilde", "critical_ctilde"]), required=True)
@click.option("--lambda", "lams", type=ListType(), default="0.5,1,2", show_default=True)
@output_options()
@click.pass_context
def contour_cmd(ctx, which, lams, out, fmt, precision):
    """Contour integral by quadrature next to its closed form."""
    from . import asymptotics as asy

    run = Run(ctx)
    todo = [None] if which == "lowT_kernel" else lams
    rows = []
    for lam in todo:
        r = asy.contour_check(which, 1.0 if lam is None else lam)
        rows.append({"which": which, "lambda": r.lam, "numeric": r.numeric, "closed_form": r.closed_form,
                     "deviation": r.deviation, "approx": False})
    run.emit(rows, ["which", "lambda", "numeric", "closed_form", "deviation", "approx"], fmt, out)


# ---------------------------------------------------------------------------
# peel


@cli.group("peel")
def peel():
    """Peeling laws, perimeter processes and the hitting time T_m."""


def _simulate_job(job):
    from .peeling import simulate

    law, nu, steps, until, seed, p, q, max_steps = job
    path = simulate(law, nu, n_steps=steps, until=until, seed=seed, p=p, q=q, max_steps=max_steps)
    return {"seed": seed, "X": path.X, "Y": path.Y, "stop_time": path.stop_time,
            "truncated": path.truncated, "jumps": path.jumps, "approx": path.approx}


@peel.command("simulate")
@click.option("--law", default="P_inf", show_default=True,
              help="P_pq, P_pq_target, P_p, P_inf, Phat_pq, Phat_p or Phat_inf.")
@click.option("--nu", type=NU, required=True)
@click.option("--p", type=click.IntRange(0), default=None)
@click.option("--q", type=click.IntRange(0), default=None)
@click.option("--steps", type=click.IntRange(1), default=None, help="Fixed number of steps.")
@click.option("--until", type=click.IntRange(0), default=None, help="Run until T_m for this m.")
@click.option("--max-steps", type=click.IntRange(1), default=10 ** 6, show_default=True)
@click.option("--replicas", type=click.IntRange(1), default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options()
@click.pass_context
def simulate_cmd(ctx, law, nu, p, q, steps, until, max_steps, replicas, seed, out, fmt, precision):
    """Perimeter paths (X_n, Y_n), or stop times when --until is given."""
    from .peeling import law_name

    if (steps is None) == (until is None):
        raise click.UsageError("give exactly one of --steps and --until")
    try:
        law = law_name(law)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--law") from None
    run = Run(ctx)
    run.seeds = [seed + i for i in range(replicas)]
    jobs = [(law, nu, steps, until, s, p, q, max_steps) for s in run.seeds]
    results = pool_map(_simulate_job, jobs)
    if any(r["approx"] for r in results):
        run.flag(f"{law} step law uses fitted tails or asymptotic weights")
    if until is not None:
        rows = [{"replica": i, "seed": r["seed"], "stop_time": r["stop_time"], "truncated": r["truncated"],
                 "jumps": r["jumps"], "approx": r["approx"]} for i, r in enumerate(results)]
        run.emit(rows, ["replica", "seed", "stop_time", "truncated", "jumps", "approx"], fmt, out)
        return
    rows = [{"replica": i, "n": n, "X": x, "Y": y, "approx": r["approx"]}
            for i, r in enumerate(results) for n, (x, y) in enumerate(zip(r["X"], r["Y"]))]
    run.emit(rows, ["replica", "n", "X", "Y", "approx"], fmt, out)


@peel.command("order-param")
@click.option("--nu-grid", type=ListType(parse_nu), default="2,4,c,7,10,100,10000", show_default=True)
@output_options()
@click.pass_context
def order_param_cmd(ctx, nu_grid, out, fmt, precision):
    """Order parameter and bottleneck probability of the half-plane law."""
    from .peeling import bottleneck_parameter, order_parameter

    run = Run(ctx)
    rows = []
    for nu in nu_grid:
        o, b = order_parameter(nu), bottleneck_parameter(nu)
        approx = o.approx or b.approx
        if approx:
            run.flag("order parameter uses fitted coefficient tails")
        rows.append({"nu": nu, "order_parameter": o.value, "bottleneck": b.value, "approx": approx})
    run.emit(rows, ["nu", "order_parameter", "bottleneck", "approx"], fmt, out)


@peel.command("tm-survival")
@click.option("--nu", type=NU, default="c", show_default=True, help="Only the critical coupling is supported.")
@click.option("--lambda", "lam", type=click.FloatRange(min=0, min_open=True), default=1.0, show_default=True)
@click.option("--p", type=click.IntRange(1), default=2000, show_default=True)
@click.option("--m", type=click.IntRange(0), default=0, show_default=True)
@click.option("--replicas", type=click.IntRange(1), default=20000, show_default=True)
@click.option("--t", "ts", type=ListType(), default="0.25,0.5,1,1.5,2", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options()
@click.pass_context
def tm_survival_cmd(ctx, nu, lam, p, m, replicas, ts, seed, out, fmt, precision):
    """Empirical Prob(T_m > t p) for targeted peeling next to the limit law."""
    from .curves import DomainError
    from .survival import tm_survival

    if abs(nu - NU_C) > 1e-12:
        raise DomainError("tm-survival runs at the critical coupling only (--nu c)")
    run = Run(ctx)
    run.seeds = [seed]
    q = max(1, round(lam * p))
    steps = max(2 * p, math.ceil(max(ts) * p) + 1)
    res = tm_survival(p, q, replicas, m=m, n_steps=steps, seed=seed)
    run.flag("targeted chain uses asymptotic z-ratios and interpolated class masses")
    rows = [{"t": t, "empirical": e, "model": mdl, "approx": True} for t, e, mdl in res.table(ts, lam)]
    run.emit(rows, ["t", "empirical", "model", "approx"], fmt, out,
             extra={"p": p, "q": q, "bound_violations": res.bound_violations, "seconds": res.seconds})


# ---------------------------------------------------------------------------
# sample


@cli.group("sample")
def sample():
    """Boltzmann maps and local-limit balls."""


@sample.command("map")
@click.option("--p", type=click.IntRange(0), required=True)
@click.option("--q", type=click.IntRange(0), required=True)
@click.option("--t-frac", type=click.FloatRange(0, 1, max_open=True), default=0.7, show_default=True,
              help="t as a fraction of t_c(nu).")
@click.option("--nu", type=NU, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@click.pass_context
def sample_map_cmd(ctx, p, q, t_frac, nu, seed, out):
    """One Boltzmann Ising triangulation of the (p,q)-gon, as JSON."""
    from . import curves
    from .maps import sample_boltzmann, validate_map

    run = Run(ctx)
    run.seeds = [seed]
    t = t_frac * curves.critical_point(nu).t_c
    m = sample_boltzmann(p, q, t, nu, seed=seed)
    body = json.loads(m.to_json())
    body.update({"manifest": run.digest, "n_faces": m.n_faces, "monochromatic_edges": m.monochromatic_edges(),
                 "valid": validate_map(m).ok})
    run.write(json.dumps(body) + "\n", out)


def _ball_job(job):
    from .maps import explore_ball

    nu, law, radius, seed, max_steps = job
    b = explore_ball(nu, law, radius, seed, max_steps=max_steps)
    row = {"seed": seed, "law": b.law, "theta": b.theta, "steps": b.steps, "vertices": len(b.vertices),
           "triangles": len(b.triangles), "bottleneck_step": b.bottleneck_step,
           "infinite_jumps": b.infinite_jumps, "second_component": b.second is not None,
           "truncated": b.truncated, "surrogate_t": b.surrogate_t, "approx": b.approx}
    detail = {"seed": seed, "distances": {str(k): v for k, v in b.vertices.items()},
              "triangles": [list(t) for t in b.triangles], "events": list(b.events)}
    return row, detail


BALL_COLUMNS = ["replica", "seed", "law", "theta", "steps", "vertices", "triangles", "bottleneck_step",
                "infinite_jumps", "second_component", "truncated", "surrogate_t", "approx"]


@sample.command("ball")
@click.option("--nu", type=NU, required=True)
@click.option("--radius", type=click.IntRange(0), default=2, show_default=True)
@click.option("--law", type=click.Choice(["auto", "P_inf", "mixed"]), default="auto", show_default=True)
@click.option("--replicas", type=click.IntRange(1), default=1, show_default=True)
@click.option("--max-steps", type=click.IntRange(1), default=4000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options()
@click.pass_context
def sample_ball_cmd(ctx, nu, radius, law, replicas, max_steps, seed, out, fmt, precision):
    """Balls around the root of local-limit samples, one summary row each."""
    run = Run(ctx)
    run.seeds = [seed + i for i in range(replicas)]
    results = pool_map(_ball_job, [(nu, law, radius, s, max_steps) for s in run.seeds])
    rows = []
    for i, (row, _) in enumerate(results):
        rows.append({"replica": i, **row})
    if any(r["approx"] for r in rows):
        run.flag("holes filled at a subcritical surrogate t")
    extra = {"balls": [d for _, d in results]} if fmt == "json" else None
    run.emit(rows, BALL_COLUMNS, fmt, out, extra=extra)


# ---------------------------------------------------------------------------
# verify


@cli.command("verify")
@click.option("--quick", is_flag=True, help="Only the exact-equality and identity checks.")
@click.option("--only", type=ListType(int), default=None, help="Comma list of criterion numbers.")
@output_options()
@click.pass_context
def verify_cmd(ctx, quick, only, out, fmt, precision):
    """Run the acceptance checks and print a pass/fail table."""
    from . import acceptance

    if only:
        unknown = sorted(set(only) - set(acceptance.CHECKS))
        if unknown:
            raise click.BadParameter(f"no criteria numbered {unknown}", param_hint="--only")
    run = Run(ctx)
    numbers = sorted(set(only)) if only else None
    outcomes = acceptance.run(numbers, quick=quick, report=lambda o: click.echo(o.line(), err=True))
    rows = [{"criterion": o.number, "title": o.title, "passed": o.passed, "approx": o.approx,
             "seconds": o.seconds, "detail": o.detail} for o in outcomes]
    for o in outcomes:
        if o.approx:
            run.flag(f"criterion {o.number} uses approximate providers")
    run.emit(rows, ["criterion", "title", "passed", "approx", "seconds", "detail"], fmt, out)
    failed = [o.number for o in outcomes if not o.passed]
    click.echo(f"{len(outcomes) - len(failed)}/{len(outcomes)} passed"
               + (f"; failed: {failed}" if failed else ""), err=True)
    ctx.exit(1 if failed else 0)


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    """Run the CLI and return its exit code instead of raising SystemExit."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = cli.main(args=argv, prog_name="ising-peel", standalone_mode=False, obj={"argv": argv})
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except Exception as e:  # provider errors: one JSON object on stderr
        err = {"error": type(e).__name__, "message": str(e), "argv": argv}
        click.echo(json.dumps(err), err=True)
        return 1
    return rv if isinstance(rv, int) else 0


def run(argv) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
