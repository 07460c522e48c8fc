"""Command-line front end and config-driven experiment runner.

Every subcommand builds a job description (a plain dict) and hands it to
:func:`run_job`; ``run <config.json>`` does the same for each job of a
config file.  Reports are JSON documents stamped ``schema: 1`` with floats
written to 17 significant digits, so reading a report back gives the same
numbers.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConsistencyError, OneSidedError, SpecError
from .grid import Grid, GridFunction, format_grid, parse_grid, synthesize
from .lorentz import lorentz_norm
from .operators import ContourParams, Direction, fractional_integral_plus, maximal, parse_operator
from .verify import (
    norm_sweep,
    verify_conjugation_consistency,
    verify_gap_lemma,
    verify_joint_rh,
    verify_perturbation,
    verify_rh_lemma,
    verify_s_shift,
)
from .weights import (
    GapParams,
    Mode,
    WeightClass,
    a1_constant,
    ainfty_constant,
    ap_constant,
    apq_constant,
    bmo_norm,
    gap_constant,
    joint_ap_constant,
    joint_ap_plus_constant,
)

SCHEMA = 1
DEFAULT_GRID = "grid:origin=0,step=0.0078125,cells=128"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(SpecError):
    """Malformed experiment config; the message carries the location."""


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------

def _num(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = "%.17g" % x
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON text with every float written as ``%.17g`` (exact round trip)."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(not isinstance(v, (dict, list)) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _num(o)
        return json.dumps(o)

    return enc(_plain(obj), 0) + "\n"


def loads(text: str):
    return json.loads(text)


def csv_text(rows, header) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_num(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# jobs
# ---------------------------------------------------------------------------

@dataclass
class Context:
    grid: Grid
    mode: Mode = Mode.FULL
    seed: int = 0
    declared: Optional[dict] = None            # name -> spec; None means specs are given inline
    tolerances: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict)

    def function(self, ref, where: str) -> GridFunction:
        if ref is None:
            raise ConfigError(f"{where}: missing function reference")
        if self.declared is not None:
            if ref not in self.declared:
                raise ConfigError(f"{where}: {ref!r} is not a declared function "
                                  f"(declared: {', '.join(sorted(self.declared)) or 'none'})")
            spec = self.declared[ref]
        else:
            spec = ref
        if spec not in self.cache:
            try:
                self.cache[spec] = synthesize(spec, self.grid)
            except SpecError as exc:
                raise ConfigError(f"{where}: {exc}") from None
        return self.cache[spec]


def _float(job, key, default=None, where=""):
    v = job.get(key, default)
    if v is None:
        if default is None:
            raise ConfigError(f"{where}.{key}: required")
        return default
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}.{key}: not a number: {v!r}") from None


_VERIFY_TOL = {"gap": 0.15, "rh": 0.0, "sshift": 0.0, "jointrh": 0.0, "perturb": 0.0, "conj": 1e-5}


def _constants_job(job, ctx, where):
    cls = WeightClass.parse(job.get("class", "ap+"))
    mode = Mode.parse(job.get("mode", ctx.mode))
    w = ctx.function(job.get("weight"), f"{where}.weight")
    if cls in (WeightClass.AP, WeightClass.AP_PLUS, WeightClass.AP_MINUS):
        rep = ap_constant(w, _float(job, "p", where=where), cls, mode)
    elif cls in (WeightClass.A1_PLUS, WeightClass.A1_MINUS):
        rep = a1_constant(w, "+" if cls is WeightClass.A1_PLUS else "-")
    elif cls in (WeightClass.AINF_PLUS, WeightClass.AINF_MINUS):
        rep = ainfty_constant(w, "+" if cls is WeightClass.AINF_PLUS else "-")
    elif cls in (WeightClass.APQ_PLUS, WeightClass.APQ_MINUS):
        rep = apq_constant(w, _float(job, "p", where=where), _float(job, "q", where=where),
                           "+" if cls is WeightClass.APQ_PLUS else "-", mode)
    elif cls in (WeightClass.JOINT_AP_PLUS, WeightClass.JOINT_AP):
        v = ctx.function(job.get("weight2", job.get("weight")), f"{where}.weight2")
        fn = joint_ap_plus_constant if cls is WeightClass.JOINT_AP_PLUS else joint_ap_constant
        rep = fn(v, w, _float(job, "p", where=where), mode)
    elif cls is WeightClass.GAP:
        v = ctx.function(job.get("weight2", job.get("weight")), f"{where}.weight2")
        rep = gap_constant(v, w, GapParams(int(_float(job, "t", 4, where)), _float(job, "p", where=where)))
    else:
        rep = bmo_norm(w)
    return "ok", rep.as_dict(), None


def _lemma_job(job, ctx, where):
    lemma = job.get("lemma")
    tol = _float(job, "tol", ctx.tolerances.get(lemma, _VERIFY_TOL.get(lemma, 0.0)), where)
    p = _float(job, "p", 2.0, where)
    fn = lambda key: ctx.function(job.get(key), f"{where}.{key}")
    if lemma == "gap":
        rep = verify_gap_lemma(fn("v"), fn("w"), p, int(_float(job, "t", 4, where)), tol,
                               levels=int(_float(job, "levels", 3, where)),
                               lhs_kind=job.get("lhs_kind", "two_sided"))
    elif lemma == "rh":
        rep = verify_rh_lemma(fn("w"), job.get("side", "-"), _float(job, "p", math.inf, where), tol)
    elif lemma == "sshift":
        rep = verify_s_shift(fn("w"), p, tol)
    elif lemma == "jointrh":
        rep = verify_joint_rh(fn("v"), fn("w"), p, tol)
    elif lemma == "perturb":
        rep = verify_perturbation(fn("w"), fn("b"), p, int(_float(job, "t_count", 3, where)), tol)
    elif lemma == "conj":
        T = parse_operator(job.get("op", "fracint:alpha=0.5"), ctx.seed)
        k = int(_float(job, "k", 1, where))
        P = None
        if "radius" in job:
            P = ContourParams(_float(job, "radius", where=where), int(_float(job, "nodes", 64, where)), k)
        rep = verify_conjugation_consistency(T, fn("b"), fn("f"), k, P, tol)
    else:
        raise ConfigError(f"{where}.lemma: unknown lemma {lemma!r} (gap, rh, sshift, jointrh, perturb, conj)")
    return ("pass" if rep.passed else "fail"), rep.as_dict(), None


def _sweep_job(job, ctx, where):
    T = parse_operator(job.get("op", "maxplus"), ctx.seed)
    family = job.get("family")
    if not isinstance(family, str):
        raise ConfigError(f"{where}.family: expected a family string like 'power:delta={{0.5,1,2,4}},x0=1'")
    p = _float(job, "p", 2.0, where)
    params = {}
    if "exponent" in job:
        params["exponent"] = _float(job, "exponent", where=where)
    if "q" in job:
        params["q"] = _float(job, "q", where=where)
    res = norm_sweep(T, family, p, _float(job, "qin", p, where), _float(job, "qout", p, where),
                     job.get("class", "ap+"), grid=ctx.grid, theorem=job.get("theorem"),
                     margin=_float(job, "margin", 0.1, where), seed=int(job.get("seed", ctx.seed)),
                     params=params)
    rows = csv_text(res.csv_rows(), ["param", "constant", "norm_lb", "predicted_rhs"])
    return ("pass" if res.passed else "fail"), res.as_dict(), rows


def run_job(job: dict, ctx: Context, where: str = "job"):
    """Execute one job; returns ``(status, result, csv_text_or_None)``."""
    if not isinstance(job, dict):
        raise ConfigError(f"{where}: a job must be an object")
    kind = job.get("type")
    if kind == "constants":
        return _constants_job(job, ctx, where)
    if kind == "maximal":
        f = ctx.function(job.get("f"), f"{where}.f")
        out = maximal(f, Direction.parse(job.get("dir", "+")), job.get("method", "hull"))
        return "ok", {"dir": job.get("dir", "+"), "values": out.values}, None
    if kind == "fracint":
        f = ctx.function(job.get("f"), f"{where}.f")
        alpha = _float(job, "alpha", 0.5, where)
        return "ok", {"alpha": alpha, "values": fractional_integral_plus(f, alpha).values}, None
    if kind == "operator":
        T = parse_operator(job.get("op", "identity"), int(job.get("seed", ctx.seed)))
        out = T(ctx.function(job.get("f"), f"{where}.f")).values
        return "ok", {"op": T.name, "values": out.real if np.iscomplexobj(out) else out}, None
    if kind == "lorentz":
        p, q = _float(job, "p", where=where), _float(job, "q", where=where)
        val = lorentz_norm(ctx.function(job.get("f"), f"{where}.f"), ctx.function(job.get("weight"), f"{where}.weight"),
                           p, q)
        return "ok", {"p": p, "q": q, "value": val}, None
    if kind == "verify":
        return _lemma_job(job, ctx, where)
    if kind == "sweep":
        return _sweep_job(job, ctx, where)
    raise ConfigError(f"{where}.type: unknown job type {kind!r} "
                      "(constants, maximal, fracint, operator, lorentz, verify, sweep)")


def _safe_run(job, ctx, where):
    try:
        return run_job(job, ctx, where)
    except (OneSidedError, ConsistencyError, ValueError, OverflowError, ArithmeticError) as exc:
        return "error", {"error": f"{type(exc).__name__}: {exc}"}, None


# ---------------------------------------------------------------------------
# config files
# ---------------------------------------------------------------------------

def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse and validate an experiment config; errors carry ``source:line:col`` or a JSON path."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{source}: top level must be an object")
    allowed = {"grid", "jobs", "functions", "out", "seed", "mode", "tolerances"}
    extra = sorted(set(cfg) - allowed)
    if extra:
        raise ConfigError(f"{source}: unknown top-level keys {extra}")
    jobs = cfg.get("jobs", [])
    if not isinstance(jobs, list):
        raise ConfigError(f"{source}: 'jobs' must be a list")
    funcs = cfg.get("functions", {})
    if not isinstance(funcs, dict) or not all(isinstance(v, str) for v in funcs.values()):
        raise ConfigError(f"{source}: 'functions' must map names to spec strings")
    names = set()
    for i, job in enumerate(jobs):
        if not isinstance(job, dict) or "type" not in job:
            raise ConfigError(f"{source}: jobs[{i}] must be an object with a 'type'")
        name = str(job.get("name", f"job{i}"))
        if name in names:
            raise ConfigError(f"{source}: jobs[{i}].name {name!r} is used twice")
        names.add(name)
        for key in ("f", "weight", "weight2", "v", "w", "b"):
            if key in job and job[key] not in funcs:
                raise ConfigError(f"{source}: jobs[{i}].{key} refers to undeclared function {job[key]!r}")
    return cfg


def _file_stem(i: int, name: str) -> str:
    safe = "".join(ch if ch.isalnum() or ch in "-_" else "_" for ch in name)
    return f"{i:03d}_{safe}"


def run_config(cfg: dict, out_dir: Path, threads: int = 1, *, grid: Optional[Grid] = None,
               seed: Optional[int] = None, mode: Optional[str] = None) -> int:
    """Run every job of ``cfg``; write one report per job plus ``index.json``. Returns the exit code."""
    try:
        g = grid or parse_grid(cfg.get("grid", DEFAULT_GRID))
        ctx = Context(g, Mode.parse(mode or cfg.get("mode", "full")), int(seed if seed is not None else cfg.get("seed", 0)),
                      dict(cfg.get("functions", {})), dict(cfg.get("tolerances", {})))
    except OneSidedError as exc:
        raise ConfigError(f"config: {exc}") from None
    jobs = cfg.get("jobs", [])
    # synthesize declared functions up front so worker threads only read the cache
    for name in sorted(ctx.declared):
        ctx.function(name, f"functions.{name}")
    args = [(job, ctx, f"jobs[{i}]") for i, job in enumerate(jobs)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda a: _safe_run(*a), args))
    else:
        results = [_safe_run(*a) for a in args]

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from None
    index = {"schema": SCHEMA, "version": __version__, "grid": format_grid(g), "seed": ctx.seed, "jobs": []}
    code = EXIT_OK
    for i, (job, (status, result, rows)) in enumerate(zip(jobs, results)):
        name = str(job.get("name", f"job{i}"))
        stem = _file_stem(i, name)
        report = {"schema": SCHEMA, "name": name, "type": job["type"], "status": status, "job": job,
                  "result": result}
        entry = {"name": name, "type": job["type"], "status": status, "report": stem + ".json"}
        _write(out_dir / (stem + ".json"), dumps(report))
        if rows is not None:
            _write(out_dir / (stem + ".csv"), rows)
            entry["csv"] = stem + ".csv"
        if status in ("fail", "error"):
            code = EXIT_FAIL
        index["jobs"].append(entry)
    index["exit"] = code
    _write(out_dir / "index.json", dumps(index))
    return code


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from None


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress: bool):
        # subcommands repeat the global flags; SUPPRESS keeps them from resetting values given earlier
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        g = argparse.ArgumentParser(add_help=False)
        g.add_argument("--grid", default=d(None), help=f"grid spec (default {DEFAULT_GRID})")
        g.add_argument("--mode", choices=["full", "dyadic"], default=d(None), help="enumeration mode")
        g.add_argument("--seed", type=int, default=d(None), help="seed for random test functions and signs")
        g.add_argument("--out", default=d(None), help="output directory (default: print to stdout)")
        g.add_argument("--threads", type=int, default=d(None), help="worker threads for 'run' (default: CPU count)")
        return g

    common = global_flags(True)
    ap = argparse.ArgumentParser(prog="onesided", parents=[global_flags(False)],
                                 description="Exact grid computations for one-sided weights and operators.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", parents=[common], help="weight-class constant")
    c.add_argument("--class", dest="cls", required=True,
                   choices=[k.value for k in WeightClass], help="weight class")
    c.add_argument("--p", type=float)
    c.add_argument("--q", type=float)
    c.add_argument("--t", type=int, default=4, help="gap factor for --class=gap")
    c.add_argument("--weight", required=True, help="weight spec (w)")
    c.add_argument("--weight2", help="second weight v of a pair (v, w)")

    m = sub.add_parser("maximal", parents=[common], help="one-sided maximal function")
    m.add_argument("--f", required=True)
    m.add_argument("--dir", default="+", choices=["+", "-"])
    m.add_argument("--method", default="hull", choices=["hull", "naive"])

    fi = sub.add_parser("fracint", parents=[common], help="one-sided fractional integral")
    fi.add_argument("--f", required=True)
    fi.add_argument("--alpha", type=float, default=0.5)

    lz = sub.add_parser("lorentz", parents=[common], help="weighted Lorentz norm")
    lz.add_argument("--p", type=float, required=True)
    lz.add_argument("--q", required=True, help="number or 'inf'")
    lz.add_argument("--weight", required=True)
    lz.add_argument("--f", required=True)

    v = sub.add_parser("verify", parents=[common], help="verify one inequality")
    v.add_argument("--lemma", required=True, choices=["gap", "rh", "sshift", "jointrh", "perturb", "conj"])
    for name in ("v", "w", "b", "f"):
        v.add_argument(f"--{name}")
    v.add_argument("--p")
    v.add_argument("--t", type=int)
    v.add_argument("--tol", type=float)
    v.add_argument("--side", choices=["+", "-"])
    v.add_argument("--k", type=int)
    v.add_argument("--op")
    v.add_argument("--nodes", type=int)
    v.add_argument("--radius", type=float)
    v.add_argument("--t-count", dest="t_count", type=int)
    v.add_argument("--lhs-kind", dest="lhs_kind", choices=["two_sided", "plus"])

    s = sub.add_parser("sweep", parents=[common], help="norm-versus-constant regression over a family")
    s.add_argument("--op", required=True)
    s.add_argument("--family", required=True, help="e.g. 'power:delta={0.25,0.5,1,2,4},x0=1'")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--qin")
    s.add_argument("--qout")
    s.add_argument("--class", dest="cls", default="ap+")
    s.add_argument("--theorem")
    s.add_argument("--exponent", type=float)

    r = sub.add_parser("run", parents=[common], help="run a JSON experiment config")
    r.add_argument("config")

    cal = sub.add_parser("calibrate", parents=[common], help="re-measure the absolute constants")
    cal.add_argument("--n", type=int, default=256)
    cal.add_argument("--path", help="where to write the calibration file")
    return ap


def _job_from_args(a) -> dict:
    cmd = a.command
    if cmd == "constants":
        job = {"type": "constants", "class": a.cls, "p": a.p, "q": a.q, "t": a.t, "weight": a.weight,
               "weight2": a.weight2}
    elif cmd == "maximal":
        job = {"type": "maximal", "f": a.f, "dir": a.dir, "method": a.method}
    elif cmd == "fracint":
        job = {"type": "fracint", "f": a.f, "alpha": a.alpha}
    elif cmd == "lorentz":
        job = {"type": "lorentz", "p": a.p, "q": a.q, "weight": a.weight, "f": a.f}
    elif cmd == "verify":
        job = {"type": "verify", "lemma": a.lemma}
        for key in ("v", "w", "b", "f", "p", "t", "tol", "side", "k", "op", "nodes", "radius", "t_count",
                    "lhs_kind"):
            val = getattr(a, key)
            if val is not None:
                job[key] = val
    else:
        job = {"type": "sweep", "op": a.op, "family": a.family, "p": a.p, "class": a.cls}
        for key in ("qin", "qout", "theorem", "exponent"):
            val = getattr(a, key)
            if val is not None:
                job[key] = val
    return {k: v for k, v in job.items() if v is not None}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    threads = a.threads if a.threads is not None else (os.cpu_count() or 1)
    try:
        grid = parse_grid(a.grid) if a.grid else None
        if a.command == "run":
            path = Path(a.config)
            try:
                text = path.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {path}: {exc}") from None
            cfg = parse_config(text, str(path))
            out = Path(a.out or cfg.get("out", "results"))
            return run_config(cfg, out, max(1, threads), grid=grid, seed=a.seed, mode=a.mode)
        if a.command == "calibrate":
            from .verify import calibrate
            cal = calibrate(a.n, a.path)
            sys.stdout.write(dumps({"schema": SCHEMA, "calibration": cal.as_dict()}))
            return EXIT_OK
        ctx = Context(grid or parse_grid(DEFAULT_GRID), Mode.parse(a.mode or "full"), a.seed or 0)
        job = _job_from_args(a)
        status, result, rows = run_job(job, ctx, a.command)
    except (OneSidedError, ValueError, ArithmeticError, OverflowError) as exc:
        sys.stderr.write(f"onesided: error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"onesided: error: {exc}\n")
        return EXIT_USAGE
    report = {"schema": SCHEMA, "type": job["type"], "grid": format_grid(ctx.grid), "status": status,
              "result": result}
    text = dumps(report)
    if a.out:
        out = Path(a.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out / f"{a.command}.json", text)
        if rows is not None:
            _write(out / f"{a.command}.csv", rows)
    else:
        # stdout carries the JSON report only; the sweep table needs --out
        sys.stdout.write(text)
    return EXIT_FAIL if status == "fail" else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
