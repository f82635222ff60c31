"""Command-line front end.

    levysup sup --model stable_drift --alpha 1.5 --c 1 --u 1 --horizon inf
    levysup mc sup --model brownian --u 1 --T 1 --paths 100000 --seed 7
    levysup table --sweep u:0.1:5:50:log sup --model stable_drift --alpha 1.5 --c 1 --horizon inf
    levysup verify --suite all --seed 42

Exit status: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shlex
import sys
from typing import Optional

import numpy as np

from . import __version__
from . import formulas as fm
from .models import AtomicLawError, CompoundPoissonDrift, MODEL_KEYS, model_from_spec
from .montecarlo import SimConfig, mc_first_passage, mc_joint_inf_terminal, mc_sup_prob
from .quadrature import IntegrandNaNError, NonIntegrableError
from .stable import MittagLefflerDomainError

MODEL_FLAGS = ("alpha", "sigma", "c", "vol", "lam", "mu_rate")
# Flags a table sweep may vary: numeric, real-valued, and not the stability index.
SWEEPABLE = {"u", "x", "z", "t", "T", "horizon", "c", "sigma", "vol", "lam", "mu_rate"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _real(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a real number, got {text!r}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _horizon(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return _real(text)


def _count(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _bins(text: str) -> list[float]:
    try:
        return [float(b) for b in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated bin edges, got {text!r}")


def _default_workers() -> int:
    raw = os.environ.get("LEVYSUP_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"LEVYSUP_WORKERS must be a positive integer, got {raw!r}")


def _add_model(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, choices=sorted(MODEL_KEYS))
    for flag in MODEL_FLAGS:
        p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=_real)


def _add_output(p: argparse.ArgumentParser, default: str = "json"):
    p.add_argument("--output", choices=("json", "csv"), default=default)
    p.add_argument("--output-file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="levysup", description="Supremum laws of spectrally one-sided Levy processes.")
    parser.add_argument("--version", action="version", version=f"levysup {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("pdf", help="marginal density of X(t)")
    _add_model(p)
    p.add_argument("--x", type=_real, required=True)
    p.add_argument("--t", type=_real, required=True)
    _add_output(p)

    p = sub.add_parser("sup", help="P(sup X > u) over a finite or infinite horizon")
    _add_model(p)
    p.add_argument("--u", type=_real, required=True)
    p.add_argument("--horizon", type=_horizon, required=True)
    _add_output(p)

    p = sub.add_parser("kendall", help="first-passage CDF of Y")
    _add_model(p)
    p.add_argument("--z", type=_real, required=True)
    p.add_argument("--T", type=_real, required=True)
    _add_output(p)

    p = sub.add_parser("joint", help="joint density of the infimum event and the terminal value of Y")
    _add_model(p)
    p.add_argument("--x", type=_real, required=True)
    p.add_argument("--z", type=_real, required=True)
    p.add_argument("--T", type=_real, required=True)
    _add_output(p)

    p = sub.add_parser("takacs", help="Takacs formulas for the compound Poisson model")
    _add_model(p)
    p.add_argument("--u", type=_real, required=True)
    p.add_argument("--horizon", type=_horizon, required=True)
    _add_output(p)

    p = sub.add_parser("mc", help="Monte Carlo oracles")
    p.add_argument("kind", choices=("sup", "passage", "joint"))
    _add_model(p)
    p.add_argument("--u", type=_real)
    p.add_argument("--z", type=_real)
    p.add_argument("--x", type=_real)
    p.add_argument("--bins", type=_bins)
    p.add_argument("--T", type=_real, required=True)
    p.add_argument("--paths", type=_count, default=100_000)
    p.add_argument("--steps", type=_count, default=2 ** 13)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--workers", type=_count)
    _add_output(p)

    p = sub.add_parser("verify", help="run acceptance suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=_seed, default=42)
    _add_output(p)

    p = sub.add_parser("table", help="sweep one numeric flag of a base request")
    p.add_argument("--sweep", required=True, help="flag:from:to:points:lin|log")
    _add_output(p, default="csv")
    p.add_argument("base", nargs=argparse.REMAINDER)
    return parser


def expand_args_files(argv: list[str]) -> list[str]:
    """Splice `--args-file PATH` (one flag per line, # comments) into argv."""
    out = []
    it = iter(argv)
    for token in it:
        if token == "--args-file" or token.startswith("--args-file="):
            path = token.split("=", 1)[1] if "=" in token else next(it, None)
            if path is None:
                raise UsageError("--args-file needs a path")
            try:
                with open(path) as fh:
                    lines = fh.read().splitlines()
            except OSError as exc:
                raise UsageError(f"--args-file: cannot read {path}: {exc.strerror}")
            for line in lines:
                line = line.strip()
                if line and not line.startswith("#"):
                    out.extend(shlex.split(line))
        else:
            out.append(token)
    return out


def _model_of(ns) -> tuple:
    spec = {"model": ns.model}
    for flag in MODEL_FLAGS:
        value = getattr(ns, flag)
        if value is not None:
            spec[flag] = value
    try:
        model = model_from_spec(spec)
    except ValueError as exc:
        bad = str(exc)
        raise UsageError(f"--model {ns.model}: {bad.replace('mu_rate', 'mu-rate')}")
    echo = dict(model.to_spec())
    return model, echo


def _probability_record(base: dict, est: fm.ProbabilityEstimate) -> dict:
    return {**base, "value": est.value, "error_estimate": est.error_estimate,
            "method": est.method, "detail": est.detail}


def _need(ns, *flags):
    for f in flags:
        if getattr(ns, f) is None:
            raise UsageError(f"mc {ns.kind}: --{f} is required")


def _run_request(ns) -> list[dict]:
    model, echo = _model_of(ns)
    base = {"command": ns.command, **echo, "version": __version__}
    if ns.command == "pdf":
        base.update(x=ns.x, t=ns.t)
        if ns.t <= 0:
            raise UsageError("--t must be positive")
        if isinstance(model, CompoundPoissonDrift):
            raise UsageError("--model cpoisson: the marginal law has an atom at -c t and no density; "
                             "the jump-sum part is available from the library as cp_jumpsum_density")
        return [{**base, "value": float(model.density(ns.x, ns.t)), "method": "quadrature"}]
    if ns.command == "sup":
        base.update(u=ns.u, horizon=_render_horizon(ns.horizon))
        if isinstance(model, CompoundPoissonDrift):
            raise UsageError("--model cpoisson is finite variation: use the takacs subcommand")
        if math.isinf(ns.horizon):
            est = fm.sup_infinite(model, ns.u)
        else:
            est = fm.sup_finite(model, ns.u, ns.horizon)
        return [_probability_record(base, est)]
    if ns.command == "takacs":
        base.update(u=ns.u, horizon=_render_horizon(ns.horizon))
        if not isinstance(model, CompoundPoissonDrift):
            raise UsageError("takacs needs --model cpoisson")
        est = fm.takacs_infinite(model, ns.u) if math.isinf(ns.horizon) else fm.takacs_finite(model, ns.u, ns.horizon)
        return [_probability_record(base, est)]
    if ns.command == "kendall":
        base.update(z=ns.z, T=ns.T)
        return [_probability_record(base, fm.kendall_first_passage_cdf(model, ns.z, ns.T))]
    if ns.command == "joint":
        base.update(x=ns.x, z=ns.z, T=ns.T)
        return [{**base, "value": fm.joint_inf_terminal_density(model, ns.x, ns.z, ns.T), "method": "quadrature"}]
    if ns.command == "mc":
        workers = ns.workers if ns.workers is not None else _default_workers()
        cfg = SimConfig(ns.paths, ns.steps, ns.seed, workers)
        base.update(kind=ns.kind, T=ns.T, paths=ns.paths, steps=ns.steps, seed=ns.seed, workers=workers)
        if ns.kind == "sup":
            _need(ns, "u")
            base["u"] = ns.u
            ests = [mc_sup_prob(model, ns.u, ns.T, cfg)]
        elif ns.kind == "passage":
            _need(ns, "z")
            base["z"] = ns.z
            if isinstance(model, CompoundPoissonDrift):
                raise UsageError("mc passage: grid simulation does not cover --model cpoisson")
            ests = [mc_first_passage(model, ns.z, ns.T, cfg)]
        else:
            _need(ns, "x", "bins")
            if isinstance(model, CompoundPoissonDrift):
                raise UsageError("mc joint: grid simulation does not cover --model cpoisson")
            base["x"] = ns.x
            base["bins"] = ",".join(repr(b) for b in ns.bins)
            ests = mc_joint_inf_terminal(model, ns.x, ns.bins, ns.T, cfg)
        records = []
        for i, est in enumerate(ests):
            rec = {**base, "value": est.value, "stderr": est.stderr, "n_paths": est.n_paths,
                   "bias_note": est.bias_note}
            if ns.kind == "joint":
                rec.update(bin=i, bin_lo=ns.bins[i], bin_hi=ns.bins[i + 1])
            records.append(rec)
        return records
    raise UsageError(f"unknown command {ns.command}")


def _render_horizon(h: float):
    return "inf" if math.isinf(h) else h


def _run_verify(ns) -> tuple[list[dict], bool]:
    from .verify import run_suite

    try:
        results = run_suite(ns.suite, ns.seed)
    except KeyError as exc:
        raise UsageError(f"--suite: {exc.args[0]}")
    records = [{"command": "verify", "suite": ns.suite, "seed": ns.seed, "criterion": r.criterion,
                "check": r.name, "passed": r.passed, "detail": r.detail, "version": __version__}
               for r in results]
    return records, all(r.passed for r in results)


def _parse_sweep(text: str):
    parts = text.split(":")
    if len(parts) != 5:
        raise UsageError("--sweep: expected flag:from:to:points:lin|log")
    flag, lo, hi, points, spacing = parts
    flag = flag.lstrip("-").replace("-", "_")
    if flag not in SWEEPABLE:
        raise UsageError(f"--sweep: {flag!r} is not a numeric sweep axis; choose from {sorted(SWEEPABLE)}")
    try:
        lo_f, hi_f, n = float(lo), float(hi), int(points)
    except ValueError:
        raise UsageError(f"--sweep: bad numbers in {text!r}")
    if n < 1:
        raise UsageError("--sweep: points must be >= 1")
    if spacing == "lin":
        grid = np.linspace(lo_f, hi_f, n)
    elif spacing == "log":
        if lo_f <= 0 or hi_f <= 0:
            raise UsageError("--sweep: log spacing needs positive end points")
        grid = np.geomspace(lo_f, hi_f, n)
    else:
        raise UsageError(f"--sweep: spacing must be lin or log, got {spacing!r}")
    return flag, [float(g) for g in grid]


def _run_table(ns, parser) -> list[dict]:
    flag, grid = _parse_sweep(ns.sweep)
    base = list(ns.base)
    if not base or base[0] in ("table", "verify"):
        raise UsageError("table: the base request must be pdf, sup, kendall, joint, takacs or mc")
    option = "--" + flag.replace("_", "-")
    if option in base or any(b.startswith(option + "=") for b in base):
        raise UsageError(f"table: {option} is swept and must not also appear in the base request")
    records = []
    for value in grid:
        sub_ns = parser.parse_args(base + [option, repr(value)])
        for rec in _run_request(sub_ns):
            records.append({**rec, "sweep": flag})
    return records


def _fmt_csv(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def render(records: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(r, allow_nan=False) + "\n" for r in records)
    fields = sorted({k for r in records for k in r})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in records:
        writer.writerow([_fmt_csv(r[k]) if k in r else "" for k in fields])
    return buf.getvalue()


def record_to_argv(record: dict) -> list[str]:
    """Flags that re-run the request a record came from."""
    cmd = record["command"]
    argv = [cmd]
    if cmd == "mc":
        argv.append(record["kind"])
    argv += ["--model", record["model"]]
    inputs = [k for k in MODEL_FLAGS if k in record]
    inputs += {
        "pdf": ["x", "t"],
        "sup": ["u", "horizon"],
        "takacs": ["u", "horizon"],
        "kendall": ["z", "T"],
        "joint": ["x", "z", "T"],
        "mc": [k for k in ("u", "z", "x", "bins", "T", "paths", "steps", "seed", "workers") if k in record],
    }[cmd]
    for key in inputs:
        value = record[key]
        argv += ["--" + key.replace("_", "-"), value if isinstance(value, str) else repr(value)]
    return argv


def run(argv: list[str], stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        argv = expand_args_files(list(argv))
        ns = parser.parse_args(argv)
        ok = True
        if ns.command == "verify":
            records, ok = _run_verify(ns)
        elif ns.command == "table":
            records = _run_table(ns, parser)
        else:
            records = _run_request(ns)
        text = render(records, ns.output)
        if ns.output_file:
            with open(ns.output_file, "w") as fh:
                fh.write(text)
        else:
            stdout.write(text)
        return 0 if ok else 1
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except (IntegrandNaNError, NonIntegrableError, MittagLefflerDomainError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return 1
    except (AtomicLawError, ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=stderr)
        return 2
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return 1


def run_capture(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def round_trip_matches(seed: int = 42) -> bool:
    """Re-run a formula record and an MC record from their own fields."""
    requests = [
        ["sup", "--model", "stable_drift", "--alpha", "1.5", "--c", "1", "--u", "1", "--horizon", "inf"],
        ["mc", "sup", "--model", "brownian", "--u", "0.5", "--T", "1", "--paths", "500",
         "--steps", "64", "--seed", str(seed), "--workers", "1"],
    ]
    for argv in requests:
        code, text, _ = run_capture(argv)
        if code != 0:
            return False
        first = json.loads(text.splitlines()[0])
        code, again, _ = run_capture(record_to_argv(first))
        if code != 0 or json.loads(again.splitlines()[0]) != first:
            return False
    return True


def main(argv: Optional[list[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())
