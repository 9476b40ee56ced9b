"""Command-line surface: verification suites, separation curves, simulation.

Every run that produces outputs also writes a RunManifest (manifest.json)
into the output directory, atomically, so results can be replayed exactly
from the recorded configuration and seed.  Wall-clock timings and the
worker count live under the manifest's "execution" member; everything
outside that member is deterministic for a fixed seed.

Exit codes: 0 all checks pass / outputs written; 1 property or precision
failure; 2 usage error (bad flags, level caps, malformed values).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__ as VERSION
from . import graphs, kernels, montecarlo, permutations, semidiscrete, separation
from .kernels import LevelCapError, fraction_str, parse_fraction
from .separation import PrecisionError

EXACT_CAP = 6


class UsageError(Exception):
    pass


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"missing required option(s): {flags}")


def _parse_int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {text!r}") from None


def _parse_rational(text: str, name: str) -> Fraction:
    """Strict a/b (or integer) syntax; bare floats are rejected."""
    try:
        return parse_fraction(text)
    except ValueError as exc:
        raise UsageError(f"{name}: {exc}") from None


def _parse_eps(text: str, name: str) -> Fraction:
    # decimal strings stay exact through Fraction, so allow them here
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{name} must be rational, got {text!r}") from None


def _parse_grid(text: str, name: str, integer: bool = False) -> list:
    """Grid syntax: a single value, "start..end", or "start..end:step".

    Values are exact Fractions (ints for integer grids); a missing step
    means 1 for integer grids and (end - start)/49 otherwise, so a bare
    float range yields 50 evenly spaced points.
    """
    convert = (lambda s: int(s)) if integer else (lambda s: Fraction(s))
    try:
        if ".." not in text:
            return [convert(text)]
        span, _, step_text = text.partition(":")
        start_text, _, end_text = span.partition("..")
        start, end = convert(start_text), convert(end_text)
        if end < start:
            raise ValueError("end is below start")
        if step_text:
            step = convert(step_text)
        elif integer:
            step = 1
        elif end == start:
            return [start]
        else:
            step = Fraction(end - start, 49)
        if step <= 0:
            raise ValueError("step must be positive")
        out = []
        value = start
        while value <= end:
            out.append(value)
            value = value + step
        return out
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{name}: bad grid {text!r} ({exc})") from None


def _chain(instance: str, p: Fraction):
    if instance == "perm":
        return permutations.chain(p, max_level=EXACT_CAP)
    if instance == "graph":
        return graphs.chain(p, max_level=EXACT_CAP)
    raise UsageError(f"instance must be perm or graph, got {instance!r}")


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    master_seed: int
    version: str
    execution: dict
    outputs: list

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        payload = {
            "subcommand": self.subcommand,
            "config": self.config,
            "master_seed": self.master_seed,
            "version": self.version,
            "execution": self.execution,
            "outputs": self.outputs,
        }
        _atomic_write(path, (json.dumps(payload, indent=2) + "\n").encode())
        return path


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def _fmt(value) -> str:
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


# --- subcommand handlers ---------------------------------------------------
# each returns (exit_code, config_echo, outputs, workers)


def _cmd_verify(args, out_dir: Path):
    _require(args, "instance", "nmax", "p")
    nmax = _parse_int(args.nmax, "--nmax")
    p = _parse_rational(args.p, "--p")
    spec = _chain(args.instance, p)
    report = kernels.verification_report(spec, nmax)
    out = out_dir / "verify_report.json"
    _atomic_write(out, (json.dumps(report, indent=2) + "\n").encode())
    for check in report["checks"]:
        status = "PASS" if check["passed"] else "FAIL"
        print(f"{status} {check['name']}")
        if not check["passed"] and check["counterexample"]:
            print(f"     first counterexample: {check['counterexample']}")
    echo = {"instance": args.instance, "nmax": nmax, "p": fraction_str(p)}
    return (0 if report["all_passed"] else 1), echo, [out.name], None


def _append_eta_columns(row: list[str], t: Fraction) -> None:
    row.append(repr(separation.eta_product_residual(t)))
    row.append(repr(separation.eta_symmetry_residual(t)))


def _cmd_sepdist(args, out_dir: Path):
    _require(args, "mode")
    mode = args.mode
    check_eta = bool(args.check_eta)
    p_text = "NA" if args.p is None else fraction_str(_parse_rational(args.p, "--p"))
    header = ["mode", "n", "p", "abscissa", "value", "method", "err_bound"]
    if check_eta:
        if mode != "limit":
            raise UsageError("--check-eta applies to --mode limit only")
        header += ["eta_product_residual", "eta_symmetry_residual"]
    rows: list[list[str]] = []
    if mode == "discrete":
        _require(args, "n", "m")
        n = _parse_int(args.n, "--n")
        for m in _parse_grid(args.m, "--m", integer=True):
            sv = separation.sepdist_discrete(n, m)
            rows.append(
                ["discrete", str(n), p_text, str(m), _fmt(sv.value), sv.method,
                 _fmt(sv.err_bound)]
            )
    elif mode == "continuous":
        _require(args, "n", "t")
        n = _parse_int(args.n, "--n")
        for t in _parse_grid(args.t, "--t"):
            sv = separation.sepdist_continuous(n, float(t))
            rows.append(
                ["continuous", str(n), p_text, _fmt(float(t)), _fmt(sv.value),
                 sv.method, _fmt(sv.err_bound)]
            )
    elif mode == "limit":
        _require(args, "t")
        for t in _parse_grid(args.t, "--t"):
            sv = separation.sepdist_limit(float(t))
            row = ["limit", "NA", p_text, _fmt(float(t)), _fmt(sv.value),
                   sv.method, _fmt(sv.err_bound)]
            if check_eta:
                _append_eta_columns(row, float(t))
            rows.append(row)
    else:
        raise UsageError(f"mode must be discrete/continuous/limit, got {mode!r}")
    out = out_dir / "sepdist.csv"
    _write_csv(out, header, rows)
    print(f"wrote {len(rows)} rows to {out}")
    echo = {
        "mode": mode,
        "n": args.n,
        "p": None if args.p is None else p_text,
        "m": args.m,
        "t": args.t,
        "check_eta": check_eta,
    }
    return 0, echo, [out.name], None


def _cmd_simulate(args, out_dir: Path):
    _require(args, "instance", "n", "p", "pattern", "t", "traj")
    n = _parse_int(args.n, "--n")
    p = _parse_rational(args.p, "--p")
    traj = _parse_int(args.traj, "--traj")
    workers = 1 if args.workers is None else _parse_int(args.workers, "--workers")
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    initial = args.initial if args.initial is not None else "stationary"
    grid = tuple(float(t) for t in _parse_grid(args.t, "--t"))
    config = montecarlo.SimConfig(
        instance=args.instance, n=n, p=p, t_grid=grid,
        trajectories=traj, master_seed=args.seed, initial=initial,
    )
    curve = montecarlo.estimate_density_curve(config, args.pattern, workers)
    rows = []
    for i, t in enumerate(curve.t):
        rows.append(
            [args.instance, str(n), fraction_str(p), curve.pattern, _fmt(t),
             _fmt(curve.estimates[i]), _fmt(curve.stderrs[i]),
             _fmt(curve.predictions[i])]
        )
    out = out_dir / "density_curve.csv"
    _write_csv(
        out,
        ["instance", "n", "p", "pattern", "t", "estimate", "stderr", "prediction"],
        rows,
    )
    print(f"wrote {len(rows)} rows to {out}")
    echo = {
        "instance": args.instance, "n": n, "p": fraction_str(p),
        "pattern": curve.pattern, "t": args.t, "traj": traj, "initial": initial,
    }
    return 0, echo, [out.name], workers


def _cmd_frames(args, out_dir: Path):
    _require(args, "instance", "n", "steps")
    n = _parse_int(args.n, "--n")
    p = _parse_rational(args.p, "--p") if args.p is not None else Fraction(1, 2)
    steps = _parse_grid(args.steps, "--steps", integer=True)
    default_initial = "identity" if args.instance == "perm" else "empty"
    initial = args.initial if args.initial is not None else default_initial
    config = montecarlo.SimConfig(
        instance=args.instance, n=n, p=p, t_grid=(0.0,),
        trajectories=1, master_seed=args.seed, initial=initial,
    )
    names = montecarlo.emit_frames(config, steps, out_dir)
    print(f"wrote {len(names)} frames to {out_dir}")
    echo = {
        "instance": args.instance, "n": n, "p": fraction_str(p),
        "steps": args.steps, "initial": initial,
    }
    return 0, echo, list(names), None


def _cmd_stationary(args, out_dir: Path):
    _require(args, "instance", "n", "p")
    n = _parse_int(args.n, "--n")
    p = _parse_rational(args.p, "--p")
    spec = _chain(args.instance, p)
    masses = kernels.stationary(spec, n)
    states = kernels.level_states(spec, n)
    payload = {
        "instance": args.instance,
        "n": n,
        "p": fraction_str(p),
        "distribution": {s: fraction_str(w) for s, w in zip(states, masses)},
    }
    out = out_dir / "stationary.json"
    _atomic_write(out, (json.dumps(payload, indent=2) + "\n").encode())
    print(f"wrote stationary distribution on {len(states)} states to {out}")
    echo = {"instance": args.instance, "n": n, "p": fraction_str(p)}
    return 0, echo, [out.name], None


def _cmd_semidiscrete(args, out_dir: Path):
    _require(args, "sigma", "pi", "p", "eps")
    sigma = permutations.parse_permutation(args.sigma)
    pi = permutations.parse_permutation(args.pi)
    p = _parse_rational(args.p, "--p")
    eps = _parse_eps(args.eps, "--eps")
    if not 0 < eps < 1:
        raise UsageError("--eps must lie strictly between 0 and 1")
    mu = semidiscrete.PermutationSquares(sigma)
    poly = semidiscrete.inf_eps_polynomial(pi, p, mu)
    report = semidiscrete.generator_limit_check(mu, pi, p)
    payload = {
        "sigma": permutations.format_permutation(sigma),
        "pattern": report["pattern"],
        "p": fraction_str(p),
        "eps": fraction_str(eps),
        "density": fraction_str(mu.density(pi)),
        "eps_polynomial": [fraction_str(c) for c in poly.coefficients],
        "expected_density_at_eps": fraction_str(poly.evaluate(eps)),
        "generator_at_eps": fraction_str(
            semidiscrete.generator_eps(mu, pi, p, eps)
        ),
        "constant_coefficient_zero": report["constant_coefficient_zero"],
        "linear_coefficient_zero": report["linear_coefficient_zero"],
        "quadratic_identity": report["quadratic_identity"],
        "limit_value": fraction_str(report["limit_value"]),
        "claimed_value": fraction_str(report["claimed_value"]),
    }
    out = out_dir / "semidiscrete_report.json"
    _atomic_write(out, (json.dumps(payload, indent=2) + "\n").encode())
    ok = (
        report["constant_coefficient_zero"]
        and report["linear_coefficient_zero"]
        and report["quadratic_identity"]
    )
    print(("PASS" if ok else "FAIL") + f" generator expansion for {report['pattern']}")
    echo = {
        "sigma": payload["sigma"], "pi": payload["pattern"],
        "p": payload["p"], "eps": payload["eps"],
    }
    return (0 if ok else 1), echo, [out.name], None


_HANDLERS = {
    "verify": _cmd_verify,
    "sepdist": _cmd_sepdist,
    "simulate": _cmd_simulate,
    "frames": _cmd_frames,
    "stationary": _cmd_stationary,
    "semidiscrete": _cmd_semidiscrete,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master RNG seed")
    common.add_argument("--out-dir", default=None, help="output directory")
    common.add_argument(
        "--config", default=None, help="key=value file; flags take precedence"
    )

    parser = argparse.ArgumentParser(
        prog="updown",
        description="Exact analysis and simulation of up-down duplication chains.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("verify", parents=[common], help="exact property suite")
    sp.add_argument("--instance", choices=["perm", "graph"])
    sp.add_argument("--nmax")
    sp.add_argument("--p", help='rational, e.g. "1/3"')

    sp = sub.add_parser("sepdist", parents=[common], help="separation curves")
    sp.add_argument("--mode", choices=["discrete", "continuous", "limit"])
    sp.add_argument("--n")
    sp.add_argument("--p")
    sp.add_argument("--m", help="step grid, e.g. 0..5")
    sp.add_argument("--t", help="time grid, e.g. 0.05..10:0.05")
    sp.add_argument(
        "--check-eta", action="store_const", const=True, default=None,
        help="add product/symmetry residual columns (limit mode)",
    )

    sp = sub.add_parser("simulate", parents=[common], help="density curve MC")
    sp.add_argument("--instance", choices=["perm", "graph"])
    sp.add_argument("--n")
    sp.add_argument("--p")
    sp.add_argument("--pattern")
    sp.add_argument("--t", help="time grid, e.g. 0..2:0.1")
    sp.add_argument("--traj")
    sp.add_argument("--workers")
    sp.add_argument("--initial")

    sp = sub.add_parser("frames", parents=[common], help="PGM trajectory frames")
    sp.add_argument("--instance", choices=["perm", "graph"])
    sp.add_argument("--n")
    sp.add_argument("--p")
    sp.add_argument("--steps", help="step grid, e.g. 0..1500:50")
    sp.add_argument("--initial")

    sp = sub.add_parser("stationary", parents=[common], help="exact stationary law")
    sp.add_argument("--instance", choices=["perm", "graph"])
    sp.add_argument("--n")
    sp.add_argument("--p")

    sp = sub.add_parser(
        "semidiscrete", parents=[common], help="inflation generator report"
    )
    sp.add_argument("--sigma", help="base permutation")
    sp.add_argument("--pi", help="pattern")
    sp.add_argument("--p")
    sp.add_argument("--eps")
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line is not key=value: {raw!r}")
        out[key.strip().replace("-", "_")] = value.strip().strip('"')
    return out


def _merge_config(args: argparse.Namespace) -> None:
    if args.config is None:
        return
    for key, value in _load_config_file(args.config).items():
        if not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            if key == "seed":
                value = int(value)
            elif key == "check_eta":
                value = value.lower() in ("1", "true", "yes")
            setattr(args, key, value)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        _merge_config(args)
        if args.seed is None:
            args.seed = 0
        out_dir = Path(args.out_dir) if args.out_dir is not None else Path(".")
        out_dir.mkdir(parents=True, exist_ok=True)
        code, echo, outputs, workers = _HANDLERS[args.subcommand](args, out_dir)
    except PrecisionError as exc:
        print(f"precision failure: {exc}", file=sys.stderr)
        return 1
    except (UsageError, LevelCapError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = RunManifest(
        subcommand=args.subcommand,
        config=echo,
        master_seed=args.seed,
        version=VERSION,
        execution={
            "wall_clock_seconds": time.perf_counter() - started,
            "workers": workers,
        },
        outputs=outputs,
    )
    manifest.write(out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
