"""``fraclap`` command line: solve, convergence, control, eigs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import _validation as v
from .elliptic import (
    NumericalFailure,
    convergence_study,
    hs_error,
    linf_error,
    loglog_slope,
    solve_elliptic,
)
from .evolution import make_region
from .hum import CONVENTIONS, controllability_study, make_setup, minimize_dual, penalty_from_rule
from .io import (
    CONTROL_COLUMNS,
    CONVERGENCE_COLUMNS,
    SOLUTION_COLUMNS,
    SPECTRUM_COLUMNS,
    TRAJECTORY_COLUMNS,
    error_report_rows,
    trajectory_rows,
    write_csv,
    write_json,
)
from .mesh import FracProblem, assemble_load
from .spectral import discrete_spectrum

log = logging.getLogger("fraclap")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

DEFAULTS = {
    "s": "0.5",
    "L": "1.0",
    "N": "50",
    "f": "one",
    "method": "cholesky",
    "T": "0.3",
    "M": "2000",
    "omega": "-0.3,0.8",
    "eps": "h",
    "tol": "1e-8",
    "max_iter": "1000",
    "K": "10",
    "jobs": "1",
    "seed": "0",
    "out": "results",
    "dump_trajectory": "none",
}

COMMAND_KEYS = {
    "solve": ("s", "L", "N", "f", "method"),
    "convergence": ("s", "L", "N", "f", "method", "jobs"),
    "control": ("s", "L", "N", "T", "M", "omega", "eps", "tol", "max_iter", "jobs", "dump_trajectory"),
    "eigs": ("s", "L", "N", "K"),
}


class ConfigError(ValueError):
    pass


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"not a list of numbers: {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    """``"16,32"`` or ``"16..1024"`` (powers of two between the bounds)."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split(".."))
            if lo < 1 or hi < lo:
                raise ConfigError(f"bad range {text!r}")
            out = []
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
            return out
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"not a list of integers: {text!r}") from None


def make_source(text: str):
    """``one``, ``zero``, ``x`` or ``poly:c0,c1,...``."""
    text = text.strip()
    if text == "one":
        return lambda x: np.ones_like(x)
    if text == "zero":
        return lambda x: np.zeros_like(x)
    if text == "x":
        return lambda x: np.asarray(x, dtype=float)
    if text.startswith("poly:"):
        coeffs = parse_float_list(text[5:])
        if not coeffs:
            raise ConfigError("poly: needs at least one coefficient")
        return lambda x: np.polynomial.polynomial.polyval(x, coeffs)
    raise ConfigError(f"unknown source {text!r}; use one, zero, x or poly:c0,c1,...")


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS and key != "command":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        cfg[key] = value
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="FE discretization of the 1D fractional Laplacian: elliptic solves, "
        "convergence studies, penalized HUM controls and spectra.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p):
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("--out", help="output directory (default: results)")
        p.add_argument("--seed", help="seed recorded in the metadata (default: 0)")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("solve", help="solve the fractional Poisson problem")
    p.add_argument("--s", help="fractional order in (0, 1)")
    p.add_argument("--L", help="half-width of the domain")
    p.add_argument("--N", help="number of interior nodes")
    p.add_argument("--f", help="source: one, zero, x or poly:c0,c1,...")
    p.add_argument("--method", choices=("cholesky", "cg"))
    common(p)

    p = sub.add_parser("convergence", help="H^s and L-infinity error study for f = 1")
    p.add_argument("--s", help="comma separated orders")
    p.add_argument("--L")
    p.add_argument("--N", help="comma list or lo..hi (doubling)")
    p.add_argument("--f", help="only 'one' has a closed-form solution")
    p.add_argument("--method", choices=("cholesky", "cg"))
    p.add_argument("--jobs", help="worker threads")
    common(p)

    p = sub.add_parser("control", help="penalized HUM control of the fractional heat equation")
    p.add_argument("--s", help="comma separated orders")
    p.add_argument("--L")
    p.add_argument("--N", help="comma list or lo..hi (doubling)")
    p.add_argument("--T", help="final time")
    p.add_argument("--M", help="number of time steps")
    p.add_argument("--omega", help="control region a,b")
    p.add_argument("--eps", help="penalization: h, h^alpha or a number")
    p.add_argument("--tol", help="CG relative residual")
    p.add_argument("--max-iter", dest="max_iter")
    p.add_argument("--jobs")
    p.add_argument(
        "--dump-trajectory",
        dest="dump_trajectory",
        choices=("none", "csv", "npz"),
        help="write free and controlled trajectories",
    )
    common(p)

    p = sub.add_parser("eigs", help="smallest generalized eigenvalues vs the asymptotic law")
    p.add_argument("--s", help="comma separated orders")
    p.add_argument("--L")
    p.add_argument("--N", help="comma list or lo..hi (doubling)")
    p.add_argument("--K", help="number of eigenvalues")
    common(p)
    return parser


def _fix_negative_values(argv):
    # "--omega -0.3,0.8" would otherwise be read as an option
    argv = list(argv)
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--omega", "--s", "--L") and i + 1 < len(argv) and argv[i + 1][:1] == "-":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def resolve_config(args) -> dict:
    """Defaults < config file < flags, validated before any computation."""
    cfg = {k: DEFAULTS[k] for k in COMMAND_KEYS[args.command]}
    cfg.update(out=DEFAULTS["out"], seed=DEFAULTS["seed"])
    if args.config:
        fromfile = read_config_file(args.config)
        fromfile.pop("command", None)
        for key, value in fromfile.items():
            if key in cfg:
                cfg[key] = value
    for key in list(cfg):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return validate(args.command, cfg)


def validate(command: str, raw: dict) -> dict:
    cfg = {"command": command}
    try:
        cfg["out"] = str(raw["out"])
        cfg["seed"] = int(raw["seed"])
        cfg["L"] = v.check_positive(float(raw["L"]), "L")
        if command == "solve":
            cfg["s"] = v.check_order(float(raw["s"]))
            cfg["N"] = v.check_positive_int(int(raw["N"]), "N")
        else:
            cfg["s"] = [v.check_order(s) for s in parse_float_list(raw["s"])]
            cfg["N"] = [v.check_positive_int(n, "N") for n in parse_int_list(raw["N"])]
            if not cfg["s"] or not cfg["N"]:
                raise ConfigError("s and N lists must be non-empty")
        if "f" in raw:
            cfg["f"] = raw["f"]
            make_source(raw["f"])
        if "method" in raw:
            if raw["method"] not in ("cholesky", "cg"):
                raise ConfigError(f"unknown method {raw['method']!r}")
            cfg["method"] = raw["method"]
        if "jobs" in raw:
            cfg["jobs"] = v.check_positive_int(int(raw["jobs"]), "jobs")
        if command == "control":
            cfg["T"] = v.check_positive(float(raw["T"]), "T")
            cfg["M"] = v.check_positive_int(int(raw["M"]), "M")
            cfg["omega"] = list(v.check_interval(parse_float_list(raw["omega"]), cfg["L"]))
            for N in cfg["N"]:
                make_region(FracProblem(0.5, cfg["L"], N), *cfg["omega"])
            eps = str(raw["eps"])
            penalty_from_rule(eps, 2.0 * cfg["L"] / (cfg["N"][0] + 1))
            cfg["eps"] = eps
            cfg["tol"] = v.check_positive(float(raw["tol"]), "tol")
            cfg["max_iter"] = v.check_positive_int(int(raw["max_iter"]), "max_iter")
            if raw["dump_trajectory"] not in ("none", "csv", "npz"):
                raise ConfigError("dump_trajectory must be none, csv or npz")
            cfg["dump_trajectory"] = raw["dump_trajectory"]
        if command == "eigs":
            cfg["K"] = v.check_positive_int(int(raw["K"]), "K")
            if cfg["K"] > min(cfg["N"]):
                raise ConfigError("K cannot exceed N")
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def _prepare_out(cfg) -> Path:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None
    return out


def _metadata(cfg, started, extra=None) -> dict:
    meta = {
        "config": cfg,
        "fraclap_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "wall_time_s": round(time.perf_counter() - started, 6),
    }
    if extra:
        meta.update(extra)
    return meta


def run_solve(cfg, out: Path) -> int:
    problem = FracProblem(cfg["s"], cfg["L"], cfg["N"])
    sol = solve_elliptic(problem, assemble_load(problem, make_source(cfg["f"])), method=cfg["method"])
    x = np.concatenate([[-problem.L], problem.nodes, [problem.L]])
    write_csv(out / "solution.csv", SOLUTION_COLUMNS, ({"x": xi, "u_h": ui} for xi, ui in zip(x, sol(x))))
    row = {"s": problem.s, "N": problem.N, "h": problem.h, "residual": sol.residual}
    if cfg["f"] == "one":
        row.update(hs_error=hs_error(sol), linf_error=linf_error(sol))
    write_csv(out / "errors.csv", CONVERGENCE_COLUMNS, [row])
    print(
        f"solve s={problem.s:g} N={problem.N} h={problem.h:.4g} u_h(0)={float(sol(0.0)):.6f} "
        f"hs_error={row.get('hs_error', float('nan')):.4e} residual={sol.residual:.2e}"
    )
    return EXIT_OK


def run_convergence(cfg, out: Path):
    reports = convergence_study(
        cfg["s"], cfg["N"], make_source(cfg["f"]), cfg["L"], cfg["method"], cfg["jobs"]
    )
    write_csv(out / "convergence.csv", CONVERGENCE_COLUMNS, error_report_rows(reports))
    status = EXIT_OK
    slopes = {}
    for r in reports:
        if r.failed:
            status = EXIT_NUMERICAL
            print(f"convergence s={r.s:g} N={r.N} FAILED: {r.failed}")
        else:
            print(f"convergence s={r.s:g} N={r.N} h={r.h:.4g} hs={r.hs_error:.4e} linf={r.linf_error:.4e}")
    for s in cfg["s"]:
        cells = [r for r in reports if r.s == s and not r.failed]
        if len(cells) >= 2:
            slopes[str(s)] = {
                "hs_slope": loglog_slope([r.h for r in cells], [r.hs_error for r in cells]),
                "linf_slope": loglog_slope([r.h for r in cells], [r.linf_error for r in cells]),
            }
    return status, {"slopes": slopes}


def run_control(cfg, out: Path):
    template = {"L": cfg["L"], "T": cfg["T"], "M": cfg["M"], "omega": tuple(cfg["omega"]), "eps": cfg["eps"]}
    rows = controllability_study(cfg["s"], cfg["N"], template, cfg["tol"], cfg["max_iter"], cfg["jobs"])
    write_csv(out / "control.csv", CONTROL_COLUMNS, rows)
    status = EXIT_OK
    for row in rows:
        if "failed" in row:
            status = EXIT_NUMERICAL
            print(f"control s={row['s']:g} N={row['N']} FAILED: {row['failed']}")
            continue
        flag = "" if row["converged"] else " (CG not converged)"
        print(
            f"control s={row['s']:g} N={row['N']} eps={row['eps']:.4g} cost={row['cost']:.4e} "
            f"inf_F={row['inf_F']:.4e} |y^M|={row['terminal_norm']:.4e} iters={row['cg_iters']}{flag}"
        )
    if cfg["dump_trajectory"] != "none":
        for s in cfg["s"]:
            for N in cfg["N"]:
                setup = make_setup(s, N, **template)
                res = minimize_dual(setup, tol=cfg["tol"], max_iter=cfg["max_iter"])
                free = setup.system.solve_forward(setup.z0)
                ctrl = setup.system.solve_forward(setup.z0, res.control)
                stem = f"trajectory_s{s:g}_N{N}"
                if cfg["dump_trajectory"] == "csv":
                    write_csv(out / f"{stem}_free.csv", TRAJECTORY_COLUMNS, trajectory_rows(free, setup.problem))
                    write_csv(out / f"{stem}_controlled.csv", TRAJECTORY_COLUMNS, trajectory_rows(ctrl, setup.problem))
                else:
                    np.savez(
                        out / f"{stem}.npz",
                        t=free.times,
                        x=setup.problem.nodes,
                        free=free.states,
                        controlled=ctrl.states,
                        control=res.control,
                    )
    return status, {"conventions": CONVENTIONS}


def run_eigs(cfg, out: Path):
    rows = []
    for s in cfg["s"]:
        for N in cfg["N"]:
            rep = discrete_spectrum(FracProblem(s, cfg["L"], N), cfg["K"])
            rows.extend(rep.rows())
            print(
                f"eigs s={s:g} N={N} lambda_1={rep.eigenvalues[0]:.6f} "
                f"asymptotic={rep.asymptotic[0]:.6f} rel_gap={rep.rel_gap[0]:+.3e}"
            )
    write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, rows)
    return EXIT_OK, {}


RUNNERS = {"solve": run_solve, "convergence": run_convergence, "control": run_control, "eigs": run_eigs}


def run(cfg: dict) -> int:
    """Execute a validated configuration and write its artifacts."""
    started = time.perf_counter()
    out = _prepare_out(cfg)
    result = RUNNERS[cfg["command"]](cfg, out)
    status, extra = result if isinstance(result, tuple) else (result, {})
    write_json(out / "metadata.json", _metadata(cfg, started, extra))
    return status


def main(argv=None) -> int:
    parser = build_parser()
    argv = _fix_negative_values(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = resolve_config(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"fraclap: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"fraclap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
