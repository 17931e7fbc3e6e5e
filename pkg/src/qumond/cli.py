"""Command-line front end: ``qumond {solve,decompose,verify,rotation,counterexample}``.

Exit codes: 0 success, 2 configuration error, 3 numerical diagnostic failure.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import counterexamples as cx
from . import helmholtz as hz
from . import mond
from . import newtonian as nw
from . import oracles
from . import spherical as sp
from . import verify as vf
from .densities import DensitySpecError, parse_density
from .grid import (
    GridFormatError,
    VectorGrid,
    curl_fd,
    integrate,
    jacobian_norm,
    l2_norm,
    read_grid,
    write_grid,
)
from .singular import ConvergenceError, EpsilonSchedule

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration

DEFAULTS = {
    "n": "64",
    "L": "2.0",
    "lambda": "deep:1",
    "eps-schedule": None,
    "out": "qumond-out",
    "seed": "0",
    "density": None,
}


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; ``tol`` may repeat."""
    out: dict = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"config: {path}:{lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        if key in ("tol", "only"):
            out.setdefault(key, []).append(value)
        else:
            out[key] = value
    return out


@dataclass
class RunConfig:
    command: str
    n: int
    L: float
    lam: mond.InterpolationFunction
    schedule: str | None
    out: Path
    seed: int
    density: str | None
    tol: dict
    extra: argparse.Namespace

    def sched(self) -> EpsilonSchedule:
        return _schedule_for(self, 2.0 * self.L / self.n)


def _parse_tol(items) -> dict:
    tol = {}
    for item in items or []:
        for part in str(item).split(","):
            part = part.strip()
            if not part:
                continue
            name, sep, value = part.partition("=")
            if not sep:
                name, value = "*", name
            try:
                tol[name.strip()] = float(value)
            except ValueError:
                raise ConfigError(f"tol: bad value {value!r} for {name!r}") from None
    return tol


def build_config(args: argparse.Namespace) -> RunConfig:
    file_vals = read_config_file(args.config) if args.config else {}
    known = set(DEFAULTS) | {"tol", "only", "q"}
    bad = sorted(set(file_vals) - known - set(vars(args)))
    if bad:
        raise ConfigError(f"config: unknown key(s) {bad}")

    def pick(key):
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            return flag
        return file_vals.get(key, DEFAULTS.get(key))

    try:
        n = int(pick("n"))
    except (TypeError, ValueError):
        raise ConfigError(f"n: expected an integer, got {pick('n')!r}") from None
    if n < 4 or n % 2:
        raise ConfigError(f"n: must be even and >= 4, got {n}")
    try:
        L = float(pick("L"))
    except (TypeError, ValueError):
        raise ConfigError(f"L: expected a number, got {pick('L')!r}") from None
    if not (L > 0 and math.isfinite(L)):
        raise ConfigError(f"L: must be positive, got {L}")
    try:
        lam = mond.parse_lambda(str(pick("lambda")))
    except ValueError as exc:
        raise ConfigError(f"lambda: {exc}") from None
    try:
        seed = int(pick("seed"))
    except (TypeError, ValueError):
        raise ConfigError(f"seed: expected an integer, got {pick('seed')!r}") from None
    tol = _parse_tol(file_vals.get("tol", []))
    tol.update(_parse_tol(args.tol))
    # list-valued keys from the file feed flags that were not given
    if getattr(args, "only", 0) is None and "only" in file_vals:
        args.only = file_vals["only"]
    if getattr(args, "q", 0) is None and "q" in file_vals:
        try:
            qs = [float(t) for t in file_vals["q"].split(",")]
        except ValueError:
            raise ConfigError(f"q: expected number(s), got {file_vals['q']!r}") from None
        args.q = qs if args.command == "counterexample" else qs[0]
    cfg = RunConfig(
        command=args.command,
        n=n,
        L=L,
        lam=lam,
        schedule=pick("eps-schedule"),
        out=Path(pick("out")),
        seed=seed,
        density=pick("density"),
        tol=tol,
        extra=args,
    )
    cfg.sched()
    return cfg


# --------------------------------------------------------------------------
# commands


def _density(cfg: RunConfig):
    if cfg.density is None:
        raise ConfigError("density: no density given (use --density)")
    return parse_density(cfg.density)


def _write_summary(path: Path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("key,value\n")
        for k, v in rows:
            fh.write(f"{k},{v!r}\n" if isinstance(v, float) else f"{k},{v}\n")


def cmd_solve(cfg: RunConfig) -> int:
    model = _density(cfg)
    rho = model.sample(cfg.n, cfg.L)
    sol = nw.solve(rho)
    phantom = mond.phantom_field(sol.field, cfg.lam)
    projected, change = hz.project_irrotational(phantom, cfg.sched(), return_change=True)
    gm = sol.field + projected
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_grid(cfg.out / "density.grid", rho)
    write_grid(cfg.out / "potential_newton.grid", sol.potential)
    write_grid(cfg.out / "field_newton.grid", sol.field)
    write_grid(cfg.out / "phantom.grid", phantom)
    write_grid(cfg.out / "field_mond.grid", gm)
    scale = jacobian_norm(gm)
    curl = l2_norm(curl_fd(gm)) / scale if scale else 0.0
    _write_summary(
        cfg.out / "summary.csv",
        [
            ("density", model.label),
            ("n", cfg.n),
            ("L", cfg.L),
            ("lambda", f"{cfg.lam.name}:{cfg.lam.a0!r}"),
            ("mass", integrate(rho)),
            ("potential_min", float(sol.potential.data.min())),
            ("field_newton_l2", l2_norm(sol.field)),
            ("phantom_l2", l2_norm(phantom)),
            ("field_mond_l2", l2_norm(gm)),
            ("extrapolation_change", change),
            ("curl_residual", curl),
        ],
    )
    print(f"wrote 5 grid dumps and summary.csv to {cfg.out}")
    return EXIT_OK


def _generated_field(kind: str, n: int, L: float):
    """Input field plus its known (irrotational, solenoidal) parts."""
    zero = VectorGrid.zeros(n, L)
    if kind == "zero":
        return zero, zero, zero
    grad, _ = oracles.gradient_field(n, L)
    sol = oracles.solenoidal_field(n, L)
    if kind == "gradient":
        return grad, grad, zero
    if kind == "solenoidal":
        return sol, zero, sol
    if kind == "mixed":
        return grad + sol, grad, sol
    raise ConfigError(f"generate: unknown field {kind!r}")


def cmd_decompose(cfg: RunConfig) -> int:
    args = cfg.extra
    known = None
    if args.input:
        path = Path(args.input)
        if not path.is_file():
            raise ConfigError(f"input: file {args.input!r} does not exist")
        try:
            v = read_grid(path)
        except (GridFormatError, ValueError) as exc:
            raise ConfigError(f"input: {exc}") from None
        if not isinstance(v, VectorGrid):
            raise ConfigError("input: expected a vector grid dump (three component blocks)")
    elif args.generate:
        v, irr, sol = _generated_field(args.generate, cfg.n, cfg.L)
        known = (irr, sol)
    else:
        raise ConfigError("input: give --input <vector grid> or --generate {gradient,solenoidal,mixed,zero}")
    h = 2.0 * v.half_width / v.n
    sched = cfg.sched() if args.input is None else _schedule_for(cfg, h)
    d = hz.decompose(v, sched)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_grid(cfg.out / "irrotational.grid", d.irrotational)
    write_grid(cfg.out / "solenoidal.grid", d.solenoidal)
    vnorm = l2_norm(v)
    rows = [
        ("curl_residual", d.curl_residual),
        ("div_residual", d.div_residual),
        ("extrapolation_change", d.extrapolation_change),
        ("irrotational_fraction", l2_norm(d.irrotational) / vnorm if vnorm else 0.0),
        ("solenoidal_fraction", l2_norm(d.solenoidal) / vnorm if vnorm else 0.0),
    ]
    if known is not None:
        for name, got, want in (("irrotational_error", d.irrotational, known[0]), ("solenoidal_error", d.solenoidal, known[1])):
            ref = l2_norm(want)
            rows.append((name, l2_norm(got - want) / (ref if ref else (vnorm or 1.0))))
    with open(cfg.out / "residuals.csv", "w") as fh:
        fh.write("metric,value\n")
        for k, val in rows:
            fh.write(f"{k},{val!r}\n")
    for k, val in rows:
        print(f"{k},{val!r}")
    return EXIT_OK


def _schedule_for(cfg: RunConfig, h: float) -> EpsilonSchedule:
    tol = cfg.tol.get("extrapolation")
    kw = {} if tol is None else {"tolerance": tol}
    try:
        if cfg.schedule is None:
            sched = EpsilonSchedule.geometric(h, **kw)
        else:
            sched = EpsilonSchedule.parse(cfg.schedule, h, **kw)
        sched.check_grid(h)
    except ValueError as exc:
        raise ConfigError(f"eps-schedule: {exc}") from None
    return sched


def cmd_verify(cfg: RunConfig) -> int:
    args = cfg.extra
    only = None
    if args.only:
        only = [p.strip() for item in args.only for p in str(item).split(",") if p.strip()]
        unknown = [o for o in only if o not in vf.CHECKS]
        if unknown:
            raise ConfigError(f"only: unknown check group(s) {unknown}; choose from {sorted(vf.CHECKS)}")
    if args.q is not None:
        try:
            vf.blowup_bound(args.q)
        except ValueError as exc:
            raise ConfigError(f"q: {exc}") from None
    ctx = vf.VerifyContext(n=cfg.n, L=cfg.L, seed=cfg.seed, lam=cfg.lam, schedule=cfg.schedule, tol=cfg.tol, q=args.q)
    rows = vf.run_suite(ctx, only)
    cfg.out.mkdir(parents=True, exist_ok=True)
    with open(cfg.out / "verify.csv", "w") as fh:
        vf.write_report(fh, rows, cfg.seed)
    vf.write_report(sys.stdout, rows, cfg.seed)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_NUMERIC


def cmd_rotation(cfg: RunConfig) -> int:
    args = cfg.extra
    model = _density(cfg)
    if not model.is_spherical:
        raise ConfigError(f"density: {model.label!r} is not spherically symmetric about the origin")
    radial = model.radial
    r_max = args.r_max if args.r_max is not None else 100.0 * max(radial.support_radius, 1e-3)
    r_min = args.r_min if args.r_min is not None else r_max * 1e-4
    if not 0 < r_min < r_max:
        raise ConfigError("r-min/r-max: need 0 < r-min < r-max")
    if args.points < 2:
        raise ConfigError("points: need at least 2")
    r = np.geomspace(r_min, r_max, args.points)
    rows = sp.rotation_curve(radial, cfg.lam, r)
    cfg.out.mkdir(parents=True, exist_ok=True)
    sp.write_rotation_curve(cfg.out / "rotation.csv", rows)
    print(f"wrote {len(rows)} rows to {cfg.out / 'rotation.csv'}")
    return EXIT_OK


def cmd_counterexample(cfg: RunConfig) -> int:
    args = cfg.extra
    cfg.out.mkdir(parents=True, exist_ok=True)
    if args.kind == "dyadic":
        try:
            n_list = [int(t) for t in args.n_list.split(",")]
        except ValueError:
            raise ConfigError(f"n-list: expected integers, got {args.n_list!r}") from None
        qs = args.q if args.q else [1.5, 3.0, 4.0]
        path = cfg.out / "dyadic.csv"
        with open(path, "w") as fh:
            fh.write("n,q,norm\n")
            for q in qs:
                fit = cx.blowup_exponent(q, n_list, i_max=args.i_max, points_per_shell=args.points_per_shell)
                for n, norm in zip(fit.n_list, fit.norms):
                    fh.write(f"{n},{q!r},{norm!r}\n")
                print(f"q={q:g}: slope {fit.slope:.4f}")
    else:
        if args.N < 1:
            raise ConfigError("N: must be >= 1")
        series = cx.signed_w11_divergence(args.N)
        path = cfg.out / "signed.csv"
        with open(path, "w") as fh:
            fh.write("N,S_N,harmonic_bound\n")
            for k, (s, b) in enumerate(zip(series.partial_sums, series.harmonic_bounds), 1):
                fh.write(f"{k},{float(s)!r},{float(b)!r}\n")
        print(f"S_N={series.S_N!r} harmonic_bound={series.harmonic_bound!r}")
        if not series.ok:
            print("partial sums fall below the harmonic bound", file=sys.stderr)
            return EXIT_NUMERIC
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "rotation": cmd_rotation,
    "counterexample": cmd_counterexample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--n", help="cells per axis (even, >= 4; default 64)")
    common.add_argument("--L", help="box half-width (default 2)")
    common.add_argument("--lambda", dest="lambda", help="interpolation function name:a0, e.g. deep:1 or simple:1")
    common.add_argument("--eps-schedule", dest="eps_schedule", help='truncation radii in units of h, e.g. "8,4,2" or "8,4,2:raw"')
    common.add_argument("--out", help="output directory (default qumond-out)")
    common.add_argument("--seed", help="seed for randomised checks (default 0)")
    common.add_argument("--tol", action="append", help="tolerance override name=value; a bare value applies to all")

    p = argparse.ArgumentParser(prog="qumond", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="Newtonian and QUMOND fields of a density")
    s.add_argument("--density", help="density spec, e.g. uniform-ball:1,0.5")

    d = sub.add_parser("decompose", parents=[common], help="split a vector field into gradient and divergence-free parts")
    d.add_argument("--input", help="vector grid dump")
    d.add_argument("--generate", choices=["gradient", "solenoidal", "mixed", "zero"], help="use a built-in test field")

    v = sub.add_parser("verify", parents=[common], help="run the property checks")
    v.add_argument("--only", action="append", help=f"check group(s): {', '.join(vf.CHECKS)}")
    v.add_argument("--q", type=float, help="restrict the blowup checks to this exponent")

    r = sub.add_parser("rotation", parents=[common], help="rotation curve of a spherical density")
    r.add_argument("--density", help="spherical density spec")
    r.add_argument("--r-min", dest="r_min", type=float, help="innermost radius (default r-max / 1e4)")
    r.add_argument("--r-max", dest="r_max", type=float, help="outermost radius (default 100x support)")
    r.add_argument("--points", type=int, default=200, help="log-spaced radii (default 200)")

    c = sub.add_parser("counterexample", parents=[common], help="dyadic blowup norms or signed-density partial sums")
    c.add_argument("kind", choices=["dyadic", "signed"])
    c.add_argument("--q", type=float, action="append", help="exponent(s) for dyadic norms (default 1.5, 3, 4)")
    c.add_argument("--n-list", dest="n_list", default="4,8,16,32,64", help="dyadic shell counts")
    c.add_argument("--i-max", dest="i_max", type=int, default=20, help="radial mesh depth, down to 2^-i_max")
    c.add_argument("--points-per-shell", dest="points_per_shell", type=int, default=8, help="quadrature nodes per interval (>= 4)")
    c.add_argument("--N", type=int, default=1000, help="signed-density shell count")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, DensitySpecError, cx.MeshResolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"diagnostic failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except Exception as exc:  # keep the exit-code contract for anything unforeseen
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
