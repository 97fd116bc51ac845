"""Command-line front end.

Every setting has a default matching the validation study (4x4 mesh,
P = (5, 5), residual tolerance 1e-10, orders 1..10, thresholds 1e-7..1e-1),
can be read from a ``key = value`` file given with ``--config``, and can be
overridden by a flag.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .adaptation import (build_element_maps, default_thresholds, plan_adaptation,
                         plan_adaptation_low_order, sweep_thresholds, write_plan_csv,
                         write_sweep_csv)
from .estimation import directional_series, full_product_estimates
from .maps import (MapMethod, build_map_exact, build_map_full_product, build_map_high_order,
                   build_map_low_order, write_maps_csv)
from .mesh import build_cartesian_mesh
from .operator import Flavor, exact_solution
from .physics import GasParameters
from .snapshot import read_solution, write_solution
from .solver import discretization_error, solve_steady

log = logging.getLogger("dgtau")

OUTPUT_ENV = "DGTAU_OUTPUT_DIR"

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_CHECK_FAILED = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    nx: int = 4
    ny: int = 4
    p1: int = 5
    p2: int = 5
    gamma: float = 1.4
    prandtl: float = 0.72
    reynolds: float = 1000.0
    mach: float = 0.5
    mu: float = 1.0
    tolerance: float = 1e-10
    cfl: float = 1.8
    max_iterations: int = 200_000
    flavor: str = "isolated"
    method: str = "high_order"
    n_min: int = 1
    n_max: int = 10
    thresholds: list[float] = field(default_factory=lambda: list(default_thresholds()))
    output_dir: str = "dgtau-output"
    jobs: int = 1

    def validate(self) -> "RunConfig":
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be >= 1")
        if self.p1 < 1 or self.p2 < 1:
            raise ConfigError("reference orders must be >= 1")
        if not 1 <= self.n_min <= self.n_max:
            raise ConfigError("need 1 <= n_min <= n_max")
        if not self.tolerance > 0 or not self.cfl > 0 or self.max_iterations < 1:
            raise ConfigError("tolerance, cfl and max_iterations must be positive")
        if self.flavor not in ("isolated", "non_isolated"):
            raise ConfigError(f"unknown flavor {self.flavor!r}")
        if self.method not in ("high_order", "low_order"):
            raise ConfigError(f"unknown map method {self.method!r}")
        th = np.asarray(self.thresholds, dtype=float)
        if th.size == 0 or np.any(th <= 0) or np.any(np.diff(th) < 0):
            raise ConfigError("thresholds must be positive and ascending")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            self.gas
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    @property
    def gas(self) -> GasParameters:
        return GasParameters(self.gamma, self.prandtl, self.reynolds, self.mach, self.mu)

    @property
    def reference(self) -> tuple[int, int]:
        return self.p1, self.p2

    @property
    def flavor_enum(self) -> Flavor:
        return Flavor[self.flavor.upper()]


def _coerce(name: str, raw: str):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    try:
        if name == "thresholds":
            return sorted(float(t) for t in raw.replace(",", " ").split())
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def load_config(path: str | None) -> dict:
    """Parse a flat ``key = value`` file (``#`` comments allowed)."""
    if path is None:
        return {}
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_string("[run]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, raw in parser["run"].items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(**load_config(args.config))
    env = os.environ.get(OUTPUT_ENV)
    if env:
        cfg.output_dir = env
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg.validate()


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="key = value file; flags take precedence")
    g.add_argument("--nx", type=int)
    g.add_argument("--ny", type=int)
    g.add_argument("--p1", type=int, help="reference order in x")
    g.add_argument("--p2", type=int, help="reference order in y")
    for name in ("gamma", "prandtl", "reynolds", "mach", "mu", "tolerance", "cfl"):
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    g.add_argument("--max-iterations", dest="max_iterations", type=int)
    g.add_argument("--flavor", choices=["isolated", "non_isolated"])
    g.add_argument("--method", choices=["high_order", "low_order"])
    g.add_argument("--n-min", dest="n_min", type=int)
    g.add_argument("--n-max", dest="n_max", type=int)
    g.add_argument("--thresholds", type=lambda s: _coerce("thresholds", s),
                   help="comma separated, ascending")
    g.add_argument("--output-dir", dest="output_dir",
                   help=f"output directory (else ${OUTPUT_ENV}, else config)")
    g.add_argument("--jobs", type=int, help="worker threads for per-element work")
    g.add_argument("--solution", help="reuse a saved reference snapshot instead of solving")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dgtau", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="converge the reference solution")
    m = sub.add_parser("map", parents=[common], help="truncation error maps of elements")
    m.add_argument("--element", default="peak", help="element id, 'peak' or 'all'")
    m.add_argument("--no-exact", action="store_true", help="skip the exact maps")
    a = sub.add_parser("adapt", parents=[common], help="order plan for one threshold")
    a.add_argument("--tau-max", dest="tau_max", type=float, required=True)
    s = sub.add_parser("sweep", parents=[common], help="achieved error over thresholds")
    s.add_argument("--resolve", action="store_true", help="re-solve each adapted mesh")
    v = sub.add_parser("verify-source", parents=[common], help="finite-difference source check")
    v.add_argument("--points-per-side", type=int, default=10)
    v.add_argument("--step", type=float, default=1e-5)
    v.add_argument("--rtol", type=float, default=1e-6)
    v.add_argument("--flip-exponent", action="store_true",
                   help="check a deliberately wrong source (should fail)")
    return p


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _reference(cfg: RunConfig, args) -> tuple:
    """Converged reference ``(mesh, Q, report or None)``."""
    if args.solution:
        mesh, Q = read_solution(args.solution)
        if (mesh.nx, mesh.ny) != (cfg.nx, cfg.ny):
            log.info("using the snapshot's %dx%d mesh", mesh.nx, mesh.ny)
        return mesh, Q, None
    mesh = build_cartesian_mesh(cfg.nx, cfg.ny, cfg.reference)
    Q, rep = solve_steady(mesh, exact_solution(mesh, cfg.gas), cfg.tolerance,
                          cfg.max_iterations, cfg.cfl, cfg.gas,
                          history_csv=str(_outdir(cfg) / "history.csv"))
    return mesh, Q, rep


def cmd_solve(cfg: RunConfig, args) -> int:
    mesh, Q, rep = _reference(cfg, argparse.Namespace(solution=None))
    out = _outdir(cfg)
    write_solution(out / "solution.txt", mesh, Q)
    err = discretization_error(Q, mesh, cfg.gas)
    print(f"iterations {rep.iterations}  residual {rep.final_residual_inf:.3e}  "
          f"converged {rep.converged}  time {rep.wall_time:.1f}s")
    print(f"discretization error  L2 {err.l2:.3e}  Linf {err.linf:.3e}")
    print(f"wrote {out / 'solution.txt'} and {out / 'history.csv'}")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _converged_or_exit(rep) -> int | None:
    if rep is not None and not rep.converged:
        print(f"reference did not converge (residual {rep.final_residual_inf:.3e})",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return None


def cmd_map(cfg: RunConfig, args) -> int:
    mesh, Q, rep = _reference(cfg, args)
    if (code := _converged_or_exit(rep)) is not None:
        return code
    if args.element == "peak":
        ids = [mesh.locate(0.5, 0.5)]
    elif args.element == "all":
        ids = list(range(len(mesh.elements)))
    else:
        try:
            ids = [int(args.element)]
        except ValueError:
            raise ConfigError(f"bad element selector {args.element!r}") from None
        if not 0 <= ids[0] < len(mesh.elements):
            raise ConfigError(f"element {ids[0]} not in mesh")
    maps = []
    for eid in ids:
        for fl in Flavor:
            s1, s2 = directional_series(Q, mesh, eid, fl, cfg.gas)
            maps.append(build_map_high_order(s1, s2, cfg.n_max))
            inner = build_map_full_product(full_product_estimates(Q, mesh, eid, fl, cfg.gas),
                                           cfg.n_max)
            maps.append(inner)
            maps.append(build_map_low_order(inner, mesh.elements[eid].orders, cfg.n_max))
            if not args.no_exact:
                maps.append(build_map_exact(mesh, eid, fl, cfg.n_max, cfg.gas))
    path = _outdir(cfg) / "maps.csv"
    write_maps_csv(path, maps)
    print(f"wrote {len(maps)} maps for element(s) {ids} to {path}")
    return EXIT_OK


def _planner(cfg: RunConfig, mesh, Q):
    """Threshold -> plan, using the configured map method."""
    if cfg.method == "low_order":
        inners = build_element_maps(Q, mesh, cfg.flavor_enum, cfg.n_max, cfg.gas, cfg.jobs,
                                    MapMethod.FULL_PRODUCT)
        ref = mesh.elements[0].orders
        if any(e.orders != ref for e in mesh.elements):
            raise ConfigError("the low-order method needs uniform reference orders")
        return lambda t: plan_adaptation_low_order(inners, ref, t, cfg.n_min, cfg.n_max)
    maps = build_element_maps(Q, mesh, cfg.flavor_enum, cfg.n_max, cfg.gas, cfg.jobs)
    return lambda t: plan_adaptation(maps, t, cfg.n_min, cfg.n_max)


def cmd_adapt(cfg: RunConfig, args) -> int:
    if not args.tau_max > 0:
        raise ConfigError("tau-max must be positive")
    mesh, Q, rep = _reference(cfg, args)
    if (code := _converged_or_exit(rep)) is not None:
        return code
    plan = _planner(cfg, mesh, Q)(args.tau_max)
    path = _outdir(cfg) / "plan.csv"
    write_plan_csv(path, plan)
    print(f"tau_max {args.tau_max:.3e}: {plan.total_dofs} DOFs per variable; wrote {path}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    mesh, Q, rep = _reference(cfg, args)
    if (code := _converged_or_exit(rep)) is not None:
        return code
    result = sweep_thresholds(mesh, [], cfg.thresholds, cfg.n_min, cfg.n_max, cfg.gas,
                              resolve=args.resolve, planner=_planner(cfg, mesh, Q),
                              solve_kwargs=dict(tolerance=cfg.tolerance, cfl=cfg.cfl,
                                                max_iterations=cfg.max_iterations))
    out = _outdir(cfg)
    write_sweep_csv(out / "sweep.csv", result)
    for k, row in enumerate(result.rows):
        write_plan_csv(out / f"plan_{k:02d}.csv", row.plan)
    for row in result.rows:
        a = row.achieved
        print(f"tau_max {row.tau_max:.2e}  dofs {row.plan.total_dofs:5d}  "
              f"non-isolated {a[Flavor.NON_ISOLATED]:.3e}  isolated {a[Flavor.ISOLATED]:.3e}")
    print(f"wrote {out / 'sweep.csv'}")
    if args.resolve and any(r.converged is False for r in result.rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_verify_source(cfg: RunConfig, args) -> int:
    from .physics import manufactured_source
    from .verification import source_with_flipped_exponent, verify_source

    src = source_with_flipped_exponent if args.flip_exponent else manufactured_source
    chk = verify_source(src, gas=cfg.gas, n_side=args.points_per_side, step=args.step,
                        rtol=args.rtol)
    status = "PASS" if chk.passed else "FAIL"
    print(f"{status}: {chk.points} points, max relative mismatch {chk.max_rel_mismatch:.3e} "
          f"(tolerance {chk.rtol:.1e}) at {chk.worst_point}")
    return EXIT_OK if chk.passed else EXIT_CHECK_FAILED


COMMANDS = {"solve": cmd_solve, "map": cmd_map, "adapt": cmd_adapt, "sweep": cmd_sweep,
            "verify-source": cmd_verify_source}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
