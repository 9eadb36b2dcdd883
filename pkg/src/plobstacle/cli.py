"""Command-line experiment runner: solve | verify | convergence | ineq."""

import argparse
import csv
import sys
import time
from pathlib import Path

from . import __version__
from .harness import ineq_monte_carlo, run_convergence, run_verification
from .scenarios import ScenarioError, parse_scenario
from .solver import solve

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2
EXIT_VERIFY_FAIL = 3


def _load_scenario(path):
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    return parse_scenario(p)


class Manifest:
    """Run manifest: scenario echo and resolved defaults first, the output
    inventory appended once the run finishes."""

    def __init__(self, out_dir, scenario, command):
        self.path = Path(out_dir) / "manifest.txt"
        self.t0 = time.perf_counter()
        self.files = []
        lines = [
            f"tool = plobstacle {__version__}",
            f"command = {command}",
            f"scenario.name = {scenario.name}",
            f"grid.dim = {scenario.dim}",
            f"grid.extent = {scenario.extent}",
            f"grid.nx = {scenario.nx}",
            f"grid.T = {scenario.T}",
            f"grid.nt = {scenario.nt}",
            f"p = {scenario.p}",
            f"eps = {scenario.eps}",
            f"eps_list = {scenario.eps_list}",
            f"obstacle.id = {scenario.obstacle_id}",
            f"obstacle.params = {scenario.obstacle_params}",
            f"solver.step_tol = {scenario.step_tol}",
            f"solver.max_sweeps = {scenario.max_sweeps}",
            f"refine.levels = {scenario.refine_levels}",
            f"cutoff.margin = {scenario.cutoff_margin}",
            f"checks = {scenario.checks}",
        ]
        self.header = "\n".join(lines)
        self.path.write_text(self.header + "\n")

    def register(self, path):
        self.files.append(Path(path).name)
        return path

    def finalize(self, extra=None):
        lines = [self.header]
        if extra:
            lines.extend(extra)
        lines.append(f"wall_time_s = {time.perf_counter() - self.t0:.3f}")
        lines.append("outputs:")
        for name in self.files:
            lines.append(f"  {name}")
        self.path.write_text("\n".join(lines) + "\n")


def cmd_solve(args):
    scenario = _load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, scenario, "solve")
    grid = scenario.grid()
    obstacle = scenario.obstacle()
    result = solve(grid, obstacle, scenario.solver_config())
    traj = manifest.register(out / "trajectory.csv")
    result.trajectory_csv(traj, psi=obstacle.sample(grid))
    diag = manifest.register(out / "steps.csv")
    with open(diag, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "sweeps", "residual", "converged"])
        for k, s in enumerate(result.steps, start=1):
            w.writerow([k, s.sweeps, f"{s.residual:.17g}", int(s.converged)])
    manifest.finalize([f"solver_converged = {int(result.converged)}"])
    if not result.converged:
        print("warning: solver did not reach step_tol on every step",
              file=sys.stderr)
        return EXIT_NONCONVERGED
    print(f"solved {scenario.name}: {grid.nt - 1} steps, "
          f"max residual {max(s.residual for s in result.steps):.3e}")
    return EXIT_OK


def cmd_verify(args):
    scenario = _load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, scenario, "verify")
    report, nonconverged = run_verification(scenario)
    txt = manifest.register(out / "report.txt")
    Path(txt).write_text(report.as_text())
    kv = manifest.register(out / "report.kv")
    Path(kv).write_text(report.as_keyvalues())
    manifest.finalize([f"all_passed = {int(report.all_passed)}"])
    sys.stdout.write(report.as_text())
    if nonconverged:
        return EXIT_NONCONVERGED
    return EXIT_OK if report.all_passed else EXIT_VERIFY_FAIL


def cmd_convergence(args):
    scenario = _load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = Manifest(out, scenario, "convergence")
    eps_rows, level_rows, passed = run_convergence(scenario)
    if eps_rows:
        path = manifest.register(out / "eps_convergence.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["eps", "u_diff_lp", "grad_diff_lp"])
            for row in eps_rows:
                w.writerow([f"{v:.17g}" for v in row])
    if level_rows:
        path = manifest.register(out / "refinement.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["level", "h", "tau", "theorem2_residual", "theorem5_lhs"])
            for row in level_rows:
                w.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])
    manifest.finalize([f"contracts_passed = {int(passed)}"])
    for row in eps_rows:
        print(f"eps={row[0]:g}  |u_eps-u|_p={row[1]:.6e}  |grad diff|_p={row[2]:.6e}")
    for row in level_rows:
        print(f"level={row[0]}  h={row[1]:g}  tau={row[2]:g}  "
              f"theorem2={row[3]:.6e}  theorem5_lhs={row[4]:.6e}")
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


def cmd_ineq(args):
    worst = ineq_monte_carlo(args.trials, args.seed, swap=args.debug_swap)
    violated = False
    for name in sorted(worst):
        slack = worst[name]
        print(f"{name}: worst relative slack = {slack:.3e}")
        if slack > 1e-12:
            violated = True
    return EXIT_VERIFY_FAIL if violated else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="plobstacle",
        description="Obstacle-problem solver and verification harness for the "
                    "evolutionary p-Laplace equation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_cmd(name, fn, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scenario", required=True, help="scenario file (key = value)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.set_defaults(fn=fn)

    add_scenario_cmd("solve", cmd_solve, "run a solve, write trajectory CSV")
    add_scenario_cmd("verify", cmd_verify, "run the verification checks")
    add_scenario_cmd("convergence", cmd_convergence, "eps / refinement studies")

    sp = sub.add_parser("ineq", help="Monte Carlo vector-inequality suites")
    sp.add_argument("--trials", type=int, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--debug-swap", action="store_true",
                    help="swap lhs/rhs to sanity-check the harness")
    sp.set_defaults(fn=cmd_ineq)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 1) < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
