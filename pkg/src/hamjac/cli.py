"""``hamjac`` command-line front end.

Every subcommand reads one JSON config, writes its tables and a JSON report
into the output directory, and exits with

* 0 when every hard check passes,
* 1 when a check fails,
* 2 on a configuration error,
* 3 when the run leaves a model's validity domain.
"""

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .config import ConfigError, load
from .dynsys import (
    EXACT_RELATIVISTIC,
    FIRST_ORDER,
    FirstOrderRelativistic,
    TransformedSystem,
    euler_lagrange_residual,
    make_system,
)
from .errors import DomainError, GuardViolation, HamjacError
from .hj import (
    ORIGINAL,
    TRANSFORMED,
    MomentumProfile,
    characteristic_function,
    compare_recovery,
    conservative_W,
    default_limit_sequence,
    hj_residual,
    is_strictly_decreasing,
    limit_sweep,
    momentum_chain_discrepancy,
    residual_scaling,
)
from .numerics import integrate_ode
from .transform import (
    compare_pictures,
    energy_invariance,
    identity_transform,
    relativistic_transform,
    round_trip_error,
    scaled_time_transform,
    tau_of_t,
    certify_energy_invariance,
)

log = logging.getLogger("hamjac")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


def fmt(value):
    return f"{value:.17g}"


def write_table(path, columns, rows, fmt_name):
    """Write a numeric table as CSV (17 significant digits, ``\\n`` endings) or JSON."""
    if fmt_name == "json":
        payload = {"columns": list(columns), "rows": [[float(v) for v in row] for row in rows]}
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(payload) + "\n")
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


class Report:
    """Accumulates named checks; ``tol=None`` marks a pure measurement."""

    def __init__(self):
        self.checks = []
        self._t0 = time.perf_counter()

    def add(self, name, value, tol=None, passed=None):
        value = float(value)
        if passed is None:
            passed = True if tol is None else bool(value <= tol)
        self.checks.append(
            {"name": name, "value": value if math.isfinite(value) else None, "tol": tol, "pass": bool(passed)}
        )
        log.info("%-36s %-24s tol=%-8s %s", name, fmt(value), tol, "PASS" if passed else "FAIL")
        return passed

    @property
    def passed(self):
        return all(c["pass"] for c in self.checks)

    def write(self, path, cfg):
        payload = {"checks": self.checks, "config_digest": cfg.digest(), "version": __version__}
        with open(path, "w", newline="\n") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        log.info("runtime %.3fs", time.perf_counter() - self._t0)


def _energy_default(cfg):
    if cfg.hj.E is not None:
        return cfg.hj.E
    return FirstOrderRelativistic(cfg.system.params()).energy(cfg.initial.x0, cfg.initial.v0)


def _grid(cfg):
    return np.linspace(cfg.hj.x_lo, cfg.hj.x_hi, cfg.hj.n_grid)


def cmd_simulate(cfg, out_dir):
    params = cfg.system.params()
    system = make_system(cfg.system.kind, params)
    report = Report()
    x0, v0 = cfg.initial.x0, cfg.initial.v0
    traj = integrate_ode(system.rhs, x0, v0, cfg.integration.integrator(), guard=system.in_domain)

    columns = ["t", "x", "v"]
    data = [traj.t, traj.x, traj.v]
    if system.has_lagrangian:
        K = np.array([system.energy(x, v) for x, v in zip(traj.x.tolist(), traj.v.tolist())])
        p = np.array([system.momentum(x, v) for x, v in zip(traj.x.tolist(), traj.v.tolist())])
        columns += ["K", "p"]
        data += [K, p]
        spread = float(K.max() - K.min())
        report.add("energy_spread", spread, cfg.verify.tol("energy_conservation") * (1.0 + abs(K[0])))
    if params.alpha > 0 and system.kind in (FIRST_ORDER, EXACT_RELATIVISTIC):
        _, tau = tau_of_t(traj, relativistic_transform(params.alpha))
        columns.append("tau")
        data.append(tau)
    if system.kind == EXACT_RELATIVISTIC:
        approx = FirstOrderRelativistic(replace(params, alpha=math.sqrt(1.5) / params.speed_of_light))
        other = integrate_ode(approx.rhs, x0, v0, cfg.integration.integrator(), guard=approx.in_domain)
        n = min(len(other), len(traj))
        report.add("max_dx_vs_first_order", float(np.max(np.abs(other.x[:n] - traj.x[:n]))))
    report.add("final_x", traj.x[-1])
    report.add("final_v", traj.v[-1])

    write_table(
        os.path.join(out_dir, f"trajectory.{cfg.output.format}"), columns, np.column_stack(data), cfg.output.format
    )
    if traj.truncated:
        report.add("validity_domain", traj.t[-1], passed=False)
        report.write(os.path.join(out_dir, "simulate_report.json"), cfg)
        log.error("left the validity domain at t=%s; last valid state written", fmt(traj.t[-1]))
        return EXIT_DOMAIN
    report.write(os.path.join(out_dir, "simulate_report.json"), cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


def _verify_setup(cfg):
    params = cfg.system.params()
    system_a = FirstOrderRelativistic(params)
    choice = cfg.verify.transform
    if choice == "identity":
        return system_a, system_a, identity_transform()
    system_b = TransformedSystem(params)
    if choice == "double_time":
        return system_a, system_b, scaled_time_transform(2.0)
    return system_a, system_b, relativistic_transform(params.alpha)


def _random_states(cfg, n):
    rng = np.random.default_rng(cfg.verify.seed)
    alpha = cfg.system.alpha
    v_max = min(2.0, 0.9 / alpha) if alpha > 0 else 2.0
    xs = rng.uniform(0.0, 1.0, n)
    vs = rng.uniform(-v_max, v_max, n)
    return list(zip(xs.tolist(), vs.tolist()))


def cmd_verify(cfg, out_dir):
    system_a, system_b, xf = _verify_setup(cfg)
    tol = cfg.verify.tol
    icfg = cfg.integration.integrator()
    report = Report()
    x0, v0 = cfg.initial.x0, cfg.initial.v0

    traj = integrate_ode(system_a.rhs, x0, v0, icfg, guard=system_a.in_domain, strict=True)
    cert = certify_energy_invariance(system_a, system_b, xf, traj, tol("invariance_condition"))
    report.add("invariance_condition", cert.max_condition_residual, tol("invariance_condition"))
    report.add("invariance_energy_mismatch", cert.max_energy_mismatch, tol("invariance_energy_mismatch"))
    report.add("invariance_dKdx_mismatch", cert.max_dKdx_mismatch, tol("invariance_dKdx_mismatch"))

    K = [system_a.energy(x, v) for x, v in zip(traj.x.tolist(), traj.v.tolist())]
    report.add(
        "energy_conservation", max(abs(k - K[0]) for k in K), tol("energy_conservation") * (1.0 + abs(K[0]))
    )
    lvv = min(system_a.d2L_dv2(x, v) for x, v in zip(traj.x.tolist(), traj.v.tolist()))
    report.add("min_d2L_dv2", lvv, passed=lvv > 0)

    states = _random_states(cfg, cfg.verify.n_random)
    report.add("energy_invariance", energy_invariance(system_a, system_b, xf, states), tol("energy_invariance"))
    v_grid = [v for _, v in states] + [0.0]
    report.add("velocity_round_trip", round_trip_error(xf, v_grid), tol("velocity_round_trip"))
    report.add("commuting_dynamics", compare_pictures(system_a, system_b, xf, x0, v0, icfg), tol("commuting_dynamics"))

    report.add("euler_lagrange_original", euler_lagrange_residual(system_a, traj), tol("euler_lagrange"))
    traj_b = integrate_ode(system_b.rhs, x0, xf.velocity_forward(v0), icfg, guard=system_b.in_domain, strict=True)
    report.add("euler_lagrange_transformed", euler_lagrange_residual(system_b, traj_b), tol("euler_lagrange"))

    report.write(os.path.join(out_dir, "verify_report.json"), cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


def _sweep_params(cfg):
    base = cfg.system.params()
    if cfg.sweep is not None and cfg.sweep.gamma:
        pairs = list(zip(cfg.sweep.gamma, cfg.sweep.alpha))
    else:
        seq = default_limit_sequence()
        pairs = list(zip(seq, seq))
    return [replace(base, gamma=g, alpha=a, c=None) for g, a in pairs]


def _limits(cfg, out_dir, report, E, grid):
    rows = limit_sweep(_sweep_params(cfg), E, grid)
    write_table(
        os.path.join(out_dir, f"limits.{cfg.output.format}"),
        ["gamma", "alpha", "p_err", "W_err"],
        [(r.gamma, r.alpha, r.p_err, r.W_err) for r in rows],
        cfg.output.format,
    )
    p_errs = [r.p_err for r in rows]
    W_errs = [r.W_err for r in rows]
    report.add("limit_p_monotone", len(rows), passed=is_strictly_decreasing(p_errs))
    report.add("limit_W_monotone", len(rows), passed=is_strictly_decreasing(W_errs))
    report.add("limit_p_final", p_errs[-1], cfg.verify.tol("limit_final"))
    report.add("limit_W_final", W_errs[-1], cfg.verify.tol("limit_final"))


def cmd_hj(cfg, out_dir):
    params = cfg.system.params()
    series_tol = cfg.hj.series_tol()
    E = _energy_default(cfg)
    grid = _grid(cfg)
    if not cfg.hj.x_hi > cfg.hj.x_lo:
        raise ConfigError("hj.x_hi", "must exceed hj.x_lo for the hj command")
    report = Report()
    prof = MomentumProfile(params, E, ORIGINAL, cfg.hj.x_lo, cfg.hj.x_hi, series_tol)
    prof_t = MomentumProfile(params, E, TRANSFORMED, cfg.hj.x_lo, cfg.hj.x_hi, series_tol)
    sol = characteristic_function(prof, grid)
    sol_t = characteristic_function(prof_t, grid)
    p = np.array([prof(float(x)) for x in grid])
    pt = np.array([prof_t(float(x)) for x in grid])
    write_table(
        os.path.join(out_dir, f"hj_table.{cfg.output.format}"),
        ["x", "p", "p_tilde", "W", "W_tilde", "S_at_t0"],
        np.column_stack([grid, p, pt, sol.W, sol_t.W, sol.W]),
        cfg.output.format,
    )

    report.add("hj_transformed_residual", hj_residual(TRANSFORMED, params, E, grid), cfg.verify.tol("hj_transformed"))
    if np.any(grid > 0):
        orig = hj_residual(ORIGINAL, params, E, grid, series_tol)
        if params.alpha == 0:
            report.add("hj_original_residual", orig, cfg.verify.tol("hj_original_alpha0"))
        else:
            report.add("hj_original_residual", orig)
            alphas = [params.alpha / 2**k for k in range(4)]
            residuals, exponent = residual_scaling(params, E, grid, alphas, series_tol)
            for a, r in zip(alphas, residuals):
                report.add(f"hj_original_residual_alpha_{a:.6g}", r)
            report.add("hj_original_alpha_exponent", exponent)
            report.add("hj_original_residual_monotone", len(alphas), passed=is_strictly_decreasing(residuals))
        chain = FirstOrderRelativistic(params)
        traj = integrate_ode(
            chain.rhs, cfg.initial.x0, cfg.initial.v0, cfg.integration.integrator(), guard=chain.in_domain
        )
        report.add("momentum_chain_discrepancy", momentum_chain_discrepancy(params, traj, E, series_tol))
    report.add("p_positive", float(np.min(p)), passed=bool(np.all(p > 0) and np.all(np.isfinite(p))))
    report.add("W_monotone", float(np.min(np.diff(sol.W))), passed=bool(np.all(np.diff(sol.W) > 0)))
    report.add("W_quadrature_err_estimate", sol.err_estimate)
    if params.alpha == 0 and params.gamma == 0:
        ref = np.array([conservative_W(params.m, params.lam, E, float(x), cfg.hj.x_lo) for x in grid])
        report.add("W_closed_form", float(np.max(np.abs(sol.W - ref))), cfg.verify.tol("W_closed_form"))
    if cfg.sweep is not None:
        _limits(cfg, out_dir, report, E, grid)

    report.write(os.path.join(out_dir, "hj_report.json"), cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_recover(cfg, out_dir):
    params = cfg.system.params()
    E = _energy_default(cfg)
    grid = _grid(cfg) if cfg.hj.x_hi > cfg.hj.x_lo else np.array([cfg.hj.x_lo])
    report = Report()
    comp = compare_recovery(params, E, grid, step=cfg.integration.step)
    write_table(
        os.path.join(out_dir, f"recover.{cfg.output.format}"),
        ["tau", "x_ode", "x_hj", "abs_err"],
        np.column_stack([comp.tau, comp.x_ode, comp.x_hj, comp.abs_err]),
        cfg.output.format,
    )
    report.add("recover_max_abs_err", comp.max_abs_err, cfg.verify.tol("recover"))
    report.write(os.path.join(out_dir, "recover_report.json"), cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_limits(cfg, out_dir):
    report = Report()
    _limits(cfg, out_dir, report, _energy_default(cfg), _grid(cfg))
    report.write(os.path.join(out_dir, "limits_report.json"), cfg)
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {
    "simulate": cmd_simulate,
    "verify": cmd_verify,
    "hj": cmd_hj,
    "recover": cmd_recover,
    "limits": cmd_limits,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="hamjac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--format", choices=("csv", "json"), help="table format (overrides output.format)")
        p.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO, format="%(message)s", stream=sys.stderr
    )
    try:
        cfg = load(args.config)
    except (ConfigError, OSError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    if args.out:
        cfg.output.directory = args.out
    if args.format:
        cfg.output.format = args.format
    os.makedirs(cfg.output.directory, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, cfg.output.directory)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DomainError, GuardViolation) as exc:
        log.error("validity-domain abort: %s", exc)
        return EXIT_DOMAIN
    except HamjacError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
