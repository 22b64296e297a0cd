"""Command line: ``squeezed-mzi <command> --config run.json --out DIR``.

Each command reads a JSON config, writes CSV/JSON results plus
``config_echo.json`` into the output directory and exits with 0 on success,
1 on invalid input and 2 on a numerical failure.  Failures print a single
JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .counting import CountModel
from .entanglement import entropy_comparison, product_criterion
from .errors import ConfigError, NotConverged, SimulationError
from .estimation import ESTIMATORS, ExperimentConfig, run_experiment
from .fisher import fmax_bound, qfi_from_covariance
from .fock import TruncationPolicy, make_coherent, make_squeezed_vacuum, tensor
from .io import write_csv, write_json
from .optimizer import OptimizationProblem, maximize_fdd_eigensweep, maximize_fdd_gradient

U64 = 2**64


# ------------------------------------------------------------------ schema


def _real(minimum=None):
    def check(key, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"{key}: expected a finite number, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {v}")
        return float(v)
    return check


def _int(minimum=None, maximum=None):
    def check(key, v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {v}")
        if maximum is not None and v > maximum:
            raise ConfigError(f"{key}: must be <= {maximum}, got {v}")
        return v
    return check


def _optional(check):
    def wrapped(key, v):
        return None if v is None else check(key, v)
    return wrapped


def _list_of(check, allow_empty=False):
    def wrapped(key, v):
        if not isinstance(v, list):
            v = [v]
        if not v and not allow_empty:
            raise ConfigError(f"{key}: empty sweep")
        return [check(f"{key}[{i}]", x) for i, x in enumerate(v)]
    return wrapped


def _choice(options):
    def check(key, v):
        if v not in options:
            raise ConfigError(f"{key}: expected one of {sorted(options)}, got {v!r}")
        return v
    return check


def _string(key, v):
    if not isinstance(v, str):
        raise ConfigError(f"{key}: expected a string, got {v!r}")
    return v


def _phi_grid(key, v):
    """A list of phases, or ``{"start", "stop", "num"}`` for an even grid."""
    if isinstance(v, dict):
        extra = set(v) - {"start", "stop", "num"}
        if extra:
            raise ConfigError(f"{key}: unknown key {sorted(extra)[0]!r}")
        try:
            start, stop, num = v["start"], v["stop"], v["num"]
        except KeyError as exc:
            raise ConfigError(f"{key}: missing {exc.args[0]!r}") from None
        num = _int(1)(f"{key}.num", num)
        return [float(x) for x in np.linspace(_real()(f"{key}.start", start), _real()(f"{key}.stop", stop), num)]
    return _list_of(_real())(key, v)


def _window(key, v):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"{key}: expected [lo, hi]")
    lo, hi = (_real()(f"{key}[{i}]", x) for i, x in enumerate(v))
    if not lo < hi:
        raise ConfigError(f"{key}: lo must be below hi")
    return [lo, hi]


REQUIRED = object()

COMMON = {
    "scenario": (_string, ""),
    "seed": (_int(0, U64 - 1), 0),
    "dim": (_optional(_int(2)), None),
    "threads": (_int(1), 1),
}

SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "qfi": {
        "alpha_sq": (_list_of(_real(0)), REQUIRED),
        "nbar": (_list_of(_real(0)), REQUIRED),
        "alpha_phase": (_real(), 0.0),
    },
    "optimize": {
        "alpha_sq": (_real(0), REQUIRED),
        "nbar": (_real(0), REQUIRED),
        "tol": (_real(1e-14), 1e-7),
        "init": (_choice({"perturbed-vacuum", "random"}), "perturbed-vacuum"),
        "sweep_points": (_int(4), 24),
    },
    "cfi": {
        "alpha": (_real(0), REQUIRED),
        "alpha_phase": (_real(), 0.0),
        "r": (_real(), 0.0),
        "phi": (_phi_grid, REQUIRED),
    },
    "estimate": {
        "alpha": (_real(0), REQUIRED),
        "alpha_phase": (_real(), 0.0),
        "r": (_real(), 0.0),
        "phi_true": (_real(), REQUIRED),
        "shots_per_trial": (_int(1), REQUIRED),
        "trials": (_int(1), REQUIRED),
        "estimator": (_choice(set(ESTIMATORS)), "MaximumLikelihood"),
        "marginal": (_choice({"joint", "nd"}), "joint"),
        "window": (_window, [0.0, math.pi]),
    },
    "entropy": {
        "alpha": (_real(0), 2.0),
        "alpha_phase": (_real(), 0.0),
        "nbar": (_list_of(_int(0), allow_empty=True), [1, 4]),
        "coherent_beta": (_list_of(_real(), allow_empty=True), []),
        "squeeze_r": (_list_of(_real(), allow_empty=True), []),
    },
}


def resolve_config(command: str, raw: dict, overrides: dict | None = None) -> dict:
    """Validate ``raw`` against the command's schema and fill defaults.

    Flag ``overrides`` (values that are not ``None``) replace config entries.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    schema = {**COMMON, **SCHEMAS[command]}
    raw = dict(raw)
    if "command" in raw:
        if raw.pop("command") != command:
            raise ConfigError(f"config is for a different command than {command!r}")
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r}")
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    out = {"command": command}
    for key, (check, default) in schema.items():
        if key in raw:
            out[key] = check(key, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        else:
            out[key] = default
    return out


# ---------------------------------------------------------------- commands


def _alpha(cfg, magnitude) -> complex:
    return complex(magnitude * np.exp(1j * cfg["alpha_phase"]))


def _product_state(alpha: complex, r: float, dim: int | None):
    coh = TruncationPolicy(dim) if dim else TruncationPolicy.for_mean(abs(alpha) ** 2)
    sq = TruncationPolicy(dim) if dim else TruncationPolicy.for_squeezed(r)
    return tensor(make_coherent(alpha, coh), make_squeezed_vacuum(r, sq))


def cmd_qfi(cfg: dict, out: Path) -> dict:
    """QFI matrix and F_dd bound over an (alpha^2, nbar) sweep."""
    header = ["alpha_sq", "nbar", "f_ss", "f_sd", "f_dd", "f_max", "R", "n_tot"]
    rows = []
    for a2 in cfg["alpha_sq"]:
        for nbar in cfg["nbar"]:
            r = math.asinh(math.sqrt(nbar))
            fm = qfi_from_covariance(_product_state(_alpha(cfg, math.sqrt(a2)), r, cfg["dim"]))
            rep = fmax_bound(a2, nbar)
            rows.append([a2, nbar, fm.f_ss, fm.f_sd, fm.f_dd, rep.f_max, rep.remainder_R, rep.n_tot])
    write_csv(out / "qfi.csv", header, rows)
    rel = [abs(row[4] - row[5]) / max(row[5], 1.0) for row in rows]
    summary = {"rows": len(rows), "max_rel_dev_fdd_vs_fmax": max(rel)}
    write_json(out / "summary.json", summary)
    return summary


def cmd_optimize(cfg: dict, out: Path) -> dict:
    """Maximize F_dd over the secondary state with both optimizer routes."""
    prob = OptimizationProblem(cfg["alpha_sq"], cfg["nbar"], dim=cfg["dim"], tol=cfg["tol"], seed=cfg["seed"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NotConverged)
        results = [
            maximize_fdd_gradient(prob, init=cfg["init"]),
            maximize_fdd_eigensweep(prob, sweep_points=cfg["sweep_points"]),
        ]
    report = {}
    log_rows = []
    for res in results:
        amps = res.chi_opt.amps
        write_csv(out / f"chi_opt_{res.method}.csv", ["n", "re", "im"],
                  [[n, a.real, a.imag] for n, a in enumerate(amps)])
        report[res.method] = {
            "fdd_achieved": res.fdd_achieved,
            "fmax_analytic": res.fmax_analytic,
            "rel_gap": abs(res.fdd_achieved - res.fmax_analytic) / max(res.fmax_analytic, 1.0),
            "fidelity_to_squeezed": res.fidelity_to_squeezed,
            "iterations": res.iterations,
            "converged": res.converged,
            "dim": res.chi_opt.dim,
        }
        for step, entry in enumerate(res.log):
            for key, val in sorted(entry.items()):
                log_rows.append([res.method, step, key, val])
    write_csv(out / "convergence_log.csv", ["method", "step", "quantity", "value"], log_rows)
    write_json(out / "report.json", report)
    failed = [res.method for res in results if not res.converged]
    if failed:
        raise SimulationError(f"optimizer did not converge: {', '.join(failed)}")
    return report


def cmd_cfi(cfg: dict, out: Path) -> dict:
    """Classical vs quantum Fisher information over a phase grid."""
    state = _product_state(_alpha(cfg, cfg["alpha"]), cfg["r"], cfg["dim"])
    model = CountModel(state)
    qfi = qfi_from_covariance(state).f_dd
    rows = []
    for phi in cfg["phi"]:
        joint, nd_only = model.fisher(phi)
        rows.append([phi, joint, qfi, nd_only])
    write_csv(out / "cfi.csv", ["phi_d", "cfi", "qfi", "cfi_nd_only"], rows)
    summary = {
        "qfi": qfi,
        "max_rel_dev_cfi_vs_qfi": max(abs(row[1] - qfi) for row in rows) / max(qfi, 1e-300),
        "min_nd_only_ratio": min(row[3] for row in rows) / max(qfi, 1e-300),
        "truncation_tail": model.tail,
    }
    write_json(out / "summary.json", summary)
    return summary


def cmd_estimate(cfg: dict, out: Path) -> dict:
    """Monte Carlo phase estimation against the Cramer-Rao bound."""
    try:
        exp = ExperimentConfig(
            alpha=_alpha(cfg, cfg["alpha"]), r=cfg["r"], phi_true=cfg["phi_true"],
            shots_per_trial=cfg["shots_per_trial"], trials=cfg["trials"], seed=cfg["seed"],
            dim=cfg["dim"], estimator=cfg["estimator"], window=tuple(cfg["window"]), marginal=cfg["marginal"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    run = run_experiment(exp, threads=cfg["threads"])
    write_csv(out / "estimates.csv", ["trial", "estimate"], list(enumerate(run.estimates)))
    summary = run.summary()
    write_json(out / "summary.json", summary)
    return summary


def cmd_entropy(cfg: dict, out: Path) -> dict:
    """Post-beam-splitter entanglement tables."""
    alpha = _alpha(cfg, cfg["alpha"])
    comp_rows = []
    for nbar in cfg["nbar"]:
        ec = entropy_comparison(nbar, alpha)
        if nbar == 0:
            order = "equal"
        else:
            order = "number > squeezed" if ec.entropy_number > ec.entropy_squeezed else "number <= squeezed"
        comp_rows.append([nbar, ec.entropy_squeezed, ec.entropy_number, order])
    write_csv(out / "entropy_comparison.csv", ["nbar", "entropy_squeezed", "entropy_number", "ordering"], comp_rows)
    crit_rows = []
    for beta in cfg["coherent_beta"]:
        chi = make_coherent(beta, TruncationPolicy.for_mean(beta**2))
        pc = product_criterion(chi, alpha)
        crit_rows.append(["coherent", beta, pc.entropy_after_bs, pc.cross_moment.real, pc.cross_moment.imag])
    for r in cfg["squeeze_r"]:
        chi = make_squeezed_vacuum(r, TruncationPolicy.for_squeezed(r))
        pc = product_criterion(chi, alpha)
        crit_rows.append(["squeezed", r, pc.entropy_after_bs, pc.cross_moment.real, pc.cross_moment.imag])
    write_csv(out / "product_criterion.csv", ["family", "parameter", "entropy", "cross_re", "cross_im"], crit_rows)
    summary = {
        "comparisons": len(comp_rows),
        "criterion_rows": len(crit_rows),
        "max_coherent_entropy": max((row[2] for row in crit_rows if row[0] == "coherent"), default=None),
    }
    write_json(out / "summary.json", summary)
    return summary


COMMANDS = {"qfi": cmd_qfi, "optimize": cmd_optimize, "cfi": cmd_cfi, "estimate": cmd_estimate, "entropy": cmd_entropy}


# -------------------------------------------------------------------- main


@dataclass
class Outcome:
    code: int
    record: dict | None = None


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as a numerical failure
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="squeezed-mzi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=COMMANDS[name].__doc__)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="overrides config seed (u64)")
        p.add_argument("--dim", type=int, default=None, help="overrides config truncation")
        p.add_argument("--threads", type=int, default=None, help="worker threads (estimate only)")
    return parser


def _error(command, exc: BaseException, code: int) -> Outcome:
    return Outcome(code, {"status": "error", "exit_code": code, "command": command,
                          "error": type(exc).__name__, "message": str(exc)})


def run(argv: list[str] | None = None) -> Outcome:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _error(None, exc, 1)
    try:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        cfg = resolve_config(args.command, raw, {"seed": args.seed, "dim": args.dim, "threads": args.threads})
        out = Path(args.out)
        write_json(out / "config_echo.json", {**cfg, "version": __version__})
        COMMANDS[args.command](cfg, out)
    except (ConfigError, ValueError) as exc:
        return _error(args.command, exc, 1)
    except (SimulationError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return _error(args.command, exc, 2)
    return Outcome(0)


def main(argv: list[str] | None = None) -> int:
    outcome = run(argv)
    if outcome.record is not None:
        print(json.dumps(outcome.record, sort_keys=True), file=sys.stderr)
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
