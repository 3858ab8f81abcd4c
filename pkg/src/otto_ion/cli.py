"""``otto-ion`` command line: cycle, sweep, adiabatic and validate.

All energies are in units with hbar = 1 and k_B absorbed into ``kt_hot``.
Settings resolve as: ``--set``/``--out``/``--format``/``--seed`` flags, then
the ``--config`` JSON file, then the built-in defaults (``b_cold = 0.01`` for
``cycle``/``sweep``/``validate``, the slower ``10 -> 1`` ramp for ``adiabatic``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import qla
from .dynamics import IntegratorConfig, RampSpec, StabilityError, evolve_liouville
from .engine import field_grid, run_cycle, sweep_efficiency
from .model import (
    EngineParams,
    ParameterError,
    h_joint,
    h_joint_assembled,
    h_system,
    joint_eigenvalues_closed_form,
)
from .thermo import (
    boltzmann_weights,
    gibbs_joint,
    hot_occupations,
    ledger,
    occupations,
    reduce_to_system,
    reduced_gibbs_from_amplitudes,
    thermal_occupations_from_amplitudes,
)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    g: float = 0.2
    b_hot: float = 10.0
    b_cold: float = 0.01
    omega: float = 1.0
    k: float = 0.1
    kt_hot: float = 1.0
    tau: float = 5.0
    steps: int = 5000
    meas_cost: float | None = None
    z_convention: str = "transport"
    exhaust_mode: str = "selective"
    b_h_min: float = 0.01
    b_h_max: float = 10.0
    n_points: int = 200
    tau_list: tuple[float, ...] = (1.0, 5.0, 25.0)
    output_path: str | None = None
    output_format: str = "csv"
    seed: int | None = None
    # validate only: added to the closed-form U1 to exercise the failure path
    perturb_closed_form: float = 0.0

    def engine_params(self) -> EngineParams:
        return EngineParams(
            g=self.g,
            b_hot=self.b_hot,
            b_cold=self.b_cold,
            omega=self.omega,
            k=self.k,
            kt_hot=self.kt_hot,
            tau=self.tau,
            steps=self.steps,
            meas_cost=self.meas_cost,
            z_convention=self.z_convention,
        )

    def check(self) -> None:
        try:
            self.engine_params()
        except (ParameterError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.n_points < 1:
            raise ConfigError("n_points must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ConfigError("output_format must be 'csv' or 'json'")
        if self.exhaust_mode not in ("selective", "nonselective"):
            raise ConfigError("exhaust_mode must be 'selective' or 'nonselective'")
        if not self.tau_list or any(not t > 0 for t in self.tau_list):
            raise ConfigError("tau_list must hold positive durations")

    def check_grid(self) -> None:
        if self.b_h_min < self.b_cold or self.b_h_max < self.b_h_min:
            raise ConfigError("need b_cold <= b_h_min <= b_h_max")


COMMAND_DEFAULTS = {
    "adiabatic": {"b_cold": 1.0},
}

_FIELD_TYPES = {
    "g": float, "b_hot": float, "b_cold": float, "omega": float, "k": float,
    "kt_hot": float, "tau": float, "steps": int, "meas_cost": float,
    "z_convention": str, "exhaust_mode": str, "b_h_min": float, "b_h_max": float,
    "n_points": int, "tau_list": tuple, "output_path": str, "output_format": str,
    "seed": int, "perturb_closed_form": float,
}
_NULLABLE = {"meas_cost", "output_path", "seed"}


def _coerce(key: str, value):
    kind = _FIELD_TYPES[key]
    if value is None:
        if key in _NULLABLE:
            return None
        raise ConfigError(f"{key} may not be null")
    try:
        if kind is tuple:
            if isinstance(value, str):
                value = [v for v in value.strip("[] ").split(",") if v.strip()]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            return tuple(float(v) for v in value)
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind is float:
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if not isinstance(value, str):
            raise TypeError
        return value
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _apply(cfg: RunConfig, values: dict, origin: str) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in {origin}: {', '.join(unknown)}")
    return replace(cfg, **{k: _coerce(k, v) for k, v in values.items()})


def resolve_config(command: str, config_file: str | None = None, overrides: dict | None = None) -> RunConfig:
    cfg = _apply(RunConfig(), COMMAND_DEFAULTS.get(command, {}), "defaults")
    if config_file is not None:
        try:
            with open(config_file, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_file}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a flat JSON object")
        cfg = _apply(cfg, data, config_file)
    if overrides:
        cfg = _apply(cfg, overrides, "command line")
    cfg.check()
    return cfg


# -- serialisation ---------------------------------------------------------


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(x):
    # JSON cannot carry NaN/inf
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def table_output(cfg: RunConfig, header: list[str], rows: list[list]) -> str:
    if cfg.output_format == "json":
        return to_json([_clean(dict(zip(header, row))) for row in rows])
    return to_csv(header, rows)


def emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------


def cmd_cycle(cfg: RunConfig) -> int:
    record = run_cycle(cfg.engine_params(), mode=cfg.exhaust_mode, seed=cfg.seed)
    emit(cfg, to_json(_clean(record.as_dict())))
    return EXIT_OK


SWEEP_HEADER = ["b_h", "work", "eta", "eta_m", "flagged"]


def sweep_rows(cfg: RunConfig) -> list[list]:
    grid = field_grid(cfg.b_h_min, cfg.b_h_max, cfg.n_points)
    points = sweep_efficiency(cfg.engine_params(), grid)
    return [[p.b_hot, p.work, p.eta, p.eta_m, p.flagged] for p in points]


def cmd_sweep(cfg: RunConfig) -> int:
    emit(cfg, table_output(cfg, SWEEP_HEADER, sweep_rows(cfg)))
    return EXIT_OK


ADIABATIC_HEADER = ["tau", "t", "B", "p1", "p2", "xi", "trace", "purity"]


def adiabatic_rows(cfg: RunConfig) -> list[list]:
    """Trajectories for every ramp duration in ``tau_list``.

    The step size ``tau / steps`` of the base configuration is kept fixed, so
    each duration gets ``round(tau_i / dt)`` steps.
    """
    params = cfg.engine_params()
    rho0 = gibbs_joint(params, params.b_hot)
    dt = cfg.tau / cfg.steps
    rows = []
    for tau in cfg.tau_list:
        n = max(1, round(tau / dt))
        traj = evolve_liouville(rho0, params, RampSpec(params.b_hot, params.b_cold, tau), IntegratorConfig(n))
        for s in traj:
            rows.append([tau, s.t, s.b, s.p1, s.p2, s.xi, s.trace, s.purity])
    return rows


def cmd_adiabatic(cfg: RunConfig) -> int:
    emit(cfg, table_output(cfg, ADIABATIC_HEADER, adiabatic_rows(cfg)))
    return EXIT_OK


def _check(name: str, residual: float, tol: float) -> dict:
    return {"name": name, "residual": residual, "tolerance": tol, "passed": bool(residual <= tol)}


def validation_checks(cfg: RunConfig) -> list[dict]:
    """Oracle comparisons behind ``validate``; each returns its worst residual."""
    params = cfg.engine_params()
    rng = np.random.default_rng(0 if cfg.seed is None else cfg.seed)
    checks = []

    worst = 0.0
    for _ in range(1000):
        g, k = rng.uniform(0.0, 2.0, 2)
        b = rng.uniform(0.01, 20.0)
        w = rng.uniform(0.1, 5.0)
        p = EngineParams(g=g, k=k, omega=w, b_hot=20.0, b_cold=0.01)
        u = np.array(joint_eigenvalues_closed_form(p, b))
        u[0] += cfg.perturb_closed_form
        numeric = qla.hermitian_eigen(h_joint(p, b)).values
        worst = max(worst, float(np.max(np.abs(np.sort(u) - numeric))))
    checks.append(_check("closed_form_vs_numeric_spectrum", worst, 1e-9))

    worst = max(
        float(np.max(np.abs(h_joint(params, b) - h_joint_assembled(params, b))))
        for b in (params.b_cold, params.b_hot)
    )
    checks.append(_check("joint_hamiltonian_tensor_assembly", worst, 1e-14))

    decoupled = params.with_(k=0.0)
    rho = gibbs_joint(decoupled, params.b_hot)
    hs = h_system(params.g, params.b_hot)
    dec_s = qla.hermitian_eigen(hs)
    rho_s = qla.spectral_sum(boltzmann_weights(dec_s.values, params.kt_hot), dec_s.vectors)
    rho_ph = np.diag(boltzmann_weights([0.0, params.omega], params.kt_hot)).astype(complex)
    checks.append(_check("decoupled_gibbs_factorisation", float(np.max(np.abs(rho - qla.kron(rho_s, rho_ph)))), 1e-10))

    rho = gibbs_joint(params, params.b_hot)
    trace_path = reduce_to_system(rho)
    checks.append(
        _check(
            "partial_trace_vs_amplitude_sum",
            float(np.max(np.abs(trace_path - reduced_gibbs_from_amplitudes(params, params.b_hot)))),
            1e-12,
        )
    )
    occ_a = occupations(trace_path, params.g, params.b_hot)
    occ_b = thermal_occupations_from_amplitudes(params, params.b_hot)
    checks.append(_check("occupations_projector_vs_z_expansion", abs(occ_a.p1 - occ_b.p1), 1e-10))

    worst = 0.0
    transport = params.with_(z_convention="transport")
    for b_hot in np.linspace(max(params.b_cold, 0.01), 10.0, 20):
        for kt in np.linspace(0.1, 5.0, 20):
            p = transport.with_(b_hot=float(b_hot), kt_hot=float(kt))
            worst = max(worst, abs(ledger(p, hot_occupations(p)).first_law_residual))
    checks.append(_check("first_law_residual_transport", worst, 1e-12))

    ramp_params = params.with_(b_hot=10.0, b_cold=1.0, tau=5.0)
    rho0 = gibbs_joint(ramp_params, 10.0)
    ramp = RampSpec(10.0, 1.0, 5.0)
    coarse = evolve_liouville(rho0, ramp_params, ramp, IntegratorConfig(5000))[-1].rho
    fine = evolve_liouville(rho0, ramp_params, ramp, IntegratorConfig(10000))[-1].rho
    checks.append(_check("rk4_step_halving", float(np.max(np.abs(coarse - fine))), 1e-8))
    return checks


def cmd_validate(cfg: RunConfig) -> int:
    checks = validation_checks(cfg)
    for c in checks:
        status = "PASS" if c["passed"] else "FAIL"
        print(f"{status}  {c['name']}: residual {c['residual']:.3e} (tol {c['tolerance']:.0e})", file=sys.stderr)
    failed = [c["name"] for c in checks if not c["passed"]]
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
    emit(cfg, to_json({"checks": checks, "passed": not failed}))
    return EXIT_FAILURE if failed else EXIT_OK


COMMANDS = {
    "cycle": cmd_cycle,
    "sweep": cmd_sweep,
    "adiabatic": cmd_adiabatic,
    "validate": cmd_validate,
}


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = None if value.strip().lower() in ("none", "null") else value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otto-ion", description="Single trapped-ion quantum Otto engine.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="FILE", help="flat JSON object with RunConfig keys")
    parser.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--seed", type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = _parse_set(args.sets)
        if args.out is not None:
            overrides["output_path"] = args.out
        if args.format is not None:
            overrides["output_format"] = args.format
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = resolve_config(args.command, args.config, overrides)
        if args.command == "sweep":
            cfg.check_grid()
    except ConfigError as exc:
        print(f"otto-ion: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](cfg)
    except StabilityError as exc:
        print(f"otto-ion: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"otto-ion: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
