"""
wheelbounds command-line interface.

Evaluates the three-material conductivity bound, builds the optimal wheel
assemblages, verifies them numerically and sweeps the bound over fractions.
JSON and CSV go to stdout (or ``--output``); logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml
from dotenv import dotenv_values

from wheelbounds.cell_verifier import (
    VerificationRun,
    extrapolate,
    field_conditions_check,
    verify_dual,
    verify_homogeneous,
    verify_wheel,
    write_report,
)
from wheelbounds.cond_bounds import dual_resistivity_bound, lower_bound, optimal_fields
from wheelbounds.elastic_bounds import (
    ElasticSet,
    StiffnessSet,
    bulk_bound,
    dual_rigid_bound,
    elastic_field_spec,
    elastic_moduli,
    printed_intermediate_bound,
)
from wheelbounds.errors import ValidationError, VerificationFailedError
from wheelbounds.logging_config import configure_logging
from wheelbounds.phases import Regime, make_conductors, make_fractions, make_resistors
from wheelbounds.radial_solver import effective_conductivity, hub_field, solve_radial, solve_radial_fd
from wheelbounds.translation_oracle import classical_translation_bound, maximize_over_t
from wheelbounds.wheel_geometry import (
    build_wheel,
    limiting_structure,
    radial_profile,
    rasterize_sector,
    read_pgm,
    spike_parameters,
    write_pgm,
)

logger = logging.getLogger("wheelbounds")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_VERIFICATION = 3

ENV_PREFIX = "WHEELS_"
SWEEP_COLUMNS = ["m1", "m2", "regime", "B", "t_opt"]
RADIAL_AGREEMENT = 1e-9


@dataclass
class RunConfig:
    """Configuration of one wheelbounds invocation."""

    subcommand: str = "bounds"

    # Materials
    k1: Optional[float] = None
    k2: Optional[float] = None
    rho1: Optional[float] = None
    rho2: Optional[float] = None
    elastic: dict[str, Optional[float]] = field(default_factory=dict)
    dual: bool = False

    # Fractions and sweeps
    m1: Optional[float] = None
    m2: Optional[float] = None
    m1_range: Optional[tuple[float, float, float]] = None
    m2_range: Optional[tuple[float, float, float]] = None
    with_radial: bool = False
    with_fd: bool = False

    # Solver settings
    nr: int = 256
    ntheta: int = 1024
    n_spikes: int = 64
    contrast: float = 1e6
    r_out: float = 4.0
    cg_rtol: float = 1e-10
    secant_rtol: float = 1e-8
    fd_points: int = 64
    tolerance: float = 0.02
    series: list[int] = field(default_factory=list)
    homogeneous: bool = False
    fields: bool = False
    classical: bool = False

    # Input/output
    output_format: str = "text"
    output: Optional[str] = None
    pgm_out: Optional[str] = None
    pgm_in: Optional[str] = None
    digits: int = 12

    # Logging
    log_level: str = "WARNING"
    log_file: Optional[str] = None


def load_env_file(env_path: Path = Path(".env")) -> dict[str, str]:
    """
    Collect ``WHEELS_*`` settings from a .env file and the process environment.

    Variables already set in the environment win over the file.

    :param env_path: Path to the .env file; a missing file is not an error.
    :return: Mapping of variable names to values.
    """
    env_vars = {k: v for k, v in dotenv_values(env_path).items() if v is not None} if env_path.exists() else {}
    env_vars.update({k: v for k, v in os.environ.items() if k.startswith(ENV_PREFIX)})
    return {k: v for k, v in env_vars.items() if k.startswith(ENV_PREFIX)}


def load_yaml_config(config_path: Path = Path("config.yaml")) -> dict[str, Any]:
    """
    Load solver, output and logging defaults from YAML.

    :return: The parsed mapping, or an empty one if the file is missing or unreadable.
    """
    if not config_path.exists():
        return {}
    try:
        with open(config_path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError) as e:
        logger.warning("Ignoring unreadable config file %s: %s", config_path, e)
        return {}
    if not isinstance(data, dict):
        logger.warning("Ignoring config file %s: top level is not a mapping", config_path)
        return {}
    return data


# (RunConfig attribute, environment variable, yaml section, yaml key, type)
_LAYERED = [
    ("nr", "NR", "solver", "nr", int),
    ("ntheta", "NTHETA", "solver", "ntheta", int),
    ("n_spikes", "N_SPIKES", "solver", "n_spikes", int),
    ("contrast", "CONTRAST", "solver", "contrast", float),
    ("r_out", "R_OUT", "solver", "r_out", float),
    ("cg_rtol", "CG_RTOL", "solver", "cg_rtol", float),
    ("secant_rtol", "SECANT_RTOL", "solver", "secant_rtol", float),
    ("fd_points", "FD_POINTS", "solver", "fd_points", int),
    ("tolerance", "TOLERANCE", "solver", "tolerance", float),
    ("output_format", "FORMAT", "output", "format", str),
    ("digits", "DIGITS", "output", "digits", int),
    ("log_level", "LOG_LEVEL", "logging", "level", str),
    ("log_file", "LOG_FILE", "logging", "file", str),
]


def _parse_range(text: Optional[str], name: str) -> Optional[tuple[float, float, float]]:
    """
    Parse ``start:stop:step``.

    :raises ValidationError: unless start <= stop and step > 0.
    """
    if text is None:
        return None
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError as e:
        raise ValidationError(f"--{name} expects start:stop:step, got {text!r}.") from e
    if step <= 0 or start > stop:
        raise ValidationError(f"--{name} range {text!r} is empty: need start <= stop and step > 0.")
    return start, stop, step


def resolve_config(
    args: argparse.Namespace, env_path: Optional[Path] = None, config_path: Optional[Path] = None
) -> RunConfig:
    """
    Resolve configuration from multiple sources.

    Priority (highest to lowest):
    1. Command-line arguments
    2. Environment variables (``WHEELS_*``, also read from .env)
    3. YAML configuration (config.yaml)
    4. Default values

    :param args: Parsed command-line arguments.
    :param env_path: .env file to read; defaults to ``./.env``.
    :param config_path: YAML file to read; defaults to ``--config`` or ``./config.yaml``.
    :return: RunConfig with merged configuration.
    """
    env_vars = load_env_file(env_path or Path(".env"))
    yaml_config = load_yaml_config(config_path or Path(getattr(args, "config", None) or "config.yaml"))

    config = RunConfig(subcommand=args.command)
    for attr, env_name, section, key, cast in _LAYERED:
        cli_value = getattr(args, attr, None)
        env_value = env_vars.get(ENV_PREFIX + env_name)
        yaml_value = (yaml_config.get(section) or {}).get(key)
        for value in (cli_value, env_value, yaml_value):
            if value is not None:
                try:
                    setattr(config, attr, cast(value))
                except (TypeError, ValueError) as e:
                    raise ValidationError(f"Bad value {value!r} for {attr}.") from e
                break

    if getattr(args, "json", False):
        config.output_format = "json"
    for attr in ("k1", "k2", "rho1", "rho2", "m1", "m2", "output", "pgm_out", "pgm_in"):
        setattr(config, attr, getattr(args, attr, None))
    for attr in ("dual", "with_radial", "with_fd", "homogeneous", "fields", "classical"):
        setattr(config, attr, bool(getattr(args, attr, False)))
    config.m1_range = _parse_range(getattr(args, "m1_range", None), "m1-range")
    config.m2_range = _parse_range(getattr(args, "m2_range", None), "m2-range")
    config.series = list(getattr(args, "series", None) or [])
    config.elastic = {
        name: getattr(args, name, None)
        for name in (
            "kappa1", "kappa2", "eta1", "eta2", "young1", "poisson1", "young2", "poisson2",
            "bulk1", "bulk2", "shear1", "shear2",
        )
    }
    if config.output_format not in ("text", "json", "csv"):
        raise ValidationError(f"Unknown output format {config.output_format!r}.")
    return config


def _round(value: Any, digits: int) -> Any:
    """Round every float in a nested structure to ``digits`` significant digits."""
    if isinstance(value, float):
        if not math.isfinite(value) or value == 0:
            return value
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: _round(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v, digits) for v in value]
    return value


def _emit(cfg: RunConfig, payload: dict[str, Any]) -> None:
    payload = _round(payload, cfg.digits)
    if cfg.output_format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        text = "".join(f"{key} = {json.dumps(value, sort_keys=True)}\n" for key, value in payload.items())
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [name for name in names if getattr(cfg, name) is None]
    if missing:
        raise ValidationError("Missing required flags: " + ", ".join("--" + n.replace("_", "-") for n in missing))


def cmd_bounds(cfg: RunConfig) -> int:
    """Closed-form bound with regime, t_opt, thresholds and optimal-field conditions."""
    _require(cfg, "m1", "m2")
    f = make_fractions(cfg.m1, cfg.m2)
    if cfg.rho1 is not None or cfg.rho2 is not None:
        _require(cfg, "rho1", "rho2")
        r = make_resistors(cfg.rho1, cfg.rho2)
        result = dual_resistivity_bound(r, f)
        fields = optimal_fields(r.as_conductors(), f)
        payload = {"problem": "resistivity", **result.as_dict()}
    else:
        _require(cfg, "k1", "k2")
        c = make_conductors(cfg.k1, cfg.k2)
        result = lower_bound(c, f)
        fields = optimal_fields(c, f)
        payload = {"problem": "conductivity", **result.as_dict()}
    payload["fields"] = [spec.as_dict() for spec in fields]
    _emit(cfg, payload)
    return EXIT_OK


def cmd_wheel(cfg: RunConfig) -> int:
    """Optimal wheel, its radial effective conductivity and the attainment gap; optional PGM raster."""
    _require(cfg, "k1", "k2", "m1", "m2")
    c = make_conductors(cfg.k1, cfg.k2)
    f = make_fractions(cfg.m1, cfg.m2)
    wheel = build_wheel(c, f)
    profile = radial_profile(wheel, c)
    k_radial = effective_conductivity(profile)
    bound = lower_bound(c, f).value
    payload = {
        **wheel.as_dict(),
        "label": wheel.kind.label,
        "limiting_structure": limiting_structure(c, f),
        "k_radial": k_radial,
        "hub_field": hub_field(solve_radial(profile, k_radial)),
        "B": bound,
        "gap": abs(k_radial - bound) / bound,
    }
    if 0 < f.m2 < 1:
        b, b11, b12 = spike_parameters(c, f)
        payload.update({"b": b, "b11": b11, "b12": b12})
    if cfg.pgm_out:
        phase_map = rasterize_sector(wheel, c, cfg.n_spikes, cfg.nr, cfg.ntheta, cfg.contrast)
        write_pgm(phase_map, cfg.pgm_out)
        payload["pgm"] = cfg.pgm_out
        payload["raster_fractions"] = list(phase_map.fractions())
    _emit(cfg, payload)
    return EXIT_OK


def _verify_payload(cfg: RunConfig) -> dict[str, Any]:
    if cfg.homogeneous:
        _require(cfg, "k1", "k2")
        return verify_homogeneous(make_conductors(cfg.k1, cfg.k2), cfg.nr, cfg.ntheta, cfg.r_out, cfg.cg_rtol).as_dict()

    _require(cfg, "m1", "m2")
    f = make_fractions(cfg.m1, cfg.m2)
    if cfg.rho1 is not None or cfg.rho2 is not None:
        _require(cfg, "rho1", "rho2")
        r = make_resistors(cfg.rho1, cfg.rho2)
        report = verify_dual(
            r, f, cfg.n_spikes, cfg.nr, cfg.ntheta, cfg.contrast, cfg.r_out, cfg.cg_rtol, cfg.secant_rtol
        )
        return report.as_dict()

    _require(cfg, "k1", "k2")
    c = make_conductors(cfg.k1, cfg.k2)
    if cfg.series:
        runs, iterations = [], 0
        for n_spikes in cfg.series:
            report, _ = verify_wheel(
                c, f, n_spikes, cfg.nr, cfg.ntheta, cfg.contrast, cfg.r_out, cfg.cg_rtol, cfg.secant_rtol
            )
            runs.append(VerificationRun(n_spikes, cfg.contrast, cfg.nr, report.k_num))
            iterations += report.iterations
        fit = extrapolate(runs)
        payload = report.as_dict()
        payload.update(
            {
                "k_num": fit.k_inf,
                "rel_err": abs(fit.k_inf - report.bound) / report.bound,
                "iterations": iterations,
                "series": [{"n_spikes": run.n_spikes, "k_num": run.k_num} for run in runs],
                "extrapolation": fit.as_dict(),
                "kind": report.kind + "-extrapolated",
            }
        )
        return payload

    phase_map = read_pgm(cfg.pgm_in) if cfg.pgm_in else None
    report, measurement = verify_wheel(
        c, f, cfg.n_spikes, cfg.nr, cfg.ntheta, cfg.contrast, cfg.r_out, cfg.cg_rtol, cfg.secant_rtol, phase_map
    )
    payload = report.as_dict()
    if cfg.fields:
        codes = phase_map.phases if phase_map is not None else rasterize_sector(
            build_wheel(c, f), c, cfg.n_spikes, cfg.nr, cfg.ntheta, cfg.contrast
        ).phases
        payload["fields"] = field_conditions_check(measurement.sector, optimal_fields(c, f), codes).as_dict()
    return payload


def cmd_verify(cfg: RunConfig) -> int:
    """
    Rasterized finite-volume verification report.

    :raises VerificationFailedError: if rel_err exceeds ``cfg.tolerance``.
    """
    payload = _verify_payload(cfg)
    if cfg.output and cfg.output_format == "json":
        write_report(_round(payload, cfg.digits), cfg.output)
    else:
        _emit(cfg, payload)
    if payload["rel_err"] > cfg.tolerance:
        raise VerificationFailedError(
            f"Relative error {payload['rel_err']:.3e} exceeds tolerance {cfg.tolerance:.3e}."
        )
    return EXIT_OK


def _sweep_values(bounds: tuple[float, float, float]) -> list[float]:
    start, stop, step = bounds
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [float(f"{start + i * step:.12g}") for i in range(count)]


def _sweep_points(cfg: RunConfig) -> list[tuple[float, float]]:
    if cfg.m1_range is None and cfg.m2_range is None:
        raise ValidationError("sweep needs --m1-range and/or --m2-range.")
    m1_values = _sweep_values(cfg.m1_range) if cfg.m1_range else [cfg.m1]
    m2_values = _sweep_values(cfg.m2_range) if cfg.m2_range else [cfg.m2]
    if None in m1_values or None in m2_values:
        raise ValidationError("The fraction that is not swept must be fixed with --m1 or --m2.")
    points = [(m1, m2) for m2 in m2_values for m1 in m1_values if m1 + m2 <= 1.0 + 1e-12 and m1 + m2 > 0]
    if not points:
        raise ValidationError("The sweep contains no point of the volume-fraction simplex.")
    return points


def _post_check(rows: list[dict[str, Any]], with_radial: bool) -> None:
    """Log monotonicity in m1 at fixed m2 and agreement of k_radial with B."""
    by_m2: dict[float, list[dict[str, Any]]] = {}
    for row in rows:
        by_m2.setdefault(row["m2"], []).append(row)
    for m2, group in by_m2.items():
        values = [row["B"] for row in sorted(group, key=lambda row: row["m1"])]
        rises = sum(1 for a, b in zip(values, values[1:]) if b > a * (1 + 1e-12))
        if rises:
            logger.warning("post-check: B increases with m1 at %d points for m2=%g", rises, m2)
        else:
            logger.info("post-check: B is non-increasing in m1 for m2=%g (%d points)", m2, len(group))
    if with_radial:
        gaps = [abs(row["k_radial"] - row["B"]) / row["B"] for row in rows if row.get("k_radial") != ""]
        worst = max(gaps, default=0.0)
        level = logging.INFO if worst <= RADIAL_AGREEMENT else logging.WARNING
        logger.log(level, "post-check: max relative gap between k_radial and B is %.3e", worst)


def cmd_sweep(cfg: RunConfig) -> int:
    """CSV of the bound over a range of fractions, optionally with radial and FD attainment columns."""
    _require(cfg, "k1", "k2")
    c = make_conductors(cfg.k1, cfg.k2)
    columns = list(SWEEP_COLUMNS)
    if cfg.with_radial:
        columns.append("k_radial")
    if cfg.with_fd:
        columns.append("k_fd")

    rows = []
    for m1, m2 in _sweep_points(cfg):
        f = make_fractions(m1, m2)
        result = lower_bound(c, f)
        row: dict[str, Any] = {
            "m1": m1,
            "m2": m2,
            "regime": result.regime.label,
            "B": result.value,
            "t_opt": result.t_opt,
        }
        extra = columns[len(SWEEP_COLUMNS) :]
        if extra and m2 == 0:
            row.update(dict.fromkeys(extra, ""))
        elif extra:
            profile = radial_profile(build_wheel(c, f), c)
            if cfg.with_radial:
                row["k_radial"] = effective_conductivity(profile)
            if cfg.with_fd:
                row["k_fd"] = solve_radial_fd(profile, result.value, cfg.fd_points, cfg.contrast).energy
        rows.append(row)
    _post_check(rows, cfg.with_radial)

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(_round(row, cfg.digits))
    if cfg.output:
        Path(cfg.output).write_text(buffer.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buffer.getvalue())
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    """Numerical translation bound next to the closed form."""
    _require(cfg, "k1", "k2", "m1", "m2")
    c = make_conductors(cfg.k1, cfg.k2)
    f = make_fractions(cfg.m1, cfg.m2)
    result = classical_translation_bound(c, f) if cfg.classical else maximize_over_t(c, f)
    analytic = lower_bound(c, f).value
    payload = {
        **result.as_dict(),
        "classical": cfg.classical,
        "analytic_B": analytic,
        "rel_diff": abs(result.bound_value - analytic) / analytic,
    }
    _emit(cfg, payload)
    return EXIT_OK


def _elastic_set(cfg: RunConfig) -> ElasticSet:
    e = cfg.elastic
    for i in ("1", "2"):
        if e.get("kappa" + i) is None and e.get("young" + i) is not None:
            if e.get("poisson" + i) is None:
                raise ValidationError(f"--young{i} needs --poisson{i}.")
            e["kappa" + i], e["eta" + i] = elastic_moduli(e["young" + i], e["poisson" + i])
    missing = [name for name in ("kappa1", "kappa2", "eta1", "eta2") if e.get(name) is None]
    if missing:
        raise ValidationError("Missing elastic moduli: " + ", ".join("--" + name for name in missing))
    return ElasticSet(e["kappa1"], e["kappa2"], e["eta1"], e["eta2"])


def cmd_elastic(cfg: RunConfig) -> int:
    """Plane bulk compliance bound, or with ``--dual`` the bulk modulus bound for a rigid third phase."""
    _require(cfg, "m1", "m2")
    f = make_fractions(cfg.m1, cfg.m2)
    e = cfg.elastic
    if cfg.dual:
        missing = [name for name in ("bulk1", "bulk2", "shear1", "shear2") if e.get(name) is None]
        if missing:
            raise ValidationError("--dual needs " + ", ".join("--" + name for name in missing))
        stiff = StiffnessSet(e["bulk1"], e["bulk2"], e["shear1"], e["shear2"])
        result = dual_rigid_bound(stiff, f)
        s = stiff.renamed()
    else:
        s = _elastic_set(cfg)
        result = bulk_bound(s, f)
    payload = {"problem": "rigid" if cfg.dual else "void", **result.as_dict()}
    if result.regime is Regime.INTERMEDIATE:
        printed, printed_t = printed_intermediate_bound(s, f)
        payload.update({"printed_B2": printed, "printed_t_opt": printed_t})
    payload["fields"] = [spec.as_dict() for spec in elastic_field_spec(s, f, result)]
    _emit(cfg, payload)
    return EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "wheel": cmd_wheel,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "oracle": cmd_oracle,
    "elastic": cmd_elastic,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    output_group = common.add_argument_group("output flags")
    output_group.add_argument("--json", action="store_true", help="Write JSON to stdout (or --output)")
    output_group.add_argument("--format", dest="output_format", choices=["text", "json", "csv"], help="Output format")
    output_group.add_argument("--output", type=str, help="Write the report to this file instead of stdout")
    output_group.add_argument("--digits", type=int, help="Significant digits of numeric output (default: 12)")

    config_group = common.add_argument_group("configuration flags")
    config_group.add_argument("--config", type=str, help="YAML file with solver/output/logging defaults")
    config_group.add_argument("--log-level", dest="log_level", type=str, help="Logging level (default: WARNING)")
    config_group.add_argument("--log-file", dest="log_file", type=str, help="Also write logs to this file")
    return common


def _add_materials(parser: argparse.ArgumentParser, resistors: bool = True) -> None:
    group = parser.add_argument_group("material flags")
    group.add_argument("--k1", type=float, help="Conductivity of material 1 (k1 <= k2)")
    group.add_argument("--k2", type=float, help="Conductivity of material 2")
    if resistors:
        group.add_argument("--rho1", type=float, help="Resistivity of material 1 (dual problem)")
        group.add_argument("--rho2", type=float, help="Resistivity of material 2 (dual problem)")


def _add_fractions(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("fraction flags")
    group.add_argument("--m1", type=float, help="Volume fraction of material 1")
    group.add_argument("--m2", type=float, help="Volume fraction of material 2")


def _add_solver(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver flags")
    group.add_argument("--nr", type=int, help="Radial cells inside the wheel (default: 256)")
    group.add_argument("--ntheta", type=int, help="Angular cells, a multiple of 2 * n_spikes (default: 1024)")
    group.add_argument("--n-spikes", dest="n_spikes", type=int, help="Number of spikes (default: 64)")
    group.add_argument("--contrast", type=float, help="Finite stand-in for the ideal phase (default: 1e6)")
    group.add_argument("--r-out", dest="r_out", type=float, help="Outer radius of the embedding (default: 4)")
    group.add_argument("--cg-rtol", dest="cg_rtol", type=float, help="CG relative residual (default: 1e-10)")
    group.add_argument("--secant-rtol", dest="secant_rtol", type=float, help="Secant tolerance on k* (default: 1e-8)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="wheelbounds",
        description="Exact bounds and optimal wheel assemblages for three-material 2-D composites",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Bound in the intermediate regime
  wheelbounds bounds --k1 1 --k2 2 --m1 0.14 --m2 0.25 --json

  # Optimal wheel and its rasterization
  wheelbounds wheel --k1 1 --k2 2 --m1 0.1 --m2 0.25 --pgm-out wheel.pgm

  # Finite-volume verification, failing with exit code 3 above 2% error
  wheelbounds verify --k1 1 --k2 2 --m1 0.14 --m2 0.25 --tolerance 0.02

  # Bound curve as CSV
  wheelbounds sweep --k1 1 --k2 2 --m2 0.25 --m1-range 0:0.4:0.01 --with-radial

Exit codes: 0 ok, 1 internal error, 2 invalid input, 3 verification failed.
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    bounds = subparsers.add_parser("bounds", parents=[common], help="Closed-form bound")
    _add_materials(bounds)
    _add_fractions(bounds)

    wheel = subparsers.add_parser("wheel", parents=[common], help="Optimal wheel assemblage")
    _add_materials(wheel, resistors=False)
    _add_fractions(wheel)
    _add_solver(wheel)
    wheel.add_argument("--pgm-out", dest="pgm_out", type=str, help="Rasterize the wheel to this PGM file")

    verify = subparsers.add_parser("verify", parents=[common], help="Finite-volume verification")
    _add_materials(verify)
    _add_fractions(verify)
    _add_solver(verify)
    verify_group = verify.add_argument_group("verification flags")
    verify_group.add_argument("--tolerance", type=float, help="Maximum relative error (default: 0.02)")
    verify_group.add_argument("--series", type=int, nargs="+", help="Spike counts for an extrapolation series")
    verify_group.add_argument("--pgm-in", dest="pgm_in", type=str, help="Phase map to verify instead of rasterizing")
    verify_group.add_argument("--homogeneous", action="store_true", help="Sanity run on a pure k2 disk")
    verify_group.add_argument("--fields", action="store_true", help="Check the optimal-field conditions")

    sweep = subparsers.add_parser("sweep", parents=[common], help="CSV of the bound over fractions")
    _add_materials(sweep, resistors=False)
    _add_fractions(sweep)
    sweep.add_argument("--m1-range", dest="m1_range", type=str, metavar="START:STOP:STEP", help="Swept m1 values")
    sweep.add_argument("--m2-range", dest="m2_range", type=str, metavar="START:STOP:STEP", help="Swept m2 values")
    sweep.add_argument("--with-radial", dest="with_radial", action="store_true", help="Add the k_radial column")
    sweep.add_argument("--with-fd", dest="with_fd", action="store_true", help="Add the finite-difference k_fd column")
    sweep.add_argument("--fd-points", dest="fd_points", type=int, help="FD nodes per profile segment (default: 64)")
    sweep.add_argument("--contrast", type=float, help="Radial K_r of the spikes in the FD column (default: 1e6)")

    oracle = subparsers.add_parser("oracle", parents=[common], help="Numerical translation bound")
    _add_materials(oracle, resistors=False)
    _add_fractions(oracle)
    oracle.add_argument("--classical", action="store_true", help="Drop the pointwise det constraint (t <= k1)")

    elastic = subparsers.add_parser("elastic", parents=[common], help="Plane elasticity bulk bound")
    _add_fractions(elastic)
    elastic_group = elastic.add_argument_group("elastic moduli flags")
    for i in ("1", "2"):
        elastic_group.add_argument(f"--kappa{i}", type=float, help=f"Reciprocal plane bulk modulus of material {i}")
        elastic_group.add_argument(f"--eta{i}", type=float, help=f"Reciprocal shear modulus of material {i}")
        elastic_group.add_argument(f"--young{i}", type=float, help=f"Young's modulus of material {i}")
        elastic_group.add_argument(f"--poisson{i}", type=float, help=f"Poisson's ratio of material {i}")
        elastic_group.add_argument(f"--bulk{i}", type=float, help=f"Plane bulk modulus of material {i} (--dual)")
        elastic_group.add_argument(f"--shear{i}", type=float, help=f"Shear modulus of material {i} (--dual)")
    elastic.add_argument("--dual", action="store_true", help="Rigid third phase instead of void")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_VALIDATION

    try:
        cfg = resolve_config(args)
    except ValidationError as e:
        configure_logging(None, "wheelbounds", "WARNING")
        logger.error("%s", e)
        return EXIT_VALIDATION
    configure_logging(cfg.log_file, "wheelbounds", cfg.log_level)

    try:
        return COMMANDS[cfg.subcommand](cfg)
    except ValidationError as e:
        logger.error("%s", e)
        return EXIT_VALIDATION
    except VerificationFailedError as e:
        logger.error("%s", e)
        return EXIT_VERIFICATION
    except Exception as e:
        logger.error("Unexpected error in %s: %s", cfg.subcommand, e, exc_info=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
