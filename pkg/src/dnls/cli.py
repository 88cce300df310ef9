"""Batch command line front end.

Five subcommands drive the library from a single JSON config file:

* ``certify`` computes the existence certificate and boundary evidence,
* ``solve``   certifies, then runs homotopy continuation with Newton polish,
* ``steady``  solves the time-independent reduction on K spatial nodes,
* ``verify``  recomputes the nodewise residual of a solution CSV from the
  file alone (the repository's independent ground-truth gate),
* ``degree``  estimates the Brouwer degree of both fixed-point maps.

Every command prints one JSON document to standard output and mirrors it
into ``--out`` (default: the working directory); ``solve`` and ``steady``
additionally write the solution as CSV.  All outputs are deterministic
functions of (config, seed): rerunning a command reproduces byte-identical
bytes.

Exit codes: 0 success, 1 config or dimension errors, 2 certificate failures
(no subcubic threshold, or an invalid boundary check), 3 solver failures,
4 degree estimates that failed their parity or agreement checks.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .certificate import ExistenceCertificate, build_certificate
from .degree import DegreeReport, estimate_degree
from .errors import (
    CertificateInvalid,
    ConfigError,
    DimensionMismatch,
    DimensionTooLarge,
    DnlsError,
    NoThresholdFound,
    SolveFailed,
)
from .lattice import LatticeField, LatticeParams, sup_norm
from .operators import build_shifted
from .potentials import (
    Potential,
    _power_law_unchecked,
    bounded_potential,
    constant_potential,
    power_law,
    zero_potential,
)
from .solver import (
    SolveReport,
    homotopy_solve,
    residual_direct,
    steady_state_solve,
    tile_steady,
)

__all__ = ["RunConfig", "PotentialSpec", "load_config", "build_potential", "main", "entrypoint"]

#: largest realified dimension the degree command accepts
DEGREE_DIM_CAP = 64

CSV_FIELD_HEADER = "t,k,re,im"
CSV_STEADY_HEADER = "k,re,im"


@dataclass(frozen=True)
class PotentialSpec:
    """Forcing description from the config: kind, complex coefficients,
    and the growth exponent (power-law kinds only)."""

    kind: str
    coefficients: tuple[complex, ...]
    exponent: float | None


@dataclass(frozen=True)
class RunConfig:
    """One parsed and validated config document."""

    params: LatticeParams
    potential: PotentialSpec
    shift_factor: float
    slack: float
    tolerance: float
    max_iter: int
    samples: int
    n_starts: int
    seed: int


# ---------------------------------------------------------------------------
# config parsing


def _as_real(raw: object, field: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"field {field!r}: expected a number, got {raw!r}")
    return float(raw)


def _as_int(raw: object, field: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"field {field!r}: expected an integer, got {raw!r}")
    return raw


def _parse_coefficients(raw: object, field: str) -> tuple[complex, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(f"field {field!r}: expected a nonempty list of [re, im] pairs")
    out = []
    for i, pair in enumerate(raw):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or any(isinstance(p, bool) or not isinstance(p, (int, float)) for p in pair)
        ):
            raise ConfigError(
                f"field {field}[{i}]: expected a two-element [re, im] pair, got {pair!r}"
            )
        out.append(complex(pair[0], pair[1]))
    return tuple(out)


_POTENTIAL_KINDS = ("power_law", "bounded", "zero", "constant")


def _parse_potential(raw: object) -> PotentialSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"field 'potential': expected an object, got {raw!r}")
    allowed = {"kind", "coefficients", "exponent"}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"field 'potential': unknown subfields {unknown}")
    kind = raw.get("kind")
    if kind not in _POTENTIAL_KINDS:
        raise ConfigError(
            f"field 'potential.kind': expected one of {list(_POTENTIAL_KINDS)}, got {kind!r}"
        )
    if kind == "zero":
        coeffs: tuple[complex, ...] = ()
        if "coefficients" in raw:
            coeffs = _parse_coefficients(raw["coefficients"], "potential.coefficients")
    else:
        if "coefficients" not in raw:
            raise ConfigError(f"field 'potential.coefficients': required for kind {kind!r}")
        coeffs = _parse_coefficients(raw["coefficients"], "potential.coefficients")
    exponent: float | None = None
    if kind == "power_law":
        if "exponent" not in raw:
            raise ConfigError("field 'potential.exponent': required for kind 'power_law'")
        exponent = _as_real(raw["exponent"], "potential.exponent")
        if exponent <= 0:
            raise ConfigError(
                f"field 'potential.exponent': must be positive, got {exponent}"
            )
    elif "exponent" in raw:
        raise ConfigError(f"field 'potential.exponent': not accepted for kind {kind!r}")
    return PotentialSpec(kind=kind, coefficients=coeffs, exponent=exponent)


_DEFAULTS = {
    "shift_factor": 1.5,
    "slack": 0.1,
    "tolerance": 1e-10,
    "max_iter": 100,
    "samples": 10000,
    "n_starts": 32,
    "seed": 0,
}

_REQUIRED = ("T", "K", "beta", "epsilon", "gamma", "potential")


def parse_config(doc: object) -> RunConfig:
    """Validate one decoded JSON document into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError(f"config root: expected a JSON object, got {type(doc).__name__}")
    known = set(_REQUIRED) | set(_DEFAULTS)
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"config: unknown fields {unknown}")
    missing = [name for name in _REQUIRED if name not in doc]
    if missing:
        raise ConfigError(f"config: missing required fields {missing}")

    try:
        params = LatticeParams(
            T=_as_int(doc["T"], "T"),
            K=_as_int(doc["K"], "K"),
            beta=_as_real(doc["beta"], "beta"),
            epsilon=_as_real(doc["epsilon"], "epsilon"),
            gamma=_as_real(doc["gamma"], "gamma"),
        )
    except ValueError as exc:
        raise ConfigError(f"config: {exc}") from exc

    spec = _parse_potential(doc["potential"])

    values = dict(_DEFAULTS)
    for name in _DEFAULTS:
        if name in doc:
            if name in ("max_iter", "samples", "n_starts", "seed"):
                values[name] = _as_int(doc[name], name)
            else:
                values[name] = _as_real(doc[name], name)
    if values["shift_factor"] <= 1:
        raise ConfigError(f"field 'shift_factor': must exceed 1, got {values['shift_factor']}")
    if values["slack"] < 0:
        raise ConfigError(f"field 'slack': must be nonnegative, got {values['slack']}")
    if values["tolerance"] <= 0:
        raise ConfigError(f"field 'tolerance': must be positive, got {values['tolerance']}")
    for name in ("max_iter", "samples", "n_starts"):
        if values[name] < 0:
            raise ConfigError(f"field {name!r}: must be nonnegative, got {values[name]}")
    if values["seed"] < 0:
        raise ConfigError(f"field 'seed': must be nonnegative, got {values['seed']}")

    return RunConfig(params=params, potential=spec, **values)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc)


def build_potential(spec: PotentialSpec) -> Potential:
    """Instantiate the forcing described by a PotentialSpec.

    Power-law exponents at or beyond the cubic rate are deliberately let
    through (via the formula-free constructor) so that the certificate scan
    rejects them with NoThresholdFound, which is the contract for
    hypothesis-violating potentials; nonpositive exponents never reach this
    point (config validation rejects them).
    """
    try:
        if spec.kind == "zero":
            return zero_potential(period=max(1, len(spec.coefficients)))
        if spec.kind == "bounded":
            return bounded_potential(list(spec.coefficients))
        if spec.kind == "constant":
            return constant_potential(list(spec.coefficients))
        assert spec.kind == "power_law"
        if spec.exponent is not None and spec.exponent >= 3:
            return _power_law_unchecked(list(spec.coefficients), spec.exponent)
        return power_law(list(spec.coefficients), spec.exponent)
    except DnlsError as exc:
        raise ConfigError(f"field 'potential': {exc}") from exc


def _check_period(config: RunConfig, g: Potential) -> None:
    if config.params.T % g.period != 0:
        raise ConfigError(
            f"field 'potential.coefficients': period {g.period} does not divide T="
            f"{config.params.T}"
        )


# ---------------------------------------------------------------------------
# serialization helpers


def _emit(payload: dict, out_dir: Path, name: str) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    sys.stdout.write(text)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text, newline="\n")


def write_field_csv(path: Path, field: LatticeField) -> None:
    """Row-major `t,k,re,im` dump with 17 significant digits per component."""
    lines = [CSV_FIELD_HEADER]
    vals = field.values
    for t in range(field.T):
        for k in range(field.K):
            z = vals[t, k]
            lines.append(f"{t},{k},{z.real:.17g},{z.imag:.17g}")
    path.write_text("\n".join(lines) + "\n", newline="\n")


def write_steady_csv(path: Path, profile: np.ndarray) -> None:
    """`k,re,im` dump of a spatial profile, 17 significant digits."""
    lines = [CSV_STEADY_HEADER]
    for k, z in enumerate(profile):
        lines.append(f"{k},{z.real:.17g},{z.imag:.17g}")
    path.write_text("\n".join(lines) + "\n", newline="\n")


def read_solution_csv(path: str | Path, params: LatticeParams) -> LatticeField:
    """Parse a solution CSV back into a field under the given dimensions.

    Accepts the full `t,k,re,im` layout (exactly T*K rows, every node once)
    and the steady `k,re,im` layout (exactly K rows, lifted to all T time
    slices).  Anything else raises DimensionMismatch.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DimensionMismatch(f"cannot read solution file {path}: {exc}") from exc
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise DimensionMismatch(f"solution file {path} is empty")
    header, rows = lines[0], lines[1:]

    def parse_row(line: str, want: int) -> list[float]:
        parts = line.split(",")
        if len(parts) != want:
            raise DimensionMismatch(
                f"solution file {path}: expected {want} columns, got {len(parts)} in {line!r}"
            )
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise DimensionMismatch(f"solution file {path}: non-numeric row {line!r}") from exc

    T, K = params.T, params.K
    if header == CSV_FIELD_HEADER:
        if len(rows) != T * K:
            raise DimensionMismatch(
                f"solution file {path}: expected {T * K} rows for T={T}, K={K}, got {len(rows)}"
            )
        grid = np.full((T, K), np.nan, dtype=complex)
        for line in rows:
            t_raw, k_raw, re, im = parse_row(line, 4)
            t, k = int(t_raw), int(k_raw)
            if t != t_raw or k != k_raw or not (0 <= t < T and 0 <= k < K):
                raise DimensionMismatch(
                    f"solution file {path}: node ({t_raw}, {k_raw}) outside the {T}x{K} lattice"
                )
            if not np.isnan(grid[t, k].real):
                raise DimensionMismatch(f"solution file {path}: node ({t}, {k}) appears twice")
            grid[t, k] = complex(re, im)
        return LatticeField(grid)
    if header == CSV_STEADY_HEADER:
        if len(rows) != K:
            raise DimensionMismatch(
                f"solution file {path}: expected {K} rows for K={K}, got {len(rows)}"
            )
        profile = np.zeros(K, dtype=complex)
        seen = np.zeros(K, dtype=bool)
        for line in rows:
            k_raw, re, im = parse_row(line, 3)
            k = int(k_raw)
            if k != k_raw or not 0 <= k < K:
                raise DimensionMismatch(
                    f"solution file {path}: node {k_raw} outside 0..{K - 1}"
                )
            if seen[k]:
                raise DimensionMismatch(f"solution file {path}: node {k} appears twice")
            seen[k] = True
            profile[k] = complex(re, im)
        return tile_steady(profile, T)
    raise DimensionMismatch(
        f"solution file {path}: unrecognized header {header!r} "
        f"(expected {CSV_FIELD_HEADER!r} or {CSV_STEADY_HEADER!r})"
    )


def _certificate_payload(cert: ExistenceCertificate) -> dict:
    return {
        "shift": cert.shift,
        "norm_linear": cert.norm_linear,
        "norm_shifted": cert.norm_shifted,
        "norm_shifted_inv": cert.norm_shifted_inv,
        "threshold_coef": cert.threshold_coef,
        "threshold_radius": cert.threshold_radius,
        "forcing_sup": cert.forcing_sup,
        "const_bound": cert.const_bound,
        "linear_bound": cert.linear_bound,
        "cubic_bound": cert.cubic_bound,
        "radius": cert.radius,
        "margin": cert.margin,
        "rigor": cert.rigor,
        "boundary": {
            "count": cert.boundary.count,
            "min_gap": cert.boundary.min_gap,
            "argmin_hash": cert.boundary.argmin_hash,
        },
        "valid": cert.valid,
    }


def _solve_payload(report: SolveReport, csv_name: str | None) -> dict:
    return {
        "status": report.status,
        "method": report.method,
        "residual_direct": report.residual_direct,
        "residual_precond": report.residual_precond,
        "newton_iterations": report.newton_iterations,
        "homotopy_steps": report.homotopy_steps,
        "path": None if report.path is None else [[tau, norm] for tau, norm in report.path],
        "sup_norm": sup_norm(report.solution),
        "solution_csv": csv_name,
    }


def _degree_payload(report: DegreeReport) -> dict:
    return {
        "target": report.target,
        "radius": report.radius,
        "degree_estimate": report.degree_estimate,
        "parity_ok": report.parity_ok,
        "completeness": report.completeness,
        "origin_perturbed": report.origin_perturbed,
        "zeros": [
            {"sup_norm": sup_norm(z.field), "residual": z.residual, "sign": z.sign}
            for z in report.zeros
        ],
        "degenerate": [
            {
                "sup_norm": sup_norm(d.field),
                "residual": d.residual,
                "sigma_ratio": d.sigma_ratio,
                "local_index": d.local_index,
            }
            for d in report.degenerate
        ],
    }


# ---------------------------------------------------------------------------
# commands


def _certified_pipeline(config: RunConfig):
    g = build_potential(config.potential)
    _check_period(config, g)
    op = build_shifted(config.params, config.shift_factor)
    cert = build_certificate(
        op, g, slack=config.slack, samples=config.samples, seed=config.seed
    )
    return g, op, cert


def cmd_certify(config: RunConfig, out_dir: Path) -> int:
    """Existence certificate as JSON; exit 0 exactly when it is valid."""
    _, _, cert = _certified_pipeline(config)
    _emit({"command": "certify", "certificate": _certificate_payload(cert)},
          out_dir, "certificate.json")
    return 0 if cert.valid else 2


def cmd_solve(config: RunConfig, out_dir: Path) -> int:
    """Certify, track the homotopy, polish; dump the solution as CSV."""
    g, op, cert = _certified_pipeline(config)
    if not cert.valid:
        _emit({"command": "solve", "certificate": _certificate_payload(cert),
               "report": None}, out_dir, "report.json")
        return 2
    report = homotopy_solve(
        op, g, cert, tol=config.tolerance, max_iter=config.max_iter, seed=config.seed
    )
    csv_name = "solution.csv" if report.status == "converged" else None
    _emit(
        {
            "command": "solve",
            "certificate": _certificate_payload(cert),
            "report": _solve_payload(report, csv_name),
        },
        out_dir,
        "report.json",
    )
    if report.status != "converged":
        return 3
    write_field_csv(out_dir / csv_name, report.solution)
    return 0


def cmd_steady(config: RunConfig, out_dir: Path) -> int:
    """Steady-state solve (T forced to 1); dump the profile as CSV."""
    g = build_potential(config.potential)
    if g.period != 1:
        raise ConfigError(
            f"field 'potential.coefficients': steady forcing must have period 1, "
            f"got period {g.period}"
        )
    profile, report = steady_state_solve(
        K=config.params.K,
        epsilon=config.params.epsilon,
        gamma=config.params.gamma,
        h=g,
        tol=config.tolerance,
        beta=config.params.beta,
        shift_factor=config.shift_factor,
        slack=config.slack,
        samples=config.samples,
        n_starts=config.n_starts,
        seed=config.seed,
        max_iter=config.max_iter,
        full_output=True,
    )
    csv_name = "steady.csv"
    _emit(
        {"command": "steady", "report": _solve_payload(report, csv_name)},
        out_dir,
        "report.json",
    )
    write_steady_csv(out_dir / csv_name, profile)
    return 0


def cmd_verify(config: RunConfig, solution_path: str, out_dir: Path) -> int:
    """Independent residual check of a CSV solution; exit 0 iff it passes.

    Recomputes the nodewise lattice-equation residual from the file and the
    config alone, with no solver state involved.
    """
    g = build_potential(config.potential)
    _check_period(config, g)
    phi = read_solution_csv(solution_path, config.params)
    res = residual_direct(phi, config.params, g)
    moduli = np.abs(res.values)
    worst = np.unravel_index(int(np.argmax(moduli)), moduli.shape)
    max_residual = float(moduli.max())
    passed = max_residual <= config.tolerance
    _emit(
        {
            "command": "verify",
            "max_residual": max_residual,
            "mean_residual": float(moduli.mean()),
            "worst_node": [int(worst[0]), int(worst[1])],
            "tolerance": config.tolerance,
            "passed": passed,
        },
        out_dir,
        "verify.json",
    )
    return 0 if passed else 3


def cmd_degree(config: RunConfig, out_dir: Path) -> int:
    """Degree estimates for both fixed-point maps; exit 0 when the odd map's
    parity holds and the two estimates agree, 4 otherwise."""
    if 2 * config.params.dim > DEGREE_DIM_CAP:
        raise DimensionTooLarge(
            f"degree estimation caps the realified dimension at {DEGREE_DIM_CAP}, "
            f"got 2*T*K = {2 * config.params.dim}"
        )
    g, op, cert = _certified_pipeline(config)
    if not cert.valid:
        _emit({"command": "degree", "certificate": _certificate_payload(cert)},
              out_dir, "degree.json")
        return 2
    reports = {
        target: estimate_degree(
            target, op, g, cert, n_starts=config.n_starts, seed=config.seed
        )
        for target in ("odd", "full")
    }
    agree = reports["odd"].degree_estimate == reports["full"].degree_estimate
    ok = bool(reports["odd"].parity_ok) and agree
    _emit(
        {
            "command": "degree",
            "certificate": _certificate_payload(cert),
            "odd": _degree_payload(reports["odd"]),
            "full": _degree_payload(reports["full"]),
            "estimates_agree": agree,
            "flag": None if ok else "INCOMPLETE-ENUMERATION",
        },
        out_dir,
        "degree.json",
    )
    return 0 if ok else 4


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    """Argparse variant whose usage errors surface as config errors (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dnls", description="Periodic lattice equation toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (
        ("certify", "compute the existence certificate"),
        ("solve", "homotopy continuation solve"),
        ("steady", "time-independent solve on K nodes"),
        ("verify", "recheck a solution CSV against the equation"),
        ("degree", "estimate Brouwer degrees of both maps"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=".", help="directory for reports and CSV dumps")
        if name == "verify":
            p.add_argument("--solution", required=True, help="solution CSV to check")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
            config = replace(config, seed=args.seed)
        out_dir = Path(args.out)
        if args.command == "certify":
            return cmd_certify(config, out_dir)
        if args.command == "solve":
            return cmd_solve(config, out_dir)
        if args.command == "steady":
            return cmd_steady(config, out_dir)
        if args.command == "verify":
            return cmd_verify(config, args.solution, out_dir)
        assert args.command == "degree"
        return cmd_degree(config, out_dir)
    except (ConfigError, DimensionMismatch, DimensionTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NoThresholdFound, CertificateInvalid) as exc:
        print(f"certificate error: {exc}", file=sys.stderr)
        return 2
    except (SolveFailed, DnlsError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
