"""Config-driven batch front end.

Subcommands: solve | expand | audit | converge | oracle, each reading
one TOML config (--config), writing delimited artifacts plus JSON
sidecars into --out, and stamping every file with the config hash and
tool version. Runs are deterministic: identical config + seed produce
byte-identical artifacts (shortest round-trip float encoding, sorted
JSON keys, no timestamps).

Exit codes: 0 ok, 2 config, 3 precondition, 4 instability,
5 certificate failure. Failures emit a machine-readable diagnostic on
stderr and, when the output directory exists, into diagnostic.json.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from . import energy, expansion, operator, oracle, solver
from .errors import (
    AssumptionViolationError, CertificateError, ConfigError,
    CornerCompatibilityError, DomainError, ExpressionError,
    FitConditioningError, InstabilityError, ResolutionError,
    ScriwaveError, UnsupportedClassError, UnsupportedOracleError,
)
from .expressions import parse_expression
from .metric import conformal_reduce, load_metric_file, make_minkowski, make_schwarzschild
from .solver import BoundaryData, Grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_INSTABILITY = 4
EXIT_CERTIFICATE = 5

_PRECONDITION_ERRORS = (
    AssumptionViolationError, UnsupportedClassError, CornerCompatibilityError,
    DomainError, ResolutionError, FitConditioningError, UnsupportedOracleError,
)


class RunConfig:
    """Validated run configuration; see README for the schema."""

    def __init__(self, doc, path, seed, out_dir, command):
        self.raw = doc
        self.command = command
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.config_hash = hashlib.sha256(Path(path).read_bytes()).hexdigest()

        domain = doc.get("domain", {})
        self.T = float(domain.get("T", 1.0))
        self.z0 = float(domain.get("z0", 1.0))
        if self.T <= 0 or self.z0 <= 0:
            raise ConfigError(f"domain extents must be positive, got T={self.T}, z0={self.z0}")

        grid = doc.get("grid", {})
        self.n_tau = int(grid.get("n_tau", 101))
        self.n_z = int(grid.get("n_z", 101))
        if self.n_tau < 3 or self.n_z < 3:
            raise ConfigError(f"grid must be at least 3 x 3, got {self.n_tau} x {self.n_z}")

        metric = doc.get("metric", {})
        self.metric_kind = metric.get("kind", "minkowski")
        self.metric_mass = float(metric.get("mass", 0.0))
        self.metric_path = metric.get("path")
        if self.metric_kind not in ("minkowski", "schwarzschild", "file"):
            raise ConfigError(f"unknown metric kind {self.metric_kind!r}")
        if self.metric_kind == "file":
            if not self.metric_path:
                raise ConfigError("metric kind 'file' needs metric.path")
            if not Path(self.metric_path).exists():
                raise ConfigError(f"metric file {self.metric_path!r} does not exist")

        modes = doc.get("modes", {})
        if "l" in modes:
            ls = modes["l"]
            self.modes = [int(ls)] if isinstance(ls, int) else [int(x) for x in ls]
        else:
            lo = int(modes.get("l_min", 0))
            hi = int(modes.get("l_max", lo))
            self.modes = list(range(lo, hi + 1))
        if not self.modes or any(l < 0 for l in self.modes):
            raise ConfigError(f"mode list must be nonempty and nonnegative, got {self.modes}")

        data = doc.get("data", {})
        if "phi" not in data or "psi" not in data:
            raise ConfigError("config needs data.phi and data.psi expressions")
        try:
            self.phi_expr = parse_expression(str(data["phi"]))
            self.psi_expr = parse_expression(str(data["psi"]))
        except ExpressionError as exc:
            raise ConfigError(f"bad data expression: {exc}") from exc

        self.expand = doc.get("expand", {})
        self.audit = doc.get("audit", {})
        self.converge = doc.get("converge", {})
        self.oracle = doc.get("oracle", {})

    def metric(self):
        if self.metric_kind == "minkowski":
            return make_minkowski(self.T, self.z0)
        if self.metric_kind == "schwarzschild":
            return make_schwarzschild(self.metric_mass, self.T, self.z0)
        m = load_metric_file(self.metric_path)
        if m.T < self.T or m.z0 < self.z0:
            raise ConfigError(
                f"metric file domain [{m.T}, {m.z0}] does not cover requested "
                f"[{self.T}, {self.z0}]"
            )
        return m

    def grid(self):
        return Grid(self.T, self.z0, self.n_tau, self.n_z)

    def data(self):
        z0 = self.z0
        phi = self.phi_expr
        psi = self.psi_expr
        return BoundaryData(
            phi=lambda z: phi(0.0, z),
            psi=lambda tau: psi(tau, z0),
        )

    def meta(self):
        return {
            "tool": "scriwave",
            "version": __version__,
            "config_sha256": self.config_hash,
            "seed": self.seed,
            "command": self.command,
        }


def _fmt(x):
    return repr(float(x))


def write_csv(path, meta, columns):
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    n = len(arrays[0])
    lines = [f"# {k}: {v}" for k, v in sorted(meta.items())]
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_fmt(a[i]) for a in arrays))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, obj, meta):
    doc = {"_meta": meta, **obj}
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _mode_pipeline(cfg):
    metric = cfg.metric()
    problem = conformal_reduce(metric)
    coeffs = operator.assemble(problem)
    return problem, {l: operator.mode_reduce(coeffs, l) for l in cfg.modes}


def _solve_mode(cfg, mode_coeffs, grid=None):
    return solver.solve(mode_coeffs, cfg.data(), grid or cfg.grid())


def cmd_solve(cfg):
    _, modes = _mode_pipeline(cfg)
    completed = []
    for l, mc in modes.items():
        field = _solve_mode(cfg, mc)
        tt, zz = np.meshgrid(field.grid.tau(), field.grid.z(), indexing="ij")
        write_csv(
            cfg.out_dir / f"solution_l{l}.csv", cfg.meta(),
            {"tau": tt, "z": zz, "v": field.values},
        )
        completed.append(l)
        print(f"solved l={l}: {cfg.out_dir / f'solution_l{l}.csv'}")
    return completed


def cmd_expand(cfg):
    problem, modes = _mode_pipeline(cfg)
    k = int(cfg.expand.get("k", 2))
    if cfg.metric_kind == "schwarzschild":
        series = expansion.MetricSeries.schwarzschild(cfg.metric_mass, order=k)
    elif cfg.metric_kind == "minkowski":
        series = expansion.MetricSeries.minkowski(order=k)
    else:
        raise ConfigError("expansion recursion needs the background z-series; "
                          "file metrics are fit-only (set expand.method = 'fit')")
    method = cfg.expand.get("method", "both")
    for l, mc in modes.items():
        field = _solve_mode(cfg, mc)
        grid = field.grid
        data = cfg.data()
        tables = {}
        if method in ("fit", "both"):
            tables["fit"] = expansion.fit_coefficients(field, k)
        if method in ("recursion", "both"):
            v0 = expansion.extract_radiation_field(field)
            tables["recursion"] = expansion.recursion_coefficients(
                v0, grid.tau(), data.phi, grid.z(), l, k, metric_series=series,
            )
        sidecar = {"k": k, "l": l, "methods": {}}
        for name, table in tables.items():
            cols = {"tau": table.tau}
            for i in range(k):
                cols[f"v_{i}"] = table.coeffs[i]
            write_csv(cfg.out_dir / f"expansion_{name}_l{l}.csv", cfg.meta(), cols)
            sidecar["methods"][name] = {
                "method": table.method,
                "metric_series": table.metric_series.as_dict() if table.metric_series else None,
                "fit_window": table.fit_window,
                "condition_number": table.condition_number,
                "remainder_certificate": expansion.remainder_certificate(field, table, k),
            }
        if len(tables) == 2:
            dev = float(np.max(np.abs(tables["fit"].coeffs - tables["recursion"].coeffs)))
            sidecar["cross_deviation"] = dev
        write_json(cfg.out_dir / f"expansion_l{l}.json", sidecar, cfg.meta())
        print(f"expanded l={l} (k={k}): {cfg.out_dir / f'expansion_l{l}.json'}")


def cmd_audit(cfg):
    problem, modes = _mode_pipeline(cfg)
    weights = None
    audit_cfg = cfg.audit
    if {"m", "q", "l_weight"} & set(audit_cfg):
        weights = energy.EnergyWeights(
            m=float(audit_cfg.get("m", 4.0)),
            q=float(audit_cfg.get("q", 4.0)),
            l=float(audit_cfg.get("l_weight", 8.0)),
        )
    epsilon = audit_cfg.get("epsilon")
    samples = int(audit_cfg.get("samples", 4096))
    for l, mc in modes.items():
        field = _solve_mode(cfg, mc)
        report = energy.audit_h1(
            problem, field, cfg.data(), weights=weights,
            epsilon=float(epsilon) if epsilon else None,
            seed=cfg.seed, samples=samples,
        )
        write_json(cfg.out_dir / f"audit_l{l}.json", report.as_dict(), cfg.meta())
        print(f"audited l={l}: {cfg.out_dir / f'audit_l{l}.json'}")


def cmd_converge(cfg):
    _, modes = _mode_pipeline(cfg)
    levels = int(cfg.converge.get("levels", 3))
    exact_expr = cfg.converge.get("exact")
    exact = parse_expression(str(exact_expr)) if exact_expr else None
    for l, mc in modes.items():
        report = solver.convergence_study(mc, cfg.data(), cfg.grid(), levels, exact=exact)
        write_json(cfg.out_dir / f"convergence_l{l}.json", report.as_dict(), cfg.meta())
        print(f"convergence l={l}: {cfg.out_dir / f'convergence_l{l}.json'}")


def cmd_oracle(cfg):
    _, modes = _mode_pipeline(cfg)
    N = int(cfg.oracle.get("N", 8))
    window = float(cfg.oracle.get("window", cfg.T / 4.0))
    psi = cfg.data().psi
    for l, mc in modes.items():
        grid = cfg.grid()
        field = _solve_mode(cfg, mc, grid)
        # boundary Taylor data from the sampled psi (finite differences at 0)
        psi_taylor = _taylor_from_samples(psi, window, N)
        sol = oracle.taylor_solve(mc, cfg.data().phi, psi_taylor, N, grid.z())
        tau = grid.tau()
        sel = tau <= window + 1e-12
        tt, zz = np.meshgrid(tau[sel], grid.z(), indexing="ij")
        series_vals = oracle.evaluate_series(sol, tt, zz)
        deviation = float(np.max(np.abs(series_vals - field.values[sel])))
        recur = oracle_recurrence_residual(sol)
        write_json(
            cfg.out_dir / f"oracle_l{l}.json",
            {"N": N, "window": window, "max_deviation": deviation,
             "recurrence_residual": recur, "l": l},
            cfg.meta(),
        )
        print(f"oracle l={l}: max deviation {deviation:.3e}")


def _taylor_from_samples(fn, scale, N):
    """Taylor coefficients of fn at 0 from a least-squares fit on [0, scale]."""
    xs = np.linspace(0.0, scale, max(4 * (N + 1), 32))
    vals = np.asarray(fn(xs), float) + np.zeros_like(xs)
    A = np.vander(xs / scale, N=N + 1, increasing=True)
    sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
    return sol / scale ** np.arange(N + 1)


def oracle_recurrence_residual(sol):
    """Worst violation of (i+1) u0_{i+1} = w_i on the stored tables."""
    worst = 0.0
    for i in range(sol.N):
        worst = max(worst, float(np.max(np.abs((i + 1) * sol.u0[i + 1] - sol.w[i]))))
    return worst


_COMMANDS = {
    "solve": cmd_solve,
    "expand": cmd_expand,
    "audit": cmd_audit,
    "converge": cmd_converge,
    "oracle": cmd_oracle,
}


def _diagnostic(exc, code, out_dir=None):
    doc = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")
    if out_dir is not None and Path(out_dir).is_dir():
        Path(out_dir, "diagnostic.json").write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n"
        )
    return code


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="scriwave",
        description="Characteristic evolution to null infinity: solve, expand, audit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("solve", "march the modes and write solution CSVs"),
        ("expand", "extract asymptotic coefficients (fit and recursion)"),
        ("audit", "energy-framework audit of the solved field"),
        ("converge", "grid-refinement convergence study"),
        ("oracle", "tau-power-series oracle comparison"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="RNG seed recorded in artifacts")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    try:
        with open(args.config, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        return _diagnostic(ConfigError(f"config not found: {args.config}"), EXIT_CONFIG)
    except tomllib.TOMLDecodeError as exc:
        return _diagnostic(ConfigError(f"config parse error: {exc}"), EXIT_CONFIG)

    try:
        cfg = RunConfig(doc, args.config, args.seed, out_dir, args.command)
    except ConfigError as exc:
        return _diagnostic(exc, EXIT_CONFIG)

    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _diagnostic(exc, EXIT_CONFIG, out_dir)
    except InstabilityError as exc:
        return _diagnostic(exc, EXIT_INSTABILITY, out_dir)
    except CertificateError as exc:
        return _diagnostic(exc, EXIT_CERTIFICATE, out_dir)
    except _PRECONDITION_ERRORS as exc:
        return _diagnostic(exc, EXIT_PRECONDITION, out_dir)
    except ScriwaveError as exc:
        return _diagnostic(exc, EXIT_PRECONDITION, out_dir)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
