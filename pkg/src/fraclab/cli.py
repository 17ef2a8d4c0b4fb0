"""Command-line front end.

    fraclab spectrum --s 0.1 0.5 0.9 --k 10
    fraclab pohozaev --domain '{"kind": "disk"}'
    fraclab hadamard-check --config run.yaml
    fraclab simplify --domain '{"kind": "disk"}' --mode potential --report out.json

Exit codes: 0 success, 2 configuration error, 3 numerical failure (a
diagnostic JSON object goes to stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .config import COMMANDS, METHODS, ExperimentConfig
from .errors import ConfigError, FraclabError
from .genericity import MODES, simplify
from .geometry import field_from_config
from .output import emit, format_csv, format_json
from .shape_calculus import hadamard_check, pohozaev_residual
from .spectrum import solve, spectrum_rows

THREADS_ENV = "FRACLAB_THREADS"
log = logging.getLogger("fraclab")


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV}: must be >= 1, got {n}")
    return n


def _sweep(fn, values):
    """Map over s values, in order; parallel when FRACLAB_THREADS > 1."""
    n = _threads()
    if n == 1 or len(values) == 1:
        return [fn(v) for v in values]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, values))


def _default_indices(cfg: ExperimentConfig, one_d: list, two_d: list) -> list:
    if cfg.indices is not None:
        return cfg.indices
    return one_d if cfg.build_domain().dim == 1 else two_d


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_spectrum(cfg: ExperimentConfig) -> str:
    def run(s):
        spec = solve(cfg.problem(s).operator, cfg.k)
        return spectrum_rows(spec, cfg.rel_tol, s)
    rows = [r for block in _sweep(run, cfg.s) for r in block]
    return format_csv(["s", "k", "lambda", "cluster"], rows, cfg.hash)


def cmd_pohozaev(cfg: ExperimentConfig) -> str:
    indices = _default_indices(cfg, [1, 2, 3, 4, 5], [1])
    if max(indices) > cfg.k:
        raise ConfigError(f"indices: {max(indices)} beyond the computed spectrum (k={cfg.k})")

    def run(s):
        spec = solve(cfg.problem(s).operator, cfg.k)
        return [[s, i, pohozaev_residual(spec, i)] for i in indices]
    rows = [r for block in _sweep(run, cfg.s) for r in block]
    return format_csv(["s", "k", "residual"], rows, cfg.hash)


def cmd_hadamard_check(cfg: ExperimentConfig) -> str:
    indices = _default_indices(cfg, [1, 2, 3, 4, 5], [1, 2, 3])
    specs = cfg.field_specs()

    def run(s):
        problem = cfg.problem(s)
        out = []
        for label, fc in specs:
            psi = field_from_config(fc, problem.domain)
            for r in hadamard_check(problem, psi, indices, cfg.steps, cfg.rel_tol):
                out.append([s, label, r["k"], r["slope_formula"], r["slope_fd"], r["rel_err"], r["error_kind"]])
        return out
    rows = [r for block in _sweep(run, cfg.s) for r in block]
    header = ["s", "field", "k", "slope_formula", "slope_fd", "rel_err", "error_kind"]
    return format_csv(header, rows, cfg.hash)


def cmd_simplify(cfg: ExperimentConfig) -> str:
    if len(cfg.s) != 1:
        raise ConfigError("s: simplify takes a single order")
    report = simplify(cfg.problem(cfg.s[0]), cfg.plan())
    out = report.to_dict()
    out["config"] = cfg.to_dict()
    out["config_hash"] = cfg.hash
    return format_json(out)


COMMAND_FUNCS = {"spectrum": cmd_spectrum, "pohozaev": cmd_pohozaev,
                 "hadamard-check": cmd_hadamard_check, "simplify": cmd_simplify}


def run(cfg: ExperimentConfig) -> str:
    text = COMMAND_FUNCS[cfg.command](cfg)
    path = cfg.report if cfg.command == "simplify" and cfg.report else cfg.output
    emit(text, path)
    return text


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _json_arg(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration (flags override config keys)")
    g.add_argument("--config", help="YAML or JSON config file")
    g.add_argument("--domain", type=_json_arg, help='domain spec as JSON, e.g. \'{"kind": "disk"}\'')
    g.add_argument("--method", choices=METHODS)
    g.add_argument("--N", type=int, dest="N", help="spectral basis size")
    g.add_argument("--h", type=float, help="grid spacing")
    g.add_argument("--max-nodes", type=int, dest="max_nodes")
    g.add_argument("--s", type=float, nargs="+", help="one or more orders in (0, 1)")
    g.add_argument("--k", type=int, help="number of eigenvalues to compute")
    g.add_argument("--indices", type=int, nargs="+", help="1-based eigenvalue indices to check")
    g.add_argument("--rel-tol", type=float, dest="rel_tol", help="relative cluster tolerance")
    g.add_argument("--fields", type=_json_arg, help="list of field specs as JSON")
    g.add_argument("--steps", type=float, nargs="+", help="finite-difference steps")
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--q", type=int, help="number of eigenvalues to make simple")
    g.add_argument("--eps", type=float, help="budget scale")
    g.add_argument("--max-iterations", type=int, dest="max_iterations")
    g.add_argument("--potential", type=_json_arg, help="potential spec as JSON")
    g.add_argument("--weight", type=_json_arg, help="weight spec as JSON")
    g.add_argument("--seed", type=int, help="reserved; runs are deterministic")
    g.add_argument("--output", "-o", help="output file (default stdout)")
    g.add_argument("--report", help="simplify: report file (default: --output or stdout)")
    g.add_argument("--dump-config", dest="dump_config", metavar="PATH",
                   help="also write the effective config as YAML")
    g.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="fraclab", description="Dirichlet eigenvalues of the fractional Laplacian.")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"spectrum": "eigenvalues and cluster ids",
             "pohozaev": "Pohozaev identity residuals",
             "hadamard-check": "Hadamard slopes against finite differences",
             "simplify": "perturb until the first q eigenvalues are simple"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return p


OVERRIDES = ("domain", "method", "N", "h", "max_nodes", "s", "k", "indices", "rel_tol", "fields",
             "steps", "mode", "q", "eps", "max_iterations", "potential", "weight", "seed",
             "output", "report")


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    base = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    base["command"] = args.command
    for key in OVERRIDES:
        v = getattr(args, key, None)
        if v is not None:
            base[key] = v
    return ExperimentConfig.from_dict(base)


def _setup_logging(cfg: ExperimentConfig, verbose: bool):
    # keep stdout clean when the result itself goes there
    to_file = cfg.report if cfg.command == "simplify" and cfg.report else cfg.output
    handler = logging.StreamHandler(sys.stdout if to_file else sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    root = logging.getLogger("fraclab")
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    root.propagate = False


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        _setup_logging(cfg, args.verbose)
        if args.dump_config:
            emit(cfg.dumps("yaml"), args.dump_config)
        run(cfg)
    except ConfigError as exc:
        print(f"fraclab: config error: {exc}", file=sys.stderr)
        return 2
    except FraclabError as exc:
        diag = {"error": type(exc).__name__, "message": str(exc), "diagnostics": exc.diagnostics}
        sys.stderr.write(format_json(diag))
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
