"""Command-line driver: batch verifications that emit JSON or CSV reports.

    hermite-flow verify-bellman --p 2 4 --samples 20000
    hermite-flow embedding --n 1 --p 2 4 --out emb.json
    hermite-flow riesz-scan --p 2 4 8 --table scan.csv
    hermite-flow kernels --n 1 --format csv
    hermite-flow multiplier

Exit codes: 0 all reports pass, 1 some report fails, 2 configuration error,
64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Sequence

from . import __version__
from . import checks
from .hermite import DEFAULT_DEGREE, MAX_DEGREE
from .report import CheckReport

SCHEMA_VERSION = "hermite-flow/1"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_USAGE = 0, 1, 2, 64
P_MIN = 1.001

DEFAULT_TOLERANCES = {
    "bellman": 1e-8,
    "gradient": 1e-6,
    "hessian": 1e-5,
    "mass": 1e-8,
    "semigroup": 1e-8,
    "poisson": 1e-6,
    "heat_sup": 1e-10,
    "lhs": 1e-6,
    "embedding": 1e-5,
    "lemma": 1e-8,
    "potential": 1e-6,
    "riesz_l2": 1e-10,
    "riesz_p2": 1e-6,
    "duality": 1e-8,
    "o0": 1e-12,
    "zusatz": 1e-12,
    "zusatz_eq": 1e-8,
    "flatness": 0.05,
    "slope": 1.2,
}

COMMANDS = ("verify-bellman", "embedding", "riesz-scan", "kernels", "multiplier")

# per-command defaults for fields left unset
DEFAULTS = {
    "verify-bellman": {"p": [2.0, 2.5, 3.0, 4.0, 8.0], "samples": 100_000, "n": [1]},
    "embedding": {"p": [2.0], "samples": 20, "n": [1], "degree": 4},
    "riesz-scan": {"p": [2.0, 4.0, 8.0, 16.0, 32.0], "samples": 4, "n": [1]},
    "kernels": {"p": [], "samples": 10_000, "n": [1, 2]},
    "multiplier": {"p": [1.25, 2.0, 4.0], "samples": 100, "n": [1, 2, 3]},
}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


class UsageError(Exception):
    """Malformed command line; maps to exit code 64."""


@dataclass
class RunConfig:
    command: str
    n: list[int] = field(default_factory=list)
    p: list[float] = field(default_factory=list)
    degree: int | None = None
    samples: int | None = None
    seed: int = 0
    iterations: int = 50
    tol: dict[str, float] = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    word: str | None = None
    table: str | None = None

    def tolerance(self, name: str) -> float:
        return self.tol.get(name, DEFAULT_TOLERANCES[name])

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("out")
        d.pop("table")
        d["tol"] = {k: self.tolerance(k) for k in sorted(DEFAULT_TOLERANCES)}
        return d


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.word is not None and not cfg.n:
        from .riesz import RieszWord

        try:
            cfg.n = [RieszWord.parse(cfg.word).n]
        except ValueError as exc:
            raise ConfigError(f"field 'word': {exc}") from None
    for k, v in DEFAULTS[cfg.command].items():
        if getattr(cfg, k) in (None, []):
            setattr(cfg, k, list(v) if isinstance(v, list) else v)
    if cfg.degree is None:
        cfg.degree = DEFAULT_DEGREE.get(cfg.n[0], 6)
    for n in cfg.n:
        if not isinstance(n, int) or not 1 <= n <= 3:
            raise ConfigError(f"field 'n': dimension must be 1, 2 or 3, got {n!r}")
    for p in cfg.p:
        if not isinstance(p, (int, float)) or not math.isfinite(p) or p < P_MIN:
            raise ConfigError(f"field 'p': exponent must be a finite number ≥ {P_MIN}, got {p!r}")
    if not isinstance(cfg.degree, int) or not 0 <= cfg.degree <= MAX_DEGREE:
        raise ConfigError(f"field 'degree': must be an integer in [0, {MAX_DEGREE}], got {cfg.degree!r}")
    if not isinstance(cfg.samples, int) or cfg.samples < 1:
        raise ConfigError(f"field 'samples': must be a positive integer, got {cfg.samples!r}")
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError(f"field 'seed': must be a non-negative integer, got {cfg.seed!r}")
    if not isinstance(cfg.iterations, int) or cfg.iterations < 0:
        raise ConfigError(f"field 'iterations': must be a non-negative integer, got {cfg.iterations!r}")
    if cfg.format not in ("json", "csv"):
        raise ConfigError(f"field 'format': must be 'json' or 'csv', got {cfg.format!r}")
    for k, v in cfg.tol.items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"field 'tol.{k}': unknown tolerance; known: {', '.join(sorted(DEFAULT_TOLERANCES))}")
        if not isinstance(v, (int, float)) or not v >= 0:
            raise ConfigError(f"field 'tol.{k}': must be a non-negative number, got {v!r}")
    if cfg.word is not None:
        from .riesz import RieszWord

        try:
            RieszWord.parse(cfg.word, max(cfg.n))
        except ValueError as exc:
            raise ConfigError(f"field 'word': {exc}") from None
    return cfg


def load_config_file(path: str) -> dict[str, Any]:
    """Read a JSON config; parse errors are reported with their line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    known = {f.name for f in fields(RunConfig)} - {"command"}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}: unknown field {key!r}")
    if "n" in data and isinstance(data["n"], int):
        data["n"] = [data["n"]]
    if "p" in data and isinstance(data["p"], (int, float)):
        data["p"] = [data["p"]]
    return data


# --------------------------------------------------------------------------
# commands


def cmd_verify_bellman(cfg: RunConfig) -> tuple[list[CheckReport], list[dict]]:
    reports = checks.bellman_checks(cfg.p, cfg.samples, cfg.seed, cfg.tolerance("bellman"))
    points = min(cfg.samples, 1000)
    for p in cfg.p:
        reports += checks.bellman_derivative_checks(p, points, cfg.seed, cfg.tolerance("gradient"),
                                                    cfg.tolerance("hessian"))
    return reports, []


def cmd_embedding(cfg: RunConfig) -> tuple[list[CheckReport], list[dict]]:
    from .embedding import random_pairs

    reports: list[CheckReport] = []
    for n in cfg.n:
        for p in cfg.p:
            reports += checks.gaussian_lhs_check(n, p, cfg.tolerance("lhs"))
            reports += checks.random_chain_checks(n, p, cfg.samples, cfg.degree, cfg.seed,
                                                  cfg.tolerance("embedding"))
            f, g = random_pairs(1, n, cfg.degree, cfg.seed)[0]
            reports.append(checks.lemma31_check(f, g, p, 1000, cfg.seed, cfg.tolerance("lemma"), "random"))
        reports += checks.potential_checks(n=n, tolerance=cfg.tolerance("potential"))
    reports += checks.dimension_checks((1, 2, 3), cfg.p[0])
    return reports, []


def cmd_riesz_scan(cfg: RunConfig) -> tuple[list[CheckReport], list[dict]]:
    from .riesz import RieszWord

    reports: list[CheckReport] = []
    rows: list[dict] = []
    if cfg.word is not None:
        n = max(cfg.n)
        word = RieszWord.parse(cfg.word, n)
        reports, rows = checks.word_scan_checks(word, cfg.p, min(cfg.degree, DEFAULT_DEGREE.get(n, 6)),
                                                cfg.samples, cfg.seed, min(cfg.iterations, 20))
        return reports, rows
    for n in cfg.n:
        reports += checks.riesz_l2_checks(n, 100, min(cfg.degree, 8), cfg.seed, cfg.tolerance("riesz_l2"))
        rs, rw = checks.riesz_scan_checks(cfg.p, n, cfg.degree, cfg.samples, cfg.seed, cfg.iterations,
                                          cfg.tolerance("slope"), p2_tol=cfg.tolerance("riesz_p2"))
        reports += rs
        rows += [dict(r, n=n) for r in rw]
    return reports, rows


def cmd_kernels(cfg: RunConfig) -> tuple[list[CheckReport], list[dict]]:
    reports: list[CheckReport] = []
    for n in cfg.n:
        reports.append(checks.mass_identity_check(n, 20, cfg.seed, cfg.tolerance("mass")))
        reports.append(checks.semigroup_check(n, 20, cfg.seed, cfg.tolerance("semigroup")))
        reports.append(checks.domination_check(n, cfg.samples, cfg.seed))
        reports.append(checks.poisson_spectral_check(n, 6, cfg.tolerance("poisson")))
        reports += checks.heat_norm_checks(n, 100, cfg.tolerance("heat_sup"))
        reports += checks.gradient_checks(n, 200, cfg.seed)
    return reports, []


def cmd_multiplier(cfg: RunConfig) -> tuple[list[CheckReport], list[dict]]:
    reports = checks.o_multiplier_checks(cfg.n, cfg.tolerance("o0"))
    reports += checks.zusatz_checks(rtol=cfg.tolerance("zusatz"), eq_tol=cfg.tolerance("zusatz_eq"))
    for n in cfg.n:
        if n <= 2:
            reports += checks.duality_checks(n, cfg.samples, 6, cfg.seed, cfg.tolerance("duality"))
    rs, rows = checks.psi_flatness_checks(cfg.n, cfg.p, 3, cfg.seed, min(cfg.iterations, 30),
                                          cfg.tolerance("flatness"))
    return reports + rs, rows


HANDLERS: dict[str, Callable[[RunConfig], tuple[list[CheckReport], list[dict]]]] = {
    "verify-bellman": cmd_verify_bellman,
    "embedding": cmd_embedding,
    "riesz-scan": cmd_riesz_scan,
    "kernels": cmd_kernels,
    "multiplier": cmd_multiplier,
}


# --------------------------------------------------------------------------
# output


def render_json(cfg: RunConfig, reports: Sequence[CheckReport]) -> str:
    doc = {"version": SCHEMA_VERSION, "config": cfg.to_dict(), "reports": [r.to_dict() for r in reports]}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_csv(reports: Sequence[CheckReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "params", "value", "bound", "margin", "pass", "runtime_ms"])
    for r in reports:
        d = r.to_dict()
        w.writerow([d["name"], json.dumps(d["params"], sort_keys=True), repr(d["value"]), repr(d["bound"]),
                    repr(d["margin"]), str(d["pass"]).lower(), d["runtime_ms"]])
    return buf.getvalue()


def render_table(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _split_tol_flags(argv: Sequence[str]) -> tuple[list[str], dict[str, float]]:
    """Pull out --tol.NAME VALUE and --tol.NAME=VALUE pairs, which argparse cannot declare."""
    rest: list[str] = []
    tol: dict[str, float] = {}
    i = 0
    while i < len(argv):
        a = argv[i]
        i += 1
        if not a.startswith("--tol."):
            rest.append(a)
            continue
        key, eq, val = a[len("--tol."):].partition("=")
        if not eq:
            if i >= len(argv):
                raise UsageError(f"{a} expects a value")
            val = argv[i]
            i += 1
        if not key:
            raise UsageError(f"{a}: missing tolerance name")
        try:
            tol[key] = float(val)
        except ValueError:
            raise ConfigError(f"field 'tol.{key}': not a number: {val!r}") from None
    return rest, tol


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--n", type=int, nargs="+", help="dimension(s), 1 to 3")
    common.add_argument("--p", type=float, nargs="+", help="exponent(s), each ≥ %.3f" % P_MIN)
    common.add_argument("--degree", type=int, help="Hermite degree M")
    common.add_argument("--samples", type=int, help="sample count / family size (command specific)")
    common.add_argument("--seed", type=int, help="RNG seed (default 0)")
    common.add_argument("--iterations", type=int, help="power-method iterations (default 50)")
    common.add_argument("--config", help="JSON file with any of the fields above")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--table", help="write the scan table (CSV) here")
    common.add_argument("--word", help="Riesz word such as '1+ 1- 2+' (riesz-scan)")
    common.add_argument("--quiet", action="store_true", help="no per-report lines on stderr")

    parser = _Parser(prog="hermite-flow", description="Hermite semigroup and Riesz transform verifications.",
                     epilog="Tolerances: --tol.NAME VALUE with NAME in " + ", ".join(sorted(DEFAULT_TOLERANCES)))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    helps = {
        "verify-bellman": "certify the Bellman function properties on sampled points",
        "embedding": "bilinear embedding chain, pointwise lower bound and potential term",
        "riesz-scan": "Riesz transform L^2 identities and L^p lower-bound scans",
        "kernels": "heat and Poisson kernel identities and bounds",
        "multiplier": "shell multipliers, duality formulas and the closed-form integral bound",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], description=helps[name])
    return parser


def parse_config(argv: Sequence[str]) -> tuple[RunConfig, bool]:
    argv, tol = _split_tol_flags(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a command is required")
    data: dict[str, Any] = load_config_file(args.config) if args.config else {}
    for key in ("n", "p", "degree", "samples", "seed", "iterations", "out", "format", "table", "word"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    data["tol"] = {**data.get("tol", {}), **tol}
    if not isinstance(data["tol"], dict):
        raise ConfigError("field 'tol': must be an object")
    return RunConfig(command=args.command, **data), args.quiet


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, quiet = parse_config(argv)
    except UsageError as exc:
        print(f"hermite-flow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"hermite-flow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        _validate(cfg)
    except UsageError as exc:
        print(f"hermite-flow: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        # the run is well-formed but degenerate: emit an empty report
        print(f"hermite-flow: config error: {exc}", file=sys.stderr)
        _emit(render_json(cfg, []) if cfg.format == "json" else render_csv([]), cfg.out)
        return EXIT_CONFIG
    reports, rows = HANDLERS[cfg.command](cfg)
    reports = checks.sort_reports(reports)
    if not quiet:
        for r in reports:
            print(r, file=sys.stderr)
    _emit(render_json(cfg, reports) if cfg.format == "json" else render_csv(reports), cfg.out)
    if cfg.table:
        _emit(render_table(rows), cfg.table)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
