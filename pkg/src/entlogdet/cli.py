"""Command-line frontend.

Subcommands::

    entlogdet logdet   --matrix A.mtx [--samples 30] [--max-moments 8] ...
    entlogdet diagnose --matrix A.mtx [--oracle | --exact-logdet V]
    entlogdet moments  --matrix A.mtx

Exit status is 0 on success, 2 for file or parse errors and 3 for numerical
failure. Results go to stdout; with ``--output`` or ``$ENTLOGDET_OUTPUT_DIR``
they are also written to a file.
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
from dataclasses import asdict, dataclass
from pathlib import Path

from . import __version__
from .estimator import EstimationError, logdet, result_document
from .matio import MatrixMarketError, gershgorin_bound, read_matrix_market
from .maxent import Grid, MaxEntError
from .oracle import MAX_DENSE_DIM, exact_logdet
from .probe import ProbeConfig, estimate_moments

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3
OUTPUT_DIR_ENV = "ENTLOGDET_OUTPUT_DIR"

DIAGNOSE_COLUMNS = ["M", "entropy", "logdet", "residual", "ic", "abs_error", "converged"]

logger = logging.getLogger("entlogdet")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    matrix_path: str
    samples: int = 30
    max_moments: int = 8
    grid_dx: float = 1e-3
    tol: float = 1e-6
    eps_stop: float = 0.01
    max_iters: int = 100_000
    seed: int = 0
    output_format: str = "json"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            subcommand=args.command,
            matrix_path=args.matrix,
            samples=args.samples,
            max_moments=args.max_moments,
            grid_dx=args.grid_dx,
            tol=args.tol,
            eps_stop=args.eps_stop,
            max_iters=args.max_iters,
            seed=args.seed,
            output_format=args.format or _DEFAULT_FORMAT[args.command],
        )

    def probe_config(self) -> ProbeConfig:
        return ProbeConfig(self.samples, self.max_moments, self.seed)

    def grid(self) -> Grid:
        return Grid(self.grid_dx)


_DEFAULT_FORMAT = {"logdet": "json", "diagnose": "csv", "moments": "json"}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--matrix", required=True, help="Matrix Market file (coordinate real, symmetric or general)")
    p.add_argument("--samples", type=int, default=30, help="Gaussian probe vectors (default 30)")
    p.add_argument("--max-moments", type=int, default=8, help="highest moment order (default 8)")
    p.add_argument("--grid-dx", type=float, default=1e-3, help="MaxEnt grid spacing (default 0.001)")
    p.add_argument("--tol", type=float, default=1e-6, help="MaxEnt moment residual tolerance")
    p.add_argument("--eps-stop", type=float, default=0.01, help="entropy drop that stops adding moments (nats)")
    p.add_argument("--max-iters", type=int, default=100_000, help="MaxEnt cycle cap per moment count")
    p.add_argument("--seed", type=int, default=0, help="probe seed")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.add_argument("--output", type=Path, default=None, help="also write the result to this file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entlogdet", description="Maximum-entropy log-determinant estimation")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("logdet", help="estimate log det A")
    _add_common(p)

    p = sub.add_parser("diagnose", help="per-moment-count sweep for plotting")
    _add_common(p)
    oracle = p.add_mutually_exclusive_group()
    oracle.add_argument("--oracle", action="store_true", help=f"dense exact log det for abs_error (n <= {MAX_DENSE_DIM})")
    oracle.add_argument("--exact-logdet", type=float, default=None, help="known log det for abs_error")

    p = sub.add_parser("moments", help="stochastic moment estimates of A / c")
    _add_common(p)
    return parser


def _csv_text(rows: list[list], header: list[str], comments: list[str]) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_logdet(cfg: RunConfig) -> str:
    a = read_matrix_market(cfg.matrix_path)
    est, sweep, ic = logdet(
        a, cfg.probe_config(), cfg.grid(), cfg.tol, cfg.eps_stop, cfg.max_iters
    )
    doc = result_document(est, sweep, ic, asdict(cfg))
    if cfg.output_format == "json":
        return json.dumps(doc, indent=2) + "\n"
    header = ["logdet", "n", "c", "M_selected", "entropy", "residual", "probe_s", "maxent_s"]
    row = [doc["logdet"], doc["n"], doc["c"], doc["M_selected"], doc["entropy"], doc["residual"],
           doc["timing"]["probe_s"], doc["timing"]["maxent_s"]]
    return _csv_text([[_fmt(v) for v in row]], header, [f"config: {json.dumps(asdict(cfg))}"])


def cmd_diagnose(cfg: RunConfig, oracle: bool = False, exact: float | None = None) -> str:
    a = read_matrix_market(cfg.matrix_path)
    if oracle:
        exact = exact_logdet(a).logdet_exact
    est, sweep, ic = logdet(
        a, cfg.probe_config(), cfg.grid(), cfg.tol, cfg.eps_stop, cfg.max_iters, full_sweep=True
    )
    for e in sweep.entries:
        if e.failed:
            print(f"entlogdet: omitting M={e.M}: {e.error}", file=sys.stderr)
    rows = []
    for e in sweep.usable():
        ice = ic.get(e.M)
        rows.append({
            "M": e.M,
            "entropy": e.entropy,
            "logdet": e.logdet,
            "residual": e.residual,
            "ic": None if ice is None else ice.ic,
            "abs_error": None if exact is None else abs(e.logdet - exact),
            "converged": int(e.converged),
        })
    if cfg.output_format == "json":
        doc = {"config": asdict(cfg), "M_selected": est.moments_used, "exact_logdet": exact, "rows": rows}
        return json.dumps(doc, indent=2) + "\n"
    comments = [f"config: {json.dumps(asdict(cfg))}", f"M_selected: {est.moments_used}"]
    if exact is not None:
        comments.append(f"exact_logdet: {exact!r}")
    return _csv_text([[_fmt(r[k]) for k in DIAGNOSE_COLUMNS] for r in rows], DIAGNOSE_COLUMNS, comments)


def cmd_moments(cfg: RunConfig) -> str:
    a = read_matrix_market(cfg.matrix_path)
    norm = gershgorin_bound(a)
    moments = estimate_moments(a.scaled(1.0 / norm.c), cfg.probe_config())
    if cfg.output_format == "json":
        doc = moments.to_dict()
        doc["c"] = norm.c
        doc["config"] = asdict(cfg)
        return json.dumps(doc, indent=2) + "\n"
    rows = [[m + 1, _fmt(float(moments.means[m])), _fmt(float(moments.std[m]))] for m in range(moments.max_moment)]
    return _csv_text(rows, ["m", "mean", "std"], [f"config: {json.dumps(asdict(cfg))}", f"c: {norm.c!r}"])


def _write_output(text: str, cfg: RunConfig, explicit: Path | None):
    target = explicit
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        stem = Path(cfg.matrix_path).stem
        target = Path(os.environ[OUTPUT_DIR_ENV]) / f"{stem}.{cfg.subcommand}.{cfg.output_format}"
    if target is not None:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        cfg.probe_config()
        cfg.grid()
    except ValueError as exc:
        parser.error(str(exc))

    try:
        if cfg.subcommand == "logdet":
            text = cmd_logdet(cfg)
        elif cfg.subcommand == "diagnose":
            text = cmd_diagnose(cfg, args.oracle, args.exact_logdet)
        else:
            text = cmd_moments(cfg)
    except (OSError, MatrixMarketError) as exc:
        print(f"entlogdet: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EstimationError, MaxEntError, ArithmeticError, ValueError) as exc:
        print(f"entlogdet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    sys.stdout.write(text)
    try:
        _write_output(text, cfg, args.output)
    except OSError as exc:
        print(f"entlogdet: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
