"""Command-line front end.

    lipcert certify   --metric mahalanobis --matrix M.csv
    lipcert audit     --metric bilinear --matrix M.csv --radius 3 --samples 10000
    lipcert gradcheck --metric mahalanobis --matrix M.csv
    lipcert dump      --matrix M.csv            # debug: re-emit the parsed matrix

A single JSON report goes to stdout (or ``--output``); diagnostics go to
stderr.  Exit codes: 0 success, 1 usage/IO/parse error, 2 matrix not PSD,
3 audit contradicted the certificate, 4 power iteration did not converge.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from ._backend import kernels
from .certify import (
    BILINEAR,
    MAHALANOBIS,
    Tolerances,
    audit,
    certify_bilinear,
    certify_mahalanobis,
    gradcheck,
)
from .errors import LipcertError, NoConvergence, NonFinite, NotPsd, NotSquare, ParseError
from .metrics import BallDomain

log = logging.getLogger("lipcert")

SCHEMA_VERSION = 1
DEFAULT_SEED = 42
DEFAULT_SAMPLES = 10_000
GRADCHECK_TOL = 1e-5

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_PSD = 2
EXIT_VIOLATION = 3
EXIT_NO_CONVERGENCE = 4

COMMANDS = ("certify", "audit", "gradcheck", "dump")


class UsageError(LipcertError):
    pass


@dataclass
class RunConfig:
    command: str
    metric: str = MAHALANOBIS
    matrix_path: str = ""
    radius: Optional[float] = None
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    sample_radius: float = 1.0
    gradcheck_tol: float = GRADCHECK_TOL
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_path: Optional[str] = None

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command == "dump":
            return
        if self.metric not in (MAHALANOBIS, BILINEAR):
            raise UsageError(f"unknown metric {self.metric!r}")
        if self.metric == BILINEAR and self.radius is None:
            raise UsageError("--radius is required for the bilinear metric")
        if self.metric == MAHALANOBIS and self.radius is not None:
            raise UsageError("--radius only applies to the bilinear metric")
        if self.radius is not None and not (math.isfinite(self.radius) and self.radius >= 0):
            raise UsageError("--radius must be a finite number >= 0")
        if self.samples < 1:
            raise UsageError("--samples must be >= 1")
        if not (math.isfinite(self.sample_radius) and self.sample_radius > 0):
            raise UsageError("--sample-radius must be positive")


def load_matrix(path) -> np.ndarray:
    """Parse a square matrix from CSV: one row per line, ``#`` lines are comments."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})") from exc

    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        row = []
        for col, cell in enumerate(stripped.split(","), start=1):
            cell = cell.strip()
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"cannot parse {cell!r} as a number", lineno, col) from None
            if not math.isfinite(value):
                raise NonFinite(f"line {lineno}, column {col}: non-finite entry {cell!r}")
            row.append(value)
        if rows and len(row) != len(rows[0]):
            raise NotSquare(f"line {lineno}: row has {len(row)} entries, expected {len(rows[0])}")
        rows.append(row)
    if not rows:
        raise ParseError("no matrix rows found")
    if len(rows) != len(rows[0]):
        raise NotSquare(f"matrix has {len(rows)} rows but {len(rows[0])} columns")
    return np.array(rows, dtype=np.float64)


def format_matrix(M) -> str:
    """CSV text that :func:`load_matrix` parses back to the identical floats."""
    return "".join(",".join(repr(float(x)) for x in row) + "\n" for row in np.asarray(M))


def _certificate_fields(cert) -> dict:
    out = {"metric": cert.metric_kind, "dim": cert.dim, "k_theoretical": cert.k_theoretical}
    if cert.metric_kind == MAHALANOBIS:
        out["factor_norm"] = cert.factor_norm
        out["sqrt_matrix_norm"] = cert.sqrt_matrix_norm
        out["cross_check_rel_err"] = cert.cross_check_rel_err
        out["rank"] = cert.rank
    else:
        out["matrix_norm"] = cert.matrix_norm
    out["radius"] = cert.radius
    out["max_asymmetry"] = cert.max_asymmetry
    return out


def _ms(t0):
    return round((time.perf_counter() - t0) * 1e3, 3)


def run(config: RunConfig):
    """Execute ``config``; returns ``(exit_code, report)``.

    ``report`` is the JSON-serialisable dict, or CSV text for ``dump``.
    Library errors are mapped to exit codes and an ``error`` report.
    """
    report = {"schema_version": SCHEMA_VERSION, "command": config.command}
    timings = {}
    try:
        config.validate()
        t0 = time.perf_counter()
        M = load_matrix(config.matrix_path)
        timings["load"] = _ms(t0)
        if config.command == "dump":
            return EXIT_OK, format_matrix(M)

        tols = config.tolerances
        t0 = time.perf_counter()
        if config.metric == MAHALANOBIS:
            domain = None
            cert = certify_mahalanobis(M, tols, seed=config.seed)
        else:
            domain = BallDomain(config.radius, M.shape[0])
            cert = certify_bilinear(M, domain, tols, seed=config.seed)
        timings["certify"] = _ms(t0)
        report.update(_certificate_fields(cert))
        report["tolerances"] = tols.as_dict()

        code = EXIT_OK
        audit_out = None
        t0 = time.perf_counter()
        if config.command == "audit":
            rep = audit(cert, M, domain, n_samples=config.samples, seed=config.seed, tols=tols,
                        sample_radius=config.sample_radius)
            audit_out = rep.as_dict()
            if rep.violation_count:
                log.error("%d sampled slopes exceed k = %.17g", rep.violation_count, cert.k_theoretical)
                code = EXIT_VIOLATION
            timings["audit"] = _ms(t0)
        elif config.command == "gradcheck":
            radius = config.radius if config.metric == BILINEAR else config.sample_radius
            err, n = gradcheck(config.metric, M, n_pairs=config.samples, seed=config.seed,
                               radius=radius, tols=tols)
            audit_out = {
                "samples": config.samples,
                "seed": config.seed,
                "gradcheck_max_err": err,
                "gradcheck_pairs": n,
                "gradcheck_tol": config.gradcheck_tol,
            }
            if err > config.gradcheck_tol:
                log.error("finite differences disagree with analytic gradients (max err %.3g)", err)
                code = EXIT_VIOLATION
            timings["gradcheck"] = _ms(t0)
        report["audit"] = audit_out
        report["backend"] = kernels.NAME
        report["timings_ms"] = timings
        return code, report
    except NotPsd as exc:
        return _error(report, EXIT_NOT_PSD, exc)
    except NoConvergence as exc:
        return _error(report, EXIT_NO_CONVERGENCE, exc)
    except (LipcertError, OSError, ValueError) as exc:
        return _error(report, EXIT_USAGE, exc)


def _error(report, code, exc):
    log.error("%s", exc)
    report["error"] = {"kind": type(exc).__name__, "message": str(exc)}
    report["exit_code"] = code
    return code, report


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for NotPsd here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed():
    env = os.environ.get("LIPCERT_SEED")
    if env is None or env.strip() == "":
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"LIPCERT_SEED must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lipcert", description="Certified Lipschitz constants for Mahalanobis "
                     "distances and bounded bilinear forms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--matrix", required=True, dest="matrix_path",
                        help="CSV file with the square matrix M (one row per line, '#' comments)")
    common.add_argument("--output", "-o", dest="output_path", help="write the report here instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging on stderr")

    metric = _Parser(add_help=False)
    metric.add_argument("--metric", required=True, choices=(MAHALANOBIS, BILINEAR))
    metric.add_argument("--radius", type=float, help="radius R of the input ball (bilinear only, required)")
    metric.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                        help="random quadruples (audit) or pairs (gradcheck); default %(default)s")
    metric.add_argument("--seed", type=int, default=None,
                        help=f"RNG seed; defaults to $LIPCERT_SEED or {DEFAULT_SEED}")
    metric.add_argument("--sample-radius", type=float, default=1.0,
                        help="sampling ball radius for the Mahalanobis audit; default %(default)s")
    metric.add_argument("--tol-psd", type=float, default=Tolerances.tol_psd,
                        help="relative pivot tolerance for the PSD factorization")
    metric.add_argument("--tol-factor", type=float, default=Tolerances.tol_factor,
                        help="allowed relative reconstruction error of the factor")
    metric.add_argument("--spectral-tol", type=float, default=Tolerances.spectral_tol,
                        help="relative tolerance of the power iteration")
    metric.add_argument("--max-iter", type=int, default=Tolerances.max_iter,
                        help="power iteration limit")
    metric.add_argument("--violation-rtol", type=float, default=Tolerances.violation_rtol,
                        help="multiplicative slack before a slope counts as a violation")
    metric.add_argument("--gradcheck-tol", type=float, default=GRADCHECK_TOL,
                        help="max finite-difference error accepted by gradcheck")

    sub.add_parser("certify", parents=[common, metric], help="compute the certified constant")
    sub.add_parser("audit", parents=[common, metric], help="certify, then check it on random samples")
    sub.add_parser("gradcheck", parents=[common, metric],
                   help="compare analytic gradients with central differences")
    sub.add_parser("dump", parents=[common], help="re-emit the parsed matrix as CSV (debug)")
    return parser


def config_from_args(args) -> RunConfig:
    if args.command == "dump":
        return RunConfig(command="dump", matrix_path=args.matrix_path, output_path=args.output_path)
    seed = args.seed if args.seed is not None else _default_seed()
    tols = Tolerances(
        tol_psd=args.tol_psd,
        tol_factor=args.tol_factor,
        spectral_tol=args.spectral_tol,
        max_iter=args.max_iter,
        violation_rtol=args.violation_rtol,
    )
    return RunConfig(
        command=args.command,
        metric=args.metric,
        matrix_path=args.matrix_path,
        radius=args.radius,
        samples=args.samples,
        seed=seed,
        sample_radius=args.sample_radius,
        gradcheck_tol=args.gradcheck_tol,
        tolerances=tols,
        output_path=args.output_path,
    )


def render(report) -> str:
    if isinstance(report, str):
        return report
    return json.dumps(report, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="lipcert: %(levelname)s: %(message)s", stream=sys.stderr)
    try:
        config = config_from_args(args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    code, report = run(config)
    text = render(report)
    if config.output_path:
        try:
            with open(config.output_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            log.error("cannot write %s: %s", config.output_path, exc)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
