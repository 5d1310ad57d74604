"""Command-line driver: ``permround <subcommand> ...``.

Exit codes: 0 success, 2 input parse error, 3 input validation error,
4 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import concentration, nconv, qap, rounding
from .core import (
    DimensionError,
    MatrixFormatError,
    NotOrthogonalError,
    as_orthogonal,
    format_matrix,
    read_matrix,
)
from .gaussian import RandomStream, haar_orthogonal

log = logging.getLogger("permround")

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4

SCALING_COLUMNS = ["n", "N", "rep", "linf_error", "frob_error", "max_col_error", "weight_dev", "mean_residual_sq"]
CONCENTRATION_COLUMNS = [
    "n", "k", "epsilon", "alpha_minus", "alpha_plus", "bound", "empirical", "trials",
    "lower_empirical", "upper_empirical", "lower_bound", "upper_bound", "passes",
]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    n_values: list[int] = field(default_factory=lambda: [16, 64, 256])
    sample_counts: list[int] = field(default_factory=lambda: [10000])
    repetitions: int = 1
    output_format: str = "csv"
    output_path: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if not self.n_values or not self.sample_counts:
            raise ConfigError("n_values and sample_counts must be non-empty")
        if any(v < 1 for v in self.n_values + self.sample_counts) or self.repetitions < 1:
            raise ConfigError("dimensions, sample counts and repetitions must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"unknown output format {self.output_format!r}")

    @classmethod
    def parse(cls, text: str) -> ExperimentConfig:
        """``key = value`` lines; ``#`` starts a comment; lists are comma separated."""
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                if key in ("n_values", "sample_counts"):
                    setattr(cfg, key, [int(float(v)) for v in value.split(",") if v.strip()])
                elif key in ("seed", "repetitions", "threads"):
                    setattr(cfg, key, int(value))
                elif key in ("output_format", "output_path"):
                    setattr(cfg, key, value)
                else:
                    raise ConfigError(f"line {lineno}: unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
        return cfg


# --- output helpers --------------------------------------------------------


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def render_table(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([{c: r[c] for c in columns} for r in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_orthogonal(path: str) -> np.ndarray:
    return as_orthogonal(read_matrix(path))


def _to_float(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


# --- subcommands ------------------------------------------------------------


def cmd_haar(args) -> int:
    U = haar_orthogonal(args.n, RandomStream(args.seed))
    _emit(format_matrix(U, args.format), args.out)
    return EXIT_OK


def cmd_round(args) -> int:
    U = _load_orthogonal(args.matrix_file)
    s = RandomStream(args.seed)
    rows = []
    for i in range(args.samples):
        smp = rounding.sample_rounding(U, s)
        rows.append({
            "sample_index": i,
            "permutation": smp.sigma.one_line(),
            "residual_norm": float(np.linalg.norm(smp.z)),
        })
    _emit(render_table(rows, ["sample_index", "permutation", "residual_norm"], args.format), args.out)
    return EXIT_OK


def cmd_approximate(args) -> int:
    U = _load_orthogonal(args.matrix_file)
    approx = nconv.approximate(U, args.samples, RandomStream(args.seed), mirrored=args.mirrored, threads=args.threads)
    report = nconv.error_report(U, approx)
    payload = {"approximation": approx.to_dict(), "error_report": report.to_dict()}
    if approx.tracked:
        payload["error_report"]["trace_probability_deviation"] = nconv.trace_probability_check(approx)
    _emit(json.dumps(payload, default=_to_float) + "\n", args.out)
    return EXIT_OK


def run_scaling(cfg: ExperimentConfig) -> list[dict]:
    master = RandomStream(cfg.seed)
    rows = []
    for n in cfg.n_values:
        for N in cfg.sample_counts:
            for rep in range(cfg.repetitions):
                st = master.spawn(1)[0]
                U = haar_orthogonal(n, st.spawn(1)[0])
                approx = nconv.approximate(U, N, st.spawn(1)[0], track=False, threads=cfg.threads)
                rep_ = nconv.error_report(U, approx)
                log.info("scaling n=%d N=%d rep=%d linf=%.4g", n, N, rep, rep_.linf)
                rows.append({
                    "n": n, "N": N, "rep": rep,
                    "linf_error": rep_.linf,
                    "frob_error": rep_.frob,
                    "max_col_error": rep_.max_column_error,
                    "weight_dev": rep_.weight_deviation,
                    "mean_residual_sq": approx.mean_residual_sq,
                })
    return rows


def cmd_scaling(args) -> int:
    cfg = ExperimentConfig.parse(Path(args.config_file).read_text()) if args.config_file else ExperimentConfig()
    for key in ("seed", "n_values", "sample_counts", "repetitions", "threads"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.format is not None:
        cfg.output_format = args.format
    if args.out is not None:
        cfg.output_path = args.out
    cfg.validate()
    _emit(render_table(run_scaling(cfg), SCALING_COLUMNS, cfg.output_format), cfg.output_path)
    return EXIT_OK


def cmd_concentration(args) -> int:
    checks = concentration.run_grid(
        RandomStream(args.seed),
        n_values=args.n_values,
        epsilons=args.epsilons,
        trials=args.trials,
        ranks=args.ranks,
        threads=args.threads,
    )
    rows = []
    for c in checks:
        rows.append({
            "n": c.n, "k": c.k, "epsilon": c.epsilon,
            "alpha_minus": c.alpha_minus, "alpha_plus": c.alpha_plus,
            "bound": c.bound, "empirical": c.empirical, "trials": c.trials,
            "lower_empirical": c.lower_empirical, "upper_empirical": c.upper_empirical,
            "lower_bound": c.lower_bound, "upper_bound": c.upper_bound,
            "passes": c.passes(),
        })
    _emit(render_table(rows, CONCENTRATION_COLUMNS, args.format), args.out)
    return EXIT_OK


def cmd_qap(args) -> int:
    inst = qap.read_instance(args.instance_file)
    result = qap.rounding_heuristic(inst, args.samples, RandomStream(args.seed))
    _emit(json.dumps(result.to_dict()) + "\n", args.out)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permround", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples=None, fmt="csv"):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--threads", type=int, default=1)
        if samples is not None:
            p.add_argument("--samples", type=int, default=samples)
        if fmt:
            p.add_argument("--format", choices=["csv", "json"], default=fmt)

    p = sub.add_parser("haar", help="write a Haar-random orthogonal matrix")
    p.add_argument("n", type=int)
    p.add_argument("--format", choices=["text", "json"], default="text")
    common(p, fmt=None)
    p.set_defaults(func=cmd_haar)

    p = sub.add_parser("round", help="round an orthogonal matrix at Gaussian points")
    p.add_argument("matrix_file")
    common(p, samples=10)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("approximate", help="sampled non-commutative convex combination")
    p.add_argument("matrix_file")
    p.add_argument("--mirrored", action="store_true", help="build sum sigma A_sigma instead of sum A_sigma sigma")
    common(p, samples=10000, fmt=None)
    p.set_defaults(func=cmd_approximate)

    p = sub.add_parser("scaling", help="error scaling over dimensions for Haar matrices")
    p.add_argument("config_file", nargs="?")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n-values", dest="n_values", type=_int_list, default=None)
    p.add_argument("--sample-counts", dest="sample_counts", type=_int_list, default=None)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--format", choices=["csv", "json"], default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("concentration", help="order-statistic tail bounds against simulation")
    p.add_argument("--n-values", dest="n_values", type=_int_list, default=list(concentration.DEFAULT_N_VALUES))
    p.add_argument("--epsilons", type=_float_list, default=list(concentration.DEFAULT_EPSILONS))
    p.add_argument("--ranks", type=_int_list, default=None, help="ranks k (default: ceil(36 ln n), n/4, n/2)")
    p.add_argument("--trials", type=int, default=20000)
    common(p)
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("qap", help="eigenvalue bound and rounding heuristic for a QAP instance")
    p.add_argument("instance_file")
    common(p, samples=100, fmt=None)
    p.set_defaults(func=cmd_qap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (MatrixFormatError, ConfigError, OSError) as exc:
        print(f"permround: cannot parse input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NotOrthogonalError, DimensionError, qap.NotSymmetricError, ValueError) as exc:
        print(f"permround: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError, rounding.RetriesExhaustedError) as exc:
        print(f"permround: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
