"""Command-line interface: ``cpdlab {condition,ccdf,tailfit,perturb}``.

Exit codes: 0 success, 2 usage or input error, 3 statistical precondition
not met (too few points to fit, or a perturbation record violating the
distance bound).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .condition import condition_number, terracini_matrix
from .errors import CpdlabError, InsufficientDataError
from .experiments import (
    CcdfTable,
    PerturbRecord,
    available_threads,
    check_perturb_records,
    estimate_ccdf,
    fit_tail,
    perturbation_sweep,
    sample_condition_numbers,
)
from .sampling import (
    STREAM_ANCHORS,
    NormalStream,
    SampleSpec,
    illposed_shared_first_factor,
    illposed_shared_third_factor,
    parse_seed,
    random_rank1_tuple,
)
from .tensor import Rank1Tuple, TensorFormat

EXIT_USAGE = 2
EXIT_STATS = 3
MIN_COUNT = 100
DEFAULT_FORMAT = "7,7,2"


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        return parse_seed(text)
    except CpdlabError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _format(text: str) -> TensorFormat:
    try:
        return TensorFormat.parse(text)
    except CpdlabError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return vals


def _window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}")
    if not 0 < lo <= hi <= 1:
        raise argparse.ArgumentTypeError(f"window must satisfy 0 < lo <= hi <= 1, got {text!r}")
    return lo, hi


def _nonneg_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return v


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("CPDLAB_THREADS")
    if env:
        try:
            return _positive_int(env)
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"CPDLAB_THREADS: {exc}")
    return available_threads()


def _resolve_power(power: str, fmt: TensorFormat) -> int:
    if power == "auto":
        return max(fmt.dims[-1] - 1, 1)
    try:
        p = int(power)
    except ValueError:
        raise UsageError(f"--power must be a positive integer or 'auto', got {power!r}")
    if p < 1:
        raise UsageError(f"--power must be >= 1, got {p}")
    return p


def _emit(text: str, out: str | None) -> None:
    sys.stdout.write(text)
    if out:
        _write_text(out, text)


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}")


# --------------------------------------------------------------------------- #


def read_factor_file(path: str | Path, fmt: TensorFormat | None = None) -> Rank1Tuple:
    """Read a tuple from a CSV with one factor vector per row.

    Rows run term by term, mode by mode. Without ``fmt`` the format is taken
    from the shortest repeating pattern of row lengths, so ``5,4,3,5,4,3``
    reads as two terms of format 5x4x3; pass ``fmt`` to override.
    """
    try:
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except ValueError as exc:
        raise UsageError(f"{path}: malformed number ({exc})")
    if not rows:
        raise UsageError(f"{path}: no factor rows")
    lengths = [len(r) for r in rows]
    if fmt is None:
        period = next(
            (d for d in range(2, len(rows) + 1)
             if len(rows) % d == 0 and all(lengths[i] == lengths[i % d] for i in range(len(rows)))),
            None,
        )
        if period is None:
            raise UsageError(f"{path}: cannot infer the tensor format, pass --format")
        try:
            fmt = TensorFormat(lengths[:period])
        except CpdlabError as exc:
            raise UsageError(f"{path}: {exc}")
    d = fmt.order
    if len(rows) % d or any(lengths[i] != fmt.dims[i % d] for i in range(len(rows))):
        raise UsageError(f"{path}: row lengths {lengths} do not match format {fmt}")
    try:
        return Rank1Tuple([rows[i:i + d] for i in range(0, len(rows), d)], format=fmt)
    except CpdlabError as exc:
        raise UsageError(f"{path}: {exc}")


def cmd_condition(args) -> int:
    fmt = args.format
    if args.factors:
        t = read_factor_file(args.factors, fmt)
    else:
        fmt = fmt or TensorFormat.parse(DEFAULT_FORMAT)
        if args.illposed:
            build = {"shared-first": illposed_shared_first_factor,
                     "shared-third": illposed_shared_third_factor}[args.illposed]
            t = build(fmt, args.r, NormalStream(args.seed, STREAM_ANCHORS, 0, args.r, 0))
        else:
            t = random_rank1_tuple(SampleSpec(fmt, args.r, args.seed, 1), 0)
    result = condition_number(t)
    if args.dump_terracini:
        if result.shape_forced_infinite:
            raise UsageError("no Terracini matrix to dump: r*n exceeds the ambient dimension")
        try:
            terracini_matrix(t).to_csv(args.dump_terracini)
        except OSError as exc:
            raise UsageError(f"cannot write {args.dump_terracini}: {exc.strerror}")
    _emit(json.dumps(result.as_dict()) + "\n", args.out)
    return 0


def _sample_table(args) -> tuple[CcdfTable, dict]:
    fmt = args.format or TensorFormat.parse(DEFAULT_FORMAT)
    if args.count < MIN_COUNT:
        raise UsageError(f"--count must be at least {MIN_COUNT}, got {args.count}")
    power = _resolve_power(args.power, fmt)
    spec = SampleSpec(fmt, args.r, args.seed, args.count)
    kappa = sample_condition_numbers(spec, threads=_threads(args))
    table = estimate_ccdf(kappa, power)
    meta = {"format": list(fmt.dims), "r": args.r, "seed": args.seed}
    return CcdfTable(table.x, table.ccdf, table.infinite_count, table.total, power, meta), meta


def cmd_ccdf(args) -> int:
    out = Path(args.out)
    if not out.parent.is_dir():
        raise UsageError(f"cannot write {out}: directory does not exist")
    table, _ = _sample_table(args)
    try:
        side = table.to_csv(out)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}")
    print(f"wrote {out} and {side} ({table.total} samples, "
          f"{table.infinite_count} infinite, power {table.power})", file=sys.stderr)
    return 0


def cmd_tailfit(args) -> int:
    if args.input:
        if not Path(args.input).exists():
            raise UsageError(f"{args.input}: no such file")
        table = CcdfTable.from_csv(args.input)
    else:
        table, _ = _sample_table(args)
    try:
        fit = fit_tail(table, args.window)
    except InsufficientDataError as exc:
        print(f"cpdlab tailfit: {exc}", file=sys.stderr)
        return EXIT_STATS
    _emit(json.dumps(fit.as_dict()) + "\n", args.out)
    return 0


def cmd_perturb(args) -> int:
    fmt = args.format or TensorFormat.parse("11,10,5")
    if fmt.order != 3:
        raise UsageError(f"perturb needs a 3-mode format, got {fmt}")
    rs = args.r if isinstance(args.r, list) else [args.r]
    if any(r < 2 for r in rs):
        raise UsageError("perturb needs r >= 2")
    records: list[PerturbRecord] = []
    for r in rs:
        records += perturbation_sweep(fmt, r, args.anchors, args.perturbs, args.scale, args.seed)
    lines = [",".join(PerturbRecord.CSV_FIELDS)]
    lines += [",".join(repr(v) for v in rec.row()) for rec in records]
    _write_text(args.out, "\n".join(lines) + "\n")
    bad = check_perturb_records(records)
    if bad:
        for rec in bad[:10]:
            print(f"cpdlab perturb: bound violated: {rec}", file=sys.stderr)
        print(f"cpdlab perturb: {len(bad)} of {len(records)} records violate "
              "1/kappa <= dist_w", file=sys.stderr)
        return EXIT_STATS
    ratio = max((rec.dist_w / rec.inv_kappa if rec.inv_kappa > 0 else 0.0) for rec in records)
    print(f"wrote {args.out} ({len(records)} records, max dist_w*kappa = {ratio:.3g})",
          file=sys.stderr)
    return 0


# --------------------------------------------------------------------------- #


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", type=_format, default=None,
                        help="tensor format d1,d2,... (default 7,7,2; 11,10,5 for perturb)")
    common.add_argument("--seed", type=_seed, default=0, help="64-bit seed, decimal or 0x-hex")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker processes (default: $CPDLAB_THREADS or all CPUs)")

    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--r", type=_positive_int, default=7, help="decomposition length")
    sampling.add_argument("--count", type=_positive_int, default=10_000, help="number of samples")
    sampling.add_argument("--power", default="auto",
                          help="exponent applied to kappa; 'auto' means n_d - 1")

    parser = argparse.ArgumentParser(
        prog="cpdlab", description="Condition numbers of tensor rank decompositions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("condition", parents=[common], help="condition number of one tuple")
    p.add_argument("--r", type=_positive_int, default=7)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--random", action="store_true", help="random Gaussian tuple (default)")
    src.add_argument("--illposed", choices=["shared-first", "shared-third"])
    src.add_argument("--factors", metavar="CSV", help="factor file, one vector per row")
    p.add_argument("--dump-terracini", metavar="CSV")
    p.add_argument("--out", metavar="PATH", help="also write the JSON here")
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("ccdf", parents=[common, sampling], help="empirical ccdf of kappa^power")
    p.add_argument("--out", default="ccdf.csv", metavar="PATH")
    p.set_defaults(func=cmd_ccdf)

    p = sub.add_parser("tailfit", parents=[common, sampling], help="fit a x^-b to a ccdf tail")
    p.add_argument("--in", dest="input", metavar="CSV", help="ccdf file (else sample inline)")
    p.add_argument("--window", type=_window, default=None,
                   help="ccdf bounds lo,hi (default max(1e-5,100/N),1e-2)")
    p.add_argument("--out", metavar="PATH", help="also write the JSON here")
    p.set_defaults(func=cmd_tailfit)

    p = sub.add_parser("perturb", parents=[common], help="distance-to-ill-posedness sweep")
    p.add_argument("--r", type=_int_list, default=[2, 3, 4, 5], help="one or more r, e.g. 2,3,4,5")
    p.add_argument("--anchors", type=_positive_int, default=20)
    p.add_argument("--perturbs", type=_positive_int, default=50)
    p.add_argument("--scale", type=_nonneg_float, default=1e-2)
    p.add_argument("--out", default="perturb.csv", metavar="PATH")
    p.set_defaults(func=cmd_perturb)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cpdlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CpdlabError as exc:
        print(f"cpdlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
