"""Command line interface: ``streamsample sample|verify|bench``.

``sample`` draws lines from files or standard input in a single pass, in the
manner of ``shuf -n`` and ``tsv-sample``. Lines are handled as raw bytes.

Exit codes: 0 success, 1 I/O error, 2 usage error or unparsable weight,
3 input shorter than the declared ``--total``/``--total-weight``,
4 weighted sampling without replacement requested with a declared total.
"""

from __future__ import annotations

import argparse
import secrets
import sys
from typing import BinaryIO, Iterator

from .core import rng_new
from .errors import ImpossibleSamplingError, InvalidWeightError, TruncatedStreamError
from .reservoir import ReservoirMethod, ReservoirSampler
from .sequential import (
    SequentialMethod,
    SequentialSampler,
    default_reservoir_method,
    default_sequential_method,
    resolve_method,
)

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_TRUNCATED, EXIT_IMPOSSIBLE = 0, 1, 2, 3, 4


class WeightParseError(Exception):
    def __init__(self, where: str, msg: str):
        super().__init__(f"{where}: {msg}")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _delimiter(text: str) -> bytes:
    text = {"\\t": "\t", "tab": "\t", "TAB": "\t"}.get(text, text)
    raw = text.encode()
    if len(raw) != 1:
        raise argparse.ArgumentTypeError("delimiter must be a single byte")
    return raw


def _open_inputs(paths, stdin: BinaryIO) -> Iterator[tuple[str, BinaryIO]]:
    for path in paths or ["-"]:
        if path == "-":
            yield "<stdin>", stdin
        else:
            with open(path, "rb") as fh:
                yield path, fh


def _lines(paths, stdin, header: bool, out: BinaryIO) -> Iterator[tuple[str, int, bytes]]:
    """Yield ``(source, line_number, line)``; with ``header`` the first input's
    first line is written straight to ``out`` and later inputs' first lines dropped."""
    first_input = True
    for name, fh in _open_inputs(paths, stdin):
        for lineno, line in enumerate(fh, 1):
            if header and lineno == 1:
                if first_input:
                    out.write(_terminated(line))
                continue
            yield name, lineno, line
        first_input = False


def _terminated(line: bytes) -> bytes:
    return line if line.endswith(b"\n") else line + b"\n"


def _weight_of(line: bytes, field: int, delim: bytes, where: str) -> float:
    parts = line.rstrip(b"\r\n").split(delim)
    if field > len(parts):
        raise WeightParseError(where, f"no field {field} (line has {len(parts)})")
    raw = parts[field - 1]
    try:
        w = float(raw)
    except ValueError:
        raise WeightParseError(where, f"weight {raw!r} is not a number") from None
    if not 0.0 < w < float("inf"):
        raise WeightParseError(where, f"weight {raw!r} is not a positive finite number")
    return w


def _choose_method(args):
    weighted = args.weight_field is not None
    sequential = args.total is not None or args.total_weight is not None
    if args.method is not None:
        method = resolve_method(args.method)
        if isinstance(method, SequentialMethod) != sequential:
            need = "--total/--total-weight" if isinstance(method, SequentialMethod) else "no declared total"
            raise argparse.ArgumentError(None, f"method {method.value} needs {need}")
        if method.weighted and not weighted:
            raise argparse.ArgumentError(None, f"method {method.value} needs --weight-field")
        if weighted and not method.weighted:
            raise argparse.ArgumentError(None, f"method {method.value} is unweighted")
        if args.replace and not method.replace:
            raise argparse.ArgumentError(None, f"method {method.value} samples without replacement")
        return method
    if sequential:
        return default_sequential_method(weighted, args.replace)
    return default_reservoir_method(weighted, args.replace)


def run_sample(args, stdin: BinaryIO, stdout: BinaryIO, stderr) -> int:
    weighted = args.weight_field is not None
    sequential = args.total is not None or args.total_weight is not None
    if weighted and sequential and not args.replace and args.method is None:
        print(f"streamsample: {ImpossibleSamplingError()}", file=stderr)
        return EXIT_IMPOSSIBLE
    try:
        method = _choose_method(args)
    except ImpossibleSamplingError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_IMPOSSIBLE
    except argparse.ArgumentError as exc:
        print(f"streamsample: {exc.message}", file=stderr)
        return EXIT_USAGE
    if sequential:
        if weighted and args.total_weight is None:
            print("streamsample: weighted sequential sampling needs --total-weight", file=stderr)
            return EXIT_USAGE
        if not weighted and args.total is None:
            print("streamsample: unweighted sequential sampling needs --total", file=stderr)
            return EXIT_USAGE
    seed = args.seed if args.seed is not None else secrets.randbits(64)
    rng = rng_new(seed)

    lines = _lines(args.inputs, stdin, args.header, stdout)
    if weighted:
        field, delim = args.weight_field, args.delimiter
        records = (((i, line), _weight_of(line, field, delim, f"{src}:{lineno}"))
                   for i, (src, lineno, line) in enumerate(lines))
    else:
        records = ((i, line) for i, (_, _, line) in enumerate(lines))

    try:
        if isinstance(method, SequentialMethod):
            total = args.total_weight if weighted else args.total
            sampler = SequentialSampler(records, args.num, total, method=method, rng=rng)
            for (_, line), mult in sampler:
                stdout.write(_terminated(line) * mult)
        else:
            sampler = ReservoirSampler(args.num, method, rng=rng).fit_many(records)
            picked = sampler.value().items
            if args.stable:
                picked = sorted(picked, key=lambda rec: rec[0])
            for _, line in picked:
                stdout.write(_terminated(line))
        stdout.flush()
    except WeightParseError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_USAGE
    except InvalidWeightError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_USAGE
    except TruncatedStreamError as exc:
        stdout.flush()
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_TRUNCATED
    except ImpossibleSamplingError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_IMPOSSIBLE
    except OSError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"streamsample: {exc}", file=stderr)
        return EXIT_USAGE
    return EXIT_OK


def run_verify(args, stdout) -> int:
    from .verify import run_matrix

    groups = set(args.group) if args.group else None
    ok = run_matrix(trials=args.trials, alpha=args.alpha, groups=groups, backend=args.backend,
                    out=lambda line: print(line, file=stdout, flush=True))
    return 0 if ok else 1


def run_bench(args, stdout) -> int:
    from . import bench

    if args.bench_command == "run":
        rows = bench.run_suite(args.n, bench.k_grid(args.n) if not args.k else args.k, args.reps,
                               out_dir=args.out, log=lambda m: print(m, file=stdout, flush=True))
        print(f"wrote {len(rows)} rows to {args.out}", file=stdout)
    else:
        bench.run_backends(args.n, args.reps, out_dir=args.out,
                           log=lambda m: print(m, file=stdout, flush=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamsample", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample lines from files or stdin in one pass")
    p.add_argument("inputs", nargs="*", metavar="FILE", help="input files ('-' or none for stdin)")
    p.add_argument("-n", "--num", type=_positive_int, required=True, help="sample size K")
    p.add_argument("--replace", action="store_true", help="sample with replacement")
    p.add_argument("--weight-field", type=_positive_int, metavar="IDX",
                   help="1-based field holding each line's weight")
    p.add_argument("--delimiter", type=_delimiter, default=b"\t", metavar="CHAR",
                   help="field delimiter (default: tab)")
    p.add_argument("--total", type=_positive_int, metavar="N",
                   help="declared line count; selects a sequential method")
    p.add_argument("--total-weight", type=float, metavar="W",
                   help="declared total weight; selects a sequential method")
    p.add_argument("--method", metavar="NAME",
                   choices=[m.value for m in ReservoirMethod] + [m.value for m in SequentialMethod],
                   help="override the default method")
    p.add_argument("--seed", type=_u64, metavar="U64", help="random seed (default: random)")
    p.add_argument("--header", action="store_true", help="pass the first line through unsampled")
    p.add_argument("--stable", action="store_true", help="emit reservoir samples in input order")

    v = sub.add_parser("verify", help="chi-square every sampler against its exact law")
    v.add_argument("--trials", type=_positive_int, default=100_000)
    v.add_argument("--alpha", type=float, default=0.001)
    v.add_argument("--group", action="append",
                   choices=["uniform-subset", "weighted", "with-replacement", "merge", "combine"])
    v.add_argument("--backend", choices=["python", "cython"])

    b = sub.add_parser("bench", help="benchmarks")
    bsub = b.add_subparsers(dest="bench_command", required=True)
    br = bsub.add_parser("run", help="stream strategies vs. materializing the population")
    br.add_argument("--n", type=_positive_int, default=10_000_000)
    br.add_argument("--reps", type=_positive_int, default=20)
    br.add_argument("--k", type=_positive_int, action="append", help="sample size (repeatable)")
    br.add_argument("--out", default="report")
    bb = bsub.add_parser("backends", help="compiled core vs. pure-Python kernels")
    bb.add_argument("--n", type=_positive_int, default=1_000_000)
    bb.add_argument("--reps", type=_positive_int, default=5)
    bb.add_argument("--out", default="report")
    return parser


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    if args.command == "sample":
        try:
            return run_sample(args, stdin or sys.stdin.buffer, stdout or sys.stdout.buffer, stderr)
        except OSError as exc:
            print(f"streamsample: {exc}", file=stderr)
            return EXIT_IO
    if args.command == "verify":
        return run_verify(args, stdout or sys.stdout)
    return run_bench(args, stdout or sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
