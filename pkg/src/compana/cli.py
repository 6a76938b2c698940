"""Batch command line: demonstrations, witness checks and machine-readable reports.

Every run writes one record per check to stdout, as JSON lines (default)
or CSV with a header, and exits 0 if every check is certified, 1 if some
check is not, and 2 on malformed input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .coding import Name
from .constructions import (
    bwt_cluster_stage,
    kleene_tree,
    kleene_witness,
    ivt_family,
    leftmost_zero,
    max_value,
    specker_seq,
    specker_term,
    trisect,
)
from .errors import CompanaError, PreconditionError, TrisectionStall
from .exact import CReal, Dyadic, round_dyadic
from .functions import EllTwoVec, PLFunc, functional_from_vec
from .machines import StagePair, StageSet, halting_set, inseparable_pair
from .reductions import WITNESSES, DiagonalOperator, bim_via_cn, enumeration_name
from .weihrauch import encode_cfunc, encode_functional, encode_monotone, reduce_check, Verdict

__all__ = ["Record", "main", "main_entry", "build_parser"]

FIELDS = (
    "op",
    "instance_id",
    "precision_level",
    "stage",
    "result",
    "certified",
    "mind_changes",
    "wall_time_ms",
)


class InputError(Exception):
    """Malformed command-line input (exit code 2)."""


@dataclass
class Record:
    op: str
    instance_id: str
    precision_level: int
    stage: int
    result: str
    certified: bool
    mind_changes: Optional[int] = None
    wall_time_ms: int = 0


class _Clock:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._start = time.perf_counter()

    def lap(self) -> int:
        if not self.enabled:
            return 0
        now = time.perf_counter()
        ms = int((now - self._start) * 1000)
        self._start = now
        return ms


# ---------------------------------------------------------------------------
# input files


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _parse_number(text) -> Fraction:
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise InputError(f"expected a number string, got {text!r}")
    try:
        if "*2^" in text:
            return Dyadic.parse(text).to_fraction()
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"malformed number {text!r}") from None


def _stage_set(obj, where: str) -> StageSet:
    try:
        return StageSet.from_json(obj)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def _stage_pair(obj, where: str) -> StagePair:
    try:
        return StagePair.from_json(obj)
    except ValueError as exc:
        raise InputError(f"{where}: {exc}") from None


def _plfunc(obj, where: str) -> PLFunc:
    try:
        return PLFunc.from_json(json.dumps(obj))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{where}: {exc}") from None


# ---------------------------------------------------------------------------
# subcommands


def _run_specker(args, clock) -> Iterator[Record]:
    if args.inject:
        s = _stage_set(_load_json(args.inject), args.inject)
        ident = f"injected:{Path(args.inject).name}"
    else:
        s, ident = halting_set(), "K"
    prev = None
    for t in range(args.stages + 1):
        x = specker_term(s, t)
        ok = (prev is None or prev <= x) and x <= 2
        prev = x
        yield Record("specker", ident, 0, t, str(x), ok, None, clock.lap())


_BUNDLED_IVT = PLFunc([(0, -1), (1, 1)], label="linear")
_BUNDLED_MAX = PLFunc([(0, 0), (Fraction(1, 2), 1), (1, 0)], label="tent")


def _functions(args, default: PLFunc) -> list[tuple[str, PLFunc]]:
    if not args.inject:
        return [(default.label, default)]
    data = _load_json(args.inject)
    if isinstance(data, list) and data and isinstance(data[0], list) and data[0] and isinstance(data[0][0], list):
        return [(f"{Path(args.inject).name}#{i}", _plfunc(d, args.inject)) for i, d in enumerate(data)]
    return [(Path(args.inject).name, _plfunc(data, args.inject))]


def _run_ivt(args, clock) -> Iterator[Record]:
    for ident, f in _functions(args, _BUNDLED_IVT):
        try:
            run = trisect(f, args.precision)
            iv = run.interval
            ok = iv.width <= Dyadic(1, -args.precision)
            result = f"[{iv.lo}, {iv.hi}]"
            steps = run.iterations
        except PreconditionError as exc:
            result, ok, steps = f"precondition: {exc}", False, 0
        except TrisectionStall as exc:
            result, ok, steps = f"stall near {exc.point}", False, 0
        yield Record("ivt", ident, args.precision, steps, result, ok, None, clock.lap())


def _run_max(args, clock) -> Iterator[Record]:
    for ident, f in _functions(args, _BUNDLED_MAX):
        v = max_value(f, args.precision)
        ok = abs(v.to_fraction() - f.max()) <= Fraction(1, 2**args.precision)
        yield Record("max", ident, args.precision, 0, str(v), ok, None, clock.lap())


def _pair(args) -> tuple[StagePair, str]:
    if args.inject:
        return _stage_pair(_load_json(args.inject), args.inject), f"injected:{Path(args.inject).name}"
    return inseparable_pair(), "A,B"


def _run_kleene(args, clock) -> Iterator[Record]:
    pair, ident = _pair(args)
    tree = kleene_tree(pair)
    for length in range(args.stages + 1):
        w = kleene_witness(pair, length)
        yield Record("kleene", ident, 0, length, w or "(empty)", tree.member(w), None, clock.lap())


def _run_family(args, clock) -> Iterator[Record]:
    pair, ident = _pair(args)
    tol = Dyadic(1, -args.precision)
    for n in range(args.count):
        f = ivt_family(pair, n)
        try:
            # a certified bracket of width <= 2^-precision locates a zero
            iv = trisect(f, args.precision).interval
            x, ok = round_dyadic(iv.midpoint, args.precision + 2), iv.hi - iv.lo <= tol
        except TrisectionStall:
            x = leftmost_zero(f, args.precision + 2)
            ok = False
            if x is not None:
                j = f.at(x, args.precision + 2)
                ok = -tol <= j.lo and j.hi <= tol
        side = "none" if x is None else ("<=1/2" if x <= Dyadic(1, -1) else ">1/2")
        yield Record("family", f"{ident}#{n}", args.precision, 0, f"{x} {side}", ok, None, clock.lap())


def _run_bwt(args, clock) -> Iterator[Record]:
    if args.inject:
        s = _stage_set(_load_json(args.inject), args.inject)
        seq = specker_seq(s).terms
        ident = f"specker:{Path(args.inject).name}"
    else:
        seq = lambda n: CReal.constant(Dyadic(1, -n))  # noqa: E731
        ident = "2^-n"
    level = args.precision
    final = args.stages
    checkpoints = sorted({1 << i for i in range(final.bit_length()) if 1 << i < final} | {final // 2, final})
    answers = {stage: bwt_cluster_stage(seq, stage, level) for stage in checkpoints}
    for stage in checkpoints:
        x = answers[stage]
        # the last record is certified when the answer survived doubling the stage
        ok = 0 <= x <= 1 and (stage != final or answers[final // 2] == x)
        yield Record("bwt", ident, level, stage, str(x), ok, None, clock.lap())


def _instances(args, setup) -> list[Name]:
    if not args.inject:
        return setup.corpus(args.seed)
    data = _load_json(args.inject)
    if not isinstance(data, list):
        raise InputError(f"{args.inject}: expected a JSON list of instances")
    w = args.witness
    if w in ("max-zero", "zero-max", "identity"):
        return [encode_cfunc(_plfunc(d, args.inject)) for d in data]
    if w in ("ec-frr", "ec-mct"):
        for d in data:
            if not (isinstance(d, list) and all(isinstance(n, int) and n >= 0 for n in d)):
                raise InputError(f"{args.inject}: sets must be lists of naturals")
        return [enumeration_name(sorted(set(d)), gaps=1) for d in data]
    if w == "frr-mct":
        return [
            encode_functional(functional_from_vec(EllTwoVec.from_coeffs([_parse_number(c) for c in d])))
            for d in data
        ]
    if w == "mct-ec":
        return [encode_monotone(specker_seq(_stage_set(d, args.inject))) for d in data]
    if w == "cn-lim":
        for d in data:
            if not (isinstance(d, list) and all(isinstance(n, int) and n >= 0 for n in d)):
                raise InputError(f"{args.inject}: exclusion streams must be lists of naturals")
        return [Name.from_list(d) for d in data]
    raise InputError(f"witness {w} does not accept injected instances")


def _run_reduce(args, clock) -> Iterator[Record]:
    setup = WITNESSES[args.witness]()
    instances = _instances(args, setup)
    report = reduce_check(
        setup.source, setup.target, setup.witness, instances, args.precision, args.stages, workers=args.jobs
    )
    for o in report.outcomes:
        verdict = o.verdict.value if o.verdict is not None else f"skipped ({o.diagnostic})"
        yield Record(
            f"reduce:{args.witness}",
            f"{args.witness}#{o.index}",
            args.precision,
            o.stage,
            verdict,
            o.verdict is Verdict.ACCEPTED,
            None,
            clock.lap(),
        )


_BUNDLED_BIM = {"diag": ["1", "1/2", "1/4"], "tail": "1/4", "y": ["1/2", "1/2", "1/4"]}


def _run_bim(args, clock) -> Iterator[Record]:
    data = _load_json(args.inject) if args.inject else _BUNDLED_BIM
    ident = f"injected:{Path(args.inject).name}" if args.inject else "bundled"
    try:
        head = tuple(_parse_number(d) for d in data["diag"])
        tail = _parse_number(data["tail"])
        y = EllTwoVec.from_coeffs([_parse_number(c) for c in data["y"]])
        t_op = DiagonalOperator(head, tail)
    except (KeyError, TypeError) as exc:
        raise InputError(f"bim instance needs diag, tail and y: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    r = bim_via_cn(t_op, y, args.precision, stage=args.stages)
    n = max(y.support or 0, 1)
    coords = ", ".join(str(r.vec.coeff(i).approx(args.precision)) for i in range(n))
    yield Record("bim", ident, args.precision, args.stages, f"k={r.k} x=({coords})", r.certified, r.mind_changes, clock.lap())


_COMMANDS = {
    "specker": _run_specker,
    "ivt": _run_ivt,
    "max": _run_max,
    "kleene": _run_kleene,
    "family": _run_family,
    "bwt": _run_bwt,
    "reduce": _run_reduce,
    "bim": _run_bim,
}


# ---------------------------------------------------------------------------
# output


def _write(records: Iterable[Record], fmt: str, out) -> bool:
    all_ok = True
    if fmt == "csv":
        writer = csv.DictWriter(out, fieldnames=FIELDS, lineterminator="\n")
        writer.writeheader()
    for rec in records:
        all_ok &= rec.certified
        row = asdict(rec)
        if fmt == "csv":
            row["mind_changes"] = "" if rec.mind_changes is None else rec.mind_changes
            row["certified"] = str(rec.certified).lower()
            writer.writerow(row)
        else:
            out.write(json.dumps({k: row[k] for k in FIELDS}) + "\n")
    return all_ok


def _natural(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a natural number: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"not a natural number: {text!r}")
    return v


def _u64(text: str) -> int:
    v = _natural(text)
    if v >= 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=_natural, default=20, help="precision level n (tolerance 2^-n)")
    common.add_argument("--stages", type=_natural, default=10, help="stage budget / horizon")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--inject", metavar="FILE", help="JSON file with a stage set, pair or instances")
    common.add_argument("--seed", type=_u64, default=0, help="seed for generated corpora")
    common.add_argument("--timing", action="store_true", help="fill wall_time_ms (breaks byte-identical output)")

    parser = argparse.ArgumentParser(prog="compana", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("specker", parents=[common], help="Specker sequence column of a stage set")
    sub.add_parser("ivt", parents=[common], help="trisection zero enclosure")
    sub.add_parser("max", parents=[common], help="maximum value by branch and bound")
    sub.add_parser("kleene", parents=[common], help="Kleene tree members of a stage pair")
    fam = sub.add_parser("family", parents=[common], help="zeros of the sequential IVT family")
    fam.add_argument("--count", type=_natural, default=8, help="number of family members")
    sub.add_parser("bwt", parents=[common], help="cluster-point stage oracle")
    red = sub.add_parser("reduce", parents=[common], help="check a reduction witness on a corpus")
    red.add_argument("--witness", choices=sorted(WITNESSES), required=True)
    red.add_argument("--jobs", type=_natural, default=1, help="worker threads")
    sub.add_parser("bim", parents=[common], help="inverse of a diagonal operator via choice on N")
    return parser


def main(argv: Optional[list[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    clock = _Clock(args.timing)
    buffer = io.StringIO()
    try:
        ok = _write(_COMMANDS[args.command](args, clock), args.format, buffer)
    except InputError as exc:
        print(f"compana: error: {exc}", file=sys.stderr)
        return 2
    except CompanaError as exc:
        print(f"compana: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out.write(buffer.getvalue())
    if not ok:
        print("compana: some checks were not certified", file=sys.stderr)
    return 0 if ok else 1


def main_entry() -> None:
    """Console-script entry point."""
    sys.exit(main())
