"""
Command line interface.

    popstack sort-trace 41352 --k 2
    popstack check 143562 two_pass.pairs --explain
    popstack construct --k 2 --omega1-cap 5 --omega2-cap 6 --reduce
    popstack reduce omega.pairs --log --out reduced.pairs
    popstack count --k 1 --n-max 6
    popstack verify two_pass.pairs --k 2 --n-max 8

Exit status: 0 on success or a positive verdict, 1 on a negative verdict
(unsorted, 2-contains, mismatches found), 2 on invalid input and 3 when a
request is refused by the enumeration budget.
"""
import argparse
import sys
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence

from popstack.avoidance import (
    forbidden_occurrences,
    saving_occurrences,
    two_contains,
)
from popstack.characterize import (
    ConstructionConfig,
    ReductionCheckError,
    characterize,
    count_table,
    pattern_sizes,
    reduce_pair_with_log,
    sortable_table,
    verify_pair,
)
from popstack.enumeration import EnumerationBudgetError
from popstack.pair_file import format_pair, read_pair_file
from popstack.permutation import Permutation
from popstack.pop_stack import run_machine, sort_trace

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT_ERROR = 2
EXIT_BUDGET = 3

PERMUTATION_HELP = (
    "Entries separated by spaces or commas. A single run of digits is read one "
    "digit per entry, so 10 is read as 1 0; use separators for entries above 9, "
    "as in \"10 2 1\"."
)


def _permutation(text: str) -> Permutation:
    try:
        return Permutation.from_text(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer: {text}")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer: {text}")
    return value


PARSER = argparse.ArgumentParser(
    prog="popstack",
    description="Pop-stack sorting and 2-avoidance characterizations",
)
PARSER.add_argument(
    "-v", "--verbose", action="count", default=0, help="Progress on stderr."
)
SUBPARSERS = PARSER.add_subparsers(dest="command", required=True)

_trace = SUBPARSERS.add_parser("sort-trace", help="Show every pass of a sort.")
_trace.add_argument("permutation", type=_permutation, help=PERMUTATION_HELP)
_trace.add_argument(
    "--k", type=_non_negative, help="Stop after k passes; exit 1 if still unsorted."
)
_trace.add_argument(
    "--moves", action="store_true", help="List the push and pop moves of each pass."
)

_check = SUBPARSERS.add_parser("check", help="Test 2-avoidance of a pair file.")
_check.add_argument("permutation", type=_permutation, help=PERMUTATION_HELP)
_check.add_argument("pairs", help="Pair file, or the name of a shipped one.")
_check.add_argument(
    "--explain",
    action="store_true",
    help="List every forbidden occurrence and the first pattern saving it.",
)

_construct = SUBPARSERS.add_parser(
    "construct", help="Build (omega1, omega2) for k passes."
)
_construct.add_argument("--k", type=_positive)
_construct.add_argument("--omega1-cap", type=_positive)
_construct.add_argument("--omega2-cap", type=_positive)
_construct.add_argument("--prior", help="Pair file for k - 1 passes.")
_construct.add_argument("--config", help="YAML construction configuration.")
_construct.add_argument(
    "--reduce",
    action="store_true",
    help="Apply the reduction lemmas. Implied by a check bound.",
)
_construct.add_argument("--check-bound", type=_positive)
_construct.add_argument("--out", help="Output pair file; stdout when omitted.")
_construct.add_argument("--jobs", type=int)

_reduce = SUBPARSERS.add_parser("reduce", help="Apply the reduction lemmas.")
_reduce.add_argument("pairs")
_reduce.add_argument("--check-bound", type=_positive)
_reduce.add_argument("--log", action="store_true", help="Print every removal.")
_reduce.add_argument("--out", help="Output pair file; stdout when omitted.")

_count = SUBPARSERS.add_parser("count", help="Count sortable permutations as CSV.")
_count.add_argument("--k", type=_non_negative)
_count.add_argument("--n-max", type=_positive, required=True)
_count.add_argument("--pairs", help="Also count 2-avoiders of this pair file.")
_count.add_argument(
    "--k-max", type=_non_negative, help="One column per k = 0..k_max instead."
)
_count.add_argument("--out", help="Output CSV; stdout when omitted.")
_count.add_argument("--jobs", type=int)

_verify = SUBPARSERS.add_parser(
    "verify", help="Compare a pair file with k-pass sortability."
)
_verify.add_argument("pairs")
_verify.add_argument("--k", type=_non_negative, required=True)
_verify.add_argument("--n-max", type=_positive, required=True)
_verify.add_argument("--out", help="Output CSV; stdout when omitted.")
_verify.add_argument("--jobs", type=int)


@dataclass(frozen=True)
class CommandRequest:
    """One parsed and validated invocation."""

    command: str
    permutation: Optional[Permutation] = None
    pairs: Optional[str] = None
    k: Optional[int] = None
    k_max: Optional[int] = None
    omega1_cap: Optional[int] = None
    omega2_cap: Optional[int] = None
    n_max: Optional[int] = None
    prior: Optional[str] = None
    config: Optional[str] = None
    check_bound: Optional[int] = None
    out: Optional[str] = None
    jobs: Optional[int] = None
    moves: bool = False
    explain: bool = False
    reduce: bool = False
    log: bool = False
    verbose: int = 0

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "CommandRequest":
        values = {
            name: getattr(args, name)
            for name in cls.__dataclass_fields__
            if getattr(args, name, None) is not None
        }
        request = cls(**values)
        request.validate()
        return request

    def validate(self) -> None:
        """
        Raises
        ------
        ValueError
            If the flags do not make sense together.
        """
        if self.jobs == 0:
            raise ValueError("--jobs must be non-zero")
        if self.command == "construct" and self.k is None and self.config is None:
            raise ValueError("construct needs --k or --config")
        if self.command == "count":
            if self.k is None and self.k_max is None:
                raise ValueError("count needs --k or --k-max")
            if self.k_max is not None and self.pairs is not None:
                raise ValueError("--k-max cannot be combined with --pairs")
            if self.k_max is not None and self.k is not None:
                raise ValueError("--k-max cannot be combined with --k")

    @property
    def n_jobs(self) -> int:
        return -1 if self.jobs is None else self.jobs


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)


def _note(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def cmd_sort_trace(request: CommandRequest) -> int:
    assert request.permutation is not None
    trace = sort_trace(request.permutation, max_passes=request.k)
    print(trace.render())
    if request.moves:
        for i, record in enumerate(trace.passes, 1):
            _, moves = run_machine(record.before)
            print(f"moves {i}: {', '.join(moves)}")
    if trace.is_sorted:
        print(f"sorted after {len(trace.passes)} passes")
        return EXIT_OK
    print(f"not sorted after {len(trace.passes)} passes")
    return EXIT_NEGATIVE


def cmd_check(request: CommandRequest) -> int:
    assert request.permutation is not None and request.pairs is not None
    pair = read_pair_file(request.pairs)
    p = request.permutation
    if request.explain:
        for pattern, gamma in forbidden_occurrences(p, pair):
            saver = next(saving_occurrences(p, gamma, pair.G), None)
            verdict = "unsaved" if saver is None else f"saved by {saver}"
            print(f"{pattern} at {gamma}: {verdict}")
    witness = two_contains(p, pair)
    if witness is None:
        print(f"{p} 2-avoids the pair")
        return EXIT_OK
    print(f"{p} 2-contains the pair: {witness}")
    return EXIT_NEGATIVE


def _construction_config(request: CommandRequest) -> ConstructionConfig:
    prior = read_pair_file(request.prior) if request.prior else None
    overrides = dict(
        k=request.k,
        omega1_cap=request.omega1_cap,
        omega2_cap=request.omega2_cap,
        prior_pair=prior,
        jobs=request.jobs,
        check_bound=request.check_bound,
    )
    if request.config is not None:
        return ConstructionConfig.from_yaml(request.config, **overrides)
    assert request.k is not None
    overrides["jobs"] = request.n_jobs
    return ConstructionConfig(
        **{key: value for key, value in overrides.items() if value is not None}
    )


def cmd_construct(request: CommandRequest) -> int:
    config = _construction_config(request)
    # A check bound only means something for a reduced pair.
    reduce = request.reduce or config.check_bound is not None
    pair, removals = characterize(config, reduce=reduce, verbose=request.verbose)
    comments = [
        f"k = {config.k}",
        f"omega1 cap {config.resolved_omega1_cap} (3 * f_max = {3 * config.f_max})",
        f"omega2 cap {config.resolved_omega2_cap} (C = {config.C})",
    ]
    if reduce:
        comments.append(f"reduced: {len(removals)} patterns removed")
    if request.verbose:
        _note(pattern_sizes(pair).to_string(index=False))
    _emit(format_pair(pair, comments), request.out)
    return EXIT_OK


def cmd_reduce(request: CommandRequest) -> int:
    assert request.pairs is not None
    pair = read_pair_file(request.pairs)
    try:
        reduced, removals = reduce_pair_with_log(
            pair, request.check_bound, verbose=request.verbose
        )
    except ReductionCheckError as e:
        _note(str(e))
        return EXIT_NEGATIVE
    if request.log:
        for removal in removals:
            _note(str(removal))
    comments = [f"reduced from {request.pairs}: {len(removals)} patterns removed"]
    _emit(format_pair(reduced, comments), request.out)
    return EXIT_OK


def cmd_count(request: CommandRequest) -> int:
    assert request.n_max is not None
    if request.k_max is not None:
        table = sortable_table(request.k_max, request.n_max, jobs=request.n_jobs)
    else:
        assert request.k is not None
        pair = read_pair_file(request.pairs) if request.pairs else None
        table = count_table(request.k, request.n_max, pair, jobs=request.n_jobs)
    _emit(table.to_csv(index=False), request.out)
    return EXIT_OK


def cmd_verify(request: CommandRequest) -> int:
    assert request.pairs is not None
    assert request.k is not None and request.n_max is not None
    pair = read_pair_file(request.pairs)
    report = verify_pair(
        pair, request.k, request.n_max, jobs=request.n_jobs, verbose=request.verbose
    )
    _emit(report.to_csv(), request.out)
    for mismatch in report.mismatches:
        _note(
            f"mismatch {mismatch.permutation}: 2-avoids={mismatch.two_avoids} "
            f"sortable={mismatch.sortable}"
        )
    return EXIT_OK if report.ok else EXIT_NEGATIVE


COMMANDS: Dict[str, Callable[[CommandRequest], int]] = {
    "sort-trace": cmd_sort_trace,
    "check": cmd_check,
    "construct": cmd_construct,
    "reduce": cmd_reduce,
    "count": cmd_count,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command and return its exit status.
    """
    try:
        args = PARSER.parse_args(None if argv is None else list(argv))
    except SystemExit as e:
        return EXIT_INPUT_ERROR if e.code else EXIT_OK
    try:
        request = CommandRequest.from_namespace(args)
        return COMMANDS[request.command](request)
    except EnumerationBudgetError as e:
        _note(str(e))
        return EXIT_BUDGET
    except (ValueError, OverflowError, OSError) as e:
        _note(f"error: {e}")
        return EXIT_INPUT_ERROR
