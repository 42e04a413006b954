"""
Construction, reduction and verification of characterization pairs.

The k-pass sortable permutations are exactly Av2(Omega1, Omega2), where
Omega1 holds the permutations of length at most 3*f_max that are not k-pass
sortable, and Omega2 the k-pass sortable permutations of length at most
C = 3**(k+2) * f_max containing a member of Omega1. Here f_max is the longest
forbidden pattern of a pair characterizing the (k-1)-pass sortable
permutations.

C is far too large to enumerate, so both caps are configurable. Dropping
saving patterns can only shrink the 2-avoidance set, so a truncated Omega2
still yields only sortable permutations.

The three reduction lemmas remove patterns without changing the 2-avoidance
set. Their output is not claimed to be minimal or unique.
"""
import os.path
import sys
import time
from dataclasses import dataclass
from functools import partial
from typing import Iterable, List, NamedTuple, Optional, Tuple

import pandas as pd
import yaml

from popstack.avoidance import AvoidancePair, two_avoids, two_contains
from popstack.enumeration import (
    check_budget,
    map_chunks,
    max_enum_len,
    permutations_of_length,
)
from popstack.pair_file import read_pair_file
from popstack.permutation import (
    Permutation,
    patterns_contained,
)
from popstack.pop_stack import is_k_sortable

INT64_MAX = 2**63 - 1
COUNT_COLUMNS = ("n", "av2_count", "sortable_count", "mismatches")

SORTED_PAIR = AvoidancePair.of(["2 1"])
ONE_PASS_PAIR = AvoidancePair.of(["2 3 1", "3 1 2"])
TWO_PASS_PAIR = AvoidancePair.of(
    [
        "2 3 4 1",
        "3 4 1 2",
        "3 4 2 1",
        "4 1 2 3",
        "4 2 3 1",
        "4 3 1 2",
        "3 2 4 1",
        "4 1 3 2",
    ],
    ["4 1 3 5 2"],
)
KNOWN_PAIRS = {0: SORTED_PAIR, 1: ONE_PASS_PAIR, 2: TWO_PASS_PAIR}


class ReductionCheckError(RuntimeError):
    """Raised when a reduced pair does not 2-avoid the same permutations."""


def _progress(
    verbose: int, level: int, message: str, start: Optional[float] = None
):
    if verbose >= level:
        if start is not None:
            message = f"{message} at {time.time() - start:.1f} s"
        print(message, file=sys.stderr, flush=True)


def bounds(
    prior_forbidden: Iterable[Permutation], k: int, ceiling: int = INT64_MAX
) -> Tuple[int, int, int]:
    """
    Length bounds of the construction.

    Parameters
    ----------
    prior_forbidden: Iterable[Permutation]
        Forbidden patterns of the (k-1)-pass characterization.
    k: int
        Number of passes being characterized.
    ceiling: int
        Largest value any bound may take.

    Returns
    -------
    Tuple[int, int, int]
        f_max, the Omega1 length bound 3*f_max, and C = 3**(k+2) * f_max.

    Raises
    ------
    ValueError
        If prior_forbidden is empty or k is negative.
    OverflowError
        If a bound exceeds ceiling.
    """
    lengths = [len(p) for p in prior_forbidden]
    if not lengths:
        raise ValueError("Prior forbidden set is empty; f_max is undefined")
    if k < 0:
        raise ValueError(f"Number of passes must be non-negative, got {k}")
    f_max = max(lengths)
    omega1_len = 3 * f_max
    power = 1
    for _ in range(k + 2):
        power *= 3
        if power * f_max > ceiling:
            raise OverflowError(
                f"C = 3^{k + 2} * {f_max} exceeds the integer ceiling {ceiling}"
            )
    if omega1_len > ceiling:
        raise OverflowError(f"3 * f_max = {omega1_len} exceeds {ceiling}")
    return f_max, omega1_len, power * f_max


def default_prior_pair(k: int) -> AvoidancePair:
    """
    The (k-1)-pass characterization shipped with the package.

    Raises
    ------
    ValueError
        If no characterization of k-1 passes is built in.
    """
    try:
        return KNOWN_PAIRS[k - 1]
    except KeyError:
        raise ValueError(
            f"No built-in characterization for {k - 1} passes; supply a prior pair"
        ) from None


@dataclass(frozen=True)
class ConstructionConfig:
    """
    Parameters of one construction run.

    Leaving a cap unset selects the bound from the construction: 3*f_max for
    omega1_cap and min(C, enumeration budget) for omega2_cap. The prior pair
    defaults to the built-in (k-1)-pass characterization, which for k = 2 is
    F = {231, 312}, G = {}.
    """

    k: int
    omega1_cap: Optional[int] = None
    omega2_cap: Optional[int] = None
    prior_pair: Optional[AvoidancePair] = None
    jobs: int = 1
    check_bound: Optional[int] = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        for name in ("omega1_cap", "omega2_cap", "check_bound"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.jobs == 0:
            raise ValueError("jobs must be non-zero")
        f_max, omega1_len, c = bounds(self.prior.forbidden, self.k)
        if self.omega1_cap is not None and self.omega1_cap > omega1_len:
            raise ValueError(
                f"omega1_cap {self.omega1_cap} exceeds 3*f_max = {omega1_len}"
            )
        if self.omega2_cap is not None and self.omega2_cap > c:
            raise ValueError(f"omega2_cap {self.omega2_cap} exceeds C = {c}")

    @classmethod
    def from_yaml(cls, path: str, **overrides) -> "ConstructionConfig":
        """
        Read a configuration file. Keys: k, omega1_cap, omega2_cap,
        prior_pair (path to a pair file), jobs, check_bound. Keyword
        arguments that are not None override the file.

        Raises
        ------
        IOError
            If the file cannot be opened.
        """
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = yaml.safe_load(f) or {}
        except IOError:
            print(f"Could not open {path} for configuration.", file=sys.stderr)
            raise
        unknown = set(raw) - {
            "k",
            "omega1_cap",
            "omega2_cap",
            "prior_pair",
            "jobs",
            "check_bound",
        }
        if unknown:
            raise ValueError(f"{path}: unknown configuration keys {sorted(unknown)}")
        if raw.get("prior_pair") is not None:
            prior = os.path.join(os.path.dirname(path), raw["prior_pair"])
            if not os.path.isfile(prior):
                prior = raw["prior_pair"]
            raw["prior_pair"] = read_pair_file(prior)
        raw.update({key: val for key, val in overrides.items() if val is not None})
        if "k" not in raw:
            raise ValueError(f"{path}: k is required")
        return cls(**raw)

    @property
    def prior(self) -> AvoidancePair:
        if self.prior_pair is not None:
            return self.prior_pair
        return default_prior_pair(self.k)

    @property
    def f_max(self) -> int:
        return bounds(self.prior.forbidden, self.k)[0]

    @property
    def C(self) -> int:
        return bounds(self.prior.forbidden, self.k)[2]

    @property
    def resolved_omega1_cap(self) -> int:
        if self.omega1_cap is not None:
            return self.omega1_cap
        return bounds(self.prior.forbidden, self.k)[1]

    @property
    def resolved_omega2_cap(self) -> int:
        if self.omega2_cap is not None:
            return self.omega2_cap
        return min(self.C, max_enum_len())

    @property
    def caps_reach_bounds(self) -> bool:
        """True when Omega1 is built to the full 3*f_max bound."""
        return self.resolved_omega1_cap == 3 * self.f_max


def _unsortable_chunk(k: int, n: int, first: Optional[int]) -> List[Permutation]:
    return [p for p in permutations_of_length(n, first) if not is_k_sortable(p, k)]


def _saving_chunk(
    k: int, omega1: AvoidancePair, n: int, first: Optional[int]
) -> List[Permutation]:
    # two_contains against (omega1, {}) finds any occurrence of a member.
    return [
        p
        for p in permutations_of_length(n, first)
        if is_k_sortable(p, k) and two_contains(p, omega1) is not None
    ]


def construct_omega1(
    k: int, cap: int, jobs: int = 1, verbose: int = 0, limit: Optional[int] = None
) -> frozenset:
    """
    Reduced permutations of length at most cap that are not k-pass sortable.

    Parameters
    ----------
    k: int
        Number of passes.
    cap: int
        Longest length enumerated.
    jobs: int
        joblib n_jobs for the enumeration.
    verbose: int
        0 = silent, 1 = start and finish, >1 = per length.
    limit: int, optional
        Enumeration budget; defaults to max_enum_len().

    Raises
    ------
    ValueError
        If cap is not positive.
    EnumerationBudgetError
        If cap exceeds the enumeration budget.
    """
    if cap < 1:
        raise ValueError(f"omega1 cap must be positive, got {cap}")
    check_budget(cap, limit, what="build omega1 from")
    start = time.time()
    found: List[Permutation] = []
    for n in range(1, cap + 1):
        for part in map_chunks(partial(_unsortable_chunk, k), n, jobs):
            found.extend(part)
        _progress(verbose, 2, f"omega1 length {n}: {len(found)} patterns", start)
    _progress(verbose, 1, f"omega1 finished with {len(found)} patterns", start)
    return frozenset(found)


def construct_omega2(
    k: int,
    omega1: Iterable[Permutation],
    cap: int,
    jobs: int = 1,
    verbose: int = 0,
    limit: Optional[int] = None,
) -> frozenset:
    """
    k-pass sortable reduced permutations of length at most cap that contain
    at least one member of omega1.

    Raises
    ------
    ValueError
        If omega1 is empty or cap is not positive.
    EnumerationBudgetError
        If cap exceeds the enumeration budget.
    """
    forbidden = AvoidancePair.of(omega1)
    if not forbidden.forbidden:
        raise ValueError("omega1 is empty; nothing can be saved")
    if cap < 1:
        raise ValueError(f"omega2 cap must be positive, got {cap}")
    check_budget(cap, limit, what="build omega2 from")
    start = time.time()
    shortest = min(len(p) for p in forbidden.forbidden)
    found: List[Permutation] = []
    for n in range(shortest, cap + 1):
        for part in map_chunks(partial(_saving_chunk, k, forbidden), n, jobs):
            found.extend(part)
        _progress(verbose, 2, f"omega2 length {n}: {len(found)} patterns", start)
    _progress(verbose, 1, f"omega2 finished with {len(found)} patterns", start)
    return frozenset(found)


def construct_pair(config: ConstructionConfig, verbose: int = 0) -> AvoidancePair:
    """Build the unreduced (Omega1, Omega2) pair for a configuration."""
    omega1 = construct_omega1(
        config.k, config.resolved_omega1_cap, jobs=config.jobs, verbose=verbose
    )
    omega2 = construct_omega2(
        config.k,
        omega1,
        config.resolved_omega2_cap,
        jobs=config.jobs,
        verbose=verbose,
    )
    return AvoidancePair(omega1, omega2)


class Removal(NamedTuple):
    """One pattern removed by a reduction lemma."""

    lemma: str
    side: str
    pattern: Permutation

    def __str__(self) -> str:
        return f"lemma {self.lemma}: removed {self.pattern} from {self.side}"


def _contains_forbidden(host: Permutation, forbidden: AvoidancePair) -> bool:
    return two_contains(host, forbidden) is not None


def _apply_lemma_a(pair: AvoidancePair, log: List[Removal]) -> AvoidancePair:
    forbidden = AvoidancePair(pair.forbidden)
    kept = []
    for alpha in pair.G:
        if _contains_forbidden(alpha, forbidden):
            kept.append(alpha)
        else:
            log.append(Removal("A", "G", alpha))
    return pair.with_sets(saving=kept)


def lemma_b_literal_applies(pair: AvoidancePair, alpha: Permutation) -> bool:
    """
    The removal hypothesis for alpha in G as usually stated: some other beta
    in G is contained in alpha, and every forbidden pattern contained in
    alpha is also contained in beta.

    This alone does not preserve 2-avoidance. With F = {12} and
    G = {132, 1324}, the occurrence 34 inside 1324 is only saved by 1324.
    """
    inside = patterns_contained(alpha)
    wanted = inside & pair.forbidden
    for beta in pair.G:
        if beta == alpha or beta not in inside:
            continue
        if wanted <= patterns_contained(beta):
            return True
    return False


def _lemma_b_applies(pair: AvoidancePair, alpha: Permutation) -> bool:
    # Every forbidden occurrence inside alpha must be saved inside alpha by the
    # rest of G; any saver of gamma via alpha then yields a saver in G - {alpha}.
    if not lemma_b_literal_applies(pair, alpha):
        return False
    rest = pair.with_sets(saving=pair.saving - {alpha})
    return two_avoids(alpha, rest)


def _apply_lemma_b(pair: AvoidancePair, log: List[Removal]) -> AvoidancePair:
    changed = True
    while changed:
        changed = False
        for alpha in reversed(pair.G):
            if _lemma_b_applies(pair, alpha):
                pair = pair.with_sets(saving=pair.saving - {alpha})
                log.append(Removal("B", "G", alpha))
                changed = True
    return pair


def _apply_lemma_c(pair: AvoidancePair, log: List[Removal]) -> AvoidancePair:
    covered = frozenset().union(*(patterns_contained(alpha) for alpha in pair.saving))
    changed = True
    while changed:
        changed = False
        for lam in reversed(pair.F):
            free = pair.forbidden - covered
            if free & patterns_contained(lam, max_length=len(lam) - 1):
                pair = pair.with_sets(forbidden=pair.forbidden - {lam})
                log.append(Removal("C", "F", lam))
                changed = True
    return pair


def reduce_lemma_A(pair: AvoidancePair) -> AvoidancePair:
    """
    Drop every saving pattern that contains no forbidden pattern.
    """
    return _apply_lemma_a(pair, [])


def reduce_lemma_B(pair: AvoidancePair) -> AvoidancePair:
    """
    Repeatedly drop a saving pattern alpha when a shorter saving pattern beta
    inside alpha contains every forbidden pattern alpha contains, and every
    forbidden occurrence inside alpha is already saved inside alpha by the
    other saving patterns. Longest patterns are tried first.
    """
    return _apply_lemma_b(pair, [])


def reduce_lemma_C(pair: AvoidancePair) -> AvoidancePair:
    """
    Repeatedly drop a forbidden pattern lambda that properly contains another
    forbidden pattern kappa which no saving pattern contains. An occurrence
    of such a kappa can never be saved, so lambda adds nothing.
    """
    return _apply_lemma_c(pair, [])


def same_av2(
    first: AvoidancePair, second: AvoidancePair, n_max: int
) -> Optional[Permutation]:
    """
    Compare 2-avoidance for every permutation up to n_max; return the first
    permutation on which the pairs disagree, or None.
    """
    for n in range(n_max + 1):
        for p in permutations_of_length(n):
            if two_avoids(p, first) != two_avoids(p, second):
                return p
    return None


def reduce_pair_with_log(
    pair: AvoidancePair,
    check_bound: Optional[int] = None,
    verbose: int = 0,
) -> Tuple[AvoidancePair, List[Removal]]:
    """
    Apply lemmas A, B and C in that order until nothing changes.

    Parameters
    ----------
    pair: AvoidancePair
        The pair to reduce.
    check_bound: int, optional
        When given, the reduced pair is compared with the input on every
        permutation up to this length.
    verbose: int
        0 = silent, 1 = sizes before and after.

    Returns
    -------
    Tuple[AvoidancePair, List[Removal]]
        The reduced pair and the removals made, in order.

    Raises
    ------
    ReductionCheckError
        If the check finds a permutation on which the pairs disagree.
    """
    start = time.time()
    _progress(
        verbose, 1, f"reducing |F|={len(pair.forbidden)} |G|={len(pair.saving)}"
    )
    log: List[Removal] = []
    current = pair
    while True:
        reduced = _apply_lemma_c(_apply_lemma_b(_apply_lemma_a(current, log), log), log)
        if reduced == current:
            break
        current = reduced
    _progress(
        verbose,
        1,
        f"reduced to |F|={len(current.forbidden)} |G|={len(current.saving)}",
        start,
    )
    if check_bound is not None:
        check_budget(check_bound, what="check a reduction against")
        disagreement = same_av2(pair, current, check_bound)
        if disagreement is not None:
            raise ReductionCheckError(
                f"Reduced pair disagrees with the input on {disagreement}"
            )
    return current, log


def reduce_pair(
    pair: AvoidancePair, check_bound: Optional[int] = None
) -> AvoidancePair:
    """
    Reduce a pair with lemmas A, B and C to a fixed point. The result has the
    same 2-avoidance set but is not claimed minimal or unique.
    """
    return reduce_pair_with_log(pair, check_bound)[0]


class Mismatch(NamedTuple):
    permutation: Permutation
    two_avoids: bool
    sortable: bool


def _verify_chunk(
    pair: AvoidancePair, k: int, n: int, first: Optional[int]
) -> Tuple[int, int, List[Mismatch]]:
    av2 = sortable = 0
    mismatches = []
    for p in permutations_of_length(n, first):
        avoids = two_avoids(p, pair)
        ok = is_k_sortable(p, k)
        av2 += avoids
        sortable += ok
        if avoids != ok:
            mismatches.append(Mismatch(p, avoids, ok))
    return av2, sortable, mismatches


@dataclass(frozen=True, eq=False)
class VerificationReport:
    """
    Per-length comparison of Av2(pair) with the k-pass sortable permutations.
    """

    k: int
    counts: pd.DataFrame
    mismatches: Tuple[Mismatch, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_csv(self, path_or_buf=None):
        return self.counts.to_csv(path_or_buf, index=False)


def verify_pair(
    pair: AvoidancePair,
    k: int,
    n_max: int,
    jobs: int = 1,
    verbose: int = 0,
    limit: Optional[int] = None,
) -> VerificationReport:
    """
    Compare 2-avoidance of pair with k-pass sortability on every permutation
    of length 1..n_max.

    Parameters
    ----------
    pair: AvoidancePair
        Candidate characterization.
    k: int
        Number of passes.
    n_max: int
        Longest length checked.
    jobs: int
        joblib n_jobs for the enumeration.
    verbose: int
        0 = silent, 1 = finish, >1 = per length.
    limit: int, optional
        Enumeration budget; defaults to max_enum_len().

    Returns
    -------
    VerificationReport
        Counts per length (columns n, av2_count, sortable_count, mismatches)
        and every mismatching permutation.
    """
    check_budget(n_max, limit, what="verify against")
    start = time.time()
    rows = []
    mismatches: List[Mismatch] = []
    for n in range(1, n_max + 1):
        av2 = sortable = 0
        wrong: List[Mismatch] = []
        for part in map_chunks(partial(_verify_chunk, pair, k), n, jobs):
            av2 += part[0]
            sortable += part[1]
            wrong.extend(part[2])
        rows.append(
            {
                "n": n,
                "av2_count": av2,
                "sortable_count": sortable,
                "mismatches": len(wrong),
            }
        )
        mismatches.extend(wrong)
        _progress(verbose, 2, f"verified length {n}", start)
    _progress(verbose, 1, f"verification found {len(mismatches)} mismatches", start)
    counts = pd.DataFrame(rows, columns=list(COUNT_COLUMNS))
    return VerificationReport(k, counts, tuple(mismatches))


def _count_sortable_chunk(k: int, n: int, first: Optional[int]) -> int:
    return sum(1 for p in permutations_of_length(n, first) if is_k_sortable(p, k))


def _count_av2_chunk(pair: AvoidancePair, n: int, first: Optional[int]) -> int:
    return sum(1 for p in permutations_of_length(n, first) if two_avoids(p, pair))


def count_sortable(k: int, n: int, jobs: int = 1, limit: Optional[int] = None) -> int:
    """Number of k-pass sortable permutations of length n."""
    check_budget(n, limit, what="count")
    return sum(map_chunks(partial(_count_sortable_chunk, k), n, jobs))


def count_av2(
    pair: AvoidancePair, n: int, jobs: int = 1, limit: Optional[int] = None
) -> int:
    """Number of permutations of length n that 2-avoid pair."""
    check_budget(n, limit, what="count")
    return sum(map_chunks(partial(_count_av2_chunk, pair), n, jobs))


def count_table(
    k: int,
    n_max: int,
    pair: Optional[AvoidancePair] = None,
    jobs: int = 1,
    limit: Optional[int] = None,
) -> pd.DataFrame:
    """
    Counts for n = 1..n_max with columns n, av2_count, sortable_count,
    mismatches. Without a pair the av2_count and mismatches columns are empty.
    """
    if pair is not None:
        return verify_pair(pair, k, n_max, jobs=jobs, limit=limit).counts
    check_budget(n_max, limit, what="count")
    sortable = [count_sortable(k, n, jobs) for n in range(1, n_max + 1)]
    return pd.DataFrame(
        {
            "n": range(1, n_max + 1),
            "av2_count": pd.array([None] * n_max, dtype="Int64"),
            "sortable_count": sortable,
            "mismatches": pd.array([None] * n_max, dtype="Int64"),
        }
    )


def sortable_table(
    k_max: int, n_max: int, jobs: int = 1, limit: Optional[int] = None
) -> pd.DataFrame:
    """
    Number of k-pass sortable permutations of each length n = 1..n_max, one
    column per k = 0..k_max.
    """
    check_budget(n_max, limit, what="count")
    table = pd.DataFrame({"n": range(1, n_max + 1)})
    for k in range(k_max + 1):
        table[f"k{k}"] = [count_sortable(k, n, jobs) for n in range(1, n_max + 1)]
    return table


def characterize(
    config: ConstructionConfig, reduce: bool = True, verbose: int = 0
) -> Tuple[AvoidancePair, List[Removal]]:
    """
    Build (Omega1, Omega2) for a configuration and optionally reduce it.
    config.check_bound only applies to the reduction; it is reported and
    skipped when reduce is False.
    """
    pair = construct_pair(config, verbose=verbose)
    if not reduce:
        if config.check_bound is not None:
            print(
                f"check_bound {config.check_bound} ignored: the pair is not reduced",
                file=sys.stderr,
            )
        return pair, []
    return reduce_pair_with_log(pair, config.check_bound, verbose=verbose)


def pattern_sizes(pair: AvoidancePair) -> pd.DataFrame:
    """Number of forbidden and saving patterns of each length."""
    lengths = sorted(set(pair.forbidden_by_length) | set(pair.saving_by_length))
    return pd.DataFrame(
        {
            "length": lengths,
            "forbidden": [len(pair.forbidden_by_length.get(n, ())) for n in lengths],
            "saving": [len(pair.saving_by_length.get(n, ())) for n in lengths],
        }
    )

