"""
Exhaustive enumeration of reduced permutations, the enumeration budget, and
the data-parallel map used by the characterization code.

Permutations of length n are split into n chunks by their first entry. Chunks
run through joblib and come back in submission order, so merged results do
not depend on the number of workers.
"""
import os
from itertools import permutations
from typing import Callable, Iterator, List, Optional, Tuple, TypeVar

from joblib import Parallel, delayed

from popstack.permutation import Permutation

MAX_PERMUTATION_LENGTH = 16
DEFAULT_MAX_ENUM_LEN = 10
ENV_MAX_ENUM_LEN = "POPSTACK_MAX_ENUM_LEN"

# Below this length a chunk is too cheap to be worth a worker process.
PARALLEL_MIN_LENGTH = 7

T = TypeVar("T")


class EnumerationBudgetError(RuntimeError):
    """Raised when a request would enumerate permutations beyond the budget."""


def max_enum_len() -> int:
    """
    Longest permutation length that may be enumerated exhaustively.

    Read from the POPSTACK_MAX_ENUM_LEN environment variable when set, and
    never more than MAX_PERMUTATION_LENGTH.

    Raises
    ------
    ValueError
        If the environment variable is not a positive integer.
    """
    raw = os.environ.get(ENV_MAX_ENUM_LEN)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_ENUM_LEN
    try:
        limit = int(raw)
    except ValueError:
        raise ValueError(
            f"{ENV_MAX_ENUM_LEN} must be an integer, got {raw!r}"
        ) from None
    if limit < 1:
        raise ValueError(f"{ENV_MAX_ENUM_LEN} must be positive, got {limit}")
    return min(limit, MAX_PERMUTATION_LENGTH)


def check_budget(
    length: int, limit: Optional[int] = None, what: str = "enumerate"
) -> None:
    """
    Refuse to enumerate permutations longer than the budget.

    Parameters
    ----------
    length: int
        Longest length that would be enumerated.
    limit: int, optional
        Budget to apply; defaults to max_enum_len().
    what: str
        Description of the request, used in the error message.

    Raises
    ------
    EnumerationBudgetError
        If length exceeds the budget.
    """
    budget = max_enum_len() if limit is None else min(limit, MAX_PERMUTATION_LENGTH)
    if length > budget:
        raise EnumerationBudgetError(
            f"Refusing to {what} permutations of length {length}: the "
            f"enumeration budget is length {budget} ({length}! permutations "
            f"would be needed). Lower the cap or raise {ENV_MAX_ENUM_LEN}."
        )


def permutations_of_length(
    n: int, first: Optional[int] = None
) -> Iterator[Permutation]:
    """
    Reduced permutations of length n in lexicographic order, optionally only
    those starting with first.
    """
    if first is None:
        for values in permutations(range(1, n + 1)):
            yield Permutation.trusted(values)
        return
    rest = [v for v in range(1, n + 1) if v != first]
    for tail in permutations(rest):
        yield Permutation.trusted((first,) + tail)


def all_permutations(max_length: int, min_length: int = 0) -> Iterator[Permutation]:
    """Reduced permutations ordered by length, then lexicographically."""
    for n in range(min_length, max_length + 1):
        yield from permutations_of_length(n)


def chunks(n: int) -> List[Tuple[int, Optional[int]]]:
    """Work units covering every permutation of length n."""
    if n == 0:
        return [(0, None)]
    return [(n, first) for first in range(1, n + 1)]


def map_chunks(
    func: Callable[[int, Optional[int]], T], n: int, jobs: int = 1
) -> List[T]:
    """
    Apply func(n, first) to every chunk of length n.

    Parameters
    ----------
    func: Callable
        Picklable function of (n, first) returning a partial result.
    n: int
        Permutation length.
    jobs: int
        joblib n_jobs; -1 uses every available core.

    Returns
    -------
    List
        Partial results in chunk order.
    """
    work = chunks(n)
    if jobs == 1 or n < PARALLEL_MIN_LENGTH:
        return [func(length, first) for length, first in work]
    return Parallel(n_jobs=jobs)(delayed(func)(length, first) for length, first in work)
