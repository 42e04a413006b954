"""
Avoidance semantics: classical avoidance of a set of patterns, avoidance of
barred patterns as usually defined, and 2-avoidance of a pair (F, G).

A permutation 2-contains (F, G) when some occurrence of a pattern in F is not
part of (as an index subset) any occurrence of a pattern in G. The patterns
of G are the ones that can "save" an occurrence of a forbidden pattern.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import combinations
from math import comb
from typing import Dict, FrozenSet, Iterable, Iterator, Optional, Sequence, Tuple

from popstack.permutation import (
    Occurrence,
    Permutation,
    _reduce,
    canonical_order,
    contains,
    embeddings,
    reduce,
)


@dataclass(frozen=True)
class AvoidancePair:
    """
    A pair of finite sets of reduced permutations: forbidden patterns F and
    saving patterns G.
    """

    forbidden: FrozenSet[Permutation]
    saving: FrozenSet[Permutation] = frozenset()

    def __post_init__(self):
        for side, patterns in (("F", self.forbidden), ("G", self.saving)):
            for pattern in patterns:
                if not isinstance(pattern, Permutation) or not pattern.is_reduced:
                    raise ValueError(
                        f"{side} member {pattern!r} is not a reduced permutation"
                    )

    @classmethod
    def of(
        cls, forbidden: Iterable[Sequence[int]], saving: Iterable[Sequence[int]] = ()
    ) -> "AvoidancePair":
        """
        Build a pair from any iterables of sequences, deduplicating members.
        Members given as text are parsed with Permutation.from_text.
        """
        return cls(
            frozenset(_as_permutation(p) for p in forbidden),
            frozenset(_as_permutation(p) for p in saving),
        )

    @property
    def F(self) -> Tuple[Permutation, ...]:
        """Forbidden patterns ordered by length, then lexicographically."""
        return canonical_order(self.forbidden)

    @property
    def G(self) -> Tuple[Permutation, ...]:
        """Saving patterns ordered by length, then lexicographically."""
        return canonical_order(self.saving)

    @cached_property
    def forbidden_by_length(self) -> Dict[int, Tuple[Permutation, ...]]:
        return _group_by_length(self.forbidden)

    @cached_property
    def saving_by_length(self) -> Dict[int, Tuple[Permutation, ...]]:
        return _group_by_length(self.saving)

    @cached_property
    def forbidden_sets(self) -> Dict[int, FrozenSet[Permutation]]:
        return {n: frozenset(ps) for n, ps in self.forbidden_by_length.items()}

    @cached_property
    def saving_sets(self) -> Dict[int, FrozenSet[Permutation]]:
        return {n: frozenset(ps) for n, ps in self.saving_by_length.items()}

    def with_sets(
        self,
        forbidden: Optional[Iterable[Permutation]] = None,
        saving: Optional[Iterable[Permutation]] = None,
    ) -> "AvoidancePair":
        return AvoidancePair(
            frozenset(self.forbidden if forbidden is None else forbidden),
            frozenset(self.saving if saving is None else saving),
        )

    def __str__(self) -> str:
        f = ", ".join(p.compact() for p in self.F)
        g = ", ".join(p.compact() for p in self.G)
        return f"F={{{f}}} G={{{g}}}"


def _as_permutation(p) -> Permutation:
    if isinstance(p, str):
        return Permutation.from_text(p)
    return p if isinstance(p, Permutation) else Permutation(p)


def _group_by_length(
    patterns: Iterable[Permutation],
) -> Dict[int, Tuple[Permutation, ...]]:
    grouped: Dict[int, list] = {}
    for pattern in canonical_order(patterns):
        grouped.setdefault(len(pattern), []).append(pattern)
    return {length: tuple(members) for length, members in grouped.items()}


def avoids_all(p: Sequence[int], forbidden: Iterable[Sequence[int]]) -> bool:
    """True if p contains no member of forbidden."""
    return not any(contains(pattern, p) for pattern in forbidden)


@dataclass(frozen=True)
class BarredPattern:
    """
    A permutation with some entries marked with a bar.
    """

    entries: Permutation
    barred: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.barred) != len(self.entries):
            raise ValueError(
                f"Barred pattern needs one flag per entry: {len(self.entries)} "
                f"entries, {len(self.barred)} flags"
            )

    @classmethod
    def from_text(cls, text: str) -> "BarredPattern":
        """
        Parse entries separated by whitespace, barred entries suffixed with
        "!", e.g. "4 6! 3 1! 5 7 2".
        """
        tokens = text.split()
        if len(tokens) == 1 and len(tokens[0]) > 1 and tokens[0].isdigit():
            tokens = list(tokens[0])
        flags = tuple(token.endswith("!") for token in tokens)
        entries = Permutation.from_text(" ".join(t.rstrip("!") for t in tokens))
        return cls(entries, flags)

    def __str__(self) -> str:
        return " ".join(
            f"{v}!" if bar else str(v) for v, bar in zip(self.entries, self.barred)
        )


def removebar(b: BarredPattern) -> Permutation:
    """Entries without a bar, in order and not reduced."""
    return Permutation.trusted(
        tuple(v for v, bar in zip(b.entries, b.barred) if not bar)
    )


def unbar(b: BarredPattern) -> Permutation:
    """All entries with the bars erased."""
    return b.entries


def barred_avoids(p: Sequence[int], b: BarredPattern) -> bool:
    """
    Barred-pattern avoidance: every occurrence of removebar(b) in p must lie
    inside (as an index subset) an occurrence of unbar(b).

    This is the usual textbook definition taken literally. With no bars at all
    it therefore holds for every p, since each occurrence extends to itself.
    A pattern with every entry barred is avoided vacuously.
    """
    host = p if isinstance(p, Permutation) else Permutation(p)
    visible = _reduce(removebar(b))
    if not visible:
        return True
    full = _reduce(unbar(b))
    for indices in embeddings(visible, host):
        if next(embeddings(full, host, indices), None) is None:
            return False
    return True


@dataclass(frozen=True)
class TwoContainmentWitness:
    """
    An occurrence gamma of a forbidden pattern that no saving pattern rescues.
    """

    gamma: Occurrence
    matched_pattern: Permutation

    def __post_init__(self):
        if self.gamma.pattern != self.matched_pattern:
            raise ValueError(
                f"{self.gamma} does not reduce to {self.matched_pattern}"
            )

    def __str__(self) -> str:
        return f"pattern {self.matched_pattern} at {self.gamma}"


def _is_saved(
    host: Tuple[int, ...], indices: Tuple[int, ...], pair: AvoidancePair
) -> bool:
    """
    True if some occurrence of a saving pattern in host contains indices.

    For each length the cheaper of two searches is used: constrained
    backtracking per saving pattern, or a scan of every index superset.
    """
    size, n = len(indices), len(host)
    for length, savers in pair.saving_by_length.items():
        if length < size or length > n:
            continue
        if length == size:
            if _reduce([host[i] for i in indices]) in pair.saving_sets[length]:
                return True
            continue
        supersets = comb(n - size, length - size)
        if len(savers) <= supersets:
            for saver in savers:
                if next(embeddings(saver, host, indices), None) is not None:
                    return True
        else:
            wanted = pair.saving_sets[length]
            rest = [i for i in range(n) if i not in indices]
            for extra in combinations(rest, length - size):
                merged = sorted(indices + extra)
                if _reduce([host[i] for i in merged]) in wanted:
                    return True
    return False


def _candidates(
    host: Tuple[int, ...], length: int, pair: AvoidancePair
) -> Iterator[Tuple[Permutation, Tuple[int, ...]]]:
    """
    Occurrences of the forbidden patterns of one length in host, ordered by
    pattern then by index set.
    """
    patterns = pair.forbidden_by_length[length]
    if len(patterns) <= comb(len(host), length):
        for pattern in patterns:
            for indices in embeddings(pattern, host):
                yield pattern, indices
        return
    wanted = pair.forbidden_sets[length]
    found = []
    for indices in combinations(range(len(host)), length):
        reduced = _reduce([host[i] for i in indices])
        if reduced in wanted:
            found.append((Permutation.trusted(reduced), indices))
    yield from sorted(found)


@lru_cache(maxsize=1 << 16)
def _first_unsaved(
    host: Tuple[int, ...], pair: AvoidancePair
) -> Optional[Tuple[Permutation, Tuple[int, ...]]]:
    # host is reduced; occurrence structure only depends on the reduced form.
    for length in sorted(pair.forbidden_by_length):
        if length > len(host):
            break
        for pattern, indices in _candidates(host, length, pair):
            if not _is_saved(host, indices, pair):
                return pattern, indices
    return None


def two_contains(
    p: Sequence[int], pair: AvoidancePair
) -> Optional[TwoContainmentWitness]:
    """
    Find an occurrence of a forbidden pattern that no saving pattern rescues.

    Forbidden patterns are tried by increasing length, then lexicographically,
    and occurrences in lexicographic order of their index sets, so the witness
    is the least qualifying (pattern, index set).

    Parameters
    ----------
    p: Sequence[int]
        The permutation queried.
    pair: AvoidancePair
        Forbidden and saving patterns.

    Returns
    -------
    Optional[TwoContainmentWitness]
        A witness if p 2-contains pair, otherwise None.
    """
    host = p if isinstance(p, Permutation) else Permutation(p)
    found = _first_unsaved(_reduce(host), pair)
    if found is None:
        return None
    pattern, indices = found
    return TwoContainmentWitness(Occurrence(host, indices), pattern)


def two_avoids(p: Sequence[int], pair: AvoidancePair) -> bool:
    """True if p 2-avoids pair, i.e. every forbidden occurrence is saved."""
    return two_contains(p, pair) is None


def saving_occurrences(
    p: Sequence[int], gamma: Occurrence, saving: Iterable[Sequence[int]]
) -> Iterator[Occurrence]:
    """
    Every occurrence of a saving pattern in p whose index set contains
    gamma's, saving patterns taken in canonical order.
    """
    host = p if isinstance(p, Permutation) else Permutation(p)
    for pattern in canonical_order(reduce(s) for s in saving):
        for indices in embeddings(pattern, host, gamma.indices):
            yield Occurrence(host, indices)


def forbidden_occurrences(
    p: Sequence[int], pair: AvoidancePair
) -> Iterator[Tuple[Permutation, Occurrence]]:
    """All occurrences of forbidden patterns, in the order two_contains uses."""
    host = p if isinstance(p, Permutation) else Permutation(p)
    for length in sorted(pair.forbidden_by_length):
        for pattern in pair.forbidden_by_length[length]:
            for indices in embeddings(pattern, host):
                yield pattern, Occurrence(host, indices)
