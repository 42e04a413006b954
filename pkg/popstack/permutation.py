"""
Permutations, reduced forms and pattern occurrences.

A permutation is any finite sequence of distinct integers written in one-line
notation. Most of the package works on reduced permutations (entries exactly
1..n) but every operation here accepts unreduced input as well.

Indices are 0-based in code and 1-based in anything printed for a person.
"""
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence, Tuple


class Permutation(tuple):
    """
    Immutable one-line notation of a permutation.

    Permutation is a tuple subclass, so it hashes, compares and sorts exactly
    like the tuple of its entries. Entries must be pairwise distinct integers.
    """

    def __new__(cls, entries: Iterable[int] = ()):
        values = tuple(entries)
        for value in values:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(
                    f"Permutation entries must be integers, got {value!r}"
                )
        if len(set(values)) != len(values):
            raise ValueError(f"Permutation has duplicate entries: {values}")
        return super().__new__(cls, values)

    @classmethod
    def trusted(cls, values: Tuple[int, ...]) -> "Permutation":
        """Wrap values already known to be distinct integers."""
        return tuple.__new__(cls, values)

    @classmethod
    def from_text(cls, text: str) -> "Permutation":
        """
        Parse one-line notation.

        Entries are separated by whitespace or commas, e.g. "4 1 3 5 2". A
        single token made only of two or more digits is read in the compact
        single-digit form, so "41352" is the same permutation.

        Parameters
        ----------
        text: str
            Permutation text.

        Returns
        -------
        Permutation

        Raises
        ------
        ValueError
            If a token is not an integer or entries repeat.
        """
        tokens = text.replace(",", " ").split()
        if len(tokens) == 1 and len(tokens[0]) > 1 and tokens[0].isdigit():
            tokens = list(tokens[0])
        try:
            values = [int(token) for token in tokens]
        except ValueError:
            raise ValueError(f"Cannot read {text!r} as a permutation") from None
        return cls(values)

    @property
    def is_reduced(self) -> bool:
        return sorted(self) == list(range(1, len(self) + 1))

    @property
    def is_increasing(self) -> bool:
        return all(a < b for a, b in zip(self, self[1:]))

    def compact(self) -> str:
        """Digits run together when every entry is a single digit."""
        if all(0 <= value <= 9 for value in self):
            return "".join(str(value) for value in self)
        return str(self)

    def __str__(self) -> str:
        return " ".join(str(value) for value in self)

    def __repr__(self) -> str:
        return f"Permutation('{self}')"


def canonical_key(p: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort key ordering permutations by length, then lexicographically."""
    return len(p), tuple(p)


def canonical_order(patterns: Iterable[Permutation]) -> Tuple[Permutation, ...]:
    return tuple(sorted(patterns, key=canonical_key))


def _reduce(values: Sequence[int]) -> Tuple[int, ...]:
    ranks = [0] * len(values)
    order = sorted(range(len(values)), key=values.__getitem__)
    for rank, position in enumerate(order, 1):
        ranks[position] = rank
    return tuple(ranks)


def reduce(seq: Sequence[int]) -> Permutation:
    """
    Replace the i-th smallest entry by i.

    Parameters
    ----------
    seq: Sequence[int]
        Distinct integers.

    Returns
    -------
    Permutation
        The order-isomorphic permutation of 1..n.

    Raises
    ------
    ValueError
        If seq has repeated entries.
    """
    if not isinstance(seq, Permutation):
        seq = Permutation(seq)
    return Permutation.trusted(_reduce(seq))


def is_order_isomorphic(a: Sequence[int], b: Sequence[int]) -> bool:
    return reduce(a) == reduce(b)


@dataclass(frozen=True)
class Occurrence:
    """
    A strictly increasing index set locating a subpermutation of host.
    """

    host: Permutation
    indices: Tuple[int, ...]

    def __post_init__(self):
        if any(a >= b for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError(f"Occurrence indices must increase: {self.indices}")
        if self.indices and (
            self.indices[0] < 0 or self.indices[-1] >= len(self.host)
        ):
            raise ValueError(
                f"Occurrence indices {self.indices} out of range for a host "
                f"of length {len(self.host)}"
            )

    @property
    def values(self) -> Permutation:
        return Permutation.trusted(tuple(self.host[i] for i in self.indices))

    @property
    def pattern(self) -> Permutation:
        return Permutation.trusted(_reduce(self.values))

    @property
    def one_based(self) -> Tuple[int, ...]:
        return tuple(i + 1 for i in self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __str__(self) -> str:
        positions = " ".join(str(i) for i in self.one_based)
        return f"positions {positions} (values {self.values})"


def _value_neighbours(
    pattern: Sequence[int],
) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """
    For every pattern position j, the earlier positions holding the nearest
    smaller and nearest larger value (-1 when there is none).
    """
    lower, upper = [], []
    for j, value in enumerate(pattern):
        below = [i for i in range(j) if pattern[i] < value]
        above = [i for i in range(j) if pattern[i] > value]
        lower.append(max(below, key=pattern.__getitem__) if below else -1)
        upper.append(min(above, key=pattern.__getitem__) if above else -1)
    return tuple(lower), tuple(upper)


def embeddings(
    pattern: Sequence[int],
    host: Sequence[int],
    required: Sequence[int] = (),
) -> Iterator[Tuple[int, ...]]:
    """
    Yield index tuples of host whose values are order-isomorphic to pattern.

    Backtracking over host positions in increasing order, so index sets come
    out in lexicographic order. A branch is cut when too few positions remain,
    when it would skip a required index, or when the candidate value falls
    outside the window set by its value-neighbours already placed.

    Parameters
    ----------
    pattern: Sequence[int]
        Pattern, reduced or not.
    host: Sequence[int]
        Host permutation.
    required: Sequence[int]
        Indices (increasing) every yielded index set must include.
    """
    m, n = len(pattern), len(host)
    required = tuple(required)
    if m > n or len(required) > m:
        return
    lower, upper = _value_neighbours(pattern)
    chosen = [0] * m

    def extend(j: int, start: int, r: int) -> Iterator[Tuple[int, ...]]:
        if j == m:
            if r == len(required):
                yield tuple(chosen)
            return
        if len(required) - r > m - j:
            return
        stop = n - (m - j)
        if r < len(required):
            stop = min(stop, required[r])
        lo = host[chosen[lower[j]]] if lower[j] >= 0 else None
        hi = host[chosen[upper[j]]] if upper[j] >= 0 else None
        for position in range(start, stop + 1):
            value = host[position]
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                continue
            chosen[j] = position
            hit = r < len(required) and position == required[r]
            yield from extend(j + 1, position + 1, r + 1 if hit else r)

    yield from extend(0, 0, 0)


def occurrences(
    pattern: Sequence[int],
    host: Sequence[int],
    include: Optional[Sequence[int]] = None,
) -> Iterator[Occurrence]:
    """
    Enumerate occurrences of pattern in host in lexicographic order of index
    sets. The iterator is lazy, so callers may stop at the first hit.

    Parameters
    ----------
    pattern: Sequence[int]
        The pattern to look for.
    host: Sequence[int]
        The permutation searched.
    include: Sequence[int], optional
        Index set that every reported occurrence must contain.

    Returns
    -------
    Iterator[Occurrence]
    """
    if not isinstance(host, Permutation):
        host = Permutation(host)
    required = tuple(sorted(include)) if include is not None else ()
    if any(i < 0 or i >= len(host) for i in required):
        raise ValueError(f"Required indices {required} out of range for {host}")
    for indices in embeddings(_reduce(Permutation(pattern)), host, required):
        yield Occurrence(host, indices)


def contains(pattern: Sequence[int], host: Sequence[int]) -> bool:
    """True if some subpermutation of host is order-isomorphic to pattern."""
    return next(embeddings(_reduce(pattern), host), None) is not None


def subpermutation_at(host: Sequence[int], indices) -> Permutation:
    """
    Values of host at the given positions.

    Parameters
    ----------
    host: Sequence[int]
        Host permutation.
    indices: Occurrence or Sequence[int]
        Positions, 0-based and increasing.

    Raises
    ------
    ValueError
        If a position is outside host.
    """
    if isinstance(indices, Occurrence):
        indices = indices.indices
    for i in indices:
        if not 0 <= i < len(host):
            raise ValueError(f"Index {i} out of range for a host of length {len(host)}")
    return Permutation(host[i] for i in indices)


def subsequences(
    host: Sequence[int], length: int
) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Yield (indices, reduced values) for every index set of the given size."""
    for indices in combinations(range(len(host)), length):
        yield indices, _reduce([host[i] for i in indices])


def patterns_contained(
    host: Sequence[int], max_length: Optional[int] = None
) -> frozenset:
    """All reduced permutations contained in host, up to max_length entries."""
    top = len(host) if max_length is None else min(max_length, len(host))
    found = set()
    for length in range(top + 1):
        for _, pattern in subsequences(host, length):
            found.add(Permutation.trusted(pattern))
    return frozenset(found)


def inversions(p: Sequence[int]) -> int:
    """Number of pairs i < j with p[i] > p[j]."""
    return sum(1 for a, b in combinations(p, 2) if a > b)
