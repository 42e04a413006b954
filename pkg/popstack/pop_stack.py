"""
The deterministic pop stack.

A pop stack either pushes the next input token or pops its entire contents
to the output. The deterministic machine pushes while the incoming token is
smaller than the top of the stack and pops everything otherwise, so one pass
reverses every maximal descending block of the input in place.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from popstack.permutation import Permutation


@dataclass(frozen=True)
class BlockDecomposition:
    """
    Maximal descending factors B_1 ... B_m of a permutation.

    Entries strictly decrease inside a block, the last entry of a block is
    smaller than the first entry of the next, and the blocks concatenate back
    to the permutation.
    """

    blocks: Tuple[Permutation, ...]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def permutation(self) -> Permutation:
        return Permutation.trusted(tuple(v for b in self.blocks for v in b))

    def block_of_position(self) -> Tuple[int, ...]:
        """Block index (0-based) of every position of the permutation."""
        return tuple(i for i, block in enumerate(self.blocks) for _ in block)

    def render(self, compact: bool = True) -> str:
        """
        Blocks separated by "|", e.g. 8763|4|521. Entries are space separated
        inside a block when compact is False or an entry has several digits.
        """
        return "|".join(
            block.compact() if compact else str(block) for block in self.blocks
        )

    def __str__(self) -> str:
        return self.render()


def block_decompose(p: Sequence[int]) -> BlockDecomposition:
    """
    Split p into its maximal descending blocks.

    Parameters
    ----------
    p: Sequence[int]
        A permutation.

    Returns
    -------
    BlockDecomposition
    """
    blocks: List[Tuple[int, ...]] = []
    current: List[int] = []
    for value in p:
        if current and value > current[-1]:
            blocks.append(tuple(current))
            current = []
        current.append(value)
    if current:
        blocks.append(tuple(current))
    return BlockDecomposition(tuple(Permutation.trusted(b) for b in blocks))


def run_machine(p: Sequence[int]) -> Tuple[Permutation, Tuple[str, ...]]:
    """
    Simulate one pass through the deterministic pop stack token by token.

    The stack is pushed while it is empty or its top is larger than the next
    input token. Otherwise the whole stack is popped before pushing. When the
    input is exhausted the stack is popped one last time.

    Parameters
    ----------
    p: Sequence[int]
        The input sequence.

    Returns
    -------
    Tuple[Permutation, Tuple[str, ...]]
        The output sequence and the moves made, e.g. ("push 2", "push 1",
        "pop", "push 3", "pop").
    """
    stack: List[int] = []
    output: List[int] = []
    moves: List[str] = []
    for token in p:
        if stack and stack[-1] < token:
            output.extend(reversed(stack))
            stack.clear()
            moves.append("pop")
        stack.append(token)
        moves.append(f"push {token}")
    if stack:
        output.extend(reversed(stack))
        moves.append("pop")
    return Permutation.trusted(tuple(output)), tuple(moves)


def pop_pass(p: Sequence[int]) -> Permutation:
    """
    One pass through the deterministic pop stack.

    Computed by reversing every block of the block decomposition, which gives
    the same output as run_machine in linear time.
    """
    return Permutation.trusted(
        tuple(v for block in block_decompose(p).blocks for v in reversed(block))
    )


def pop_pass_k(p: Sequence[int], k: int) -> Permutation:
    """
    k consecutive passes; k = 0 returns p unchanged.

    Raises
    ------
    ValueError
        If k is negative.
    """
    if k < 0:
        raise ValueError(f"Number of passes must be non-negative, got {k}")
    result = p if isinstance(p, Permutation) else Permutation(p)
    for _ in range(k):
        if result.is_increasing:
            break
        result = pop_pass(result)
    return result


def is_k_sortable(p: Sequence[int], k: int) -> bool:
    """True if k passes leave p strictly increasing."""
    return pop_pass_k(p, k).is_increasing


def min_passes(p: Sequence[int]) -> int:
    """
    Smallest k such that p is k-pass sortable.

    Every pass on an unsorted permutation removes all inversions inside
    blocks and keeps those between blocks, so the loop runs at most
    inversions(p) times.
    """
    current = p if isinstance(p, Permutation) else Permutation(p)
    passes = 0
    while not current.is_increasing:
        current = pop_pass(current)
        passes += 1
    return passes


def far_apart_witness(p: Sequence[int], k: int) -> Optional[Tuple[int, int]]:
    """
    Look for entries a > b with a in block B_(i+1) and b in block B_(i+n),
    n >= 3**k. Such a pair certifies that p is not k-pass sortable.

    Parameters
    ----------
    p: Sequence[int]
        A permutation.
    k: int
        Number of passes.

    Returns
    -------
    Optional[Tuple[int, int]]
        Positions (0-based) of a and b, the lexicographically first such pair,
        or None when no pair is far enough apart.
    """
    if k < 0:
        raise ValueError(f"Number of passes must be non-negative, got {k}")
    decomposition = block_decompose(p)
    # n counts blocks inclusively, so the block-index gap is n - 1 and n <= m.
    span = 1
    for _ in range(k):
        span *= 3
        if span > decomposition.m:
            return None
    block_of = decomposition.block_of_position()
    for i, a in enumerate(p):
        for j in range(i + 1, len(p)):
            if a > p[j] and block_of[j] - block_of[i] + 1 >= span:
                return i, j
    return None


@dataclass(frozen=True)
class PassRecord:
    """One pass: its input, the input's blocks, and its output."""

    before: Permutation
    blocks: BlockDecomposition
    after: Permutation

    def render(self) -> str:
        if all(0 <= v <= 9 for v in self.before):
            return (
                f"{self.before.compact()} | {self.blocks.render()} | "
                f"{self.after.compact()}"
            )
        blocks = self.blocks.render(compact=False)
        return f"{self.before} | {blocks} | {self.after}"


@dataclass(frozen=True)
class SortTrace:
    """Pass-by-pass record of pushing a permutation through the pop stack."""

    start: Permutation
    passes: Tuple[PassRecord, ...]

    @property
    def final(self) -> Permutation:
        return self.passes[-1].after if self.passes else self.start

    @property
    def is_sorted(self) -> bool:
        return self.final.is_increasing

    def render(self) -> str:
        lines = [
            f"pass {i}: {record.render()}" for i, record in enumerate(self.passes, 1)
        ]
        if not lines and self.is_sorted:
            lines = [f"already sorted: {self.start.compact()}"]
        elif not lines:
            lines = [f"0 passes: {self.start.compact()}"]
        return "\n".join(lines)


def sort_trace(p: Sequence[int], max_passes: Optional[int] = None) -> SortTrace:
    """
    Record every pass until p is sorted, or until max_passes passes when a
    limit is given.

    Parameters
    ----------
    p: Sequence[int]
        A permutation.
    max_passes: int, optional
        Stop after this many passes even if unsorted.

    Returns
    -------
    SortTrace
    """
    start = p if isinstance(p, Permutation) else Permutation(p)
    records = []
    current = start
    while not current.is_increasing:
        if max_passes is not None and len(records) >= max_passes:
            break
        blocks = block_decompose(current)
        after = pop_pass(current)
        records.append(PassRecord(current, blocks, after))
        current = after
    return SortTrace(start, tuple(records))
