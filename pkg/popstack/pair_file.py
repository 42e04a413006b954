"""
Reading and writing pattern-pair files.

A pair file is UTF-8 text with a "[F]" section of forbidden patterns and a
"[G]" section of saving patterns, one permutation per line in one-line
notation. "#" starts a comment and blank lines are ignored. A missing
section is read as empty.

    # k = 2
    [F]
    2 3 4 1
    3 4 1 2
    [G]
    4 1 3 5 2
"""
import os.path
from typing import Dict, Iterable, List, Optional

from popstack.avoidance import AvoidancePair
from popstack.enumeration import MAX_PERMUTATION_LENGTH
from popstack.permutation import Permutation

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "data")
SECTIONS = ("F", "G")


class PairFileError(ValueError):
    """A pair file that cannot be read, with the file name and line number."""

    def __init__(self, filename: str, line: Optional[int], message: str):
        self.filename = filename
        self.line = line
        where = filename if line is None else f"{filename}, line {line}"
        super().__init__(f"{where}: {message}")


def parse_pair_text(text: str, filename: str = "<string>") -> AvoidancePair:
    """
    Parse the contents of a pair file.

    Parameters
    ----------
    text: str
        File contents.
    filename: str
        Name used in error messages.

    Returns
    -------
    AvoidancePair

    Raises
    ------
    PairFileError
        On an unknown or repeated section header, an entry before the first
        header, or a line that is not a reduced permutation.
    """
    sections: Dict[str, List[Permutation]] = {}
    current = None
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line[1:-1].strip() if line.endswith("]") else line
            if name not in SECTIONS:
                raise PairFileError(filename, number, f"unknown section {line!r}")
            if name in sections:
                raise PairFileError(filename, number, f"section [{name}] repeated")
            sections[name] = []
            current = name
            continue
        if current is None:
            raise PairFileError(
                filename, number, f"{line!r} appears before any [F] or [G] header"
            )
        try:
            pattern = Permutation.from_text(line)
        except ValueError as e:
            raise PairFileError(filename, number, str(e)) from None
        if not pattern.is_reduced:
            raise PairFileError(
                filename, number, f"{line!r} is not a permutation of 1..{len(pattern)}"
            )
        sections[current].append(pattern)
    return AvoidancePair(
        frozenset(sections.get("F", ())), frozenset(sections.get("G", ()))
    )


class PairFileChecks:
    """
    PairFileChecks checks the integrity of a pair file before it is used.

    Each method runs to completion and returns nothing useful when the check
    passes. Otherwise it raises a PairFileError with a descriptive message.
    These exceptions are not meant to be caught except by the command line,
    which reports them and exits with status 2.
    """

    def __init__(self, filename: str):
        """
        Parameters
        ----------
        filename: str
            Path to the pair file
        """
        self.filename = filename
        self.text: Optional[str] = None
        self.pair: Optional[AvoidancePair] = None

    def check_file_exists(self) -> bool:
        """
        Raises
        ------
        PairFileError
            If the file does not exist.
        """
        if not os.path.isfile(self.filename):
            raise PairFileError(self.filename, None, "pair file does not exist")
        return True

    def open_file(self) -> None:
        """
        Raises
        ------
        PairFileError
            If the file cannot be read as UTF-8 text.
        """
        try:
            with open(self.filename, "r", encoding="utf-8") as f:
                self.text = f.read()
        except (OSError, UnicodeDecodeError) as e:
            raise PairFileError(self.filename, None, f"cannot be read: {e}") from None

    def check_sections(self) -> None:
        """
        Parse the text, checking section headers and every entry.
        """
        self.pair = parse_pair_text(self.text or "", self.filename)

    def check_pattern_lengths(self) -> None:
        """
        Raises
        ------
        PairFileError
            If a pattern is longer than any permutation the package handles.
        """
        assert self.pair is not None
        for pattern in self.pair.forbidden | self.pair.saving:
            if len(pattern) > MAX_PERMUTATION_LENGTH:
                raise PairFileError(
                    self.filename,
                    None,
                    f"pattern {pattern} is longer than {MAX_PERMUTATION_LENGTH}",
                )


def resolve_pair_path(name: str) -> str:
    """
    The path itself when it exists, otherwise the shipped pair file of that
    name (e.g. "two_pass.pairs" or just "two_pass").
    """
    if os.path.isfile(name):
        return name
    for candidate in (name, f"{name}.pairs"):
        shipped = os.path.join(DATA_DIR, candidate)
        if os.path.isfile(shipped):
            return shipped
    return name


def read_pair_file(filename: str) -> AvoidancePair:
    """
    Read and check a pair file.

    Raises
    ------
    PairFileError
        If any check fails.
    """
    checks = PairFileChecks(resolve_pair_path(filename))
    checks.check_file_exists()
    checks.open_file()
    checks.check_sections()
    checks.check_pattern_lengths()
    assert checks.pair is not None
    return checks.pair


def format_pair(pair: AvoidancePair, comments: Iterable[str] = ()) -> str:
    """
    Pair-file text with both sections in canonical order (by length, then
    lexicographically), preceded by optional comment lines.
    """
    lines = [f"# {comment}" for comment in comments]
    lines.append("[F]")
    lines.extend(str(p) for p in pair.F)
    lines.append("")
    lines.append("[G]")
    lines.extend(str(p) for p in pair.G)
    return "\n".join(lines) + "\n"


def write_pair_file(
    pair: AvoidancePair, filename: str, comments: Iterable[str] = ()
) -> None:
    with open(filename, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_pair(pair, comments))
