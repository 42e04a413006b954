"""
Pop-stack sorting and 2-avoidance characterizations.

Run ``python -m popstack --help`` for the list of commands.
"""
import sys

from popstack.cli import main

if __name__ == "__main__":
    sys.exit(main())
