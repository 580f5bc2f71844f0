"""Run the acceptance suite and print the per-criterion PASS/FAIL block.

    python3 scripts/run_acceptance.py [-k 08]
"""

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent.parent / "tests" / "test_acceptance.py"

if __name__ == "__main__":
    sys.exit(pytest.main([str(TESTS), "-v", "-p", "no:cacheprovider", *sys.argv[1:]]))
