"""Acceptance criteria, one test per criterion.

Each test prints a ``[PASS]`` or ``[FAIL]`` line, and the lines are repeated in
the terminal summary. Wall-time budgets count toward the verdict. Run it
standalone with ``python3 tests/test_acceptance.py``.
"""

import sys
from pathlib import Path

import pytest

from ziegler.verify import CHECKS, run_check

GOLDEN_SWEEP = Path(__file__).parent / "golden" / "sweep_m2_c1_1_400.csv"


def _run(number):
    return run_check(number, **({"golden": GOLDEN_SWEEP} if number == 10 else {}))


@pytest.mark.parametrize("number", [c[0] for c in CHECKS], ids=[f"criterion_{c[0]:02d}" for c in CHECKS])
def test_criterion(number):
    from conftest import ACCEPTANCE_LINES

    result = _run(number)
    ACCEPTANCE_LINES.append(result.line)
    print(result.line)
    assert result.passed, result.detail


if __name__ == "__main__":
    results = [_run(c[0]) for c in CHECKS]
    for r in results:
        print(r.line)
    sys.exit(0 if all(r.passed for r in results) else 1)
