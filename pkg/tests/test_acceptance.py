"""One test per acceptance criterion, each at its stated tolerance.

The per-criterion PASS/FAIL lines are printed in the terminal summary.
"""

import pytest

from nodalrbf.acceptance import CRITERIA

FAST = (1, 2, 3, 4, 12)


@pytest.mark.parametrize("number", [
    pytest.param(n, id=f"criterion_{n:02d}", marks=() if n in FAST else pytest.mark.slow)
    for n in sorted(CRITERIA)
])
def test_criterion(number, record_criterion):
    result = record_criterion(CRITERIA[number]())
    assert result.number == number
    assert result.checks
    assert result.passed, result.line()
