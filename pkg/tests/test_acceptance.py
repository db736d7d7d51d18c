"""End-to-end acceptance checks, one test per criterion.

Each result line is also collected and printed in the terminal summary.
"""

from __future__ import annotations

import pytest

from relstring.acceptance import CRITERIA, run_criterion

RESULTS: dict[int, str] = {}


@pytest.mark.parametrize("number", [c[0] for c in CRITERIA], ids=[f"{c[0]:02d}-{c[1].replace(' ', '_')}" for c in CRITERIA])
def test_criterion(number):
    result = run_criterion(number)
    RESULTS[number] = result.line()
    print(result.line())
    assert result.passed, result.detail
