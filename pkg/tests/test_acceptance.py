"""Acceptance gate: the eleven numbered checks at their pinned tolerances.

The whole battery runs once in a session-scoped fixture (the checks share
expensive discretized operators); each criterion then asserts its own
verdict so the report shows one pass/fail line per criterion.  Expect a
total wall time around 20-25 minutes.
"""

import pytest

from ballwalk import verify

_NUMBERS = [num for num, _, _ in verify.CHECKS]
_NAMES = {num: name for num, name, _ in verify.CHECKS}


@pytest.fixture(scope="session")
def results():
    ctx = {}
    out = {}
    for num in _NUMBERS:
        out[num] = verify.run_check(num, seed=0, ctx=ctx)
    return out


@pytest.mark.parametrize("number", _NUMBERS,
                         ids=[f"{n:02d}-{_NAMES[n]}" for n in _NUMBERS])
def test_criterion(results, number):
    res = results[number]
    print(res.line())
    assert res.passed, (
        f"criterion {number} ({res.name}) failed: "
        f"measured={res.measured} tolerance={res.tolerance}")
