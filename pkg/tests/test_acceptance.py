"""The 14 acceptance criteria at their stated tolerances, one pass/fail line each."""

import pytest

from ptlgi import acceptance

KNOWN_FAILURES = {
    12: "rho_gg(50/gamma1) for gamma1 = 8 is about 0.988: the slow decay rate "
        "(gamma1 - sqrt(gamma1^2 - 16))/2 makes the 1e-4 target physically unreachable",
}


def _params():
    for fn in acceptance.CRITERIA:
        marks = []
        if fn.number in KNOWN_FAILURES:
            marks.append(pytest.mark.xfail(strict=True, reason=KNOWN_FAILURES[fn.number]))
        yield pytest.param(fn, id=f"criterion_{fn.number:02d}", marks=marks)


@pytest.mark.parametrize("criterion", list(_params()))
def test_criterion(criterion, acceptance_lines):
    res = criterion()
    acceptance_lines.append(res.line())
    print(res.line())
    print(res.details)
    assert res.passed, res.details


def test_criterion_12_other_parts():
    # the closed-form parts of criterion 12 hold; only the decay target fails
    res = acceptance.criterion_12()
    parts = res.details["parts_passed"]
    assert parts["closed_form"] and parts["rho2N"]
    gg = res.details["one_minus_rho_gg_at_50_over_gamma1"]
    assert all(gg[str(g)] < 1e-4 for g in (1.0, 3.9, 4.0, 4.1))
    assert gg["8.0"] > 1e-2
