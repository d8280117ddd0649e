"""Acceptance criteria 1-12; each test prints one PASS/FAIL line."""

import pytest

from condwalk.acceptance import CRITERIA, run_criterion

# symmetric trinomial steps have zero third cumulant, so the n^{-1} Edgeworth
# term vanishes and the sup error decays like n^{-3/2} (halving ratio 2^{-3/2});
# the criterion is kept as stated and recorded as an expected failure
KNOWN_UNATTAINABLE = {8: "symmetric law: llt_sup_error decays like n^{-3/2}, ratio 0.354 is outside [0.4, 0.65]"}


def _param(num, name):
    marks = [pytest.mark.xfail(strict=True, reason=KNOWN_UNATTAINABLE[num])] if num in KNOWN_UNATTAINABLE else []
    return pytest.param(num, id=f"criterion_{num:02d}_{name.replace(' ', '_').replace('-', '_')}", marks=marks)


@pytest.mark.parametrize("number", [_param(num, name) for num, name, _, _ in CRITERIA])
def test_criterion(number, acceptance_log):
    res = run_criterion(number)
    print(res.line())
    acceptance_log.append(res.line())
    assert res.seconds <= res.budget, f"runtime {res.seconds:.1f}s exceeds {res.budget}s"
    assert res.passed, res.detail
