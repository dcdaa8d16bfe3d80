"""Acceptance gate: every criterion at its stated tolerance, 1e6 samples/cell.

The whole suite is executed once per test session; each test then asserts one
criterion and prints its pass/fail line (run pytest with -s to see them live).
"""

import pytest

from moonlab import acceptance

CRITERION_IDS = [cid for cid, _, _, _ in acceptance.CRITERIA]


@pytest.fixture(scope="module")
def suite_results():
    results = acceptance.run_suite(nb=acceptance.REFERENCE_NB, seed=acceptance.DEFAULT_SEED)
    print()
    for r in results:
        print(acceptance.format_result(r))
    return {r.cid: r for r in results}


@pytest.mark.parametrize("cid", CRITERION_IDS)
def test_criterion(cid, suite_results):
    r = suite_results[cid]
    print(acceptance.format_result(r))
    if r.info_only:
        assert r.details, "informational criterion must report its measurement"
        return
    assert not r.skipped, f"criterion {cid} must run at the reference sample count"
    assert r.passed, f"criterion {cid} failed: " + "; ".join(r.details)


def test_suite_verdict(suite_results):
    assert acceptance.suite_passed(list(suite_results.values()))


def test_canary_inverts_verdict():
    # corrupted-engine hook: inverting M must make the suite fail
    results = acceptance.run_suite(nb=20_000, canary=True)
    assert not acceptance.suite_passed(results)


def test_tiny_sample_runs_never_fail_falsely():
    # tolerances widen or checks skip below the reference sample count
    results = acceptance.run_suite(nb=200)
    assert acceptance.suite_passed(results)
