"""One test per acceptance criterion; each prints its pass/fail line.

Run ``python tests/test_acceptance.py`` for the lines alone.
"""

import numpy as np
import pytest

from pfcohesive import acceptance, catalog

from conftest import ACCEPTANCE_LINES

PASSING = [c for c in acceptance.CRITERIA if c != "9b"]


def _run(cid):
    r = acceptance.run_criterion(cid)
    line = r.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return r


@pytest.mark.parametrize("cid", PASSING)
def test_criterion(cid):
    r = _run(cid)
    assert r.passed, r.detail


@pytest.mark.xfail(strict=True, reason="known conflict: the stated ordering in delta is reversed (see ledger)")
def test_criterion_9b():
    r = _run("9b")
    assert r.known_conflict
    assert r.passed, r.detail


def test_exponential_regularization_ordering():
    # the ordering that does hold: g_delta decreases as delta grows
    s = np.linspace(0.05, 8.0, 160)
    gs = [catalog.exponential_law(1.0, d)[1](s) for d in (1e-4, 1e-3, 1e-2, 1e-1)]
    for smaller_delta, larger_delta in zip(gs[:-1], gs[1:]):
        assert np.all(larger_delta <= smaller_delta + 1e-15)


if __name__ == "__main__":
    for res in acceptance.run_suite():
        print(res.line())
