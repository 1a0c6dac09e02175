"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the lines are collected into
the terminal summary, or run this file directly to print them.
"""
import pytest

from degenlab.experiments import CRITERIA, run_criterion

LINES = {}


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    out = run_criterion(number)
    LINES[number] = out.line()
    print(out.line())
    assert out.passed, out.line()


if __name__ == "__main__":
    for n in sorted(CRITERIA):
        print(run_criterion(n).line(), flush=True)
