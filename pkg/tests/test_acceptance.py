"""One test per acceptance criterion; each prints a PASS/FAIL line with numbers.

Run with ``pytest -s tests/test_acceptance.py`` to see the lines, or use
``etk verify --oracle``.
"""
import pytest

from etk import acceptance


def _report(name):
    crit = acceptance.CHECKS[name]()
    print(crit.line())
    return crit


@pytest.mark.parametrize("name", list(acceptance.CHECKS))
def test_criterion(name):
    crit = _report(name)
    assert crit.passed, crit.line()
