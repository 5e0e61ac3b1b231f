"""Acceptance criteria 1-12, each at its stated tolerance; one pass/fail line per criterion."""

from __future__ import annotations

import pytest

from glvortex import acceptance


@pytest.mark.parametrize("cid", sorted(acceptance.CHECKS))
def test_criterion(cid, acceptance_lines):
    res = acceptance.CHECKS[cid]()
    line = res.line()
    acceptance_lines.append(line)
    print(line)
    assert res.passed, f"{line} details={res.details}"
