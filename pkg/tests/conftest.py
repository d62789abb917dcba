"""Shared samplers plus the acceptance-criteria summary hook.

Acceptance tests wrap their bodies in the `criterion` fixture so the run
ends with one PASS/FAIL line per criterion, whatever pytest's capture
settings are.
"""

from __future__ import annotations

import contextlib

import numpy as np
import pytest

from bktfit import ParamSet, validate_params

# Well-behaved generating parameters used across the suite: comfortably
# inside every constraint (margin 0.0675, fixed point 0.346 < l0).
TRUE_THETA = ParamSet(l0=0.45, g=0.25, s=0.1, r=0.3)


def random_theta(rng: np.random.Generator, low: float = 0.02, high: float = 0.98) -> ParamSet:
    """Arbitrary interior parameters; constraints may or may not hold."""

    l0, g, s, r = rng.uniform(low, high, 4)
    return ParamSet(l0=l0, g=g, s=s, r=r)


def random_valid_theta(rng: np.random.Generator) -> ParamSet:
    """Rejection-sample parameters that satisfy every behavioral constraint."""

    while True:
        theta = random_theta(rng, 0.05, 0.95)
        if validate_params(theta).satisfied:
            return theta


def random_attempts(rng: np.random.Generator, length: int) -> tuple[bool, ...]:
    return tuple(bool(b) for b in rng.integers(0, 2, length))


_ACCEPTANCE_RESULTS: list[tuple[int, str, bool]] = []


@pytest.fixture
def criterion():
    """Record a criterion outcome for the end-of-run summary."""

    @contextlib.contextmanager
    def _criterion(number: int, name: str):
        try:
            yield
        except BaseException:
            _ACCEPTANCE_RESULTS.append((number, name, False))
            raise
        _ACCEPTANCE_RESULTS.append((number, name, True))

    return _criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria")
    for number, name, passed in sorted(set(_ACCEPTANCE_RESULTS)):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} ({name}): {verdict}")
