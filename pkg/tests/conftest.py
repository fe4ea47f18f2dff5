import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# LLE evaluations are expensive; share them across test sessions
_CACHE = Path(__file__).resolve().parent.parent / ".cache" / "lle"
os.environ.setdefault("ARTIFACT_CACHE", str(_CACHE))

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)



_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, and return whether it passed."""

    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"[criterion {number}] {'PASS' if passed else 'FAIL'}: {detail}"
        print(line)
        _CRITERIA.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
