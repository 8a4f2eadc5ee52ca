import random

import pytest
from hypothesis import HealthCheck, settings

from credsec.dna import DnaKey
from credsec.rsa import rsa_keygen, rsa_setup

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

# collected by the acceptance tests, printed after the run summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance():
    """Recorder: emits one pass/fail line per criterion and asserts it."""

    def record(number: int, name: str, ok: bool, detail: str):
        line = f"criterion {number} ({name}): {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return record


@pytest.fixture(scope="session")
def toy():
    """The small-parameter world used by worked examples: N = 61*53."""
    return {
        "p": 61, "q": 53, "N": 3233, "e": 17, "d": 2753, "d_lcm": 413,
        "k": 3, "S": 10, "T": 7, "Y": 0, "dk": DnaKey("100110011"),
    }


@pytest.fixture(scope="session")
def keys_1024():
    """One full-size keypair shared by the expensive tests."""
    rng = random.Random(0xC0FFEE)
    params = rsa_setup(1024, rng)
    keys = rsa_keygen(params, rng)
    return params, keys


@pytest.fixture(scope="session")
def keys_256():
    rng = random.Random(0xBEEF)
    params = rsa_setup(256, rng)
    keys = rsa_keygen(params, rng)
    return params, keys
