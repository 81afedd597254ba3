import sys

import pytest

from znec.bounds import NetworkParams
from znec.codec import build_keys

P0 = NetworkParams(n=3, m=4, a=4, b=2, c=2, z=2, q=257)
P1 = NetworkParams(n=4, m=6, a=3, b=1, c=2, z=3, q=257)
P0_SMALL = P0.replace(q=11)
Z1_TUPLE = NetworkParams(n=2, m=2, a=3, b=1, c=1, z=1, q=5)
# b = z(a-c) - 1 with z = 3: one |Δ| = 1 row
MICRO_T2 = NetworkParams(n=4, m=6, a=3, b=2, c=2, z=3, q=257)
TINY = NetworkParams(n=2, m=2, a=2, b=1, c=1, z=1, q=2)


@pytest.fixture(scope="session")
def p0_keys():
    return build_keys(P0, certify=True)


@pytest.fixture(scope="session")
def p1_keys():
    return build_keys(P1, certify=True)


@pytest.fixture(scope="session")
def z1_keys():
    return build_keys(Z1_TUPLE, certify=True)


@pytest.fixture(scope="session")
def micro_keys():
    return build_keys(MICRO_T2, certify=True)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
