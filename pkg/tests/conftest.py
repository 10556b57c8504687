import numpy as np
import pytest

from omt2 import McConfig, QuadratureConfig

# Registry filled by test_acceptance; printed as one line per criterion
# at the end of the run.
ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[name] = (passed, detail)


@pytest.fixture(scope="session")
def quad_cfg() -> QuadratureConfig:
    return QuadratureConfig()


@pytest.fixture(scope="session")
def mc_cfg() -> McConfig:
    return McConfig(reps=1_000_000, seed=20260810)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(98301)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[name]
        status = "PASS" if passed else "FAIL"
        line = f"{name}: {status}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
