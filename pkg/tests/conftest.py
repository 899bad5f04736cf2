from pathlib import Path

import pytest

from slc import compile_source

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


@pytest.fixture(scope="session")
def case_study_source() -> str:
    return fixture_text("black_scholes.sl")


@pytest.fixture(scope="session")
def case_study(case_study_source):
    return compile_source(case_study_source)


@pytest.fixture(scope="session")
def case_study_no_pragmas(case_study_source):
    return compile_source(case_study_source, no_pragmas=True)


def corrected_case_study_source() -> str:
    """The pricer with the one unsound pragma removed.

    The printed script suppresses taping of p around `p=payoff(d,p)`, but the
    discounting statement's reverse-section SAC re-reads p[0] per iteration,
    so that restore is load-bearing.  Dropping that single pragma makes every
    remaining pragma value-safe.
    """
    lines = fixture_text("black_scholes.sl").splitlines()
    kept = []
    for i, line in enumerate(lines):
        if line.strip() == "#pragma notbr" and i + 1 < len(lines) and "payoff" in lines[i + 1]:
            continue
        kept.append(line)
    return "\n".join(kept) + "\n"


@pytest.fixture(scope="session")
def corrected_case_study():
    return compile_source(corrected_case_study_source())
