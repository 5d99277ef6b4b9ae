import numpy as np
import pytest

from inaudible.attack_synth import DEFAULT_COMMAND, synth_command


@pytest.fixture(scope="session")
def command():
    return synth_command(DEFAULT_COMMAND)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Use as ``with criterion(n, description) as note:``; ``note(text)`` adds
    measured values to the line.
    """
    import contextlib

    @contextlib.contextmanager
    def run(number, title):
        details = []
        try:
            yield details.append
        except BaseException:
            line = f"criterion {number:2d} FAIL  {title}  [{'; '.join(details)}]"
            ACCEPTANCE_LINES[number] = line
            print(line)
            raise
        line = f"criterion {number:2d} PASS  {title}  [{'; '.join(details)}]"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
