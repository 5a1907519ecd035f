import pytest

from gibbsfisher.spectra import (
    ClassicalQuadratic,
    DiatomicStaircase,
    EnergyLevel,
    FiniteSpectrum,
    Oscillator,
    OscillatorBank,
    TwoLevel,
    truncate_oscillator,
)

ACCEPTANCE_KEY = pytest.StashKey[list]()


def builtin_models():
    """One instance of every model family, keyed by a readable id."""
    return {
        "two-level": TwoLevel(1.0),
        "oscillator": Oscillator(1.0),
        "classical-3": ClassicalQuadratic(3),
        "bank-123": OscillatorBank((1.0, 2.0, 3.0)),
        "diatomic": DiatomicStaircase(0.5, 5.0),
        "spectrum": FiniteSpectrum(
            (EnergyLevel(-0.3, 1), EnergyLevel(0.4, 3), EnergyLevel(1.1, 2), EnergyLevel(2.5, 1))
        ),
        "truncated-osc": truncate_oscillator(1.0, 0.05, 1e-12),
    }


def finite_models():
    return {k: m for k, m in builtin_models().items() if m.finite}


@pytest.fixture(scope="session")
def acceptance_log(request):
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
