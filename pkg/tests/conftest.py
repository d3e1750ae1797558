import numpy as np
import pytest

from kphoton.fock import TruncationConfig, TwoModeState


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_density(dim, rng, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_two_mode(n_max, rng, rank=None):
    cfg = TruncationConfig(n_max)
    return TwoModeState.from_density(random_density(cfg.dim ** 2, rng, rank), cfg)


def ket_state(amplitudes, n_max):
    """Pure two-mode state from ``{(n1, n2): amplitude}`` (normalised here)."""
    cfg = TruncationConfig(n_max)
    psi = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for (i, j), a in amplitudes.items():
        psi[i, j] = a
    return TwoModeState.from_ket(psi / np.linalg.norm(psi), cfg)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion_report(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
