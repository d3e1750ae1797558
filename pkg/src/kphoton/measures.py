"""Entropy, purity, energy and the minimum-purity bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import TwoModeState, expectation_local, make_number, partial_trace

EIG_FLOOR = 1e-14


def _spectrum(rho) -> np.ndarray:
    if isinstance(rho, TwoModeState):
        if rho.is_pure:
            norm = float(np.vdot(rho.psi, rho.psi).real)
            return np.array([norm])
        rho = rho.rho
    rho = np.asarray(rho)
    return np.linalg.eigvalsh((rho + rho.conj().T) / 2)


def entropy_from_probabilities(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > EIG_FLOOR]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho) -> float:
    """``-Tr rho ln rho`` in nats; eigenvalues below 1e-14 are dropped."""
    return max(entropy_from_probabilities(_spectrum(rho)), 0.0)


def schmidt_coefficients(state: TwoModeState) -> np.ndarray:
    """Singular values of the coefficient matrix of a pure two-mode state."""
    return np.linalg.svd(state.psi, compute_uv=False)


def entanglement_entropy(state: TwoModeState) -> float:
    """Entropy of either reduced state of a pure two-mode state."""
    if state.is_pure:
        return max(entropy_from_probabilities(schmidt_coefficients(state) ** 2), 0.0)
    return von_neumann_entropy(partial_trace(state, 1))


def purity(rho) -> float:
    if isinstance(rho, TwoModeState):
        if rho.is_pure:
            return float(np.vdot(rho.psi, rho.psi).real) ** 2
        rho = rho.rho
    rho = np.asarray(rho)
    # Tr rho^2 = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(rho) ** 2))


@dataclass(frozen=True)
class EnergyReport:
    mean_energy: float
    per_mode: tuple[float, float]

    def as_dict(self) -> dict:
        return {"mean_energy": self.mean_energy, "per_mode": list(self.per_mode)}


def mean_energy(state: TwoModeState) -> EnergyReport:
    """Mean total photon number ``<N1> + <N2>`` (units of hbar omega)."""
    n = make_number(state.config).matrix
    e1 = expectation_local(state, n, None).real
    e2 = expectation_local(state, None, n).real
    return EnergyReport(e1 + e2, (e1, e2))


def p_min(energy: float, k: int = 1) -> float:
    """Smallest purity of a k-photon two-mode state with mean energy ``energy``."""
    if energy < 0:
        raise ValueError("energy must be non-negative")
    if k < 1:
        raise ValueError("k must be >= 1")
    return 1.0 / (energy / k + 1.0) ** 2


def thermal_entropy(nbar: float) -> float:
    """Closed-form entropy of a thermal state with mean ``nbar``."""
    if nbar <= 0:
        return 0.0
    return (nbar + 1) * np.log(nbar + 1) - nbar * np.log(nbar)
