"""Constructors for squeezed-vacuum and thermal state families.

Every constructor either takes an explicit :class:`TruncationConfig` and
checks that the discarded probability mass is below ``TAIL_BUDGET``, or picks
the smallest truncation that meets the budget.  Retained weights are
renormalised to unit trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import TruncationConfig, TruncationError, TwoModeState

TAIL_BUDGET = 1e-10


@dataclass(frozen=True)
class SqueezingParam:
    """Squeezing strength; ``gamma = tanh(r)``."""

    gamma: float
    r: float

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        if abs(math.tanh(self.r) - self.gamma) > 1e-12:
            raise ValueError("gamma and r are inconsistent")

    @classmethod
    def from_gamma(cls, gamma: float) -> "SqueezingParam":
        return cls(float(gamma), math.atanh(gamma))

    @classmethod
    def from_r(cls, r: float) -> "SqueezingParam":
        if r < 0:
            raise ValueError(f"r must be >= 0, got {r}")
        return cls(math.tanh(r), float(r))


def as_squeezing(gamma=None, r=None) -> SqueezingParam:
    if isinstance(gamma, SqueezingParam):
        return gamma
    if (gamma is None) == (r is None):
        raise ValueError("give exactly one of gamma or r")
    return SqueezingParam.from_gamma(gamma) if r is None else SqueezingParam.from_r(r)


def terms_for_ratio(q: float, budget: float = TAIL_BUDGET) -> int:
    """Smallest N >= 1 with geometric tail ``q**(N+1) < budget``."""
    if q <= 0.0:
        return 1
    n = max(int(math.ceil(math.log(budget) / math.log(q))) - 1, 1)
    while q ** (n + 1) >= budget:
        n += 1
    return n


def _check_tail(tail: float, what: str) -> None:
    if tail >= TAIL_BUDGET:
        raise TruncationError(f"{what}: discarded mass {tail:.3e} exceeds budget {TAIL_BUDGET:.0e}")


def gamma_for_energy(energy: float, k: int = 1) -> float:
    """gamma of the k-photon squeezed vacuum with mean total photon number ``energy``."""
    if energy < 0:
        raise ValueError("energy must be non-negative")
    return math.sqrt(energy / (2 * k + energy))


def _tmsv_coefficients(sq: SqueezingParam, k: int, config: TruncationConfig | None):
    g2 = sq.gamma ** 2
    if config is None:
        n_terms = terms_for_ratio(g2)
        config = TruncationConfig(max(k * n_terms, k))
    elif k > config.n_max:
        raise ValueError(f"k={k} exceeds n_max={config.n_max}")
    n_terms = config.n_max // k
    _check_tail(g2 ** (n_terms + 1), f"squeezed vacuum gamma={sq.gamma:.6g}, k={k}")
    n = np.arange(n_terms + 1)
    c = np.sqrt(1.0 - g2) * sq.gamma ** n
    return c / np.linalg.norm(c), config


def mp_tmsv(gamma=None, k: int = 1, config: TruncationConfig | None = None, *, r=None) -> TwoModeState:
    """k-photon two-mode squeezed vacuum, amplitudes ``sqrt(1-g^2) g^n`` on ``|kn, kn>``."""
    sq = as_squeezing(gamma, r)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    c, config = _tmsv_coefficients(sq, k, config)
    psi = np.zeros((config.dim, config.dim), dtype=complex)
    levels = k * np.arange(len(c))
    psi[levels, levels] = c
    return TwoModeState.from_ket(psi, config)


def tmsv(gamma=None, config: TruncationConfig | None = None, *, r=None) -> TwoModeState:
    """Two-mode squeezed vacuum ``sqrt(1-g^2) sum g^n |n, n>``."""
    return mp_tmsv(gamma, 1, config, r=r)


def _geometric_weights(nbar: float, n_terms: int | None):
    if nbar < 0:
        raise ValueError(f"mean photon number must be >= 0, got {nbar}")
    q = nbar / (1.0 + nbar)
    if n_terms is None:
        n_terms = terms_for_ratio(q)
    _check_tail(q ** (n_terms + 1), f"thermal nbar={nbar:.6g}")
    w = (1.0 - q) * q ** np.arange(n_terms + 1)
    return w / w.sum()


def thermal(nbar: float, config: TruncationConfig | None = None) -> np.ndarray:
    """Single-mode thermal state ``p_n = nbar^n / (1+nbar)^(n+1)``."""
    w = _geometric_weights(nbar, None if config is None else config.n_max)
    if len(w) < 2:
        w = np.append(w, 0.0)
    return np.diag(w).astype(complex)


def mp_thermal(nu: float, k: int = 1, j: int = 0, config: TruncationConfig | None = None) -> np.ndarray:
    """Thermal state of mean ``nu`` (in k-photon quanta) on levels ``{n k + j}``.

    The mean physical photon number is ``k nu + j``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= j < k:
        raise ValueError(f"sector offset must satisfy 0 <= j < k, got j={j}, k={k}")
    if config is None:
        w = _geometric_weights(nu, None)
        n_max = max((len(w) - 1) * k + j, k)
    else:
        n_max = config.n_max
        w = _geometric_weights(nu, (n_max - j) // k) if n_max >= j else None
        if w is None:
            raise TruncationError(f"n_max={n_max} does not reach sector offset j={j}")
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    levels = k * np.arange(len(w)) + j
    rho[levels, levels] = w
    return rho


def product(rho1: np.ndarray, rho2: np.ndarray, config: TruncationConfig | None = None) -> TwoModeState:
    rho1, rho2 = np.asarray(rho1), np.asarray(rho2)
    if rho1.shape != rho2.shape:
        raise ValueError(f"factor dimensions differ: {rho1.shape} vs {rho2.shape}; pad with fock.embed")
    if config is None:
        config = TruncationConfig(rho1.shape[0] - 1)
    return TwoModeState.from_density(np.kron(rho1, rho2), config)


def fock_state(n1: int, n2: int, config: TruncationConfig) -> TwoModeState:
    psi = np.zeros((config.dim, config.dim), dtype=complex)
    psi[n1, n2] = 1.0
    return TwoModeState.from_ket(psi, config)


def vacuum(config: TruncationConfig | None = None) -> TwoModeState:
    return fock_state(0, 0, config or TruncationConfig(1))


@dataclass(frozen=True)
class NumberDistribution:
    probabilities: np.ndarray
    k: int
    mean: float

    @property
    def total(self) -> float:
        return float(self.probabilities.sum())


def number_distribution(nbar: float, k: int = 1, n_terms: int | None = None) -> NumberDistribution:
    """Reduced k-photon-number distribution at mean photon number ``nbar`` per mode.

    ``p_n = (nbar/k)^n / (1 + nbar/k)^(n+1)``; ``k = 1`` is the ordinary
    squeezed-vacuum marginal.
    """
    nu = nbar / k
    q = nu / (1.0 + nu)
    if n_terms is None:
        n_terms = terms_for_ratio(q)
    n = np.arange(n_terms + 1)
    p = nu ** n / (1.0 + nu) ** (n + 1)
    return NumberDistribution(p, k, nu)
