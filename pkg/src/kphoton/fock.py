"""Truncated single- and two-mode Fock space linear algebra.

Two-mode objects use mode-1-major ordering: basis index ``i * d + j`` labels
``|i>|j>`` with ``d = n_max + 1``.

Pure two-mode states are carried as a ``(d, d)`` coefficient matrix
``psi[i, j] = <i, j|psi>`` and only expanded to a density matrix on request;
at the truncations needed for strongly squeezed multi-photon states the dense
density matrix would not fit in memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class TruncationError(ValueError):
    """Discarded probability mass exceeds the truncation budget."""


@dataclass(frozen=True)
class TruncationConfig:
    n_max: int
    tol_psd: float = 1e-9
    tol_trace: float = 1e-9

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")
        if not (self.tol_psd > 0 and self.tol_trace > 0):
            raise ValueError("tolerances must be strictly positive")

    @property
    def dim(self) -> int:
        return self.n_max + 1


@dataclass(frozen=True)
class ModeOperator:
    matrix: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def dag(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T, f"{self.label}^dag")

    def __matmul__(self, other):
        if isinstance(other, ModeOperator):
            return ModeOperator(self.matrix @ other.matrix, f"{self.label} {other.label}")
        return self.matrix @ other


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, ModeOperator) else np.asarray(op)


def make_annihilation(config: TruncationConfig) -> ModeOperator:
    """Annihilation operator with ``<n-1|a|n> = sqrt(n)``."""
    a = np.diag(np.sqrt(np.arange(1, config.dim, dtype=float)), 1).astype(complex)
    return ModeOperator(a, "a")


def make_number(config: TruncationConfig) -> ModeOperator:
    return ModeOperator(np.diag(np.arange(config.dim, dtype=float)).astype(complex), "N")


def identity(config: TruncationConfig) -> ModeOperator:
    return ModeOperator(np.eye(config.dim, dtype=complex), "I")


def tensor_op(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` in mode-1-major ordering."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"operator shapes differ: {a.shape} vs {b.shape}")
    return np.kron(a, b)


class TwoModeState:
    """Density operator of two truncated bosonic modes.

    Build with :meth:`from_density` or :meth:`from_ket`.  Instances are treated
    as immutable; ``rho`` is computed lazily for pure states.
    """

    def __init__(self, config: TruncationConfig, *, rho=None, ket=None):
        d = config.dim
        if (rho is None) == (ket is None):
            raise ValueError("exactly one of rho or ket is required")
        if rho is not None:
            rho = np.asarray(rho, dtype=complex)
            if rho.shape != (d * d, d * d):
                raise ValueError(f"rho must have shape {(d * d, d * d)}, got {rho.shape}")
            rho.setflags(write=False)
        else:
            ket = np.asarray(ket, dtype=complex)
            if ket.shape == (d * d,):
                ket = ket.reshape(d, d)
            if ket.shape != (d, d):
                raise ValueError(f"ket must have shape {(d, d)} or {(d * d,)}, got {ket.shape}")
            ket.setflags(write=False)
        self.config = config
        self._rho = rho
        self._ket = ket

    @classmethod
    def from_density(cls, rho, config: TruncationConfig | None = None) -> "TwoModeState":
        rho = np.asarray(rho, dtype=complex)
        if config is None:
            d = int(round(np.sqrt(rho.shape[0])))
            config = TruncationConfig(d - 1)
        return cls(config, rho=rho)

    @classmethod
    def from_ket(cls, psi, config: TruncationConfig | None = None) -> "TwoModeState":
        psi = np.asarray(psi, dtype=complex)
        if config is None:
            d = psi.shape[0] if psi.ndim == 2 else int(round(np.sqrt(psi.size)))
            config = TruncationConfig(d - 1)
        return cls(config, ket=psi)

    @property
    def is_pure(self) -> bool:
        """True when the state is stored as a ket (not a numerical purity test)."""
        return self._ket is not None

    @property
    def psi(self) -> np.ndarray:
        if self._ket is None:
            raise AttributeError("state is stored as a density matrix")
        return self._ket

    @cached_property
    def rho(self) -> np.ndarray:
        if self._rho is not None:
            return self._rho
        v = self._ket.reshape(-1)
        out = np.outer(v, v.conj())
        out.setflags(write=False)
        return out

    @property
    def dim(self) -> int:
        return self.config.dim ** 2

    def tensor(self) -> np.ndarray:
        """Density matrix as a rank-4 array ``R[i, j, i', j']``."""
        d = self.config.dim
        return self.rho.reshape(d, d, d, d)

    def populations(self) -> np.ndarray:
        """Joint photon-number distribution ``P[i, j] = <i,j|rho|i,j>``."""
        d = self.config.dim
        if self.is_pure:
            return np.abs(self._ket) ** 2
        return np.real(np.diag(self._rho)).reshape(d, d)

    def __repr__(self):
        kind = "ket" if self.is_pure else "density"
        return f"TwoModeState(n_max={self.config.n_max}, {kind})"


def _check_mode(mode: int) -> None:
    if mode not in (1, 2):
        raise ValueError(f"mode index must be 1 or 2, got {mode!r}")


def partial_trace(state: TwoModeState, keep: int) -> np.ndarray:
    """Reduced density matrix of mode ``keep`` (1 or 2)."""
    _check_mode(keep)
    if state.is_pure:
        psi = state.psi
        return psi @ psi.conj().T if keep == 1 else psi.T @ psi.conj()
    r = state.tensor()
    return np.einsum("ijkj->ik", r) if keep == 1 else np.einsum("ijil->jl", r)


def partial_transpose(state: TwoModeState, mode: int = 2) -> np.ndarray:
    """Transpose the indices of ``mode`` in the dense density matrix."""
    _check_mode(mode)
    d = state.config.dim
    r = state.tensor()
    r = r.transpose(2, 1, 0, 3) if mode == 1 else r.transpose(0, 3, 2, 1)
    return r.reshape(d * d, d * d)


def expectation(state: TwoModeState, op) -> complex:
    """``Tr[rho op]`` for a full two-mode operator matrix."""
    op = _as_matrix(op)
    if op.shape != (state.dim, state.dim):
        raise ValueError(f"operator shape {op.shape} does not match state dimension {state.dim}")
    if state.is_pure:
        v = state.psi.reshape(-1)
        return complex(np.vdot(v, op @ v))
    return complex(np.einsum("ij,ji->", state.rho, op))


def expectation_local(state: TwoModeState, op1=None, op2=None) -> complex:
    """``Tr[rho (op1 (x) op2)]`` without forming the Kronecker product.

    ``None`` stands for the identity on that mode.
    """
    d = state.config.dim
    op1 = np.eye(d) if op1 is None else _as_matrix(op1)
    op2 = np.eye(d) if op2 is None else _as_matrix(op2)
    if op1.shape != (d, d) or op2.shape != (d, d):
        raise ValueError("local operator dimension does not match the state")
    if state.is_pure:
        psi = state.psi
        return complex(np.vdot(psi, op1 @ psi @ op2.T))
    return complex(np.einsum("ijkl,ki,lj->", state.tensor(), op1, op2))


def single_mode_expectation(rho: np.ndarray, op) -> complex:
    op = _as_matrix(op)
    if op.shape != rho.shape:
        raise ValueError(f"operator shape {op.shape} does not match density shape {rho.shape}")
    return complex(np.einsum("ij,ji->", rho, op))


@dataclass(frozen=True)
class DensityReport:
    hermiticity: float
    trace_deviation: float
    min_eigenvalue: float
    tol_psd: float
    tol_trace: float
    tol_herm: float = 1e-12

    @property
    def failures(self) -> tuple[str, ...]:
        out = []
        if self.hermiticity > self.tol_herm:
            out.append("hermiticity")
        if self.trace_deviation > self.tol_trace:
            out.append("trace")
        if self.min_eigenvalue < -self.tol_psd:
            out.append("positivity")
        return tuple(out)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_density(state, config: TruncationConfig | None = None) -> DensityReport:
    """Hermiticity residual, trace deviation and smallest eigenvalue.

    Accepts a :class:`TwoModeState` or a bare single-mode density matrix.
    """
    if isinstance(state, TwoModeState):
        config = state.config
        if state.is_pure:
            norm = float(np.vdot(state.psi, state.psi).real)
            return DensityReport(0.0, abs(norm - 1.0), 0.0, config.tol_psd, config.tol_trace)
        rho = state.rho
    else:
        rho = np.asarray(state, dtype=complex)
        if config is None:
            config = TruncationConfig(max(rho.shape[0] - 1, 1))
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    tr = abs(complex(np.trace(rho)) - 1.0)
    lam = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0])
    return DensityReport(herm, tr, lam, config.tol_psd, config.tol_trace)


def embed(rho: np.ndarray, n_max: int) -> np.ndarray:
    """Zero-pad a single-mode density matrix to ``n_max + 1`` levels."""
    d = rho.shape[0]
    if n_max + 1 < d:
        raise ValueError(f"cannot embed a {d}-level matrix into n_max={n_max}")
    out = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    out[:d, :d] = rho
    return out
