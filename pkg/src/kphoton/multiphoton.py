"""Multi-photon ladder operators, k-quadratures and sector bookkeeping.

The k-photon annihilator acts on the Fock basis as

    A^(k) |n k + m>  =  sqrt(n) |(n - 1) k + m>,      0 <= m < k,

so levels ``{n k + j}`` for fixed ``j`` form a copy of an ordinary oscillator
(the sector ``j``).  The operator is built directly from this action rather
than from the factorial-ratio normalisation, which overflows at large n.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fock import (
    ModeOperator,
    TruncationConfig,
    TwoModeState,
    tensor_op,
)


class NotConfinedError(ValueError):
    """State has population outside the requested multi-photon sector."""


def ladder_matrix(k: int, dim: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    for level in range(k, dim):
        a[level - k, level] = np.sqrt(level // k)
    return a


@dataclass(frozen=True)
class MultiPhotonLadder:
    k: int
    a_k: ModeOperator
    config: TruncationConfig

    @property
    def annihilator(self) -> np.ndarray:
        return self.a_k.matrix

    @property
    def creator(self) -> np.ndarray:
        return self.a_k.matrix.conj().T

    @property
    def number(self) -> np.ndarray:
        """``N^(k) = A^(k)dag A^(k)``; diagonal with value ``level // k``."""
        return self.creator @ self.annihilator


def make_A(k: int, config: TruncationConfig) -> MultiPhotonLadder:
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    if k > config.n_max:
        raise ValueError(f"k={k} exceeds n_max={config.n_max}")
    return MultiPhotonLadder(k, ModeOperator(ladder_matrix(k, config.dim), f"A^({k})"), config)


@dataclass(frozen=True)
class QuadratureSet:
    """k-quadratures ``X = A + A^dag``, ``P = i (A^dag - A)`` for both modes.

    Single-mode matrices are stored; the two-mode embeddings ``X1 .. P2`` are
    built on first access (they are ``(n_max+1)**2`` square).  The ``*_sq``
    products are exact on the truncated space: they are formed one sector
    step above ``n_max`` and cropped, so no probability leaks off the top.
    """

    k: int
    config: TruncationConfig
    x: np.ndarray
    p: np.ndarray
    xx: np.ndarray
    pp: np.ndarray
    xp_sym: np.ndarray

    @property
    def single_mode(self) -> tuple[np.ndarray, np.ndarray]:
        return self.x, self.p

    @cached_property
    def X1(self) -> np.ndarray:
        return tensor_op(self.x, np.eye(self.config.dim))

    @cached_property
    def P1(self) -> np.ndarray:
        return tensor_op(self.p, np.eye(self.config.dim))

    @cached_property
    def X2(self) -> np.ndarray:
        return tensor_op(np.eye(self.config.dim), self.x)

    @cached_property
    def P2(self) -> np.ndarray:
        return tensor_op(np.eye(self.config.dim), self.p)

    def second_moment(self, a: str, b: str) -> np.ndarray:
        """Symmetrised single-mode product ``(a b + b a) / 2`` for a, b in {'x','p'}."""
        key = "".join(sorted((a, b)))
        return {"xx": self.xx, "pp": self.pp, "px": self.xp_sym}[key]


def _quadratures(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ad = a.conj().T
    return ad + a, 1j * (ad - a)


def make_quadratures(k: int, config: TruncationConfig) -> QuadratureSet:
    ladder = make_A(k, config)
    x, p = _quadratures(ladder.annihilator)
    d = config.dim
    xb, pb = _quadratures(ladder_matrix(k, d + k))
    xx = (xb @ xb)[:d, :d]
    pp = (pb @ pb)[:d, :d]
    xp = ((xb @ pb + pb @ xb) / 2)[:d, :d]
    return QuadratureSet(k, config, x, p, xx, pp, xp)


@dataclass(frozen=True)
class SectorReport:
    """Outcome of :func:`detect_sector`.

    ``sectors`` holds the best offset per mode; ``sector`` is the common
    offset when all modes agree, otherwise ``None``.
    """

    k: int
    sector: int | None
    sectors: tuple[int, ...]
    confined: bool
    leakage: float
    tol: float
    masses: np.ndarray

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "sector": self.sector,
            "sectors": list(self.sectors),
            "confined": self.confined,
            "leakage": self.leakage,
            "tol": self.tol,
        }


def _residue_masses(pop: np.ndarray, k: int) -> np.ndarray:
    """Sum populations over residue classes of every axis modulo ``k``."""
    out = pop
    for axis in range(pop.ndim):
        n = out.shape[axis]
        pad = (-n) % k
        widths = [(0, 0)] * out.ndim
        widths[axis] = (0, pad)
        padded = np.pad(out, widths)
        shape = list(padded.shape)
        shape[axis : axis + 1] = [(n + pad) // k, k]
        out = padded.reshape(shape).sum(axis=axis)
    return out


def populations(state) -> np.ndarray:
    if isinstance(state, TwoModeState):
        return state.populations()
    return np.real(np.diag(np.asarray(state)))


def detect_sector(state, k: int, tol: float = 1e-10) -> SectorReport:
    """Locate the multi-photon sector holding the population of ``state``.

    Works for a :class:`TwoModeState` (joint residues of both modes) or a
    single-mode density matrix.  Never raises on mixed-sector input; the
    off-sector mass is reported as ``leakage``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    pop = populations(state)
    total = float(pop.sum())
    masses = _residue_masses(pop, k)
    best = np.unravel_index(int(np.argmax(masses)), masses.shape)
    leakage = max(total - float(masses[best]), 0.0)
    sectors = tuple(int(j) for j in best)
    common = sectors[0] if len(set(sectors)) == 1 else None
    return SectorReport(k, common, sectors, leakage <= tol, leakage, tol, masses)


def infer_k(state, tol: float = 1e-10) -> int:
    """Largest photon spacing shared by all populated Fock levels."""
    pop = populations(state)
    if pop.ndim == 1:
        pop = pop[:, None]
    g = 0
    for axis in range(pop.ndim):
        marginal = pop.sum(axis=tuple(a for a in range(pop.ndim) if a != axis))
        levels = np.flatnonzero(marginal > tol)
        if levels.size:
            g = np.gcd.reduce(np.append(levels - levels[0], g))
    return int(g) if g > 0 else 1


@dataclass(frozen=True)
class SectorIsometry:
    """Relabelling ``|n k + m> -> |n>_k (x) |m>`` onto complete k-blocks.

    In Kronecker ordering of ``H_k (x) V_k`` the target index of
    ``|n>_k (x) |m>`` is ``n k + m``, so ``u_tilde`` is the identity on the
    complete blocks and drops the incomplete top block.
    """

    k: int
    n_blocks: int
    u_tilde: np.ndarray

    @property
    def domain_dim(self) -> int:
        return self.n_blocks * self.k

    def target_index(self, n: int, m: int) -> int:
        return n * self.k + m

    def conjugate(self, op: np.ndarray) -> np.ndarray:
        """``U op U^dag``."""
        return self.u_tilde @ op @ self.u_tilde.conj().T


def build_U_tilde(k: int, config: TruncationConfig) -> SectorIsometry:
    if k < 1 or k > config.n_max:
        raise ValueError(f"k must lie in 1..n_max, got {k}")
    n_blocks = config.dim // k
    u = np.zeros((n_blocks * k, config.dim), dtype=complex)
    for n in range(n_blocks):
        for m in range(k):
            u[n * k + m, n * k + m] = 1.0
    return SectorIsometry(k, n_blocks, u)


def sector_levels(k: int, j: int, n_max: int) -> np.ndarray:
    if not 0 <= j < k:
        raise ValueError(f"sector offset must satisfy 0 <= j < k, got j={j}, k={k}")
    return np.arange(j, n_max + 1, k)


@dataclass(frozen=True)
class CompressedState:
    state: object  # TwoModeState or single-mode ndarray
    k: int
    sectors: tuple[int, ...]
    retained_trace: float
    source_n_max: int


def _normalise_offsets(j, nmodes: int) -> tuple[int, ...]:
    if isinstance(j, (tuple, list)):
        if len(j) != nmodes:
            raise ValueError(f"expected {nmodes} sector offsets, got {j!r}")
        return tuple(int(x) for x in j)
    return (int(j),) * nmodes


def compress_to_sector(state, k: int, j=0, tol: float = 1e-10) -> CompressedState:
    """Map a sector-confined state onto the ordinary oscillator.

    Keeps the matrix elements on levels ``{n k + j}`` and relabels them ``n``.
    ``j`` may be a per-mode tuple for two-mode input.  The compressed space
    has at least two levels (``n_max >= 1``); missing levels are zero.
    """
    two_mode = isinstance(state, TwoModeState)
    offsets = _normalise_offsets(j, 2 if two_mode else 1)
    report = detect_sector(state, k, tol)
    masses = report.masses
    leakage = float(populations(state).sum() - masses[offsets])
    if leakage > tol:
        raise NotConfinedError(
            f"population outside sector k={k}, j={offsets}: leakage {leakage:.3e} > tol {tol:.1e}"
        )
    n_max = state.config.n_max if two_mode else np.asarray(state).shape[0] - 1
    idx = [sector_levels(k, jj, n_max) for jj in offsets]
    dim = max(max(len(i) for i in idx), 2)
    tols = (state.config.tol_psd, state.config.tol_trace) if two_mode else ()
    cfg = TruncationConfig(dim - 1, *tols)
    if two_mode:
        if state.is_pure:
            psi = np.zeros((dim, dim), dtype=complex)
            psi[: len(idx[0]), : len(idx[1])] = state.psi[np.ix_(idx[0], idx[1])]
            norm = float(np.vdot(psi, psi).real)
            out = TwoModeState.from_ket(psi / np.sqrt(norm), cfg)
        else:
            r = state.tensor()
            sub = np.zeros((dim, dim, dim, dim), dtype=complex)
            n1, n2 = len(idx[0]), len(idx[1])
            sub[:n1, :n2, :n1, :n2] = r[np.ix_(idx[0], idx[1], idx[0], idx[1])]
            rho = sub.reshape(dim * dim, dim * dim)
            norm = float(np.trace(rho).real)
            out = TwoModeState.from_density(rho / norm, cfg)
    else:
        rho = np.asarray(state, dtype=complex)
        sub = np.zeros((dim, dim), dtype=complex)
        sub[: len(idx[0]), : len(idx[0])] = rho[np.ix_(idx[0], idx[0])]
        norm = float(np.trace(sub).real)
        out = sub / norm
    return CompressedState(out, k, offsets, norm, int(n_max))


def expand_from_sector(compressed: CompressedState, n_max: int | None = None):
    """Adjoint relabelling: place a compressed state back on levels ``{n k + j}``.

    The retained trace is restored, so expand(compress(rho)) == rho for
    confined input.
    """
    k, offsets = compressed.k, compressed.sectors
    n_max = compressed.source_n_max if n_max is None else n_max
    d = n_max + 1
    src = compressed.state
    scale = compressed.retained_trace
    idx = [sector_levels(k, jj, n_max) for jj in offsets]
    if isinstance(src, TwoModeState):
        n1, n2 = len(idx[0]), len(idx[1])
        cfg = TruncationConfig(n_max, src.config.tol_psd, src.config.tol_trace)
        if src.is_pure:
            psi = np.zeros((d, d), dtype=complex)
            psi[np.ix_(idx[0], idx[1])] = src.psi[:n1, :n2] * np.sqrt(scale)
            return TwoModeState.from_ket(psi, cfg)
        r = np.zeros((d, d, d, d), dtype=complex)
        r[np.ix_(idx[0], idx[1], idx[0], idx[1])] = src.tensor()[:n1, :n2, :n1, :n2] * scale
        return TwoModeState.from_density(r.reshape(d * d, d * d), cfg)
    n = len(idx[0])
    out = np.zeros((d, d), dtype=complex)
    out[np.ix_(idx[0], idx[0])] = np.asarray(src)[:n, :n] * scale
    return out
