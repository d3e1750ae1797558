"""Covariance matrices, Wigner functions and Gaussianity certificates.

Conventions: ``x = a + a^dag``, ``p = i (a^dag - a)``, so the vacuum has unit
quadrature variance and covariance matrix equal to the identity.  Wigner
functions are normalised to unit integral over ``dx dp``; the vacuum peak is
``1 / (2 pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fock import TruncationConfig, TwoModeState, expectation_local, partial_trace, single_mode_expectation
from .multiphoton import (
    QuadratureSet,
    compress_to_sector,
    detect_sector,
    ladder_matrix,
    make_quadratures,
)

CONVENTION = "x=a+a^dag, p=i(a^dag-a), integral W dx dp = 1"
DEFAULT_POINTS = 201
DEFAULT_SIGMAS = 6.0


@dataclass(frozen=True)
class CovarianceMatrix:
    """Symmetrised second moments minus products of means.

    ``sigma`` is 4x4 over ``(X1, P1, X2, P2)`` for two-mode input, 2x2 for a
    single mode.  ``k`` records which quadratures produced it.
    """

    sigma: np.ndarray
    means: np.ndarray
    k: int = 1

    def as_dict(self) -> dict:
        return {"k": self.k, "sigma": self.sigma.tolist(), "means": self.means.tolist()}


def _mode_moments(rho: np.ndarray, q: QuadratureSet):
    x, p = q.x, q.p
    mean = np.array([single_mode_expectation(rho, x).real, single_mode_expectation(rho, p).real])
    second = np.array(
        [
            [single_mode_expectation(rho, q.xx).real, single_mode_expectation(rho, q.xp_sym).real],
            [single_mode_expectation(rho, q.xp_sym).real, single_mode_expectation(rho, q.pp).real],
        ]
    )
    return mean, second


def covariance(state, quads: QuadratureSet | None = None, k: int | None = None) -> CovarianceMatrix:
    """Covariance matrix of ``state`` in the quadratures of ``quads``.

    ``state`` is a :class:`TwoModeState` or a single-mode density matrix.
    Pass either ``quads`` or ``k`` (default ordinary quadratures).
    """
    two_mode = isinstance(state, TwoModeState)
    n_max = state.config.n_max if two_mode else np.asarray(state).shape[0] - 1
    if quads is None:
        quads = make_quadratures(k or 1, TruncationConfig(n_max))
    if quads.config.n_max != n_max:
        raise ValueError(f"quadratures built for n_max={quads.config.n_max}, state has n_max={n_max}")
    if not two_mode:
        mean, second = _mode_moments(np.asarray(state), quads)
        return CovarianceMatrix(second - np.outer(mean, mean), mean, quads.k)

    rho1, rho2 = partial_trace(state, 1), partial_trace(state, 2)
    m1, s1 = _mode_moments(rho1, quads)
    m2, s2 = _mode_moments(rho2, quads)
    second = np.zeros((4, 4))
    second[:2, :2] = s1
    second[2:, 2:] = s2
    ops = (quads.x, quads.p)
    for a in range(2):
        for b in range(2):
            second[a, 2 + b] = second[2 + b, a] = expectation_local(state, ops[a], ops[b]).real
    means = np.concatenate([m1, m2])
    return CovarianceMatrix(second - np.outer(means, means), means, quads.k)


# -- Wigner functions --------------------------------------------------------


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on ``values[ix, ip]`` at ``(x_axis[ix], p_axis[ip])``."""

    x_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray
    epsilon: float = 1e-3
    convention: str = CONVENTION
    meta: dict = field(default_factory=dict)

    @property
    def cell_area(self) -> float:
        return float((self.x_axis[1] - self.x_axis[0]) * (self.p_axis[1] - self.p_axis[0]))

    @property
    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    @property
    def normalization_residual(self) -> float:
        return abs(self.integral - 1.0)

    @property
    def minimum(self) -> float:
        return float(self.values.min())

    def value_at(self, x: float, p: float) -> float:
        ix = int(np.argmin(np.abs(self.x_axis - x)))
        ip = int(np.argmin(np.abs(self.p_axis - p)))
        return float(self.values[ix, ip])

    def header(self) -> dict:
        return {
            "convention": self.convention,
            "x_axis": {"min": float(self.x_axis[0]), "max": float(self.x_axis[-1]), "points": len(self.x_axis)},
            "p_axis": {"min": float(self.p_axis[0]), "max": float(self.p_axis[-1]), "points": len(self.p_axis)},
            "cell_area": self.cell_area,
            "integral": self.integral,
            "normalization_residual": self.normalization_residual,
            "epsilon": self.epsilon,
            "minimum": self.minimum,
            "maximum": float(self.values.max()),
            **self.meta,
        }


class GridTooSmallError(ValueError):
    """Wigner grid misses more probability than the declared epsilon."""


@dataclass(frozen=True)
class GridSpec:
    """Square grid ``[-half_width, half_width]^2``; ``half_width=None`` means automatic."""

    half_width: float | None = None
    points: int = DEFAULT_POINTS
    epsilon: float = 1e-3

    def axes(self, rho: np.ndarray | None = None) -> np.ndarray:
        hw = self.half_width if self.half_width is not None else default_half_width(rho)
        return np.linspace(-hw, hw, self.points)


def default_half_width(rho: np.ndarray) -> float:
    """Six standard deviations of the widest ordinary quadrature, plus the offset."""
    cm = covariance(rho)
    spread = np.sqrt(max(cm.sigma[0, 0], cm.sigma[1, 1]))
    return float(DEFAULT_SIGMAS * spread + np.max(np.abs(cm.means)))


def _iter_wigner_basis(dim: int, x: np.ndarray, p: np.ndarray):
    """Yield ``(m, n, B_mn)`` for ``m <= n`` via upward recurrences.

    ``W = (1/2) sum_mn rho_mn B_mn`` with ``B_nm = conj(B_mn)``.  The recursion
    is the displaced-number-state (associated Laguerre) recurrence and never
    forms factorials.
    """
    alpha = (x + 1j * p) / 2.0
    row = [np.exp(-2.0 * np.abs(alpha) ** 2) / np.pi + 0j]
    for n in range(1, dim):
        row.append(2.0 * alpha * row[n - 1] / np.sqrt(n))
    for n in range(dim):
        yield 0, n, row[n]
    for m in range(1, dim):
        temp = row[m]
        row[m] = (2.0 * np.conj(alpha) * temp - np.sqrt(m) * row[m - 1]) / np.sqrt(m)
        yield m, m, row[m]
        for n in range(m + 1, dim):
            nxt = (2.0 * alpha * row[n - 1] - np.sqrt(m) * temp) / np.sqrt(n)
            temp = row[n]
            row[n] = nxt
            yield m, n, row[n]


def wigner_values(rho: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Wigner function of a single-mode density matrix at points ``(x, p)``."""
    rho = np.asarray(rho)
    x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
    w = np.zeros(x.shape)
    support = np.flatnonzero(np.any(np.abs(rho) > 0, axis=0) | np.any(np.abs(rho) > 0, axis=1))
    dim = int(support[-1]) + 1 if support.size else 1
    for m, n, b in _iter_wigner_basis(dim, x, p):
        c = rho[m, n]
        if c == 0:
            continue
        if m == n:
            w += c.real * b.real
        else:
            w += 2.0 * np.real(c * b)
    return 0.5 * w


def wigner_basis(dim: int, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Full tensor ``B[m, n, point]`` (times 1/2) for flat point arrays."""
    out = np.empty((dim, dim, x.size), dtype=complex)
    for m, n, b in _iter_wigner_basis(dim, x.ravel(), p.ravel()):
        out[m, n] = 0.5 * b
        out[n, m] = 0.5 * np.conj(b)
    return out


def wigner_single_mode(rho: np.ndarray, grid: GridSpec | None = None, *, check: bool = True) -> WignerGrid:
    """Wigner grid of a single-mode density matrix.

    Raises :class:`GridTooSmallError` if the grid integral misses unity by more
    than ``grid.epsilon`` (disable with ``check=False``).
    """
    grid = grid or GridSpec()
    axis = grid.axes(rho)
    xg, pg = np.meshgrid(axis, axis, indexing="ij")
    values = wigner_values(rho, xg, pg)
    out = WignerGrid(axis, axis.copy(), values, grid.epsilon)
    if check and out.normalization_residual > grid.epsilon:
        raise GridTooSmallError(
            f"grid integral {out.integral:.6g} misses unity by more than {grid.epsilon:g}; widen the grid"
        )
    return out


def laguerre_wigner(probabilities, x, p) -> np.ndarray:
    """Independent oracle for diagonal states: ``(1/2pi) e^{-s/2} sum p_n (-1)^n L_n(s)``."""
    from scipy.special import eval_laguerre

    s = np.asarray(x, float) ** 2 + np.asarray(p, float) ** 2
    total = np.zeros(np.shape(s))
    for n, pn in enumerate(probabilities):
        if pn != 0:
            total += pn * (-1) ** n * eval_laguerre(n, s)
    return np.exp(-s / 2) * total / (2 * np.pi)


def thermal_wigner(nu: float, x, p) -> np.ndarray:
    """Closed-form Wigner function of a thermal state of mean ``nu``."""
    v = 2 * nu + 1
    s = np.asarray(x, float) ** 2 + np.asarray(p, float) ** 2
    return np.exp(-s / (2 * v)) / (2 * np.pi * v)


def gaussian_wigner(cm: CovarianceMatrix, points: np.ndarray) -> np.ndarray:
    """Normalised Gaussian with covariance ``cm.sigma`` and mean ``cm.means``.

    ``points`` has shape ``(..., dim)``.
    """
    sigma = cm.sigma
    dim = sigma.shape[0]
    d = points - cm.means
    inv = np.linalg.inv(sigma)
    quad = np.einsum("...i,ij,...j->...", d, inv, d)
    return np.exp(-0.5 * quad) / ((2 * np.pi) ** (dim / 2) * np.sqrt(np.linalg.det(sigma)))


def _reduced(state, mode: int) -> np.ndarray:
    return partial_trace(state, mode) if isinstance(state, TwoModeState) else np.asarray(state)


def wigner_multiphoton(state, k: int, j: int | None = None, grid: GridSpec | None = None, *, mode: int = 1, tol: float = 1e-10) -> WignerGrid:
    """Wigner function over the eigenvalues of ``X^(k)``, ``P^(k)``.

    The (reduced) state is compressed out of sector ``j`` (auto-detected when
    ``None``) and its ordinary Wigner function is returned.
    """
    rho = _reduced(state, mode)
    if j is None:
        j = detect_sector(rho, k, tol).sectors[0]
    small = compress_to_sector(rho, k, j, tol).state
    out = wigner_single_mode(small, grid)
    return WignerGrid(out.x_axis, out.p_axis, out.values, out.epsilon, out.convention, {"k": k, "j": int(j)})


# -- Gaussianity -------------------------------------------------------------


@dataclass(frozen=True)
class GaussianityResult:
    certified: bool
    residual: float
    leakage: float
    k: int
    sectors: tuple[int, ...] | None
    threshold: float

    def as_dict(self) -> dict:
        return {
            "certified": self.certified,
            "residual": self.residual,
            "leakage": self.leakage,
            "k": self.k,
            "sectors": None if self.sectors is None else list(self.sectors),
            "threshold": self.threshold,
        }


def _two_mode_wigner(state: TwoModeState, axes: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """Two-mode Wigner function on the product of per-mode point sets."""
    d = state.config.dim
    b1 = wigner_basis(d, *axes)
    if state.is_pure:
        psi = state.psi
        t = np.einsum("ab,anx->bnx", psi, b1, optimize=True)
        u = np.einsum("bnx,nc->bxc", t, psi.conj(), optimize=True)
        w = np.einsum("bxc,bcy->xy", u, b1, optimize=True)
    else:
        t = np.einsum("abcd,acx->bdx", state.tensor(), b1, optimize=True)
        w = np.einsum("bdx,bdy->xy", t, b1, optimize=True)
    return w.real


def gaussianity_check(
    state,
    k: int = 1,
    j=None,
    grid: GridSpec | None = None,
    threshold: float = 1e-8,
    *,
    tol: float = 1e-10,
    points_4d: int = 9,
    joint_threshold: float = 1e-6,
) -> GaussianityResult:
    """Certify that ``state`` is Gaussian in the k-photon phase space.

    The state is compressed out of its sector and its Wigner function is
    compared with the Gaussian of the same means and covariance; the L-inf
    residual must not exceed ``threshold``.  Single-mode input is checked on
    the 2-D grid.  Two-mode input is checked on both reduced 2-D grids and on
    a coarse ``points_4d**4`` joint grid against ``joint_threshold``; the joint
    residual of a truncated pure state scales with the square root of the
    discarded mass, hence the looser default.  A state leaking out of the sector
    is reported as not certified with the leakage as evidence.
    """
    report = detect_sector(state, k, tol)
    offsets = report.sectors if j is None else j
    if j is None and not report.confined:
        return GaussianityResult(False, float("inf"), report.leakage, k, None, threshold)
    try:
        small = compress_to_sector(state, k, offsets, tol).state
    except ValueError:
        return GaussianityResult(False, float("inf"), report.leakage, k, None, threshold)
    sectors = tuple(offsets) if isinstance(offsets, (tuple, list)) else (int(offsets),)
    grid = grid or GridSpec()

    if not isinstance(small, TwoModeState):
        return _check_single(small, grid, threshold, report.leakage, k, sectors)

    residual = 0.0
    for m in (1, 2):
        r = _check_single(partial_trace(small, m), grid, threshold, report.leakage, k, sectors)
        residual = max(residual, r.residual)
    cm = covariance(small)
    if np.linalg.det(cm.sigma) <= 0:
        return GaussianityResult(False, float("inf"), report.leakage, k, sectors, threshold)
    spread = np.sqrt(np.max(np.diag(cm.sigma)))
    axis = np.linspace(-3 * spread, 3 * spread, points_4d)
    xf, pf = (a.ravel() for a in np.meshgrid(axis, axis, indexing="ij"))
    w = _two_mode_wigner(small, (xf, pf))
    pts = np.empty((xf.size, xf.size, 4))
    pts[..., 0], pts[..., 1] = xf[:, None], pf[:, None]
    pts[..., 2], pts[..., 3] = xf[None, :], pf[None, :]
    g = gaussian_wigner(cm, pts)
    joint = float(np.max(np.abs(w - g)))
    ok = residual <= threshold and joint <= joint_threshold
    return GaussianityResult(ok, max(residual, joint), report.leakage, k, sectors, threshold)


def _check_single(rho, grid, threshold, leakage, k, sectors) -> GaussianityResult:
    cm = covariance(rho)
    if np.linalg.det(cm.sigma) <= 0:
        return GaussianityResult(False, float("inf"), leakage, k, sectors, threshold)
    wg = wigner_single_mode(rho, grid, check=False)
    xg, pg = np.meshgrid(wg.x_axis, wg.p_axis, indexing="ij")
    g = gaussian_wigner(cm, np.stack([xg, pg], axis=-1))
    residual = float(np.max(np.abs(wg.values - g)))
    return GaussianityResult(residual <= threshold, residual, leakage, k, sectors, threshold)


# -- k = 2 moment expansions ---------------------------------------------------


@dataclass(frozen=True)
class K2Moments:
    """Second and squared first moment of ``X^(2)`` by two routes.

    ``direct_*`` use an ``A^(2)`` assembled from ``a``, ``a^dag`` and ``N``
    with the factorial-ratio normalisation; ``expansion_*`` evaluate the
    closed-form expansions in ``a^4``, ``a^2`` and ``N``.  The expansions hold
    on the even sector only, so the discrepancy is reported, not enforced.
    """

    direct_x2: float
    direct_mean_sq: float
    expansion_x2: float
    expansion_mean_sq: float

    @property
    def discrepancy_x2(self) -> float:
        return self.expansion_x2 - self.direct_x2

    @property
    def discrepancy_mean_sq(self) -> float:
        return self.expansion_mean_sq - self.direct_mean_sq

    def as_dict(self) -> dict:
        return {
            "direct_x2": self.direct_x2,
            "direct_mean_sq": self.direct_mean_sq,
            "expansion_x2": self.expansion_x2,
            "expansion_mean_sq": self.expansion_mean_sq,
            "discrepancy_x2": self.discrepancy_x2,
            "discrepancy_mean_sq": self.discrepancy_mean_sq,
        }


def multiphoton_creator_from_normalisation(k: int, dim: int) -> np.ndarray:
    """``sqrt([[N/k]] (N-k)!/N!) a^dag^k`` built from number-operator functions."""
    a = ladder_matrix(1, dim)
    ad_k = np.linalg.matrix_power(a.conj().T, k)
    f = np.zeros(dim)
    for level in range(k, dim):
        # (N-k)!/N! as a product of k reciprocals
        ratio = np.prod(1.0 / np.arange(level - k + 1, level + 1, dtype=float))
        f[level] = np.sqrt((level // k) * ratio)
    return np.diag(f) @ ad_k


def moments_k2_formula(rho: np.ndarray, config: TruncationConfig | None = None) -> K2Moments:
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0] if config is None else config.dim
    if rho.shape != (d, d):
        raise ValueError(f"density shape {rho.shape} does not match config dimension {d}")
    big = d + 4
    ad2 = multiphoton_creator_from_normalisation(2, big)
    xk = ad2 + ad2.conj().T
    x2 = (xk @ xk)[:d, :d]
    direct_x2 = single_mode_expectation(rho, x2).real
    direct_mean_sq = single_mode_expectation(rho, xk[:d, :d]).real ** 2

    a = ladder_matrix(1, big)
    n = np.arange(big, dtype=float)
    w4 = np.diag(np.sqrt(1.0 / ((n + 1) * (n + 3)))) @ np.linalg.matrix_power(a, 4)
    w2 = np.diag(np.sqrt(1.0 / (n + 1))) @ np.linalg.matrix_power(a, 2)
    w4, w2 = w4[:d, :d], w2[:d, :d]
    mean_n = float(np.real(np.sum(np.diag(rho) * np.arange(d))))
    expansion_x2 = 0.5 * (
        single_mode_expectation(rho, w4) + single_mode_expectation(rho, w4.conj().T) + 2 * mean_n + 2
    ).real
    expansion_mean_sq = 0.5 * (single_mode_expectation(rho, w2) + single_mode_expectation(rho, w2.conj().T)).real ** 2
    return K2Moments(direct_x2, direct_mean_sq, expansion_x2, expansion_mean_sq)
