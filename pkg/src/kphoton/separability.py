"""Standard-form covariance matrices, the sum criterion and the PPT oracle.

The criterion works on the sparse form

    [[b1, 0,  c1, 0 ],
     [0,  b2, 0,  c2],
     [c1, 0,  d1, 0 ],
     [0,  c2, 0,  d2]]

with ``(b1-1)/(d1-1) = (b2-1)/(d2-1)`` and
``|c1| - |c2| = sqrt((b1-1)(d1-1)) - sqrt((b2-1)(d2-1))``.  It is necessary
for separability of any state and sufficient for states that are Gaussian in
the quadratures the matrix was measured in.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .fock import TwoModeState, partial_transpose
from .measures import schmidt_coefficients
from .phase_space import CovarianceMatrix, GaussianityResult

DECISION_TOL = 1e-9
CONSTRAINT_TOL = 1e-8
DEGENERATE = 1e-12

OFF_PATTERN = ((0, 1), (0, 3), (1, 2), (2, 3))


class Decision(str, enum.Enum):
    ENTANGLED = "Entangled"
    SEPARABLE_CERTIFIED = "SeparableCertified"
    SEPARABLE_UNCERTIFIED = "SeparableUncertified"
    UNDECIDED = "Undecided"


class StandardFormError(ValueError):
    """Covariance matrix is not in standard form; ``violations`` maps name -> residual."""

    def __init__(self, violations: dict):
        self.violations = violations
        detail = ", ".join(f"{k}={v:.3e}" for k, v in violations.items())
        super().__init__(f"not in standard form: {detail}")


class StandardizationError(ValueError):
    def __init__(self, message: str, residuals: dict | None = None):
        self.residuals = residuals or {}
        super().__init__(message)


@dataclass(frozen=True)
class StandardFormCM:
    b1: float
    b2: float
    d1: float
    d2: float
    c1: float
    c2: float
    k: int = 1

    @classmethod
    def from_matrix(cls, sigma: np.ndarray, k: int = 1) -> "StandardFormCM":
        s = np.asarray(sigma, float)
        return cls(*(float(s[i, j]) for i, j in ((0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (1, 3))), k)

    def matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.b1, 0, self.c1, 0],
                [0, self.b2, 0, self.c2],
                [self.c1, 0, self.d1, 0],
                [0, self.c2, 0, self.d2],
            ],
            dtype=float,
        )

    def residuals(self) -> dict:
        """Residuals of both constraints (ratio constraint in cross-multiplied form)."""
        bm = (self.b1 - 1, self.b2 - 1)
        dm = (self.d1 - 1, self.d2 - 1)
        ratio = bm[0] * dm[1] - bm[1] * dm[0]
        rad = (bm[0] * dm[0], bm[1] * dm[1])
        out = {"constraint_a": abs(ratio)}
        if min(rad) < -CONSTRAINT_TOL:
            out["constraint_b_radicand"] = -min(rad)
            return out
        root = [math.sqrt(max(r, 0.0)) for r in rad]
        out["constraint_b"] = abs(abs(self.c1) - abs(self.c2) - (root[0] - root[1]))
        return out

    def as_dict(self) -> dict:
        return {"b1": self.b1, "b2": self.b2, "d1": self.d1, "d2": self.d2, "c1": self.c1, "c2": self.c2, "k": self.k}


def _sigma(cm) -> tuple[np.ndarray, int]:
    if isinstance(cm, CovarianceMatrix):
        return np.asarray(cm.sigma, float), cm.k
    return np.asarray(cm, float), 1


def validate_standard_form(cm, tol: float = CONSTRAINT_TOL) -> StandardFormCM:
    """Check the sparsity pattern and both constraints; raise with residuals on failure."""
    sigma, k = _sigma(cm)
    if sigma.shape != (4, 4):
        raise StandardFormError({"shape": float("nan")})
    violations = {}
    asym = float(np.max(np.abs(sigma - sigma.T)))
    if asym > 1e-12:
        violations["symmetry"] = asym
    off = max(abs(sigma[i, j]) for i, j in OFF_PATTERN)
    if off > tol:
        violations["pattern"] = off
    form = StandardFormCM.from_matrix(sigma, k)
    scale = max(1.0, float(np.max(np.abs(sigma))))
    for name, value in form.residuals().items():
        limit = tol * scale if name == "constraint_b" else tol * scale ** 2
        if name == "constraint_b_radicand" or value > limit:
            violations[name] = value
    if violations:
        raise StandardFormError(violations)
    return form


# -- reduction to standard form ----------------------------------------------

_OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_physical(sigma: np.ndarray, tol: float = 1e-9) -> bool:
    """Uncertainty relation ``sigma + i Omega >= 0`` (``[x, p] = 2i``)."""
    sigma = np.asarray(sigma, float)
    if np.max(np.abs(sigma - sigma.T)) > 1e-10:
        return False
    return bool(np.linalg.eigvalsh(sigma + 1j * _OMEGA)[0] >= -tol)


def _proper(u: np.ndarray) -> tuple[np.ndarray, float]:
    if np.linalg.det(u) < 0:
        u = u @ np.diag([1.0, -1.0])
        return u, -1.0
    return u, 1.0


def _symmetrize_block(block: np.ndarray) -> np.ndarray:
    """Local symplectic (rotation then squeeze) taking ``block`` to a multiple of identity."""
    lam, vec = np.linalg.eigh(block)
    vec, _ = _proper(vec)
    s = (lam[1] / lam[0]) ** 0.25
    return np.diag([s, 1.0 / s]) @ vec.T


@dataclass(frozen=True)
class LocalTransform:
    """Block-diagonal local symplectic ``S``; the standard form is ``S sigma S^T``."""

    matrix: np.ndarray
    squeeze: tuple[float, float] = (1.0, 1.0)
    steps: tuple[str, ...] = field(default_factory=tuple)

    @property
    def is_identity(self) -> bool:
        return bool(np.allclose(self.matrix, np.eye(4), atol=1e-12))

    def as_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "squeeze": list(self.squeeze), "steps": list(self.steps)}


def _solve_squeezing(a: float, b: float, c1: float, c2: float, tol: float) -> tuple[float, float]:
    """Find ``u = l1^2, v = l2^2`` so that diag(au, a/u, bv, b/v) meets both constraints.

    For fixed ``u`` the ratio constraint is the quadratic
    ``z2 b v^2 + (z1 - z2) v - z1 b = 0`` with one positive root; the
    correlation constraint is then a scalar function of ``log u`` on
    ``(-log a, log a)``, bracketed and solved by Brent's method.
    """
    ac1, ac2 = abs(c1), abs(c2)
    if (ac1 < tol and ac2 < tol) or abs(ac1 - ac2) < tol:
        return 1.0, 1.0
    if a - 1 < DEGENERATE or b - 1 < DEGENERATE:
        raise StandardizationError("correlated modes with a pure-vacuum marginal are unphysical")

    def inner(u: float) -> float:
        z1, z2 = a * u - 1, a / u - 1
        diff = z1 - z2
        root = math.sqrt(diff * diff + 4 * z1 * z2 * b * b)
        # pick the cancellation-free form of the positive root
        if diff >= 0:
            return 2 * z1 * b / (diff + root)
        return (root - diff) / (2 * z2 * b)

    def residual(t: float) -> float:
        u = math.exp(t)
        v = inner(u)
        w = math.sqrt(u * v)
        z1, z2, y1, y2 = a * u - 1, a / u - 1, b * v - 1, b / v - 1
        return ac1 * w - ac2 / w - (math.sqrt(max(z1 * y1, 0)) - math.sqrt(max(z2 * y2, 0)))

    edge = math.log(a) * (1 - 1e-12)
    lo, hi = residual(-edge), residual(edge)
    if lo * hi > 0:
        raise StandardizationError(
            "no sign change of the correlation constraint on the squeezing bracket",
            {"residual_low": lo, "residual_high": hi},
        )
    t = brentq(residual, -edge, edge, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    u = math.exp(t)
    return u, inner(u)


def standardize(cm, tol: float = CONSTRAINT_TOL) -> tuple[StandardFormCM, LocalTransform]:
    """Bring a physical two-mode covariance matrix to standard form by local operations.

    Steps: per-mode rotation and squeeze making each diagonal block a multiple
    of the identity; per-mode rotations diagonalising the correlation block
    (singular value decomposition restricted to proper rotations); per-mode
    squeezings solving both constraints.
    """
    sigma, k = _sigma(cm)
    if sigma.shape != (4, 4) or not is_physical(sigma):
        raise StandardizationError("covariance matrix is not physical (sigma + i Omega not >= 0)")
    try:
        form = validate_standard_form(sigma, tol)
        return replace(form, k=k), LocalTransform(np.eye(4), steps=("already standard",))
    except StandardFormError:
        pass

    total = np.eye(4)
    steps = []

    def apply(s1, s2, label):
        nonlocal sigma, total
        s = np.zeros((4, 4))
        s[:2, :2], s[2:, 2:] = s1, s2
        sigma = s @ sigma @ s.T
        total = s @ total
        steps.append(label)

    apply(_symmetrize_block(sigma[:2, :2]), _symmetrize_block(sigma[2:, 2:]), "symmetrize local blocks")
    u, sv, vt = np.linalg.svd(sigma[:2, 2:])
    u, su = _proper(u)
    v, sv_sign = _proper(vt.T)
    sv = sv * np.array([1.0, su * sv_sign])
    apply(u.T, v.T, "diagonalize correlations")

    a = math.sqrt(max(np.linalg.det(sigma[:2, :2]), 0.0))
    b = math.sqrt(max(np.linalg.det(sigma[2:, 2:]), 0.0))
    lu, lv = _solve_squeezing(a, b, sv[0], sv[1], tol)
    l1, l2 = math.sqrt(lu), math.sqrt(lv)
    apply(np.diag([l1, 1 / l1]), np.diag([l2, 1 / l2]), "squeeze")

    # clean numerical dust in the zero pattern before validating
    for i, j in OFF_PATTERN:
        if abs(sigma[i, j]) < 1e-10 * max(1.0, np.max(np.abs(sigma))):
            sigma[i, j] = sigma[j, i] = 0.0
    try:
        form = validate_standard_form(sigma, tol)
    except StandardFormError as exc:
        raise StandardizationError("standardization did not converge", exc.violations) from exc
    return replace(form, k=k), LocalTransform(total, (l1, l2), tuple(steps))


# -- criterion ------------------------------------------------------------------


@dataclass(frozen=True)
class SeparabilityVerdict:
    decision: Decision
    lhs: float
    rhs: float
    branch: str
    q0: float
    margin: float
    boundary: bool = False
    k: int = 1
    epr_variance: float = float("nan")
    epr_bound: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def entangled(self) -> bool:
        return self.decision is Decision.ENTANGLED

    @property
    def separable(self) -> bool:
        return self.decision in (Decision.SEPARABLE_CERTIFIED, Decision.SEPARABLE_UNCERTIFIED)

    def as_dict(self) -> dict:
        return {
            "decision": self.decision.value,
            "branch": self.branch,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "boundary": self.boundary,
            "q0": self.q0,
            "k": self.k,
            "epr_variance": self.epr_variance,
            "epr_bound": self.epr_bound,
            "diagnostics": self.diagnostics,
        }


def _q0(form: StandardFormCM) -> float:
    for bm, dm in ((form.b1 - 1, form.d1 - 1), (form.b2 - 1, form.d2 - 1)):
        if abs(bm) < DEGENERATE and abs(dm) < DEGENERATE:
            continue
        if abs(bm) < DEGENERATE or dm / bm <= 0:
            return float("nan")
        return (dm / bm) ** 0.25
    return 1.0


def epr_variances(form: StandardFormCM, q0: float) -> tuple[float, float]:
    """``<(du)^2> + <(dv)^2>`` and its bound ``q0^2 + 1/q0^2``.

    Variances are expressed with vacuum variance 1/2 (half of this package's
    quadrature convention), the normalisation in which the bound takes this form.
    """
    q2 = q0 * q0
    var_u = q2 * form.b1 + form.d1 / q2 - 2 * abs(form.c1)
    var_v = q2 * form.b2 + form.d2 / q2 - 2 * abs(form.c2)
    return (var_u + var_v) / 2, q2 + 1 / q2


def criterion(
    form: StandardFormCM,
    certificate: GaussianityResult | None = None,
    tol: float = DECISION_TOL,
) -> SeparabilityVerdict:
    """Evaluate the sum criterion on a standard-form covariance matrix.

    Violation means entangled.  Satisfaction certifies separability only when
    ``certificate`` shows the state is Gaussian in the same k-quadratures.
    """
    rads = ((form.b1 - 1) * (form.d1 - 1), (form.b2 - 1) * (form.d2 - 1))
    if form.b1 - 1 >= 0 and form.d1 - 1 >= 0:
        branch, signs = "sum", (1.0, 1.0)
    else:
        branch, signs = "alternating", (-1.0, 1.0)
    rhs = abs(form.c1) + abs(form.c2)
    q0 = _q0(form)
    if min(rads) < -tol:
        return SeparabilityVerdict(
            Decision.UNDECIDED, float("nan"), rhs, branch, q0, float("nan"), k=form.k,
            diagnostics={"radicands": list(rads), "reason": "negative radicand outside branch rules"},
        )
    lhs = sum(s * math.sqrt(max(r, 0.0)) for s, r in zip(signs, rads))
    margin = lhs - rhs
    epr, bound = epr_variances(form, q0) if math.isfinite(q0) else (float("nan"), float("nan"))
    diagnostics = {}
    if margin < -tol:
        decision = Decision.ENTANGLED
    elif certificate is not None and certificate.certified and certificate.k == form.k:
        decision = Decision.SEPARABLE_CERTIFIED
        diagnostics["gaussianity"] = certificate.as_dict()
    else:
        decision = Decision.SEPARABLE_UNCERTIFIED
        if certificate is not None:
            diagnostics["gaussianity"] = certificate.as_dict()
    return SeparabilityVerdict(
        decision, lhs, rhs, branch, q0, margin, abs(margin) <= tol, form.k, epr, bound, diagnostics
    )


# -- partial-transpose oracle --------------------------------------------------


@dataclass(frozen=True)
class PPTResult:
    min_eigenvalue: float
    entangled: bool
    method: str

    def as_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "entangled": self.entangled, "method": self.method}


def _is_diagonal(m: np.ndarray) -> bool:
    return not np.any(m[~np.eye(m.shape[0], dtype=bool)])


def ppt_check(state: TwoModeState, tol: float | None = None) -> PPTResult:
    """Smallest eigenvalue of the partial transpose; negative beyond tol means entangled.

    Pure states use their Schmidt coefficients, for which the partial
    transpose has eigenvalues ``s_i^2`` and ``+-s_i s_j``.
    """
    tol = state.config.tol_psd if tol is None else tol
    if state.is_pure:
        s = np.sort(schmidt_coefficients(state))[::-1]
        lam = -float(s[0] * s[1]) if s.size > 1 else 0.0
        method = "schmidt"
    elif _is_diagonal(state.rho):
        lam = float(np.min(np.real(np.diag(state.rho))))
        method = "diagonal"
    else:
        pt = partial_transpose(state, 2)
        lam = float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])
        method = "dense"
    return PPTResult(lam, lam < -tol, method)


def log_negativity(state: TwoModeState) -> float:
    """``ln || rho^{T_2} ||_1`` in nats."""
    if state.is_pure:
        s = schmidt_coefficients(state)
        norm = float(np.sum(s ** 2))
        value = 2.0 * math.log(float(np.sum(s)) / math.sqrt(norm))
    else:
        if _is_diagonal(state.rho):
            lam = np.real(np.diag(state.rho))
        else:
            pt = partial_transpose(state, 2)
            lam = np.linalg.eigvalsh((pt + pt.conj().T) / 2)
        # relative to the trace, so PPT states give exactly zero
        value = math.log(float(np.sum(np.abs(lam)) / np.sum(lam)))
    return max(value, 0.0)


# -- full pipeline ---------------------------------------------------------------


@dataclass(frozen=True)
class Assessment:
    """Criterion verdict in k-quadratures together with the PPT oracle."""

    k: int
    sector: object
    covariance: CovarianceMatrix
    standard_form: StandardFormCM
    transform: LocalTransform
    verdict: SeparabilityVerdict
    certificate: GaussianityResult | None
    ppt: PPTResult
    log_negativity: float

    @property
    def agrees(self) -> bool:
        return self.verdict.entangled == self.ppt.entangled

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "sector": self.sector.as_dict(),
            "covariance": self.covariance.as_dict(),
            "standard_form": self.standard_form.as_dict(),
            "transform": self.transform.as_dict(),
            "verdict": self.verdict.as_dict(),
            "gaussianity": None if self.certificate is None else self.certificate.as_dict(),
            "ppt": self.ppt.as_dict(),
            "log_negativity": self.log_negativity,
            "log_negativity_bits": self.log_negativity / math.log(2),
            "criterion_matches_oracle": self.agrees,
        }


def assess(state: TwoModeState, k: int | None = None, tol: float = 1e-10) -> Assessment:
    """Sector detection, k-quadrature covariance, standard form, criterion and PPT oracle.

    ``k`` defaults to the photon spacing shared by the populated levels.  A
    Gaussianity certificate is computed only when the criterion is satisfied.
    """
    from .multiphoton import detect_sector, infer_k, make_quadratures
    from .phase_space import covariance, gaussianity_check

    if k is None:
        k = infer_k(state, tol)
    sector = detect_sector(state, k, tol)
    cm = covariance(state, make_quadratures(k, state.config))
    form, transform = standardize(cm)
    verdict = criterion(form)
    certificate = None
    if verdict.separable:
        certificate = gaussianity_check(state, k, tol=tol)
        verdict = criterion(form, certificate)
    return Assessment(k, sector, cm, form, transform, verdict, certificate, ppt_check(state), log_negativity(state))
