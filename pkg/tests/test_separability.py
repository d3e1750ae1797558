import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from kphoton.fock import TruncationConfig, TwoModeState
from kphoton.phase_space import GaussianityResult, covariance
from kphoton.separability import (
    Decision,
    StandardFormCM,
    StandardFormError,
    StandardizationError,
    assess,
    criterion,
    epr_variances,
    is_physical,
    log_negativity,
    ppt_check,
    standardize,
    validate_standard_form,
)
from kphoton.states import mp_thermal, mp_tmsv, product, thermal, tmsv

from .conftest import ket_state

OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def tmsv_cm(r):
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    return np.array([[ch, 0, sh, 0], [0, ch, 0, -sh], [sh, 0, ch, 0], [0, -sh, 0, ch]])


def rotation(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def local(l1, t1, l2, t2):
    s = np.zeros((4, 4))
    s[:2, :2] = np.diag([l1, 1 / l1]) @ rotation(t1)
    s[2:, 2:] = np.diag([l2, 1 / l2]) @ rotation(t2)
    return s


def pt_symplectic_min(sigma):
    """Smallest symplectic eigenvalue of the partially transposed CM (vacuum = 1)."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    st_ = flip @ sigma @ flip
    return float(np.min(np.abs(np.linalg.eigvals(1j * OMEGA @ st_))))


def certificate(k=1, certified=True):
    return GaussianityResult(certified, 0.0, 0.0, k, (0, 0), 1e-8)


def test_validate_examples():
    form = validate_standard_form(np.eye(4))
    assert (form.b1, form.d2, form.c1) == (1, 1, 0)
    s2 = math.sqrt(2)
    form = validate_standard_form(StandardFormCM(2, 2, 3, 3, s2, -s2).matrix())
    assert form.c2 == pytest.approx(-s2)
    validate_standard_form(tmsv_cm(0.7))


def test_validate_reports_violations():
    bad = tmsv_cm(0.5)
    bad[0, 1] = bad[1, 0] = 0.1
    with pytest.raises(StandardFormError) as err:
        validate_standard_form(bad)
    assert "pattern" in err.value.violations
    asym = StandardFormCM(2, 3, 3, 2, 0.5, 0.5).matrix()
    with pytest.raises(StandardFormError) as err:
        validate_standard_form(asym)
    assert "constraint_a" in err.value.violations
    unequal = StandardFormCM(2, 2, 2, 2, 0.9, 0.1).matrix()
    with pytest.raises(StandardFormError) as err:
        validate_standard_form(unequal)
    assert "constraint_b" in err.value.violations


def test_standardize_already_standard_is_identity():
    form, transform = standardize(tmsv_cm(0.5))
    assert transform.is_identity
    np.testing.assert_allclose(form.matrix(), tmsv_cm(0.5), atol=1e-12)


def test_standardize_undoes_single_mode_squeeze():
    s = local(1.3, 0.0, 1.0, 0.0)
    sigma = s @ tmsv_cm(0.5) @ s.T
    form, transform = standardize(sigma)
    np.testing.assert_allclose(np.abs(form.matrix()), np.abs(tmsv_cm(0.5)), atol=1e-8)
    np.testing.assert_allclose(transform.matrix @ sigma @ transform.matrix.T, form.matrix(), atol=1e-8)


def test_standardize_rotated_vacuum():
    s = local(1.0, 0.4, 1.0, -1.1)
    form, _ = standardize(s @ np.eye(4) @ s.T)
    np.testing.assert_allclose(form.matrix(), np.eye(4), atol=1e-12)


def test_standardize_rejects_unphysical():
    with pytest.raises(StandardizationError):
        standardize(0.5 * np.eye(4))


@st.composite
def physical_cms(draw):
    h = np.array(draw(st.lists(st.floats(-0.6, 0.6), min_size=10, max_size=10)))
    sym = np.zeros((4, 4))
    sym[np.triu_indices(4)] = h
    sym = sym + np.triu(sym, 1).T
    s = expm(OMEGA @ sym)
    nu1 = draw(st.floats(1.0, 3.0))
    nu2 = draw(st.floats(1.0, 3.0))
    return s @ np.diag([nu1, nu1, nu2, nu2]) @ s.T


@settings(max_examples=150, deadline=None)
@given(physical_cms())
def test_standardize_and_criterion_match_symplectic_oracle(sigma):
    assert is_physical(sigma)
    nu = pt_symplectic_min(sigma)
    assume(abs(nu - 1) > 1e-6)
    form, transform = standardize(sigma)
    for value in form.residuals().values():
        assert value <= 1e-8 * max(1.0, np.max(np.abs(sigma))) ** 2
    np.testing.assert_allclose(transform.matrix @ sigma @ transform.matrix.T, form.matrix(), atol=1e-7)
    verdict = criterion(form)
    assert verdict.decision is not Decision.UNDECIDED
    assert verdict.entangled == (nu < 1)


def test_criterion_examples():
    verdict = criterion(StandardFormCM.from_matrix(tmsv_cm(0.5)))
    assert verdict.decision is Decision.ENTANGLED
    assert verdict.lhs == pytest.approx(2 * (math.cosh(1) - 1), abs=1e-12)
    assert verdict.rhs == pytest.approx(2 * math.sinh(1), abs=1e-12)
    assert verdict.branch == "sum"
    vac = criterion(StandardFormCM.from_matrix(np.eye(4)), certificate())
    assert vac.separable and vac.boundary and vac.margin == 0
    assert vac.q0 == 1.0
    th = criterion(StandardFormCM(2, 2, 3, 3, 0, 0))
    assert th.separable and th.margin > 0


def test_certification_rules():
    form = StandardFormCM(2, 2, 3, 3, 0, 0, k=2)
    assert criterion(form).decision is Decision.SEPARABLE_UNCERTIFIED
    assert criterion(form, certificate(k=2)).decision is Decision.SEPARABLE_CERTIFIED
    assert criterion(form, certificate(k=1)).decision is Decision.SEPARABLE_UNCERTIFIED
    assert criterion(form, certificate(k=2, certified=False)).decision is Decision.SEPARABLE_UNCERTIFIED
    ent = StandardFormCM.from_matrix(tmsv_cm(0.3), k=2)
    assert criterion(ent, certificate(k=2)).decision is Decision.ENTANGLED


def test_undecided_on_negative_radicand():
    verdict = criterion(StandardFormCM(0.5, 2, 2, 0.5, 0.1, 0.1))
    assert verdict.decision is Decision.UNDECIDED
    assert "radicands" in verdict.diagnostics


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0, 4.0), st.floats(0.3, 3.0), st.floats(0.0, 1.0))
def test_epr_form_equivalent_to_summed_form(b, ratio, corr):
    d = 1 + ratio * (b - 1)
    c = corr * math.sqrt(b * d - 1)
    form = StandardFormCM(b, b, d, d, c, -c)
    verdict = criterion(form)
    assume(abs(verdict.margin) > 1e-9)
    var, bound = epr_variances(form, verdict.q0)
    assert (var < bound) == verdict.entangled


def test_ppt_examples():
    assert not ppt_check(product(thermal(0.4), thermal(0.4))).entangled
    res = ppt_check(tmsv(0.5, TruncationConfig(30)))
    assert res.entangled and res.min_eigenvalue < 0
    dense = ppt_check(TwoModeState.from_density(tmsv(0.5, TruncationConfig(30)).rho))
    assert dense.method == "dense" and dense.min_eigenvalue == pytest.approx(res.min_eigenvalue, abs=1e-12)
    assert ppt_check(mp_tmsv(0.5, k=3)).entangled


def test_log_negativity_examples():
    assert log_negativity(product(thermal(0.4), thermal(0.4))) == 0
    assert log_negativity(ket_state({(0, 0): 1, (1, 1): 1}, 1)) == pytest.approx(math.log(2))
    cfg = TruncationConfig(60)
    value = log_negativity(tmsv(r=0.5, config=cfg))
    assert value == pytest.approx(1.0, abs=1e-6)
    assert log_negativity(mp_tmsv(r=0.5, k=2, config=TruncationConfig(120))) == pytest.approx(value, abs=1e-6)
    dense = tmsv(r=0.3, config=TruncationConfig(12))
    assert log_negativity(TwoModeState.from_density(dense.rho)) == pytest.approx(log_negativity(dense), abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("g", [0.0, 0.2, 0.4, 0.6])
def test_assess_agrees_with_oracle(g, k):
    out = assess(mp_tmsv(g, k=k))
    assert out.k == (k if g > 0 else 1)
    assert out.agrees
    if g == 0:
        assert out.verdict.decision is Decision.SEPARABLE_CERTIFIED and out.verdict.boundary
    else:
        assert out.verdict.decision is Decision.ENTANGLED


def test_assess_product_of_multiphoton_thermals():
    cfg = TruncationConfig(90)
    out = assess(product(mp_thermal(0.3, 3, config=cfg), mp_thermal(0.6, 3, config=cfg)), k=3)
    assert out.verdict.decision is Decision.SEPARABLE_CERTIFIED
    assert out.agrees and out.log_negativity == 0


def test_assess_non_gaussian_separable_stays_uncertified():
    # classical mixture of |00> and |11>: separable, not Gaussian
    rho = np.zeros((9, 9), dtype=complex)
    rho[0, 0] = rho[4, 4] = 0.5
    out = assess(TwoModeState.from_density(rho), k=1)
    assert out.verdict.decision is Decision.SEPARABLE_UNCERTIFIED
    assert not out.ppt.entangled


def test_assess_report_is_consistent():
    out = assess(tmsv(0.4))
    d = out.as_dict()
    assert d["verdict"]["decision"] == "Entangled"
    assert d["log_negativity_bits"] == pytest.approx(d["log_negativity"] / math.log(2))
    assert d["criterion_matches_oracle"] is True
    sigma = covariance(tmsv(0.4)).sigma
    np.testing.assert_allclose(out.covariance.sigma, sigma)


def test_standardize_keeps_k_tag():
    from kphoton.phase_space import CovarianceMatrix

    for sigma in (tmsv_cm(0.4), local(1.2, 0.3, 0.9, 0.0) @ tmsv_cm(0.4) @ local(1.2, 0.3, 0.9, 0.0).T):
        form, _ = standardize(CovarianceMatrix(sigma, np.zeros(4), k=3))
        assert form.k == 3
