import math

import numpy as np
import pytest

from kphoton.fock import TruncationConfig, TruncationError, check_density, partial_trace
from kphoton.measures import mean_energy, purity
from kphoton.multiphoton import detect_sector
from kphoton.separability import ppt_check
from kphoton.states import (
    SqueezingParam,
    gamma_for_energy,
    mp_thermal,
    mp_tmsv,
    number_distribution,
    product,
    thermal,
    tmsv,
)


def test_squeezing_param():
    sq = SqueezingParam.from_r(0.5)
    assert sq.gamma == pytest.approx(math.tanh(0.5), abs=1e-15)
    assert SqueezingParam.from_gamma(sq.gamma).r == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        SqueezingParam.from_gamma(1.0)
    with pytest.raises(ValueError):
        SqueezingParam(0.5, 0.1)


def test_tmsv_gamma_zero_is_vacuum():
    s = tmsv(0.0)
    expected = np.zeros_like(s.psi)
    expected[0, 0] = 1
    np.testing.assert_array_equal(s.psi, expected)


@pytest.mark.parametrize("g", [0.2, 0.5, 0.8])
def test_tmsv_reduced_diagonal(g):
    red = partial_trace(tmsv(g), 1)
    n = np.arange(red.shape[0])
    np.testing.assert_allclose(np.diag(red).real, (1 - g * g) * g ** (2 * n), atol=1e-10)
    np.testing.assert_allclose(red, np.diag(np.diag(red)), atol=0)


def test_tmsv_energy():
    r = 0.5
    closed = 2 * math.sinh(r) ** 2
    assert closed == pytest.approx(0.54309, abs=1e-5)
    assert mean_energy(tmsv(r=r)).mean_energy == pytest.approx(closed, abs=1e-8)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_mp_tmsv_support_and_amplitudes(k):
    g = 0.6
    s = mp_tmsv(g, k=k)
    nz = np.argwhere(np.abs(s.psi) > 0)
    assert all(i == j and i % k == 0 for i, j in nz)
    n = np.arange(len(nz))
    np.testing.assert_allclose(s.psi[k * n, k * n].real, np.sqrt(1 - g * g) * g ** n, atol=1e-10)


def test_mp_tmsv_k1_is_tmsv():
    np.testing.assert_array_equal(mp_tmsv(0.4, k=1).psi, tmsv(0.4).psi)


def test_mp_tmsv_energy():
    r = 0.5
    assert mean_energy(mp_tmsv(r=r, k=3)).mean_energy == pytest.approx(6 * math.sinh(r) ** 2, abs=1e-8)


def test_truncation_budget_errors():
    with pytest.raises(TruncationError):
        tmsv(0.9, TruncationConfig(10))
    with pytest.raises(TruncationError):
        thermal(2.0, TruncationConfig(5))
    with pytest.raises(ValueError):
        mp_tmsv(0.5, k=4, config=TruncationConfig(3))


def test_thermal_examples():
    np.testing.assert_array_equal(thermal(0.0), np.diag([1, 0]).astype(complex))
    assert purity(thermal(1.0)) == pytest.approx(1 / 3, abs=1e-10)
    for nbar in (0.1, 0.7, 2.5):
        w = np.diag(thermal(nbar)).real
        assert w @ np.arange(len(w)) == pytest.approx(nbar, abs=1e-8)
        assert purity(thermal(nbar)) == pytest.approx(1 / (2 * nbar + 1), abs=1e-9)


def test_mp_thermal_examples():
    np.testing.assert_array_equal(mp_thermal(0.4, k=1), thermal(0.4))
    rho = mp_thermal(0.4, k=3)
    populated = np.flatnonzero(np.diag(rho).real > 0)
    assert set(populated % 3) == {0}
    report = detect_sector(rho, 3)
    assert report.confined and report.sector == 0
    w = np.diag(mp_thermal(0.5, k=3, j=2)).real
    assert w @ np.arange(len(w)) == pytest.approx(3 * 0.5 + 2, abs=1e-8)
    with pytest.raises(ValueError):
        mp_thermal(0.5, k=2, j=2)


def test_product_examples():
    vac = thermal(0.0)
    p = product(vac, vac)
    assert p.rho[0, 0] == 1 and np.count_nonzero(p.rho) == 1
    r1 = thermal(0.3, TruncationConfig(40))
    r2 = thermal(0.8, TruncationConfig(40))
    state = product(r1, r2)
    assert not ppt_check(state).entangled
    assert purity(state) == pytest.approx(purity(r1) * purity(r2), abs=1e-12)
    with pytest.raises(ValueError):
        product(thermal(0.3), thermal(0.8))


@pytest.mark.parametrize(
    "state",
    [
        tmsv(0.5),
        mp_tmsv(0.5, k=3),
        product(thermal(0.5, TruncationConfig(30)), thermal(0.2, TruncationConfig(30))),
        mp_thermal(0.4, k=2),
        thermal(1.2),
    ],
    ids=["tmsv", "mp_tmsv", "product", "mp_thermal", "thermal"],
)
def test_constructors_pass_density_check(state):
    assert check_density(state).ok


@pytest.mark.parametrize("k", [1, 2, 3])
def test_pure_families_have_unit_purity(k):
    assert purity(mp_tmsv(0.7, k=k)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_gamma_for_energy(k):
    for energy in (0.5, 1.0, 2.0):
        g = gamma_for_energy(energy, k)
        assert 2 * k * g * g / (1 - g * g) == pytest.approx(energy, rel=1e-12)
        assert mean_energy(mp_tmsv(g, k=k)).mean_energy == pytest.approx(energy, abs=1e-8)


def test_number_distribution():
    d = number_distribution(1.5, k=3)
    assert d.total == pytest.approx(1.0, abs=1e-10)
    assert d.probabilities @ np.arange(len(d.probabilities)) == pytest.approx(0.5, abs=1e-8)
    ref = np.diag(thermal(0.5)).real
    n = min(len(ref), len(d.probabilities))
    np.testing.assert_allclose(d.probabilities[:n], ref[:n], atol=1e-12)
