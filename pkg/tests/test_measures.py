import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kphoton.fock import TruncationConfig, partial_trace
from kphoton.measures import (
    entanglement_entropy,
    mean_energy,
    p_min,
    purity,
    thermal_entropy,
    von_neumann_entropy,
)
from kphoton.multiphoton import compress_to_sector
from kphoton.states import mp_thermal, mp_tmsv, product, thermal, tmsv

from .conftest import ket_state, random_density


def test_entropy_examples():
    assert von_neumann_entropy(ket_state({(1, 2): 1}, 3)) == 0.0
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(math.log(2), abs=1e-15)


def test_entropy_reduced_tmsv():
    r = 1.0
    c, s = math.cosh(r) ** 2, math.sinh(r) ** 2
    closed = c * math.log(c) - s * math.log(s)
    g2 = math.tanh(r) ** 2
    series = -sum(
        (1 - g2) * g2**n * math.log((1 - g2) * g2**n) for n in range(400)
    )
    assert closed == pytest.approx(series, abs=1e-12)
    state = tmsv(r=r)
    assert von_neumann_entropy(partial_trace(state, 1)) == pytest.approx(closed, abs=1e-8)
    assert entanglement_entropy(state) == pytest.approx(closed, abs=1e-8)
    assert thermal_entropy(s) == pytest.approx(closed, abs=1e-12)


def test_entropy_is_non_negative(rng):
    for dim in (2, 5, 9):
        assert von_neumann_entropy(random_density(dim, rng, rank=1)) >= 0


def test_purity_examples():
    assert purity(ket_state({(0, 1): 1, (1, 0): 1}, 2)) == pytest.approx(1.0)
    assert purity(thermal(1.0)) == pytest.approx(1 / 3, abs=1e-10)
    for k in (2, 3):
        assert purity(mp_thermal(0.8, k=k)) == pytest.approx(purity(thermal(0.8)), abs=1e-14)


def test_purity_invariant_under_compression():
    rho = mp_thermal(0.6, k=3, j=1)
    assert purity(compress_to_sector(rho, 3, 1).state) == pytest.approx(purity(rho), abs=1e-14)


def test_energy_examples():
    vac = ket_state({(0, 0): 1}, 2)
    report = mean_energy(vac)
    assert report.mean_energy == 0 and report.per_mode == (0, 0)
    r = 0.5
    for k in (1, 3):
        report = mean_energy(mp_tmsv(r=r, k=k))
        assert report.mean_energy == pytest.approx(k * 2 * math.sinh(r) ** 2, abs=1e-8)
        assert report.mean_energy == pytest.approx(sum(report.per_mode))
        assert report.per_mode[0] == pytest.approx(report.per_mode[1])


def test_p_min_examples():
    assert p_min(1, 1) == 0.25
    assert p_min(1, 2) == pytest.approx(4 / 9)
    assert p_min(1, 3) == pytest.approx(0.5625)
    with pytest.raises(ValueError):
        p_min(-1, 1)


@given(st.floats(0.01, 20), st.integers(1, 50))
def test_p_min_increases_with_k(energy, k):
    assert p_min(energy, k + 1) > p_min(energy, k)
    assert p_min(energy, k) < 1


def test_p_min_tends_to_one():
    assert p_min(2.0, 10**6) == pytest.approx(1.0, abs=1e-5)


def test_p_min_attained_by_equal_split_product():
    energy, k = 1.0, 3
    nu = energy / (2 * k)
    cfg = TruncationConfig(60)
    state = product(mp_thermal(nu, k, config=cfg), mp_thermal(nu, k, config=cfg))
    assert mean_energy(state).mean_energy == pytest.approx(energy, abs=1e-9)
    assert purity(state) == pytest.approx(p_min(energy, k), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 0.85), st.sampled_from([2, 3]))
def test_reduced_entropy_independent_of_k(g, k):
    assert abs(entanglement_entropy(tmsv(g)) - entanglement_entropy(mp_tmsv(g, k=k))) <= 1e-10
