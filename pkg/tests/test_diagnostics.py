import numpy as np
import pytest

from wigner_mra.diagnostics import (
    REPORT_COLUMNS,
    boundary_mass,
    cat_state,
    coherent_state,
    compare,
    ground_state,
    harmonic_potential,
    mass_radius,
    negativity_volume,
    oracle_harmonic,
    purity,
    report,
)
from wigner_mra.moyal import GridMismatchError, PhaseSpaceGrid

G = PhaseSpaceGrid()


def test_ground_state_report():
    r = report(ground_state(G), harmonic_potential())
    assert abs(r.normalization - 1) <= 1e-6
    assert abs(r.purity - 1) <= 1e-4
    assert r.negativity_volume <= 1e-10
    assert abs(r.energy - 0.5) <= 1e-6
    # position marginal of the ground state is exp(-q^2)/sqrt(pi)
    assert np.max(np.abs(r.position_marginal - np.exp(-G.q**2) / np.sqrt(np.pi))) <= 1e-4
    assert len(r.row()) == len(REPORT_COLUMNS)


def test_cat_is_negative():
    assert negativity_volume(cat_state(G, 2.0)) > 0.05


def test_scaling_by_two():
    W = coherent_state(G, 1.0, -0.5)
    W2 = W * 2.0
    assert W2.normalization() == pytest.approx(2 * W.normalization(), rel=1e-14)
    assert purity(W2) == pytest.approx(4 * purity(W), rel=1e-14)


def test_oracle():
    a = oracle_harmonic(1.0, 0.5, 1.3, 0.0, G)
    b = oracle_harmonic(1.0, 0.5, 1.3, 2 * np.pi / 1.3, G)
    assert compare(a, b) <= 1e-14
    assert compare(a, coherent_state(G, 1.0, 0.5, 1.3)) <= 1e-14
    half = oracle_harmonic(1.0, 0.0, 1.0, np.pi, G)
    assert compare(half, coherent_state(G, -1.0, 0.0)) <= 1e-12


def test_compare():
    W = coherent_state(G, 0.3, 0.0)
    assert compare(W, W) == 0.0
    assert compare(W, W * -1.0) == 2.0
    assert compare(W * 0.0, W * 0.0) == 0.0
    with pytest.raises(GridMismatchError):
        compare(W, coherent_state(PhaseSpaceGrid(Jq=6, Jp=6), 0, 0))


def test_radius_and_boundary():
    W = ground_state(G)
    r = mass_radius(W, 0.95)
    # |W| for the ground state: mass inside radius r is 1 - exp(-r^2)
    assert abs(r - np.sqrt(-np.log(0.05))) <= 2 * G.dq
    assert boundary_mass(W, 4) <= 1e-20
    far = coherent_state(G, -7.9, 0.0)
    assert boundary_mass(far, 4) > 0.1


def test_patterns():
    r = report(cat_state(G, 2.0), harmonic_potential())
    assert r.is_entangled_pattern and not r.is_decoherent_pattern
    assert report(ground_state(G), harmonic_potential()).is_decoherent_pattern
