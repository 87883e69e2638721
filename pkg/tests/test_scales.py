import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wigner_mra.diagnostics import cat_state, coherent_state
from wigner_mra.moyal import CoefficientField, GridMismatchError, PhaseSpaceGrid
from wigner_mra.scales import (
    FockStateList,
    TwoParticleField,
    decompose,
    energy_table,
    fock_difference,
    fock_norm,
    restrict,
    slow_fast_split,
    timeseries_split,
)
from wigner_mra.transform import TransformError, fwt_inverse_2d

G = PhaseSpaceGrid(Jq=6, Jp=6)


def test_constant_field_has_no_detail_energy():
    dec = decompose(CoefficientField(G, np.ones(G.shape)))
    assert max(dec.energy_per_level.values()) <= 1e-20


def test_smooth_gaussian_fine_level_small():
    g = PhaseSpaceGrid()
    f = coherent_state(g, 0.0, 0.0)
    dec = decompose(f, "daubechies-6")
    assert dec.energy_per_level[g.Jq - 1] <= 1e-6 * dec.total_energy


def test_single_basis_function():
    dec = decompose(CoefficientField(G, np.zeros(G.shape)))
    blocks = {j: tuple(np.zeros_like(x) for x in b) for j, b in dec.detail_blocks.items()}
    blocks[4][2][3, 5] = 1.0
    W = fwt_inverse_2d(dec.copy_with(details=blocks), "daubechies-6")
    energies = decompose(CoefficientField(G, W)).energy_per_level
    assert energies[4] == pytest.approx(1.0, abs=1e-12)
    assert sum(energies.values()) == pytest.approx(1.0, abs=1e-12)


def test_split_recovers_summands():
    rng = np.random.default_rng(9)
    dec = decompose(CoefficientField(G, rng.standard_normal(G.shape)))
    zero = {j: tuple(np.zeros_like(x) for x in b) for j, b in dec.detail_blocks.items()}
    slow = fwt_inverse_2d(dec.copy_with(details={**dec.detail_blocks, 5: zero[5]}), "daubechies-6")
    one = {j: tuple(np.zeros_like(x) for x in b) for j, b in dec.detail_blocks.items()}
    one[5][0][10, 7] = 0.3
    fast = fwt_inverse_2d(dec.copy_with(coarse=np.zeros_like(dec.coarse_block), details=one), "daubechies-6")
    s = slow_fast_split(CoefficientField(G, slow + fast), "daubechies-6", 5)
    assert np.max(np.abs(s.fast_parts[0].component.data - fast)) <= 1e-10
    assert np.max(np.abs(s.slow_part.data - slow)) <= 1e-10
    assert s.fast_parts[0].frequency == 32
    assert s.reconstruction_error <= 1e-10


@given(st.integers(0, 2**16), st.integers(0, 5))
def test_split_invariants(seed, n_slow):
    f = CoefficientField(G, np.random.default_rng(seed).standard_normal(G.shape))
    s = slow_fast_split(f, "daubechies-4", n_slow)
    e = np.sum(f.data**2) * G.cell
    assert s.reconstruction_error <= 1e-10
    assert abs(s.total_energy - e) <= 1e-10 * e
    assert np.allclose(s.reconstruct().data, f.data, atol=1e-10)


def test_split_level_range():
    f = CoefficientField(G, np.zeros(G.shape))
    with pytest.raises(TransformError):
        slow_fast_split(f, "daubechies-6", 6)


def test_cat_has_fast_energy():
    s = slow_fast_split(cat_state(PhaseSpaceGrid(), 2.0), "daubechies-6", 4)
    assert s.fast_fraction > 0
    rows = energy_table(decompose(cat_state(G, 2.0)), G.cell)
    assert rows[0][0] == "coarse" and abs(sum(r[2] for r in rows) - 1) <= 1e-12


def test_timeseries_split():
    t = np.linspace(0, 1, 256, endpoint=False)
    x = np.sin(2 * np.pi * t) + 0.01 * np.sin(2 * np.pi * 64 * t)
    slow, fast = timeseries_split(x, "daubechies-6", 3)
    assert np.allclose(slow + sum(fast.values()), x, atol=1e-12)


def test_fock_norm_examples():
    assert fock_norm(FockStateList(3.0, [])) == 3.0
    assert fock_norm(FockStateList(0.0, [CoefficientField(G, np.zeros(G.shape))])) == 0.0
    one = CoefficientField(G, np.ones(G.shape))
    area = G.Lq * G.Lp
    assert fock_norm(FockStateList(0.0, [one])) == pytest.approx(np.sqrt(area), rel=1e-14)
    assert fock_norm(FockStateList(0.0, [one], weights=[2.0])) == pytest.approx(np.sqrt(2 * G.Nq * G.Np))


@given(st.integers(0, 2**16), st.floats(-5, 5).filter(lambda x: x == 0 or abs(x) > 1e-6))
def test_fock_norm_properties(seed, scale):
    rng = np.random.default_rng(seed)
    a = CoefficientField(G, rng.standard_normal(G.shape))
    pair = TwoParticleField(G, rng.standard_normal(G.shape * 2) * 0.1)
    s = FockStateList(rng.standard_normal(), [a, pair])
    n = fock_norm(s)
    assert n >= 0
    assert fock_norm(s.scaled(scale)) == pytest.approx(abs(scale) * n, rel=1e-12, abs=1e-300)
    t = FockStateList(rng.standard_normal(), [CoefficientField(G, rng.standard_normal(G.shape)), pair])
    assert fock_norm(s + t) <= fock_norm(s) + fock_norm(t) + 1e-12
    assert fock_norm(s - s) == 0.0
    both = fock_norm(FockStateList(s.w0, [a, pair])) ** 2
    parts = s.w0**2 + fock_norm(FockStateList(0.0, [a])) ** 2 + fock_norm(FockStateList(0.0, [pair])) ** 2
    assert abs(both - parts) <= 1e-12 * parts


def test_restrict_and_difference():
    fine = PhaseSpaceGrid(Jq=7, Jp=7)
    coarse = PhaseSpaceGrid(Jq=6, Jp=6)
    f = coherent_state(fine, 0.5, 0.0)
    r = restrict(f, coarse)
    assert np.array_equal(r.data, coherent_state(coarse, 0.5, 0.0).data)
    assert fock_difference(f, coherent_state(coarse, 0.5, 0.0)) == 0.0
    with pytest.raises(GridMismatchError):
        restrict(r, fine)
    with pytest.raises(GridMismatchError):
        restrict(f, PhaseSpaceGrid(q0=-6, Lq=12, Jq=6, Jp=6))
