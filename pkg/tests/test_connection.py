from math import factorial

import numpy as np
import pytest

from wigner_mra.connection import (
    BandOverlapError,
    InadmissibleOrderError,
    connection_coefficients,
    derivative_matrix,
    derivative_stencil,
    point_values,
    split_order,
    window_integrals,
)
from wigner_mra.wavelets import cascade_table


def test_haar_gram_is_identity():
    t = connection_coefficients("haar", 0, 0)
    assert t.values == {0: 1.0} or all(abs(v - (k == 0)) <= 1e-14 for k, v in t.values.items())


def test_db3_first_derivative_moments():
    t = connection_coefficients("daubechies-3", 0, 1)
    assert abs(t.moment(0)) <= 1e-8
    assert abs(t.moment(1) + 1) <= 1e-8


def test_db3_against_quadrature():
    # Gamma_k = int phi(x - k) phi'(x) dx, by cascade tables at J=12
    J = 12
    tab = cascade_table("daubechies-3", J)
    phi = tab.phi_values
    dphi = np.gradient(phi, 1 / 2**J)
    t = connection_coefficients("daubechies-3", 0, 1)
    step = 2**J
    for k, v in t.values.items():
        s = np.zeros_like(phi)
        if k >= 0:
            s[k * step :] = phi[: phi.size - k * step]
        else:
            s[: phi.size + k * step] = phi[-k * step :]
        assert abs(np.sum(s * dphi) / step - v) <= 5e-3


@pytest.mark.parametrize("fam,d", [("daubechies-4", 1), ("daubechies-6", 2), ("daubechies-6", 3), ("daubechies-10", 5)])
def test_moment_rule(fam, d):
    shifts, vals = derivative_stencil(fam, d)
    assert abs(np.sum(shifts.astype(float) ** d * vals) - (-1) ** d * factorial(d)) <= 1e-8
    assert np.max(np.abs(shifts)) <= 2 * int(fam.split("-")[1]) - 2
    for m in range(d):
        assert abs(np.sum(shifts.astype(float) ** m * vals)) <= 1e-8


def test_split():
    assert [split_order(d) for d in (1, 2, 3, 5)] == [(0, 1), (1, 1), (1, 2), (2, 3)]


def test_inadmissible_orders():
    with pytest.raises(InadmissibleOrderError, match="haar|smooth"):
        connection_coefficients("haar", 0, 1)
    with pytest.raises(InadmissibleOrderError):
        derivative_stencil("daubechies-2", 1)
    with pytest.raises(InadmissibleOrderError):
        derivative_stencil("daubechies-8", 5)


def test_band_overlap():
    with pytest.raises(BandOverlapError):
        derivative_matrix("daubechies-6", 1, 4)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_matrix_structure(d):
    D = derivative_matrix("daubechies-6", d, 6, 2.0)
    A = D.dense()
    assert np.array_equal(A.T, (-1) ** d * A)
    assert np.max(np.abs(A.sum(axis=1))) <= 1e-10 * np.max(np.abs(A))
    assert np.array_equal(np.roll(A[0], 1), A[1])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_sin_mode(d):
    N, L = 256, 3.0
    q = np.arange(N) * L / N
    k = 2 * np.pi / L
    exact = k**d * np.sin(k * q + d * np.pi / 2)
    got = derivative_matrix("daubechies-6", d, 8, L).apply(np.sin(k * q))
    assert np.linalg.norm(got - exact) / np.linalg.norm(exact) <= 1e-4


def test_accuracy_improves_with_order():
    N = 256
    q = np.arange(N) / N
    k = 2 * np.pi * 20
    errs = []
    for fam in ("daubechies-4", "daubechies-6", "daubechies-8"):
        got = derivative_matrix(fam, 1, 8).apply(np.sin(k * q))
        errs.append(np.linalg.norm(got - k * np.cos(k * q)) / np.linalg.norm(k * np.cos(k * q)))
    assert errs[0] > errs[1] > errs[2]


def test_second_derivative_matches_square_on_smooth_input():
    D1 = derivative_matrix("daubechies-8", 1, 8).dense()
    D2 = derivative_matrix("daubechies-8", 2, 8).dense()
    q = np.arange(256) / 256
    rng = np.random.default_rng(0)
    x = sum(rng.standard_normal() * np.cos(2 * np.pi * m * q + rng.uniform(0, 6)) for m in range(1, 9))
    assert np.linalg.norm(D2 @ x - D1 @ D1 @ x) / np.linalg.norm(D2 @ x) <= 1e-6


def test_apply_along_axis():
    D = derivative_matrix("daubechies-4", 1, 5)
    X = np.random.default_rng(1).standard_normal((32, 3))
    assert np.allclose(D.apply(X, axis=0), D.dense() @ X)
    assert np.allclose(D.apply(X.T, axis=1), (D.dense() @ X).T)


def test_table_csv():
    text = connection_coefficients("daubechies-3", 0, 1).to_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "shift,value"
    assert len(lines) == 1 + 2 * (2 * 3 - 2) + 1


def test_window_integrals_gram_and_derivative():
    idx, gram, deriv = window_integrals("daubechies-5", 24)
    # integrals of phi_i over the window: constants are reproduced exactly
    assert gram.shape == deriv.shape == (idx.size, idx.size)
    assert np.allclose(gram, gram.T, atol=1e-12)
    ones = np.ones(idx.size)
    # d/dt of the constant vanishes, so every Galerkin row of deriv annihilates it
    assert np.max(np.abs(deriv @ ones)) <= 1e-10
    # partition of unity at the window ends
    assert abs(point_values("daubechies-5", idx, 0).sum() - 1) <= 1e-12
    assert abs(point_values("daubechies-5", idx, 24).sum() - 1) <= 1e-12
