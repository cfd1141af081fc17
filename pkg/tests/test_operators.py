from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adia.errors import DomainError
from adia.operators import (PAULI_X, HamiltonianPair, HermitianOperator, build_grover,
                            build_grover_reduced, build_qlsa, gaps_along, ground_projector,
                            interpolate, random_pair, rescale_pair, spectral_decompose)
from oracles import dense_gap, grover_gap


def diag_pair(a, b):
    return HamiltonianPair(HermitianOperator(np.diag(a)), HermitianOperator(np.diag(b)))


def test_interpolate_endpoints_are_exact():
    pair = random_pair(5, seed=1)
    assert np.array_equal(interpolate(pair, 0.0).entries, pair.h0.entries)
    assert np.array_equal(interpolate(pair, 1.0).entries, pair.h1.entries)


def test_interpolate_midpoint_of_diagonals():
    pair = diag_pair([0.0, 1.0], [1.0, 0.0])
    assert np.allclose(interpolate(pair, 0.5).entries, np.diag([0.5, 0.5]), atol=0)


@pytest.mark.parametrize("u", [-1e-9, 1.5, np.nan])
def test_interpolate_rejects_out_of_range(u):
    with pytest.raises(DomainError):
        interpolate(diag_pair([0.0, 1.0], [1.0, 0.0]), u)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 50))
def test_interpolation_is_affine(u1, u2, seed):
    pair = random_pair(3, seed)
    lhs = interpolate(pair, u1).entries + interpolate(pair, u2).entries
    rhs = 2 * interpolate(pair, (u1 + u2) / 2).entries
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_hermitian_validation():
    with pytest.raises(DomainError):
        HermitianOperator(np.array([[0, 1], [0, 0]], dtype=complex))
    with pytest.raises(DomainError):
        HermitianOperator(np.array([[1.0]]))


def test_norm_precondition_and_rescale():
    big = HermitianOperator(np.diag([0.0, 3.0]))
    with pytest.raises(DomainError):
        HamiltonianPair(big, HermitianOperator(np.eye(2)))
    pair = rescale_pair(HamiltonianPair(big, HermitianOperator(np.eye(2)), validate_norm=False))
    assert pair.h0.norm() <= 1 + 1e-12 and pair.h1.norm() <= 1 + 1e-12


@given(st.integers(2, 6), st.integers(0, 1000))
def test_diff_norm_matches_largest_eigenvalue(dim, seed):
    pair = random_pair(dim, seed)
    ref = np.max(np.abs(np.linalg.eigvalsh(pair.h1.entries - pair.h0.entries)))
    assert abs(pair.diff_norm - ref) <= 1e-10 * ref


@pytest.mark.parametrize("n,marked,s,expected", [(4, 0, 0.0, 1.0), (4, 0, 0.5, 0.5),
                                                 (16, 3, 0.5, 0.25)])
def test_grover_gap_examples(n, marked, s, expected):
    pair = build_grover(n, marked)
    assert gaps_along(pair, np.array([s]))[0] == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("n", [2, 4, 16, 64])
def test_grover_gap_matches_closed_form(n):
    s = np.linspace(0, 1, 201)
    assert np.max(np.abs(gaps_along(build_grover(n, n - 1), s) - grover_gap(s, n))) <= 1e-9


def test_grover_reduced_matches_closed_form_and_dense():
    s = np.linspace(0, 1, 201)
    red = build_grover_reduced(64)
    assert np.max(np.abs(gaps_along(red, s) - grover_gap(s, 64))) <= 1e-12
    assert red.diff_norm == pytest.approx(build_grover(64).diff_norm, rel=1e-12)


def test_grover_validation():
    with pytest.raises(DomainError):
        build_grover(1)
    with pytest.raises(DomainError):
        build_grover(4, marked=4)


def test_qlsa_identity_has_unit_gap():
    pair = build_qlsa(np.eye(2), np.array([1.0, 0.0]))
    assert pair.dim == 4
    assert np.allclose(gaps_along(pair, np.linspace(0, 1, 21)), 1.0, atol=1e-12)


def test_qlsa_gap_at_one_for_kappa_two():
    pair = build_qlsa(np.diag([1.0, 0.5]), np.array([1.0, 1.0]) / np.sqrt(2))
    assert dense_gap(pair.h0.entries, pair.h1.entries, [1.0])[0] >= 0.5 - 1e-12


def test_qlsa_gap_above_linear_lower_bound():
    pair = build_qlsa(np.diag([1.0, 0.25]), np.array([1.0, 0.0]))
    s = np.linspace(0, 1, 101)
    gaps = dense_gap(pair.h0.entries, pair.h1.entries, s)
    assert np.all(gaps >= 1 - s + s / 4 - 1e-9)


@pytest.mark.parametrize("a,b", [
    (np.array([[1, 1j], [0, 1]]), np.array([1.0, 0.0])),
    (np.diag([1.0, 0.0]), np.array([1.0, 0.0])),
    (np.diag([1.0, 0.5]), np.array([1.0, 1.0])),
    (np.diag([2.0, 0.5]), np.array([1.0, 0.0])),
])
def test_qlsa_validation(a, b):
    with pytest.raises(DomainError):
        build_qlsa(a, b)


def test_spectral_decompose_examples():
    dec = spectral_decompose(HermitianOperator(np.diag([3.0, 1.0, 2.0])))
    assert np.allclose(dec.eigenvalues, [1, 2, 3])
    assert np.allclose(spectral_decompose(HermitianOperator(PAULI_X)).eigenvalues, [-1, 1])


@given(st.integers(0, 10_000))
def test_spectral_decompose_reconstructs(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    h = (x + x.conj().T) / 2
    dec = spectral_decompose(HermitianOperator(h))
    v, w = dec.eigenvectors, dec.eigenvalues
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - h) <= 1e-9 * np.linalg.norm(h, 2)
    assert np.max(np.abs(v.conj().T @ v - np.eye(8))) <= 1e-10


def test_ground_projector_examples():
    p = ground_projector(spectral_decompose(HermitianOperator(np.diag([0.0, 1.0]))), 1e-8)
    assert np.allclose(p.entries, np.diag([1, 0]))
    p = ground_projector(spectral_decompose(HermitianOperator(np.diag([0.0, 0.0, 1.0]))), 1e-8)
    assert np.allclose(p.entries, np.diag([1, 1, 0]))
    p = ground_projector(spectral_decompose(interpolate(build_grover(4), 0.5)))
    assert np.trace(p.entries).real == pytest.approx(1.0, abs=1e-10)


@given(st.integers(2, 7), st.integers(0, 1000), st.floats(0, 1))
def test_ground_projector_is_idempotent(dim, seed, u):
    p = ground_projector(spectral_decompose(interpolate(random_pair(dim, seed), u))).entries
    assert np.linalg.norm(p @ p - p, 2) <= 1e-10
    assert np.max(np.abs(p - p.conj().T)) <= 1e-10


@given(st.integers(2, 6), st.integers(0, 1000))
def test_gap_is_lipschitz_in_u(dim, seed):
    pair = random_pair(dim, seed)
    u = np.linspace(0, 1 - 1e-4, 101)
    d = gaps_along(pair, u) - gaps_along(pair, u + 1e-4)
    assert np.all(np.abs(d) <= 2 * pair.diff_norm * 1e-4 + 1e-8)
