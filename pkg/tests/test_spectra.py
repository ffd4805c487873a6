"""Tests for the certified eigensolver and spectral set utilities."""

import numpy as np
import pytest

from eigenop.basis import TruncatedBasis
from eigenop.generator import OperatorMatrix
from eigenop.spectra import (
    EigensolveError,
    eig,
    eig_matrix,
    hausdorff_distance,
    match_multisets,
    matrix_norm_estimate,
    sort_by_target,
)


def test_matrix_norm_estimate_matches_svd():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
    exact = np.linalg.norm(A, ord=2)
    assert matrix_norm_estimate(A) == pytest.approx(exact, rel=1e-6)


def test_matrix_norm_estimate_deterministic():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((15, 15))
    assert matrix_norm_estimate(A) == matrix_norm_estimate(A.copy())


def test_eig_matrix_diagonal_exact():
    lam = np.array([2.0, -1.0, 0.5j])
    report = eig_matrix(np.diag(lam))
    matched, worst = match_multisets(report.eigenvalues, lam, 1e-12)
    assert matched
    assert np.max(report.residuals) < 1e-12


def test_eig_matrix_residuals_recomputed_independently():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    report = eig_matrix(A)
    scale = np.linalg.norm(A, ord=2)
    for lam, v, r in zip(report.eigenvalues, report.eigenvectors.T, report.residuals):
        direct = np.linalg.norm(A @ v - lam * v) / scale
        assert direct == pytest.approx(r, rel=1e-3, abs=1e-14)


def test_eig_matrix_rejects_non_square():
    with pytest.raises(ValueError):
        eig_matrix(np.zeros((2, 3)))


def test_residual_contract_violation_raises():
    # Rounding makes residuals of a generic matrix nonzero, so an absurd
    # tolerance must trip the contract and carry the residuals.
    rng = np.random.default_rng(9)
    A = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    with pytest.raises(EigensolveError) as info:
        eig_matrix(A, tol=1e-300)
    assert info.value.residuals is not None


def test_eig_on_operator_matrix_carries_provenance():
    basis = TruncatedBasis((1,), ("fiber",))
    op = OperatorMatrix(basis, basis, np.diag([1.0, 2.0, 3.0]).astype(complex), "generator")
    report = eig(op)
    assert report.source == "generator"
    assert sorted(report.eigenvalues.real) == pytest.approx([1.0, 2.0, 3.0])


def test_sort_by_target_orders_by_distance():
    report = eig_matrix(np.diag([3.0, 1.0, 2.0]).astype(complex))
    ordered = sort_by_target(report, target=1.1)
    assert np.allclose(ordered.eigenvalues.real, [1.0, 2.0, 3.0])
    assert ordered.sort_rule.startswith("target:")


def test_sort_by_target_tie_break_is_lexicographic():
    report = eig_matrix(np.diag([1j, -1j, 0.0]).astype(complex))
    ordered = sort_by_target(report, target=0.0)
    assert ordered.eigenvalues[0] == pytest.approx(0.0)
    assert ordered.eigenvalues[1].imag < ordered.eigenvalues[2].imag


def test_match_multisets_success_and_failure():
    computed = [1.0 + 0j, 2.0 + 0j, 3.0 + 0j]
    ok, worst = match_multisets(computed, [1.0, 3.0], 1e-9)
    assert ok and worst < 1e-12
    ok, worst = match_multisets(computed, [10.0], 1e-9)
    assert not ok and worst == pytest.approx(7.0)


def test_match_multisets_respects_multiplicity():
    ok, _ = match_multisets([1.0 + 0j, 2.0 + 0j], [1.0, 1.0], 1e-6)
    assert not ok


def test_match_multisets_reference_larger_fails():
    ok, worst = match_multisets([1.0 + 0j], [1.0, 2.0], 1e-6)
    assert not ok and not np.isfinite(worst)


def test_hausdorff_distance_symmetric_and_zero_on_equal():
    a = np.array([0.0, 1.0 + 1j])
    b = np.array([1.0 + 1j, 0.0])
    assert hausdorff_distance(a, b) == 0.0
    c = np.array([0.0, 2.0 + 1j])
    assert hausdorff_distance(a, c) == pytest.approx(1.0)
    assert hausdorff_distance(c, a) == pytest.approx(1.0)


def test_hausdorff_distance_empty_sets():
    assert hausdorff_distance([], []) == 0.0
    assert not np.isfinite(hausdorff_distance([], [1.0]))


def test_spectrum_report_json_round_trip():
    report = eig_matrix(np.diag([1.0 + 2.0j]).astype(complex))
    doc = report.to_json_dict()
    assert doc["eigenvalues"] == [[1.0, 2.0]]
    assert doc["tolerance"] == report.tolerance
