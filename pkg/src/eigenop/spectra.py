"""Dense complex eigensolution with independent residual certification.

Eigenpairs come from the standard dense nonsymmetric solver; residuals
are recomputed from scratch afterwards and the matrix norm entering the
relative residual is estimated by a deterministic power iteration, so
the certificate does not trust solver internals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .generator import OperatorMatrix


class EigensolveError(RuntimeError):
    """Solver failure; carries partial residual diagnostics."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True)
class SpectrumReport:
    """Certified eigenpair set of one operator matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, unit norm
    residuals: np.ndarray  # per-pair ||A v - lambda v|| / ||A||
    tolerance: float
    sort_rule: str
    source: str
    meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def to_json_dict(self) -> dict:
        return {
            "eigenvalues": [[float(l.real), float(l.imag)] for l in self.eigenvalues],
            "residuals": [float(r) for r in self.residuals],
            "tolerance": float(self.tolerance),
            "sort_rule": self.sort_rule,
            "source": self.source,
            "meta": self.meta,
        }


def matrix_norm_estimate(A: np.ndarray, iterations: int = 50) -> float:
    """Deterministic power-iteration estimate of the spectral norm."""
    n = A.shape[0]
    if n == 0:
        return 0.0
    # Fixed, seed-free start vector keeps reruns byte-identical.
    v = np.cos(np.arange(1, n + 1, dtype=float)) + 1j * np.sin(np.arange(1, n + 1, dtype=float) / 3.0)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(iterations):
        w = A.conj().T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        sigma = np.sqrt(nw)
        v = w / nw
    return float(sigma)


def eig(A: OperatorMatrix, tol: float = 1e-8) -> SpectrumReport:
    """Full eigenpair set of a square operator with certified residuals."""
    if not A.is_square:
        raise ValueError("eigensolve requires a square operator")
    return eig_matrix(A.entries, tol=tol, source=A.provenance, meta=dict(A.meta))


def eig_matrix(M: np.ndarray, tol: float = 1e-8, source: str = "matrix", meta: dict | None = None) -> SpectrumReport:
    """eig on a raw square array; same residual contract."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("eigensolve requires a square matrix")
    try:
        values, vectors = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise EigensolveError(f"dense eigensolve failed: {exc}") from exc

    norms = np.linalg.norm(vectors, axis=0)
    if np.any(norms == 0):
        raise EigensolveError("eigensolver returned a zero vector")
    vectors = vectors / norms[None, :]

    scale = matrix_norm_estimate(M)
    if scale == 0.0:
        scale = 1.0
    residuals = np.linalg.norm(M @ vectors - vectors * values[None, :], axis=0) / scale
    if np.any(residuals > tol):
        raise EigensolveError(
            f"residual contract violated: max {residuals.max():.3e} > {tol:.3e}",
            residuals=residuals,
        )
    return SpectrumReport(
        eigenvalues=values,
        eigenvectors=vectors,
        residuals=residuals,
        tolerance=tol,
        sort_rule="unsorted",
        source=source,
        meta=meta or {},
    )


def sort_by_target(report: SpectrumReport, target: complex = 1e-10) -> SpectrumReport:
    """Ascending distance to the target; ties by (Im, Re) lexicographic."""
    lam = report.eigenvalues
    order = np.lexsort((lam.real, lam.imag, np.abs(lam - target)))
    return SpectrumReport(
        eigenvalues=lam[order],
        eigenvectors=report.eigenvectors[:, order],
        residuals=report.residuals[order],
        tolerance=report.tolerance,
        sort_rule=f"target:{target!r}",
        source=report.source,
        meta=report.meta,
    )


def match_multisets(computed, reference, tol: float) -> tuple[bool, float]:
    """Greedy minimal-weight matching of two eigenvalue multisets.

    Returns (all matched within tol, worst matched distance). Greedy by
    globally smallest remaining pair distance; deterministic.
    """
    computed = list(np.asarray(computed, dtype=complex))
    reference = list(np.asarray(reference, dtype=complex))
    if len(reference) > len(computed):
        return False, np.inf
    worst = 0.0
    avail = np.ones(len(computed), dtype=bool)
    for r in sorted(reference, key=lambda z: (z.imag, z.real)):
        dists = np.array([abs(c - r) if a else np.inf for c, a in zip(computed, avail)])
        k = int(np.argmin(dists))
        if not np.isfinite(dists[k]):
            return False, np.inf
        worst = max(worst, float(dists[k]))
        avail[k] = False
    return worst <= tol, worst


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point sets in the plane."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return np.inf
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))
