"""Singular values, Ky Fan k-norms, majorization, and Hermitian spectral calculus.

Everything is computed through the unfolding bijection, which preserves
singular values, so the spectral theory of grouped-index tensors is the
spectral theory of their unfolded matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .tensor_core import (
    DenseTensor,
    ShapeMismatchError,
    TensorShape,
    einstein_product,
    fold,
    hermiticity_residual,
    max_abs,
    tensor_power,
    unfold,
)

__all__ = [
    "SpectralDecomposition",
    "EigDecomposition",
    "NotHermitianError",
    "SpectralDomainError",
    "svd",
    "singular_values",
    "ky_fan_norm",
    "weakly_majorizes",
    "herm_eig",
    "spectral_function",
    "is_positive_definite",
    "loewner_geq",
    "max_eigenvalue",
    "min_eigenvalue",
    "power_norm_subadditivity_check",
]

STRUCTURAL_TOL = 1e-10
INEQUALITY_SLACK = 1e-9


class NotHermitianError(ValueError):
    """Operation requires a Hermitian tensor."""


class SpectralDomainError(ValueError):
    """Scalar function is undefined at an eigenvalue of the argument."""


@dataclass(frozen=True)
class SpectralDecomposition:
    """unfold(A) = left_factor @ diag_rect(sigma) @ right_factor^H.

    Both factors are square unitary matrices (full SVD); sigma holds the
    min(row_size, col_size) singular values in descending order.
    """

    sigma: np.ndarray
    left_factor: np.ndarray
    right_factor: np.ndarray

    def reconstruct(self) -> np.ndarray:
        rows = self.left_factor.shape[0]
        cols = self.right_factor.shape[0]
        core = np.zeros((rows, cols), dtype=np.complex128)
        r = len(self.sigma)
        core[:r, :r] = np.diag(self.sigma)
        return self.left_factor @ core @ self.right_factor.conj().T


@dataclass(frozen=True)
class EigDecomposition:
    """H = sum_i lambda_i U_i * U_i^H with an orthonormal eigentensor family.

    Eigenvalues are real and sorted descending (stable ties); eigentensors
    have shape (row_dims) x (1) so the rank-one products are square.
    """

    lambdas: np.ndarray
    eigentensors: tuple[DenseTensor, ...]


def _finite_or_raise(a: DenseTensor) -> None:
    # DenseTensor already rejects non-finite entries on construction; this
    # guards arrays smuggled in through views.
    if not np.all(np.isfinite(a.data.view(np.float64))):
        raise ValueError("tensor entries must be finite")


def svd(a: DenseTensor) -> SpectralDecomposition:
    """Full SVD of the unfolded matrix, singular values descending."""
    _finite_or_raise(a)
    u, s, vh = np.linalg.svd(unfold(a), full_matrices=True)
    return SpectralDecomposition(sigma=s, left_factor=u, right_factor=vh.conj().T)


def singular_values(a: DenseTensor) -> np.ndarray:
    """Descending singular values; length min(row_size, col_size)."""
    _finite_or_raise(a)
    return np.linalg.svd(unfold(a), compute_uv=False)


def ky_fan_norm(a: DenseTensor, k: int) -> float:
    """Sum of the k largest singular values.

    k = 1 is the spectral norm, k = min(row_size, col_size) the nuclear norm.
    """
    k = int(k)
    k_max = min(a.shape.row_size, a.shape.col_size)
    if not 1 <= k <= k_max:
        raise ValueError(f"ky_fan_norm: k must be in [1, {k_max}], got {k}")
    return float(np.sum(singular_values(a)[:k]))


def weakly_majorizes(a: Sequence[float], b: Sequence[float], tol: float = 1e-12) -> bool:
    """True iff every prefix sum of descending-sorted b is <= that of a (+ tol)."""
    av = np.sort(np.asarray(a, dtype=float))[::-1]
    bv = np.sort(np.asarray(b, dtype=float))[::-1]
    if av.shape != bv.shape:
        raise ShapeMismatchError(
            f"weakly_majorizes: lengths differ, {len(av)} vs {len(bv)}"
        )
    return bool(np.all(np.cumsum(bv) <= np.cumsum(av) + tol))


def _require_hermitian(h: DenseTensor, op: str, tol: float = STRUCTURAL_TOL) -> None:
    if not h.shape.is_square:
        raise NotHermitianError(f"{op}: tensor is not square, shape {h.shape}")
    res = hermiticity_residual(h)
    if res > tol * (1.0 + max_abs(h)):
        raise NotHermitianError(f"{op}: tensor is not Hermitian, max|H - H^H| = {res:.3e}")


def herm_eig(h: DenseTensor) -> EigDecomposition:
    """Eigendecomposition of a Hermitian tensor into rank-one eigentensors."""
    _require_hermitian(h, "herm_eig")
    lam, vecs = np.linalg.eigh(unfold(h))
    order = np.argsort(-lam, kind="stable")
    lam = lam[order]
    vecs = vecs[:, order]
    vec_shape = TensorShape(h.shape.row_dims, (1,))
    tensors = tuple(
        DenseTensor(vec_shape, vecs[:, i].reshape(vec_shape.full_dims))
        for i in range(vecs.shape[1])
    )
    return EigDecomposition(lambdas=lam, eigentensors=tensors)


def _herm_eigvals(h: DenseTensor, op: str) -> np.ndarray:
    _require_hermitian(h, op)
    return np.linalg.eigvalsh(unfold(h))


def spectral_function(h: DenseTensor, f: Callable[[float], float]) -> DenseTensor:
    """Apply a scalar function to a Hermitian tensor through its eigenvalues.

    The result has eigenvalues f(lambda_i) with the same eigentensors; f must
    be defined (finite) at every eigenvalue of h.
    """
    _require_hermitian(h, "spectral_function")
    lam, vecs = np.linalg.eigh(unfold(h))
    mapped = np.empty_like(lam)
    for i, x in enumerate(lam):
        try:
            with np.errstate(invalid="ignore", divide="ignore"):
                y = float(f(float(x)))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise SpectralDomainError(f"f undefined at eigenvalue {x!r}: {exc}") from exc
        if not np.isfinite(y):
            raise SpectralDomainError(f"f non-finite at eigenvalue {x!r}: f = {y!r}")
        mapped[i] = y
    out = (vecs * mapped) @ vecs.conj().T
    return fold(out, h.shape)


def min_eigenvalue(h: DenseTensor) -> float:
    return float(_herm_eigvals(h, "min_eigenvalue")[0])


def max_eigenvalue(h: DenseTensor) -> float:
    return float(_herm_eigvals(h, "max_eigenvalue")[-1])


def is_positive_definite(h: DenseTensor, tol: float = STRUCTURAL_TOL) -> bool:
    """True iff every eigenvalue of the Hermitian tensor exceeds tol."""
    return min_eigenvalue(h) > tol


def loewner_geq(a: DenseTensor, b: DenseTensor, tol: float = INEQUALITY_SLACK) -> bool:
    """Loewner order a >= b: min eigenvalue of (a - b) is >= -tol."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"loewner_geq: shapes differ, {a.shape} vs {b.shape}")
    return min_eigenvalue(a - b) >= -tol


def power_norm_subadditivity_check(
    a: DenseTensor, b: DenseTensor, n: int, k: int, slack: float = INEQUALITY_SLACK
) -> bool:
    """Check ||(A+B)^n||_(k)^(1/n) <= ||A^n||_(k)^(1/n) + ||B^n||_(k)^(1/n) + slack.

    Both arguments must be positive definite.
    """
    for name, t in (("A", a), ("B", b)):
        if not is_positive_definite(t):
            raise ValueError(f"power_norm_subadditivity_check: {name} is not positive definite")
    n = int(n)
    if n < 1:
        raise ValueError(f"power exponent must be >= 1, got {n}")
    lhs = ky_fan_norm(tensor_power(a + b, n), k) ** (1.0 / n)
    rhs = ky_fan_norm(tensor_power(a, n), k) ** (1.0 / n) + ky_fan_norm(
        tensor_power(b, n), k
    ) ** (1.0 / n)
    return lhs <= rhs + slack


def reconstruct_hermitian(decomp: EigDecomposition) -> DenseTensor:
    """Rebuild sum_i lambda_i U_i * U_i^H (used by invariants and tests)."""
    terms = None
    from .tensor_core import conjugate_transpose, scale

    for lam, u in zip(decomp.lambdas, decomp.eigentensors):
        rank_one = scale(einstein_product(u, conjugate_transpose(u)), float(lam))
        terms = rank_one if terms is None else terms + rank_one
    return terms
