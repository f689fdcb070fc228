"""Block quadratic forms of random tensors and their diagonal/coupling split.

Given a block vector X = (X_1..X_n) and a block grid A = (A_ij), the
quadratic form sum_ij X_i * A_ij * X_j splits exactly into n diagonal
terms D_i = X_i A_ii X_i and n^2 - n coupling terms C = X_i A_ij X_j
(i != j, ordered pairs in lexicographic order).  This module also checks,
on a sampled realization, every hypothesis the tail bound needs:
commutation, exp-domination in the Loewner order, positive definiteness,
and the declared lambda-max / Ky Fan caps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import (
    ky_fan_norm,
    max_eigenvalue,
    min_eigenvalue,
    spectral_function,
)
from .tensor_core import (
    DenseTensor,
    ShapeMismatchError,
    einstein_product,
    frobenius_norm,
    hermiticity_residual,
    identity,
    is_hermitian,
    max_abs,
    scale,
    tensor_power,
    zero,
)

__all__ = [
    "BlockVector",
    "BlockMatrix",
    "QuadDecomposition",
    "AssumptionReport",
    "InfeasibleSplitError",
    "coupling_pairs",
    "quadratic_form",
    "poly_apply",
    "theta_split",
    "check_assumptions",
]


class InfeasibleSplitError(ValueError):
    """Theta is not above the |a_0| * k floor, so no positive split exists."""


@dataclass(frozen=True)
class BlockVector:
    """n square tensors over a common base shape."""

    blocks: tuple[DenseTensor, ...]

    def __post_init__(self):
        if not self.blocks:
            raise ShapeMismatchError("BlockVector needs at least one block")
        base = self.blocks[0].shape
        if not base.is_square:
            raise ShapeMismatchError(f"blocks must be square, got {base}")
        for b in self.blocks:
            if b.shape != base:
                raise ShapeMismatchError("all blocks must share one shape")

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def base_shape(self):
        return self.blocks[0].shape


@dataclass(frozen=True)
class BlockMatrix:
    """Complete n x n grid of Hermitian square tensors over one base shape."""

    blocks: tuple[tuple[DenseTensor, ...], ...]

    def __post_init__(self):
        n = len(self.blocks)
        if n == 0 or any(len(row) != n for row in self.blocks):
            raise ShapeMismatchError("BlockMatrix grid must be complete and square")
        base = self.blocks[0][0].shape
        if not base.is_square:
            raise ShapeMismatchError(f"blocks must be square, got {base}")
        for row in self.blocks:
            for b in row:
                if b.shape != base:
                    raise ShapeMismatchError("all blocks must share one shape")
                if not is_hermitian(b):
                    raise ShapeMismatchError(
                        f"block is not Hermitian (residual {hermiticity_residual(b):.3e})"
                    )

    @property
    def n(self) -> int:
        return len(self.blocks)

    @property
    def base_shape(self):
        return self.blocks[0][0].shape


@dataclass(frozen=True)
class QuadDecomposition:
    """Diagonal terms, coupling terms (lexicographic (i,j), i != j), and the total."""

    diagonal_terms: tuple[DenseTensor, ...]
    coupling_terms: tuple[DenseTensor, ...]
    total: DenseTensor

    def partial_sums(self) -> tuple[DenseTensor, DenseTensor]:
        shape = self.total.shape
        d_sum = zero(shape)
        for t in self.diagonal_terms:
            d_sum = d_sum + t
        c_sum = zero(shape)
        for t in self.coupling_terms:
            c_sum = c_sum + t
        return d_sum, c_sum

    def export_fixtures(self, directory) -> list:
        """Dump every term and the total as fixture files for debugging."""
        from pathlib import Path

        from .tensor_core import write_fixture

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        n = len(self.diagonal_terms)
        written = []
        for i, t in enumerate(self.diagonal_terms):
            path = directory / f"diag_{i}.tensor"
            write_fixture(t, path)
            written.append(path)
        for (i, j), t in zip(coupling_pairs(n), self.coupling_terms):
            path = directory / f"coupling_{i}_{j}.tensor"
            write_fixture(t, path)
            written.append(path)
        total_path = directory / "total.tensor"
        write_fixture(self.total, total_path)
        written.append(total_path)
        return written


@dataclass(frozen=True)
class AssumptionReport:
    """Per-realization verdicts with worst-case margins.

    Margins are signed so that >= 0 means the check passed; observed
    quantities come from the same realization the booleans were computed on.
    """

    commute_ok: bool
    commute_margin: float
    exp_domination_ok: bool
    exp_domination_margin: float
    exp_t_grid: tuple[float, ...]
    exp_j_range: tuple[int, ...]
    exp_points_checked: int
    exp_points_skipped: int
    pd_ok: bool
    pd_margin: float
    caps_ok: bool
    hermiticity_residual_total: float
    R_d_observed: float
    R_c_observed: float
    K_table: dict[tuple[int, int, int], float]

    @property
    def all_ok(self) -> bool:
        return self.commute_ok and self.exp_domination_ok and self.pd_ok and self.caps_ok


def coupling_pairs(n: int) -> list[tuple[int, int]]:
    """Ordered index pairs (i, j), i != j, in lexicographic order."""
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def quadratic_form(xbar: BlockVector, abar: BlockMatrix) -> QuadDecomposition:
    """Split sum_ij X_i A_ij X_j into diagonal and coupling terms."""
    if xbar.n != abar.n:
        raise ShapeMismatchError(f"block counts differ: {xbar.n} vs {abar.n}")
    if xbar.base_shape != abar.base_shape:
        raise ShapeMismatchError(
            f"base shapes differ: {xbar.base_shape} vs {abar.base_shape}"
        )
    n = xbar.n
    x = xbar.blocks
    a = abar.blocks
    diag = tuple(
        einstein_product(einstein_product(x[i], a[i][i]), x[i]) for i in range(n)
    )
    coup = tuple(
        einstein_product(einstein_product(x[i], a[i][j]), x[j])
        for i, j in coupling_pairs(n)
    )
    total = zero(xbar.base_shape)
    for i in range(n):
        for j in range(n):
            total = total + einstein_product(einstein_product(x[i], a[i][j]), x[j])
    return QuadDecomposition(diagonal_terms=diag, coupling_terms=coup, total=total)


def poly_apply(coeffs: Sequence[float], t: DenseTensor) -> DenseTensor:
    """a_0 I + a_1 T + ... + a_m T^m by Horner's scheme under the tensor product."""
    if not t.shape.is_square:
        raise ShapeMismatchError(f"poly_apply needs a square tensor, got {t.shape}")
    coeffs = [float(c) for c in coeffs]
    if not coeffs:
        coeffs = [0.0]
    eye = identity(t.shape.row_dims)
    acc = scale(eye, coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = einstein_product(acc, t) + scale(eye, c)
    return acc


def theta_split(
    theta_total: float, a_coeffs: Sequence[float], k: int, policy: str = "equal"
) -> np.ndarray:
    """Split Theta - |a_0| k into positive theta_j over the active coefficients.

    Entries for skipped coefficients (a_j = 0) are zero; the active entries
    sum to the budget exactly (last entry absorbs the rounding residual,
    iterated against the exactly-rounded sum).
    """
    a = np.asarray(a_coeffs, dtype=float)
    if a.size < 2:
        raise ValueError("polynomial must have degree >= 1 for a tail split")
    budget = float(theta_total) - abs(a[0]) * k
    if budget <= 0:
        raise InfeasibleSplitError(
            f"Theta = {theta_total} does not exceed |a_0| k = {abs(a[0]) * k}"
        )
    active = np.nonzero(a[1:])[0]
    if active.size == 0:
        raise InfeasibleSplitError("no nonzero coefficients above degree 0")
    out = np.zeros(a.size - 1, dtype=float)
    if policy == "equal":
        out[active] = budget / active.size
    elif policy == "proportional":
        weights = np.abs(a[1:][active])
        out[active] = budget * weights / weights.sum()
    else:
        raise ValueError(f"unknown split policy {policy!r}")
    # the raw shares sum to the budget only up to rounding; walk the largest
    # share (coarsest ulp spacing, so only a handful of steps) until the
    # exactly-rounded sum restores the budget bit-for-bit; when the exact sum
    # sits on a rounding midpoint the coarse steps straddle the budget, so an
    # oscillation switches to nudging the smallest share to break the tie
    coarse = active[int(np.argmax(out[active]))]
    fine = active[int(np.argmin(out[active]))]
    prev = None
    for _ in range(256):
        residual = budget - math.fsum(out[active])
        if residual == 0.0:
            break
        idx = fine if (prev is not None and residual == -prev) else coarse
        out[idx] = np.nextafter(out[idx], np.inf if residual > 0 else -np.inf)
        prev = residual
    if np.any(out[active] <= 0.0):
        raise InfeasibleSplitError(
            "split rounds an active share to zero; coefficient ratios exceed "
            "float precision"
        )
    return out


def _offdiag_row_sum(xbar: BlockVector, abar: BlockMatrix, i: int) -> DenseTensor:
    s = zero(xbar.base_shape)
    for ell in range(xbar.n):
        if ell != i:
            s = s + einstein_product(abar.blocks[i][ell], xbar.blocks[ell])
    return s


def check_assumptions(
    xbar: BlockVector,
    abar: BlockMatrix,
    declared_r_d: float,
    declared_r_c: float,
    declared_k: dict[tuple[int, int, int], float] | None,
    t_grid: Sequence[float],
    j_range: Sequence[int],
    k_orders: Sequence[int] = (1,),
    commute_tol: float = 1e-8,
    loewner_tol: float = 1e-8,
) -> AssumptionReport:
    """Verify every tail-bound hypothesis on one sampled realization.

    Checks commutation of X_i with its off-diagonal row sum, Loewner
    domination exp(tS)^j >= exp(t S^j) over the grid for S in {sum D_i} and
    each row sum, positive definiteness of all terms, and the observed
    lambda-max / Ky Fan values against the declared caps.  Failures are
    recorded, never raised: callers refuse dominance claims on a bad report.
    """
    n = xbar.n
    decomp = quadratic_form(xbar, abar)
    d_sum, _ = decomp.partial_sums()

    # (a) commutation
    commute_margin = np.inf
    row_sums = []
    for i in range(n):
        s = _offdiag_row_sum(xbar, abar, i)
        row_sums.append(s)
        comm = einstein_product(xbar.blocks[i], s) - einstein_product(s, xbar.blocks[i])
        scale_i = 1.0 + max_abs(xbar.blocks[i]) * max_abs(s)
        commute_margin = min(commute_margin, commute_tol - frobenius_norm(comm) / scale_i)
    commute_ok = commute_margin >= 0

    # (b) exp domination over the t grid, S in {sum_i D_i} + all row sums
    j_range = tuple(int(j) for j in j_range)
    t_grid = tuple(float(t) for t in t_grid)
    exp_margin = np.inf
    exp_ok = True
    exp_checked = 0
    exp_skipped = 0
    candidates = [d_sum] + (row_sums if n > 1 else [])
    for s in candidates:
        if not is_hermitian(s, tol=1e-8):
            exp_ok = False
            exp_margin = -np.inf
            continue
        lam_top = abs(max_eigenvalue(s))
        for j in j_range:
            for t in t_grid:
                # overflow guard: skip grid points whose exponent exceeds 700
                if t * max(j * lam_top, lam_top**j) > 700.0:
                    exp_skipped += 1
                    continue
                exp_checked += 1
                lhs = tensor_power(spectral_function(s, lambda x: np.exp(t * x)), j)
                rhs = spectral_function(tensor_power(s, j), lambda x: np.exp(t * x))
                gap = min_eigenvalue(lhs - rhs)
                scale_g = 1.0 + max_abs(rhs)
                exp_margin = min(exp_margin, gap / scale_g + loewner_tol)
                if gap < -loewner_tol * scale_g:
                    exp_ok = False

    # (c) positive definiteness of every term
    pd_margin = np.inf
    for term in decomp.diagonal_terms + decomp.coupling_terms:
        if not is_hermitian(term, tol=1e-8):
            pd_margin = -np.inf
            continue
        pd_margin = min(pd_margin, min_eigenvalue(term))
    pd_ok = pd_margin > 0

    # (d) observed lambda-max values vs declared caps
    r_d_obs = max(max_eigenvalue(t) for t in decomp.diagonal_terms)
    r_c_obs = 0.0
    if n > 1:
        for i in range(n):
            for ell in range(n):
                if ell == i:
                    continue
                prod = einstein_product(abar.blocks[i][ell], xbar.blocks[ell])
                if is_hermitian(prod, tol=1e-8):
                    r_c_obs = max(r_c_obs, max_eigenvalue(prod))
                else:
                    ev = np.linalg.eigvals(
                        prod.data.reshape(prod.shape.row_size, prod.shape.col_size)
                    )
                    r_c_obs = max(r_c_obs, float(np.max(ev.real)))

    # (e) observed Ky Fan powers vs the declared K table
    k_table: dict[tuple[int, int, int], float] = {}
    for i in range(n):
        for j in j_range:
            xp = tensor_power(xbar.blocks[i], j)
            for k in k_orders:
                k_table[(i, j, int(k))] = ky_fan_norm(xp, int(k))

    caps_ok = r_d_obs <= declared_r_d + 1e-9 and r_c_obs <= declared_r_c + 1e-9
    if declared_k:
        for key, obs in k_table.items():
            cap = declared_k.get(key)
            if cap is not None and obs > cap + 1e-9:
                caps_ok = False

    return AssumptionReport(
        commute_ok=commute_ok,
        commute_margin=float(commute_margin),
        exp_domination_ok=exp_ok,
        exp_domination_margin=float(exp_margin),
        exp_t_grid=t_grid,
        exp_j_range=j_range,
        exp_points_checked=exp_checked,
        exp_points_skipped=exp_skipped,
        pd_ok=pd_ok,
        pd_margin=float(pd_margin),
        caps_ok=caps_ok,
        hermiticity_residual_total=hermiticity_residual(decomp.total)
        if decomp.total.shape.is_square
        else np.inf,
        R_d_observed=float(r_d_obs),
        R_c_observed=float(r_c_obs),
        K_table=k_table,
    )
