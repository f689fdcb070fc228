"""Dense complex tensors with grouped indices and Einstein-product primitives.

A tensor here is an order-(M+N) complex array whose axes are split into a
row group (I_1..I_M) and a column group (J_1..J_N).  Every operation is a
pure function on immutable values; the backing numpy arrays are marked
read-only so tensors are safe to share across threads.

The flat entry order is the fixed multi-index bijection: row-major
lexicographic over the row group, then over the column group.  Under that
bijection ``unfold`` is a plain reshape to a (row_size x col_size) matrix,
and the Einstein product becomes matrix multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from pathlib import Path
from typing import Sequence, Union

import numpy as np

__all__ = [
    "TensorShape",
    "DenseTensor",
    "ShapeMismatchError",
    "SingularTensorError",
    "add",
    "scale",
    "einstein_product",
    "identity",
    "zero",
    "conjugate_transpose",
    "trace",
    "inner_product",
    "frobenius_norm",
    "max_abs",
    "unfold",
    "fold",
    "is_hermitian",
    "hermiticity_residual",
    "is_unitary",
    "inverse",
    "tensor_power",
    "write_fixture",
    "read_fixture",
]


class ShapeMismatchError(ValueError):
    """Operands have incompatible shapes for the requested operation."""


class SingularTensorError(ValueError):
    """The unfolded matrix is singular (or numerically so)."""


@dataclass(frozen=True)
class TensorShape:
    """Grouped index shape: row dims I_1..I_M and column dims J_1..J_N."""

    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_dims", tuple(int(d) for d in self.row_dims))
        object.__setattr__(self, "col_dims", tuple(int(d) for d in self.col_dims))
        if not self.row_dims and not self.col_dims:
            raise ShapeMismatchError("row and column groups cannot both be empty")
        if any(d < 1 for d in self.row_dims + self.col_dims):
            raise ShapeMismatchError(f"all dimensions must be >= 1, got {self}")

    @property
    def row_size(self) -> int:
        return prod(self.row_dims)

    @property
    def col_size(self) -> int:
        return prod(self.col_dims)

    @property
    def full_dims(self) -> tuple[int, ...]:
        return self.row_dims + self.col_dims

    @property
    def is_square(self) -> bool:
        return self.row_dims == self.col_dims

    def transposed(self) -> "TensorShape":
        return TensorShape(self.col_dims, self.row_dims)

    def __str__(self) -> str:
        return f"({'x'.join(map(str, self.row_dims)) or '-'})x({'x'.join(map(str, self.col_dims)) or '-'})"


class DenseTensor:
    """Immutable dense complex tensor over a :class:`TensorShape`.

    ``data`` is a complex128 array of shape ``row_dims + col_dims``
    (complex128 stores each entry as an interleaved (re, im) double pair).
    """

    __slots__ = ("shape", "data")

    def __init__(self, shape: TensorShape, data: np.ndarray):
        arr = np.ascontiguousarray(data, dtype=np.complex128)
        if arr.shape != shape.full_dims:
            if arr.size == shape.row_size * shape.col_size:
                arr = arr.reshape(shape.full_dims)
            else:
                raise ShapeMismatchError(
                    f"data has {arr.size} entries, shape {shape} needs "
                    f"{shape.row_size * shape.col_size}"
                )
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("tensor entries must be finite (no NaN/Inf)")
        arr = arr.copy() if not arr.flags.owndata else arr
        arr.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    # Small operator surface; the module-level functions are the main API.
    def __add__(self, other: "DenseTensor") -> "DenseTensor":
        return add(self, other)

    def __sub__(self, other: "DenseTensor") -> "DenseTensor":
        return add(self, scale(other, -1.0))

    def __neg__(self) -> "DenseTensor":
        return scale(self, -1.0)

    def __mul__(self, c: complex) -> "DenseTensor":
        return scale(self, c)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"DenseTensor(shape={self.shape})"


def _require_same_shape(a: DenseTensor, b: DenseTensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op}: shapes differ, {a.shape} vs {b.shape}")


def _require_square(a: DenseTensor, op: str) -> None:
    if not a.shape.is_square:
        raise ShapeMismatchError(f"{op}: tensor is not square, shape {a.shape}")


def add(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Entrywise sum of two same-shape tensors."""
    _require_same_shape(a, b, "add")
    return DenseTensor(a.shape, a.data + b.data)


def scale(a: DenseTensor, c: complex) -> DenseTensor:
    """Scalar multiple c * A."""
    return DenseTensor(a.shape, c * a.data)


def einstein_product(a: DenseTensor, b: DenseTensor) -> DenseTensor:
    """Contract A's column group against B's row group.

    Result shape is (A.row_dims, B.col_dims); reduces to matrix
    multiplication when both groups are single axes.
    """
    if a.shape.col_dims != b.shape.row_dims:
        raise ShapeMismatchError(
            f"einstein_product: contraction groups differ, "
            f"{a.shape.col_dims} vs {b.shape.row_dims}"
        )
    n_contract = len(a.shape.col_dims)
    out = np.tensordot(a.data, b.data, axes=n_contract)
    return DenseTensor(TensorShape(a.shape.row_dims, b.shape.col_dims), out)


def identity(row_dims: Sequence[int]) -> DenseTensor:
    """Identity tensor over the given (square) dims; unfolds to the identity matrix."""
    dims = tuple(int(d) for d in row_dims)
    if not dims:
        raise ShapeMismatchError("identity: dims must be non-empty")
    shape = TensorShape(dims, dims)
    return DenseTensor(shape, np.eye(shape.row_size, dtype=np.complex128))


def zero(shape: TensorShape) -> DenseTensor:
    """All-zero tensor of the given shape."""
    return DenseTensor(shape, np.zeros(shape.full_dims, dtype=np.complex128))


def conjugate_transpose(a: DenseTensor) -> DenseTensor:
    """Swap the index groups and conjugate every entry."""
    m = len(a.shape.row_dims)
    n = len(a.shape.col_dims)
    perm = tuple(range(m, m + n)) + tuple(range(m))
    return DenseTensor(a.shape.transposed(), np.conj(a.data).transpose(perm))


def trace(a: DenseTensor) -> complex:
    """Sum of diagonal entries of a square tensor."""
    _require_square(a, "trace")
    return complex(np.trace(unfold(a)))


def inner_product(a: DenseTensor, b: DenseTensor) -> complex:
    """<A, B> = Tr(A^H * B) for same-shape tensors."""
    _require_same_shape(a, b, "inner_product")
    return trace(einstein_product(conjugate_transpose(a), b))


def frobenius_norm(a: DenseTensor) -> float:
    """sqrt(<A, A>); zero iff A is the zero tensor."""
    return float(np.sqrt(max(inner_product(a, a).real, 0.0)))


def max_abs(a: DenseTensor) -> float:
    """Largest entry magnitude (the structural-tolerance scale)."""
    return float(np.max(np.abs(a.data))) if a.data.size else 0.0


def unfold(a: DenseTensor) -> np.ndarray:
    """Matricize under the fixed bijection: a (row_size x col_size) view.

    The entries are bit-identical to the tensor's; unfolding is an algebra
    homomorphism for the Einstein product, addition, and conjugate transpose.
    """
    return a.data.reshape(a.shape.row_size, a.shape.col_size)


def fold(matrix: np.ndarray, shape: TensorShape) -> DenseTensor:
    """Inverse of :func:`unfold`; rejects inconsistent matrix sizes."""
    mat = np.asarray(matrix, dtype=np.complex128)
    if mat.shape != (shape.row_size, shape.col_size):
        raise ShapeMismatchError(
            f"fold: matrix is {mat.shape}, shape {shape} unfolds to "
            f"({shape.row_size}, {shape.col_size})"
        )
    return DenseTensor(shape, mat.reshape(shape.full_dims))


def _structural_tol(a: DenseTensor, tol: float) -> float:
    return tol * (1.0 + max_abs(a))


def hermiticity_residual(a: DenseTensor) -> float:
    """max |A - A^H| entrywise, the asymmetry measure used in error messages."""
    _require_square(a, "hermiticity_residual")
    return max_abs(a - conjugate_transpose(a))


def is_hermitian(a: DenseTensor, tol: float = 1e-10) -> bool:
    """True iff A equals A^H within tol * (1 + max|entry|)."""
    if not a.shape.is_square:
        return False
    return hermiticity_residual(a) <= _structural_tol(a, tol)


def is_unitary(u: DenseTensor, tol: float = 1e-10) -> bool:
    """True iff U^H * U is the identity within tol (max-abs)."""
    if not u.shape.is_square:
        return False
    gram = einstein_product(conjugate_transpose(u), u)
    return max_abs(gram - identity(u.shape.row_dims)) <= tol * (1.0 + max_abs(u))


def inverse(a: DenseTensor) -> DenseTensor:
    """Tensor inverse via the unfolded matrix; A * A^-1 = A^-1 * A = identity."""
    _require_square(a, "inverse")
    mat = unfold(a)
    try:
        inv = np.linalg.inv(mat)
    except np.linalg.LinAlgError as exc:
        raise SingularTensorError(
            f"tensor is singular: {exc} (condition estimate "
            f"{np.linalg.cond(mat):.3e})"
        ) from exc
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularTensorError(
            f"tensor is numerically singular (condition estimate {cond:.3e})"
        )
    return fold(inv, a.shape)


def tensor_power(a: DenseTensor, j: int) -> DenseTensor:
    """j-th Einstein-product power of a square tensor; j = 0 gives the identity."""
    _require_square(a, "tensor_power")
    j = int(j)
    if j < 0:
        raise ValueError(f"tensor_power: j must be >= 0, got {j}")
    if j == 0:
        return identity(a.shape.row_dims)
    out = a
    for _ in range(j - 1):
        out = einstein_product(out, a)
    return out


# ---------------------------------------------------------------------------
# Tensor fixture files
#
# Text format: line 1 "M N"; line 2 row dims; line 3 col dims (blank line for
# an empty group); then one "re im" pair per line in bijection order.  Floats
# carry 17 significant digits, so the round trip is bit-exact.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_fixture(a: DenseTensor, path: Union[str, Path]) -> None:
    """Write a tensor to the text fixture format (bit-exact round trip)."""
    lines = [
        f"{len(a.shape.row_dims)} {len(a.shape.col_dims)}",
        " ".join(map(str, a.shape.row_dims)),
        " ".join(map(str, a.shape.col_dims)),
    ]
    flat = a.data.reshape(-1)
    lines.extend(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def read_fixture(path: Union[str, Path]) -> DenseTensor:
    """Parse a tensor fixture file; malformed content raises ValueError."""
    path = Path(path)
    raw = path.read_text().splitlines()
    if len(raw) < 3:
        raise ValueError(f"{path}: fixture needs a 3-line header, got {len(raw)} lines")
    try:
        m_str, n_str = raw[0].split()
        m, n = int(m_str), int(n_str)
    except ValueError as exc:
        raise ValueError(f"{path}: bad header line {raw[0]!r}: {exc}") from exc
    row_dims = tuple(int(t) for t in raw[1].split())
    col_dims = tuple(int(t) for t in raw[2].split())
    if len(row_dims) != m or len(col_dims) != n:
        raise ValueError(
            f"{path}: header declares M={m}, N={n} but dim lines have "
            f"{len(row_dims)} and {len(col_dims)} entries"
        )
    shape = TensorShape(row_dims, col_dims)
    count = shape.row_size * shape.col_size
    body = [ln for ln in raw[3:] if ln.strip()]
    if len(body) != count:
        raise ValueError(f"{path}: expected {count} entry lines, got {len(body)}")
    entries = np.empty(count, dtype=np.complex128)
    for idx, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: entry line {idx + 4} is not 're im': {ln!r}")
        try:
            entries[idx] = complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"{path}: entry line {idx + 4}: {exc}") from exc
    return DenseTensor(shape, entries.reshape(shape.full_dims))
