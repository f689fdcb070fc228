import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eintail.spectral import (
    NotHermitianError,
    SpectralDomainError,
    herm_eig,
    is_positive_definite,
    ky_fan_norm,
    loewner_geq,
    max_eigenvalue,
    min_eigenvalue,
    power_norm_subadditivity_check,
    reconstruct_hermitian,
    singular_values,
    spectral_function,
    svd,
    weakly_majorizes,
)
from eintail.tensor_core import (
    DenseTensor,
    TensorShape,
    add,
    conjugate_transpose,
    einstein_product,
    fold,
    identity,
    inner_product,
    max_abs,
    scale,
    tensor_power,
    unfold,
)

from . import oracles


def rand_tensor(rng, row_dims, col_dims):
    shape = TensorShape(tuple(row_dims), tuple(col_dims))
    return DenseTensor(shape, oracles.random_complex(rng, shape.full_dims))


def rand_hermitian(rng, dims):
    t = rand_tensor(rng, dims, dims)
    return scale(t + conjugate_transpose(t), 0.5)


def rand_pd(rng, dims, shift=0.2):
    h = rand_hermitian(rng, dims)
    g = unfold(h)
    g = g @ g.conj().T + shift * np.eye(g.shape[0])
    return fold(g, h.shape)


# ---------------------------------------------------------------------------
# svd / singular values
# ---------------------------------------------------------------------------

def test_identity_singular_values():
    sv = singular_values(identity([2, 3]))
    assert np.allclose(sv, np.ones(6))


def test_scaling_homogeneity():
    rng = np.random.default_rng(30)
    a = rand_tensor(rng, (2, 2), (3,))
    assert np.allclose(singular_values(scale(a, -2.5)), 2.5 * singular_values(a))


def test_singular_values_match_jacobi_oracle():
    rng = np.random.default_rng(31)
    for _ in range(10):
        a = rand_tensor(rng, (2, 2), (2, 2))
        mine = singular_values(a)
        ref = oracles.jacobi_singular_values(unfold(a))
        assert np.max(np.abs(mine - ref)) < 1e-9


def test_svd_reconstruction_and_unitary_factors():
    rng = np.random.default_rng(32)
    a = rand_tensor(rng, (2, 3), (2,))
    dec = svd(a)
    assert np.all(np.diff(dec.sigma) <= 1e-12)
    assert np.max(np.abs(dec.reconstruct() - unfold(a))) < 1e-9
    for f in (dec.left_factor, dec.right_factor):
        assert np.max(np.abs(f.conj().T @ f - np.eye(f.shape[0]))) < 1e-10


# ---------------------------------------------------------------------------
# ky fan norm
# ---------------------------------------------------------------------------

def test_ky_fan_sorted_top_k():
    d = fold(np.diag([3.0, 2.0, 1.0]).astype(complex), TensorShape((3,), (3,)))
    assert abs(ky_fan_norm(d, 2) - 5.0) < 1e-12
    assert abs(ky_fan_norm(identity([2, 2]), 3) - 3.0) < 1e-12
    with pytest.raises(ValueError):
        ky_fan_norm(d, 0)
    with pytest.raises(ValueError):
        ky_fan_norm(d, 4)


def test_nuclear_norm_matches_sqrtm_oracle():
    rng = np.random.default_rng(33)
    a = rand_tensor(rng, (2, 2), (2,))
    full = min(a.shape.row_size, a.shape.col_size)
    assert abs(ky_fan_norm(a, full) - oracles.nuclear_norm_sqrtm(unfold(a))) < 1e-8


def test_ky_fan_triangle_and_submultiplicative():
    rng = np.random.default_rng(34)
    for _ in range(50):
        a = rand_tensor(rng, (2, 2), (2, 2))
        b = rand_tensor(rng, (2, 2), (2, 2))
        for k in range(1, 5):
            assert ky_fan_norm(add(a, b), k) <= ky_fan_norm(a, k) + ky_fan_norm(b, k) + 1e-9
            assert (
                ky_fan_norm(einstein_product(a, b), k)
                <= ky_fan_norm(a, k) * ky_fan_norm(b, k) + 1e-9
            )


# ---------------------------------------------------------------------------
# weak majorization
# ---------------------------------------------------------------------------

def test_weak_majorization_hand_cases():
    assert weakly_majorizes([3.0, 1.0], [3.0, 1.0])
    # prefix sums: 2 <= 3, 4 <= 4
    assert weakly_majorizes([3.0, 1.0], [2.0, 2.0])
    assert not weakly_majorizes([2.0, 2.0], [3.0, 1.0])


def test_singular_value_weak_majorization_under_addition():
    rng = np.random.default_rng(35)
    for _ in range(100):
        a = rand_tensor(rng, (2,), (2, 2))
        b = rand_tensor(rng, (2,), (2, 2))
        assert weakly_majorizes(
            singular_values(a) + singular_values(b), singular_values(add(a, b))
        )


@settings(max_examples=40, deadline=None)
@given(
    rd=st.lists(st.integers(1, 3), min_size=1, max_size=2),
    cd=st.lists(st.integers(1, 3), min_size=1, max_size=2),
    seed=st.integers(0, 2**31),
)
def test_ky_fan_triangle_property(rd, cd, seed):
    rng = np.random.default_rng(seed)
    a = rand_tensor(rng, rd, cd)
    b = rand_tensor(rng, rd, cd)
    for k in range(1, min(a.shape.row_size, a.shape.col_size) + 1):
        assert ky_fan_norm(add(a, b), k) <= ky_fan_norm(a, k) + ky_fan_norm(b, k) + 1e-9
    assert weakly_majorizes(
        singular_values(a) + singular_values(b), singular_values(add(a, b))
    )


# ---------------------------------------------------------------------------
# hermitian eigendecomposition
# ---------------------------------------------------------------------------

def test_herm_eig_identity_and_diagonal():
    dec = herm_eig(identity([2]))
    assert np.allclose(dec.lambdas, [1.0, 1.0])
    d = fold(np.diag([5.0, -2.0]).astype(complex), TensorShape((2,), (2,)))
    assert np.allclose(herm_eig(d).lambdas, [5.0, -2.0])


def test_herm_eig_matches_char_poly_roots():
    rng = np.random.default_rng(36)
    for _ in range(10):
        h = rand_hermitian(rng, (2, 2))
        mine = herm_eig(h).lambdas
        ref = oracles.hermitian_eigvals_by_roots(unfold(h))
        assert np.max(np.abs(mine - ref)) < 1e-8


def test_herm_eig_invariants():
    rng = np.random.default_rng(37)
    h = rand_hermitian(rng, (2, 2))
    dec = herm_eig(h)
    assert len(dec.eigentensors) == 4
    for i, u in enumerate(dec.eigentensors):
        assert abs(inner_product(u, u) - 1.0) < 1e-9
        for j in range(i):
            assert abs(inner_product(dec.eigentensors[j], u)) < 1e-9
    assert max_abs(reconstruct_hermitian(dec) - h) < 1e-9


def test_herm_eig_rejects_non_hermitian():
    rng = np.random.default_rng(38)
    with pytest.raises(NotHermitianError, match="H \\^?H|not Hermitian"):
        herm_eig(rand_tensor(rng, (2,), (2,)))


# ---------------------------------------------------------------------------
# spectral function
# ---------------------------------------------------------------------------

def test_spectral_function_identity_map():
    rng = np.random.default_rng(39)
    h = rand_hermitian(rng, (2, 2))
    assert max_abs(spectral_function(h, lambda x: x) - h) < 1e-9


def test_spectral_function_exp_diagonal():
    d = fold(np.diag([0.0, np.log(2.0)]).astype(complex), TensorShape((2,), (2,)))
    out = spectral_function(d, np.exp)
    assert np.max(np.abs(unfold(out) - np.diag([1.0, 2.0]))) < 1e-12


def test_spectral_square_equals_tensor_power():
    rng = np.random.default_rng(40)
    h = rand_hermitian(rng, (2, 2))
    assert max_abs(spectral_function(h, lambda x: x * x) - tensor_power(h, 2)) < 1e-9


def test_spectral_function_domain_error():
    d = fold(np.diag([1.0, -4.0]).astype(complex), TensorShape((2,), (2,)))
    with pytest.raises(SpectralDomainError):
        spectral_function(d, np.sqrt)
    with pytest.raises(SpectralDomainError):
        spectral_function(d, lambda x: 1.0 / (x - 1.0))


def test_spectral_function_commutes_with_stored_factors():
    rng = np.random.default_rng(41)
    h = rand_hermitian(rng, (2, 2))
    f_h = spectral_function(h, np.exp)
    # exp(H) must commute with H itself to 1e-9
    assert max_abs(einstein_product(f_h, h) - einstein_product(h, f_h)) < 1e-9
    # conjugating H by its own eigenvector factor diagonalizes both sides:
    # f(V^H H V) = V^H f(H) V
    _, vecs = np.linalg.eigh(unfold(h))
    conj = fold(vecs.conj().T @ unfold(h) @ vecs, h.shape)
    lhs = spectral_function(conj, np.exp)
    rhs = fold(vecs.conj().T @ unfold(f_h) @ vecs, h.shape)
    assert max_abs(lhs - rhs) < 1e-9


# ---------------------------------------------------------------------------
# loewner order helpers
# ---------------------------------------------------------------------------

def test_loewner_reflexive_and_diagonal():
    rng = np.random.default_rng(42)
    h = rand_hermitian(rng, (2,))
    assert loewner_geq(h, h)
    a = fold(np.diag([2.0, 1.0]).astype(complex), TensorShape((2,), (2,)))
    b = fold(np.diag([1.0, 0.5]).astype(complex), TensorShape((2,), (2,)))
    assert loewner_geq(a, b)
    assert not loewner_geq(b, a)


def test_loewner_matches_min_eig_oracle():
    rng = np.random.default_rng(43)
    for _ in range(20):
        a = rand_pd(rng, (2,))
        b = rand_pd(rng, (2,))
        diff_min = oracles.hermitian_eigvals_by_roots(unfold(a) - unfold(b))[-1]
        assert loewner_geq(a, b) == (diff_min >= -1e-9)
        assert abs(min_eigenvalue(a - b) - diff_min) < 1e-8


def test_pd_and_max_eigenvalue():
    rng = np.random.default_rng(44)
    p = rand_pd(rng, (2, 2))
    assert is_positive_definite(p)
    assert not is_positive_definite(scale(p, -1.0))
    assert abs(max_eigenvalue(p) - np.max(np.linalg.eigvalsh(unfold(p)))) < 1e-10


# ---------------------------------------------------------------------------
# power-mean subadditivity
# ---------------------------------------------------------------------------

def test_power_norm_near_identity_limit():
    rng = np.random.default_rng(45)
    a = rand_pd(rng, (2,))
    b = scale(identity([2]), 1e-9)
    assert power_norm_subadditivity_check(a, b, 2, 1)


def test_power_norm_commuting_diagonal_equality():
    a = fold(np.diag([2.0, 1.0]).astype(complex), TensorShape((2,), (2,)))
    b = fold(np.diag([3.0, 0.5]).astype(complex), TensorShape((2,), (2,)))
    # n=1, k=1 reduces to the scalar triangle inequality with equality slack
    assert power_norm_subadditivity_check(a, b, 1, 1)


def test_power_norm_random_sweep():
    rng = np.random.default_rng(46)
    for _ in range(50):
        a = rand_pd(rng, (2,))
        b = rand_pd(rng, (2,))
        for n in (1, 2, 3):
            for k in (1, 2):
                assert power_norm_subadditivity_check(a, b, n, k)


def test_power_norm_rejects_non_pd():
    rng = np.random.default_rng(47)
    a = rand_pd(rng, (2,))
    with pytest.raises(ValueError, match="positive definite"):
        power_norm_subadditivity_check(a, scale(a, -1.0), 2, 1)
