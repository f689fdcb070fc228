"""Built-in invariant suite behind `eintail selftest`.

Runs a fixed-seed sweep of the structural invariants (unfolding
homomorphism, involution, norm identities, Ky Fan inequalities, spectral
mapping, quadratic decomposition, split arithmetic, fixture round trip)
and prints one line per invariant.  Output contains no paths or timestamps,
so repeated runs with the same build produce identical log digests.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from . import spectral, tensor_core
from .quadform import BlockMatrix, BlockVector, poly_apply, quadratic_form, theta_split
from .random_ensembles import EnsembleSpec, SeedPolicy, sample_commuting_family
from .tensor_core import (
    DenseTensor,
    TensorShape,
    add,
    conjugate_transpose,
    einstein_product,
    frobenius_norm,
    identity,
    inner_product,
    max_abs,
    read_fixture,
    scale,
    tensor_power,
    unfold,
    write_fixture,
)

SELFTEST_SEED = 20240

def _rand(rng, row_dims, col_dims):
    shape = TensorShape(tuple(row_dims), tuple(col_dims))
    data = rng.standard_normal(shape.full_dims) + 1j * rng.standard_normal(shape.full_dims)
    return DenseTensor(shape, data)


def _rand_hermitian(rng, dims):
    t = _rand(rng, dims, dims)
    return scale(t + conjugate_transpose(t), 0.5)


def _rand_pd(rng, dims):
    h = _rand_hermitian(rng, dims)
    g = unfold(h)
    return tensor_core.fold(g @ g.conj().T + 0.2 * np.eye(g.shape[0]), h.shape)


def check_unfold_homomorphism():
    rng = np.random.default_rng(SELFTEST_SEED)
    for _ in range(50):
        dims = [tuple(rng.integers(1, 4, size=rng.integers(1, 3))) for _ in range(3)]
        a = _rand(rng, dims[0], dims[1])
        b = _rand(rng, dims[1], dims[2])
        err = np.max(np.abs(unfold(einstein_product(a, b)) - unfold(a) @ unfold(b)))
        assert err <= 1e-10, f"max error {err:.3e}"


def check_involution_identities():
    rng = np.random.default_rng(SELFTEST_SEED + 1)
    for _ in range(25):
        a = _rand(rng, (2, 2), (3,))
        b = _rand(rng, (3,), (2,))
        assert max_abs(conjugate_transpose(conjugate_transpose(a)) - a) == 0.0
        lhs = conjugate_transpose(einstein_product(a, b))
        rhs = einstein_product(conjugate_transpose(b), conjugate_transpose(a))
        assert max_abs(lhs - rhs) <= 1e-10


def check_inner_product_identities():
    rng = np.random.default_rng(SELFTEST_SEED + 2)
    for _ in range(25):
        a = _rand(rng, (2,), (2, 2))
        b = _rand(rng, (2,), (2, 2))
        assert abs(inner_product(a, b) - np.conj(inner_product(b, a))) <= 1e-10
        direct = float(np.sum(np.abs(a.data) ** 2))
        assert abs(frobenius_norm(a) ** 2 - direct) <= 1e-9 * (1 + direct)


def check_associativity():
    rng = np.random.default_rng(SELFTEST_SEED + 3)
    for _ in range(25):
        a = _rand(rng, (2,), (3,))
        b = _rand(rng, (3,), (2, 2))
        c = _rand(rng, (2, 2), (2,))
        left = einstein_product(einstein_product(a, b), c)
        right = einstein_product(a, einstein_product(b, c))
        assert max_abs(left - right) <= 1e-9


def check_ky_fan_inequalities():
    rng = np.random.default_rng(SELFTEST_SEED + 4)
    for _ in range(100):
        a = _rand(rng, (2,), (2, 2))
        b = _rand(rng, (2,), (2, 2))
        sa, sb = spectral.singular_values(a), spectral.singular_values(b)
        assert spectral.weakly_majorizes(sa + sb, spectral.singular_values(add(a, b)))
        for k in (1, 2):
            lhs = spectral.ky_fan_norm(add(a, b), k)
            assert lhs <= spectral.ky_fan_norm(a, k) + spectral.ky_fan_norm(b, k) + 1e-9


def check_submultiplicativity():
    rng = np.random.default_rng(SELFTEST_SEED + 5)
    for _ in range(50):
        a = _rand(rng, (2,), (2,))
        b = _rand(rng, (2,), (2,))
        for k in (1, 2):
            lhs = spectral.ky_fan_norm(einstein_product(a, b), k)
            assert lhs <= spectral.ky_fan_norm(a, k) * spectral.ky_fan_norm(b, k) + 1e-9


def check_power_mean_inequality():
    rng = np.random.default_rng(SELFTEST_SEED + 6)
    for _ in range(50):
        a = _rand_pd(rng, (2,))
        b = _rand_pd(rng, (2,))
        for n in (1, 2, 3):
            assert spectral.power_norm_subadditivity_check(a, b, n, 1)


def check_spectral_mapping():
    rng = np.random.default_rng(SELFTEST_SEED + 7)
    for _ in range(25):
        h = _rand_hermitian(rng, (2,))
        lam = spectral.herm_eig(h).lambdas
        for f in (lambda x: x * x, np.exp, lambda x: 1 + 2 * x + x * x):
            out = spectral.spectral_function(h, f)
            got = spectral.herm_eig(out).lambdas
            want = np.sort([f(x) for x in lam])[::-1]
            assert np.max(np.abs(got - want)) <= 1e-8


def check_quadratic_decomposition():
    rng = np.random.default_rng(SELFTEST_SEED + 8)
    for n in (1, 2, 3):
        xs = tuple(_rand_hermitian(rng, (2,)) for _ in range(n))
        grid = tuple(tuple(_rand_hermitian(rng, (2,)) for _ in range(n)) for _ in range(n))
        dec = quadratic_form(BlockVector(xs), BlockMatrix(grid))
        d_sum, c_sum = dec.partial_sums()
        resid = frobenius_norm(dec.total - d_sum - c_sum)
        assert resid <= 1e-9 * (1 + frobenius_norm(dec.total))


def check_poly_apply_consistency():
    rng = np.random.default_rng(SELFTEST_SEED + 9)
    h = _rand_hermitian(rng, (2,))
    out = poly_apply([1.0, 2.0, 1.0], h)
    ref = spectral.spectral_function(h, lambda x: 1 + 2 * x + x * x)
    assert max_abs(out - ref) <= 1e-9


def check_theta_split_arithmetic():
    eq = theta_split(4.0, [0.0, 1.0, 1.0], 1, "equal")
    assert eq.sum() == 4.0 and np.allclose(eq, [2.0, 2.0])
    pr = theta_split(4.0, [0.0, 1.0, 3.0], 1, "proportional")
    assert pr.sum() == 4.0 and np.allclose(pr, [1.0, 3.0])


def check_fixture_round_trip():
    rng = np.random.default_rng(SELFTEST_SEED + 10)
    a = _rand(rng, (2, 2), (3,))
    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "selftest.tensor"
        write_fixture(a, path)
        back = read_fixture(path)
    assert back.shape == a.shape
    assert np.array_equal(back.data, a.data)


def check_sampler_determinism():
    spec = EnsembleSpec(base_shape=TensorShape((2,), (2,)), n=2, family="commuting")
    pol = SeedPolicy(SELFTEST_SEED)
    one = sample_commuting_family(spec, pol.trial_rng(3))
    two = sample_commuting_family(spec, pol.trial_rng(3))
    for x, y in zip(one, two):
        assert np.array_equal(x.data, y.data)


def check_identity_unitary_inverse():
    i = identity([2, 2])
    assert tensor_core.is_hermitian(i)
    assert tensor_core.is_unitary(i)
    assert max_abs(tensor_core.inverse(i) - i) <= 1e-12
    assert max_abs(tensor_power(i, 5) - i) == 0.0


INVARIANT_CHECKS = [
    ("unfold homomorphism", check_unfold_homomorphism),
    ("conjugate-transpose involution", check_involution_identities),
    ("inner product and Frobenius norm", check_inner_product_identities),
    ("product associativity", check_associativity),
    ("Ky Fan triangle and weak majorization", check_ky_fan_inequalities),
    ("Ky Fan submultiplicativity", check_submultiplicativity),
    ("power-mean subadditivity", check_power_mean_inequality),
    ("spectral mapping", check_spectral_mapping),
    ("quadratic decomposition identity", check_quadratic_decomposition),
    ("polynomial image consistency", check_poly_apply_consistency),
    ("theta split arithmetic", check_theta_split_arithmetic),
    ("fixture round trip", check_fixture_round_trip),
    ("sampler determinism", check_sampler_determinism),
    ("identity tensor predicates", check_identity_unitary_inverse),
]


def run_selftest(fixture_paths=(), out=print) -> int:
    """Run every invariant; returns 0 on success, 2 on any failure, 4 on bad fixtures."""
    code = 0
    for path in fixture_paths:
        name = Path(path).name
        try:
            t = read_fixture(path)
            out(f"[ok]   fixture {name}: shape {t.shape}")
        except (OSError, ValueError) as exc:
            out(f"[FAIL] fixture {name}: {exc}")
            code = 4
    for name, fn in INVARIANT_CHECKS:
        try:
            fn()
            out(f"[ok]   {name}")
        except AssertionError as exc:
            out(f"[FAIL] {name}: {exc}")
            code = code or 2
    return code
