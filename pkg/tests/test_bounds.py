import math

import numpy as np
import pytest

from eintail.bounds import (
    BoundInputs,
    ChernoffParams,
    chernoff_bound,
    coupling_bound,
    diag_bound,
    hanson_wright_bound,
    minimize_over_t,
    scalar_hw_reference,
)

from . import oracles


# ---------------------------------------------------------------------------
# transcription oracles: plain-float re-statements of the bound formulas
# ---------------------------------------------------------------------------

def chernoff_formula(params: ChernoffParams, theta: float, t: float) -> float:
    deg = params.degree
    inner = params.k * params.a[0] ** params.s
    for l in range(1, deg + 1):
        for j in range(params.m):
            grow = math.exp(params.m * l * params.s * params.R * t) - 1.0
            inner += (params.k * params.a[l] ** (l * params.s) / params.m) * (
                1.0 + grow * params.e_sig1[j] + params.c_cher * grow * params.xi[j]
            )
    return (deg + 1) ** (params.s - 1.0) * math.exp(-theta * t) * inner


def diag_formula(inp: BoundInputs, j: int, t: float) -> float:
    total = 0.0
    for i in range(inp.n):
        grow = math.exp(inp.n * inp.r_d * t) - 1.0
        total += (inp.k / inp.n) * (
            1.0 + grow * inp.e_sig1_diag[i] + inp.c_cher * grow * inp.xi_diag[i]
        )
    return math.exp(-inp.theta[j - 1] * t / (2.0**j * abs(inp.a[j]))) * total


def coupling_formula_per_i(inp: BoundInputs, j: int, i: int, t: float) -> float:
    n = inp.n
    inner = 0.0
    for ell in range(n):
        if ell == i:
            continue
        grow = math.exp((n - 1) * inp.r_c * t) - 1.0
        inner += (inp.k / (n - 1)) * (
            1.0
            + grow * inp.e_sig1_coupling[i, ell]
            + inp.c_cher * grow * inp.xi_coupling[i, ell]
        )
    rate = inp.theta[j - 1] / (2.0**j * n ** (j - 1) * abs(inp.a[j]) * inp.d2 * inp.k_caps[i, j - 1])
    return math.exp(-rate * t) * inner


def make_inputs(**kw):
    defaults = dict(
        n=2,
        a=(0.0, 1.0),
        k=1,
        theta_total=3.0,
        theta=(3.0,),
        r_d=1.0,
        r_c=1.0,
        k_caps=np.array([[1.0], [1.0]]),
        c_cher=1.0,
        d2=8.0,
        e_sig1_diag=np.array([0.5, 0.5]),
        xi_diag=np.array([0.2, 0.2]),
        e_sig1_coupling=np.array([[0.0, 0.4], [0.4, 0.0]]),
        xi_coupling=np.array([[0.0, 0.1], [0.1, 0.0]]),
    )
    defaults.update(kw)
    return BoundInputs(**defaults)


# ---------------------------------------------------------------------------
# minimize_over_t
# ---------------------------------------------------------------------------

def test_monotone_decreasing_hits_boundary():
    res = minimize_over_t(lambda t: math.exp(-t), 0.01, 50.0)
    assert abs(res.t_star - 50.0) < 0.5
    assert abs(res.value - math.exp(-50.0)) < 1e-24


def test_algebraically_simplified_objective():
    res = minimize_over_t(lambda t: math.exp(-2 * t) * (1.0 + (math.exp(t) - 1.0)), 0.01, 50.0)
    assert abs(res.value - math.exp(-50.0)) < 1e-24


def test_matches_dense_grid_oracle():
    f = lambda t: math.exp(-3 * t) * math.exp(2 * t) + math.exp(-3 * t) * 5.0
    res = minimize_over_t(f, 1e-3, 20.0)
    _, ref = oracles.dense_grid_minimum(f, 1e-3, 20.0, points=1_000_000)
    assert abs(res.value - ref) <= 1e-6 * abs(ref)


def test_interior_minimum_beats_dense_grid():
    f = lambda t: math.exp(-2 * t) + 0.1 * math.exp(t)
    res = minimize_over_t(f, 1e-3, 10.0)
    t_ref, v_ref = oracles.dense_grid_minimum(f, 1e-3, 10.0, points=400_000)
    assert res.value <= v_ref + 1e-12
    assert abs(res.value - v_ref) <= 1e-6 * v_ref


def test_never_above_probed_objective():
    f = lambda t: (t - 0.7) ** 2 + 0.3
    res = minimize_over_t(f, 0.01, 5.0)
    for t in np.geomspace(0.01, 5.0, 512):
        assert res.value <= f(t) + 1e-15


def test_nonfinite_objective_flags_boundary():
    res = minimize_over_t(lambda t: math.inf, 0.1, 1.0)
    assert res.overflowed and res.value == math.inf


def test_invalid_interval_rejected():
    with pytest.raises(ValueError):
        minimize_over_t(lambda t: t, 1.0, 0.5)


# ---------------------------------------------------------------------------
# chernoff bound
# ---------------------------------------------------------------------------

def test_chernoff_vanishing_statistics():
    params = ChernoffParams(
        s=1.0, a=(0.0, 1.0), m=1, k=1, R=1.0, c_cher=1.0, e_sig1=(0.0,), xi=(0.0,)
    )
    out = chernoff_bound(params, theta=2.0)
    # objective reduces to e^{-2 t} * k, minimized at the t_max boundary
    assert out.value < 1e-200


def test_chernoff_algebraic_identity_case():
    params = ChernoffParams(
        s=1.0, a=(0.0, 1.0), m=1, k=1, R=1.0, c_cher=1.0, e_sig1=(1.0,), xi=(0.0,)
    )
    out = chernoff_bound(params, theta=2.0, t_max=30.0)
    # objective is e^{-2t}(1 + (e^t - 1)) = e^{-t}: boundary minimum
    assert abs(out.value - math.exp(-30.0)) < 1e-18
    assert abs(out.t_star - 30.0) < 0.5


def test_chernoff_matches_transcription_oracle():
    params = ChernoffParams(
        s=2.0, a=(0.5, 1.0, 0.3), m=2, k=2, R=0.8, c_cher=1.5,
        e_sig1=(0.6, 0.4), xi=(0.3, 0.2),
    )
    theta = 12.0
    # window chosen so the plain-float transcription stays representable
    out = chernoff_bound(params, theta, t_max=30.0)
    at_tstar = chernoff_formula(params, theta, out.t_star)
    assert abs(out.value - at_tstar) <= 1e-9 * at_tstar
    _, ref = oracles.dense_grid_minimum(
        lambda t: chernoff_formula(params, theta, t), 1e-6, 30.0, points=200_000
    )
    assert out.value <= ref * (1 + 1e-6)
    assert abs(out.value - ref) <= 1e-6 * ref


def test_chernoff_rejects_bad_params():
    with pytest.raises(ValueError):
        ChernoffParams(s=0.5, a=(1.0,), m=1, k=1, R=1.0, c_cher=1.0, e_sig1=(0.0,), xi=(0.0,))
    with pytest.raises(ValueError):
        ChernoffParams(s=1.0, a=(-1.0, 1.0), m=1, k=1, R=1.0, c_cher=1.0, e_sig1=(0.0,), xi=(0.0,))
    params = ChernoffParams(
        s=1.0, a=(0.0, 1.0), m=1, k=1, R=1.0, c_cher=1.0, e_sig1=(0.0,), xi=(0.0,)
    )
    with pytest.raises(ValueError):
        chernoff_bound(params, theta=-1.0)


# ---------------------------------------------------------------------------
# diagonal bound
# ---------------------------------------------------------------------------

def test_diag_vanishing_statistics_boundary():
    inp = make_inputs(
        n=1,
        e_sig1_diag=np.zeros(1), xi_diag=np.zeros(1),
        e_sig1_coupling=np.zeros((1, 1)), xi_coupling=np.zeros((1, 1)),
        k_caps=np.array([[1.0]]),
    )
    out = diag_bound(inp, 1)
    assert out.value < 1e-200


def test_diag_monotone_in_theta():
    lo = diag_bound(make_inputs(theta_total=3.0, theta=(3.0,)), 1)
    hi = diag_bound(make_inputs(theta_total=6.0, theta=(6.0,)), 1)
    assert hi.value <= lo.value + 1e-15


def test_diag_worked_instance_dense_grid():
    inp = make_inputs()
    out = diag_bound(inp, 1)
    at_tstar = diag_formula(inp, 1, out.t_star)
    assert abs(out.value - at_tstar) <= 1e-9 * at_tstar
    _, ref = oracles.dense_grid_minimum(
        lambda t: diag_formula(inp, 1, t), 1e-6, 350.0, points=400_000
    )
    assert out.value <= ref * (1 + 1e-6)
    assert abs(out.value - ref) <= 1e-6 * ref


def test_diag_rejects_skipped_degree():
    inp = make_inputs(a=(0.0, 1.0, 0.0), theta_total=3.0, theta=(3.0, 0.0),
                      k_caps=np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(ValueError, match="skipped"):
        diag_bound(inp, 2)


# ---------------------------------------------------------------------------
# coupling bound
# ---------------------------------------------------------------------------

def test_coupling_n1_returns_zero():
    inp = make_inputs(
        n=1,
        e_sig1_diag=np.zeros(1), xi_diag=np.zeros(1),
        e_sig1_coupling=np.zeros((1, 1)), xi_coupling=np.zeros((1, 1)),
        k_caps=np.array([[1.0]]),
    )
    assert coupling_bound(inp, 1).value == 0.0


def test_coupling_vanishing_statistics():
    inp = make_inputs(
        e_sig1_coupling=np.zeros((2, 2)), xi_coupling=np.zeros((2, 2)),
        theta_total=60.0, theta=(60.0,),
    )
    out = coupling_bound(inp, 1)
    # each inner objective is e^{-rate t} * k with rate = 60/(2*8*1)
    assert out.value < 1e-200


def test_coupling_monotone_in_k_caps():
    base = coupling_bound(make_inputs(), 1)
    doubled = coupling_bound(make_inputs(k_caps=np.array([[2.0], [2.0]])), 1)
    assert doubled.value >= base.value - 1e-15


def test_coupling_worked_instance_dense_grid():
    inp = make_inputs(theta_total=40.0, theta=(40.0,))
    out = coupling_bound(inp, 1)
    ref_total = 0.0
    for i in range(2):
        _, v = oracles.dense_grid_minimum(
            lambda t, _i=i: coupling_formula_per_i(inp, 1, _i, t),
            1e-6, 700.0, points=400_000,
        )
        ref_total += v
    ref_total *= inp.d2
    assert abs(out.value - ref_total) <= 1e-6 * ref_total


# ---------------------------------------------------------------------------
# combined bound
# ---------------------------------------------------------------------------

def test_hw_single_degree_is_sum_of_parts():
    inp = make_inputs()
    total = hanson_wright_bound(inp)
    d = diag_bound(inp, 1)
    c = coupling_bound(inp, 1)
    assert total.value == d.value + c.value


def test_hw_trace_sums_to_value():
    inp = make_inputs(
        a=(0.5, 1.0, 0.4),
        theta_total=8.5, theta=(4.0, 4.0),
        k_caps=np.array([[1.0, 1.0], [1.0, 1.0]]),
    )
    out = hanson_wright_bound(inp)
    from_trace = sum(t["diag"] + t["coupling"] for t in out.trace["terms"])
    assert out.value == from_trace


def test_hw_all_zero_statistics_goes_to_zero():
    inp = make_inputs(
        e_sig1_diag=np.zeros(2), xi_diag=np.zeros(2),
        e_sig1_coupling=np.zeros((2, 2)), xi_coupling=np.zeros((2, 2)),
        theta_total=50.0, theta=(50.0,),
    )
    assert hanson_wright_bound(inp).value < 1e-100


def test_hw_monotonicity_in_statistics():
    base = hanson_wright_bound(make_inputs()).value
    for kw in (
        dict(e_sig1_diag=np.array([0.6, 0.6])),
        dict(xi_diag=np.array([0.3, 0.3])),
        dict(e_sig1_coupling=np.array([[0.0, 0.5], [0.5, 0.0]])),
        dict(c_cher=1.3),
        dict(d2=9.0),
        dict(r_d=1.2),
        dict(r_c=1.2),
    ):
        bumped = hanson_wright_bound(make_inputs(**kw)).value
        assert bumped >= base - 1e-12, kw


def test_bound_inputs_validation():
    with pytest.raises(ValueError, match="sum"):
        make_inputs(theta=(2.0,))
    with pytest.raises(ValueError, match="theta_1"):
        make_inputs(theta=(0.0,), theta_total=1.0)
    with pytest.raises(ValueError, match="exceed"):
        make_inputs(a=(5.0, 1.0), theta_total=4.0)
    with pytest.raises(ValueError, match="nonnegative"):
        make_inputs(xi_diag=np.array([-0.1, 0.2]))


# ---------------------------------------------------------------------------
# scalar reference
# ---------------------------------------------------------------------------

def test_scalar_reference_small_theta_limit():
    a = np.eye(2)
    assert abs(scalar_hw_reference(a, 1.0, 1e-12, 1.0) - 2.0) < 1e-6


def test_scalar_reference_hand_value():
    # A = I2: ||A||_HS = sqrt(2), ||A||_OP = 1 -> 2 exp(-min(1/sqrt(2), 1))
    val = scalar_hw_reference(np.eye(2), 1.0, 1.0, 1.0)
    assert abs(val - 2.0 * math.exp(-1.0 / math.sqrt(2.0))) < 1e-12


def test_scalar_reference_shrinks_when_scaling_matrix():
    a = np.array([[1.0, 0.3], [0.3, 0.5]])
    small = scalar_hw_reference(a, 1.0, 2.0, 1.0)
    big = scalar_hw_reference(3.0 * a, 1.0, 2.0, 1.0)
    assert big >= small
