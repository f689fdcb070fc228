"""Closed-form tail-bound evaluators with an inner minimization over t.

Every bound is of the shape  prefactor * inf_t e^{-decay * t} * (sum of
positive terms),  where each term contains factors (e^{rate * t} - 1).
Objectives are evaluated in the log domain throughout, so the search can
reach the overflow-guard boundary (largest exponent argument 700) without
producing infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "ChernoffParams",
    "BoundInputs",
    "BoundValue",
    "MinimizeResult",
    "minimize_over_t",
    "chernoff_bound",
    "diag_bound",
    "coupling_bound",
    "hanson_wright_bound",
    "scalar_hw_reference",
    "T_MIN_DEFAULT",
    "EXP_ARG_CAP",
]

T_MIN_DEFAULT = 1e-6
EXP_ARG_CAP = 700.0  # double-precision overflow guard for exp arguments
GRID_POINTS = 512
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class MinimizeResult(NamedTuple):
    t_star: float
    value: float
    overflowed: bool = False


@dataclass(frozen=True)
class BoundValue:
    """Evaluated bound: the infimum value, its minimizer, and per-term trace."""

    value: float
    t_star: float
    trace: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChernoffParams:
    """Constants of the polynomial Chernoff bound for a sum of m random tensors.

    g(x) = (a[0] + a[1] x + ... + a[deg] x^deg)^s with s >= 1 and a >= 0;
    R caps lambda_max of every summand; e_sig1[j] and xi[j] are the
    expected top singular value and the moment statistic of summand j.
    """

    s: float
    a: tuple[float, ...]
    m: int
    k: int
    R: float
    c_cher: float
    e_sig1: tuple[float, ...]
    xi: tuple[float, ...]

    def __post_init__(self):
        if self.s < 1.0:
            raise ValueError(f"s must be >= 1, got {self.s}")
        if any(c < 0 for c in self.a) or not self.a:
            raise ValueError("coefficients must be nonnegative and non-empty")
        if self.m < 1 or self.k < 1:
            raise ValueError("m and k must be >= 1")
        if self.R <= 0 or self.c_cher <= 0:
            raise ValueError("R and c_cher must be > 0")
        if len(self.e_sig1) != self.m or len(self.xi) != self.m:
            raise ValueError("need one (e_sig1, xi) pair per summand")
        if any(v < 0 for v in self.e_sig1) or any(v < 0 for v in self.xi):
            raise ValueError("statistics must be nonnegative")

    @property
    def degree(self) -> int:
        return len(self.a) - 1


@dataclass(frozen=True)
class BoundInputs:
    """Every constant of the quadratic-form tail bound.

    a = (a_0..a_m) are the polynomial coefficients, theta the positive split
    of Theta - |a_0| k over active j (zero at skipped indices), k_caps[i, j-1]
    the Ky Fan caps K_{i,j,k} at the chosen k, and the four statistics arrays
    the per-term E sigma_1 and Xi values (coupling arrays indexed [i, ell]).
    """

    n: int
    a: tuple[float, ...]
    k: int
    theta_total: float
    theta: tuple[float, ...]
    r_d: float
    r_c: float
    k_caps: np.ndarray
    c_cher: float
    d2: float
    e_sig1_diag: np.ndarray
    xi_diag: np.ndarray
    e_sig1_coupling: np.ndarray
    xi_coupling: np.ndarray

    def __post_init__(self):
        m = self.m
        if self.n < 1 or self.k < 1 or m < 1:
            raise ValueError("n, k, and polynomial degree must be >= 1")
        if len(self.theta) != m:
            raise ValueError(f"theta must have {m} entries, got {len(self.theta)}")
        budget = self.theta_total - abs(self.a[0]) * self.k
        if budget <= 0:
            raise ValueError("Theta must exceed |a_0| k")
        for j in range(1, m + 1):
            active = self.a[j] != 0.0
            if active and self.theta[j - 1] <= 0:
                raise ValueError(f"theta_{j} must be > 0 for active coefficient a_{j}")
            if not active and self.theta[j - 1] != 0:
                raise ValueError(f"theta_{j} must be 0 for skipped coefficient a_{j}")
        if abs(sum(self.theta) - budget) > 1e-9 * (1.0 + abs(budget)):
            raise ValueError("theta entries must sum to Theta - |a_0| k")
        if self.r_d <= 0 or self.c_cher <= 0 or self.d2 <= 0:
            raise ValueError("R_d, C_cher, and D_2 must be > 0")
        if self.n > 1 and self.r_c <= 0:
            raise ValueError("R_c must be > 0 when n > 1")
        if np.asarray(self.k_caps).shape != (self.n, m):
            raise ValueError(f"k_caps must have shape ({self.n}, {m})")
        if self.n > 1 and np.any(np.asarray(self.k_caps) <= 0):
            raise ValueError("K caps must be > 0")
        for name in ("e_sig1_diag", "xi_diag", "e_sig1_coupling", "xi_coupling"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.a) - 1

    def active_degrees(self) -> list[int]:
        return [j for j in range(1, self.m + 1) if self.a[j] != 0.0]


# ---------------------------------------------------------------------------
# log-domain helpers
# ---------------------------------------------------------------------------

def _log_expm1(z: float) -> float:
    """log(e^z - 1) for z > 0, stable across the whole range."""
    if z < 30.0:
        return math.log(math.expm1(z))
    return z + math.log1p(-math.exp(-z))


def _log_bracket(weight: float, z: float) -> float:
    """log(1 + (e^z - 1) * weight) for weight >= 0, z >= 0."""
    if weight == 0.0 or z == 0.0:
        return 0.0
    return np.logaddexp(0.0, math.log(weight) + _log_expm1(z))


def _logsumexp(vals: Sequence[float]) -> float:
    arr = np.asarray(vals, dtype=float)
    top = np.max(arr)
    if not np.isfinite(top):
        return float(top)
    return float(top + np.log(np.sum(np.exp(arr - top))))


# ---------------------------------------------------------------------------
# one-dimensional minimization
# ---------------------------------------------------------------------------

def minimize_over_t(
    objective: Callable[[float], float],
    t_min: float,
    t_max: float,
    tol: float = 1e-10,
) -> MinimizeResult:
    """Minimum of objective over [t_min, t_max].

    A 512-point log-spaced grid is scanned, then golden-section search
    refines the best bracket (in log-t).  The returned value never exceeds
    the objective at any evaluated point.  Non-finite evaluations are
    treated as +inf; if everything is infinite the boundary is returned
    with the overflow flag set.
    """
    if not (0 < t_min < t_max):
        raise ValueError(f"need 0 < t_min < t_max, got [{t_min}, {t_max}]")

    def safe(t: float) -> float:
        v = objective(float(t))
        return float(v) if np.isfinite(v) else np.inf

    grid = np.geomspace(t_min, t_max, GRID_POINTS)
    vals = np.array([safe(t) for t in grid])
    best_idx = int(np.argmin(vals))
    best_t, best_v = float(grid[best_idx]), float(vals[best_idx])
    if not np.isfinite(best_v):
        return MinimizeResult(t_star=t_max, value=np.inf, overflowed=True)

    lo = math.log(grid[max(best_idx - 1, 0)])
    hi = math.log(grid[min(best_idx + 1, GRID_POINTS - 1)])
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = safe(math.exp(c)), safe(math.exp(d))
    for _ in range(200):
        if b - a < tol * (1.0 + abs(a)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = safe(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = safe(math.exp(d))
    for lg, fv in ((c, fc), (d, fd)):
        if fv < best_v:
            best_t, best_v = math.exp(lg), fv
    return MinimizeResult(t_star=best_t, value=best_v, overflowed=False)


def _minimize_log_objective(
    log_objective: Callable[[float], float],
    decay: float,
    max_rate: float,
    t_min: float = T_MIN_DEFAULT,
    t_max: Optional[float] = None,
) -> tuple[MinimizeResult, float]:
    """Run the minimizer on a log-domain objective; return (result, log value)."""
    if t_max is None:
        t_max = EXP_ARG_CAP / max_rate if max_rate > 0 else (EXP_ARG_CAP + 100.0) / decay
    t_max = max(t_max, 2 * t_min)
    res = minimize_over_t(log_objective, t_min, t_max)
    log_val = res.value
    value = math.exp(log_val) if log_val < EXP_ARG_CAP else np.inf
    return MinimizeResult(res.t_star, value, res.overflowed), log_val


# ---------------------------------------------------------------------------
# bound evaluators
# ---------------------------------------------------------------------------

def chernoff_bound(params: ChernoffParams, theta: float,
                   t_min: float = T_MIN_DEFAULT, t_max: Optional[float] = None) -> BoundValue:
    """Polynomial Chernoff bound for Pr(||g(sum X_j)||_(k) >= theta)."""
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    deg, s, m, k = params.degree, params.s, params.m, params.k
    weights = [params.e_sig1[j] + params.c_cher * params.xi[j] for j in range(m)]
    const_terms = []
    if params.a[0] > 0:
        const_terms.append(math.log(k) + s * math.log(params.a[0]))

    def log_objective(t: float) -> float:
        terms = list(const_terms)
        for l in range(1, deg + 1):
            if params.a[l] == 0.0:
                continue
            base = math.log(k) + l * s * math.log(params.a[l]) - math.log(m)
            z = m * l * s * params.R * t
            for j in range(m):
                terms.append(base + _log_bracket(weights[j], z))
        if not terms:
            return -theta * t
        return -theta * t + _logsumexp(terms)

    max_rate = m * deg * s * params.R if deg >= 1 else 0.0
    res, log_val = _minimize_log_objective(log_objective, theta, max_rate, t_min, t_max)
    prefactor = (deg + 1) ** (s - 1.0)
    return BoundValue(
        value=prefactor * res.value,
        t_star=res.t_star,
        trace={
            "prefactor": prefactor,
            "log_inf": log_val,
            "overflowed": res.overflowed,
            "theta": theta,
        },
    )


def diag_bound(inputs: BoundInputs, j: int,
               t_min: float = T_MIN_DEFAULT, t_max: Optional[float] = None) -> BoundValue:
    """Tail bound for the j-th power of the diagonal-terms sum."""
    if not 1 <= j <= inputs.m:
        raise ValueError(f"j must be in [1, {inputs.m}], got {j}")
    a_j = abs(inputs.a[j])
    if a_j == 0.0:
        raise ValueError(f"a_{j} = 0: term is skipped upstream")
    n, k = inputs.n, inputs.k
    decay = inputs.theta[j - 1] / (2.0**j * a_j)
    weights = [
        float(inputs.e_sig1_diag[i] + inputs.c_cher * inputs.xi_diag[i]) for i in range(n)
    ]
    log_kn = math.log(k) - math.log(n)

    def log_objective(t: float) -> float:
        z = n * inputs.r_d * t
        terms = [log_kn + _log_bracket(w, z) for w in weights]
        return -decay * t + _logsumexp(terms)

    res, log_val = _minimize_log_objective(
        log_objective, decay, n * inputs.r_d, t_min, t_max
    )
    return BoundValue(
        value=res.value,
        t_star=res.t_star,
        trace={"j": j, "decay_rate": decay, "log_inf": log_val, "overflowed": res.overflowed},
    )


def coupling_bound(inputs: BoundInputs, j: int,
                   t_min: float = T_MIN_DEFAULT, t_max: Optional[float] = None) -> BoundValue:
    """Tail bound for the j-th power of the coupling-terms sum.

    The infimum over t is taken separately inside each i summand, exactly
    as the bound is displayed; n = 1 has no coupling and yields 0.
    """
    if not 1 <= j <= inputs.m:
        raise ValueError(f"j must be in [1, {inputs.m}], got {j}")
    a_j = abs(inputs.a[j])
    if a_j == 0.0:
        raise ValueError(f"a_{j} = 0: term is skipped upstream")
    n, k = inputs.n, inputs.k
    if n == 1:
        return BoundValue(value=0.0, t_star=math.nan, trace={"j": j, "note": "no coupling"})

    log_knm1 = math.log(k) - math.log(n - 1)
    per_i = []
    total = 0.0
    for i in range(n):
        cap = float(np.asarray(inputs.k_caps)[i, j - 1])
        decay = inputs.theta[j - 1] / (2.0**j * n ** (j - 1) * a_j * inputs.d2 * cap)
        weights = [
            float(
                inputs.e_sig1_coupling[i, ell]
                + inputs.c_cher * inputs.xi_coupling[i, ell]
            )
            for ell in range(n)
            if ell != i
        ]

        def log_objective(t: float, _w=weights) -> float:
            z = (n - 1) * inputs.r_c * t
            terms = [log_knm1 + _log_bracket(w, z) for w in _w]
            return -decay * t + _logsumexp(terms)

        res, log_val = _minimize_log_objective(
            log_objective, decay, (n - 1) * inputs.r_c, t_min, t_max
        )
        per_i.append(
            {"i": i, "t_star": res.t_star, "inf_value": res.value, "log_inf": log_val,
             "decay_rate": decay, "overflowed": res.overflowed}
        )
        total += res.value
    value = inputs.d2 * total
    # report the minimizer of the dominant summand
    dominant = max(per_i, key=lambda r: r["inf_value"])
    return BoundValue(
        value=value,
        t_star=dominant["t_star"],
        trace={"j": j, "d2": inputs.d2, "per_i": per_i},
    )


def hanson_wright_bound(inputs: BoundInputs,
                        t_min: float = T_MIN_DEFAULT,
                        t_max: Optional[float] = None) -> BoundValue:
    """Sum over active degrees of the diagonal and coupling bounds."""
    contributions = []
    total = 0.0
    worst_t = math.nan
    worst = -1.0
    for j in inputs.active_degrees():
        d = diag_bound(inputs, j, t_min, t_max)
        c = coupling_bound(inputs, j, t_min, t_max)
        contributions.append(
            {"j": j, "diag": d.value, "coupling": c.value,
             "diag_t_star": d.t_star, "coupling_t_star": c.t_star,
             "diag_trace": d.trace, "coupling_trace": c.trace}
        )
        total += d.value + c.value
        if d.value + c.value > worst:
            worst = d.value + c.value
            worst_t = d.t_star
    return BoundValue(value=total, t_star=worst_t, trace={"terms": contributions})


def scalar_hw_reference(a_matrix: np.ndarray, beta: float, theta: float, c: float) -> float:
    """Classical scalar quadratic-form tail reference for a symmetric matrix.

    2 exp(-(1/c) min(theta^2 / (beta^4 ||A||_HS), theta / (beta^2 ||A||_OP)))
    with ||A||_HS = sqrt(sum |a_ij|^2) and ||A||_OP the operator norm.
    """
    if theta <= 0 or beta <= 0 or c <= 0:
        raise ValueError("theta, beta, and c must be > 0")
    mat = np.asarray(a_matrix, dtype=float)
    hs = float(np.sqrt(np.sum(mat**2)))
    op = float(np.linalg.norm(mat, 2))
    if op == 0.0:
        return 0.0  # zero matrix: the quadratic form is identically zero
    exponent = min(theta**2 / (beta**4 * hs), theta / (beta**2 * op))
    return 2.0 * math.exp(-exponent / c)
