"""Reproducible samplers for random Hermitian/PD tensor families.

Three constructive families are provided:

* ``commuting`` — every tensor is U diag(lambda) U^H for one shared unitary
  U (seeded separately), eigenvalues i.i.d. uniform on [eig_low, eig_high];
  any two members commute exactly up to rounding.
* ``generic-hermitian`` — (G + G^H)/2 for complex Gaussian G; for PD draws
  the spectrum is affinely mapped into [eig_low, eig_high].
* ``scalar`` — the all-dims-1 embedding; symmetric +-1 when mean_zero,
  uniform on [eig_low, eig_high] otherwise.

Determinism: every draw is keyed by (master_seed, domain, trial index)
through :class:`SeedPolicy`, so results are independent of execution order
and thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .tensor_core import DenseTensor, TensorShape, fold, identity, scale, unfold

__all__ = [
    "EnsembleSpec",
    "SeedPolicy",
    "XiStatistic",
    "FAMILIES",
    "shared_unitary",
    "sample_hermitian",
    "sample_pd_bounded",
    "sample_commuting_family",
    "sample_ensemble",
    "independent_copies",
    "sample_symmetric_bernoulli",
    "ensemble_mean",
    "xi_statistic",
    "xi_from_samples",
    "xi_exact_commuting",
]

FAMILIES = ("commuting", "generic-hermitian", "scalar")

# Spawn-key domains keep the pilot/evaluation/auxiliary streams disjoint
# even under one master seed.
DOMAIN_EVAL = 0
DOMAIN_PILOT = 1
DOMAIN_AUX = 2


@dataclass(frozen=True)
class SeedPolicy:
    """Keyed substream derivation: (master_seed, *key) -> independent stream."""

    master_seed: int

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=tuple(int(k) for k in key))
        )

    def trial_rng(self, trial: int, domain: int = DOMAIN_EVAL) -> np.random.Generator:
        return self.rng(domain, trial)


@dataclass(frozen=True)
class EnsembleSpec:
    """Distributional recipe for a block of n random square tensors."""

    base_shape: TensorShape
    n: int
    family: str = "commuting"
    eig_low: float = 0.2
    eig_high: float = 1.0
    shared_unitary_seed: int = 7
    mean_zero: bool = False

    def __post_init__(self):
        if not self.base_shape.is_square:
            raise ValueError(f"base_shape must be square, got {self.base_shape}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}, expected one of {FAMILIES}")
        if self.family == "scalar" and self.base_shape.row_size != 1:
            raise ValueError("scalar family requires all dims = 1")
        if not (0.0 < self.eig_low <= self.eig_high):
            raise ValueError(
                f"eigenvalue support needs 0 < low <= high, got [{self.eig_low}, {self.eig_high}]"
            )

    @property
    def size(self) -> int:
        return self.base_shape.row_size


@dataclass(frozen=True)
class XiStatistic:
    """Six-term moment statistic of a random tensor's unfolded re/im parts."""

    xi: float
    components: tuple[float, float, float, float, float, float]
    trials: int

    def __post_init__(self):
        assert all(c >= 0 for c in self.components)


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@lru_cache(maxsize=64)
def shared_unitary(size: int, seed: int) -> np.ndarray:
    """Haar-like unitary: QR of a seeded complex Gaussian, phases fixed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9,)))
    q, r = np.linalg.qr(_complex_gaussian(rng, (size, size)))
    d = np.diagonal(r)
    u = q * (d / np.abs(d))
    u.setflags(write=False)
    return u


def sample_hermitian(shape: TensorShape, rng: np.random.Generator) -> DenseTensor:
    """Mean-zero Hermitian draw: (G + G^H)/2 on the unfolded matrix."""
    if not shape.is_square:
        raise ValueError(f"sample_hermitian needs a square shape, got {shape}")
    g = _complex_gaussian(rng, (shape.row_size, shape.row_size))
    return fold((g + g.conj().T) / 2.0, shape)


def sample_pd_bounded(spec: EnsembleSpec, rng: np.random.Generator) -> DenseTensor:
    """One PD tensor with spectrum inside [eig_low, eig_high]."""
    if spec.family == "scalar":
        val = rng.uniform(spec.eig_low, spec.eig_high)
        return DenseTensor(spec.base_shape, np.array([val], dtype=np.complex128))
    if spec.family == "commuting":
        u = shared_unitary(spec.size, spec.shared_unitary_seed)
        lam = rng.uniform(spec.eig_low, spec.eig_high, size=spec.size)
        return fold((u * lam) @ u.conj().T, spec.base_shape)
    # generic-hermitian: symmetrized Gaussian, spectrum mapped affinely.
    h = sample_hermitian(spec.base_shape, rng)
    lam, vecs = np.linalg.eigh(unfold(h))
    lo, hi = lam[0], lam[-1]
    if hi - lo < 1e-12:
        mapped = np.full_like(lam, 0.5 * (spec.eig_low + spec.eig_high))
    else:
        mapped = spec.eig_low + (lam - lo) * (spec.eig_high - spec.eig_low) / (hi - lo)
    return fold((vecs * mapped) @ vecs.conj().T, spec.base_shape)


def sample_commuting_family(spec: EnsembleSpec, rng: np.random.Generator) -> list[DenseTensor]:
    """n simultaneously diagonalizable PD tensors over the shared unitary."""
    if spec.family != "commuting":
        raise ValueError(f"family is {spec.family!r}, not 'commuting'")
    u = shared_unitary(spec.size, spec.shared_unitary_seed)
    out = []
    for _ in range(spec.n):
        lam = rng.uniform(spec.eig_low, spec.eig_high, size=spec.size)
        out.append(fold((u * lam) @ u.conj().T, spec.base_shape))
    if spec.mean_zero:
        mean = ensemble_mean(spec)
        out = [t - mean for t in out]
    return out


def _sample_one(spec: EnsembleSpec, rng: np.random.Generator) -> DenseTensor:
    if spec.family == "scalar":
        if spec.mean_zero:
            val = float(rng.integers(0, 2) * 2 - 1)
        else:
            val = rng.uniform(spec.eig_low, spec.eig_high)
        return DenseTensor(spec.base_shape, np.array([val], dtype=np.complex128))
    if spec.family == "generic-hermitian":
        if spec.mean_zero:
            return sample_hermitian(spec.base_shape, rng)
        return sample_pd_bounded(spec, rng)
    raise AssertionError(spec.family)


def sample_ensemble(spec: EnsembleSpec, rng: np.random.Generator) -> list[DenseTensor]:
    """One realization of the n-block ensemble."""
    if spec.family == "commuting":
        return sample_commuting_family(spec, rng)
    return [_sample_one(spec, rng) for _ in range(spec.n)]


def independent_copies(
    spec: EnsembleSpec, count: int, rng: np.random.Generator
) -> list[list[DenseTensor]]:
    """`count` identically distributed sequences on disjoint substreams."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return [sample_ensemble(spec, child) for child in rng.spawn(count)]


def sample_symmetric_bernoulli(count: int, rng: np.random.Generator) -> np.ndarray:
    """Vector of independent +-1 signs, probability 1/2 each."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return rng.integers(0, 2, size=count).astype(np.float64) * 2.0 - 1.0


def ensemble_mean(spec: EnsembleSpec, rng: Optional[np.random.Generator] = None,
                  trials: int = 2000) -> DenseTensor:
    """Mean of one uncentered block draw: analytic where available, else estimated.

    Commuting and scalar PD draws have the analytic mean midpoint * identity;
    the generic family is estimated from `trials` draws on the given stream
    (trial count is carried by callers' logs).
    """
    mid = 0.5 * (spec.eig_low + spec.eig_high)
    if spec.family in ("commuting", "scalar"):
        return scale(identity(spec.base_shape.row_dims), mid)
    if rng is None:
        raise ValueError("generic family needs an rng to estimate the mean")
    acc = np.zeros((spec.size, spec.size), dtype=np.complex128)
    for _ in range(trials):
        acc += unfold(sample_pd_bounded(spec, rng))
    return fold(acc / trials, spec.base_shape)


# ---------------------------------------------------------------------------
# Xi statistic
# ---------------------------------------------------------------------------

def xi_from_samples(mats: np.ndarray) -> XiStatistic:
    """Xi from a stack of unfolded draws, shape (trials, rows, cols).

    The real and imaginary parts are centered by their empirical means;
    the six components are the row/column square-moment maxima and the
    fourth-moment sums, square- and fourth-rooted.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.ndim != 3:
        raise ValueError(f"expected (trials, rows, cols), got shape {mats.shape}")
    trials = mats.shape[0]
    comps = []
    for part in (mats.real, mats.imag):
        centered = part - part.mean(axis=0, keepdims=True)
        m2 = np.mean(centered**2, axis=0)
        m4 = np.mean(centered**4, axis=0)
        comps.append(float(np.sqrt(np.max(np.sum(m2, axis=1)))))
        comps.append(float(np.sqrt(np.max(np.sum(m2, axis=0)))))
        comps.append(float(np.sum(m4) ** 0.25))
    comps = tuple(comps)
    return XiStatistic(xi=float(sum(comps)), components=comps, trials=trials)


def xi_statistic(
    spec_or_sampler, trials: int, rng: np.random.Generator
) -> XiStatistic:
    """Monte Carlo Xi over `trials` draws.

    Accepts either an :class:`EnsembleSpec` (first block of each draw) or a
    callable `sampler(rng) -> DenseTensor`.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if isinstance(spec_or_sampler, EnsembleSpec):
        spec = spec_or_sampler
        sampler = lambda r: sample_ensemble(spec, r)[0]
    else:
        sampler = spec_or_sampler
    draws = np.stack([unfold(sampler(rng)) for _ in range(trials)])
    return xi_from_samples(draws)


def xi_exact_commuting(spec: EnsembleSpec) -> XiStatistic:
    """Closed-form Xi for one commuting-family tensor.

    With X = U diag(lambda) U^H, lambda_i i.i.d. uniform on [low, high],
    each centered entry is sum_i d_i w_i for i.i.d. mean-zero d_i and fixed
    complex weights w_i = u_ai * conj(u_bi), so second and fourth moments
    reduce to the uniform central moments m2 = span^2/12, m4 = span^4/80.
    """
    if spec.family != "commuting":
        raise ValueError("exact path applies to the commuting family only")
    u = shared_unitary(spec.size, spec.shared_unitary_seed)
    span = spec.eig_high - spec.eig_low
    m2 = span**2 / 12.0
    m4 = span**4 / 80.0
    # weights[a, b, i] = u[a, i] * conj(u[b, i])
    weights = u[:, None, :] * np.conj(u[None, :, :])
    comps = []
    for part in (weights.real, weights.imag):
        e2 = m2 * np.sum(part**2, axis=2)
        # E (sum d_i r_i)^4 = m4 sum r^4 + 3 m2^2 (  (sum r^2)^2 - sum r^4 )
        s2 = np.sum(part**2, axis=2)
        s4 = np.sum(part**4, axis=2)
        e4 = m4 * s4 + 3.0 * m2**2 * (s2**2 - s4)
        comps.append(float(np.sqrt(np.max(np.sum(e2, axis=1)))))
        comps.append(float(np.sqrt(np.max(np.sum(e2, axis=0)))))
        comps.append(float(np.sum(e4) ** 0.25))
    comps = tuple(comps)
    return XiStatistic(xi=float(sum(comps)), components=comps, trials=0)
