"""Einstein-product tensor algebra, Ky Fan tail bounds, and Monte Carlo verification."""

from .tensor_core import (
    DenseTensor,
    TensorShape,
    add,
    conjugate_transpose,
    einstein_product,
    fold,
    frobenius_norm,
    identity,
    inner_product,
    inverse,
    is_hermitian,
    is_unitary,
    read_fixture,
    scale,
    tensor_power,
    trace,
    unfold,
    write_fixture,
    zero,
)
from .spectral import (
    EigDecomposition,
    SpectralDecomposition,
    herm_eig,
    is_positive_definite,
    ky_fan_norm,
    loewner_geq,
    max_eigenvalue,
    power_norm_subadditivity_check,
    singular_values,
    spectral_function,
    svd,
    weakly_majorizes,
)
from .random_ensembles import (
    EnsembleSpec,
    SeedPolicy,
    XiStatistic,
    independent_copies,
    sample_commuting_family,
    sample_ensemble,
    sample_hermitian,
    sample_pd_bounded,
    sample_symmetric_bernoulli,
    xi_exact_commuting,
    xi_statistic,
)
from .quadform import (
    AssumptionReport,
    BlockMatrix,
    BlockVector,
    QuadDecomposition,
    check_assumptions,
    poly_apply,
    quadratic_form,
    theta_split,
)
from .bounds import (
    BoundInputs,
    BoundValue,
    ChernoffParams,
    chernoff_bound,
    coupling_bound,
    diag_bound,
    hanson_wright_bound,
    minimize_over_t,
    scalar_hw_reference,
)
from .verify import (
    DecouplingReport,
    DominanceReport,
    ExperimentSettings,
    TailEstimate,
    check_bernoulli_chaos,
    check_paley_zygmund,
    check_symmetrization,
    empirical_tail,
    estimate_decoupling,
    run_dominance_experiment,
)

__version__ = "0.1.0"
