"""Curvature-corrected Tucker approximation of manifold-valued tensors."""
from .correction import (
    CurvatureSystem,
    NormalSystem,
    beta,
    build_B,
    build_curvature_system,
    build_normal_system,
    cc_loss,
    cc_thosvd,
    discrepancy,
    sandwich_bounds_check,
    solve_normal_system,
    zero_delta_lower_bound,
)
from .errors import (
    BadMagic,
    CurvatureTooLarge,
    CutLocusError,
    Diverged,
    HemisphereViolation,
    InvariantViolation,
    MantensorError,
    NoStableStep,
    NotConverged,
    NotPositiveDefinite,
    NumericalError,
    RankClampWarning,
    ShapeMismatch,
    ValidationError,
)
from .experiments import (
    SweepReport,
    SweepRow,
    barycentre,
    benchmark,
    gen_spd_1d,
    gen_spd_2d,
    gen_sphere_1d,
    make_rng,
    nearest_data_barycentre,
    relative_error,
    run_rank_sweep,
)
from .io import ingest_spd_image, read_mvt, read_report_csv, write_mvt, write_report_csv
from .manifold import (
    ManifoldDescriptor,
    ManifoldPoint,
    TangentVector,
    curvature_eigenbasis,
    curvature_operator,
    distance,
    exp_map,
    inner,
    log_map,
    norm,
    orthonormal_basis,
    parallel_transport,
    point,
    random_tangent,
)
from .metriccorr import McTrace, autotune_step, mc_gradient, mc_loss, mc_thosvd
from .mvtensor import (
    MvTensor,
    TangentTensor,
    exp_tensor,
    fold,
    log_tensor,
    mode_k_product,
    multi_mode_product,
    tensor_distance,
    unfold,
)
from .tucker import TuckerFactors, gram_matrix, reconstruct, tangent_svd, thosvd, truncate

__version__ = "0.1.0"
