"""Geometric condition numbers of tensor rank decompositions."""

from .condition import (
    ConditionResult,
    TerraciniMatrix,
    condition_number,
    condition_numbers_batch,
    condition_oracle,
    terracini_matrix,
)
from .errors import (
    CpdlabError,
    EmptyDistributionError,
    InsufficientDataError,
    InvalidArgumentError,
    NotRankOneError,
    UnsupportedFormatError,
)
from .experiments import (
    CcdfTable,
    PerturbRecord,
    TailFit,
    estimate_ccdf,
    fit_tail,
    perturbation_sweep,
    quantile,
    sample_condition_numbers,
)
from .geometry import (
    OrthoBasis,
    PrincipalAngles,
    Subspace,
    fubini_study_distance,
    grassmann_distance,
    orthonormal_complement,
    principal_angles,
    product_fs_distance,
    projection_distance,
    tangent_basis,
    weighted_distance,
)
from .sampling import (
    NormalStream,
    SampleSpec,
    illposed_shared_first_factor,
    illposed_shared_third_factor,
    perturb_tuple,
    random_rank1_tuple,
)
from .tensor import (
    DenseTensor,
    Rank1Tensor,
    Rank1Tuple,
    TensorFormat,
    extract_factors,
    inner_product,
    outer_product,
    segre_dimension,
    vectorize,
)

__version__ = "0.1.0"
