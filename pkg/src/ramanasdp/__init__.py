"""Exact duals, alternative systems, and rank-revealing reformulations
for semidefinite programs, with certificate verification."""

__version__ = "0.1.0"

from .symmat import (  # noqa: F401
    EPS_PSD,
    ORTH_TOL,
    RECON_TOL,
    NonOrthonormalError,
    NotPsdInputError,
    PsdClass,
    PsdTag,
    SpectralDecomp,
    SymMat,
    TangentResult,
    TangentWitness,
    classify_psd,
    eig,
    psd_plus_tan_contains,
    rotate,
    split_psd_plus_tan,
    tan_contains,
)
from .model import (  # noqa: F401
    DependentConstraintsError,
    DimensionMismatchError,
    DualComplement,
    InconsistentRhsError,
    InfeasibleInputError,
    Reformulation,
    SdpInstance,
    SingularMError,
    apply_a,
    apply_at,
    complement_basis,
    dual_slack,
    instances_close,
    reformulate,
    weak_duality_gap,
)
from .facial import (  # noqa: F401
    AltCertificateRaw,
    AltResult,
    FrSequence,
    FrsValidation,
    NumericalRankAmbiguityError,
    RrForm,
    SubsolverFailureError,
    build_rr_form,
    is_rr_form,
    max_rank_zero_pattern,
    merge_to_bound,
    primal_optimal_value,
    sample_feasible,
    solve_alternative,
    validate_frs,
)
from .subsolver import IterationLimitError  # noqa: F401
from .builders import (  # noqa: F401
    Assignment,
    Constraint,
    PsdBlock,
    StandardFormSdp,
    StrongDualSpec,
    VarSlot,
    build_alt_ram,
    build_dram,
    build_dstrong,
    build_pram,
    build_pstrong,
    build_red,
    dram_size,
    embed_certificate,
    embed_strong_point,
    pstrong_spec_from_slack,
    strong_spec_from_rr,
)
from .verify import (  # noqa: F401
    InductionBreakError,
    LadderRung,
    NormalizationReport,
    RamanaCertificate,
    ShapeMismatchError,
    VerifyOutcome,
    alt_ram_from_rr,
    lift_from_strong,
    normalize_ladder,
    pad_ladder,
    verify_alt_ram,
    verify_dram,
    verify_pram,
    verify_strong,
)
from .sdpa import (  # noqa: F401
    ParseError,
    UnsupportedBlockStructureError,
    read_sdpa,
    write_sdpa,
)
from .certfile import (  # noqa: F401
    CertificateFile,
    CertificateFormatError,
    InstanceHashMismatchError,
    instance_digest,
    read_certificate,
    write_certificate,
)
