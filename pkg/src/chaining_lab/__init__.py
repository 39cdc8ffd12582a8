"""Generic chaining functionals on finite metric spaces, empirical Orlicz norms,
and Monte Carlo checks of quadratic empirical-process bounds."""

__version__ = "0.1.0"

from .chaining import (
    AdmissibleSequence,
    GammaResult,
    Partition,
    SubadditivityCertificate,
    block_of,
    chaining_value,
    check_admissible,
    gamma_exact,
    gamma_greedy,
    merge_sequences,
    subadditivity_certificate,
)
from .metric import FiniteMetricSpace, diameter, restrict, validate_metric
from .orlicz import (
    OrliczEstimate,
    SampleSet,
    class_metric,
    psi2_from_psi1_square,
    psi_alpha_empirical,
    vector_subgaussian_norm,
)
from .seeding import derive_stream

__all__ = [
    "AdmissibleSequence",
    "FiniteMetricSpace",
    "GammaResult",
    "OrliczEstimate",
    "Partition",
    "SampleSet",
    "SubadditivityCertificate",
    "block_of",
    "chaining_value",
    "check_admissible",
    "class_metric",
    "derive_stream",
    "diameter",
    "gamma_exact",
    "gamma_greedy",
    "merge_sequences",
    "psi2_from_psi1_square",
    "psi_alpha_empirical",
    "restrict",
    "subadditivity_certificate",
    "validate_metric",
    "vector_subgaussian_norm",
]
