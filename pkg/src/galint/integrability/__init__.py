"""Formal flows, obstructions, first integrals, commuting frames,
linearization, certificates and Galois descent."""

from .certificates import (
    CertificateCheck,
    CertificateReport,
    IntegrabilityCertificate,
    build_certificate,
    verify_certificate,
)
from .descent import (
    NeedsCovering,
    galois_descent,
    group_closure,
    original_frame_field,
    original_integral,
)
from .fields import (
    CertifiedField,
    CommutingFrame,
    as_cols,
    commuting_fields,
    lie_bracket,
    ratio_lie,
    ratio_order,
    rderive_s,
    rpartial,
    stabilize_frame,
)
from .flows import (
    INCONCLUSIVE_BOUNDS,
    LOG_IN_NORMAL_PART,
    FormalFlow,
    Linearization,
    LogSymbol,
    Obstruction,
    formal_flow,
    invert_flow,
    linearize,
    original_field,
    original_series,
)
from .integrals import FirstIntegral, first_integrals, lie_ratio_residual

__all__ = [
    "INCONCLUSIVE_BOUNDS",
    "LOG_IN_NORMAL_PART",
    "CertificateCheck",
    "CertificateReport",
    "CertifiedField",
    "CommutingFrame",
    "FirstIntegral",
    "FormalFlow",
    "IntegrabilityCertificate",
    "Linearization",
    "LogSymbol",
    "NeedsCovering",
    "Obstruction",
    "as_cols",
    "build_certificate",
    "commuting_fields",
    "first_integrals",
    "formal_flow",
    "galois_descent",
    "group_closure",
    "invert_flow",
    "lie_bracket",
    "lie_ratio_residual",
    "linearize",
    "original_field",
    "original_frame_field",
    "original_integral",
    "original_series",
    "ratio_lie",
    "ratio_order",
    "rderive_s",
    "rpartial",
    "stabilize_frame",
    "verify_certificate",
]
