"""Python bindings for the isac-sense toolkit."""

from ._isac_sense import (
    NOISELESS,
    ArrayConfig,
    IsacError,
    OfdmConfig,
    Scatterer,
    crb_curve,
    estimate,
    eval_cvnn,
    export_dataset,
    paraming_flops,
    read_csi,
    simulate_csi,
    write_csi,
)

__all__ = [
    "NOISELESS",
    "ArrayConfig",
    "IsacError",
    "OfdmConfig",
    "Scatterer",
    "crb_curve",
    "estimate",
    "eval_cvnn",
    "export_dataset",
    "paraming_flops",
    "read_csi",
    "simulate_csi",
    "write_csi",
]
