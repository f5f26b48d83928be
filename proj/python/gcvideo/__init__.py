"""Group-contextualized video feature calibration."""

from gcvideo._core import (
    ConfigError,
    DimensionError,
    GcModule,
    __version__,
    chunk_assignment,
    conv3d,
    ecal_param_count,
    gate_apply,
    gc_param_count,
    generate_dataset,
    gradcheck,
    model_count,
    percentage_table,
    pool_global,
    pool_over_space,
    pool_over_time,
    selftest,
    sigmoid,
    temporal_shift,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "GcModule",
    "__version__",
    "chunk_assignment",
    "conv3d",
    "ecal_param_count",
    "gate_apply",
    "gc_param_count",
    "generate_dataset",
    "gradcheck",
    "model_count",
    "percentage_table",
    "pool_global",
    "pool_over_space",
    "pool_over_time",
    "selftest",
    "sigmoid",
    "temporal_shift",
]
