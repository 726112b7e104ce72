from .denoiser import (
    DEFAULT_EPSILON,
    DsMode,
    DsParams,
    DsPosterior,
    DelaySupportDenoiser,
    denoise_ds,
    ds_column_activity,
    compare_ds_schedules,
)
