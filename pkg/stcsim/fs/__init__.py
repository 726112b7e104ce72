from .denoiser import (
    FsParams,
    FsPosterior,
    FrequencySupportDenoiser,
    denoise_fs,
)
