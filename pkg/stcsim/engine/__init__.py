from .exceptions import (
    TurboError,
    ModuleAError,
    DivergenceError,
    DomainMismatch,
    ZeroNormTruth,
    DenoiserInputError,
)
from .modules import (
    V_MIN,
    V_MAX,
    ExtrinsicState,
    lmmse_update,
    extrinsic,
    combine,
    nmse,
)
from .denoisers import (
    Denoiser,
    ModuleBOutput,
    IdentityDenoiser,
    check_input,
    IidDenoiser,
)
from .turbo import (
    TurboConfig,
    TrialResult,
    format_db,
    initial_variance,
    run_turbo,
)
