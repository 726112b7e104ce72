from .bernoulli import (
    BGPrior,
    IidPosterior,
    PriorError,
    support_logit,
    support_evidence,
    bg_scalar_posterior,
    slab_second_moment,
    denoise_bg_iid,
)
from .markov import (
    ChainParams,
    ChainPosterior,
    ChainError,
    EVIDENCE_CLIP,
    chain_forward_backward,
    chain_forward_backward_logit,
    leave_one_out,
)
