from .generator import (
    Domain,
    ChannelMatrix,
    ObservationMatrix,
    ChannelGenSpec,
    ChannelError,
    InvalidChannelSpec,
    DomainError,
    ChannelDimensionError,
    stationary_activity,
    sample_support_chain,
    sample_support_chains,
    generate_channel,
    delay_to_freq,
    freq_to_delay,
    to_domain,
    noise_variance,
    observe,
)
from .formats import ChannelFormatError
