from .operators import (
    Direction,
    SensingKind,
    SensingOperator,
    OperatorError,
    DimensionMismatch,
    InvalidOperatorSpec,
    DescriptorError,
    dft,
    make_sensing_operator,
    apply_forward,
    apply_adjoint,
    materialize,
)
from .descriptor import to_descriptor, from_descriptor
