""" Text descriptors of sensing operators

A descriptor is a line-oriented key-value record, so that an experiment can
be replayed with exactly the same operator::

    n = 8
    m = 3
    kind = DFT_RP
    seed = 7
    row_selection = 5,0,3
    permutation = 2,7,1,0,4,6,5,3
"""

import numpy as np

from .operators import SensingOperator, SensingKind, DescriptorError


KEYS = ('n', 'm', 'kind', 'seed', 'row_selection', 'permutation')


def to_descriptor(op):
    """ Serialize an operator

    >>> from stcsim.linops.operators import make_sensing_operator
    >>> op = make_sensing_operator(4, 4, 'DFT', 1)
    >>> print(to_descriptor(op))  # doctest: +ELLIPSIS
    n = 4
    m = 4
    kind = DFT
    seed = 1
    row_selection = ...
    permutation = 0,1,2,3
    """
    values = {
        'n': str(op.n),
        'm': str(op.m),
        'kind': op.kind.value,
        'seed': str(op.seed),
        'row_selection': _join(op.row_selection),
        'permutation': _join(op.permutation),
    }
    return '\n'.join(
        '{key} = {value}'.format(key=key, value=values[key]) for key in KEYS
    )


def from_descriptor(text):
    """ Parse an operator descriptor """
    values = {}

    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue

        if '=' not in line:
            raise DescriptorError(
                'line {lineno}: expected "key = value"'.format(lineno=lineno)
            )

        key, value = (part.strip() for part in line.split('=', 1))
        if key not in KEYS:
            raise DescriptorError('unknown key "{key}"'.format(key=key))

        values[key] = value

    missing = [key for key in KEYS if key not in values]
    if missing:
        raise DescriptorError('missing keys: ' + ', '.join(missing))

    try:
        return SensingOperator(
            n=int(values['n']),
            m=int(values['m']),
            kind=SensingKind(values['kind']),
            seed=int(values['seed']),
            row_selection=_split(values['row_selection']),
            permutation=_split(values['permutation']),
        )
    except ValueError as ve:
        raise DescriptorError(str(ve)) from ve


def _join(indices):
    return ','.join(str(int(i)) for i in indices)


def _split(value):
    return np.array([int(i) for i in value.split(',') if i.strip()])
