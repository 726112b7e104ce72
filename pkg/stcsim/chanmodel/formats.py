""" Channel and observation file formats

Text format: a header line ``N P domain`` followed by the entries in
row-major order, one ``re,im`` pair per line.

Binary format: a 16-byte magic, the dimensions and a domain code as
little-endian uint64, then the entries as little-endian float64 with real
and imaginary parts interleaved. """

import struct

import numpy as np

from .generator import ChannelMatrix, Domain


MAGIC = b'STCSIM-CHANNEL\x00\x01'

HEADER = struct.Struct('<QQQ')

DOMAIN_CODES = {Domain.ANGLE_FREQUENCY: 0, Domain.ANGLE_DELAY: 1}


class ChannelFormatError(ValueError):
    """ A channel file is malformed """


def format_text(matrix):
    """ Render a matrix in the text format

    >>> m = ChannelMatrix(np.array([[1 + 2j], [0.5 + 0j]]), Domain.ANGLE_DELAY)
    >>> print(format_text(m))
    2 1 ANGLE_DELAY
    1.0,2.0
    0.5,0.0
    """
    values = np.asarray(matrix.values)
    rows, cols = values.shape
    lines = ['{rows} {cols} {domain}'.format(
        rows=rows, cols=cols, domain=matrix.domain.value
    )]
    lines.extend(
        '{re!r},{im!r}'.format(re=float(v.real), im=float(v.imag))
        for v in values.ravel(order='C')
    )
    return '\n'.join(lines)


def parse_text(text):
    """ Parse a matrix from the text format """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines:
        raise ChannelFormatError('empty channel file')

    header = lines[0].split()
    if len(header) != 3:
        raise ChannelFormatError('header must be "N P domain"')

    try:
        rows, cols = int(header[0]), int(header[1])
        domain = Domain(header[2])
    except ValueError as ve:
        raise ChannelFormatError('invalid header: ' + lines[0]) from ve

    entries = lines[1:]
    if len(entries) != rows * cols:
        raise ChannelFormatError(
            'expected {count} entries, got {got}'.format(
                count=rows * cols, got=len(entries)
            )
        )

    try:
        pairs = [tuple(float(x) for x in e.split(',')) for e in entries]
        values = np.array([complex(re, im) for re, im in pairs])
    except ValueError as ve:
        raise ChannelFormatError('malformed entry') from ve

    return ChannelMatrix(values.reshape(rows, cols), domain)


def to_bytes(matrix):
    """ Render a matrix in the binary format """
    values = np.ascontiguousarray(matrix.values, dtype='<c16')
    rows, cols = values.shape
    header = HEADER.pack(rows, cols, DOMAIN_CODES[matrix.domain])
    return MAGIC + header + values.tobytes()


def from_bytes(data):
    """ Parse a matrix from the binary format """
    if data[: len(MAGIC)] != MAGIC:
        raise ChannelFormatError('not a binary channel file')

    offset = len(MAGIC) + HEADER.size
    if len(data) < offset:
        raise ChannelFormatError('truncated header')

    rows, cols, code = HEADER.unpack(data[len(MAGIC):offset])
    domains = {v: k for k, v in DOMAIN_CODES.items()}
    if code not in domains:
        raise ChannelFormatError(
            'unknown domain code {code}'.format(code=code)
        )

    payload = data[offset:]
    if len(payload) != rows * cols * 16:
        raise ChannelFormatError('payload size does not match dimensions')

    values = np.frombuffer(payload, dtype='<c16').reshape(rows, cols)
    return ChannelMatrix(values.astype(np.complex128), domains[code])


def save(matrix, path, binary=False):
    """ Write a channel or observation matrix to `path` """
    if binary:
        with open(path, 'wb') as f:
            f.write(to_bytes(matrix))
    else:
        with open(path, 'w') as f:
            f.write(format_text(matrix) + '\n')


def load(path):
    """ Read a matrix, detecting the format from the file's magic """
    with open(path, 'rb') as f:
        data = f.read()

    if data.startswith(MAGIC):
        return from_bytes(data)

    try:
        text = data.decode('ascii')
    except UnicodeDecodeError as ude:
        raise ChannelFormatError('neither text nor binary format') from ude

    return parse_text(text)
