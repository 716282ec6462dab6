"""Reader for MAT-file Level 5 byte streams.

Scope: top-level real numeric arrays only (double, single, and the integer
classes, all widened to float64 on load). Compressed elements are inflated
transparently; cell/struct/object/char/sparse/complex variables are skipped
with a warning. Both byte orders are handled. This is all the diagnosis
pipeline consumes; writing MAT files is out of scope.
"""

import struct
import warnings
import zlib

import numpy as np

from .errors import BadHeader, DecompressFailed, NoNumericArrays, Truncated

# MAT data element type tags.
MI_INT8 = 1
MI_UINT8 = 2
MI_INT16 = 3
MI_UINT16 = 4
MI_INT32 = 5
MI_UINT32 = 6
MI_SINGLE = 7
MI_DOUBLE = 9
MI_INT64 = 12
MI_UINT64 = 13
MI_MATRIX = 14
MI_COMPRESSED = 15

# Array class codes from the miMATRIX flags word.
MX_CELL = 1
MX_STRUCT = 2
MX_OBJECT = 3
MX_CHAR = 4
MX_SPARSE = 5
MX_NUMERIC = {6, 7, 8, 9, 10, 11, 12, 13, 14, 15}

_CLASS_NAMES = {1: "cell", 2: "struct", 3: "object", 4: "char", 5: "sparse"}

# Storage dtype characters for the mi* numeric tags, combined with the
# endianness prefix at read time.
_MI_DTYPE = {
    MI_INT8: "i1", MI_UINT8: "u1",
    MI_INT16: "i2", MI_UINT16: "u2",
    MI_INT32: "i4", MI_UINT32: "u4",
    MI_SINGLE: "f4", MI_DOUBLE: "f8",
    MI_INT64: "i8", MI_UINT64: "u8",
}

_COMPLEX_FLAG = 0x08


class Mat5Warning(UserWarning):
    """A variable was skipped because its class is unsupported."""


class _Reader:
    """Cursor over a byte buffer with checked reads."""

    def __init__(self, buf, byte_order):
        self.buf = buf
        self.pos = 0
        self.order = byte_order  # "<" or ">"

    def remaining(self):
        return len(self.buf) - self.pos

    def take(self, n, what):
        if n > self.remaining():
            raise Truncated(
                f"{what}: need {n} bytes at offset {self.pos}, "
                f"only {self.remaining()} left"
            )
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self, what):
        return struct.unpack(self.order + "I", self.take(4, what))[0]

    def tag(self, what):
        """Read an element tag, handling the packed small-element form.

        Returns (data_type, nbytes, payload_or_None). For small elements the
        4-byte payload is returned inline; otherwise the caller reads
        `nbytes` plus padding to the next 8-byte boundary.
        """
        first = self.u32(what + " tag")
        small_len = first >> 16
        if small_len != 0:
            data = self.take(4, what + " small payload")
            return first & 0xFFFF, small_len, data[:small_len]
        nbytes = self.u32(what + " length")
        return first, nbytes, None

    def element_data(self, nbytes, what):
        data = self.take(nbytes, what)
        pad = (-nbytes) % 8
        if pad:
            self.take(pad, what + " padding")
        return data


def _numeric_subelement(reader, what):
    """Read one numeric subelement and return it as a float64 vector."""
    mi_type, nbytes, inline = reader.tag(what)
    if mi_type not in _MI_DTYPE:
        raise Truncated(f"{what}: unexpected subelement type {mi_type}")
    raw = inline if inline is not None else reader.element_data(nbytes, what)
    dt = np.dtype(reader.order + _MI_DTYPE[mi_type])
    if nbytes % dt.itemsize:
        raise Truncated(f"{what}: {nbytes} bytes is not a whole number of items")
    return np.frombuffer(raw, dtype=dt).astype(np.float64)


def _parse_matrix(payload, byte_order):
    """Parse one miMATRIX payload.

    Returns (name, array) for supported variables or (name, None) after
    recording a warning for the rest.
    """
    r = _Reader(payload, byte_order)

    flags_type, flags_len, inline = r.tag("array flags")
    if flags_type != MI_UINT32 or flags_len != 8:
        raise Truncated("array flags subelement malformed")
    flags_raw = inline if inline is not None else r.element_data(8, "array flags")
    flags_word = struct.unpack(byte_order + "I", flags_raw[:4])[0]
    array_class = flags_word & 0xFF
    is_complex = bool((flags_word >> 8) & _COMPLEX_FLAG)

    dims_type, dims_len, inline = r.tag("dimensions")
    if dims_type != MI_INT32:
        raise Truncated("dimensions subelement malformed")
    dims_raw = inline if inline is not None else r.element_data(dims_len, "dimensions")
    dims = struct.unpack(byte_order + "i" * (dims_len // 4), dims_raw)

    name_type, name_len, inline = r.tag("array name")
    if name_type != MI_INT8:
        raise Truncated("array name subelement malformed")
    name_raw = inline if inline is not None else r.element_data(name_len, "array name")
    name = name_raw.decode("ascii", errors="replace")

    if array_class not in MX_NUMERIC:
        kind = _CLASS_NAMES.get(array_class, f"class {array_class}")
        warnings.warn(f"skipping variable '{name}': unsupported {kind} array",
                      Mat5Warning, stacklevel=3)
        return name, None
    if is_complex:
        warnings.warn(f"skipping variable '{name}': complex arrays unsupported",
                      Mat5Warning, stacklevel=3)
        return name, None

    values = _numeric_subelement(r, f"real part of '{name}'")
    count = int(np.prod(dims)) if dims else 0
    if values.size != count:
        raise Truncated(
            f"variable '{name}': {values.size} values for dims {dims}"
        )
    # MAT arrays are stored column-major.
    return name, values.reshape(dims, order="F")


def parse_mat5(data):
    """Parse a MAT-file Level 5 byte stream.

    Args:
        data: the complete file contents.

    Returns:
        Dict mapping variable name to a float64 ndarray (original shape,
        integer and single values widened).

    Raises:
        BadHeader: not a Level 5 stream.
        Truncated: an element runs past the end of the data.
        DecompressFailed: a compressed element cannot be inflated.
        NoNumericArrays: the file holds no supported variables.
    """
    if len(data) < 128:
        raise BadHeader(f"header needs 128 bytes, got {len(data)}")
    endian_tag = data[126:128]
    if endian_tag == b"IM":
        order = "<"
    elif endian_tag == b"MI":
        order = ">"
    else:
        raise BadHeader(f"unrecognized endian indicator {endian_tag!r}")
    version = struct.unpack(order + "H", data[124:126])[0]
    if version != 0x0100:
        raise BadHeader(f"unsupported version 0x{version:04x}")

    r = _Reader(data, order)
    r.pos = 128
    arrays = {}
    while r.remaining() >= 8:
        mi_type, nbytes, inline = r.tag("data element")
        if mi_type == MI_COMPRESSED:
            # Compressed elements are exempt from 8-byte padding.
            payload = inline if inline is not None else r.take(nbytes, "data element")
            try:
                payload = zlib.decompress(payload)
            except zlib.error as exc:
                raise DecompressFailed(str(exc)) from exc
            inner = _Reader(payload, order)
            mi_type, nbytes, inline = inner.tag("compressed element")
            payload = inline if inline is not None else inner.element_data(
                nbytes, "compressed element")
        else:
            payload = inline if inline is not None else r.element_data(
                nbytes, "data element")
        if mi_type == MI_MATRIX:
            name, arr = _parse_matrix(payload, order)
            if arr is not None:
                arrays[name] = arr
        elif mi_type == 0 and nbytes == 0:
            continue  # alignment slack after an unpadded element
        else:
            warnings.warn(f"skipping top-level element of type {mi_type}",
                          Mat5Warning, stacklevel=2)
    if not arrays:
        raise NoNumericArrays("no real numeric arrays found")
    return arrays
