"""Little-endian binary file helpers shared by the model, index and victim formats."""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import BadMagicError, TruncatedError, VersionError


class Reader:
    """Strict reader: every short read raises TruncatedError."""

    def __init__(self, fh: BinaryIO, kind: str):
        self._fh = fh
        self.kind = kind

    def read_exact(self, n: int) -> bytes:
        data = self._fh.read(n)
        if len(data) != n:
            raise TruncatedError(
                f"truncated {self.kind} file: wanted {n} more bytes, got {len(data)}"
            )
        return data

    def u8(self) -> int:
        return self.read_exact(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.read_exact(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.read_exact(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.read_exact(8))[0]

    def f32(self) -> float:
        return struct.unpack("<f", self.read_exact(4))[0]

    def f32_block(self, count: int) -> np.ndarray:
        data = self.read_exact(4 * count)
        return np.frombuffer(data, dtype="<f4").copy()

    def utf8(self, n_bytes: int) -> str:
        return self.read_exact(n_bytes).decode("utf-8")


def expect_magic(reader: Reader, magic: bytes) -> None:
    got = reader._fh.read(len(magic))
    if got != magic:
        raise BadMagicError(f"not a {reader.kind} file (bad magic bytes)")


def expect_version(reader: Reader, supported: int) -> None:
    version = reader.u8()
    if version != supported:
        raise VersionError(
            f"unsupported {reader.kind} file version {version} (expected {supported})"
        )


def write_u8(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<B", value))


def write_u16(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<H", value))


def write_u32(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<I", value))


def write_u64(fh: BinaryIO, value: int) -> None:
    fh.write(struct.pack("<Q", value))


def write_f32(fh: BinaryIO, value: float) -> None:
    fh.write(struct.pack("<f", value))


def write_f32_block(fh: BinaryIO, array: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
