"""Bit-level VLC physical layer: framing, Manchester line code, OOK mapping, airtime.

Frame layout on the wire::

    preamble (16 bits, 0xAA55) | length (8) | payload (8 * length) | CRC-16 (16)

The CRC is CRC-16/CCITT-FALSE computed over the length byte and payload.
Bits are serialized MSB first.
"""

from __future__ import annotations

import binascii
import csv
import io
from dataclasses import dataclass
from enum import IntEnum
from itertools import chain
from typing import Iterable, Sequence

import numpy as np

from .errors import CodeViolationError, FramingError, IntegrityError, SyncError

PREAMBLE = 0xAA55
MAX_PAYLOAD = 255


class Chip(IntEnum):
    LO = 0
    HI = 1


HI, LO = Chip.HI, Chip.LO
_PAIRS = ((LO, HI), (HI, LO))  # indexed by the data bit


@dataclass(frozen=True)
class PhyConfig:
    data_rate: float = 100_000.0  # information bits per second
    amplitude: float = 1.0
    preamble_bits: int = 16

    def __post_init__(self):
        if not self.data_rate > 0:
            raise ValueError(f"data_rate must be > 0, got {self.data_rate}")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be > 0, got {self.amplitude}")
        if self.preamble_bits < 8:
            raise ValueError(f"preamble_bits must be >= 8, got {self.preamble_bits}")

    @property
    def chip_duration(self) -> float:
        return 1.0 / (2.0 * self.data_rate)

    @property
    def preamble(self) -> list[int]:
        # 0xAA55 repeated (or cut) to the configured length.
        pattern = int_to_bits(PREAMBLE, 16)
        return [pattern[i % 16] for i in range(self.preamble_bits)]


def int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def bytes_to_bits(data: bytes) -> list[int]:
    """MSB-first bits of ``data``."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8)).tolist()


def bits_to_bytes(bits: Sequence[int]) -> bytes:
    if len(bits) % 8:
        raise FramingError(f"bit count {len(bits)} is not a whole number of bytes")
    return np.packbits(np.asarray(bits, dtype=np.uint8) & 1).tobytes()


def crc16_ccitt_false(data: bytes) -> int:
    return binascii.crc_hqx(data, 0xFFFF)


# -- line code ---------------------------------------------------------------


def manchester_encode(bits: Iterable[int]) -> list[Chip]:
    """0 -> (LO, HI), 1 -> (HI, LO)."""
    return list(chain.from_iterable(_PAIRS[bool(b)] for b in bits))


def manchester_decode(chips: Sequence[int]) -> list[int]:
    if len(chips) % 2:
        raise FramingError(f"odd chip count {len(chips)}")
    bits = []
    for i in range(0, len(chips), 2):
        a, b = chips[i], chips[i + 1]
        if a == b:
            raise CodeViolationError(i // 2)
        bits.append(1 if a == HI else 0)
    return bits


@dataclass(frozen=True)
class IntensityWaveform:
    """Intensity offsets (+A / -A) around the lamp's nominal level."""

    samples: np.ndarray
    chip_duration: float

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.chip_duration

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s", "intensity"])
        for t, s in zip(self.times.tolist(), self.samples.tolist()):
            w.writerow([repr(float(t)), repr(float(s))])
        return buf.getvalue()


def ook_modulate(chips: Sequence[int], cfg: PhyConfig) -> IntensityWaveform:
    a = cfg.amplitude
    levels = np.fromiter(chips, dtype=np.int8, count=len(chips))
    samples = np.where(levels == HI, a, -a).astype(float)
    return IntensityWaveform(samples, cfg.chip_duration)


# -- framing -----------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    payload: bytes
    preamble_bits: int = 16

    def __post_init__(self):
        if not 1 <= len(self.payload) <= MAX_PAYLOAD:
            raise ValueError(f"payload length must be 1..{MAX_PAYLOAD}, got {len(self.payload)}")

    @property
    def payload_length(self) -> int:
        return len(self.payload)

    @property
    def checksum(self) -> int:
        return crc16_ccitt_false(bytes([self.payload_length]) + self.payload)

    @property
    def bit_length(self) -> int:
        return self.preamble_bits + 8 + 8 * self.payload_length + 16

    def serialize(self) -> list[int]:
        body = bytes([self.payload_length]) + self.payload
        return (
            PhyConfig(preamble_bits=self.preamble_bits).preamble
            + bytes_to_bits(body)
            + int_to_bits(self.checksum, 16)
        )

    def to_hex(self) -> str:
        return bits_to_bytes(self.serialize()).hex()

    @classmethod
    def from_hex(cls, text: str, preamble_bits: int = 16) -> "Frame":
        bits = bytes_to_bits(bytes.fromhex(text))
        return cls(parse_frame(bits, PhyConfig(preamble_bits=preamble_bits)), preamble_bits)


def build_frame(payload: bytes, cfg: PhyConfig = PhyConfig()) -> Frame:
    return Frame(bytes(payload), cfg.preamble_bits)


def parse_frame(bits: Sequence[int], cfg: PhyConfig = PhyConfig()) -> bytes:
    """Return the payload carried by a serialized frame.

    Raises SyncError if the preamble is absent, FramingError on truncation,
    IntegrityError on CRC mismatch.
    """
    bits = list(bits)
    pre = cfg.preamble
    if bits[: len(pre)] != pre:
        raise SyncError("preamble not found")
    pos = len(pre)
    body_bits = len(bits) - pos - 16
    if body_bits < 16 or body_bits % 8:
        raise FramingError(f"{len(bits)} bits cannot hold a whole frame")
    end = pos + body_bits
    # Check the CRC before trusting the length byte, so a corrupted length
    # is reported as an integrity failure.
    body = bits_to_bytes(bits[pos:end])
    crc = int.from_bytes(bits_to_bytes(bits[end:]), "big")
    expected = crc16_ccitt_false(body)
    if crc != expected:
        raise IntegrityError(f"CRC mismatch: got {crc:#06x}, expected {expected:#06x}")
    if body[0] != len(body) - 1:
        raise IntegrityError(f"length field {body[0]} disagrees with {len(body) - 1} payload bytes")
    return body[1:]


def frame_airtime(frame_bits: int, cfg: PhyConfig = PhyConfig()) -> float:
    """Seconds to send ``frame_bits`` information bits at ``cfg.data_rate``."""
    if frame_bits < 1:
        raise ValueError(f"frame_bits must be >= 1, got {frame_bits}")
    return frame_bits / cfg.data_rate
