"""Fine-grained bitrate control by token dropping.

A frame is h*w codebook indices of log2(S) bits each, so achievable frame
sizes form an exact grid with step log2(S). Dropping trades bits for
recoverable token loss: a drop plan keeps the largest token count that fits
a bit budget, either by uniform spatial decimation (stride) or by seeded
uniform sampling. Channel loss then flips further received tokens to
dropped. Dropped positions carry the sentinel index S.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np


class InvalidCodebookSizeError(ValueError):
    """Codebook size must be a power of two >= 2 for integral per-token bits."""


def token_bits(codebook_size: int) -> int:
    """Exact log2 of the codebook size."""
    if codebook_size < 2 or codebook_size & (codebook_size - 1):
        raise InvalidCodebookSizeError(
            f"codebook size must be a power of two >= 2, got {codebook_size}"
        )
    return codebook_size.bit_length() - 1


def bits_per_frame(h: int, w: int, codebook_size: int) -> int:
    """Bits for a full frame: h * w * log2(S)."""
    return h * w * token_bits(codebook_size)


@dataclass(frozen=True)
class MaskedIndexFrame:
    """Index grid plus its drop mask (1 = dropped); dropped cells hold the sentinel S."""

    indices: np.ndarray  # (h, w) int64
    mask: np.ndarray  # (h, w) uint8
    codebook_size: int

    def __post_init__(self):
        if self.indices.shape != self.mask.shape:
            raise ValueError("indices and mask shapes differ")
        received = self.mask == 0
        if np.any(self.indices[received] >= self.codebook_size) or np.any(
            self.indices[received] < 0
        ):
            raise ValueError("received positions must carry indices < codebook size")
        if np.any(self.indices[~received] != self.codebook_size):
            raise ValueError("dropped positions must carry the sentinel index")

    @property
    def shape(self):
        return self.indices.shape

    @property
    def received_count(self) -> int:
        return int((self.mask == 0).sum())

    @property
    def dropped_count(self) -> int:
        return int(self.mask.sum())

    @property
    def payload_bits(self) -> int:
        """Index bits actually carried: received tokens times log2(S)."""
        return self.received_count * token_bits(self.codebook_size)


def full_frame(indices: np.ndarray, codebook_size: int) -> MaskedIndexFrame:
    """Wrap a bare index grid as fully received."""
    idx = np.asarray(indices, dtype=np.int64)
    return MaskedIndexFrame(
        indices=idx.copy(), mask=np.zeros(idx.shape, dtype=np.uint8), codebook_size=codebook_size
    )


@dataclass(frozen=True)
class DropPlan:
    """Token-keeping decision for one frame."""

    keep_count: int
    mode: str = "stride"
    seed: int = 0


def make_plan(
    h: int, w: int, codebook_size: int, target_bits: float, mode: str = "stride", seed: int = 0
) -> DropPlan:
    """Largest keep count whose bits fit the budget."""
    if target_bits < 0:
        raise ValueError("target_bits must be nonnegative")
    if mode not in ("stride", "random"):
        raise ValueError(f"unknown drop mode {mode!r}")
    per_token = token_bits(codebook_size)
    keep = min(h * w, int(target_bits // per_token))
    return DropPlan(keep_count=keep, mode=mode, seed=seed)


def _stride_positions(total: int, keep: int) -> np.ndarray:
    """Round-spaced row-major positions; duplicates backfill to the next unkept slot."""
    kept = np.zeros(total, dtype=bool)
    for j in range(keep):
        pos = int(math.floor(j * total / keep + 0.5))
        if pos >= total:
            pos = total - 1
        while kept[pos]:
            pos = (pos + 1) % total
        kept[pos] = True
    return np.nonzero(kept)[0]


def apply_plan(indices: np.ndarray, codebook_size: int, plan: DropPlan) -> MaskedIndexFrame:
    idx = np.asarray(indices, dtype=np.int64)
    h, w = idx.shape
    total = h * w
    keep = min(plan.keep_count, total)
    mask = np.ones(total, dtype=np.uint8)
    if keep > 0:
        if plan.mode == "stride":
            kept = _stride_positions(total, keep)
        else:
            kept = np.random.default_rng(plan.seed).choice(total, size=keep, replace=False)
        mask[kept] = 0
    out = idx.reshape(-1).copy()
    out[mask == 1] = codebook_size
    return MaskedIndexFrame(
        indices=out.reshape(h, w), mask=mask.reshape(h, w), codebook_size=codebook_size
    )


def plan_drops(
    indices: np.ndarray,
    codebook_size: int,
    target_bits: float,
    mode: str = "stride",
    seed: int = 0,
) -> MaskedIndexFrame:
    """Drop tokens of a frame down to a bit budget; achieved bits never exceed it."""
    idx = np.asarray(indices, dtype=np.int64)
    h, w = idx.shape
    plan = make_plan(h, w, codebook_size, target_bits, mode=mode, seed=seed)
    return apply_plan(idx, codebook_size, plan)


def apply_channel_loss(
    frame: MaskedIndexFrame, loss_prob: float, rng: np.random.Generator
) -> MaskedIndexFrame:
    """Independently flip each received token to dropped with probability loss_prob."""
    if not 0.0 <= loss_prob <= 1.0:
        raise ValueError("loss_prob must lie in [0, 1]")
    lost = (rng.random(frame.mask.shape) < loss_prob) & (frame.mask == 0)
    mask = frame.mask.copy()
    mask[lost] = 1
    indices = frame.indices.copy()
    indices[lost] = frame.codebook_size
    return MaskedIndexFrame(indices=indices, mask=mask, codebook_size=frame.codebook_size)


# token-loss schedule used when training a learned recoverer
DROP_RATE_MEAN = 0.3
DROP_RATE_VARIANCE = 0.3
DROP_RATE_LOW = 0.0
DROP_RATE_HIGH = 0.6


def sample_training_drop_rate(rng: np.random.Generator) -> float:
    """Rejection-sampled normal(mean 0.3, var 0.3) truncated to [0, 0.6]."""
    std = math.sqrt(DROP_RATE_VARIANCE)
    while True:
        draw = rng.normal(DROP_RATE_MEAN, std)
        if DROP_RATE_LOW <= draw <= DROP_RATE_HIGH:
            return float(draw)


def chunk_size(bitrate: float, slot_seconds: float) -> float:
    """Bits queued for one slot at the selected bitrate."""
    if bitrate <= 0 or slot_seconds <= 0:
        raise ValueError("bitrate and slot_seconds must be positive")
    return bitrate * slot_seconds


def snap_bitrate(
    raw: float, codebook_size: int, fps: float, v_min: float, v_max: float
) -> float:
    """Snap a bitrate command onto the token-rate grid (step log2(S)*fps bit/s).

    The result stays inside [v_min, v_max]; the grid realizes per-frame
    granularity of log2(S) bits.
    """
    step = token_bits(codebook_size) * fps
    k_min = math.ceil(v_min / step)
    k_max = math.floor(v_max / step)
    if k_min > k_max:
        raise ValueError("no token-rate grid point inside [v_min, v_max]")
    k = int(math.floor(raw / step + 0.5))
    k = min(max(k, k_min), k_max)
    return k * step


# ---------------------------------------------------------------------------
# diagnostic wire format: header + (position varint, index bit-field) pairs

_HEADER = struct.Struct("<IHHII")


class _BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int) -> None:
        self._acc |= value << self._nbits
        self._nbits += nbits
        while self._nbits >= 8:
            self._bytes.append(self._acc & 0xFF)
            self._acc >>= 8
            self._nbits -= 8

    def write_varint(self, value: int) -> None:
        while True:
            byte = value & 0x7F
            value >>= 7
            self.write(byte | (0x80 if value else 0), 8)
            if not value:
                return

    def getvalue(self) -> bytes:
        out = bytes(self._bytes)
        if self._nbits:
            out += bytes([self._acc & 0xFF])
        return out


class _BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._acc = 0
        self._nbits = 0

    def read(self, nbits: int) -> int:
        while self._nbits < nbits:
            self._acc |= self._data[self._pos] << self._nbits
            self._pos += 1
            self._nbits += 8
        value = self._acc & ((1 << nbits) - 1)
        self._acc >>= nbits
        self._nbits -= nbits
        return value

    def read_varint(self) -> int:
        shift = 0
        value = 0
        while True:
            byte = self.read(8)
            value |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return value
            shift += 7


def encode_frame(frame: MaskedIndexFrame, frame_id: int) -> bytes:
    """Serialize kept tokens: positions as row-major varints, indices bit-packed."""
    h, w = frame.shape
    keep = frame.received_count
    header = _HEADER.pack(frame_id, h, w, frame.codebook_size, keep)
    nbits = token_bits(frame.codebook_size)
    writer = _BitWriter()
    flat_idx = frame.indices.reshape(-1)
    flat_mask = frame.mask.reshape(-1)
    for pos in np.nonzero(flat_mask == 0)[0]:
        writer.write_varint(int(pos))
        writer.write(int(flat_idx[pos]), nbits)
    return header + writer.getvalue()


def decode_frame(data: bytes):
    """Inverse of encode_frame; returns (frame_id, MaskedIndexFrame)."""
    frame_id, h, w, size, keep = _HEADER.unpack_from(data)
    nbits = token_bits(size)
    reader = _BitReader(data[_HEADER.size :])
    indices = np.full(h * w, size, dtype=np.int64)
    mask = np.ones(h * w, dtype=np.uint8)
    for _ in range(keep):
        pos = reader.read_varint()
        indices[pos] = reader.read(nbits)
        mask[pos] = 0
    frame = MaskedIndexFrame(
        indices=indices.reshape(h, w), mask=mask.reshape(h, w), codebook_size=size
    )
    return frame_id, frame
