"""Raw video readers producing canonical 10-bit luma planes.

Only the Y plane is kept. 8-bit sources are promoted to 10 bit by a left
shift of two, so an 8-bit quantization step shows up as a 10-bit step of 4.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import InputError

MAX_CODEWORD = 1023

# chroma_format -> (horizontal subsampling, vertical subsampling); None = no chroma
CHROMA_FORMATS = {
    "420": (2, 2),
    "444": (1, 1),
    "mono": None,
}

# Y4M colorspace tag -> (chroma_format, bit_depth)
_Y4M_COLORSPACES = {
    "420": ("420", 8),
    "420jpeg": ("420", 8),
    "420paldv": ("420", 8),
    "420mpeg2": ("420", 8),
    "444": ("444", 8),
    "420p10": ("420", 10),
    "444p10": ("444", 10),
    "mono": ("mono", 8),
    "mono10": ("mono", 10),
}


class MediaError(InputError):
    pass


@dataclass(frozen=True)
class LumaPlane:
    """One frame of luma samples as 10-bit codewords, shape (height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples)
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise MediaError(f"luma plane must be a non-empty 2-D array, got shape {a.shape}")
        if a.size and (a.min() < 0 or a.max() > MAX_CODEWORD):
            raise MediaError("luma samples must lie in [0, 1023]")
        a = np.ascontiguousarray(a, dtype=np.uint16)
        a.flags.writeable = False
        object.__setattr__(self, "samples", a)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def from_8bit(cls, samples) -> "LumaPlane":
        return cls(np.asarray(samples, dtype=np.uint16) << 2)


@dataclass(frozen=True)
class FrameSequence:
    frames: tuple[LumaPlane, ...]
    frame_rate: Fraction = Fraction(0)
    source_bit_depth: int = 10
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise MediaError("no frames")
        shape = frames[0].samples.shape
        for i, f in enumerate(frames):
            if f.samples.shape != shape:
                raise MediaError(
                    f"frame {i} has size {f.width}x{f.height}, expected {shape[1]}x{shape[0]}"
                )
        if self.source_bit_depth not in (8, 10):
            raise MediaError(f"unsupported bit depth {self.source_bit_depth}")
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i):
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


def _plane_sizes(width: int, height: int, chroma_format: str) -> tuple[int, int]:
    """Return (luma samples, chroma samples across both chroma planes)."""
    try:
        sub = CHROMA_FORMATS[chroma_format]
    except KeyError:
        raise MediaError(f"unsupported chroma format {chroma_format!r}") from None
    luma = width * height
    if sub is None:
        return luma, 0
    sx, sy = sub
    cw = (width + sx - 1) // sx
    ch = (height + sy - 1) // sy
    return luma, 2 * cw * ch


def _decode_luma(buf: bytes, width: int, height: int, bit_depth: int) -> LumaPlane:
    if bit_depth == 8:
        y = np.frombuffer(buf, dtype=np.uint8).reshape(height, width)
        return LumaPlane(y.astype(np.uint16) << 2)
    y = np.frombuffer(buf, dtype="<u2").reshape(height, width)
    if y.size and y.max() > MAX_CODEWORD:
        raise MediaError(f"10-bit sample value {int(y.max())} exceeds 1023")
    return LumaPlane(y.astype(np.uint16))


def _as_stream(data) -> BinaryIO:
    if isinstance(data, (bytes, bytearray, memoryview)):
        return io.BytesIO(bytes(data))
    return data


def _read_exact(stream: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = stream.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def _parse_rate(token: str) -> Fraction:
    try:
        num, den = token.split(":")
        return Fraction(int(num), int(den)) if int(den) else Fraction(0)
    except (ValueError, ZeroDivisionError):
        raise MediaError(f"malformed Y4M frame rate {token!r}") from None


def read_y4m(data) -> FrameSequence:
    """Parse a YUV4MPEG2 stream (bytes or binary file object)."""
    stream = _as_stream(data)
    header = stream.readline()
    if not header.endswith(b"\n"):
        raise MediaError("malformed Y4M header: missing newline")
    tokens = header.decode("ascii", errors="replace").split()
    if not tokens or tokens[0] != "YUV4MPEG2":
        raise MediaError("malformed Y4M header: missing YUV4MPEG2 signature")

    width = height = None
    rate = Fraction(0)
    colorspace = "420jpeg"
    for tok in tokens[1:]:
        key, val = tok[0], tok[1:]
        if key == "W":
            width = _parse_dimension(val, "width")
        elif key == "H":
            height = _parse_dimension(val, "height")
        elif key == "F":
            rate = _parse_rate(val)
        elif key == "C":
            colorspace = val
    if width is None or height is None:
        raise MediaError("malformed Y4M header: missing W or H")
    if colorspace not in _Y4M_COLORSPACES:
        raise MediaError(f"unsupported Y4M colorspace {colorspace!r}")
    chroma_format, bit_depth = _Y4M_COLORSPACES[colorspace]

    luma, chroma = _plane_sizes(width, height, chroma_format)
    bps = 1 if bit_depth == 8 else 2
    luma_bytes, chroma_bytes = luma * bps, chroma * bps

    frames = []
    while True:
        marker = stream.readline()
        if not marker:
            break
        if not marker.startswith(b"FRAME"):
            raise MediaError(f"malformed Y4M stream: expected FRAME marker before frame {len(frames)}")
        if not marker.endswith(b"\n"):
            raise MediaError(f"truncated frame payload in frame {len(frames)}")
        y = _read_exact(stream, luma_bytes)
        rest = _read_exact(stream, chroma_bytes)
        if len(y) != luma_bytes or len(rest) != chroma_bytes:
            raise MediaError(f"truncated frame payload in frame {len(frames)}")
        frames.append(_decode_luma(y, width, height, bit_depth))
    if not frames:
        raise MediaError("no frames")
    return FrameSequence(
        tuple(frames),
        frame_rate=rate,
        source_bit_depth=bit_depth,
        metadata={"colorspace": colorspace},
    )


def _parse_dimension(val: str, name: str) -> int:
    try:
        n = int(val)
    except ValueError:
        raise MediaError(f"malformed Y4M header: bad {name} {val!r}") from None
    if n <= 0:
        raise MediaError(f"malformed Y4M header: {name} must be positive")
    return n


def read_raw_yuv(data, width: int, height: int, bit_depth: int = 8,
                 chroma_format: str = "420") -> FrameSequence:
    """Parse headerless planar YUV. 10-bit samples are little-endian 16-bit words."""
    if width <= 0 or height <= 0:
        raise MediaError(f"zero or negative dimensions {width}x{height}")
    if bit_depth not in (8, 10):
        raise MediaError(f"unsupported bit depth {bit_depth}")
    stream = _as_stream(data)
    buf = stream.read()
    luma, chroma = _plane_sizes(width, height, chroma_format)
    bps = 1 if bit_depth == 8 else 2
    frame_bytes = (luma + chroma) * bps
    if len(buf) % frame_bytes:
        raise MediaError(
            f"truncated frame: {len(buf)} bytes is not a multiple of the {frame_bytes}-byte frame size"
        )
    n = len(buf) // frame_bytes
    if n == 0:
        raise MediaError("no frames")
    frames = tuple(
        _decode_luma(buf[i * frame_bytes:i * frame_bytes + luma * bps], width, height, bit_depth)
        for i in range(n)
    )
    return FrameSequence(frames, source_bit_depth=bit_depth)


def _encode_luma(plane: LumaPlane, bit_depth: int) -> bytes:
    if bit_depth == 8:
        if np.any(plane.samples & 3):
            raise MediaError("plane has codewords that are not multiples of 4; cannot store as 8-bit")
        return (plane.samples >> 2).astype(np.uint8).tobytes()
    return plane.samples.astype("<u2").tobytes()


def write_raw_yuv(planes: Iterable[LumaPlane], stream: BinaryIO, bit_depth: int = 10) -> None:
    """Write luma-only raw frames (the inverse of read_raw_yuv with chroma_format='mono')."""
    for p in planes:
        stream.write(_encode_luma(p, bit_depth))


def write_y4m(planes: Sequence[LumaPlane], stream: BinaryIO, bit_depth: int = 8,
              frame_rate: Fraction = Fraction(25)) -> None:
    """Write frames as 4:2:0 Y4M with neutral chroma."""
    planes = list(planes)
    if not planes:
        raise MediaError("no frames")
    w, h = planes[0].width, planes[0].height
    tag = "420jpeg" if bit_depth == 8 else "420p10"
    rate = Fraction(frame_rate)
    stream.write(f"YUV4MPEG2 W{w} H{h} F{rate.numerator}:{rate.denominator} Ip A1:1 C{tag}\n".encode())
    _, chroma = _plane_sizes(w, h, "420")
    if bit_depth == 8:
        neutral = bytes([128]) * chroma
    else:
        neutral = np.full(chroma, 512, dtype="<u2").tobytes()
    for p in planes:
        stream.write(b"FRAME\n")
        stream.write(_encode_luma(p, bit_depth))
        stream.write(neutral)


def load_sequence(path, raw: bool = False, width: int | None = None, height: int | None = None,
                  bit_depth: int = 8, chroma_format: str = "420") -> FrameSequence:
    with open(path, "rb") as fh:
        if raw:
            return read_raw_yuv(fh, width, height, bit_depth, chroma_format)
        return read_y4m(fh)
