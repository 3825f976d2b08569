"""Grey-level image container, PGM/CSV loading and per-signal classification.

Pixels are kept as exact integers when the source is PGM and as reals when
the source is CSV; downstream exact-arithmetic paths key off the dtype.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class ImageFormatError(ValueError):
    """Malformed image input; carries the line/byte position when known."""

    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


@dataclass(frozen=True)
class Image:
    """Immutable grey image: ``pixels`` is (height, width), row-major."""

    width: int
    height: int
    pixels: np.ndarray
    max_value: float

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ImageFormatError(
                f"image must be at least 2x2, got {self.width}x{self.height}")
        px = np.asarray(self.pixels)
        if px.shape != (self.height, self.width):
            raise ValueError(f"pixel buffer shape {px.shape} does not match "
                             f"{self.height}x{self.width}")
        if self.max_value <= 0:
            raise ImageFormatError(f"max_value must be positive, got {self.max_value}")
        if px.size and (px.min() < 0 or px.max() > self.max_value):
            raise ImageFormatError("intensity outside [0, max_value]")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, arr, max_value=None) -> "Image":
        arr = np.asarray(arr)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if max_value is None:
            top = float(arr.max()) if arr.size else 0.0
            max_value = max(top, 1.0)
        h, w = arr.shape
        return cls(width=w, height=h, pixels=arr, max_value=max_value)

    @property
    def integral(self) -> bool:
        return np.issubdtype(self.pixels.dtype, np.integer)


# --- PGM / CSV -------------------------------------------------------------

class _Cursor:
    """Byte cursor over a PGM header with line/offset tracking."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0
        self.line = 1

    def error(self, message) -> ImageFormatError:
        return ImageFormatError(message, line=self.line, offset=self.pos)

    def skip_space(self) -> None:
        data = self.data
        while self.pos < len(data):
            b = data[self.pos]
            if b in b" \t\r\n\x0b\x0c":
                if b == 0x0A:
                    self.line += 1
                self.pos += 1
            elif b == 0x23:  # '#' comment runs to end of line
                while self.pos < len(data) and data[self.pos] != 0x0A:
                    self.pos += 1
            else:
                return

    def token(self, what: str) -> bytes:
        self.skip_space()
        if self.pos >= len(self.data):
            raise self.error(f"unexpected end of file while reading {what}")
        start = self.pos
        data = self.data
        while self.pos < len(data) and data[self.pos] not in b" \t\r\n\x0b\x0c#":
            self.pos += 1
        return data[start:self.pos]

    def int_token(self, what: str) -> int:
        tok = self.token(what)
        try:
            return int(tok)
        except ValueError:
            raise self.error(f"expected integer for {what}, got {tok!r}") from None

    def at_end(self) -> bool:
        self.skip_space()
        return self.pos >= len(self.data)


def parse_pgm(data: bytes) -> Image:
    """Parse a binary or plain PGM (P5/P2) byte string.

    Netpbm conventions: '#' comments in the header, arbitrary whitespace
    between tokens, a single whitespace byte between maxval and a P5 raster,
    two-byte big-endian samples when maxval > 255.
    """
    cur = _Cursor(data)
    magic = cur.token("magic number")
    if magic not in (b"P2", b"P5"):
        raise cur.error(f"unsupported magic {magic!r}, expected P2 or P5")
    width = cur.int_token("width")
    height = cur.int_token("height")
    if width < 2 or height < 2:
        raise cur.error(f"image must be at least 2x2, got {width}x{height}")
    maxval = cur.int_token("maxval")
    if maxval <= 0 or maxval > 65535:
        raise cur.error(f"maxval must be in 1..65535, got {maxval}")
    count = width * height
    if magic == b"P2":
        samples = np.empty(count, dtype=np.int64)
        for i in range(count):
            v = cur.int_token(f"sample {i}")
            if v < 0 or v > maxval:
                raise cur.error(f"sample {i} = {v} outside [0, {maxval}]")
            samples[i] = v
        if not cur.at_end():
            raise cur.error("trailing data after raster")
    else:
        if cur.pos >= len(data) or data[cur.pos] not in b" \t\r\n":
            raise cur.error("missing whitespace before binary raster")
        if data[cur.pos] == 0x0A:
            cur.line += 1
        cur.pos += 1
        width_bytes = 2 if maxval > 255 else 1
        need = count * width_bytes
        raster = data[cur.pos:cur.pos + need]
        if len(raster) < need:
            raise ImageFormatError(
                f"truncated raster: expected {need} bytes, got {len(raster)}",
                offset=cur.pos + len(raster))
        dtype = ">u2" if width_bytes == 2 else np.uint8
        samples = np.frombuffer(raster, dtype=dtype).astype(np.int64)
        bad = np.flatnonzero(samples > maxval)
        if bad.size:
            i = int(bad[0])
            raise ImageFormatError(
                f"sample {i} = {int(samples[i])} outside [0, {maxval}]",
                offset=cur.pos + i * width_bytes)
    pixels = samples.reshape(height, width)
    return Image(width=width, height=height, pixels=pixels, max_value=float(maxval))


def parse_csv(text: str) -> Image:
    """Parse comma-separated rows of non-negative reals, one line per image row."""
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise ImageFormatError("unparseable number", line=lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ImageFormatError(
                f"ragged row: expected {width} values, got {len(row)}", line=lineno)
        for v in row:
            if not np.isfinite(v) or v < 0:
                raise ImageFormatError(f"invalid intensity {v}", line=lineno)
        rows.append(row)
    if width is None:
        raise ImageFormatError("empty CSV image")
    if width < 2 or len(rows) < 2:
        raise ImageFormatError(
            f"image must be at least 2x2, got {width}x{len(rows)}")
    pixels = np.array(rows, dtype=float)
    return Image.from_array(pixels)


def load_image(path, fmt: str | None = None) -> Image:
    """Load a PGM (P2/P5) or CSV image.

    ``fmt`` is "pgm", "csv" or None to pick by extension, falling back to
    the magic number.
    """
    path = Path(path)
    data = path.read_bytes()
    if fmt is None:
        suffix = path.suffix.lower()
        if suffix in (".pgm", ".pnm"):
            fmt = "pgm"
        elif suffix == ".csv":
            fmt = "csv"
        else:
            fmt = "pgm" if data[:2] in (b"P2", b"P5") else "csv"
    if fmt == "pgm":
        return parse_pgm(data)
    if fmt == "csv":
        return parse_csv(data.decode("ascii"))
    raise ValueError(f"unknown image format {fmt!r}")


def save_pgm(image: Image, path, binary: bool = True) -> None:
    """Write an integral image as P5 (default) or P2."""
    if not image.integral:
        raise ValueError("PGM output needs integer pixels; quantize first")
    maxval = int(image.max_value)
    if maxval > 65535:
        raise ValueError(f"maxval {maxval} exceeds the PGM limit 65535")
    header = f"{'P5' if binary else 'P2'}\n{image.width} {image.height}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            dtype = ">u2" if maxval > 255 else np.uint8
            fh.write(image.pixels.astype(dtype).tobytes())
        else:
            for row in image.pixels:
                fh.write((" ".join(str(int(v)) for v in row) + "\n").encode("ascii"))


def quantize(arr, max_value: int = 255) -> Image:
    """Clamp and round a real-valued array to an integral image."""
    arr = np.asarray(arr, dtype=float)
    pixels = np.clip(np.rint(arr), 0, max_value).astype(np.int64)
    return Image.from_array(pixels, max_value=float(max_value))


# --- signal classification --------------------------------------------------

@dataclass(frozen=True)
class Constant:
    level: float


@dataclass(frozen=True)
class BinaryRuns:
    level: float
    runs: tuple[tuple[int, int], ...]   # 1-based inclusive index ranges


@dataclass(frozen=True)
class General:
    pass


def classify_signal(values):
    """Classify a 1-D signal as Constant, BinaryRuns or General.

    Constant wins when all values are equal (any level, including 0);
    BinaryRuns when the values are {0, v} for a single v > 0, with the runs
    of v listed as sorted 1-based inclusive ranges.
    """
    s = np.asarray(values).ravel()
    if s.size == 0:
        raise ValueError("cannot classify an empty signal")
    first = s[0]
    if np.all(s == first):
        return Constant(level=first.item())
    nonzero = s[s != 0]
    level = nonzero[0]
    if level > 0 and np.all((s == 0) | (s == level)):
        idx = np.flatnonzero(s == level)
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([0], breaks + 1))
        stops = np.concatenate((breaks, [idx.size - 1]))
        runs = tuple((int(idx[a]) + 1, int(idx[b]) + 1) for a, b in zip(starts, stops))
        return BinaryRuns(level=level.item(), runs=runs)
    return General()
