"""Matrix and frame file formats.

* CSV: comma-separated decimals, one matrix row per line, LF, no header.
  Values are written with 17 significant digits so a round trip is exact.
* PGM: binary greyscale ``P5``; maxval up to 65535 (big-endian 16-bit
  samples above 255). A frame stack stores each frame as one matrix column,
  flattened in row-major pixel order; frame files are read in lexicographic
  filename order.
* Run summaries and config files: flat ``key=value`` lines.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from .exceptions import UsageError
from .linalg import as_matrix


@dataclass(frozen=True)
class FrameStack:
    frame_height: int
    frame_width: int
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix, "frame matrix")
        if m.shape[0] != self.frame_height * self.frame_width:
            raise UsageError(
                f"matrix has {m.shape[0]} rows, expected "
                f"{self.frame_height}x{self.frame_width}={self.frame_height * self.frame_width}"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def frame_count(self) -> int:
        return self.matrix.shape[1]

    def frame(self, j: int) -> np.ndarray:
        return unflatten_frame(self.matrix[:, j], self.frame_height, self.frame_width)

    def with_matrix(self, matrix) -> "FrameStack":
        return FrameStack(self.frame_height, self.frame_width, matrix)


def flatten_frame(frame) -> np.ndarray:
    return np.asarray(frame, dtype=np.float64).reshape(-1)


def unflatten_frame(column, height: int, width: int) -> np.ndarray:
    return np.asarray(column, dtype=np.float64).reshape(height, width)


# -- CSV ---------------------------------------------------------------------


def load_csv(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    rows = []
    width = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.strip()
        if not line:
            continue
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise UsageError(f"{path}:{lineno}: expected {width} columns, found {len(cells)}")
        try:
            values = [float(c) for c in cells]
        except ValueError:
            raise UsageError(f"{path}:{lineno}: cannot parse {line!r} as numbers") from None
        if not all(math.isfinite(v) for v in values):
            raise UsageError(f"{path}:{lineno}: non-finite value")
        rows.append(values)
    if not rows:
        raise UsageError(f"{path}: empty matrix file")
    return np.array(rows, dtype=np.float64)


def save_csv(matrix, path) -> None:
    m = as_matrix(matrix)
    lines = [",".join(repr(float(v)) for v in row) for row in m]
    _write_text(path, "\n".join(lines) + "\n")


# -- PGM ---------------------------------------------------------------------

_PGM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def read_pgm(path) -> np.ndarray:
    """Read a binary ``P5`` PGM as a float array of shape (height, width)."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PGM_TOKEN.match(data, pos)
        if m is None:
            raise UsageError(f"{path}: truncated PGM header at byte {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise UsageError(f"{path}: not a binary PGM (magic {tokens[0]!r} at byte 0)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise UsageError(f"{path}: malformed PGM header near byte {pos}") from None
    if width < 1 or height < 1 or not 0 < maxval <= 65535:
        raise UsageError(f"{path}: invalid PGM dimensions or maxval")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    nbytes = width * height * dtype.itemsize
    if len(data) - pos < nbytes:
        raise UsageError(f"{path}: pixel data truncated at byte {len(data)}, need {pos + nbytes}")
    pixels = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    return pixels.reshape(height, width).astype(np.float64)


def write_pgm(pixels, path, maxval: int = 255) -> None:
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise UsageError("PGM frames must be two-dimensional")
    if not 0 < maxval <= 65535:
        raise UsageError(f"invalid maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    vals = np.clip(np.rint(arr), 0, maxval).astype(dtype)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    _write_bytes(path, header + vals.tobytes())


def load_frames(dir_path, files: Optional[Sequence[str]] = None) -> FrameStack:
    """Stack PGM frames as matrix columns.

    Reads ``files`` (relative to ``dir_path``) or, if omitted, every ``*.pgm``
    in the directory; either way frames are ordered lexicographically.
    """
    dir_path = Path(dir_path)
    if files is None:
        if not dir_path.is_dir():
            raise UsageError(f"{dir_path} is not a directory")
        names = sorted(p.name for p in dir_path.iterdir() if p.suffix.lower() == ".pgm")
    else:
        names = sorted(files)
    if not names:
        raise UsageError(f"no PGM frames found in {dir_path}")
    columns = []
    shape = None
    for name in names:
        frame = read_pgm(dir_path / name)
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise UsageError(
                f"frame {name} has size {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {shape[1]}x{shape[0]}"
            )
        columns.append(flatten_frame(frame))
    return FrameStack(shape[0], shape[1], np.column_stack(columns))


def save_frames(
    stack: FrameStack,
    dir_path,
    clamp: Tuple[float, float] = (0.0, 255.0),
    prefix: str = "frame",
) -> list:
    """Write one 8-bit PGM per column, mapping ``[lo, hi]`` affinely to ``[0, 255]``."""
    lo, hi = (float(v) for v in clamp)
    if not hi > lo:
        raise UsageError(f"clamp range must satisfy lo < hi, got [{lo}, {hi}]")
    dir_path = Path(dir_path)
    try:
        dir_path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {dir_path}: {exc}") from exc
    width = max(4, len(str(stack.frame_count - 1)))
    scaled = (stack.matrix - lo) * (255.0 / (hi - lo))
    paths = []
    for j in range(stack.frame_count):
        p = dir_path / f"{prefix}_{j:0{width}d}.pgm"
        write_pgm(unflatten_frame(scaled[:, j], stack.frame_height, stack.frame_width), p)
        paths.append(p)
    return paths


def symmetric_range(matrix) -> Tuple[float, float]:
    """Clamp range centred at zero covering the matrix's largest magnitude."""
    m = float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0
    m = m if m > 0 else 1.0
    return (-m, m)


# -- key=value ---------------------------------------------------------------


def read_key_values(path) -> Dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def format_key_values(items: Mapping[str, object]) -> str:
    lines = []
    for key, value in items.items():
        if isinstance(value, float):
            value = repr(value)
        elif isinstance(value, bool):
            value = str(value).lower()
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write_key_values(items: Mapping[str, object], path) -> None:
    _write_text(path, format_key_values(items))


def _write_text(path, text: str) -> None:
    _write_bytes(path, text.encode("utf-8"))


def _write_bytes(path, data: bytes) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc
