"""On-disk formats.

Spinor dumps use a fixed 64-byte binary header followed by float32
re/im pairs, one block per spin channel. Rasters for quick viewing go
out as 16-bit PGM. Scalar results are written as a two-column CSV with
a fixed number format, and every output directory carries a provenance
record (configuration echo, constants, package version; deliberately
no timestamps) so that reruns of the same configuration are
byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from importlib import metadata
from pathlib import Path

import numpy as np

from .constants import CONSTANTS
from .wavefield import Grid, SpinorField

MAGIC = b"SPSL"
FORMAT_VERSION = 1

# magic, version, n, channels, space flag, extent, z; padded to 64 bytes
_HEADER = struct.Struct("<4sIII B 3x d d 28x")
assert _HEADER.size == 64

_SPACE_FLAGS = {"real": 0, "fourier": 1}
_SPACE_NAMES = {v: k for k, v in _SPACE_FLAGS.items()}

try:
    PACKAGE_VERSION = metadata.version("spinslice")
except metadata.PackageNotFoundError:  # pragma: no cover - source checkout
    PACKAGE_VERSION = "unknown"


def write_field(path: str | Path, field: SpinorField) -> None:
    """Dump both spin channels as float32 re/im pairs after the header."""
    n = field.grid.n
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, n, 2,
                          _SPACE_FLAGS[field.space], field.grid.extent,
                          field.z)
    with open(path, "wb") as handle:
        handle.write(header)
        for component in (field.up, field.down):
            block = np.empty((n, n, 2), dtype="<f4")
            block[..., 0] = component.real
            block[..., 1] = component.imag
            handle.write(block.tobytes())


def read_field(path: str | Path) -> SpinorField:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, channels, space_flag, extent, z = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a spinor dump (bad magic {magic!r})")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    if channels != 2:
        raise ValueError(f"{path}: expected 2 spin channels, found {channels}")
    if space_flag not in _SPACE_NAMES:
        raise ValueError(f"{path}: unknown space flag {space_flag}")
    expected = _HEADER.size + 2 * n * n * 2 * 4
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} does not match header"
                         f" (expected {expected})")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    data = data.reshape(2, n, n, 2).astype(np.float64)
    up = data[0, ..., 0] + 1j * data[0, ..., 1]
    down = data[1, ..., 0] + 1j * data[1, ..., 1]
    return SpinorField(up=up, down=down, grid=Grid(n=n, extent=extent), z=z,
                       space=_SPACE_NAMES[space_flag])


def write_intensity_pgm(path: str | Path, intensity: np.ndarray) -> float:
    """16-bit PGM of a non-negative raster, max-normalized.

    Returns the normalization factor (the raster maximum) so callers can
    record it next to the image; a zero raster uses factor 1.
    """
    if np.any(intensity < 0):
        raise ValueError("intensity raster must be non-negative")
    factor = float(intensity.max())
    scale = factor if factor > 0 else 1.0
    levels = np.rint(intensity / scale * 65535.0).astype(">u2")
    _write_pgm(path, levels)
    return factor


def write_phase_pgm(path: str | Path, phase: np.ndarray) -> None:
    """16-bit PGM of a phase raster, linear map of [-pi, pi] onto the
    full level range."""
    levels = np.rint((phase + math.pi) / (2.0 * math.pi) * 65535.0)
    levels = np.clip(levels, 0, 65535).astype(">u2")
    _write_pgm(path, levels)


def _write_pgm(path: str | Path, levels: np.ndarray) -> None:
    if levels.ndim != 2:
        raise ValueError("raster must be two-dimensional")
    rows, cols = levels.shape
    with open(path, "wb") as handle:
        handle.write(f"P5\n{cols} {rows}\n65535\n".encode("ascii"))
        handle.write(levels.tobytes())


def read_pgm16(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) != 4 or parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    cols, rows = (int(v) for v in parts[1].split())
    if parts[2] != b"65535":
        raise ValueError(f"{path}: expected 16-bit depth")
    data = np.frombuffer(parts[3], dtype=">u2", count=rows * cols)
    return data.reshape(rows, cols)


def write_metrics(path: str | Path, metrics: dict[str, float]) -> None:
    """Two-column CSV in insertion order with a fixed float format, so
    identical runs produce identical bytes."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["metric", "value"])
        for name, value in metrics.items():
            if isinstance(value, bool):
                writer.writerow([name, str(int(value))])
            elif isinstance(value, (int, np.integer)):
                writer.writerow([name, str(int(value))])
            else:
                writer.writerow([name, f"{float(value):.12e}"])


def read_metrics(path: str | Path) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["metric", "value"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for name, value in reader:
            out[name] = float(value)
    return out


def write_provenance(path: str | Path, config: dict) -> None:
    """Configuration echo plus the physical constants and package
    version; keys sorted, no volatile fields."""
    payload = {
        "format": FORMAT_VERSION,
        "package": "spinslice",
        "version": PACKAGE_VERSION,
        "constants": {
            "hbar": CONSTANTS.hbar,
            "m_e": CONSTANTS.m_e,
            "e": CONSTANTS.e,
            "c": CONSTANTS.c,
            "mu_B": CONSTANTS.mu_B,
            "g": CONSTANTS.g,
        },
        "config": config,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_provenance(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())
