"""Output files: frame tables, PPM space-time maps and small CSV tables."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import Frame


class OutputError(OSError):
    pass


def _g9(values: np.ndarray) -> np.ndarray:
    return np.char.mod("%.9g", values)


def _write_bytes(path: Path, payload: bytes):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(payload)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def frames_csv_bytes(frames: Sequence[Frame], x: np.ndarray) -> bytes:
    if not frames:
        raise ValueError("no frames to write")
    x = np.asarray(x, dtype=float)
    xs = _g9(x)
    lines = ["t,x,density,upper_density,lower_density"]
    for f in frames:
        t = "%.9g" % f.t
        cols = np.stack([xs, _g9(f.density), _g9(f.upper_density), _g9(f.lower_density)], axis=1)
        lines.extend(t + "," + ",".join(row) for row in cols)
    return ("\n".join(lines) + "\n").encode("ascii")


def write_frames_csv(frames: Sequence[Frame], x: np.ndarray, path: os.PathLike):
    """Columns ``t,x,density,upper_density,lower_density``, t-major, 9 significant digits."""
    _write_bytes(Path(path), frames_csv_bytes(frames, x))


def heatmap_ppm_bytes(densities: Sequence[np.ndarray]) -> bytes:
    if len(densities) == 0:
        raise ValueError("no frames to draw")
    rho = np.asarray(densities, dtype=float)
    top = rho.max()
    level = np.zeros_like(rho) if top <= 0 else rho / top
    gray = np.rint(255 * np.clip(level, 0.0, 1.0)).astype(np.uint8)
    height, width = gray.shape
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + np.repeat(gray[..., None], 3, axis=2).tobytes()


def write_heatmap_ppm(frames: Sequence[Frame], path: os.PathLike):
    """Binary PPM, one row per frame (earliest first), gray scaled by the global maximum."""
    _write_bytes(Path(path), heatmap_ppm_bytes([f.density for f in frames]))


def table_csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else ("%d" % v if isinstance(v, (int, np.integer)) else "%.9g" % v) for v in row))
    return ("\n".join(out) + "\n").encode("ascii")


def write_spectrum_csv(eigenvalues: Sequence[float], path: os.PathLike):
    """``index,eigenvalue`` with the eigenvalues ascending."""
    values = np.sort(np.asarray(eigenvalues, dtype=float))
    if values.size == 0:
        raise ValueError("empty spectrum")
    _write_bytes(Path(path), table_csv_bytes(("index", "eigenvalue"), enumerate(values.tolist())))


def write_table_csv(header: Sequence[str], rows: Iterable[Sequence], path: os.PathLike):
    _write_bytes(Path(path), table_csv_bytes(header, rows))


def read_ppm(path: os.PathLike) -> tuple[int, int, np.ndarray]:
    """Width, height and gray levels (first channel) of a file written here."""
    data = Path(path).read_bytes()
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P6" or maxval != b"255":
        raise ValueError("not a P6 file with maxval 255")
    width, height = map(int, dims.split())
    pixels = np.frombuffer(rest, dtype=np.uint8).reshape(height, width, 3)
    return width, height, pixels[..., 0]
