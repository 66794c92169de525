"""CSV, graymap heatmap and manifest writers."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np
from PIL import Image

HEATMAP_ROWS_1D = 32


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> Tuple[list, np.ndarray]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_profile_csv(path, x: np.ndarray, values: np.ndarray, y: np.ndarray | None = None) -> Path:
    """``(x2f_um, value)`` for profiles, ``(y2f_um, x2f_um, value)`` for maps."""
    values = np.asarray(values)
    if values.ndim == 1:
        return write_csv(path, ("x2f_um", "value"), zip(x, values))
    yy, xx = np.meshgrid(y, x, indexing="ij")
    return write_csv(path, ("y2f_um", "x2f_um", "value"), zip(yy.ravel(), xx.ravel(), values.ravel()))


def write_heatmap(path, image: np.ndarray, *, png: bool = False) -> Tuple[float, float]:
    """8-bit P5 graymap, linearly scaled from the image min (0) to max (255).

    1D profiles are repeated into a stripe.  Returns the (min, max) used.
    """
    img = np.asarray(image, dtype=float)
    if img.ndim == 1:
        img = np.repeat(img[None, :], HEATMAP_ROWS_1D, axis=0)
    lo, hi = float(img.min()), float(img.max())
    scale = (img - lo) / (hi - lo) if hi > lo else np.zeros_like(img)
    level = np.rint(scale * 255.0).astype(np.uint8)
    path = Path(path)
    Image.fromarray(level, mode="L").save(path, format="PPM")
    if png:
        Image.fromarray(level, mode="L").save(path.with_suffix(".png"), format="PNG")
    path.with_name(path.name + ".meta").write_text(f"min = {lo:.9g}\nmax = {hi:.9g}\n")
    return lo, hi


def write_manifest(path, entries: Mapping[str, object]) -> Path:
    path = Path(path)
    lines = []
    for key, value in entries.items():
        text = fmt(value).replace("\n", "\\n")
        lines.append(f"{key} = {text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_manifest(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
