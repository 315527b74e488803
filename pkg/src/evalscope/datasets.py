"""Deterministic synthetic datasets used by demos and acceptance checks."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .decoders import write_ppm

_COLORS = {
    "red": (255, 0, 0),
    "green": (0, 255, 0),
    "blue": (0, 0, 255),
}
_COLOR_INDEX = {"red": 0, "green": 1, "blue": 2}


@dataclass(frozen=True)
class LabeledImage:
    name: str
    pixels: np.ndarray  # (H, W, 3) uint8
    label_index: int  # index into the color label list


def build_border_dataset(size: int = 64, count: int = 20) -> list[LabeledImage]:
    """Images with a solid interior and a thin frame of another color.

    The frame is thin enough that an 87.5% center crop removes it
    entirely, so the interior color is the ground truth; skipping the crop
    leaves the frame in view. Fully parametric, no randomness.
    """
    margin = (size - int(np.floor(size * 87.5 / 100.0))) // 2
    if margin < 1:
        raise ValueError(f"size {size} leaves no crop margin for a border")
    variants = []
    interiors = ("red", "green", "blue")
    borders = ("blue", "red", "green")
    # margin itself is the thickest frame the crop still fully removes
    thicknesses = tuple(dict.fromkeys((2, 3, margin)))
    shades = (255, 204)
    for shade in shades:
        for thickness in thicknesses:
            for interior in interiors:
                for border in borders:
                    if border != interior:
                        variants.append((interior, border, thickness, shade))

    images = []
    for i, (interior, border, thickness, shade) in enumerate(variants[:count]):
        pixels = np.zeros((size, size, 3), np.uint8)
        pixels[:, :] = [min(c, shade) for c in _COLORS[border]]
        t = thickness
        pixels[t : size - t, t : size - t] = [min(c, shade) for c in _COLORS[interior]]
        images.append(
            LabeledImage(
                name=f"frame_{i:02d}_{interior}_in_{border}_t{thickness}_s{shade}",
                pixels=pixels,
                label_index=_COLOR_INDEX[interior],
            )
        )
    if len(images) < count:
        raise ValueError(f"only {len(images)} variants available, {count} requested")
    return images


def write_border_dataset(directory: str | Path, size: int = 64, count: int = 20) -> Path:
    """Materialize the dataset as PPM files plus a ground_truth.txt index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = []
    for image in build_border_dataset(size, count):
        filename = f"{image.name}.ppm"
        (directory / filename).write_bytes(write_ppm(image.pixels))
        lines.append(f"{filename} {image.label_index}")
    (directory / "ground_truth.txt").write_text("\n".join(lines) + "\n")
    return directory


def read_ground_truth(directory: str | Path) -> list[tuple[str, int]]:
    entries = []
    for line in (Path(directory) / "ground_truth.txt").read_text().splitlines():
        if line.strip():
            filename, label = line.rsplit(" ", 1)
            entries.append((filename, int(label)))
    return entries
