"""Build third-order feature tensors from a hyperspectral cube.

A cube is a ``(rows, cols, bands)`` array.  Matricization rearranges the
two spatial modes into a single pixel mode in lexicographic order,
giving an ``I x J`` matrix with ``I = rows * cols``.  Tensor builders
stack transformed copies of that matrix as frontal slices:

* patch tensors stack spatially shifted copies (slice 0 unshifted,
  remaining shifts in raster order over the patch window),
* morphological-profile tensors stack closings and openings by
  reconstruction at increasing disk radii around the original image.

Each builder also produces a "mode-3 legend" describing what every
frontal slice is, which the CLI writes next to the tensor so that
third-mode factor plots can be labeled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .morphology import DiskSE, closing_by_reconstruction, opening_by_reconstruction

__all__ = [
    "PatchSpec",
    "MorphSpec",
    "matricize",
    "dematricize",
    "build_patch_tensor",
    "build_mm_tensor",
]


def _as_cube(cube) -> np.ndarray:
    cube = np.asarray(cube, dtype=float)
    if cube.ndim != 3:
        raise ValueError(f"expected a (rows, cols, bands) cube, got ndim={cube.ndim}")
    return cube


def matricize(cube: np.ndarray) -> np.ndarray:
    """Flatten the spatial grid to the pixel mode: pixel i = row * cols + col."""
    cube = _as_cube(cube)
    rows, cols, bands = cube.shape
    return cube.reshape(rows * cols, bands)


def dematricize(m: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`matricize` for a known spatial grid."""
    m = np.asarray(m, dtype=float)
    if m.shape[0] != rows * cols:
        raise ValueError(f"{m.shape[0]} pixels cannot fill a {rows}x{cols} grid")
    return m.reshape(rows, cols, m.shape[1])


@dataclass(frozen=True)
class PatchSpec:
    """Spatial-shift stack over a ``size x size`` window (odd size).

    The third mode has ``K = size**2`` slices; slice 0 is the unshifted
    image and the remaining shifts follow raster order over the window.
    """

    size: int

    def __post_init__(self):
        if self.size < 1 or self.size % 2 == 0:
            raise ValueError(f"patch size must be odd and >= 1, got {self.size}")

    @property
    def k(self) -> int:
        return self.size * self.size

    def offsets(self) -> list[tuple[int, int]]:
        """(drow, dcol) per slice, center first then raster order."""
        h = self.size // 2
        rest = [
            (dr, dc)
            for dr in range(-h, h + 1)
            for dc in range(-h, h + 1)
            if (dr, dc) != (0, 0)
        ]
        return [(0, 0)] + rest

    def legend(self) -> list[dict]:
        out = []
        for idx, (dr, dc) in enumerate(self.offsets()):
            kind = "original" if (dr, dc) == (0, 0) else "shift"
            out.append({"k": idx + 1, "kind": kind, "offset": [dr, dc]})
        return out


@dataclass(frozen=True)
class MorphSpec:
    """Morphological profile: closings then openings by reconstruction.

    For radii ``r1 < ... < rS`` the third mode holds ``K = 2S + 1``
    slices ordered ``CBR(rS), ..., CBR(r1), original, OBR(r1), ...,
    OBR(rS)``, i.e. the untouched image sits in the middle.
    """

    radii: tuple[int, ...]

    def __post_init__(self):
        radii = tuple(int(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if any(r < 1 for r in radii):
            raise ValueError(f"disk radii must be >= 1, got {radii}")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError(f"disk radii must be strictly increasing, got {radii}")

    @property
    def k(self) -> int:
        return 2 * len(self.radii) + 1

    @property
    def original_slice(self) -> int:
        """0-based index of the untouched image along mode 3."""
        return len(self.radii)

    def legend(self) -> list[dict]:
        out = []
        for idx, r in enumerate(reversed(self.radii)):
            out.append({"k": idx + 1, "kind": "cbr", "radius": r})
        out.append({"k": len(self.radii) + 1, "kind": "original"})
        for idx, r in enumerate(self.radii):
            out.append({"k": len(self.radii) + 2 + idx, "kind": "obr", "radius": r})
        return out


def build_patch_tensor(cube: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """Stack shifted copies of the matricized cube as frontal slices.

    Shift (dr, dc) means slice pixel (r, c) reads cube pixel
    (r + dr, c + dc); out-of-scene reads are mirror-reflected.
    """
    cube = _as_cube(cube)
    rows, cols, bands = cube.shape
    if spec.size > min(rows, cols):
        raise ValueError(
            f"patch size {spec.size} exceeds smallest spatial extent {min(rows, cols)}"
        )
    h = spec.size // 2
    padded = np.pad(cube, ((h, h), (h, h), (0, 0)), mode="reflect") if h else cube
    t = np.empty((rows * cols, bands, spec.k))
    for idx, (dr, dc) in enumerate(spec.offsets()):
        shifted = padded[h + dr : h + dr + rows, h + dc : h + dc + cols, :]
        t[:, :, idx] = shifted.reshape(rows * cols, bands)
    return t


def build_mm_tensor(cube: np.ndarray, spec: MorphSpec) -> np.ndarray:
    """Stack the per-band morphological profile as frontal slices."""
    cube = _as_cube(cube)
    rows, cols, bands = cube.shape
    ses = [DiskSE(r) for r in spec.radii]
    t = np.empty((rows * cols, bands, spec.k))
    mid = spec.original_slice
    for j in range(bands):
        img = cube[:, :, j]
        t[:, j, mid] = img.ravel()
        for s, se in enumerate(ses):
            t[:, j, mid - 1 - s] = closing_by_reconstruction(img, se).ravel()
            t[:, j, mid + 1 + s] = opening_by_reconstruction(img, se).ravel()
    return t
