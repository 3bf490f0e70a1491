"""Synthetic time-series hyperspectral scene with known factors.

A 128 x 128 grid carries six disjoint objects (rectangles and disks of
distinct sizes), each assigned a fixed percentage mixture of three
26-band signatures (street, vegetation, metal sheets).  The scene is
observed at three time stamps during which materials disappear one by
one, encoded by a 0/1 temporal matrix.  The noiseless tensor is exactly
rank 3 and its generating factors are returned as ground truth;
elementwise Gaussian noise of configurable variance is added on top.

Background pixels carry an all-zero abundance row by default (black
background, deliberately violating the sum-to-one constraint); a config
switch instead assigns them a flat fourth signature for experiments
that need the constraint to hold everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .tensor import reconstruct

__all__ = [
    "ObjectSpec",
    "SyntheticSpec",
    "GroundTruth",
    "ENDMEMBER_NAMES",
    "TEMPORAL_TRUTH",
    "bundled_spectra",
    "background_spectrum",
    "default_layout",
    "generate",
    "layout_to_json",
]

ENDMEMBER_NAMES = ("street", "vegetation", "metal_sheets")

# material presence per time stamp (rows): all three, first two, first only
TEMPORAL_TRUTH = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
    ]
)

# frozen unit-max 26-band signatures; pairwise spectral angles
# 25.5 / 37.7 / 61.5 degrees (pinned by tests)
_STREET = np.array([
    0.461538, 0.478646, 0.496123, 0.513969, 0.532185, 0.550769, 0.569723,
    0.589046, 0.608738, 0.628800, 0.649231, 0.670031, 0.691200, 0.712738,
    0.734646, 0.756923, 0.779569, 0.802585, 0.825969, 0.849723, 0.873846,
    0.898338, 0.923200, 0.948431, 0.974031, 1.000000,
])
_VEGETATION = np.array([
    0.076220, 0.081887, 0.094074, 0.111351, 0.125080, 0.125686, 0.113701,
    0.100225, 0.097139, 0.113231, 0.161152, 0.263139, 0.434574, 0.642119,
    0.813618, 0.915971, 0.965292, 0.984731, 0.985656, 0.971282, 0.949681,
    0.939050, 0.950531, 0.973730, 0.991847, 1.000000,
])
_METAL_SHEETS = np.array([
    0.856299, 0.895573, 0.936655, 0.972587, 0.995840, 1.000000, 0.981366,
    0.939939, 0.879417, 0.806218, 0.727868, 0.651326, 0.581742, 0.521916,
    0.472448, 0.432340, 0.399747, 0.372622, 0.349147, 0.327922, 0.307986,
    0.288736, 0.269829, 0.251080, 0.232401, 0.213750,
])


def bundled_spectra() -> np.ndarray:
    """The three shipped 26-band signatures as a 26 x 3 matrix, columns
    ordered street / vegetation / metal sheets."""
    return np.stack([_STREET, _VEGETATION, _METAL_SHEETS], axis=1)


def background_spectrum() -> np.ndarray:
    """Flat low-reflectance signature used by the ``flat`` background mode."""
    return np.full(26, 0.35)


@dataclass(frozen=True)
class ObjectSpec:
    """One scene object: a ``rect`` (top, left, height, width) or a
    ``disk`` (row, col, radius), with an integer percentage mixture of
    the three endmembers."""

    kind: str
    geometry: tuple[int, ...]
    mixture: tuple[int, int, int]

    def __post_init__(self):
        if self.kind not in ("rect", "disk"):
            raise ValueError(f"unknown object kind {self.kind!r}")
        n = 4 if self.kind == "rect" else 3
        if len(self.geometry) != n:
            raise ValueError(f"{self.kind} geometry needs {n} integers")
        if sum(self.mixture) != 100:
            raise ValueError(f"mixture percentages must sum to 100, got {self.mixture}")

    def mask(self, rows: int, cols: int) -> np.ndarray:
        m = np.zeros((rows, cols), dtype=bool)
        if self.kind == "rect":
            top, left, height, width = self.geometry
            m[top : top + height, left : left + width] = True
        else:
            r0, c0, radius = self.geometry
            rr, cc = np.mgrid[0:rows, 0:cols]
            m[(rr - r0) ** 2 + (cc - c0) ** 2 <= radius**2] = True
        return m

    def abundance_row(self) -> np.ndarray:
        """Mixture as fractions whose float sum is exactly 1."""
        row = np.array([p / 100 for p in self.mixture])
        last = int(np.nonzero(row)[0][-1])
        row[last] = 1.0 - row[:last].sum()
        return row


def default_layout() -> tuple[ObjectSpec, ...]:
    """Six disjoint objects; metal sheets dominate the two small ones."""
    return (
        ObjectSpec("rect", (8, 8, 30, 26), (10, 70, 20)),
        ObjectSpec("disk", (36, 92, 16), (0, 100, 0)),
        ObjectSpec("rect", (60, 18, 10, 10), (0, 0, 100)),
        ObjectSpec("rect", (72, 58, 26, 30), (80, 10, 10)),
        ObjectSpec("disk", (22, 60, 7), (20, 20, 60)),
        ObjectSpec("rect", (96, 12, 24, 32), (100, 0, 0)),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    grid: tuple[int, int] = (128, 128)
    objects: tuple[ObjectSpec, ...] = field(default_factory=default_layout)
    noise_var: float = 0.0
    seed: int = 0
    background: str = "zero"

    def __post_init__(self):
        if self.noise_var < 0:
            raise ValueError(f"noise variance must be >= 0, got {self.noise_var}")
        if self.background not in ("zero", "flat"):
            raise ValueError(f"background must be 'zero' or 'flat', got {self.background!r}")


@dataclass
class GroundTruth:
    """Generating factors and the noiseless tensor they reconstruct."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    noiseless: np.ndarray
    object_pixels: np.ndarray  # flat boolean mask over the pixel mode


def _object_masks(spec: SyntheticSpec) -> list[np.ndarray]:
    rows, cols = spec.grid
    masks = [obj.mask(rows, cols) for obj in spec.objects]
    stack = np.sum(masks, axis=0)
    if np.any(stack > 1):
        raise ValueError("object masks overlap")
    return masks


def generate(spec: SyntheticSpec | None = None):
    """Build the scene tensor and its ground truth.

    Returns ``(tensor, GroundTruth)`` where the tensor is
    ``(rows*cols) x 26 x 3`` with Gaussian noise of the requested
    variance; at zero variance it equals the noiseless tensor bitwise.
    """
    spec = spec or SyntheticSpec()
    rows, cols = spec.grid
    masks = _object_masks(spec)

    b = bundled_spectra()
    c = TEMPORAL_TRUTH.copy()
    n_pix = rows * cols
    a = np.zeros((n_pix, 3))
    for obj, mask in zip(spec.objects, masks):
        a[mask.ravel()] = obj.abundance_row()
    object_pixels = np.logical_or.reduce([m.ravel() for m in masks])

    if spec.background == "flat":
        a = np.hstack([a, np.where(object_pixels, 0.0, 1.0)[:, None]])
        b = np.hstack([b, background_spectrum()[:, None]])
        c = np.hstack([c, np.ones((3, 1))])

    noiseless = reconstruct(a, b, c)
    truth = GroundTruth(a=a, b=b, c=c, noiseless=noiseless, object_pixels=object_pixels)

    if spec.noise_var == 0:
        return noiseless.copy(), truth
    rng = np.random.default_rng(spec.seed)
    noisy = noiseless + rng.normal(0.0, np.sqrt(spec.noise_var), noiseless.shape)
    return noisy, truth


def layout_to_json(spec: SyntheticSpec) -> str:
    doc = {
        "grid": list(spec.grid),
        "endmembers": list(ENDMEMBER_NAMES),
        "background": spec.background,
        "objects": [
            {
                "id": k + 1,
                "kind": obj.kind,
                "geometry": list(obj.geometry),
                "mixture_percent": dict(zip(ENDMEMBER_NAMES, obj.mixture)),
            }
            for k, obj in enumerate(spec.objects)
        ],
    }
    return json.dumps(doc, indent=2)
