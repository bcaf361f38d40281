"""Grid scans of the mean-zero configuration plane.

Plane coordinates (x, y) map to θ = x·(1, −1, 0)/√2 + y·(1, 1, −2)/√6. The
torus 𝕋³ folds this plane onto itself: the projections of 2π·e_i, e.g.
(x, y) = (2π/√2, 2π/√6) and (0, −4π/√6), generate the period lattice, so a
scan can be tiled by translating along those vectors.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from .errors import InvalidInputError
from .index import certificate_arrays
from .locking import frequency_surface
from .model import FloatArray, MeanZeroBasis, check_alpha, embed
from .spectral import DEFAULT_TOL, classify_many, s_dagger_member

DEFAULT_HALF_WIDTH = 2.0 * np.pi * (2.0 / 3.0)


class ScanMode(str, enum.Enum):
    INDEX = "index"
    MOD2 = "mod2"
    SDAGGER = "sdagger"
    SURFACE = "surface"


@dataclass(frozen=True)
class ScanGrid:
    """Regular grid in plane coordinates; n = 4 adds a third axis."""

    alpha: float
    resolution: int = 400
    x_range: tuple[float, float] = (-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    y_range: tuple[float, float] = (-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    z_range: tuple[float, float] = (-DEFAULT_HALF_WIDTH, DEFAULT_HALF_WIDTH)
    n: int = 3

    def __post_init__(self) -> None:
        check_alpha(self.alpha)
        if self.resolution < 2:
            raise InvalidInputError("resolution must be at least 2")
        if self.n not in (3, 4):
            raise InvalidInputError("plane scans support n = 3 (or n = 4 with a z axis)")
        for lo, hi in self.ranges:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise InvalidInputError(f"invalid range ({lo}, {hi})")

    @property
    def ranges(self) -> list[tuple[float, float]]:
        return [self.x_range, self.y_range] + ([self.z_range] if self.n == 4 else [])

    def axes(self) -> list[FloatArray]:
        return [np.linspace(lo, hi, self.resolution) for lo, hi in self.ranges]

    def coords(self) -> FloatArray:
        """Array of shape (res, res, 2) indexed [iy, ix] (or (res, res, res, 3) indexed [iz, iy, ix])."""
        axes = self.axes()
        mesh = np.meshgrid(*reversed(axes), indexing="ij")
        return np.stack(list(reversed(mesh)), axis=-1)

    def thetas(self) -> FloatArray:
        return embed(self.coords(), MeanZeroBasis.for_size(self.n))

    def nearest_index(self, point) -> tuple[int, ...]:
        """Grid index (row-major, slowest axis first) closest to a plane point."""
        idx = [int(np.argmin(np.abs(ax - p))) for ax, p in zip(self.axes(), point)]
        return tuple(reversed(idx))


@dataclass(frozen=True, eq=False)
class ScanResult:
    grid: ScanGrid
    mode: ScanMode
    coords: FloatArray
    values: NDArray  # grid shape, or grid shape + (n + 1,) for the surface mode

    @property
    def columns(self) -> list[str]:
        base = ["x", "y"] + (["z"] if self.grid.n == 4 else [])
        if self.mode is ScanMode.SURFACE:
            return base + [f"omega{i + 1}" for i in range(self.grid.n)] + ["n_plus"]
        return base + ["value"]


def scan(grid: ScanGrid, mode: ScanMode | str, tol: float = DEFAULT_TOL) -> ScanResult:
    """Evaluate one map over the grid.

    index: n₊(J). mod2: n₊(J) mod 2 as predicted by the index identity, −1
    where its hypotheses fail. sdagger: 1 inside the Perron region. surface:
    f(θ) and n₊(J).
    """
    mode = ScanMode(mode)
    coords = grid.coords()
    if mode is ScanMode.SURFACE:
        surf = frequency_surface(coords, grid.alpha, tol)
        values = np.concatenate([surf.omega, surf.n_plus[..., None].astype(np.float64)], axis=-1)
        return ScanResult(grid, mode, coords, values)
    theta = embed(coords, MeanZeroBasis.for_size(grid.n))
    if mode is ScanMode.INDEX:
        values = classify_many(theta, grid.alpha, tol).n_plus
    elif mode is ScanMode.MOD2:
        values = certificate_arrays(theta, grid.alpha, tol).predicted_parity
    else:
        values = np.asarray(s_dagger_member(theta, grid.alpha)).astype(np.int64)
    return ScanResult(grid, mode, coords, values.astype(np.int64))


def connected_components(mask: NDArray[np.bool_]) -> tuple[NDArray[np.int32], int]:
    """Label face-connected (4-connected in 2-D) components of a boolean mask."""
    return ndimage.label(mask)


def stable_component(index_map: NDArray, origin: tuple[int, ...]) -> NDArray[np.bool_]:
    """Cells of the zero-index component containing ``origin``."""
    labels, _ = connected_components(index_map == 0)
    lab = labels[origin]
    if lab == 0:
        return np.zeros_like(index_map, dtype=bool)
    return labels == lab


def contact_fraction(index_map: NDArray, origin: tuple[int, ...]) -> float:
    """Share of the stable component's boundary cells that border an index-2 cell."""
    comp = stable_component(index_map, origin)
    cross = ndimage.generate_binary_structure(index_map.ndim, 1)
    outside_nb = ndimage.binary_dilation(~comp, structure=cross) & comp
    two_nb = ndimage.binary_dilation(index_map == 2, structure=cross) & comp
    boundary = int(outside_nb.sum())
    return float((two_nb & outside_nb).sum()) / boundary if boundary else 0.0
