"""
Uniform periodic 2D grid, discrete Fourier transforms and quadrature.

Transform convention: the forward transform is the unnormalized DFT
``F[k] = sum_j f[j] exp(-i k x_j)`` and the inverse carries the full
``1/(n_x n_y)`` factor (scipy's default "backward" normalization). Parseval
then reads ``sum |f|^2 dx dy == sum |F|^2 dx dy / (n_x n_y)``.

Arrays are indexed ``[ix, iy]`` (``meshgrid(..., indexing="ij")``).
"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import fft

from ringsplit.config import logger
from ringsplit.exceptions import GridError

# Density above this at the domain edge means the cloud is wrapping around
BOUNDARY_DENSITY_LIMIT = 1e-10


class Grid2D(BaseModel):
    """Centered uniform grid with spectral wavenumber tables (units 1/a_perp)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_x: int = Field(description="Points along x")
    n_y: int = Field(description="Points along y")
    dx: float = Field(gt=0, description="Spacing along x [a_perp]")
    dy: float = Field(gt=0, description="Spacing along y [a_perp]")
    x_min: float = Field(description="Domain origin along x [a_perp]")
    y_min: float = Field(description="Domain origin along y [a_perp]")
    kx: np.ndarray = Field(description="Wavenumbers along x, standard DFT ordering")
    ky: np.ndarray = Field(description="Wavenumbers along y, standard DFT ordering")

    @model_validator(mode="after")
    def check_tables(self) -> "Grid2D":
        if self.kx.shape != (self.n_x,) or self.ky.shape != (self.n_y,):
            raise ValueError("wavenumber tables do not match the point counts")
        self.kx.flags.writeable = False
        self.ky.flags.writeable = False
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.n_x, self.n_y)

    @property
    def extent(self) -> Tuple[float, float]:
        return (self.n_x * self.dx, self.n_y * self.dy)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_x)

    @property
    def y(self) -> np.ndarray:
        return self.y_min + self.dy * np.arange(self.n_y)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def radius_squared(self) -> np.ndarray:
        X, Y = self.mesh()
        return X ** 2 + Y ** 2

    def k_squared(self) -> np.ndarray:
        KX, KY = np.meshgrid(self.kx, self.ky, indexing="ij")
        return KX ** 2 + KY ** 2

    def same_as(self, other: "Grid2D") -> bool:
        return (
            self.shape == other.shape
            and self.dx == other.dx and self.dy == other.dy
            and self.x_min == other.x_min and self.y_min == other.y_min
        )

    def check_fits_ring(self, r0: float):
        """Reject grids too small to hold a ring of radius ``r0`` and its spreading cloud."""
        if min(self.extent) < 4.0 * r0:
            raise GridError(
                f"grid extent {min(self.extent):.4g} a_perp is smaller than 4*r0 = {4.0 * r0:.4g} a_perp"
            )


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(n: int, step: float, r0: Optional[float] = None) -> Grid2D:
    """Build an ``n x n`` grid of spacing ``step`` centered on the trap origin.

    When ``r0`` is given the grid must also satisfy ``n * step >= 4 * r0``.
    """
    if not isinstance(n, (int, np.integer)) or n < 8 or not _is_power_of_two(int(n)):
        raise GridError(f"grid size must be a power of two >= 8, got {n}")
    if not step > 0:
        raise GridError(f"grid step must be positive, got {step}")

    n = int(n)
    step = float(step)
    k = 2.0 * np.pi * fft.fftfreq(n, d=step)
    grid = Grid2D(
        n_x=n, n_y=n, dx=step, dy=step,
        x_min=-n * step / 2.0, y_min=-n * step / 2.0,
        kx=k, ky=k.copy(),
    )
    if r0 is not None:
        grid.check_fits_ring(r0)
    logger.debug(f"Built {n}x{n} grid, step {step}, extent {n * step:.4f} a_perp")
    return grid


class ComplexField2D(BaseModel):
    """Complex samples on a :class:`Grid2D`, in coordinate or spectral space."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    grid: Grid2D
    spectral: bool = False

    @model_validator(mode="after")
    def check_values(self) -> "ComplexField2D":
        if self.values.shape != self.grid.shape:
            raise GridError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")
        return self

    def norm(self) -> float:
        """Integral of |psi|^2 in coordinate space."""
        if self.spectral:
            return spectral_integrate(np.abs(self.values) ** 2, self.grid)
        return integrate(np.abs(self.values) ** 2, self.grid)

    def with_values(self, values: np.ndarray) -> "ComplexField2D":
        return ComplexField2D(values=values, grid=self.grid, spectral=self.spectral)


def forward_transform(f: ComplexField2D, workers: int = 1) -> ComplexField2D:
    """Unnormalized forward DFT to the spectral representation."""
    if f.spectral:
        raise GridError("field is already in spectral representation")
    return ComplexField2D(values=fft.fft2(f.values, workers=workers), grid=f.grid, spectral=True)


def inverse_transform(F: ComplexField2D, workers: int = 1) -> ComplexField2D:
    """Inverse DFT (carries the 1/(n_x n_y) factor) back to coordinate space."""
    if not F.spectral:
        raise GridError("field is not in spectral representation")
    return ComplexField2D(values=fft.ifft2(F.values, workers=workers), grid=F.grid, spectral=False)


def integrate(f: np.ndarray, grid: Grid2D) -> float:
    """Rectangle-rule quadrature ``sum f dx dy``."""
    return float(np.sum(f) * grid.dx * grid.dy)


def spectral_integrate(power: np.ndarray, grid: Grid2D) -> float:
    """Coordinate-space integral of |f|^2 evaluated from ``|F|^2`` of the forward DFT."""
    return float(np.sum(power) * grid.dx * grid.dy / (grid.n_x * grid.n_y))


def boundary_density(density: np.ndarray) -> float:
    """Largest density on the outermost rows and columns of the grid."""
    return float(max(
        np.max(density[0, :]), np.max(density[-1, :]),
        np.max(density[:, 0]), np.max(density[:, -1]),
    ))
