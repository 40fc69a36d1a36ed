"""
Field and model builders shared by the test modules.
"""

import math

import numpy as np

from ringsplit.grid import ComplexField2D, Grid2D, integrate
from ringsplit.model import ModelSpec


def free_spec(r0: float = 6.0, d0: float = 1.5) -> ModelSpec:
    """Non-interacting, untrapped model; only the kinetic term acts."""
    return ModelSpec(
        m1=85.0, m2=87.0, rho=(1.0, 87.0 / 85.0), g=((0.0, 0.0), (0.0, 0.0)),
        omega=0.0, V0=0.0, sigma=r0, r0=r0, d0=d0, a_perp=6.763e-7, t_unit=1.0 / (2.0 * math.pi * 130.0),
    )


def gaussian(grid: Grid2D, center=(0.0, 0.0), w: float = 1.0) -> ComplexField2D:
    """Normalized psi ~ exp(-|r - center|^2 / w^2)."""
    X, Y = grid.mesh()
    psi = np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2) / w ** 2).astype(complex)
    psi /= math.sqrt(integrate(np.abs(psi) ** 2, grid))
    return ComplexField2D(values=psi, grid=grid)
