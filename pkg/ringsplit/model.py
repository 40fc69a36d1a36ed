"""
Physical-to-dimensionless conversion, coupling matrix, ring-trap potential
and the initial dual-Gaussian state.

Lengths are in a_perp = sqrt(hbar / (2 m1 omega_perp)), times in 1/omega_perp
and energies in hbar omega_perp. Wavefunctions are normalized to one; atom
numbers enter only through the couplings g_ij.
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import constants
from scipy.optimize import brentq

from ringsplit.config import RunConfig, logger
from ringsplit.exceptions import ModelError
from ringsplit.grid import ComplexField2D, Grid2D, integrate

SPECIES = (1, 2)


def _check_species(species: int) -> int:
    if species not in SPECIES:
        raise ModelError(f"species must be 1 or 2, got {species}")
    return species


class PhysicalParams(BaseModel):
    """Laboratory parameters of the isotope mixture."""

    model_config = ConfigDict(frozen=True)

    m1: float = Field(gt=0, description="Mass of species 1 [a.u.]")
    m2: float = Field(gt=0, description="Mass of species 2 [a.u.]")
    N1: float = Field(gt=0, description="Atom count of species 1")
    N2: float = Field(gt=0, description="Atom count of species 2")
    a11: float = Field(allow_inf_nan=False, description="Scattering length [m]")
    a22: float = Field(allow_inf_nan=False, description="Scattering length [m]")
    a12: float = Field(ge=0, allow_inf_nan=False, description="Interspecies scattering length [m]")
    omega_perp: float = Field(gt=0, description="Transverse angular frequency [rad/s]")
    aspect_ratio: float = Field(description="Trap aspect ratio lambda")
    omega_r: float = Field(gt=0, description="Radial angular frequency [rad/s]")

    @classmethod
    def from_config(cls, config: RunConfig) -> "PhysicalParams":
        phys = config.physical
        return cls(
            m1=phys.m1, m2=phys.m2, N1=phys.N1, N2=phys.N2,
            a11=phys.a11, a22=phys.a22, a12=phys.a12 * phys.a11,
            omega_perp=phys.omega_perp, aspect_ratio=phys.aspect_ratio,
            omega_r=config.trap.omega * phys.omega_perp,
        )


class ModelSpec(BaseModel):
    """Dimensionless model parameters consumed by the solver."""

    model_config = ConfigDict(frozen=True)

    m1: float = Field(gt=0, description="Mass of species 1 [a.u.]")
    m2: float = Field(gt=0, description="Mass of species 2 [a.u.]")
    rho: Tuple[float, float] = Field(description="Mass ratios m_i/m1")
    g: Tuple[Tuple[float, float], Tuple[float, float]] = Field(description="Coupling matrix g_ij")
    omega: float = Field(ge=0, description="omega_r/omega_perp")
    V0: float = Field(ge=0, description="Spike amplitude [hbar omega_perp]")
    sigma: float = Field(gt=0, description="Spike waist [a_perp]")
    r0: float = Field(gt=0, description="Ring radius [a_perp]")
    d0: float = Field(gt=0, description="Initial peak waist [a_perp]")
    a_perp: float = Field(gt=0, description="Length unit [m]")
    t_unit: float = Field(gt=0, description="Time unit [s]")

    @model_validator(mode="after")
    def check_rho(self) -> "ModelSpec":
        if self.rho[0] != 1.0:
            raise ValueError("rho[1] must be exactly 1")
        return self

    @property
    def g_matrix(self) -> np.ndarray:
        return np.array(self.g, dtype=float)

    def kinetic_factor(self, species: int) -> float:
        """Prefactor m1/(2 m_i) of the Laplacian for ``species``."""
        return 0.5 / self.rho[_check_species(species) - 1]

    def seconds(self, t: float) -> float:
        return t * self.t_unit


def derive_units(p: PhysicalParams) -> Tuple[float, float]:
    """Return ``(a_perp [m], t_unit [s])``; a_perp carries the factor 2 in the root."""
    mass = p.m1 * constants.atomic_mass
    a_perp = math.sqrt(constants.hbar / (2.0 * mass * p.omega_perp))
    return a_perp, 1.0 / p.omega_perp


def coupling_matrix(p: PhysicalParams, a_perp: Optional[float] = None) -> np.ndarray:
    """g_ij = sqrt(2 pi lambda) (m1 + m2) a_ij N_j / (m2 a_perp)."""
    if not p.aspect_ratio > 0:
        raise ModelError(f"aspect ratio lambda must be positive, got {p.aspect_ratio}")
    if a_perp is None:
        a_perp, _ = derive_units(p)
    scattering = np.array([[p.a11, p.a12], [p.a12, p.a22]])
    counts = np.array([p.N1, p.N2])
    prefactor = math.sqrt(2.0 * math.pi * p.aspect_ratio) * (p.m1 + p.m2) / (p.m2 * a_perp)
    return prefactor * scattering * counts[np.newaxis, :]


def calibrate_spike(omega: float, sigma: float, r0: float, rho1: float = 1.0) -> float:
    """Spike amplitude V0 placing the species-1 radial minimum exactly at ``r0``.

    dV/dr = r [rho omega^2 / 2 - (4 V0 / sigma^2) exp(-2 r^2 / sigma^2)] vanishes at r0 for
    V0 = (rho omega^2 sigma^2 / 8) exp(2 r0^2 / sigma^2).
    """
    if not sigma > 0 or not r0 > 0:
        raise ModelError(f"sigma and r0 must be positive, got sigma={sigma}, r0={r0}")
    if not omega > 0:
        raise ModelError(f"omega = {omega} leaves no harmonic confinement, so no ring minimum exists")
    if not 2.0 * r0 ** 2 > sigma ** 2 / 2.0:
        raise ModelError(
            f"no ring-shaped minimum: need 2*r0^2 > sigma^2/2, got r0={r0}, sigma={sigma}"
        )
    exponent = 2.0 * r0 ** 2 / sigma ** 2
    if exponent > 700.0:
        raise ModelError(f"spike amplitude overflows for r0/sigma = {r0 / sigma:.3g}; widen sigma")
    return rho1 * omega ** 2 * sigma ** 2 / 8.0 * math.exp(exponent)


def radial_potential(r: np.ndarray, spec: ModelSpec, species: int) -> np.ndarray:
    rho = spec.rho[_check_species(species) - 1]
    r2 = np.asarray(r, dtype=float) ** 2
    return 0.25 * rho * spec.omega ** 2 * r2 + spec.V0 * np.exp(-2.0 * r2 / spec.sigma ** 2)


def ring_potential(grid: Grid2D, spec: ModelSpec, species: int) -> np.ndarray:
    """V_i(x, y) = rho_i omega^2 r^2 / 4 + V0 exp(-2 r^2 / sigma^2) sampled on ``grid``."""
    return radial_potential(np.sqrt(grid.radius_squared()), spec, species)


def ring_minimum_radius(spec: ModelSpec, species: int = 1) -> float:
    """Numerically located radial minimum of V_i (root of dV/dr / r)."""
    rho = spec.rho[_check_species(species) - 1]
    if spec.V0 == 0.0 or spec.omega == 0.0:
        raise ModelError("potential has no ring minimum without both spike and harmonic terms")

    def slope_over_r(r: float) -> float:
        return 0.5 * rho * spec.omega ** 2 - 4.0 * spec.V0 / spec.sigma ** 2 * math.exp(-2.0 * r ** 2 / spec.sigma ** 2)

    upper = spec.r0 + 5.0 * spec.sigma
    if slope_over_r(0.0) >= 0.0 or slope_over_r(upper) <= 0.0:
        raise ModelError("radial potential has no interior minimum")
    return brentq(slope_over_r, 0.0, upper, xtol=1e-14, rtol=1e-14)


class InitialStateSpec(BaseModel):
    """Geometry of the initial binary peak."""

    model_config = ConfigDict(frozen=True)

    r0: float = Field(gt=0, description="Ring radius [a_perp]")
    d0: float = Field(0.75, gt=0, description="Peak waist [a_perp]")
    centers: List[Tuple[float, float]] = Field(description="Peak centers [a_perp]")
    weights: Optional[List[float]] = Field(None, description="Relative amplitude per peak; equal when unset")

    @model_validator(mode="after")
    def check_centers(self) -> "InitialStateSpec":
        for cx, cy in self.centers:
            if abs(math.hypot(cx, cy) - self.r0) > 1e-9:
                raise ValueError(f"center ({cx}, {cy}) is not on the ring of radius {self.r0}")
        if self.weights is not None and len(self.weights) != len(self.centers):
            raise ValueError("one weight per center is required")
        return self

    @classmethod
    def dual_peak(cls, r0: float, d0: float) -> "InitialStateSpec":
        return cls(r0=r0, d0=d0, centers=[(r0, 0.0), (-r0, 0.0)])


def build_model_spec(p: PhysicalParams, r0: float, d0: float, sigma: Optional[float] = None,
                     V0: Optional[float] = None) -> ModelSpec:
    """Convert laboratory parameters and trap geometry to a calibrated :class:`ModelSpec`."""
    a_perp, t_unit = derive_units(p)
    g = coupling_matrix(p, a_perp)
    omega = p.omega_r / p.omega_perp
    sigma = r0 if sigma is None else sigma
    if V0 is None:
        V0 = calibrate_spike(omega, sigma, r0)
    return ModelSpec(
        m1=p.m1, m2=p.m2, rho=(1.0, p.m2 / p.m1),
        g=(tuple(g[0]), tuple(g[1])),
        omega=omega, V0=V0, sigma=sigma, r0=r0, d0=d0,
        a_perp=a_perp, t_unit=t_unit,
    )


def model_spec_from_config(config: RunConfig) -> ModelSpec:
    try:
        params = PhysicalParams.from_config(config)
        spec = build_model_spec(params, config.trap.r0, config.trap.d0,
                                sigma=config.sigma, V0=config.trap.V0)
    except ModelError as e:
        logger.error(f"Failed to build model: {str(e)}")
        raise
    logger.info(
        f"Model: r0={spec.r0}, a12={config.physical.a12} a11, V0={spec.V0:.6g}, sigma={spec.sigma}, "
        f"g11={spec.g[0][0]:.4f}, g12={spec.g[0][1]:.4f}, a_perp={spec.a_perp * 1e6:.4f} um"
    )
    return spec


def initial_state(grid: Grid2D, spec: ModelSpec,
                  initial: Optional[InitialStateSpec] = None) -> Tuple[ComplexField2D, ComplexField2D]:
    """Both species start in the same pair of Gaussians on the ring, each normalized to one."""
    initial = initial or InitialStateSpec.dual_peak(spec.r0, spec.d0)
    if initial.d0 < 3.0 * max(grid.dx, grid.dy):
        raise ModelError(
            f"initial waist d0={initial.d0} is under-resolved on a grid with step {grid.dx}; need d0 >= 3*step"
        )
    grid.check_fits_ring(spec.r0)

    X, Y = grid.mesh()
    weights = initial.weights or [1.0] * len(initial.centers)
    profile = np.zeros(grid.shape, dtype=complex)
    for (cx, cy), weight in zip(initial.centers, weights):
        profile += weight * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / initial.d0 ** 2)

    psi = profile / math.sqrt(integrate(np.abs(profile) ** 2, grid))
    return ComplexField2D(values=psi, grid=grid), ComplexField2D(values=psi.copy(), grid=grid)
