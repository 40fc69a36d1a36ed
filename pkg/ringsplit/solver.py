"""
Strang-split step Fourier propagator for the coupled two-species GPE

    i d(psi_i)/dt = [-(m1 / 2 m_i) laplacian + sum_j g_ij |psi_j|^2 + V_i] psi_i

Each step applies a half kinetic step in momentum space, a full
potential + nonlinear step in coordinate space with both densities frozen
after the first half step, and another half kinetic step. Between sampling
instants the trailing and leading half steps of consecutive steps are fused
into one full kinetic step.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import fft

from ringsplit.config import logger
from ringsplit.exceptions import NumericalBlowUpError
from ringsplit.grid import BOUNDARY_DENSITY_LIMIT, ComplexField2D, Grid2D, boundary_density
from ringsplit.model import ModelSpec, initial_state, ring_potential
from ringsplit.observables import TimeSeries, overlap_squared, separability_from_densities

SampleCallback = Callable[[float, ComplexField2D, ComplexField2D], None]


class EvolutionConfig(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dt: float = Field(gt=0, description="Time step [1/omega_perp]")
    n_steps: int = Field(ge=0, description="Number of steps")
    sample_every: int = Field(1, ge=1, description="Steps between samples")
    callbacks: List[SampleCallback] = Field(default_factory=list, description="Called with (t, psi1, psi2) at samples")


@dataclass
class PropagatorState:
    """Mutable propagation state owned by a single evolution."""

    grid: Grid2D
    spec: ModelSpec
    psi1: np.ndarray
    psi2: np.ndarray
    dt: float = 0.0
    step_count: int = 0
    workers: int = 1
    potential: Tuple[np.ndarray, np.ndarray] = field(default=None, repr=False)
    k_squared: np.ndarray = field(default=None, repr=False)
    kinetic_half: Tuple[np.ndarray, np.ndarray] = field(default=None, repr=False)
    kinetic_full: Tuple[np.ndarray, np.ndarray] = field(default=None, repr=False)
    _t_base: float = 0.0
    _step_base: int = 0

    def __post_init__(self):
        self.psi1 = np.array(self.psi1, dtype=np.complex128)
        self.psi2 = np.array(self.psi2, dtype=np.complex128)
        if self.potential is None:
            self.potential = (ring_potential(self.grid, self.spec, 1), ring_potential(self.grid, self.spec, 2))
        if self.k_squared is None:
            self.k_squared = self.grid.k_squared()
        self.g = self.spec.g_matrix
        self._set_phases(self.dt)

    @property
    def t(self) -> float:
        """Current time; equals step_count * dt exactly while dt never changed."""
        return self._t_base + (self.step_count - self._step_base) * self.dt

    def set_dt(self, dt: float):
        if dt == self.dt and self.kinetic_half is not None:
            return
        self._t_base = self.t
        self._step_base = self.step_count
        self._set_phases(dt)

    def _set_phases(self, dt: float):
        self.dt = float(dt)
        factors = (self.spec.kinetic_factor(1), self.spec.kinetic_factor(2))
        self.kinetic_half = tuple(np.exp(-0.5j * c * self.k_squared * self.dt) for c in factors)
        self.kinetic_full = tuple(np.exp(-1j * c * self.k_squared * self.dt) for c in factors)

    def fields(self) -> Tuple[ComplexField2D, ComplexField2D]:
        return (ComplexField2D(values=self.psi1.copy(), grid=self.grid),
                ComplexField2D(values=self.psi2.copy(), grid=self.grid))

    def norms(self) -> Tuple[float, float]:
        cell = self.grid.cell_area
        return (float(np.sum(np.abs(self.psi1) ** 2) * cell), float(np.sum(np.abs(self.psi2) ** 2) * cell))


def make_state(grid: Grid2D, spec: ModelSpec, dt: float,
               psi: Optional[Tuple[ComplexField2D, ComplexField2D]] = None,
               workers: int = 1) -> PropagatorState:
    """Propagation state at t = 0, starting from the dual-peak initial state unless ``psi`` is given."""
    psi1, psi2 = psi if psi is not None else initial_state(grid, spec)
    return PropagatorState(grid=grid, spec=spec, psi1=psi1.values, psi2=psi2.values, dt=dt, workers=workers)


def _kinetic(state: PropagatorState, phases: Tuple[np.ndarray, np.ndarray]):
    w = state.workers
    state.psi1 = fft.ifft2(fft.fft2(state.psi1, workers=w) * phases[0], workers=w)
    state.psi2 = fft.ifft2(fft.fft2(state.psi2, workers=w) * phases[1], workers=w)


def _nonlinear(state: PropagatorState):
    n1 = np.abs(state.psi1) ** 2
    n2 = np.abs(state.psi2) ** 2
    g = state.g
    v1 = g[0, 0] * n1 + g[0, 1] * n2 + state.potential[0]
    v2 = g[1, 0] * n1 + g[1, 1] * n2 + state.potential[1]
    state.psi1 = state.psi1 * np.exp(-1j * v1 * state.dt)
    state.psi2 = state.psi2 * np.exp(-1j * v2 * state.dt)


def _check_finite(state: PropagatorState, step_index: int):
    if not (np.isfinite(np.sum(state.psi1)) and np.isfinite(np.sum(state.psi2))):
        logger.error(f"❌ Non-finite wavefunction after step {step_index} (t={state.t:.4f})")
        raise NumericalBlowUpError(step_index)


def _advance(state: PropagatorState, n: int):
    """``n`` Strang steps with the inner kinetic half steps fused."""
    if n <= 0:
        return
    if state.dt == 0.0:
        state.step_count += n
        return
    _kinetic(state, state.kinetic_half)
    for i in range(n):
        _nonlinear(state)
        _kinetic(state, state.kinetic_half if i == n - 1 else state.kinetic_full)
        state.step_count += 1
        _check_finite(state, state.step_count)


def step(state: PropagatorState, dt: float) -> PropagatorState:
    """Advance ``state`` in place by one Strang step of size ``dt`` and return it."""
    state.set_dt(dt)
    _advance(state, 1)
    return state


def energy(state: PropagatorState, spec: Optional[ModelSpec] = None) -> float:
    """Mean-field energy functional with the kinetic term evaluated spectrally."""
    spec = spec or state.spec
    grid = state.grid
    cell = grid.cell_area
    g = spec.g_matrix
    if spec is state.spec:
        potential = state.potential
    else:
        potential = (ring_potential(grid, spec, 1), ring_potential(grid, spec, 2))

    total = 0.0
    densities = []
    for i, psi in enumerate((state.psi1, state.psi2)):
        spectrum = fft.fft2(psi, workers=state.workers)
        kinetic = spec.kinetic_factor(i + 1) * np.sum(state.k_squared * np.abs(spectrum) ** 2) * cell / psi.size
        n = np.abs(psi) ** 2
        densities.append(n)
        total += kinetic + np.sum(potential[i] * n) * cell + 0.5 * g[i, i] * np.sum(n * n) * cell
    total += 0.5 * (g[0, 1] + g[1, 0]) * np.sum(densities[0] * densities[1]) * cell
    return float(total)


class _Sampler:
    """Collects the TimeSeries columns at sampling instants."""

    def __init__(self, state: PropagatorState, callbacks: List[SampleCallback]):
        self.initial = (state.psi1.copy(), state.psi2.copy())
        self.callbacks = callbacks
        self.rows: List[Tuple[float, ...]] = []
        self.warned_boundary = False

    def __call__(self, state: PropagatorState):
        cell = state.grid.cell_area
        n1 = np.abs(state.psi1) ** 2
        n2 = np.abs(state.psi2) ** 2
        t = state.t
        self.rows.append((
            t,
            overlap_squared(self.initial[0], state.psi1, cell),
            overlap_squared(self.initial[1], state.psi2, cell),
            separability_from_densities(n1, n2, cell),
            float(np.sum(n1) * cell),
            float(np.sum(n2) * cell),
            energy(state),
        ))
        edge = max(boundary_density(n1), boundary_density(n2))
        if edge > BOUNDARY_DENSITY_LIMIT and not self.warned_boundary:
            logger.warning(f"⚠️ Density {edge:.2e} reached the grid boundary at t={t:.3f}; periodic wrap-around likely")
            self.warned_boundary = True
        if self.callbacks:
            psi1, psi2 = state.fields()
            for callback in self.callbacks:
                callback(t, psi1, psi2)


def evolve(state: PropagatorState, config: EvolutionConfig) -> TimeSeries:
    """Run ``config.n_steps`` steps, sampling every ``config.sample_every`` steps (plus t = 0)."""
    state.set_dt(config.dt)
    sampler = _Sampler(state, list(config.callbacks))
    sampler(state)

    logger.info(f"🚀 Evolving {config.n_steps} steps (dt={config.dt}, sample every {config.sample_every})")
    remaining = config.n_steps
    try:
        while remaining > 0:
            chunk = min(config.sample_every, remaining)
            _advance(state, chunk)
            remaining -= chunk
            if chunk == config.sample_every:
                sampler(state)
    except NumericalBlowUpError as e:
        logger.error(f"Evolution failed at t={state.t:.4f}: {str(e)}")
        raise

    series = TimeSeries.from_rows(sampler.rows)
    logger.info(f"✅ Evolution finished at t={state.t:.4f} with {len(series)} samples")
    return series
