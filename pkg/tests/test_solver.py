"""
Unit tests for the split-step propagator.
"""

import math

import numpy as np
import pytest

from ringsplit.exceptions import NumericalBlowUpError
from ringsplit.grid import integrate, make_grid
from ringsplit.observables import autocorrelation, density, rms_width
from ringsplit.oracle import free_width
from ringsplit.solver import EvolutionConfig, energy, evolve, make_state, step
from tests.helpers import free_spec, gaussian


def _l2(a: np.ndarray, b: np.ndarray, cell: float) -> float:
    return math.sqrt(float(np.sum(np.abs(a - b) ** 2)) * cell)


class TestFreeDispersion:
    """Without interactions or trap only the kinetic term acts exactly."""

    @pytest.mark.parametrize("t", [1.0, 2.5, 5.0])
    def test_width_matches_closed_form(self, t):
        """Free spreading of each species follows the closed-form width."""
        grid = make_grid(256, 0.3)
        psi = gaussian(grid, w=0.75)
        state = make_state(grid, free_spec(), 0.25, psi=(psi, psi))
        for _ in range(int(round(t / 0.25))):
            step(state, 0.25)
        psi1, psi2 = state.fields()
        for species, field in ((1, psi1), (2, psi2)):
            expected = free_width(0.75, t, species)
            for axis in (0, 1):
                measured = 2.0 * rms_width(density(field), grid, axis)
                assert measured == pytest.approx(expected, rel=1e-3)

    def test_free_energy_is_kinetic(self):
        """A Gaussian of waist w carries kinetic energy 1/w^2 per unit kinetic prefactor 1/2."""
        grid = make_grid(128, 0.25)
        w = 1.5
        psi = gaussian(grid, w=w)
        state = make_state(grid, free_spec(), 0.1, psi=(psi, psi))
        assert energy(state) == pytest.approx((1.0 + 85.0 / 87.0) / w ** 2, rel=1e-8)

    def test_heavier_species_is_time_dilated(self):
        """Species 2 at t * m2/m1 matches species 1 at t when nothing couples them."""
        grid = make_grid(128, 0.25)
        psi = gaussian(grid, (2.0, 0.0), 1.5)
        state = make_state(grid, free_spec(), 0.05, psi=(psi, psi))
        for _ in range(85):
            step(state, 0.05)
        psi1_at_t = state.fields()[0]
        for _ in range(2):
            step(state, 0.05)
        psi2_dilated = state.fields()[1]
        assert autocorrelation(psi, psi1_at_t) == pytest.approx(autocorrelation(psi, psi2_dilated), abs=1e-10)
        assert np.max(np.abs(psi1_at_t.values - psi2_dilated.values)) < 1e-10


class TestConservation:
    """Test cases for the unitary, time-reversible structure of the scheme."""

    def test_norm_conserved(self, small_config, small_spec, small_grid):
        """Both norms stay at one over 200 steps."""
        state = make_state(small_grid, small_spec, small_config.numerics.dt)
        for _ in range(200):
            step(state, small_config.numerics.dt)
        n1, n2 = state.norms()
        assert abs(n1 - 1.0) < 1e-10
        assert abs(n2 - 1.0) < 1e-10

    def test_energy_conserved(self, small_spec, small_grid):
        """Energy drifts by less than 1e-4 relative over 100 small steps."""
        state = make_state(small_grid, small_spec, 0.01)
        e0 = energy(state)
        for _ in range(100):
            step(state, 0.01)
        assert abs(energy(state) - e0) / abs(e0) < 1e-4

    def test_time_reversal(self, small_config, small_spec, small_grid):
        """Stepping back with -dt undoes the forward steps to round-off."""
        dt = small_config.numerics.dt
        state = make_state(small_grid, small_spec, dt)
        start1, start2 = state.psi1.copy(), state.psi2.copy()
        for _ in range(40):
            step(state, dt)
        for _ in range(40):
            step(state, -dt)
        assert np.max(np.abs(state.psi1 - start1)) < 1e-10
        assert np.max(np.abs(state.psi2 - start2)) < 1e-10
        assert state.t == pytest.approx(0.0, abs=1e-12)

    def test_second_order(self, small_spec, small_grid):
        """Halving dt cuts the error by about four against a fine reference."""
        total = 0.4

        def run(dt: float) -> np.ndarray:
            state = make_state(small_grid, small_spec, dt)
            for _ in range(int(round(total / dt))):
                step(state, dt)
            return state.psi1

        reference = run(0.0025)
        cell = small_grid.cell_area
        coarse = _l2(run(0.02), reference, cell)
        fine = _l2(run(0.01), reference, cell)
        assert 3.5 <= coarse / fine <= 4.5


class TestStepping:
    """Test cases for step bookkeeping and sampling."""

    def test_fused_steps_match_single_steps(self, small_spec, small_grid):
        """evolve() fuses inner half steps without changing the result."""
        dt = 0.05
        single = make_state(small_grid, small_spec, dt)
        for _ in range(30):
            step(single, dt)
        fused = make_state(small_grid, small_spec, dt)
        evolve(fused, EvolutionConfig(dt=dt, n_steps=30, sample_every=10))
        assert np.max(np.abs(single.psi1 - fused.psi1)) < 1e-12
        assert np.max(np.abs(single.psi2 - fused.psi2)) < 1e-12

    def test_zero_dt_is_identity(self, small_spec, small_grid):
        """A zero step changes nothing but the step counter."""
        state = make_state(small_grid, small_spec, 0.05)
        before = state.psi1.copy()
        step(state, 0.0)
        assert np.array_equal(state.psi1, before)
        assert state.step_count == 1
        assert state.t == 0.0

    def test_time_tracks_changing_dt(self, small_spec, small_grid):
        """Time accumulates the actual step sizes."""
        state = make_state(small_grid, small_spec, 0.1)
        for _ in range(3):
            step(state, 0.1)
        for _ in range(2):
            step(state, 0.05)
        assert state.step_count == 5
        assert state.t == pytest.approx(0.4, abs=1e-14)

    def test_blow_up_detected(self, small_spec, small_grid):
        """A NaN in the field raises with the failing step index."""
        state = make_state(small_grid, small_spec, 0.05)
        state.psi1[3, 3] = np.nan
        with pytest.raises(NumericalBlowUpError) as info:
            step(state, 0.05)
        assert info.value.step_index == 1

    @pytest.mark.parametrize("n_steps,sample_every,rows", [(0, 1, 1), (7, 3, 3), (6, 3, 3), (10, 1, 11)])
    def test_sample_count(self, small_spec, small_grid, n_steps, sample_every, rows):
        """Rows = 1 + floor(n_steps / sample_every), starting at t = 0."""
        state = make_state(small_grid, small_spec, 0.05)
        series = evolve(state, EvolutionConfig(dt=0.05, n_steps=n_steps, sample_every=sample_every))
        assert len(series) == rows
        assert series.t[0] == 0.0
        assert np.allclose(np.diff(series.t), 0.05 * sample_every)
        assert state.step_count == n_steps

    def test_initial_row(self, small_spec, small_grid):
        """The first sample is the untouched initial state."""
        series = evolve(make_state(small_grid, small_spec, 0.05), EvolutionConfig(dt=0.05, n_steps=0))
        assert series.ac1[0] == pytest.approx(1.0, abs=1e-12)
        assert series.ac2[0] == pytest.approx(1.0, abs=1e-12)
        assert series.S[0] == pytest.approx(0.0, abs=1e-12)
        assert series.norm1[0] == pytest.approx(1.0, abs=1e-12)

    def test_callbacks_receive_samples(self, small_spec, small_grid):
        """Callbacks see every sample time and normalized fields."""
        seen = []

        def record(t, psi1, psi2):
            seen.append((t, integrate(density(psi1), psi1.grid)))

        evolve(make_state(small_grid, small_spec, 0.05),
               EvolutionConfig(dt=0.05, n_steps=4, sample_every=2, callbacks=[record]))
        assert [t for t, _ in seen] == pytest.approx([0.0, 0.1, 0.2])
        assert all(n == pytest.approx(1.0, abs=1e-10) for _, n in seen)

    def test_evolution_config_validation(self):
        """dt must be nonzero and sample_every positive."""
        with pytest.raises(ValueError):
            EvolutionConfig(dt=0.0, n_steps=1)
        with pytest.raises(ValueError):
            EvolutionConfig(dt=0.1, n_steps=1, sample_every=0)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
