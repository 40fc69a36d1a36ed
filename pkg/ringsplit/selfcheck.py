"""
Fast invariant self-test run by ``ringsplit check``.

Every check works on a small 64x64 ring so the whole suite finishes in a
few seconds.
"""

from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel

from ringsplit.config import RunConfig, logger, parse_config, render_config
from ringsplit.exceptions import RingSplitError
from ringsplit.grid import ComplexField2D, forward_transform, make_grid, spectral_integrate
from ringsplit.model import initial_state, model_spec_from_config, ring_minimum_radius
from ringsplit.observables import autocorrelation, separability
from ringsplit.oracle import analytic_revival_time, fringe_revival_time
from ringsplit.solver import energy, make_state, step

SMALL_RING = {"n": 64, "step": 0.5, "r0": 6.0, "d0": 1.5, "dt": 0.05, "a12": 0.3}


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


def _small_setup():
    config = RunConfig().override(**SMALL_RING)
    spec = model_spec_from_config(config)
    grid = make_grid(config.numerics.n, config.numerics.step, r0=spec.r0)
    return config, spec, grid


def check_parseval() -> Tuple[bool, str]:
    _, spec, grid = _small_setup()
    psi, _ = initial_state(grid, spec)
    spectral = spectral_integrate(np.abs(forward_transform(psi).values) ** 2, grid)
    error = abs(spectral - psi.norm())
    return error < 1e-12, f"|spectral - coordinate norm| = {error:.2e}"


def check_norm_conservation() -> Tuple[bool, str]:
    config, spec, grid = _small_setup()
    state = make_state(grid, spec, config.numerics.dt)
    for _ in range(50):
        step(state, config.numerics.dt)
    drift = max(abs(n - 1.0) for n in state.norms())
    return drift < 1e-10, f"norm drift after 50 steps = {drift:.2e}"


def check_energy_conservation() -> Tuple[bool, str]:
    config, spec, grid = _small_setup()
    state = make_state(grid, spec, config.numerics.dt)
    e0 = energy(state)
    for _ in range(50):
        step(state, config.numerics.dt)
    drift = abs(energy(state) - e0) / abs(e0)
    return drift < 1e-3, f"relative energy drift after 50 steps = {drift:.2e}"


def check_time_reversal() -> Tuple[bool, str]:
    config, spec, grid = _small_setup()
    state = make_state(grid, spec, config.numerics.dt)
    start = state.psi1.copy()
    for _ in range(20):
        step(state, config.numerics.dt)
    for _ in range(20):
        step(state, -config.numerics.dt)
    error = float(np.max(np.abs(state.psi1 - start)))
    return error < 1e-9, f"max |psi(0) - psi(+T-T)| = {error:.2e}"


def check_observable_identities() -> Tuple[bool, str]:
    _, spec, grid = _small_setup()
    psi1, psi2 = initial_state(grid, spec)
    rotated = ComplexField2D(values=psi1.values * np.exp(0.7j), grid=grid)
    ac = autocorrelation(psi1, rotated)
    s = separability(psi1, psi2)
    ok = abs(ac - 1.0) < 1e-12 and abs(s) < 1e-12
    return ok, f"AC(psi, e^ia psi) = {ac:.15f}, S(identical) = {s:.2e}"


def check_trap_calibration() -> Tuple[bool, str]:
    _, spec, _ = _small_setup()
    r_min = ring_minimum_radius(spec, 1)
    error = abs(r_min - spec.r0)
    return error < 1e-9, f"species-1 ring minimum at {r_min:.12f} (r0 = {spec.r0})"


def check_oracle_consistency() -> Tuple[bool, str]:
    worst = 0.0
    for r0 in (8.0, 10.0, 12.0):
        for species in (1, 2):
            a = analytic_revival_time(r0, species, 1)
            b = fringe_revival_time(r0, species, 1)
            worst = max(worst, abs(a - b) / a)
    return worst < 1e-12, f"max relative mismatch fringe vs revival time = {worst:.2e}"


def check_config_round_trip() -> Tuple[bool, str]:
    config = RunConfig().override(a12=0.3, snapshot_times=[233.6, 469.6])
    ok = parse_config(render_config(config)) == config
    return ok, "parse_config(render_config(c)) == c" if ok else "rendered config re-parsed differently"


CHECKS: List[Tuple[str, Callable[[], Tuple[bool, str]]]] = [
    ("parseval", check_parseval),
    ("norm conservation", check_norm_conservation),
    ("energy conservation", check_energy_conservation),
    ("time reversal", check_time_reversal),
    ("observable identities", check_observable_identities),
    ("trap calibration", check_trap_calibration),
    ("oracle consistency", check_oracle_consistency),
    ("config round trip", check_config_round_trip),
]


def run_checks() -> List[CheckResult]:
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except (RingSplitError, FloatingPointError) as e:
            logger.error(f"Self-check '{name}' raised: {str(e)}")
            passed, detail = False, f"raised {type(e).__name__}: {e}"
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail))
    return results


def report(results: List[CheckResult]) -> bool:
    for result in results:
        mark = "✅" if result.passed else "❌"
        print(f"{mark} {result.name}: {result.detail}")
    passed = sum(result.passed for result in results)
    print(f"\n{passed}/{len(results)} checks passed")
    return passed == len(results)


if __name__ == "__main__":
    raise SystemExit(0 if report(run_checks()) else 1)
