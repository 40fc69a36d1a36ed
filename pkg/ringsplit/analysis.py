"""
Simulation-driven studies: single runs, revival-time extraction versus ring
radius and interspecies interaction, and labelled separability peaks.
"""

import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.signal import peak_widths

from ringsplit.config import SEPARABILITY_LABELS, RunConfig, logger, render_config
from ringsplit.exceptions import RingSplitError
from ringsplit.grid import Grid2D, make_grid
from ringsplit.model import ModelSpec, model_spec_from_config
from ringsplit.observables import (
    DEFAULT_MIN_PROMINENCE,
    DEFAULT_REVIVAL_WINDOW,
    PeakSet,
    TimeSeries,
    detect_peaks,
    label_peaks,
    measure_revival_time,
)
from ringsplit.oracle import analytic_revival_difference, analytic_revival_time
from ringsplit.solver import EvolutionConfig, SampleCallback, evolve, make_state

# Multiples of the species-2 revival time carried by each separability label
LABEL_MULTIPLES = {"S_1/2": 0.5, "S_1": 1.0, "S_3/2": 1.5, "S_2": 2.0}
# Fraction of the peak value that bounds the reported separability width
WIDTH_FRACTION = 0.9


class SimulationRun(BaseModel):
    """One evolution with the parameters that produced it."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    config: RunConfig
    spec: ModelSpec
    grid: Grid2D
    series: TimeSeries

    @property
    def config_text(self) -> str:
        return render_config(self.config)


def steps_to_cover(time: float, dt: float) -> int:
    ratio = time / dt
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9 * max(1.0, abs(ratio)):
        return int(nearest)
    return int(math.ceil(ratio))


def simulate(config: RunConfig, n_steps: Optional[int] = None, workers: int = 1,
             callbacks: Sequence[SampleCallback] = ()) -> SimulationRun:
    """Build the model from ``config`` and evolve the dual-peak initial state."""
    spec = model_spec_from_config(config)
    numerics = config.numerics
    grid = make_grid(numerics.n, numerics.step, r0=spec.r0)
    state = make_state(grid, spec, numerics.dt, workers=workers)
    evolution = EvolutionConfig(
        dt=numerics.dt,
        n_steps=numerics.n_steps if n_steps is None else n_steps,
        sample_every=numerics.sample_every,
        callbacks=list(callbacks),
    )
    series = evolve(state, evolution)
    return SimulationRun(config=config, spec=spec, grid=grid, series=series)


def autocorrelation_contrast(series: TimeSeries) -> np.ndarray:
    """|AC1 - AC2|; its maxima mark instants where one species revives while the other does not."""
    return np.abs(series.ac1 - series.ac2)


def revival_peaks(series: TimeSeries, spec: ModelSpec, species: int,
                  min_prominence: float = DEFAULT_MIN_PROMINENCE) -> PeakSet:
    """Autocorrelation peaks of ``species`` tagged with their fractional-revival (p, q)."""
    revival = analytic_revival_time(spec.r0, species, 1, spec.m1, spec.m2)
    peaks = detect_peaks(series.t, series.autocorrelation(species), min_prominence)
    return label_peaks(peaks, revival)


def pair_fractional_revivals(peaks1: PeakSet, peaks2: PeakSet,
                             tolerance: float) -> List[Tuple[Tuple[int, int], Tuple[int, int], float, float]]:
    """Pair labelled species-1 and species-2 peaks that occur within ``tolerance`` of each other."""
    pairs = []
    used = set()
    for peak1 in peaks1:
        if peak1.label is None:
            continue
        best = None
        for j, peak2 in enumerate(peaks2):
            if j in used or peak2.label is None:
                continue
            gap = abs(peak2.time - peak1.time)
            if gap <= tolerance and (best is None or gap < best[0]):
                best = (gap, j, peak2)
        if best is not None:
            used.add(best[1])
            pairs.append((peak1.label, best[2].label, peak1.time, best[2].time))
    return pairs


class RevivalMeasurement(BaseModel):
    model_config = ConfigDict(frozen=True)

    r0: float
    a12: float = Field(description="Interspecies scattering length [units of a11]")
    t1: Optional[float] = Field(None, description="Species-1 revival time; None when not found")
    t2: Optional[float] = Field(None, description="Species-2 revival time; None when not found")
    error: Optional[str] = None

    @property
    def difference(self) -> Optional[float]:
        if self.t1 is None or self.t2 is None:
            return None
        return self.t2 - self.t1


def measure_revivals(config: RunConfig, r0: float, a12: float, window: float = DEFAULT_REVIVAL_WINDOW,
                     workers: int = 1) -> RevivalMeasurement:
    """Simulate one (r0, a12) point long enough to see both first revivals and time them."""
    try:
        point = config.override(r0=r0, a12=a12)
        guess1 = analytic_revival_time(r0, 1, 1, point.physical.m1, point.physical.m2)
        guess2 = analytic_revival_time(r0, 2, 1, point.physical.m1, point.physical.m2)
        n_steps = steps_to_cover(max(guess1, guess2) * (1.0 + window + 0.05), point.numerics.dt)
        run = simulate(point, n_steps=n_steps, workers=workers)
        t1 = measure_revival_time(run.series.t, run.series.ac1, guess1, window)
        t2 = measure_revival_time(run.series.t, run.series.ac2, guess2, window)
    except RingSplitError as e:
        logger.warning(f"⚠️ Revival measurement failed at r0={r0}, a12={a12}: {str(e)}")
        return RevivalMeasurement(r0=r0, a12=a12, error=str(e))
    logger.info(f"✅ r0={r0}, a12={a12}: T_R1={t1:.3f}, T_R2={t2:.3f}")
    return RevivalMeasurement(r0=r0, a12=a12, t1=t1, t2=t2)


def revival_difference_curve(config: RunConfig, r0_list: Sequence[float], a12: float,
                             window: float = DEFAULT_REVIVAL_WINDOW,
                             workers: int = 1) -> List[Tuple[float, Optional[float]]]:
    """Measured T_R2 - T_R1 per ring radius; failed points carry None."""
    return [(r0, measure_revivals(config, r0, a12, window, workers).difference) for r0 in r0_list]


def analytic_difference_curve(config: RunConfig, r0_list: Sequence[float]) -> List[Tuple[float, float]]:
    phys = config.physical
    return [(r0, analytic_revival_difference(r0, phys.m1, phys.m2)) for r0 in r0_list]


def revival_vs_interaction(config: RunConfig, r0: float, a12_list: Sequence[float],
                           window: float = DEFAULT_REVIVAL_WINDOW,
                           workers: int = 1) -> List[RevivalMeasurement]:
    """Both species' measured revival times for each interspecies scattering length."""
    return [measure_revivals(config, r0, a12, window, workers) for a12 in a12_list]


class SeparabilityPeak(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: str
    time: float = Field(description="Peak time [1/omega_perp]")
    time_s: float = Field(description="Peak time [s]")
    value: float = Field(description="Separability at the peak")
    width: float = Field(description="Full width at 90% of the peak [1/omega_perp]")


class SeparabilityPeaks(BaseModel):
    model_config = ConfigDict(frozen=True)

    peaks: Dict[str, SeparabilityPeak] = Field(default_factory=dict)

    @model_validator(mode="after")
    def check_order(self) -> "SeparabilityPeaks":
        times = [self.peaks[label].time for label in SEPARABILITY_LABELS if label in self.peaks]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("labelled separability peaks must be increasing in time")
        return self

    def __getitem__(self, label: str) -> SeparabilityPeak:
        return self.peaks[label]

    def __contains__(self, label: str) -> bool:
        return label in self.peaks

    def global_maximum(self) -> Optional[str]:
        if not self.peaks:
            return None
        return max(self.peaks.values(), key=lambda peak: peak.value).label


def _width_at_fraction(t: np.ndarray, y: np.ndarray, index: int, fraction: float) -> float:
    """Full width where the peak at ``index`` stays above ``fraction`` of its own value."""
    y = np.asarray(y, dtype=float)
    _, _, left, right = peak_widths(
        y, np.array([index]), rel_height=1.0 - fraction,
        prominence_data=(np.array([y[index]]), np.array([0], dtype=np.intp), np.array([len(y) - 1], dtype=np.intp)),
    )
    samples = np.arange(len(t))
    return float(np.interp(right[0], samples, t) - np.interp(left[0], samples, t))


def separability_scan(spec: ModelSpec, series: TimeSeries,
                      min_prominence: float = DEFAULT_MIN_PROMINENCE) -> SeparabilityPeaks:
    """Label the prominent separability peaks nearest 1/2, 1, 3/2 and 2 species-2 revival times."""
    revival = analytic_revival_time(spec.r0, 2, 1, spec.m1, spec.m2)
    peaks = detect_peaks(series.t, series.S, min_prominence)
    labelled: Dict[str, SeparabilityPeak] = {}
    for label in SEPARABILITY_LABELS:
        target = LABEL_MULTIPLES[label] * revival
        upper = target + revival / 4.0
        candidates = [peak for peak in peaks.within(target - revival / 4.0, upper) if peak.time < upper]
        if not candidates:
            logger.debug(f"No separability peak near {label} (t={target:.2f})")
            continue
        best = max(candidates, key=lambda peak: (peak.height, -peak.time))
        labelled[label] = SeparabilityPeak(
            label=label,
            time=best.time,
            time_s=spec.seconds(best.time),
            value=best.height,
            width=_width_at_fraction(series.t, series.S, best.index, WIDTH_FRACTION),
        )
    return SeparabilityPeaks(peaks=labelled)


class RunSummary(BaseModel):
    """Revival times, fractional-revival pairs and separability peaks of one run."""

    model_config = ConfigDict(frozen=True)

    r0: float
    samples: int
    t_end: float
    revival_time_1: Optional[float] = Field(None, description="Measured species-1 revival [1/omega_perp]")
    revival_time_2: Optional[float] = Field(None, description="Measured species-2 revival [1/omega_perp]")
    analytic_revival_1: float
    analytic_revival_2: float
    fractional_pairs: List[Tuple[Tuple[int, int], Tuple[int, int], float, float]] = Field(default_factory=list)
    separability: SeparabilityPeaks = Field(default_factory=SeparabilityPeaks)
    contrast_peaks: List[Tuple[float, float]] = Field(
        default_factory=list, description="(t, |AC1 - AC2|) at each prominent maximum of the autocorrelation contrast")
    max_norm_drift: float
    max_energy_drift: float = Field(description="Largest relative deviation from the initial energy")

    @property
    def revival_difference(self) -> Optional[float]:
        if self.revival_time_1 is None or self.revival_time_2 is None:
            return None
        return self.revival_time_2 - self.revival_time_1


def _revival_or_none(series: TimeSeries, species: int, guess: float, window: float) -> Optional[float]:
    if len(series) < 3 or guess * (1.0 + window) > series.t[-1]:
        return None
    try:
        return measure_revival_time(series.t, series.autocorrelation(species), guess, window)
    except RingSplitError as e:
        logger.warning(f"⚠️ Species-{species} revival: {str(e)}")
        return None


def summarize(spec: ModelSpec, series: TimeSeries, window: float = DEFAULT_REVIVAL_WINDOW,
              min_prominence: float = DEFAULT_MIN_PROMINENCE) -> RunSummary:
    """Extract every derived quantity the series supports; quantities outside its span are left unset."""
    guess1 = analytic_revival_time(spec.r0, 1, 1, spec.m1, spec.m2)
    guess2 = analytic_revival_time(spec.r0, 2, 1, spec.m1, spec.m2)
    pairs: List[Tuple[Tuple[int, int], Tuple[int, int], float, float]] = []
    peaks = SeparabilityPeaks()
    contrast: List[Tuple[float, float]] = []
    if len(series) >= 3:
        pairs = pair_fractional_revivals(
            revival_peaks(series, spec, 1, min_prominence),
            revival_peaks(series, spec, 2, min_prominence),
            tolerance=0.02 * guess1,
        )
        peaks = separability_scan(spec, series, min_prominence)
        contrast = [(peak.time, peak.height)
                    for peak in detect_peaks(series.t, autocorrelation_contrast(series), min_prominence)]

    norm_drift = float(max(np.max(np.abs(series.norm1 - 1.0)), np.max(np.abs(series.norm2 - 1.0))))
    e0 = series.energy[0]
    energy_drift = float(np.max(np.abs(series.energy - e0)) / abs(e0)) if e0 != 0.0 else 0.0
    return RunSummary(
        r0=spec.r0,
        samples=len(series),
        t_end=float(series.t[-1]),
        revival_time_1=_revival_or_none(series, 1, guess1, window),
        revival_time_2=_revival_or_none(series, 2, guess2, window),
        analytic_revival_1=guess1,
        analytic_revival_2=guess2,
        fractional_pairs=pairs,
        separability=peaks,
        contrast_peaks=contrast,
        max_norm_drift=norm_drift,
        max_energy_drift=energy_drift,
    )
