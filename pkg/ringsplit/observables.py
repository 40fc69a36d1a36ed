"""
Autocorrelation, separability, densities, peak detection and revival timing.
"""

from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.signal import find_peaks, peak_widths

from ringsplit.config import logger
from ringsplit.exceptions import ObservableError, RevivalNotFoundError
from ringsplit.grid import ComplexField2D, Grid2D, integrate

# Peak prominence threshold in series units (AC and S live in [0, 1])
DEFAULT_MIN_PROMINENCE = 0.05
# Half-width of the revival search window relative to the analytic guess
DEFAULT_REVIVAL_WINDOW = 0.15
RANGE_SLACK = 1e-10


class TimeSeries(BaseModel):
    """Observables sampled during one evolution."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    t: np.ndarray = Field(description="Sample times [1/omega_perp]")
    ac1: np.ndarray = Field(description="Species-1 autocorrelation")
    ac2: np.ndarray = Field(description="Species-2 autocorrelation")
    S: np.ndarray = Field(description="Separability")
    norm1: np.ndarray = Field(description="Species-1 norm")
    norm2: np.ndarray = Field(description="Species-2 norm")
    energy: np.ndarray = Field(description="Total energy [hbar omega_perp]")

    @model_validator(mode="after")
    def check_series(self) -> "TimeSeries":
        columns = [self.t, self.ac1, self.ac2, self.S, self.norm1, self.norm2, self.energy]
        if len({len(column) for column in columns}) != 1:
            raise ValueError("all series must have the same length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("sample times must be strictly increasing")
        for name in ("ac1", "ac2", "S"):
            values = getattr(self, name)
            if values.size and (values.min() < -RANGE_SLACK or values.max() > 1.0 + RANGE_SLACK):
                raise ValueError(f"{name} leaves [0, 1]")
        return self

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "TimeSeries":
        data = np.asarray(rows, dtype=float).reshape(-1, 7)
        return cls(**{name: data[:, i].copy() for i, name in enumerate(COLUMNS)})

    def __len__(self) -> int:
        return len(self.t)

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([getattr(self, name) for name in COLUMNS])

    def autocorrelation(self, species: int) -> np.ndarray:
        return self.ac1 if species == 1 else self.ac2


COLUMNS = ("t", "ac1", "ac2", "S", "norm1", "norm2", "energy")


class Peak(BaseModel):
    model_config = ConfigDict(frozen=True)

    time: float = Field(description="Refined peak time")
    height: float = Field(description="Sampled peak value")
    width: float = Field(description="Width at half prominence [time units]")
    index: int = Field(description="Sample index of the peak")
    label: Optional[Tuple[int, int]] = Field(None, description="Fractional revival tag (p, q)")


class PeakSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    peaks: List[Peak] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_order(self) -> "PeakSet":
        times = [peak.time for peak in self.peaks]
        if times != sorted(times):
            raise ValueError("peaks must be sorted by time")
        return self

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i: int) -> Peak:
        return self.peaks[i]

    @property
    def times(self) -> np.ndarray:
        return np.array([peak.time for peak in self.peaks])

    def within(self, lower: float, upper: float) -> List[Peak]:
        return [peak for peak in self.peaks if lower <= peak.time <= upper]


def _require_same_grid(a: ComplexField2D, b: ComplexField2D):
    if not a.grid.same_as(b.grid):
        raise ObservableError("fields live on different grids")


def overlap_squared(psi0: np.ndarray, psit: np.ndarray, cell_area: float) -> float:
    return float(abs(np.vdot(psi0, psit) * cell_area) ** 2)


def autocorrelation(psi0: ComplexField2D, psit: ComplexField2D) -> float:
    """|integral of conj(psi(0)) psi(t) dx dy|^2 by grid quadrature."""
    _require_same_grid(psi0, psit)
    return overlap_squared(psi0.values, psit.values, psi0.grid.cell_area)


def separability_from_densities(n1: np.ndarray, n2: np.ndarray, cell_area: float) -> float:
    cross = np.sum(n1 * n2) * cell_area
    denominator = np.sum(n1 * n1) * cell_area * np.sum(n2 * n2) * cell_area
    if denominator <= 0.0:
        raise ObservableError("separability is undefined for an identically zero density")
    delta = cross ** 2 / denominator
    return float(np.clip(1.0 - delta, 0.0, 1.0))


def separability(psi1: ComplexField2D, psi2: ComplexField2D) -> float:
    """S = 1 - (int n1 n2)^2 / (int n1^2 int n2^2) over the full plane."""
    _require_same_grid(psi1, psi2)
    return separability_from_densities(
        np.abs(psi1.values) ** 2, np.abs(psi2.values) ** 2, psi1.grid.cell_area
    )


def density(psi: ComplexField2D) -> np.ndarray:
    return np.abs(psi.values) ** 2


def mixture_density(psi1: ComplexField2D, psi2: ComplexField2D) -> np.ndarray:
    """Combined density of the binary cloud; integrates to 2."""
    _require_same_grid(psi1, psi2)
    return density(psi1) + density(psi2)


def rms_width(n: np.ndarray, grid: Grid2D, axis: int = 0) -> float:
    """Root-mean-square extent of density ``n`` about its centroid along ``axis``."""
    X, Y = grid.mesh()
    coord = X if axis == 0 else Y
    mass = integrate(n, grid)
    centroid = integrate(coord * n, grid) / mass
    return float(np.sqrt(integrate((coord - centroid) ** 2 * n, grid) / mass))


def _parabolic_vertex(t: np.ndarray, y: np.ndarray, i: int) -> float:
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    d1 = (y1 - y0) / (t1 - t0)
    d2 = (y2 - y1) / (t2 - t1)
    curvature = (d2 - d1) / (t2 - t0)
    if not curvature < 0.0:
        return float(t1)
    vertex = 0.5 * (t0 + t1) - d1 / (2.0 * curvature)
    return float(min(max(vertex, t0), t2))


def detect_peaks(t: Sequence[float], series: Sequence[float],
                 min_prominence: float = DEFAULT_MIN_PROMINENCE) -> PeakSet:
    """Local maxima with prominence >= ``min_prominence``, refined by 3-point parabolas.

    Plateaus report their earliest sample.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or len(y) < 3 or len(t) != len(y):
        raise ObservableError("peak detection needs at least 3 samples with matching times")
    if not 0.0 < min_prominence < 1.0:
        raise ObservableError(f"min_prominence must lie in (0, 1), got {min_prominence}")

    indices, props = find_peaks(y, prominence=min_prominence, plateau_size=1)
    if len(indices) == 0:
        return PeakSet()

    widths, _, left_ips, right_ips = peak_widths(
        y, indices, rel_height=0.5,
        prominence_data=(props["prominences"], props["left_bases"], props["right_bases"]),
    )
    samples = np.arange(len(t))
    peaks = []
    for k, i in enumerate(indices):
        if props["plateau_sizes"][k] > 1:
            i = int(props["left_edges"][k])
            time = float(t[i])
        else:
            time = _parabolic_vertex(t, y, int(i))
        width = float(np.interp(right_ips[k], samples, t) - np.interp(left_ips[k], samples, t))
        peaks.append(Peak(time=time, height=float(y[i]), width=width, index=int(i)))
    peaks.sort(key=lambda peak: (peak.time, peak.index))
    return PeakSet(peaks=peaks)


def fractional_revival_label(t: float, revival_time: float, max_denominator: int = 8,
                             tolerance: float = 0.02) -> Optional[Tuple[int, int]]:
    """Nearest reduced fraction p/q with t ~= revival_time * p/q, or None."""
    if revival_time <= 0.0 or t <= 0.0:
        return None
    ratio = t / revival_time
    fraction = Fraction(ratio).limit_denominator(max_denominator)
    if fraction <= 0 or abs(ratio - float(fraction)) > tolerance:
        return None
    return (fraction.numerator, fraction.denominator)


def label_peaks(peaks: PeakSet, revival_time: float, max_denominator: int = 8,
                tolerance: float = 0.02) -> PeakSet:
    return PeakSet(peaks=[
        peak.model_copy(update={"label": fractional_revival_label(peak.time, revival_time, max_denominator, tolerance)})
        for peak in peaks
    ])


def measure_revival_time(t: Sequence[float], series: Sequence[float], analytic_guess: float,
                         window: float = DEFAULT_REVIVAL_WINDOW,
                         min_prominence: float = DEFAULT_MIN_PROMINENCE) -> float:
    """Time of the highest peak within ``guess * (1 -/+ window)``."""
    t = np.asarray(t, dtype=float)
    if not 0.0 < window <= 0.5:
        raise ObservableError(f"window must lie in (0, 0.5], got {window}")
    if not t[0] <= analytic_guess <= t[-1]:
        raise ObservableError(f"analytic guess {analytic_guess:.4g} outside the series span [{t[0]:.4g}, {t[-1]:.4g}]")

    lower, upper = analytic_guess * (1.0 - window), analytic_guess * (1.0 + window)
    candidates = detect_peaks(t, series, min_prominence).within(lower, upper)
    if not candidates:
        logger.warning(f"⚠️ No revival peak in [{lower:.2f}, {upper:.2f}]")
        raise RevivalNotFoundError(f"revival not found in [{lower:.4g}, {upper:.4g}]")
    best = max(candidates, key=lambda peak: (peak.height, -peak.time))
    logger.debug(f"Revival at t={best.time:.4f} (guess {analytic_guess:.4f}, height {best.height:.4f})")
    return best.time
