"""
Separability yield over an (r0, a12) grid, iso-yield contours and the
maximum-separability line.

Each cell is an independent, deterministic simulation. Cells are farmed out
to a process pool when more than one worker is requested; results are
collected by index so aggregation does not depend on completion order.
"""

from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from skimage import measure

from ringsplit.analysis import LABEL_MULTIPLES, separability_scan, simulate, steps_to_cover
from ringsplit.config import SEPARABILITY_LABELS, RunConfig, logger
from ringsplit.exceptions import ObservableError, RingSplitError
from ringsplit.model import ModelSpec
from ringsplit.oracle import analytic_revival_time

# Extra time past the targeted peak so its right flank is sampled
PEAK_MARGIN = 0.25


class SweepCell(BaseModel):
    """Outcome of one (r0, a12) simulation."""

    model_config = ConfigDict(frozen=True)

    r0: float = Field(description="Ring radius [a_perp]")
    a12: float = Field(description="Interspecies scattering length [units of a11]")
    label: str = Field(description="Targeted separability peak")
    value: Optional[float] = Field(None, description="Separability at the targeted peak; None when failed")
    peak_time: Optional[float] = Field(None, description="Targeted peak time [1/omega_perp]")
    peak_time_s: Optional[float] = Field(None, description="Targeted peak time [s]")
    spec: Optional[ModelSpec] = Field(None, description="Resolved model parameters of the cell")
    error: Optional[str] = Field(None, description="Failure reason")

    @property
    def failed(self) -> bool:
        return self.value is None


class SweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    r0_values: List[float]
    a12_values: List[float]
    target: str
    cells: List[SweepCell] = Field(description="Row-major over (r0, a12)")

    @model_validator(mode="after")
    def check_cells(self) -> "SweepResult":
        if len(self.cells) != len(self.r0_values) * len(self.a12_values):
            raise ValueError("sweep table is not rectangular")
        for cell in self.cells:
            if cell.value is not None and not 0.0 <= cell.value <= 1.0:
                raise ValueError(f"yield {cell.value} leaves [0, 1]")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return (len(self.r0_values), len(self.a12_values))

    def cell(self, i: int, j: int) -> SweepCell:
        return self.cells[i * len(self.a12_values) + j]

    def _table(self, attribute: str) -> np.ndarray:
        values = [getattr(cell, attribute) for cell in self.cells]
        return np.array([np.nan if v is None else v for v in values], dtype=float).reshape(self.shape)

    @property
    def yield_table(self) -> np.ndarray:
        """Yields indexed [i_r0, j_a12]; failed cells are NaN."""
        return self._table("value")

    @property
    def peak_time_table(self) -> np.ndarray:
        return self._table("peak_time")

    @property
    def failed_cells(self) -> List[SweepCell]:
        return [cell for cell in self.cells if cell.failed]


class Contour(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: float
    vertices: List[Tuple[float, float]] = Field(description="(r0, a12) polyline vertices")

    @property
    def closed(self) -> bool:
        return len(self.vertices) > 2 and self.vertices[0] == self.vertices[-1]


def _check_target(target: str):
    if target not in SEPARABILITY_LABELS:
        raise ObservableError(f"target must be one of {', '.join(SEPARABILITY_LABELS)}, got '{target}'")


def cell_steps(config: RunConfig, target: str) -> int:
    """Steps needed to reach (k + 1/4) species-2 revival times for target S_k."""
    phys = config.physical
    revival = analytic_revival_time(config.trap.r0, 2, 1, phys.m1, phys.m2)
    return steps_to_cover((LABEL_MULTIPLES[target] + PEAK_MARGIN) * revival, config.numerics.dt)


def run_cell(config: RunConfig, r0: float, a12: float, target: str) -> SweepCell:
    """Simulate one sweep cell; failures are captured in the returned cell."""
    try:
        point = config.override(r0=r0, a12=a12)
        run = simulate(point, n_steps=cell_steps(point, target))
        peaks = separability_scan(run.spec, run.series)
        if target not in peaks:
            raise ObservableError(f"no {target} separability peak found")
        peak = peaks[target]
    except RingSplitError as e:
        logger.warning(f"⚠️ Sweep cell r0={r0}, a12={a12} failed: {str(e)}")
        return SweepCell(r0=r0, a12=a12, label=target, error=str(e))
    logger.info(f"✅ Sweep cell r0={r0}, a12={a12}: {target}={peak.value:.4f} at t={peak.time:.2f}")
    return SweepCell(
        r0=r0, a12=a12, label=target, value=peak.value,
        peak_time=peak.time, peak_time_s=peak.time_s,
        spec=run.spec,
    )


def sweep(config: RunConfig, r0_values: Optional[Sequence[float]] = None,
          a12_values: Optional[Sequence[float]] = None, target: Optional[str] = None,
          threads: int = 1) -> SweepResult:
    """Run every (r0, a12) cell and collect the targeted separability yield."""
    r0_values = [float(v) for v in (config.sweep.r0_values if r0_values is None else r0_values)]
    a12_values = [float(v) for v in (config.sweep.a12_values if a12_values is None else a12_values)]
    target = target or config.sweep.target
    _check_target(target)
    if not r0_values or not a12_values:
        raise ObservableError("sweep ranges must not be empty")

    jobs = [(i, j, r0, a12) for i, r0 in enumerate(r0_values) for j, a12 in enumerate(a12_values)]
    results: Dict[Tuple[int, int], SweepCell] = {}
    logger.info(f"🚀 Sweeping {len(jobs)} cells for {target} with {threads} worker(s)")

    if threads <= 1:
        for i, j, r0, a12 in jobs:
            results[(i, j)] = run_cell(config, r0, a12, target)
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = {pool.submit(run_cell, config, r0, a12, target): (i, j) for i, j, r0, a12 in jobs}
            for future in as_completed(futures):
                results[futures[future]] = future.result()

    cells = [results[(i, j)] for i, j, _, _ in jobs]
    result = SweepResult(r0_values=r0_values, a12_values=a12_values, target=target, cells=cells)
    logger.info(f"✅ Sweep finished: {len(cells) - len(result.failed_cells)}/{len(cells)} cells succeeded")
    return result


def _index_to_axis(index: np.ndarray, axis: Sequence[float]) -> np.ndarray:
    return np.interp(index, np.arange(len(axis)), np.asarray(axis, dtype=float))


def extract_contours(result: SweepResult, levels: Sequence[float]) -> List[Contour]:
    """Marching-squares iso-yield polylines in (r0, a12) coordinates.

    Cells touching a failed point are skipped. Contours are ordered by level,
    then by their first vertex.
    """
    table = result.yield_table
    if min(table.shape) < 2:
        raise ObservableError("contour extraction needs at least a 2x2 table")
    valid = np.isfinite(table)
    filled = np.where(valid, table, 0.0)

    contours = []
    for level in sorted(float(level) for level in levels):
        found = []
        for path in measure.find_contours(filled, level, mask=valid):
            r0 = _index_to_axis(path[:, 0], result.r0_values)
            a12 = _index_to_axis(path[:, 1], result.a12_values)
            found.append(Contour(level=level, vertices=[(float(x), float(y)) for x, y in zip(r0, a12)]))
        found.sort(key=lambda contour: contour.vertices[0])
        contours.extend(found)
    return contours


def max_separability_line(result: SweepResult) -> List[Tuple[float, float, float]]:
    """Per-r0 ``(r0, a12 at the highest yield, yield)``; rows with no successful cell are dropped."""
    table = result.yield_table
    line = []
    for i, r0 in enumerate(result.r0_values):
        row = table[i]
        if not np.any(np.isfinite(row)):
            continue
        j = int(np.nanargmax(row))
        line.append((r0, result.a12_values[j], float(row[j])))
    return line


def grid_points(start: float, stop: float, count: int) -> List[float]:
    """Evenly spaced sweep axis rounded to 12 digits so config text stays clean."""
    if count < 1:
        raise ObservableError("an axis needs at least one point")
    if count == 1:
        return [float(start)]
    return [round(v, 12) for v in np.linspace(start, stop, count)]


def nests(inner: Contour, outer: Contour) -> bool:
    """True when every vertex of ``inner`` lies inside the closed polygon ``outer``."""
    if not outer.closed or not inner.vertices:
        return False
    return bool(measure.points_in_poly(np.array(inner.vertices), np.array(outer.vertices)).all())


def unnested_contours(contours: Sequence[Contour]) -> List[Contour]:
    """Closed contours not enclosed by any closed contour of the next lower level.

    Levels whose lower neighbour has no closed contour are not checked.
    """
    levels = sorted({contour.level for contour in contours})
    closed = {level: [c for c in contours if c.level == level and c.closed] for level in levels}
    stray = []
    for lower, upper in zip(levels, levels[1:]):
        if not closed[lower]:
            continue
        stray.extend(c for c in closed[upper] if not any(nests(c, outer) for outer in closed[lower]))
    return stray
