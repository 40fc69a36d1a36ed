"""
On-disk artifacts: time-series CSV, binary density snapshots, sweep tables,
contour polylines and run summaries. Every artifact gets a ``.cfg`` sidecar holding the
resolved run configuration so it can be re-parsed.

Density snapshot layout (little-endian)::

    16 bytes   magic b"RINGSPLITDENS\\0\\0\\0"
    u64 n_x, u64 n_y
    f64 dx, f64 dy, f64 t
    n_x * n_y f64 density values, row-major with rows along x
"""

import csv
import json
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ringsplit.analysis import RunSummary
from ringsplit.config import RunConfig, logger, render_config
from ringsplit.exceptions import ArtifactError
from ringsplit.grid import ComplexField2D, Grid2D, make_grid
from ringsplit.model import ModelSpec
from ringsplit.observables import COLUMNS, TimeSeries, density, mixture_density
from ringsplit.sweep import Contour, SweepCell, SweepResult

PathLike = Union[str, Path]

SNAPSHOT_MAGIC = b"RINGSPLITDENS\0\0\0"
SNAPSHOT_HEADER = np.dtype([("n_x", "<u8"), ("n_y", "<u8"), ("dx", "<f8"), ("dy", "<f8"), ("t", "<f8")])
SNAPSHOT_DATA = np.dtype("<f8")
TIMESERIES_HEADER = ",".join(COLUMNS)
SPEC_COLUMNS = ("m1", "m2", "rho2", "g11", "g12", "g21", "g22", "omega", "V0", "sigma", "d0", "a_perp", "t_unit")
SWEEP_HEADER = ("r0", "a12", "label", "yield", "peak_time", "peak_time_s") + SPEC_COLUMNS
CONTOUR_HEADER = ("level", "contour", "vertex", "r0", "a12")
FAILED = "failed"


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".cfg")


def write_sidecar(path: PathLike, config: RunConfig, notes: Sequence[str] = ()) -> Path:
    """Write the resolved config next to ``path``; ``notes`` become comment lines."""
    target = sidecar_path(path)
    header = "".join(f"# {note}\n" for note in notes)
    with open(target, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + render_config(config))
    return target


def write_timeseries(series: TimeSeries, path: PathLike, config: Optional[RunConfig] = None) -> Path:
    """CSV with one row per sample and 17 significant digits per value."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        np.savetxt(f, series.as_matrix(), fmt="%.17g", delimiter=",",
                   header=TIMESERIES_HEADER, comments="", newline="\n")
    if config is not None:
        write_sidecar(path, config, [f"time series with {len(series)} samples"])
    logger.info(f"✅ Wrote time series ({len(series)} rows) to {path}")
    return path


def read_timeseries(path: PathLike) -> TimeSeries:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            header = f.readline().strip()
            if header != TIMESERIES_HEADER:
                raise ArtifactError(f"{path}: unexpected header '{header}'")
            data = np.loadtxt(f, delimiter=",", dtype=float, ndmin=2)
    except OSError as e:
        logger.error(f"Failed to read time series {path}: {str(e)}")
        raise ArtifactError(f"cannot read {path}: {e}")
    except ArtifactError:
        raise
    except ValueError as e:
        logger.error(f"Malformed time series {path}: {str(e)}")
        raise ArtifactError(f"{path}: {e}")
    if data.size == 0:
        data = data.reshape(0, len(COLUMNS))
    if data.shape[1] != len(COLUMNS):
        raise ArtifactError(f"{path}: expected {len(COLUMNS)} columns, got {data.shape[1]}")
    try:
        return TimeSeries.from_rows(data)
    except ValueError as e:
        logger.error(f"Invalid time series {path}: {str(e)}")
        raise ArtifactError(f"{path}: {e}")


def write_density_snapshot(values: Union[ComplexField2D, np.ndarray], t: float, path: PathLike,
                           grid: Optional[Grid2D] = None, config: Optional[RunConfig] = None) -> Path:
    """Write |psi|^2 (or an already real density array) in the snapshot layout."""
    if isinstance(values, ComplexField2D):
        grid = values.grid
        rho = density(values)
    else:
        if grid is None:
            raise ArtifactError("a grid is required when writing a bare density array")
        rho = np.asarray(values, dtype=float)
    if rho.shape != grid.shape:
        raise ArtifactError(f"density shape {rho.shape} does not match grid {grid.shape}")

    header = np.array([(grid.n_x, grid.n_y, grid.dx, grid.dy, float(t))], dtype=SNAPSHOT_HEADER)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(rho, dtype=SNAPSHOT_DATA).tobytes(order="C"))
    if config is not None:
        write_sidecar(path, config, [f"density snapshot at t = {float(t)!r} (1/omega_perp)"])
    logger.debug(f"Wrote density snapshot t={t:.4f} to {path}")
    return path


def read_density_snapshot(path: PathLike) -> Tuple[np.ndarray, Grid2D, float]:
    """Return ``(density, grid, t)``; the grid is rebuilt centered as by :func:`make_grid`."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as e:
        logger.error(f"Failed to read snapshot {path}: {str(e)}")
        raise ArtifactError(f"cannot read {path}: {e}")

    offset = len(SNAPSHOT_MAGIC)
    if raw[:offset] != SNAPSHOT_MAGIC:
        raise ArtifactError(f"{path}: not a density snapshot (bad magic)")
    if len(raw) < offset + SNAPSHOT_HEADER.itemsize:
        raise ArtifactError(f"{path}: truncated header")
    header = np.frombuffer(raw, dtype=SNAPSHOT_HEADER, count=1, offset=offset)[0]
    n_x, n_y = int(header["n_x"]), int(header["n_y"])
    offset += SNAPSHOT_HEADER.itemsize
    expected = offset + SNAPSHOT_DATA.itemsize * n_x * n_y
    if len(raw) != expected:
        raise ArtifactError(f"{path}: expected {expected} bytes, found {len(raw)}")

    rho = np.frombuffer(raw, dtype=SNAPSHOT_DATA, count=n_x * n_y, offset=offset).reshape(n_x, n_y).copy()
    dx, dy = float(header["dx"]), float(header["dy"])
    if n_x != n_y or dx != dy:
        raise ArtifactError(f"{path}: only square grids are supported, got {n_x}x{n_y} with dx={dx}, dy={dy}")
    return rho, make_grid(n_x, dx), float(header["t"])


def snapshot_name(species: Union[int, str], t: float) -> str:
    """File name for species 1 or 2, or for ``"mixture"`` (the combined density)."""
    prefix = f"species{species}" if isinstance(species, int) else str(species)
    return f"{prefix}_t{t:011.4f}.bin"


class SnapshotWriter:
    """Sample callback writing both species' densities and their mixture at the first sample
    at or after each requested time."""

    def __init__(self, out_dir: PathLike, times: Sequence[float], config: Optional[RunConfig] = None,
                 t_unit: Optional[float] = None):
        self.out_dir = Path(out_dir)
        self.pending = sorted(float(t) for t in times)
        self.config = config
        self.t_unit = t_unit
        self.written: List[Path] = []

    def __call__(self, t: float, psi1: ComplexField2D, psi2: ComplexField2D):
        due = False
        while self.pending and t >= self.pending[0] - 1e-9:
            self.pending.pop(0)
            due = True
        if not due:
            return
        for species, psi in ((1, psi1), (2, psi2)):
            path = write_density_snapshot(psi, t, self.out_dir / snapshot_name(species, t), config=self.config)
            self.written.append(path)
        self.written.append(write_density_snapshot(
            mixture_density(psi1, psi2), t, self.out_dir / snapshot_name("mixture", t),
            grid=psi1.grid, config=self.config,
        ))
        seconds = f" ({t * self.t_unit:.4f} s)" if self.t_unit is not None else ""
        logger.info(f"📸 Density snapshots at t={t:.3f}{seconds}")

    @property
    def missed(self) -> List[float]:
        return list(self.pending)


def _format_number(value: Optional[float], failed: bool = True) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return FAILED if failed else ""
    return repr(float(value))


def _spec_columns(cell: SweepCell) -> List[str]:
    if cell.spec is None:
        return [FAILED if cell.failed else ""] * len(SPEC_COLUMNS)
    spec = cell.spec
    values = (spec.m1, spec.m2, spec.rho[1], spec.g[0][0], spec.g[0][1], spec.g[1][0], spec.g[1][1],
              spec.omega, spec.V0, spec.sigma, spec.d0, spec.a_perp, spec.t_unit)
    return [repr(float(v)) for v in values]


def _spec_from_columns(r0: float, columns: Sequence[str]) -> Optional[ModelSpec]:
    if any(text in ("", FAILED) for text in columns):
        return None
    m1, m2, rho2, g11, g12, g21, g22, omega, V0, sigma, d0, a_perp, t_unit = (float(text) for text in columns)
    return ModelSpec(m1=m1, m2=m2, rho=(1.0, rho2), g=((g11, g12), (g21, g22)), omega=omega, V0=V0,
                     sigma=sigma, r0=r0, d0=d0, a_perp=a_perp, t_unit=t_unit)


def write_sweep(result: SweepResult, path: PathLike, config: Optional[RunConfig] = None) -> Path:
    """Long-format sweep table with each cell's resolved model parameters.

    Failed cells carry ``failed`` in every numeric column.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for cell in result.cells:
            writer.writerow([repr(cell.r0), repr(cell.a12), cell.label, _format_number(cell.value),
                             _format_number(cell.peak_time, cell.failed),
                             _format_number(cell.peak_time_s, cell.failed),
                             *_spec_columns(cell)])
    if config is not None:
        write_sidecar(path, config, [f"sweep target {result.target}"])
    logger.info(f"✅ Wrote sweep table ({len(result.cells)} cells) to {path}")
    return path


def read_sweep(path: PathLike) -> SweepResult:
    """Rebuild a :class:`SweepResult` from :func:`write_sweep` output."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        logger.error(f"Failed to read sweep table {path}: {str(e)}")
        raise ArtifactError(f"cannot read {path}: {e}")
    if not rows or tuple(rows[0]) != SWEEP_HEADER:
        raise ArtifactError(f"{path}: unexpected sweep header")

    def number(text: str) -> Optional[float]:
        return None if text in ("", FAILED) else float(text)

    try:
        cells = []
        for row in rows[1:]:
            if len(row) != len(SWEEP_HEADER):
                raise ValueError(f"expected {len(SWEEP_HEADER)} columns, got {len(row)}")
            r0, a12, label, value, peak_time, peak_time_s = row[:6]
            cells.append(SweepCell(
                r0=float(r0), a12=float(a12), label=label, value=number(value),
                peak_time=number(peak_time), peak_time_s=number(peak_time_s),
                spec=_spec_from_columns(float(r0), row[6:]),
                error=FAILED if value == FAILED else None,
            ))
        r0_values = list(dict.fromkeys(cell.r0 for cell in cells))
        a12_values = list(dict.fromkeys(cell.a12 for cell in cells))
        target = cells[0].label if cells else "S_1"
        return SweepResult(r0_values=r0_values, a12_values=a12_values, target=target, cells=cells)
    except ValueError as e:
        logger.error(f"Invalid sweep table {path}: {str(e)}")
        raise ArtifactError(f"{path}: {e}")


def write_contours(contours: Sequence[Contour], path: PathLike, config: Optional[RunConfig] = None) -> Path:
    """One row per polyline vertex, grouped by contour index within each level."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CONTOUR_HEADER)
        for index, contour in enumerate(contours):
            for vertex, (r0, a12) in enumerate(contour.vertices):
                writer.writerow([repr(contour.level), index, vertex, repr(r0), repr(a12)])
    if config is not None:
        write_sidecar(path, config, [f"{len(contours)} iso-yield contour(s)"])
    logger.info(f"✅ Wrote {len(contours)} contour(s) to {path}")
    return path


def write_summary(summary: RunSummary, path: PathLike, config: Optional[RunConfig] = None) -> Path:
    """JSON dump of a run summary."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(summary.model_dump(mode="json"), f, indent=2)
        f.write("\n")
    if config is not None:
        write_sidecar(path, config, ["run summary"])
    return path
