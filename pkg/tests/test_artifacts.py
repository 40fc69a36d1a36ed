"""
Unit tests for time-series, snapshot, sweep, contour and summary files.
"""

import json

import numpy as np
import pytest

from ringsplit.analysis import summarize
from ringsplit.artifacts import (
    SNAPSHOT_MAGIC,
    SWEEP_HEADER,
    TIMESERIES_HEADER,
    SnapshotWriter,
    read_density_snapshot,
    read_sweep,
    read_timeseries,
    sidecar_path,
    snapshot_name,
    write_contours,
    write_density_snapshot,
    write_sidecar,
    write_summary,
    write_sweep,
    write_timeseries,
)
from ringsplit.config import parse_config
from ringsplit.exceptions import ArtifactError
from ringsplit.grid import integrate, make_grid
from ringsplit.model import initial_state
from ringsplit.observables import TimeSeries, density
from ringsplit.sweep import Contour, SweepCell, SweepResult


@pytest.fixture
def series():
    rng = np.random.default_rng(11)
    t = np.arange(6) * 0.05
    ac = rng.uniform(0.0, 1.0, size=(3, 6))
    return TimeSeries(t=t, ac1=ac[0], ac2=ac[1], S=ac[2], norm1=1.0 + rng.normal(scale=1e-14, size=6),
                      norm2=np.ones(6), energy=rng.normal(loc=3.0, size=6))


def _write_rows(path, rows):
    path.write_text(TIMESERIES_HEADER + "\n" + "".join(row + "\n" for row in rows), encoding="utf-8")
    return path


class TestTimeSeriesFile:
    """Test cases for the time-series CSV."""

    def test_header_and_rows(self, series, tmp_path):
        """One header line plus one LF-terminated row per sample."""
        path = write_timeseries(series, tmp_path / "timeseries.csv")
        lines = path.read_text(encoding="utf-8").split("\n")
        assert lines[0] == TIMESERIES_HEADER
        assert lines[0] == "t,ac1,ac2,S,norm1,norm2,energy"
        assert len([line for line in lines if line]) == 7
        assert b"\r\n" not in path.read_bytes()

    def test_values_survive_bit_exact(self, series, tmp_path):
        """17 significant digits reproduce every double exactly."""
        loaded = read_timeseries(write_timeseries(series, tmp_path / "timeseries.csv"))
        assert np.array_equal(loaded.as_matrix(), series.as_matrix())

    def test_sidecar_reparses(self, series, small_config, tmp_path):
        """The sidecar starts with a note and parses back to the run config."""
        path = write_timeseries(series, tmp_path / "timeseries.csv", config=small_config)
        sidecar = sidecar_path(path)
        assert sidecar.name == "timeseries.csv.cfg"
        text = sidecar.read_text(encoding="utf-8")
        assert text.startswith("# ")
        assert parse_config(text) == small_config

    def test_bad_header(self, tmp_path):
        """A file with foreign column names is rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("time,a,b\n0,1,2\n", encoding="utf-8")
        with pytest.raises(ArtifactError):
            read_timeseries(path)

    def test_missing_file(self, tmp_path):
        """A missing file surfaces as an ArtifactError."""
        with pytest.raises(ArtifactError):
            read_timeseries(tmp_path / "absent.csv")

    def test_non_numeric_value(self, tmp_path):
        """Unparseable cells are reported as an ArtifactError naming the file."""
        path = _write_rows(tmp_path / "timeseries.csv", ["0,abc,1,0,1,1,2.5"])
        with pytest.raises(ArtifactError) as info:
            read_timeseries(path)
        assert "timeseries.csv" in str(info.value)

    def test_out_of_range_value(self, tmp_path):
        """An autocorrelation above one fails validation as an ArtifactError."""
        path = _write_rows(tmp_path / "timeseries.csv", ["0,1,1,0,1,1,2.5", "1,1.5,1,0,1,1,2.5"])
        with pytest.raises(ArtifactError):
            read_timeseries(path)

    def test_unordered_times(self, tmp_path):
        """Sample times must increase."""
        path = _write_rows(tmp_path / "timeseries.csv", ["1,1,1,0,1,1,2.5", "0,1,1,0,1,1,2.5"])
        with pytest.raises(ArtifactError):
            read_timeseries(path)

    def test_wrong_column_count(self, tmp_path):
        """Rows need all seven columns."""
        path = _write_rows(tmp_path / "timeseries.csv", ["0,1,1,0,1,1"])
        with pytest.raises(ArtifactError):
            read_timeseries(path)


class TestDensitySnapshot:
    """Test cases for the binary snapshot layout."""

    def test_file_size(self, small_spec, small_grid, tmp_path):
        """Magic, two counts, three doubles, then n^2 doubles."""
        psi1, _ = initial_state(small_grid, small_spec)
        path = write_density_snapshot(psi1, 1.5, tmp_path / "snap.bin")
        raw = path.read_bytes()
        assert raw[:16] == SNAPSHOT_MAGIC
        assert len(raw) == 16 + 16 + 24 + 8 * 64 * 64

    def test_round_trip(self, small_spec, small_grid, tmp_path):
        """Density, grid and time come back unchanged."""
        psi1, _ = initial_state(small_grid, small_spec)
        rho, grid, t = read_density_snapshot(write_density_snapshot(psi1, 1.5, tmp_path / "snap.bin"))
        assert t == 1.5
        assert np.array_equal(rho, density(psi1))
        assert (grid.n_x, grid.dx) == (small_grid.n_x, small_grid.dx)
        assert grid.x_min == small_grid.x_min

    def test_bare_array_needs_grid(self, tmp_path):
        """A plain array needs a grid of matching shape."""
        with pytest.raises(ArtifactError):
            write_density_snapshot(np.zeros((8, 8)), 0.0, tmp_path / "snap.bin")
        with pytest.raises(ArtifactError):
            write_density_snapshot(np.zeros((8, 8)), 0.0, tmp_path / "snap.bin", grid=make_grid(16, 0.5))

    def test_bad_magic(self, tmp_path):
        """A corrupted magic is refused."""
        path = write_density_snapshot(np.ones((8, 8)), 0.0, tmp_path / "snap.bin", grid=make_grid(8, 0.5))
        raw = bytearray(path.read_bytes())
        raw[0:4] = b"NOPE"
        path.write_bytes(bytes(raw))
        with pytest.raises(ArtifactError):
            read_density_snapshot(path)

    def test_truncated(self, tmp_path):
        """A file shorter than its header promises is refused."""
        path = write_density_snapshot(np.ones((8, 8)), 0.0, tmp_path / "snap.bin", grid=make_grid(8, 0.5))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ArtifactError):
            read_density_snapshot(path)

    def test_snapshot_name(self):
        """Times are zero-padded to four decimals."""
        assert snapshot_name(1, 0.1) == "species1_t000000.1000.bin"
        assert snapshot_name(2, 463.034) == "species2_t000463.0340.bin"
        assert snapshot_name("mixture", 0.1) == "mixture_t000000.1000.bin"


class TestSnapshotWriter:
    """Test cases for the sampling callback."""

    def test_writes_at_first_sample_past_each_time(self, small_spec, small_grid, tmp_path):
        """Each requested time is served by the first sample at or after it."""
        psi1, psi2 = initial_state(small_grid, small_spec)
        writer = SnapshotWriter(tmp_path, [0.1, 0.25, 9.0])
        for t in (0.0, 0.1, 0.2, 0.3):
            writer(t, psi1, psi2)
        assert [p.name for p in writer.written] == [
            "species1_t000000.1000.bin", "species2_t000000.1000.bin", "mixture_t000000.1000.bin",
            "species1_t000000.3000.bin", "species2_t000000.3000.bin", "mixture_t000000.3000.bin",
        ]
        assert writer.missed == [9.0]

    def test_one_sample_serves_several_times(self, small_spec, small_grid, tmp_path):
        """Two requested times before one sample produce a single set of files."""
        psi1, psi2 = initial_state(small_grid, small_spec)
        writer = SnapshotWriter(tmp_path, [0.05, 0.1])
        writer(0.1, psi1, psi2)
        assert len(writer.written) == 3
        assert writer.missed == []

    def test_mixture_snapshot(self, small_spec, small_grid, small_config, tmp_path):
        """The mixture file holds the summed density, which integrates to two."""
        psi1, psi2 = initial_state(small_grid, small_spec)
        SnapshotWriter(tmp_path, [0.0], config=small_config)(0.0, psi1, psi2)
        rho, grid, t = read_density_snapshot(tmp_path / "mixture_t000000.0000.bin")
        assert np.allclose(rho, density(psi1) + density(psi2), rtol=0.0, atol=1e-15)
        assert integrate(rho, grid) == pytest.approx(2.0, abs=1e-10)
        assert parse_config(sidecar_path(tmp_path / "mixture_t000000.0000.bin").read_text(encoding="utf-8")) == small_config


class TestSweepFiles:
    """Test cases for sweep tables and contour polylines."""

    @pytest.fixture
    def result(self, small_spec):
        cells = [
            SweepCell(r0=10.0, a12=0.2, label="S_1", value=0.93, peak_time=452.1),
            SweepCell(r0=10.0, a12=0.3, label="S_1", error="no S_1 separability peak found"),
            SweepCell(r0=12.0, a12=0.2, label="S_1", value=0.97, peak_time=463.2),
            SweepCell(r0=12.0, a12=0.3, label="S_1", value=0.989, peak_time=463.5, peak_time_s=0.5675,
                      spec=small_spec.model_copy(update={"r0": 12.0})),
        ]
        return SweepResult(r0_values=[10.0, 12.0], a12_values=[0.2, 0.3], target="S_1", cells=cells)

    def test_failed_marker(self, result, tmp_path):
        """Failed cells carry ``failed`` in every numeric column."""
        text = write_sweep(result, tmp_path / "sweep.csv").read_text(encoding="utf-8")
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(SWEEP_HEADER)
        assert lines[0].startswith("r0,a12,label,yield,peak_time,peak_time_s,m1,m2,rho2,g11,g12")
        assert lines[2] == "10.0,0.3,S_1" + ",failed" * (len(SWEEP_HEADER) - 3)

    def test_missing_fields_of_a_good_cell_are_blank(self, result, tmp_path):
        """A successful cell without a recorded model leaves those columns empty."""
        lines = write_sweep(result, tmp_path / "sweep.csv").read_text(encoding="utf-8").strip().split("\n")
        assert lines[1] == "10.0,0.2,S_1,0.93,452.1" + "," * (len(SWEEP_HEADER) - 5)

    def test_round_trip(self, result, small_config, tmp_path):
        """Yields, failures and the per-cell model survive a write and read."""
        path = write_sweep(result, tmp_path / "sweep.csv", config=small_config)
        loaded = read_sweep(path)
        assert loaded.shape == (2, 2)
        assert np.array_equal(np.isnan(loaded.yield_table), np.isnan(result.yield_table))
        assert np.nanmax(np.abs(loaded.yield_table - result.yield_table)) == 0.0
        assert loaded.cell(1, 1).spec == result.cell(1, 1).spec
        assert loaded.cell(1, 1).peak_time_s == 0.5675
        assert loaded.cell(0, 0).spec is None
        assert loaded.cell(0, 1).failed
        assert parse_config(sidecar_path(path).read_text(encoding="utf-8")) == small_config

    def test_bad_sweep_header(self, tmp_path):
        """A table with foreign columns is rejected."""
        path = tmp_path / "sweep.csv"
        path.write_text("a,b\n", encoding="utf-8")
        with pytest.raises(ArtifactError):
            read_sweep(path)

    def test_short_sweep_row(self, tmp_path):
        """A row missing columns is rejected."""
        path = tmp_path / "sweep.csv"
        path.write_text(",".join(SWEEP_HEADER) + "\n10.0,0.2,S_1,0.9\n", encoding="utf-8")
        with pytest.raises(ArtifactError):
            read_sweep(path)

    def test_missing_sweep_file(self, tmp_path):
        """A missing sweep table surfaces as an ArtifactError."""
        with pytest.raises(ArtifactError):
            read_sweep(tmp_path / "absent.csv")

    def test_contour_rows(self, tmp_path):
        """One row per vertex, numbered within each contour."""
        contours = [Contour(level=0.5, vertices=[(10.0, 0.2), (11.0, 0.25)]),
                    Contour(level=0.9, vertices=[(12.0, 0.3)])]
        lines = write_contours(contours, tmp_path / "contours.csv").read_text(encoding="utf-8").strip().split("\n")
        assert lines == [
            "level,contour,vertex,r0,a12",
            "0.5,0,0,10.0,0.2",
            "0.5,0,1,11.0,0.25",
            "0.9,1,0,12.0,0.3",
        ]

    def test_contour_sidecar(self, small_config, tmp_path):
        """Contours get a sidecar that parses back to the run config."""
        path = write_contours([], tmp_path / "contours.csv", config=small_config)
        assert parse_config(sidecar_path(path).read_text(encoding="utf-8")) == small_config

    def test_sidecar_notes(self, small_config, tmp_path):
        """Notes become leading comment lines that the parser skips."""
        target = write_sidecar(tmp_path / "x.csv", small_config, ["first", "second"])
        text = target.read_text(encoding="utf-8")
        assert text.startswith("# first\n# second\n")
        assert parse_config(text) == small_config


class TestSummaryFile:
    """Test cases for the JSON run summary."""

    def test_summary_and_sidecar(self, series, small_spec, small_config, tmp_path):
        """The summary is valid JSON and its sidecar parses back to the run config."""
        path = write_summary(summarize(small_spec, series), tmp_path / "summary.json", config=small_config)
        dumped = json.loads(path.read_text(encoding="utf-8"))
        assert dumped["samples"] == 6
        assert parse_config(sidecar_path(path).read_text(encoding="utf-8")) == small_config

    def test_no_config_no_sidecar(self, series, small_spec, tmp_path):
        """Without a config only the JSON file is written."""
        path = write_summary(summarize(small_spec, series), tmp_path / "summary.json")
        assert not sidecar_path(path).exists()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
