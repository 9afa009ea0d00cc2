"""Peakedness statistics: hand-checked values, merge pooling, plot data."""

import io
import math

import numpy as np
import pytest

from ctckit.lattice import DistributionLattice, Vocabulary
from ctckit.peakedness import (
    BLANK_TOKEN_TEXT,
    PeakStats,
    emit_plot_data,
    peak_stats,
    save_plot_data,
    write_plot_data,
)


def lattice_from_path(path_probs):
    """Build a lattice whose greedy path follows the given (col, prob) list;
    the remaining mass is spread over the other columns."""
    width = 3
    rows = []
    for col, p in path_probs:
        row = np.full(width, (1.0 - p) / (width - 1))
        row[col] = p
        rows.append(row)
    return DistributionLattice.from_probs(np.array(rows))


VOCAB = Vocabulary.generic(2)


class TestPeakStats:
    def test_hand_example(self):
        # path a a <blank> b with argmax probs .9 .8 .99 .7
        dist = lattice_from_path([(1, 0.9), (1, 0.8), (0, 0.99), (2, 0.7)])
        st = peak_stats(dist, VOCAB)
        assert st.num_emissions == 2
        assert st.num_blank_frames == 1
        assert st.num_nonblank_frames == 3
        assert math.isclose(st.mean_nonblank_duration, 1.5, abs_tol=1e-12)
        assert math.isclose(st.mean_blank_emit_prob, 0.99, abs_tol=1e-12)
        assert math.isclose(st.mean_nonblank_emit_prob, 0.8, abs_tol=1e-12)

    def test_blank_breaks_run(self):
        # a <blank> a is two emissions of the same token
        dist = lattice_from_path([(1, 0.9), (0, 0.9), (1, 0.9)])
        st = peak_stats(dist, VOCAB)
        assert st.num_emissions == 2
        assert st.mean_nonblank_duration == 1.0

    def test_token_change_breaks_run(self):
        dist = lattice_from_path([(1, 0.9), (2, 0.9), (2, 0.9)])
        st = peak_stats(dist, VOCAB)
        assert st.num_emissions == 2
        assert math.isclose(st.mean_nonblank_duration, 1.5)

    def test_all_blank(self):
        dist = lattice_from_path([(0, 0.8), (0, 0.6)])
        st = peak_stats(dist, VOCAB)
        assert st.num_emissions == 0
        assert st.num_nonblank_frames == 0
        assert st.mean_nonblank_duration == 0.0
        assert st.mean_nonblank_emit_prob == 0.0
        assert math.isclose(st.mean_blank_emit_prob, 0.7)

    def test_no_blank(self):
        dist = lattice_from_path([(1, 0.9), (1, 0.9)])
        st = peak_stats(dist, VOCAB)
        assert st.num_blank_frames == 0
        assert st.mean_blank_emit_prob == 0.0
        assert st.num_frames == 2

    def test_merge_pools_by_counts(self):
        a = peak_stats(lattice_from_path([(1, 0.9), (1, 0.8), (0, 0.99), (2, 0.7)]), VOCAB)
        b = peak_stats(lattice_from_path([(0, 0.5), (2, 0.6)]), VOCAB)
        m = PeakStats.merge([a, b])
        # 4 nonblank frames over 3 emissions
        assert m.num_emissions == 3
        assert math.isclose(m.mean_nonblank_duration, 4.0 / 3.0)
        assert math.isclose(m.mean_blank_emit_prob, (0.99 + 0.5) / 2.0)
        assert math.isclose(m.mean_nonblank_emit_prob, (0.9 + 0.8 + 0.7 + 0.6) / 4.0)

    def test_merge_empty(self):
        m = PeakStats.merge([])
        assert m.num_frames == 0
        assert m.mean_nonblank_duration == 0.0

    def test_merge_singleton_identity(self):
        a = peak_stats(lattice_from_path([(1, 0.9), (0, 0.8)]), VOCAB)
        m = PeakStats.merge([a])
        assert math.isclose(m.mean_nonblank_duration, a.mean_nonblank_duration)
        assert math.isclose(m.mean_blank_emit_prob, a.mean_blank_emit_prob)
        assert m.num_emissions == a.num_emissions

    def test_csv_row_snapshot(self):
        dist = lattice_from_path([(1, 0.9), (1, 0.8), (0, 0.99), (2, 0.7)])
        st = peak_stats(dist, VOCAB)
        assert st.csv_row() == "4,1,3,2,1.500000,0.990000,0.800000"


class TestPlotData:
    def test_rows(self):
        dist = lattice_from_path([(1, 0.9), (0, 0.99)])
        rows = emit_plot_data(dist, VOCAB)
        assert rows[0] == (0, "t0", pytest.approx(0.9), False)
        assert rows[1] == (1, BLANK_TOKEN_TEXT, pytest.approx(0.99), True)

    def test_writer_snapshot(self):
        dist = lattice_from_path([(1, 0.9), (0, 0.99)])
        buf = io.StringIO()
        write_plot_data(emit_plot_data(dist, VOCAB), buf)
        assert buf.getvalue() == (
            "frame,token,probability,is_blank\n"
            "0,t0,0.900000,0\n"
            "1,<blank>,0.990000,1\n"
        )

    def test_save_round_trip(self, tmp_path):
        dist = lattice_from_path([(2, 0.7), (0, 0.6)])
        out = tmp_path / "plot.csv"
        save_plot_data(dist, VOCAB, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "frame,token,probability,is_blank"
        assert lines[1].startswith("0,t1,")
        assert lines[2].endswith(",1")
