"""Field-log ingestion: RSSI mapping, haversine, matching, and tabulation."""

import csv
import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dccsim.fieldlog import (
    EARTH_RADIUS_M,
    Diagnostics,
    LogError,
    RxLogRecord,
    TxLogRecord,
    haversine_m,
    match_and_tabulate,
    read_rx_log,
    read_tx_log,
    rssi_to_dbm,
    write_pdr_table_csv,
)

M_PER_DEG_LAT = EARTH_RADIUS_M * math.pi / 180.0


class TestRssi:
    def test_endpoints(self):
        assert rssi_to_dbm(0) == -95.0
        assert rssi_to_dbm(60) == -35.0
        assert rssi_to_dbm(18) == -77.0

    def test_out_of_range(self):
        with pytest.raises(LogError):
            rssi_to_dbm(-1)
        with pytest.raises(LogError):
            rssi_to_dbm(61)

    @given(st.integers(min_value=0, max_value=60))
    def test_round_trip_bijection(self, rssi):
        assert int(rssi_to_dbm(rssi) - (-95.0)) == rssi


class TestHaversine:
    def test_one_degree_of_latitude(self):
        # pi/180 * 6,371,000 m, computed externally.
        assert haversine_m(0.0, 0.0, 1.0, 0.0) == pytest.approx(111194.93, abs=1.0)

    def test_symmetry_and_zero(self):
        assert haversine_m(37.0, 127.0, 37.0, 127.0) == 0.0
        assert haversine_m(10.0, 20.0, 11.0, 21.0) == pytest.approx(
            haversine_m(11.0, 21.0, 10.0, 20.0)
        )

    def test_small_northward_offset_is_linear(self):
        d = 40.0
        lat2 = 37.0 + d / M_PER_DEG_LAT
        assert haversine_m(37.0, 127.0, lat2, 127.0) == pytest.approx(d, abs=1e-6)

    def test_coordinate_validation(self):
        with pytest.raises(LogError):
            haversine_m(91.0, 0.0, 0.0, 0.0)
        with pytest.raises(LogError):
            haversine_m(0.0, 181.0, 0.0, 0.0)


def write_lines(path, header, lines):
    path.write_text(header + "\n" + "\n".join(lines) + ("\n" if lines else ""))


class TestReaders:
    def test_tx_log_with_malformed_rows(self, tmp_path):
        p = tmp_path / "tx.csv"
        write_lines(
            p,
            "time_s,seq,lat_deg,lon_deg",
            [
                "0.1,1,37.0,127.0",
                "0.2,oops,37.0,127.0",     # non-integer sequence
                "0.3,3,95.0,127.0",        # latitude out of range
                "0.4,4,37.0,127.0",
            ],
        )
        diag = Diagnostics()
        records = read_tx_log(p, diag)
        assert [r.sequence_number for r in records] == [1, 4]
        assert diag.rejected_malformed == 1
        assert diag.rejected_coords == 1
        assert diag.total_rejected == 2

    def test_rx_log_rssi_rejection(self, tmp_path):
        p = tmp_path / "rx.csv"
        write_lines(
            p,
            "time_s,seq,rssi,lat_deg,lon_deg",
            [
                "0.1,1,30,37.0,127.0",
                "0.2,2,61,37.0,127.0",   # out of device range
                "0.3,3,-2,37.0,127.0",   # out of device range
                "bad row entirely",
            ],
        )
        diag = Diagnostics()
        records = read_rx_log(p, diag)
        assert [r.sequence_number for r in records] == [1]
        assert diag.rejected_rssi == 2
        assert diag.rejected_malformed == 1


def tx_rec(seq, dist_m):
    return TxLogRecord(0.1 * seq, seq, 37.0 + dist_m / M_PER_DEG_LAT, 127.0)


def rx_rec(seq, rssi=30):
    return RxLogRecord(0.1 * seq + 0.001, seq, rssi, 37.0, 127.0)


class TestMatchAndTabulate:
    def test_basic_join_and_bins(self):
        # Two distances, one lost beacon at the far one.
        tx = [tx_rec(1, 3.0), tx_rec(2, 3.0), tx_rec(3, 6.0), tx_rec(4, 6.0)]
        rx = [rx_rec(1), rx_rec(2), rx_rec(3)]
        table = match_and_tabulate(tx, rx, bin_width_m=2.5)
        assert table.bins == [(2.5, 5.0, 2, 2), (5.0, 7.5, 2, 1)]
        assert len(table.scatter) == 3
        assert all(p == -65.0 for _, p in table.scatter)

    def test_unmatched_rx_counted_not_delivered(self):
        diag = Diagnostics()
        table = match_and_tabulate([tx_rec(1, 3.0)], [rx_rec(1), rx_rec(99)], diag=diag)
        assert diag.unmatched_rx == 1
        assert sum(received for *_, received in table.bins) == 1

    def test_unmatched_tx_uses_nearest_matched_rx_position(self):
        # Sequence 2 is lost; its distance comes from the receiver position
        # of the nearest matched sequence, which sits at the origin.
        tx = [tx_rec(1, 3.0), tx_rec(2, 3.0), tx_rec(3, 3.0)]
        rx = [rx_rec(1), rx_rec(3)]
        table = match_and_tabulate(tx, rx, bin_width_m=2.5)
        assert table.bins == [(2.5, 5.0, 3, 2)]

    def test_no_receptions_yields_zero_pdr_bins(self):
        table = match_and_tabulate([tx_rec(1, 3.0), tx_rec(2, 3.0)], [])
        assert sum(b[2] for b in table.bins) == 2
        assert all(b[3] == 0 for b in table.bins)
        assert table.scatter == []

    def test_empty_tx_log_rejected(self):
        with pytest.raises(LogError):
            match_and_tabulate([], [rx_rec(1)])

    def test_bad_bin_width_rejected(self):
        with pytest.raises(LogError):
            match_and_tabulate([tx_rec(1, 3.0)], [], bin_width_m=0.0)

    def test_rx_order_independence(self):
        tx = [tx_rec(s, 2.0 + 0.5 * s) for s in range(1, 40)]
        rx = [rx_rec(s, rssi=20 + s % 10) for s in range(1, 40, 2)] + [rx_rec(100)]
        shuffled = rx[:]
        random.Random(5).shuffle(shuffled)
        t1 = match_and_tabulate(tx, rx)
        t2 = match_and_tabulate(tx, shuffled)
        assert t1.bins == t2.bins
        assert t1.scatter == t2.scatter

    def test_csv_percent_formatting(self, tmp_path):
        tx = [tx_rec(s, 3.0) for s in range(1, 1001)]
        rx = [rx_rec(s) for s in range(1, 769)]  # 768/1000 -> 76.8%
        table = match_and_tabulate(tx, rx)
        out = tmp_path / "table.csv"
        write_pdr_table_csv(out, table)
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["bin_low_m", "bin_high_m", "sent", "received", "pdr_percent"]
        assert rows[1] == ["2.5", "5", "1000", "768", "76.8"]
