"""Frame timing, CCA, reception verdicts, and CBR-window accounting."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dccsim.phy import (
    CbrWindow,
    ConfigError,
    PhyProfile,
    RxVerdict,
    cbr_update,
    cca_busy,
    frame_airtime_s,
    reception_decision,
)


class TestFrameAirtime:
    def test_reference_values_250_bytes(self):
        # 32 us preamble + 8 us SIGNAL + ceil((16 + 2000 + 6)/bps) * 8 us,
        # computed externally for a 250-byte payload.
        assert frame_airtime_s(250, 12.0) == pytest.approx(216e-6)
        assert frame_airtime_s(250, 6.0) == pytest.approx(384e-6)
        assert frame_airtime_s(250, 3.0) == pytest.approx(720e-6)
        assert frame_airtime_s(250, 27.0) == pytest.approx(120e-6)

    def test_symbol_quantization(self):
        # 12 Mbps carries 96 data bits per symbol; payloads within the same
        # symbol count share an airtime, and the next byte over adds 8 us
        # only when it spills into a fresh symbol.
        assert frame_airtime_s(1, 12.0) == pytest.approx(32e-6 + 8e-6 + 8e-6)
        assert frame_airtime_s(9, 12.0) == frame_airtime_s(1, 12.0)
        assert frame_airtime_s(10, 12.0) == pytest.approx(frame_airtime_s(9, 12.0) + 8e-6)

    def test_unsupported_configurations(self):
        with pytest.raises(ConfigError):
            frame_airtime_s(250, 5.0)
        with pytest.raises(ConfigError):
            frame_airtime_s(250, 12.0, channel_bandwidth_mhz=20.0)
        with pytest.raises(ConfigError):
            frame_airtime_s(0, 12.0)
        with pytest.raises(ConfigError):
            frame_airtime_s(-5, 12.0)

    @given(payload=st.integers(min_value=1, max_value=2000))
    def test_monotone_in_payload(self, payload):
        assert frame_airtime_s(payload + 1, 12.0) >= frame_airtime_s(payload, 12.0)

    @given(payload=st.integers(min_value=1, max_value=2000))
    def test_faster_rate_never_slower(self, payload):
        assert frame_airtime_s(payload, 12.0) <= frame_airtime_s(payload, 6.0)


class TestCca:
    def test_threshold_boundary(self):
        assert cca_busy(-65.0, -65.0) is True
        assert cca_busy(-64.9, -65.0) is True
        assert cca_busy(-65.1, -65.0) is False


class TestReceptionDecision:
    PROFILE = PhyProfile.for_rate(12.0)  # -77 dBm sensitivity, 15 dB SINR

    def test_rx_busy_takes_precedence(self):
        verdict = reception_decision(-200.0, self.PROFILE, rx_transmitting=True)
        assert verdict is RxVerdict.RX_BUSY_TRANSMITTING

    def test_below_sensitivity(self):
        assert reception_decision(-77.1, self.PROFILE) is RxVerdict.BELOW_SENSITIVITY

    def test_sinr_failure_from_interference(self):
        # -60 dBm signal against -65 dBm of interference is a 5 dB SINR,
        # short of the 15 dB the 12 Mbps profile needs.
        verdict = reception_decision(-60.0, self.PROFILE, interference_mw=10 ** (-65.0 / 10.0))
        assert verdict is RxVerdict.SINR_FAILURE

    def test_delivered_on_clean_channel(self):
        assert reception_decision(-70.0, self.PROFILE) is RxVerdict.DELIVERED

    def test_noise_floor_alone_can_fail_sinr(self):
        # At exactly sensitivity (-77 dBm) against a -94 dBm noise floor the
        # SINR is 17 dB: enough for 12 Mbps but not for a 19 dB requirement.
        strict = PhyProfile.for_rate(12.0, required_sinr_db=19.0)
        assert reception_decision(-77.0, strict) is RxVerdict.SINR_FAILURE
        assert reception_decision(-77.0, self.PROFILE) is RxVerdict.DELIVERED

    def test_profile_for_rate_validation(self):
        with pytest.raises(ConfigError):
            PhyProfile.for_rate(7.0)


class TestCbrWindow:
    def test_single_frame(self):
        window = CbrWindow()
        assert cbr_update(window, [(0.5, 0.5 + 216e-6)], 1.0) == pytest.approx(216e-6)

    def test_overlapping_intervals_union(self):
        window = CbrWindow()
        window.add_busy(0.10, 0.30)
        window.add_busy(0.20, 0.40)  # overlaps: union is [0.10, 0.40]
        window.add_busy(0.40, 0.50)  # touching: still one merged interval
        assert window.cbr(1.0) == pytest.approx(0.40)

    def test_out_of_order_rejected(self):
        window = CbrWindow()
        window.add_busy(0.5, 0.6)
        with pytest.raises(ValueError):
            window.add_busy(0.4, 0.45)

    def test_empty_interval_ignored(self):
        window = CbrWindow()
        window.add_busy(0.5, 0.5)
        assert window.cbr(1.0) == 0.0

    def test_saturated_channel_clamps_at_one(self):
        window = CbrWindow()
        window.add_busy(0.0, 5.0)
        assert window.cbr(1.0) == 1.0

    def test_trailing_window_excludes_old_busy(self):
        window = CbrWindow()
        window.add_busy(0.0, 0.5)
        assert window.cbr(1.0) == pytest.approx(0.5)
        assert window.cbr(2.0) == 0.0

    def test_partial_overlap_with_window_edges(self):
        window = CbrWindow()
        window.add_busy(0.9, 1.1)
        # Window (0, 1]: only the [0.9, 1.0] part counts.
        assert window.cbr(1.0) == pytest.approx(0.1)

    def test_pruning_preserves_later_queries(self):
        window = CbrWindow()
        window.add_busy(0.0, 0.2)
        window.add_busy(1.5, 1.7)
        window.cbr(1.0)  # prunes the first interval
        assert window.cbr(2.0) == pytest.approx(0.2)

    @given(
        st.lists(
            st.tuples(
                st.floats(min_value=0.0, max_value=2.0),
                st.floats(min_value=0.0, max_value=0.5),
            ),
            max_size=30,
        )
    )
    def test_cbr_always_in_unit_interval(self, raw):
        window = CbrWindow()
        for start, length in sorted(raw):
            window.add_busy(start, start + length)
        assert 0.0 <= window.cbr(2.5) <= 1.0
