"""State-machine behavior: dwell timing, adjacency, and parameter tables."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from dccsim.dcc import (
    REGULATORY_TX_RANGE_DBM,
    ConfigError,
    DccParamTable,
    DccState,
    DccTimerState,
    StateParams,
    dcc_step,
    override_restrictive_tx,
    params_for,
)

SAMPLE_PERIOD_S = 0.2


def drive(timer, table, samples, t0=0.0, period=SAMPLE_PERIOD_S):
    """Feed a CBR sequence at a fixed period; return the state trajectory."""
    states = []
    for k, cbr in enumerate(samples):
        state, _ = dcc_step(timer, cbr, t0 + k * period, table)
        states.append(state)
    return states


class TestDefaultTable:
    def test_restrictive_row(self):
        p = params_for(DccState.RESTRICTIVE, DccParamTable())
        assert p.tx_power_dbm == -10.0
        assert p.cca_threshold_dbm == -65.0
        assert p.beacon_rate_hz == 1.0
        assert p.phy_rate_mbps == 12.0
        assert p.rx_sensitivity_dbm == -77.0

    def test_active_row(self):
        p = params_for(DccState.ACTIVE, DccParamTable())
        assert p.tx_power_dbm == 23.0
        assert p.cca_threshold_dbm == -85.0
        assert p.beacon_rate_hz == 2.0
        assert p.phy_rate_mbps == 6.0
        assert p.rx_sensitivity_dbm == -82.0

    def test_thresholds_and_dwells(self):
        table = DccParamTable()
        assert table.min_cbr_threshold == 0.15
        assert table.max_cbr_threshold == 0.40
        assert table.up_dwell_s == 1.0
        assert table.down_dwell_s == 5.0

    def test_validation(self):
        with pytest.raises(ConfigError):
            DccParamTable(min_cbr_threshold=0.5, max_cbr_threshold=0.4)
        with pytest.raises(ConfigError):
            DccParamTable(min_cbr_threshold=0.0)
        with pytest.raises(ConfigError):
            DccParamTable(up_dwell_s=2.0, down_dwell_s=1.0)
        with pytest.raises(ConfigError):
            DccParamTable(up_dwell_s=0.0)
        with pytest.raises(ConfigError):
            StateParams(0.0, -65.0, 0.0, 12.0, -77.0)

    def test_override_restrictive_tx(self):
        table = override_restrictive_tx(DccParamTable(), 16.0)
        assert params_for(DccState.RESTRICTIVE, table).tx_power_dbm == 16.0
        # Everything else is untouched.
        assert params_for(DccState.RESTRICTIVE, table).cca_threshold_dbm == -65.0
        assert params_for(DccState.ACTIVE, table).tx_power_dbm == 23.0

    def test_override_regulatory_range(self):
        lo, hi = REGULATORY_TX_RANGE_DBM
        override_restrictive_tx(DccParamTable(), lo)
        override_restrictive_tx(DccParamTable(), hi)
        with pytest.raises(ConfigError):
            override_restrictive_tx(DccParamTable(), lo - 0.1)
        with pytest.raises(ConfigError):
            override_restrictive_tx(DccParamTable(), hi + 0.1)


class TestTransitions:
    def test_promotion_requires_full_dwell(self):
        table = DccParamTable()
        timer = DccTimerState()
        # Five samples at 0.2 s spacing span 0.8 s of hold: not enough.
        states = drive(timer, table, [0.2] * 5)
        assert all(s is DccState.RELAXED for s in states)
        # The sixth sample reaches the full 1 s hold and promotes.
        states = drive(timer, table, [0.2], t0=1.0)
        assert states[-1] is DccState.ACTIVE

    def test_hold_resets_when_condition_lapses(self):
        table = DccParamTable()
        timer = DccTimerState()
        # 0.8 s above the threshold, one dip, then 0.8 s above: no promotion.
        samples = [0.2] * 5 + [0.1] + [0.2] * 5
        states = drive(timer, table, samples)
        assert all(s is DccState.RELAXED for s in states)

    def test_no_direct_relaxed_to_restrictive(self):
        table = DccParamTable()
        timer = DccTimerState()
        # Saturated CBR still has to pass through Active.
        states = drive(timer, table, [1.0] * 30)
        first_active = states.index(DccState.ACTIVE)
        first_restrictive = states.index(DccState.RESTRICTIVE)
        assert 0 < first_active < first_restrictive
        assert states[first_active - 1] is DccState.RELAXED
        assert states[first_restrictive - 1] is DccState.ACTIVE

    def test_alternating_above_below_max_stays_active(self):
        table = DccParamTable()
        timer = DccTimerState(current=DccState.ACTIVE)
        # 0.45/0.35 alternation keeps resetting the up hold while never
        # satisfying the down condition (CBR < 0.15).
        states = drive(timer, table, [0.45, 0.35] * 30)
        assert all(s is DccState.ACTIVE for s in states)

    def test_demotion_requires_five_seconds(self):
        table = DccParamTable()
        timer = DccTimerState(current=DccState.RESTRICTIVE)
        n_short = int(5.0 / SAMPLE_PERIOD_S)  # spans 4.8 s of hold
        states = drive(timer, table, [0.1] * n_short)
        assert all(s is DccState.RESTRICTIVE for s in states)
        states = drive(timer, table, [0.1] * 2, t0=n_short * SAMPLE_PERIOD_S)
        assert states[-1] is DccState.ACTIVE

    def test_invalid_cbr_rejected(self):
        timer = DccTimerState()
        with pytest.raises(ValueError):
            dcc_step(timer, -0.01, 0.0, DccParamTable())
        with pytest.raises(ValueError):
            dcc_step(timer, 1.01, 0.0, DccParamTable())


@st.composite
def cbr_traces(draw):
    return draw(
        st.lists(
            st.sampled_from([0.0, 0.1, 0.14, 0.15, 0.2, 0.39, 0.40, 0.6, 1.0]),
            min_size=1,
            max_size=120,
        )
    )


ORDER = {DccState.RELAXED: 0, DccState.ACTIVE: 1, DccState.RESTRICTIVE: 2}


class TestProperties:
    @given(cbr_traces())
    def test_transitions_are_adjacent(self, trace):
        table = DccParamTable()
        timer = DccTimerState()
        prev = timer.current
        for k, cbr in enumerate(trace):
            state, _ = dcc_step(timer, cbr, k * SAMPLE_PERIOD_S, table)
            assert abs(ORDER[state] - ORDER[prev]) <= 1
            prev = state

    @given(cbr_traces())
    def test_up_transition_needs_held_condition(self, trace):
        """Any promotion must be preceded by >= 1 s of satisfied up condition."""
        table = DccParamTable()
        timer = DccTimerState()
        history = []  # (time, cbr) pairs already applied
        prev = timer.current
        for k, cbr in enumerate(trace):
            now = k * SAMPLE_PERIOD_S
            state, _ = dcc_step(timer, cbr, now, table)
            history.append((now, cbr))
            if ORDER[state] > ORDER[prev]:
                threshold = (
                    table.min_cbr_threshold
                    if prev is DccState.RELAXED
                    else table.max_cbr_threshold
                )
                assert now >= table.up_dwell_s
                assert all(
                    c >= threshold for t, c in history if now - t <= table.up_dwell_s
                )
            prev = state

    @given(cbr_traces())
    def test_restrictive_sojourn_at_least_down_dwell(self, trace):
        """Time from entering Restrictive to leaving it is >= 5 s."""
        table = DccParamTable()
        timer = DccTimerState()
        entered = None
        prev = timer.current
        for k, cbr in enumerate(trace):
            now = k * SAMPLE_PERIOD_S
            state, _ = dcc_step(timer, cbr, now, table)
            if state is DccState.RESTRICTIVE and prev is not DccState.RESTRICTIVE:
                entered = now
            if prev is DccState.RESTRICTIVE and state is not DccState.RESTRICTIVE:
                assert entered is not None
                assert now - entered >= table.down_dwell_s
            prev = state
