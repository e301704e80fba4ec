import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drivecluster.errors import InsufficientDataError, OrderingError, ParseError, SchemaError
from drivecluster.ingest import (
    LOG_COLUMNS,
    ResampledSession,
    SampleSeries,
    SignalKind,
    UserRecord,
    filter_min_duration,
    load_log_dir,
    parse_session_log,
    resample_linear,
    resample_session,
    write_session_log,
)

HEADER = ",".join(LOG_COLUMNS)


def write_log(tmp_path, rows, header=HEADER, name="u1__s1.csv"):
    path = tmp_path / name
    path.write_text(header + "\n" + "\n".join(rows) + "\n")
    return path


def test_signal_kind_has_eight_unique_columns():
    assert len(SignalKind) == 8
    assert len({s.column for s in SignalKind}) == 8
    assert LOG_COLUMNS[0] == "t"


class TestParse:
    def test_three_rows(self, tmp_path):
        rows = [f"{t},1,2,3,4,5,6,7,8" for t in ("0.0", "0.25", "0.5")]
        session = parse_session_log(write_log(tmp_path, rows))
        assert session.user_id == "u1" and session.session_id == "s1"
        assert session.duration == 0.5
        for sig in SignalKind:
            assert len(session.series[sig]) == 3
        np.testing.assert_array_equal(session.series[SignalKind.GAS].x, [2, 2, 2])

    def test_timestamps_normalised_to_zero(self, tmp_path):
        rows = [f"{t},1,2,3,4,5,6,7,8" for t in ("100.0", "100.25", "101.0")]
        session = parse_session_log(write_log(tmp_path, rows))
        np.testing.assert_allclose(session.series[SignalKind.BRK].t, [0.0, 0.25, 1.0])
        assert session.duration == pytest.approx(1.0)

    def test_out_of_order_timestamp_names_line(self, tmp_path):
        rows = ["0.0,1,2,3,4,5,6,7,8", "0.5,1,2,3,4,5,6,7,8", "0.25,1,2,3,4,5,6,7,8"]
        with pytest.raises(OrderingError) as exc:
            parse_session_log(write_log(tmp_path, rows))
        assert exc.value.line == 4
        assert ":4" in str(exc.value)

    def test_missing_column_is_schema_error(self, tmp_path):
        header = "t,BRK,GAS,RPM,SPD,SWA,FACC,LACC"
        rows = ["0.0,1,2,3,4,5,7,8", "0.25,1,2,3,4,5,7,8"]
        with pytest.raises(SchemaError, match="SWM"):
            parse_session_log(write_log(tmp_path, rows, header=header))

    @pytest.mark.parametrize(
        "bad_row",
        ["0.25,1,2,3,4,5,6,7", "0.25,1,x,3,4,5,6,7,8", "0.25,1,nan,3,4,5,6,7,8", ",1,2,3,4,5,6,7,8"],
    )
    def test_malformed_row_reports_line(self, tmp_path, bad_row):
        rows = ["0.0,1,2,3,4,5,6,7,8", bad_row]
        with pytest.raises(ParseError) as exc:
            parse_session_log(write_log(tmp_path, rows))
        assert exc.value.line == 3

    def test_sparse_cells_give_per_signal_series(self, tmp_path):
        rows = ["0.0,1,2,3,4,5,6,7,8", "0.05,,2.5,,,,,,", "0.1,1,3,3,4,5,6,7,8"]
        session = parse_session_log(write_log(tmp_path, rows))
        assert len(session.series[SignalKind.GAS]) == 3
        assert len(session.series[SignalKind.BRK]) == 2
        np.testing.assert_allclose(session.series[SignalKind.BRK].t, [0.0, 0.1])

    def test_signal_without_samples_is_schema_error(self, tmp_path):
        rows = ["0.0,1,2,3,4,5,,7,8", "0.25,1,2,3,4,5,,7,8"]
        with pytest.raises(SchemaError, match="SWM"):
            parse_session_log(write_log(tmp_path, rows))

    def test_bad_filename(self, tmp_path):
        path = write_log(tmp_path, ["0.0,1,2,3,4,5,6,7,8"], name="nounderscore.csv")
        with pytest.raises(ParseError):
            parse_session_log(path)

    def test_write_then_parse_round_trip(self, tmp_path):
        rows = ["0.0,1,2,3,4,5,6,7,8", "0.05,,2.5,,,,,,", "0.1,1.5,3,3,4,5,6,7,8"]
        session = parse_session_log(write_log(tmp_path, rows))
        out = tmp_path / "u1__copy.csv"
        write_session_log(session, out)
        again = parse_session_log(out, user_id="u1", session_id="s1")
        for sig in SignalKind:
            np.testing.assert_allclose(again.series[sig].t, session.series[sig].t)
            np.testing.assert_allclose(again.series[sig].x, session.series[sig].x)

    def test_load_dir_groups_users(self, tmp_path):
        for name in ("b__s2.csv", "b__s1.csv", "a__s1.csv"):
            write_log(tmp_path, ["0.0,1,2,3,4,5,6,7,8", "1.0,1,2,3,4,5,6,7,8"], name=name)
        users = load_log_dir(tmp_path)
        assert [u.user_id for u in users] == ["a", "b"]
        assert [s.session_id for s in users[1].sessions] == ["s1", "s2"]
        assert users[1].total_hours == pytest.approx(2.0 / 3600)


class TestResample:
    def test_line(self):
        out = resample_linear(SampleSeries([0.0, 1.0], [0.0, 4.0]), 4)
        np.testing.assert_array_equal(out.values, [0, 1, 2, 3, 4])
        assert out.start == 0.0 and out.rate == 4.0

    def test_constant(self):
        out = resample_linear(SampleSeries([0.0, 2.0], [7.0, 7.0]), 4)
        np.testing.assert_array_equal(out.values, [7.0] * 9)

    def test_grid_on_samples(self):
        out = resample_linear(SampleSeries([0.0, 0.25, 0.5], [0.0, 1.0, 0.0]), 4)
        np.testing.assert_array_equal(out.values, [0.0, 1.0, 0.0])

    def test_too_short(self):
        with pytest.raises(InsufficientDataError):
            resample_linear(SampleSeries([0.0], [1.0]), 4)

    def test_grid_anchored_at_first_sample_and_stops_before_last(self):
        out = resample_linear(SampleSeries([1.1, 1.9], [0.0, 8.0]), 4)
        np.testing.assert_allclose(out.times, [1.1, 1.35, 1.6, 1.85])
        np.testing.assert_allclose(out.values, [0.0, 2.5, 5.0, 7.5])

    def test_raw_hits_returned_verbatim(self):
        t = np.arange(0, 201) * 0.05  # 20 Hz raw grid
        x = np.sin(t * 3.7) * 1e3 + 1 / 3
        out = resample_linear(SampleSeries(t, x), 4)
        # every 5th raw sample sits on the 4 Hz grid
        assert np.array_equal(out.values, x[::5])

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-1e3, 1e3),
        st.floats(-1e3, 1e3),
        st.floats(0, 100),
        st.lists(st.floats(0.01, 3.0), min_size=1, max_size=30),
    )
    def test_affine_reproduced_exactly(self, slope, intercept, t0, gaps):
        t = t0 + np.concatenate([[0.0], np.cumsum(gaps)])
        out = resample_linear(SampleSeries(t, slope * t + intercept), 4)
        expected = slope * out.times + intercept
        scale = max(1.0, float(np.max(np.abs(expected))))
        assert np.max(np.abs(out.values - expected)) <= 1e-12 * scale
        assert out.values.size == math.floor((t[-1] - t[0]) * 4 + 1e-9) + 1
        np.testing.assert_allclose(np.diff(out.times), 0.25)

    def test_resample_session(self, tmp_path):
        rows = [f"{t},1,2,3,4,5,6,7,8" for t in ("0.0", "0.5", "1.0")]
        session = parse_session_log(write_log(tmp_path, rows))
        rs = resample_session(session)
        assert all(len(rs.series[s]) == 5 for s in SignalKind)
        assert rs.duration == 1.0


def _user(uid, hours):
    return UserRecord(uid, (ResampledSession("s", uid, {}, hours * 3600.0),))


class TestFilter:
    def test_boundary_inclusive(self):
        users = [_user("a", 9.9), _user("b", 10.0)]
        assert [u.user_id for u in filter_min_duration(users, 10)] == ["b"]

    def test_zero_is_identity(self):
        users = [_user("a", 0.0), _user("b", 3.0)]
        assert filter_min_duration(users, 0) == users

    def test_empty(self):
        assert filter_min_duration([], 10) == []

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            filter_min_duration([], -1)

    @given(st.lists(st.floats(0, 50), max_size=20), st.floats(0, 50), st.floats(0, 50))
    def test_idempotent_and_monotone(self, hours, a, b):
        users = [_user(f"u{i}", h) for i, h in enumerate(hours)]
        lo, hi = sorted((a, b))
        once = filter_min_duration(users, lo)
        assert filter_min_duration(once, lo) == once
        assert set(u.user_id for u in filter_min_duration(users, hi)) <= set(u.user_id for u in once)
