import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holosched import metrics
from holosched.metrics import (
    DEFAULT_CURVE,
    DEFAULT_KNOTS,
    LikabilityCurve,
    MetricsError,
    aggregate,
    relative_change,
    resemblance,
    score,
)
from holosched.model import LatencyReport, UserLatency


def fake_report(*totals):
    per_user = {n: UserLatency(0.0, t, 0.0, 1) for n, t in enumerate(totals)}
    return LatencyReport(per_user, max(totals), {n: 1 for n in per_user})


def test_resemblance_by_hand():
    assert resemblance(0.364, 0.5) == pytest.approx(1 / 1.728)
    assert resemblance(0.364, 0.5) == pytest.approx(0.5787, abs=1e-4)
    assert resemblance(0.0) == 1.0
    assert resemblance(0.5) == pytest.approx(0.5)


def test_resemblance_rejects_bad_input():
    with pytest.raises(MetricsError):
        resemblance(-0.1)
    with pytest.raises(MetricsError):
        resemblance(0.1, 0.0)


def test_curve_passes_through_knots():
    for r, y in DEFAULT_KNOTS:
        assert DEFAULT_CURVE(r) == pytest.approx(y, abs=1e-12)


def test_curve_bounded_by_knot_extremes():
    ys = [y for _, y in DEFAULT_KNOTS]
    vals = DEFAULT_CURVE(np.linspace(0.0, 1.0, 2001))
    assert vals.min() >= min(ys) - 1e-12
    assert vals.max() <= max(ys) + 1e-12


def test_curve_has_one_valley():
    # rise, fall into the valley, climb back to 1 at full resemblance
    r = np.linspace(0.0, 1.0, 1000)
    y = DEFAULT_CURVE(r)
    i_peak = int(np.argmax(y[r < 0.6]))
    i_min = int(np.argmin(y))
    assert 0.6 < r[i_min] < 0.87
    assert y[i_min] < 0
    assert np.all(np.diff(y[: i_peak + 1]) >= -1e-12)
    assert np.all(np.diff(y[i_peak:i_min + 1]) <= 1e-12)
    assert np.all(np.diff(y[i_min:]) >= -1e-12)
    assert y[-1] == pytest.approx(1.0)


def test_curve_rejects_out_of_range_resemblance():
    with pytest.raises(MetricsError):
        DEFAULT_CURVE(1.2)
    with pytest.raises(MetricsError):
        DEFAULT_CURVE(float("nan"))


@pytest.mark.parametrize("knots,match", [
    (((0, 0), (0.5, 0.5), (1, 1)), "at least 4"),
    (((0, 0), (0.5, 0.5), (0.4, -0.2), (1, 1)), "increasing"),
    (((0, 0), (0.3, 0.5), (0.6, -1.5), (1, 1)), r"\[-1, 1\]"),
    (((0, 0), (0.3, 0.5), (0.6, 0.7), (1, 1)), "valley"),
    (((0, 0), (0.2, -0.1), (0.4, 0.2), (0.6, -0.2), (1, 1)), "found 2"),
    (((0.1, 0), (0.3, 0.5), (0.6, -0.2), (1, 1)), "start at resemblance 0"),
])
def test_curve_validation(knots, match):
    with pytest.raises(MetricsError, match=match):
        LikabilityCurve(knots)
    assert metrics.curve_problems(knots)


def test_score_is_not_monotone_in_latency():
    lat = np.linspace(0.0, 5.0, 1000)
    s = score(lat)
    d = np.diff(s)
    assert (d > 1e-9).any() and (d < -1e-9).any()


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 60.0), st.floats(0.01, 10.0))
def test_score_stays_in_knot_range(lat, l_ref):
    assert -0.3 - 1e-12 <= score(lat, l_ref_s=l_ref) <= 1.0 + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 60.0), st.floats(0.0, 60.0))
def test_resemblance_decreases_with_latency(a, b):
    lo, hi = sorted((a, b))
    assert resemblance(lo) >= resemblance(hi)


def test_aggregate_single_report():
    res = aggregate([fake_report(0.3)], policy="p")
    assert res.mean_latency_ms == pytest.approx(300.0)
    assert res.std_latency_ms == 0.0
    assert res.std_likability == 0.0
    assert res.mean_likability == pytest.approx(score(0.3))
    assert res.n_runs == 1
    assert res.policy == "p"


def test_aggregate_pools_users_with_population_std():
    res = aggregate([fake_report(0.2, 0.4), fake_report(0.6, 0.8)])
    assert res.mean_latency_ms == pytest.approx(500.0)
    assert res.std_latency_ms == pytest.approx(np.std([200, 400, 600, 800]))
    assert res.n_runs == 2


def test_aggregate_identical_runs():
    res = aggregate([fake_report(0.35, 0.35)] * 5)
    assert res.std_latency_ms == pytest.approx(0.0, abs=1e-9)
    assert res.mean_latency_ms == pytest.approx(350.0)


def test_aggregate_empty():
    with pytest.raises(MetricsError):
        aggregate([])


def test_relative_change():
    assert relative_change(75.0, 100.0) == pytest.approx(-0.25)
    assert relative_change(0.2, -0.1) == pytest.approx(3.0)
    assert relative_change(1.0, 0.0) is None
