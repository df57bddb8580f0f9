import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingecho import (
    ChainConfig,
    DecoherenceSeries,
    DomainError,
    TimeGrid,
    blp_measure,
    echo_series,
    equatorial_state,
    exact_qubit_state,
    fisher_flow,
    mode_spectrum,
    nyquist_dt,
    pure_state,
    rate_series,
    recurrence_time,
    rhp_entanglement_measure,
    trace_distance,
)
from isingecho.measures import (
    RecurrenceWarning,
    default_truncation,
    pair_trace_distance_measure,
    squared_distance_flow,
)

DIP = [1.0, 0.7, 0.4, 0.25, 0.4, 0.6, 0.81, 0.6, 0.4]


def _series(cfg, t_end=None, frac=0.5):
    s = mode_spectrum(cfg)
    t_end = default_truncation(cfg) if t_end is None else t_end
    return s, echo_series(cfg, TimeGrid.span(t_end, frac * nyquist_dt(s)), s)


def _synthetic(L, dt=0.1):
    return DecoherenceSeries.from_echo(TimeGrid(0.0, dt, len(L)), L)


def test_trace_distance_examples():
    a = pure_state(0.6, 0.8)
    assert trace_distance(a, a) == 0.0
    assert trace_distance(pure_state(1, 0), pure_state(0, 1)) == pytest.approx(1.0)
    nu = np.sqrt(0.49)
    d = trace_distance(exact_qubit_state(equatorial_state(0.0), nu), exact_qubit_state(equatorial_state(np.pi), nu))
    assert d == pytest.approx(0.7, abs=1e-12)


def test_synthetic_dip():
    ser = _synthetic(DIP)
    report = blp_measure(ser)
    assert report.value == pytest.approx(0.4, abs=1e-15)
    assert report.n_intervals == 1
    iv = report.intervals[0]
    assert (iv.a, iv.b, iv.L_a, iv.L_b) == pytest.approx((0.3, 0.6, 0.25, 0.81))
    assert rhp_entanglement_measure(ser) == pytest.approx(0.4, abs=1e-15)


def test_monotone_echo_gives_zero():
    ser = _synthetic(np.exp(-np.linspace(0, 3, 40)))
    report = blp_measure(ser)
    assert report.value == 0 and report.intervals == []
    assert rhp_entanglement_measure(ser) == 0


def test_plateaus_are_not_extrema():
    L = [1.0, 0.5, 0.5, 0.5, 0.5, 0.3, 0.3, 0.2]
    assert blp_measure(_synthetic(L)).value == 0


def test_rise_into_window_end_counts():
    ser = _synthetic([1.0, 0.5, 0.25, 0.5, 0.64])
    assert blp_measure(ser).value == pytest.approx(0.3)
    assert rhp_entanglement_measure(ser) == pytest.approx(0.3)


def test_window_errors_and_guard():
    cfg = ChainConfig.from_lambda_star(0.5, 0.01, 40)
    _, ser = _series(cfg, t_end=2 * recurrence_time(cfg))
    with pytest.raises(DomainError):
        blp_measure(ser, t_max=ser.grid.end + 1.0)
    with pytest.raises(DomainError):
        rhp_entanglement_measure(ser, t_max=ser.grid.end + 1.0)
    with pytest.warns(RecurrenceWarning):
        report = blp_measure(ser, t_max=ser.grid.end)
    assert report.beyond_recurrence
    report = blp_measure(ser)
    assert report.t_max == pytest.approx(default_truncation(cfg))
    assert report.recurrence_time == pytest.approx(recurrence_time(cfg))
    assert not report.beyond_recurrence


def test_recurrence_time():
    for n in (100, 1000, 4000):
        assert recurrence_time(ChainConfig.from_lambda_star(1.0, 0.01, n)) == pytest.approx(n / 4, rel=1e-3)
    a = recurrence_time(ChainConfig.from_lambda_star(0.5, 0.01, 400))
    b = recurrence_time(ChainConfig.from_lambda_star(0.5, 0.01, 800))
    assert b / a == pytest.approx(2.0, rel=1e-3)


configs = st.builds(
    ChainConfig.from_lambda_star,
    lambda_star=st.floats(0.3, 1.7),
    delta=st.floats(0.005, 0.2),
    n_spins=st.sampled_from([20, 60, 200]),
)


@given(cfg=configs)
@settings(max_examples=25, deadline=None)
def test_dual_path_and_flow_identities(cfg):
    s, ser = _series(cfg)
    report = blp_measure(ser)
    assert abs(report.value - rhp_entanglement_measure(ser)) < 1e-12
    assert (report.value == 0) == (report.n_intervals == 0)
    assert all(iv.L_b > iv.L_a for iv in report.intervals)
    bounds = [x for iv in report.intervals for x in (iv.a, iv.b)]
    assert bounds == sorted(bounds)
    rates = rate_series(ser, s)
    fs = fisher_flow(ser, rates)
    ok = ~rates.singular
    np.testing.assert_allclose(squared_distance_flow(ser)[ok], fs.flow[ok], atol=1e-10)
    assert fs.fisher[0] == 1 and np.all((fs.fisher >= 0) & (fs.fisher <= 1))
    nz = rates.gamma != 0
    assert np.all(np.sign(fs.flow[nz]) == -np.sign(rates.gamma[nz]))


@given(cfg=configs)
@settings(max_examples=10, deadline=None)
def test_antipodal_distance_is_root_echo(cfg):
    _, ser = _series(cfg, t_end=30.0)
    phase = 0.37
    d = trace_distance(
        exact_qubit_state(equatorial_state(phase), ser.nu),
        exact_qubit_state(equatorial_state(phase + np.pi), ser.nu),
    )
    np.testing.assert_allclose(d, np.sqrt(ser.L), atol=1e-12)


def test_random_pairs_never_beat_optimal_pair():
    cfg = ChainConfig.from_lambda_star(0.5, 0.05, 100)
    _, ser = _series(cfg)
    best = blp_measure(ser).value
    rng = np.random.default_rng(7)
    for _ in range(40):
        a, b = (pure_state(*(rng.normal(size=2) + 1j * rng.normal(size=2))) for _ in range(2))
        assert pair_trace_distance_measure(ser, a, b) <= best + 1e-9
    opt = pair_trace_distance_measure(ser, equatorial_state(0), equatorial_state(np.pi))
    assert opt == pytest.approx(best, abs=1e-4)


def test_fisher_trivial_and_mismatch():
    cfg = ChainConfig(1.0, 0.5, 0.0, 20)
    s, ser = _series(cfg, t_end=10.0)
    fs = fisher_flow(ser, rate_series(ser, s))
    np.testing.assert_array_equal(fs.flow, 0.0)
    np.testing.assert_array_equal(fs.fisher, 1.0)
    np.testing.assert_allclose(squared_distance_flow(ser), 0.0, atol=1e-14)
    _, other = _series(cfg, t_end=12.0)
    with pytest.raises(DomainError):
        fisher_flow(other, rate_series(ser, s))


def test_synthetic_exponential_flow():
    g = TimeGrid(0.0, 1e-3, 2001)
    ser = DecoherenceSeries.from_echo(g, np.exp(-g.times))
    np.testing.assert_allclose(squared_distance_flow(ser), -np.exp(-g.times), atol=1e-6)


@pytest.mark.parametrize("ls", [0.5, 0.8, 1.2, 1.5])
def test_grid_refinement_stability(ls):
    cfg = ChainConfig.from_lambda_star(ls, 0.01, 400)
    t_max = default_truncation(cfg)
    _, coarse = _series(cfg, frac=0.5)
    _, fine = _series(cfg, frac=0.25)
    assert abs(blp_measure(coarse, t_max).value - blp_measure(fine, t_max).value) < 1e-6


def test_monotone_zero_equivalence():
    for ls in (0.6, 1.0, 1.4):
        cfg = ChainConfig.from_lambda_star(ls, 0.01, 200)
        s, ser = _series(cfg)
        report = blp_measure(ser)
        n = report.n_grid_points
        rising = np.any(np.diff(np.sqrt(ser.L[:n])) > 1e-14)
        negative = rate_series(ser, s).gamma[:n].min() < 0
        assert (report.value > 0) == rising == negative
