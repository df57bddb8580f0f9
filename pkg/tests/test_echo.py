import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingecho import (
    ChainConfig,
    DecoherenceSeries,
    DomainError,
    InvalidGridError,
    PhysicalityError,
    TimeGrid,
    decoherence_factor,
    echo_series,
    equatorial_state,
    exact_qubit_state,
    loschmidt_echo,
    mode_spectrum,
    nyquist_dt,
    pure_state,
    purity,
)
from isingecho.echo import bloch_vector, is_physical
from isingecho.measures import trace_distance
from isingecho.oracle import oracle_overlap

configs = st.builds(
    ChainConfig,
    J=st.floats(0.5, 2.0),
    lam=st.floats(0.0, 2.0),
    delta=st.floats(-0.5, 0.5),
    n_spins=st.sampled_from([4, 6, 10, 30, 100]),
)


def _series(cfg, t_end=20.0, frac=0.5):
    dt = frac * nyquist_dt(mode_spectrum(cfg))
    return echo_series(cfg, TimeGrid.span(t_end, dt))


def test_grid_construction():
    g = TimeGrid.span(1.0, 0.1)
    assert g.n_points == 11 and g.end == pytest.approx(1.0)
    np.testing.assert_allclose(g.midpoints(), np.arange(10) * 0.1 + 0.05)
    for bad in [dict(t0=-1, dt=0.1, n_points=3), dict(t0=0, dt=0, n_points=3), dict(t0=0, dt=0.1, n_points=1)]:
        with pytest.raises(InvalidGridError):
            TimeGrid(**bad)
    with pytest.raises(InvalidGridError):
        TimeGrid.span(0.0, 0.1)


def test_echo_trivial_values():
    s = mode_spectrum(ChainConfig(1.0, 0.5, 0.1, 12))
    assert loschmidt_echo(s, 0.0) == 1.0
    assert decoherence_factor(s, 0.0) == 1.0
    s0 = mode_spectrum(ChainConfig(1.0, 0.5, 0.0, 12))
    t = np.linspace(0, 50, 101)
    np.testing.assert_array_equal(loschmidt_echo(s0, t), 1.0)
    np.testing.assert_allclose(decoherence_factor(s0, t), 1.0, atol=1e-12)
    with pytest.raises(DomainError):
        loschmidt_echo(s, -1.0)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_echo_matches_oracle_points(t):
    s = mode_spectrum(ChainConfig(1.0, 0.5, 0.1, 8))
    ref = oracle_overlap(8, 0.5, 0.1, [t])[0]
    assert loschmidt_echo(s, t) == pytest.approx(abs(ref) ** 2, abs=1e-8)
    nu = decoherence_factor(s, t)
    assert abs(nu.real - ref.real) < 1e-8 and abs(nu.imag - ref.imag) < 1e-8


@pytest.mark.parametrize("n", [4, 6, 8, 10])
def test_random_configs_match_oracle(n):
    rng = np.random.default_rng(n)
    t = np.linspace(0, 20, 401)
    for lam, delta in zip(rng.uniform(0.2, 1.5, 3), rng.uniform(0.01, 0.3, 3)):
        s = mode_spectrum(ChainConfig(1.0, lam, delta, n))
        ref = oracle_overlap(n, lam, delta, t)
        assert np.max(np.abs(loschmidt_echo(s, t) - np.abs(ref) ** 2)) < 1e-8
        assert np.max(np.abs(decoherence_factor(s, t) - ref)) < 1e-8


@given(cfg=configs)
@settings(max_examples=40, deadline=None)
def test_series_invariants(cfg):
    ser = _series(cfg)
    assert ser.L[0] == 1.0 and ser.nu[0] == 1.0 and ser.phi[0] == 0.0
    assert np.all((ser.L >= 0) & (ser.L <= 1))
    np.testing.assert_allclose(np.abs(ser.nu) ** 2, ser.L, atol=1e-12)
    np.testing.assert_allclose(np.exp(1j * ser.phi) * np.abs(ser.nu), ser.nu, atol=1e-9)
    # the phase may legitimately turn faster than pi per step when N*delta is
    # large; whenever the grid resolves the phase velocity there is no jump
    if ser.grid.dt * np.max(np.abs(ser.dlognu.imag)) < np.pi / 2:
        assert np.max(np.abs(np.diff(ser.phi))) < np.pi


def test_phase_is_continuous_unwrap_of_nu():
    ser = _series(ChainConfig(1.0, 0.3, 0.2, 200), t_end=40.0)
    # phi is a continuous lift of arg(nu)
    np.testing.assert_allclose(np.exp(1j * ser.phi), ser.nu / np.abs(ser.nu), atol=1e-9)
    np.testing.assert_allclose(ser.phi, np.unwrap(np.angle(ser.nu)), atol=1e-9)


def test_log_derivative_matches_finite_differences():
    ser = _series(ChainConfig(1.0, 0.8, 0.05, 100), frac=0.05)
    logn = 0.5 * np.log(ser.L) + 1j * ser.phi
    fd = np.gradient(logn, ser.grid.dt)[1:-1]
    np.testing.assert_allclose(ser.dlognu[1:-1], fd, atol=1e-5)


def test_coarse_grid_rejected():
    cfg = ChainConfig(1.0, 0.5, 0.1, 20)
    bound = nyquist_dt(mode_spectrum(cfg))
    with pytest.raises(InvalidGridError, match="resolution bound"):
        echo_series(cfg, TimeGrid(0.0, 1.01 * bound, 10))


def test_large_ring_does_not_underflow():
    # deep decay: the echo must stay a finite non-negative number, not NaN
    cfg = ChainConfig.from_lambda_star(1.0, 0.3, 4000)
    s = mode_spectrum(cfg)
    L = loschmidt_echo(s, np.linspace(0, 200, 41))
    assert np.all(np.isfinite(L)) and np.all(L >= 0)
    assert 0 < L[-1] < 1e-50


def test_short_time_quadratic_decay():
    cfg = ChainConfig.from_lambda_star(0.7, 0.05, 200)
    s = mode_spectrum(cfg)
    t = nyquist_dt(s) * np.arange(1, 11) * 1e-2
    y = 1.0 - loschmidt_echo(s, t)
    slope = np.polyfit(np.log(t), np.log(y), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_purity():
    assert purity(1.0) == 1.0
    assert purity(0.0) == 0.5
    assert purity(0.64) == pytest.approx(0.82)
    with pytest.raises(DomainError):
        purity(1.5)
    with pytest.raises(DomainError):
        purity(-0.1)


def test_exact_state_examples():
    g = pure_state(1.0, 0.0)
    np.testing.assert_allclose(exact_qubit_state(g, 0.3 + 0.2j), g)
    eq = equatorial_state()
    np.testing.assert_allclose(bloch_vector(exact_qubit_state(eq, 0.0)), 0.0, atol=1e-15)
    rho = exact_qubit_state(eq, 0.8 * np.exp(0.3j))
    assert rho[1, 0] == pytest.approx(0.4 * np.exp(0.3j))
    # antipodal partner gives distance |nu| = sqrt(L)
    other = exact_qubit_state(equatorial_state(np.pi), 0.8 * np.exp(0.3j))
    assert trace_distance(rho, other) == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(PhysicalityError):
        exact_qubit_state(eq, 1.0 + 1e-9)


@given(
    cg=st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
    ce=st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False),
    r=st.floats(0, 1),
    phase=st.floats(-np.pi, np.pi),
)
def test_exact_state_stays_physical(cg, ce, r, phase):
    if abs(cg) + abs(ce) < 1e-6:
        return
    rho0 = pure_state(cg, ce)
    rho = exact_qubit_state(rho0, r * np.exp(1j * phase))
    assert is_physical(rho, atol=1e-10)
    np.testing.assert_allclose(np.diag(rho), np.diag(rho0), atol=1e-15)


def test_from_echo_shape_check():
    g = TimeGrid(0.0, 0.1, 4)
    with pytest.raises(InvalidGridError):
        DecoherenceSeries(grid=g, nu=np.ones(3, complex), L=np.ones(3), phi=np.zeros(3))
    s = DecoherenceSeries.from_echo(g, [1, 0.5, 0.25, 0.5])
    np.testing.assert_allclose(np.abs(s.nu) ** 2, s.L)
