import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from klim.errors import ExplosionError, PreconditionError
from klim.integrate import (CHUNK_PATHS, PathBundle, RngPolicy, TimeGrid, simulate_exponential_homogenized,
                            simulate_ou_exact, simulate_power_homogenized, simulate_ske, wilson_interval)
from klim.invariant import LambdaF
from klim.model import DriftSpec, ModelSpec
from oracles import var_se, wilson

ZERO = DriftSpec(f_plus=0.0, f_minus=0.0, gamma=1.0)
LINEAR = DriftSpec.power(1.0, 1.0)


@given(st.floats(0.0, 100), st.floats(1e-3, 100), st.integers(1, 500), st.sampled_from(["uniform", "logarithmic"]))
def test_grid_nodes(t0, length, n, spacing):
    if spacing == "logarithmic":
        t0 = max(t0, 1e-3)
    g = TimeGrid(t0, t0 + length, n, spacing)
    nodes = g.nodes
    assert len(nodes) == n + 1
    assert nodes[0] == g.t_start and nodes[-1] == g.t_end
    assert np.all(np.diff(nodes) > 0)


def test_grid_errors():
    with pytest.raises(PreconditionError):
        TimeGrid.uniform(2.0, 1.0, 10)
    with pytest.raises(PreconditionError):
        TimeGrid.logarithmic(0.0, 1.0, 10)
    with pytest.raises(PreconditionError):
        TimeGrid.uniform(0.0, 1.0, 10).index_of(0.05)


def test_brownian_mean_and_variance():
    spec = ModelSpec(ZERO, 0.0, t0=1.0, v0=2.0)
    b = simulate_ske(spec, TimeGrid.uniform(1.0, 4.0, 300), 4000, RngPolicy(7))
    v = b.values_at(4.0)
    assert abs(v.mean() - 2.0) <= 3 * v.std() / math.sqrt(len(v))
    assert abs(v.var(ddof=1) - 3.0) <= 3 * var_se(v)
    assert np.all(b.v[:, 0] == 2.0) and np.all(b.x[:, 0] == 0.0)


def test_trapezoid_position_variance():
    # Var(int_{t0}^T (B_u - B_{t0}) du) = double integral of min(u - t0, r - t0) = (T - t0)^3 / 3
    spec = ModelSpec(ZERO, 0.0, t0=1.0, v0=1.0, x0=0.5)
    b = simulate_ske(spec, TimeGrid.uniform(1.0, 3.0, 400), 6000, RngPolicy(3))
    x = b.values_at(3.0, "x")
    assert abs(x.mean() - (0.5 + 2.0)) <= 3 * x.std() / math.sqrt(len(x))
    assert abs(x.var(ddof=1) - 8.0 / 3.0) <= 3 * var_se(x)


def test_ou_stationary_variance():
    spec = ModelSpec(LINEAR, 0.0, t0=1.0, v0=1.0)
    b = simulate_ske(spec, TimeGrid.uniform(1.0, 13.0, 1200), 4000, RngPolicy(11))
    v = b.values_at(13.0)
    # Euler on dV = dB - V dt has stationary variance 1/(2 - dt)
    assert abs(v.var(ddof=1) - 0.5) <= 3 * var_se(v) + 0.01 / 2


def test_tamed_euler_matches_exact_ou():
    grid = TimeGrid.uniform(0.0, 1.0, 1000)
    spec = ModelSpec(LINEAR, 0.0, t0=1.0, v0=1.0)
    tamed = simulate_ske(spec, TimeGrid.uniform(1.0, 2.0, 1000), 10_000, RngPolicy(1), scheme="tamed_euler",
                         record=[2.0]).values_at(2.0)
    exact = simulate_ou_exact(1.0, 1.0, grid, 10_000, RngPolicy(2), 1.0, record=[1.0]).values_at(1.0)
    m_true, v_true = math.exp(-1.0), (1 - math.exp(-2.0)) / 2
    for sample in (tamed, exact):
        assert abs(sample.mean() - m_true) <= 3 * math.sqrt(v_true / len(sample))
        assert abs(sample.var(ddof=1) - v_true) <= 3 * var_se(sample)


def test_ou_exact_examples():
    grid = TimeGrid.uniform(0.0, 12.0, 120)
    for theta, target in ((1.0, 0.5), (1.5, 1 / 3)):
        h = simulate_ou_exact(theta, 1.0, grid, 5000, RngPolicy(4), 0.0, record=[12.0]).values_at(12.0)
        assert abs(h.var(ddof=1) - target) <= 3 * var_se(h)
    dt = 0.1
    h = simulate_ou_exact(1.0, 1.0, TimeGrid.uniform(0.0, dt, 1), 20_000, RngPolicy(5), 1.0).values_at(dt)
    assert abs(h.mean() - math.exp(-dt)) <= 4 * h.std() / math.sqrt(len(h))
    with pytest.raises(PreconditionError):
        simulate_ou_exact(0.0, 1.0, grid, 10, RngPolicy(0), 0.0)


def test_exponential_homogenized_stationary_variances():
    s_grid = TimeGrid.uniform(0.0, 3.0, 300)
    zero = ModelSpec(ZERO, 1.0)
    rng = RngPolicy(6)
    h0 = np.random.default_rng(0).standard_normal(4000)
    h = simulate_exponential_homogenized(zero, s_grid, 4000, rng, h0, record=[3.0]).values_at(3.0)
    assert abs(h.var(ddof=1) - 1.0) <= 3 * var_se(h) + 0.01
    lin = ModelSpec(LINEAR, 1.0)
    h0 = LambdaF(LINEAR).sample(4000, rng)
    b = simulate_exponential_homogenized(lin, s_grid, 4000, rng, h0, record=[1.0, 3.0])
    for s in (1.0, 3.0):
        h = b.values_at(s)
        assert abs(h.var(ddof=1) - 1 / 3) <= 3 * var_se(h) + 0.01 / 3
    with pytest.raises(PreconditionError):
        simulate_exponential_homogenized(ModelSpec(LINEAR, 2.0), s_grid, 10, rng, 0.0)


@pytest.mark.parametrize("rho,target", [(1.0, 0.5), (2.0, 0.25)])
def test_power_homogenized_stationary_variance(rho, target):
    b = simulate_power_homogenized(DriftSpec.power(rho, 1.0), TimeGrid.uniform(0.0, 8.0, 800), 4000,
                                   RngPolicy(8), 0.0, record=[8.0])
    h = b.values_at(8.0)
    assert abs(h.var(ddof=1) - target) <= 3 * var_se(h) + 0.01 * target


def test_power_homogenized_needs_positive_rho():
    with pytest.raises(PreconditionError):
        simulate_power_homogenized(ZERO, TimeGrid.uniform(0.0, 1.0, 10), 10, RngPolicy(0), 0.0)


def test_explosion_detected_for_repulsive_cubic():
    spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=-1.0, gamma=3.0), 0.0, v0=5.0)
    b = simulate_ske(spec, TimeGrid.uniform(1.0, 2.0, 2000), 200, RngPolicy(0), scheme="euler",
                     allow_all_exploded=True)
    assert b.exploded.any()
    i = int(np.flatnonzero(b.exploded)[0])
    k = b.explosion_index[i]
    assert abs(b.v[i, k]) > b.threshold
    assert np.all(np.isnan(b.v[i, k + 1:]))


def test_all_exploded_raises():
    spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=1.0, gamma=3.0), 0.0, v0=50.0)
    with pytest.raises(ExplosionError) as exc:
        simulate_ske(spec, TimeGrid.uniform(1.0, 2.0, 1000), 50, RngPolicy(0), scheme="euler")
    assert exc.value.fraction == 1.0


@given(st.floats(10.0, 1e4), st.floats(10.0, 1e4))
def test_explosion_monotone_in_threshold(a, b):
    lo, hi = sorted((a, b))
    spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=0.0, gamma=2.0), 0.0, v0=1.0)
    grid = TimeGrid.uniform(1.0, 1.5, 200)
    kw = dict(scheme="euler", allow_all_exploded=True, record=[1.5])
    n_lo = simulate_ske(spec, grid, 64, RngPolicy(9), threshold=lo, **kw).exploded.sum()
    n_hi = simulate_ske(spec, grid, 64, RngPolicy(9), threshold=hi, **kw).exploded.sum()
    assert n_hi <= n_lo


def test_determinism_across_threads():
    spec = ModelSpec(LINEAR, 0.5)
    grid = TimeGrid.uniform(1.0, 2.0, 40)
    n = 2 * CHUNK_PATHS + 17
    a = simulate_ske(spec, grid, n, RngPolicy(123), threads=1)
    b = simulate_ske(spec, grid, n, RngPolicy(123), threads=4)
    assert a.to_bytes() == b.to_bytes()
    c = simulate_ske(spec, grid, n, RngPolicy(124), threads=1)
    assert a.to_bytes() != c.to_bytes()


def test_path_depends_only_on_index():
    spec = ModelSpec(LINEAR, 0.5)
    grid = TimeGrid.uniform(1.0, 2.0, 40)
    small = simulate_ske(spec, grid, 5, RngPolicy(1))
    big = simulate_ske(spec, grid, CHUNK_PATHS + 5, RngPolicy(1))
    np.testing.assert_array_equal(small.v, big.v[:5])


def test_csv_and_binary_round_trip():
    spec = ModelSpec(DriftSpec(f_plus=-1.0, f_minus=0.0, gamma=3.0), 0.0, v0=5.0)
    b = simulate_ske(spec, TimeGrid.uniform(1.0, 1.2, 20), 6, RngPolicy(2), scheme="euler",
                     allow_all_exploded=True)
    text = b.to_csv()
    assert text.splitlines()[0] == "path_id,t,v,x,exploded" and "\r" not in text
    back = PathBundle.from_csv(text)
    np.testing.assert_array_equal(back.t, b.t)
    np.testing.assert_array_equal(back.v, b.v)
    np.testing.assert_array_equal(back.exploded, b.exploded)
    raw = b.to_bytes()
    assert raw[:4] == b"KLIM"
    back = PathBundle.from_bytes(raw)
    np.testing.assert_array_equal(back.x, b.x)
    np.testing.assert_array_equal(back.explosion_index, b.explosion_index)
    assert back.threshold == b.threshold


def test_ske_grid_must_start_at_t0():
    with pytest.raises(PreconditionError):
        simulate_ske(ModelSpec(LINEAR, 1.0, t0=1.0), TimeGrid.uniform(2.0, 3.0, 10), 5, RngPolicy(0))


@pytest.mark.parametrize("k,n", [(0, 100), (3, 100), (50, 100), (10_000, 10_000)])
def test_wilson_interval(k, n):
    lo, hi = wilson_interval(k, n)
    ref = wilson(k, n)
    assert lo == pytest.approx(ref[0], abs=1e-12) and hi == pytest.approx(ref[1], abs=1e-12)
