"""TradeSchedule container semantics."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from execsignal.schedule import TradeSchedule


def _simple():
    return TradeSchedule(x0=4.0, atoms=((0.0, -1.0), (2.0, -0.5)),
                         grid=np.array([0.0, 1.0, 2.0]),
                         flow=np.array([-1.5, -1.0]))


def test_liquidation_enforced():
    with pytest.raises(ValueError, match="liquidate"):
        TradeSchedule(x0=1.0, atoms=(), grid=np.array([0.0, 1.0]),
                      flow=np.array([-0.5]))


def test_grid_and_flow_validation():
    with pytest.raises(ValueError):
        TradeSchedule(x0=0.0, atoms=(), grid=np.array([0.0, 1.0, 0.5]),
                      flow=np.zeros(2))
    with pytest.raises(ValueError):
        TradeSchedule(x0=0.0, atoms=(), grid=np.array([0.0, 1.0]),
                      flow=np.zeros(2))
    with pytest.raises(ValueError):
        TradeSchedule(x0=0.0, atoms=((np.nan, 1.0),), grid=np.array([0.0, 1.0]),
                      flow=np.array([0.0]))


def test_totals():
    sch = _simple()
    assert sch.total_traded() == pytest.approx(-4.0)
    assert sch.total_variation() == pytest.approx(4.0)
    assert sch.end_time() == 2.0


def test_inventory_left_continuous():
    sch = _simple()
    # block at 0 not yet executed at t = 0
    assert sch.inventory(0.0)[0] == pytest.approx(4.0)
    assert sch.inventory(1e-9)[0] == pytest.approx(3.0, abs=1e-7)
    # before/at/after the t = 2 block
    assert sch.inventory(2.0 - 1e-9)[0] == pytest.approx(0.5, abs=1e-7)
    assert sch.inventory(2.0)[0] == pytest.approx(0.5)
    assert sch.inventory(2.5)[0] == pytest.approx(0.0)
    mid = sch.inventory(0.5)[0]
    assert mid == pytest.approx(4.0 - 1.0 - 0.75)


def test_trade_points_merges_coincident():
    sch = TradeSchedule(x0=1.0, atoms=((0.5, -0.25), (1.0, -0.25)),
                        grid=np.array([0.0, 1.0]), flow=np.array([-0.5]))
    times, sizes = sch.trade_points()
    # the flow bin at the 0.5 midpoint merges with the atom there
    assert np.array_equal(times, [0.5, 1.0])
    assert np.allclose(sizes, [-0.75, -0.25])
    assert sizes.sum() == pytest.approx(-1.0)


@given(st.integers(min_value=1, max_value=8),
       st.floats(min_value=0.0, max_value=5.0),
       st.integers(min_value=0, max_value=2 ** 32 - 1))
@settings(max_examples=60, deadline=None)
def test_random_schedules_conserve_inventory(cells, x0, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    grid = np.concatenate(([0.0], np.cumsum(rng.uniform(0.1, 1.0, cells))))
    flow = rng.normal(size=cells)
    net = x0 + float(np.sum(flow * np.diff(grid)))
    atoms = ((float(grid[-1]), -net),)
    sch = TradeSchedule(x0=x0, atoms=atoms, grid=grid, flow=flow)
    assert sch.inventory(0.0)[0] == x0
    assert abs(sch.inventory(grid[-1] + 1.0)[0]) < 1e-9 * max(1.0, x0)
    times, sizes = sch.trade_points()
    assert np.all(np.diff(times) > 0)
    assert float(sizes.sum()) == pytest.approx(-x0, abs=1e-9)
