import pytest
from hypothesis import given
from hypothesis import strategies as st

from numabias.adaptive import BiasController, bias_enabled, shared_bias
from numabias.topology import ConfigError


def feed_window(ctrl, remote, total):
    for i in range(total):
        ctrl.record_miss(i < remote)


@pytest.mark.parametrize(
    "start,remote,expected",
    [
        (False, 6, True),   # 0.6 exceeds the high watermark
        (True, 3, True),    # 0.3 sits between the watermarks
        (True, 0, False),   # 0.0 drops below the low watermark
        (False, 3, False),  # 0.3 does not exceed the high watermark
    ],
)
def test_window_transitions(start, remote, expected):
    ctrl = BiasController(window=10, state=start)
    feed_window(ctrl, remote, 10)
    assert bias_enabled(ctrl) is expected
    assert ctrl.remote_in_window == ctrl.total_in_window == 0


def test_fresh_controller_is_off():
    ctrl = BiasController()
    assert not ctrl.bias_enabled
    assert (ctrl.window, ctrl.high_wm, ctrl.low_wm) == (1000, 0.5, 0.1)


def test_state_only_changes_at_window_boundary():
    ctrl = BiasController(window=10)
    for _ in range(9):
        assert not ctrl.record_miss(True)
        assert not ctrl.bias_enabled
    assert ctrl.record_miss(True)
    assert ctrl.bias_enabled


def test_exact_watermarks_do_not_switch():
    ctrl = BiasController(window=10)
    feed_window(ctrl, 5, 10)  # exactly 0.5
    assert not ctrl.bias_enabled
    ctrl = BiasController(window=10, state=True)
    feed_window(ctrl, 1, 10)  # exactly 0.1
    assert ctrl.bias_enabled


def test_shared_bias_is_or():
    off, on = BiasController(), BiasController(state=True)
    assert not shared_bias([off, off, off, off])
    assert shared_bias([off, on, off, off])
    assert shared_bias([on, on])
    with pytest.raises(ConfigError):
        shared_bias([])


@pytest.mark.parametrize("kw", [dict(window=0), dict(low_wm=0.5, high_wm=0.5), dict(high_wm=1.5), dict(low_wm=-0.1)])
def test_invalid_parameters(kw):
    with pytest.raises(ConfigError):
        BiasController(**kw)


def reference_state(initial, fractions, low=0.1, high=0.5):
    state = initial
    for f in fractions:
        if f > high:
            state = True
        elif f < low:
            state = False
    return state


windows = st.lists(st.integers(0, 10), max_size=30)


@given(initial=st.booleans(), remotes=windows)
def test_state_is_function_of_window_fractions(initial, remotes):
    ctrl = BiasController(window=10, state=initial)
    for r in remotes:
        feed_window(ctrl, r, 10)
    assert ctrl.state == reference_state(initial, [r / 10 for r in remotes])


@given(initial=st.booleans(), remotes=st.lists(st.integers(1, 5), max_size=30))
def test_hysteresis_band_is_sticky(initial, remotes):
    # every window fraction lies in [0.1, 0.5], so the state never moves
    ctrl = BiasController(window=10, state=initial)
    for r in remotes:
        feed_window(ctrl, r, 10)
        assert ctrl.state == initial
