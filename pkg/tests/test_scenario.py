import math

import numpy as np
import pytest

from mfpsim.resource_pool import ResourceQuanta
from mfpsim.scenario import (
    ChannelParams,
    ScenarioState,
    SensingGeometry,
    SensingProfile,
    channel_gain,
    global_label_distribution,
    link_budget,
    make_scenario,
    spectral_efficiency,
    status_attributes,
    step_mobility,
    targets_in_domain,
)


def single_client_state(client_xy, target_rows, area=500.0, n_classes=10):
    """Hand-built state: one client plus targets given as (x, y, class)."""
    targets = np.array([(x, y) for x, y, _ in target_rows], dtype=float).reshape(-1, 2)
    classes = np.array([c for _, _, c in target_rows], dtype=int)
    return ScenarioState(
        area_m=area,
        client_pos=np.array([client_xy], dtype=float),
        client_vel=np.zeros((1, 2)),
        target_pos=targets,
        target_vel=np.zeros((len(target_rows), 2)),
        target_class=classes,
        server_pos=np.array([area / 2, area / 2]),
        n_classes=n_classes,
        max_speed=30.0,
    )


def test_step_mobility_zero_velocity_keeps_positions():
    state = single_client_state((100, 100), [(200, 200, 1)])
    nxt = step_mobility(state, seed=7, dt=3.0)
    assert np.allclose(nxt.client_pos, state.client_pos)
    assert np.allclose(nxt.target_pos, state.target_pos)
    assert nxt.round_index == 1


def test_step_mobility_reflects_at_boundary():
    state = single_client_state((499, 250), [])
    state = ScenarioState(
        **{**state.__dict__, "client_vel": np.array([[30.0, 0.0]])}
    )
    nxt = step_mobility(state, seed=0, dt=1.0)
    assert nxt.client_pos[0, 0] == pytest.approx(471.0)
    assert 0 <= nxt.client_pos[0, 0] <= 500 and 0 <= nxt.client_pos[0, 1] <= 500


def test_step_mobility_deterministic():
    state = make_scenario(seed=11, n_clients=5, n_targets=9)
    a = step_mobility(state, seed=3, dt=2.0)
    b = step_mobility(state, seed=3, dt=2.0)
    assert np.array_equal(a.client_pos, b.client_pos)
    assert np.array_equal(a.client_vel, b.client_vel)
    assert np.array_equal(a.target_pos, b.target_pos)


def test_targets_in_domain_partition():
    geom = SensingGeometry(d_vs=50, d_ws=100)
    state = single_client_state(
        (0, 0), [(30, 0, 1), (70, 0, 2), (150, 0, 3)], area=500
    )
    vsd, annulus = targets_in_domain(state, 0, geom)
    assert list(vsd) == [0]
    assert list(annulus) == [1]


def test_channel_gain_reference_and_slope():
    params = ChannelParams(reference_loss_db=61.4, pathloss_exponent=2.0)
    g1 = channel_gain(1.0, params)
    assert 10 * math.log10(g1) == pytest.approx(-61.4)
    g2 = channel_gain(2.0, params)
    assert 10 * math.log10(g1 / g2) == pytest.approx(20 * math.log10(2), abs=1e-9)
    with pytest.raises(ValueError):
        channel_gain(0.0, params)


def test_link_budget_sensitivity_gate():
    params = ChannelParams()
    good = link_budget(10.0, tx_power_dbm=55.0, sensitivity_dbm=-115.0, params=params)
    assert good.usable
    # -115 dBm floor: a weak transmitter far away drops below it
    bad = link_budget(400.0, tx_power_dbm=-40.0, sensitivity_dbm=-115.0, params=params)
    assert not bad.usable
    assert spectral_efficiency(400.0, -40.0, -115.0, params, ResourceQuanta()) == 0.0


def test_status_attributes_visual_rate():
    # 100 targets on 500x500 m^2, disc radius 50, full efficiency, 20 fps
    geom = SensingGeometry(d_vs=50, d_ws=100)
    profile = SensingProfile(frame_rate_hz=20, visual_efficiency=1.0)
    rows = [(i % 500, (i * 7) % 500, i % 10) for i in range(100)]
    state = single_client_state((250, 250), rows)
    attrs = status_attributes(state, 0, geom, ChannelParams(), profile, ResourceQuanta())
    expected_a = (100 / 250_000) * math.pi * 50**2 * 1.0 * 20
    assert attrs.a == pytest.approx(expected_a)
    assert attrs.a == pytest.approx(62.83, abs=0.01)
    assert attrs.rho_tar * 250_000 == pytest.approx(100)


def test_status_attributes_no_targets():
    state = single_client_state((250, 250), [])
    attrs = status_attributes(
        state, 0, SensingGeometry(), ChannelParams(), SensingProfile(), ResourceQuanta()
    )
    assert attrs.a == 0 and attrs.b == 0 and attrs.rho_tar == 0
    assert attrs.label_dist is None


def test_status_attributes_degenerate_annulus():
    geom = SensingGeometry(d_vs=50, d_ws=50.0000001)
    rows = [(260, 250, 4)] * 5
    state = single_client_state((250, 250), rows)
    attrs = status_attributes(state, 0, geom, ChannelParams(), SensingProfile(), ResourceQuanta())
    assert attrs.b == pytest.approx(0.0, abs=1e-6)


def test_status_attributes_label_distribution_sums_to_one():
    rows = [(250 + i, 250, i % 3) for i in range(1, 40)]
    state = single_client_state((250, 250), rows)
    attrs = status_attributes(
        state, 0, SensingGeometry(), ChannelParams(), SensingProfile(), ResourceQuanta()
    )
    assert attrs.label_dist is not None
    assert attrs.label_dist.sum() == pytest.approx(1.0, abs=1e-12)


def test_sensing_mode_restricts_modalities():
    rows = [(260, 250, 0), (330, 250, 1)]  # one in-disc, one annulus
    state = single_client_state((250, 250), rows)
    geom, ch, q = SensingGeometry(), ChannelParams(), ResourceQuanta()
    msg = status_attributes(state, 0, geom, ch, SensingProfile(mode="msg"), q)
    vsg = status_attributes(state, 0, geom, ch, SensingProfile(mode="vsg"), q)
    wsg = status_attributes(state, 0, geom, ch, SensingProfile(mode="wsg"), q)
    assert vsg.b == 0 and vsg.a == msg.a
    assert wsg.a == 0 and wsg.b == msg.b
    assert vsg.label_dist[0] == 1.0 and wsg.label_dist[1] == 1.0


def test_global_label_distribution_union():
    rows = [(260, 250, 0), (330, 250, 1), (10, 10, 5)]
    state = single_client_state((250, 250), rows)
    dist = global_label_distribution(state, SensingGeometry())
    assert dist is not None
    assert dist[0] == pytest.approx(0.5) and dist[1] == pytest.approx(0.5)
    assert dist[5] == 0.0
