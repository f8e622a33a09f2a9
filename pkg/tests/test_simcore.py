import math
import random

import pytest

from scenarioforge import compgen, ir, netgen, simcore

from oracles import quads_overlap_oracle


def straight_net(length=2000.0, fwd=1, speed=13.89):
    road = ir.RoadDescription(
        layout="Straight", segments=(ir.RoadSegment(length, fwd, 0, speed),))
    return netgen.build_network_blueprint(road)


def place(net, edge_id, lane_index, s, agent_id, kind="Car", role="BV",
          speed=0.0):
    edge = net.edge(edge_id)
    line = netgen.lane_centerline(net, edge, lane_index)
    x, y, heading = netgen.point_along(line, s)
    length, width = compgen.VEHICLE_DIMS[kind]
    return compgen.AgentState(
        id=agent_id, kind=kind, role=role, edge_id=edge_id,
        lane_index=lane_index, s=s, speed=speed, heading=heading,
        x=x, y=y, length=length, width=width)


def make_bundle(net, agents, objects=()):
    desc = ir.ScenarioDescription(
        road=ir.RoadDescription(
            layout="Straight", segments=(ir.RoadSegment(100.0, 1, 0, 13.89),)),
        objects=(), agents=(), weather=ir.WeatherDescription())
    return ir.ScenarioBundle(description=desc, network=net,
                             agents=tuple(agents), objects=tuple(objects),
                             weather=desc.weather)


# ---------------------------------------------------------------------------
# IDM law

def test_idm_free_road_from_standstill():
    p = simcore.BehaviorParams()
    assert simcore.idm_accel(p, 0.0, math.inf, 0.0) == pytest.approx(
        p.max_accel)


def test_idm_at_desired_speed_free_road():
    p = simcore.BehaviorParams()
    assert simcore.idm_accel(p, p.desired_speed, math.inf, 0.0) == \
        pytest.approx(0.0)


def test_idm_standstill_equilibrium_at_min_gap():
    p = simcore.BehaviorParams()
    # stationary at exactly the jam gap: no net acceleration
    assert simcore.idm_accel(p, 0.0, p.min_gap, 0.0) == pytest.approx(0.0)
    # inside the jam gap: pushed backwards
    assert simcore.idm_accel(p, 0.0, p.min_gap / 2.0, 0.0) < 0.0


def test_idm_interaction_term_scales_inverse_square():
    p = simcore.BehaviorParams()
    v = 10.0
    s_star = p.min_gap + v * p.time_headway  # zero closing speed
    free = simcore.idm_accel(p, v, math.inf, 0.0)
    at_10x = simcore.idm_accel(p, v, 10.0 * s_star, 0.0)
    # (s*/gap)^2 = 1/100 exactly
    assert free - at_10x == pytest.approx(p.max_accel / 100.0)
    at_1x = simcore.idm_accel(p, v, s_star, 0.0)
    assert free - at_1x == pytest.approx(p.max_accel)


def test_idm_hand_computed_value():
    p = simcore.BehaviorParams(desired_speed=15.0, max_accel=1.0,
                               comfortable_decel=2.0, min_gap=2.0,
                               time_headway=1.0)
    v, gap, dv = 10.0, 30.0, 5.0
    s_star = 2.0 + 10.0 * 1.0 + 10.0 * 5.0 / (2.0 * math.sqrt(1.0 * 2.0))
    expected = 1.0 * (1.0 - (10.0 / 15.0) ** 4 - (s_star / 30.0) ** 2)
    assert simcore.idm_accel(p, v, gap, dv) == pytest.approx(expected)
    assert expected < 0  # closing fast: braking


def test_idm_approach_is_monotone_in_gap():
    p = simcore.BehaviorParams()
    gaps = [5.0, 10.0, 20.0, 50.0, 200.0]
    accels = [simcore.idm_accel(p, 10.0, g, 2.0) for g in gaps]
    assert accels == sorted(accels)


def test_behavior_params_validation():
    with pytest.raises(ValueError):
        simcore.BehaviorParams(max_accel=0.0)
    with pytest.raises(ValueError):
        simcore.BehaviorParams(accel_exponent=0.5)


# ---------------------------------------------------------------------------
# OBB collision

def test_obb_disjoint_and_overlapping():
    a = simcore.obb_corners(0, 0, 0, 4.5, 1.8)
    b = simcore.obb_corners(10, 0, 0, 4.5, 1.8)
    assert simcore.obb_overlap(a, b) == 0.0
    c = simcore.obb_corners(4.0, 0, 0, 4.5, 1.8)
    # 4.5-long cars 4 m apart overlap by 0.5 m along the travel axis
    assert simcore.obb_overlap(a, c) == pytest.approx(0.5)


def test_obb_rotated_overlap():
    a = simcore.obb_corners(0, 0, 0, 4.0, 2.0)
    b = simcore.obb_corners(0, 0, 45, 4.0, 2.0)
    assert simcore.obb_overlap(a, b) > 0


def test_obb_matches_geometric_oracle():
    rng = random.Random(17)
    agree = 0
    for _ in range(500):
        qa = simcore.obb_corners(rng.uniform(-10, 10), rng.uniform(-10, 10),
                                 rng.uniform(-180, 180), rng.uniform(1, 8),
                                 rng.uniform(0.5, 3))
        qb = simcore.obb_corners(rng.uniform(-10, 10), rng.uniform(-10, 10),
                                 rng.uniform(-180, 180), rng.uniform(1, 8),
                                 rng.uniform(0.5, 3))
        sat = simcore.obb_overlap(qa, qb) > 0
        assert sat == quads_overlap_oracle(qa, qb)
        agree += 1
    assert agree == 500


def test_detect_collisions_reports_pair():
    net = straight_net(length=100.0)
    a = place(net, "e0f", 0, 10.0, "a")
    b = place(net, "e0f", 0, 12.0, "b")  # 2 m apart, 4.5 m long: overlap
    events = simcore.detect_collisions([a, b], step=7)
    assert len(events) == 1
    assert events[0].step == 7
    assert {events[0].agent_a, events[0].agent_b} == {"a", "b"}
    assert events[0].penetration > 0


# ---------------------------------------------------------------------------
# AV policy

def _obs(**kw):
    base = dict(speed=10.0, desired_speed=13.89, gap=math.inf,
                leader_speed=0.0, max_accel=1.5, comfortable_decel=2.0,
                min_gap=2.0, lane_options=[])
    base.update(kw)
    return base


def test_av_policy_free_road_accelerates():
    accel, lc = simcore.av_policy(_obs())
    assert accel > 0
    assert lc == 0


def test_av_policy_brakes_below_ttc_threshold():
    # closing at 10 m/s with 20 m gap: TTC 2 s < 3 s threshold
    accel, _ = simcore.av_policy(_obs(gap=20.0, leader_speed=0.0))
    assert accel == pytest.approx(-2.0)


def test_av_policy_hint_moves_braking_onset_earlier():
    # TTC = 4 s: beyond the default threshold, inside the hinted one
    obs = _obs(gap=40.0, leader_speed=0.0)
    plain, _ = simcore.av_policy(obs)
    hinted, _ = simcore.av_policy(obs, hints=("DecelerateEarlier",))
    assert hinted == pytest.approx(-2.0)
    assert hinted < plain


def test_av_policy_safer_lane_hint_eases_lane_change():
    option = {"direction": 1, "lane_index": 1, "gap": 100.0,
              "leader_speed": 10.0, "rear_gap": 50.0, "follower": None}
    obs = _obs(gap=20.0, leader_speed=10.0, lane_options=[option])
    _, lc_plain = simcore.av_policy(obs)
    _, lc_hinted = simcore.av_policy(obs, hints=("SaferLane",))
    assert lc_plain == 0
    assert lc_hinted == 1


def test_av_policy_never_exceeds_limits():
    rng = random.Random(3)
    for _ in range(200):
        obs = _obs(speed=rng.uniform(0, 30),
                   gap=rng.choice([math.inf, rng.uniform(0.5, 200)]),
                   leader_speed=rng.uniform(0, 30))
        accel, lc = simcore.av_policy(obs)
        assert -2.0 - 1e-9 <= accel <= 1.5 + 1e-9
        assert lc in (-1, 0, 1)


# ---------------------------------------------------------------------------
# closed-loop runs

def platoon_bundle(n=10, spacing=15.0, speed=10.0):
    net = straight_net()
    agents = []
    for i in range(n):
        role = "AV" if i == 0 else "BV"
        # index 0 leads the platoon
        s = 200.0 - i * spacing
        agents.append(place(net, "e0f", 0, s, f"v{i}", role=role, speed=speed))
    return make_bundle(net, agents)


def test_platoon_runs_without_collisions():
    trace = simcore.run(platoon_bundle(), duration=60.0, dt=0.1)
    assert len(trace.steps) == 600
    assert trace.collisions == []
    # followers kept moving
    assert all(trace.odometry[f"v{i}"] > 100.0 for i in range(10))


def test_platoon_order_is_preserved():
    trace = simcore.run(platoon_bundle(), duration=30.0, dt=0.1)
    for states in trace.steps:
        xs = {a.id: a.x for a in states}
        order = [xs[f"v{i}"] for i in range(10) if f"v{i}" in xs]
        assert order == sorted(order, reverse=True)


def test_trace_hash_is_deterministic():
    hashes = {simcore.run(platoon_bundle(), duration=10.0, dt=0.1).hash()
              for _ in range(3)}
    assert len(hashes) == 1


def test_dt_bounds_enforced():
    world = simcore.build_world(platoon_bundle(n=2))
    with pytest.raises(ValueError):
        simcore.step(world, 0.0)
    with pytest.raises(ValueError):
        simcore.step(world, 0.6)
    simcore.step(world, 0.5)  # boundary included


def test_no_teleportation():
    trace = simcore.run(platoon_bundle(), duration=20.0, dt=0.1)
    prev = {}
    for states in trace.steps:
        for a in states:
            if a.id in prev:
                moved = math.dist((a.x, a.y), prev[a.id])
                assert moved <= a.speed * 0.1 + 1e-6
            prev[a.id] = (a.x, a.y)


def test_av_stops_for_blocking_object():
    net = straight_net(length=200.0)
    av = place(net, "e0f", 0, 20.0, "av", role="AV", speed=10.0)
    line = netgen.lane_centerline(net, net.edge("e0f"), 0)
    bx, by, bh = netgen.point_along(line, 100.0)
    barrier = compgen.PlacedObject(kind="Barrier", x=bx, y=by, yaw=bh,
                                   footprint=(2.0, 0.5))
    bundle = make_bundle(net, [av], objects=[barrier])
    trace = simcore.run(bundle, duration=30.0, dt=0.1)
    assert trace.collisions == []
    final = trace.steps[-1][0]
    assert final.s < 100.0
    assert final.speed < 0.5
    # blocked run covers less ground than a free run
    free = simcore.run(make_bundle(net, [av]), duration=30.0, dt=0.1)
    assert trace.odometry["av"] < free.odometry["av"]


def test_vru_walks_straight():
    net = straight_net(length=100.0)
    ped = compgen.AgentState(
        id="p", kind="Pedestrian", role="VRU", edge_id="e0f", lane_index=0,
        s=0.0, speed=1.4, heading=90.0, x=50.0, y=-5.0, length=0.5, width=0.5)
    av = place(net, "e0f", 0, 10.0, "av", role="AV", speed=0.0)
    trace = simcore.run(make_bundle(net, [av, ped]), duration=10.0, dt=0.1)
    p_final = [a for a in trace.steps[-1] if a.id == "p"][0]
    assert p_final.x == pytest.approx(50.0)
    assert p_final.y == pytest.approx(-5.0 + 1.4 * 10.0)


def test_vehicle_deactivates_at_network_end():
    net = straight_net(length=50.0)
    av = place(net, "e0f", 0, 45.0, "av", role="AV", speed=10.0)
    trace = simcore.run(make_bundle(net, [av]), duration=5.0, dt=0.1)
    assert trace.steps[-1] == []  # left the network
    assert trace.odometry["av"] < 10.0 * 5.0


def test_bv_changes_lane_past_slow_leader():
    net = straight_net(length=500.0, fwd=2)
    slow = place(net, "e0f", 0, 100.0, "slow", kind="Truck", speed=2.0)
    fast = place(net, "e0f", 0, 40.0, "fast", speed=13.0)
    av = place(net, "e0f", 1, 5.0, "av", role="AV", speed=5.0)
    overrides = {"slow": simcore.BehaviorParams(desired_speed=2.0)}
    trace = simcore.run(make_bundle(net, [av, slow, fast]), duration=20.0,
                        dt=0.1, params_overrides=overrides)
    lanes_used = {a.lane_index for states in trace.steps for a in states
                  if a.id == "fast"}
    assert 1 in lanes_used  # overtook via the left lane
    assert trace.collisions == []


def test_route_planner_and_length():
    road = ir.RoadDescription(
        layout="Straight", segments=(ir.RoadSegment(50.0, 1, 0, 13.89),
                                     ir.RoadSegment(70.0, 1, 0, 13.89)))
    net = netgen.build_network_blueprint(road)
    route = simcore.plan_route(net, "e0f")
    assert route == ("e0f", "e1f")
    assert simcore.route_length(net, route) == pytest.approx(120.0)


def test_export_trace_format():
    import json
    trace = simcore.run(platoon_bundle(n=2), duration=1.0, dt=0.1)
    lines = simcore.export_trace(trace).strip().split("\n")
    assert len(lines) == 2 * 10
    rec = json.loads(lines[0])
    assert set(rec) == {"step", "id", "x", "y", "speed", "heading", "accel"}
