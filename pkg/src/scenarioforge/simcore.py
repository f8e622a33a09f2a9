"""Deterministic closed-loop micro-simulation.

Background vehicles follow an IDM car-following law with a threshold-based
lane-change rule; the vehicle under test runs a rule policy with a TTC-based
braking onset that hint tags can move earlier. Collisions are oriented
bounding-box overlaps (separating axis test) recorded per step.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from . import netgen
from .compgen import AgentState, PlacedObject
from .ir import ScenarioBundle

DEFAULT_DT = 0.1
TTC_BRAKE_THRESHOLD = 3.0   # s; AV braking onset
LOOKAHEAD_HORIZON = 150.0   # m


@dataclass(frozen=True)
class BehaviorParams:
    desired_speed: float = 13.89
    max_accel: float = 1.5
    comfortable_decel: float = 2.0
    min_gap: float = 2.0
    time_headway: float = 1.5
    accel_exponent: float = 4.0
    lane_change_threshold: float = 0.3  # m/s^2 advantage

    def __post_init__(self):
        if min(self.desired_speed, self.max_accel, self.comfortable_decel,
               self.min_gap, self.time_headway,
               self.lane_change_threshold) <= 0:
            raise ValueError("behavior parameters must be positive")
        if self.accel_exponent < 1:
            raise ValueError("accel_exponent must be >= 1")


@dataclass(frozen=True)
class CollisionEvent:
    step: int
    agent_a: str
    agent_b: str
    penetration: float


@dataclass
class SimulationTrace:
    dt: float
    steps: list = field(default_factory=list)        # list[list[AgentState]]
    collisions: list = field(default_factory=list)   # list[CollisionEvent]
    odometry: dict = field(default_factory=dict)     # id -> meters
    accel_series: dict = field(default_factory=dict)  # id -> list[m/s^2]
    jerk_series: dict = field(default_factory=dict)   # id -> list[m/s^3]

    def hash(self) -> str:
        payload = []
        for states in self.steps:
            payload.append([(a.id, round(a.x, 6), round(a.y, 6),
                             round(a.speed, 6), round(a.heading, 6))
                            for a in states])
        blob = json.dumps({"dt": self.dt, "steps": payload,
                           "collisions": [(c.step, c.agent_a, c.agent_b)
                                          for c in self.collisions]},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------------------
# IDM

def idm_accel(params: BehaviorParams, speed: float, gap: float,
              speed_delta: float) -> float:
    """IDM acceleration for the given bumper gap and approach rate.

    gap may be math.inf (free road). speed_delta = own speed - leader speed.
    """
    p = params
    free = (speed / p.desired_speed) ** p.accel_exponent \
        if p.desired_speed > 0 else 0.0
    if math.isinf(gap):
        interaction = 0.0
    else:
        s_star = p.min_gap + max(0.0, speed * p.time_headway +
                                 speed * speed_delta /
                                 (2.0 * math.sqrt(p.max_accel *
                                                  p.comfortable_decel)))
        gap = max(gap, 0.1)
        interaction = (s_star / gap) ** 2
    return p.max_accel * (1.0 - free - interaction)


# ---------------------------------------------------------------------------
# oriented-rectangle collision (separating axis test)

def obb_corners(x, y, heading_deg, length, width):
    rad = math.radians(heading_deg)
    c, s = math.cos(rad), math.sin(rad)
    hl, hw = length / 2.0, width / 2.0
    return [(x + c * dx - s * dy, y + s * dx + c * dy)
            for dx, dy in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw))]


def obb_overlap(corners_a, corners_b) -> float:
    """Penetration depth of two convex quads; 0.0 when separated."""
    min_overlap = math.inf
    for corners in (corners_a, corners_b):
        for i in range(4):
            ex = corners[(i + 1) % 4][0] - corners[i][0]
            ey = corners[(i + 1) % 4][1] - corners[i][1]
            norm = math.hypot(ex, ey)
            if norm == 0:
                continue
            ax, ay = -ey / norm, ex / norm
            pa = [ax * px + ay * py for px, py in corners_a]
            pb = [ax * px + ay * py for px, py in corners_b]
            overlap = min(max(pa), max(pb)) - max(min(pa), min(pb))
            if overlap <= 0:
                return 0.0
            min_overlap = min(min_overlap, overlap)
    return min_overlap


def detect_collisions(states, dimensions=None, step: int = 0
                      ) -> list[CollisionEvent]:
    """Pairwise OBB overlap events among the given agent states.

    dimensions optionally overrides (length, width) per agent id.
    """
    events = []
    boxes = []
    for a in states:
        length, width = (dimensions or {}).get(a.id, (a.length, a.width))
        boxes.append(obb_corners(a.x, a.y, a.heading, length, width))
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            pen = obb_overlap(boxes[i], boxes[j])
            if pen > 0:
                events.append(CollisionEvent(step, states[i].id, states[j].id,
                                             pen))
    return events


# ---------------------------------------------------------------------------
# world model

@dataclass
class _Vehicle:
    state: AgentState
    params: BehaviorParams
    active: bool = True
    hints: tuple[str, ...] = ()
    route: tuple[str, ...] = ()
    lane_change_cooldown: float = 0.0


@dataclass
class World:
    net: netgen.RoadNetwork
    vehicles: dict            # id -> _Vehicle
    obstacles: list           # (edge_id, lane_index, s, PlacedObject)
    time: float = 0.0
    step_index: int = 0

    @property
    def states(self):
        return [v.state for v in self.vehicles.values()]


def _successors(net: netgen.RoadNetwork, edge_id: str) -> list[str]:
    edge = net.edge(edge_id)
    out = sorted({c.to_edge for c in net.connections if c.from_edge == edge_id})
    if out:
        return out
    return sorted(e.id for e in net.edges
                  if e.from_node == edge.to_node and e.to_node != edge.from_node)


def _next_edge(world: World, veh: _Vehicle) -> Optional[str]:
    if veh.route:
        cur = veh.state.edge_id
        if cur in veh.route:
            i = veh.route.index(cur)
            if i + 1 < len(veh.route):
                return veh.route[i + 1]
            return None
    succ = _successors(world.net, veh.state.edge_id)
    return succ[0] if succ else None


def _project_objects(net: netgen.RoadNetwork, objects) -> list:
    """Snap blocking objects (cones, barriers) onto the nearest lane point."""
    inv = []
    for e in net.edges:
        for li in range(e.num_lanes):
            line = netgen.lane_centerline(net, e, li)
            inv.append((e.id, li, line, netgen._polyline_length(line)))
    out = []
    for obj in objects:
        if obj.kind not in ("Cone", "Barrier"):
            continue
        best = None
        for eid, li, line, L in inv:
            n_samples = max(2, int(L / 2.0))
            for k in range(n_samples + 1):
                s = L * k / n_samples
                x, y, _ = netgen.point_along(line, s)
                d = math.dist((x, y), (obj.x, obj.y))
                if best is None or d < best[0]:
                    best = (d, eid, li, s)
        if best is not None and best[0] <= 2.5:
            out.append((best[1], best[2], best[3], obj))
    return out


def _leader_gap(world: World, veh: _Vehicle, edge_id: str, lane_index: int,
                s: float) -> tuple[float, float]:
    """(bumper gap, leader speed) ahead on the given lane, one edge lookahead."""
    me = veh.state
    best_gap, best_speed = math.inf, 0.0

    def consider(center_dist, other_len, other_speed):
        nonlocal best_gap, best_speed
        gap = center_dist - (me.length + other_len) / 2.0
        if gap < best_gap:
            best_gap, best_speed = gap, other_speed

    for other in world.vehicles.values():
        if other.state.id == me.id or not other.active:
            continue
        st = other.state
        if st.edge_id == edge_id and st.lane_index == lane_index and st.s > s:
            consider(st.s - s, st.length, st.speed)
    for eid, li, obj_s, obj in world.obstacles:
        if eid == edge_id and li == lane_index and obj_s > s:
            consider(obj_s - s, max(obj.footprint), 0.0)

    edge = world.net.edge(edge_id)
    line = netgen.lane_centerline(world.net, edge, lane_index)
    remaining = netgen._polyline_length(line) - s
    nxt = _next_edge(world, veh)
    if nxt is not None and remaining < LOOKAHEAD_HORIZON:
        nxt_edge = world.net.edge(nxt)
        li2 = min(lane_index, nxt_edge.num_lanes - 1)
        for other in world.vehicles.values():
            if other.state.id == me.id or not other.active:
                continue
            st = other.state
            if st.edge_id == nxt and st.lane_index == li2:
                consider(remaining + st.s, st.length, st.speed)
        for eid, li, obj_s, obj in world.obstacles:
            if eid == nxt and li == li2:
                consider(remaining + obj_s, max(obj.footprint), 0.0)
    return best_gap, best_speed


def _follower(world: World, me_id: str, edge_id: str, lane_index: int,
              s: float):
    best = None
    for other in world.vehicles.values():
        st = other.state
        if st.id == me_id or not other.active:
            continue
        if st.edge_id == edge_id and st.lane_index == lane_index and st.s <= s:
            if best is None or st.s > best.state.s:
                best = other
    return best


def av_policy(observation: dict, hints: tuple[str, ...] = ()
              ) -> tuple[float, int]:
    """Rule policy for the vehicle under test.

    observation: speed, desired_speed, gap, leader_speed, max_accel,
    comfortable_decel, min_gap, lane_options (list of lane-change candidates
    with their gaps). Returns (accel, lane_change in {-1, 0, +1}).
    """
    v = observation["speed"]
    v0 = observation["desired_speed"]
    gap = observation["gap"]
    lead_v = observation["leader_speed"]
    a_max = observation["max_accel"]
    b = observation["comfortable_decel"]
    s0 = observation["min_gap"]

    ttc_threshold = TTC_BRAKE_THRESHOLD
    if "DecelerateEarlier" in hints:
        ttc_threshold *= 2.0

    closing = v - lead_v
    ttc = gap / closing if (closing > 0 and not math.isinf(gap)) else math.inf

    lane_change = 0
    if not math.isinf(gap) and gap < 3.0 * s0 + v * 2.0:
        options = observation.get("lane_options", [])
        prefer = [o for o in options if o["gap"] > gap + 2.0 * s0
                  and o["rear_gap"] > s0]
        if prefer and ("SaferLane" in hints or gap < 2.0 * s0 + v * 1.0
                       or ttc < ttc_threshold):
            prefer.sort(key=lambda o: -o["gap"])
            lane_change = prefer[0]["direction"]

    if ttc < ttc_threshold or (not math.isinf(gap) and gap < s0):
        return -b, lane_change
    accel = idm_accel(BehaviorParams(desired_speed=v0, max_accel=a_max,
                                     comfortable_decel=b, min_gap=s0),
                      v, gap, closing)
    return max(-b, min(a_max, accel)), lane_change


def _lane_options(world: World, veh: _Vehicle) -> list[dict]:
    me = veh.state
    edge = world.net.edge(me.edge_id)
    options = []
    for direction in (-1, 1):
        li = me.lane_index + direction
        if not (0 <= li < edge.num_lanes):
            continue
        gap, lead_v = _leader_gap(world, veh, me.edge_id, li, me.s)
        follower = _follower(world, me.id, me.edge_id, li, me.s)
        if follower is None:
            rear_gap = math.inf
        else:
            rear_gap = me.s - follower.state.s - \
                (me.length + follower.state.length) / 2.0
        options.append({"direction": direction, "lane_index": li,
                        "gap": gap, "leader_speed": lead_v,
                        "rear_gap": rear_gap, "follower": follower})
    return options


def _bv_control(world: World, veh: _Vehicle) -> tuple[float, int]:
    me = veh.state
    gap, lead_v = _leader_gap(world, veh, me.edge_id, me.lane_index, me.s)
    accel_here = idm_accel(veh.params, me.speed, gap, me.speed - lead_v)

    lane_change = 0
    if veh.lane_change_cooldown <= 0:
        for opt in _lane_options(world, veh):
            accel_there = idm_accel(veh.params, me.speed, opt["gap"],
                                    me.speed - opt["leader_speed"])
            if accel_there - accel_here < veh.params.lane_change_threshold:
                continue
            if opt["rear_gap"] < veh.params.min_gap:
                continue
            follower = opt["follower"]
            if follower is not None:
                f_acc = idm_accel(follower.params, follower.state.speed,
                                  opt["rear_gap"],
                                  follower.state.speed - me.speed)
                if f_acc < -follower.params.comfortable_decel:
                    continue
            lane_change = opt["direction"]
            accel_here = accel_there
            break
    return accel_here, lane_change


def _advance_vehicle(world: World, veh: _Vehicle, accel: float,
                     lane_change: int, dt: float) -> None:
    me = veh.state
    if lane_change != 0:
        li = me.lane_index + lane_change
        edge = world.net.edge(me.edge_id)
        if 0 <= li < edge.num_lanes:
            me = replace(me, lane_index=li)
            veh.lane_change_cooldown = 2.0
    accel = max(-8.0, min(accel, veh.params.max_accel))
    v_new = max(0.0, me.speed + accel * dt)
    s_new = me.s + v_new * dt

    edge = world.net.edge(me.edge_id)
    line = netgen.lane_centerline(world.net, edge, me.lane_index)
    L = netgen._polyline_length(line)
    edge_id = me.edge_id
    lane_index = me.lane_index
    while s_new > L:
        nxt = _next_edge(world, replace(veh, state=replace(me, edge_id=edge_id)))
        if nxt is None:
            veh.active = False
            s_new = L
            v_new = 0.0
            break
        s_new -= L
        edge_id = nxt
        edge = world.net.edge(edge_id)
        lane_index = min(lane_index, edge.num_lanes - 1)
        line = netgen.lane_centerline(world.net, edge, lane_index)
        L = netgen._polyline_length(line)
    x, y, heading = netgen.point_along(line, s_new)
    veh.lane_change_cooldown = max(0.0, veh.lane_change_cooldown - dt)
    veh.state = replace(me, edge_id=edge_id, lane_index=lane_index, s=s_new,
                        speed=v_new, x=x, y=y, heading=heading)


def _advance_vru(veh: _Vehicle, dt: float) -> None:
    me = veh.state
    rad = math.radians(me.heading)
    veh.state = replace(me, x=me.x + me.speed * math.cos(rad) * dt,
                        y=me.y + me.speed * math.sin(rad) * dt)


def step(world: World, dt: float) -> World:
    """One simulation tick: controls for all agents, then semi-implicit
    integration (velocity first, then position). Mutates and returns world."""
    if not (0 < dt <= 0.5):
        raise ValueError("dt must be in (0, 0.5]")
    controls = {}
    for vid, veh in world.vehicles.items():
        if not veh.active:
            continue
        me = veh.state
        if me.kind in ("Pedestrian", "Cyclist"):
            controls[vid] = None
        elif me.role == "AV":
            gap, lead_v = _leader_gap(world, veh, me.edge_id, me.lane_index,
                                      me.s)
            obs = {"speed": me.speed, "desired_speed": veh.params.desired_speed,
                   "gap": gap, "leader_speed": lead_v,
                   "max_accel": veh.params.max_accel,
                   "comfortable_decel": veh.params.comfortable_decel,
                   "min_gap": veh.params.min_gap,
                   "lane_options": _lane_options(world, veh)}
            controls[vid] = av_policy(obs, veh.hints)
        else:
            controls[vid] = _bv_control(world, veh)

    for vid, veh in world.vehicles.items():
        if not veh.active:
            continue
        ctl = controls[vid]
        if ctl is None:
            _advance_vru(veh, dt)
        else:
            accel, lane_change = ctl
            if veh.lane_change_cooldown > 0:
                lane_change = 0
            _advance_vehicle(world, veh, accel, lane_change, dt)

    world.time += dt
    world.step_index += 1
    return world


def _default_params(kind: str, edge_speed: float,
                    desired_speed: Optional[float] = None) -> BehaviorParams:
    v0 = desired_speed if desired_speed and desired_speed > 0 else edge_speed
    if kind == "Truck":
        return BehaviorParams(desired_speed=v0 * 0.9, max_accel=1.0,
                              comfortable_decel=1.5, time_headway=1.8)
    if kind == "Bus":
        return BehaviorParams(desired_speed=v0 * 0.9, max_accel=1.0,
                              comfortable_decel=1.5, time_headway=1.8)
    return BehaviorParams(desired_speed=max(v0, 0.5))


def build_world(bundle: ScenarioBundle,
                params_overrides: Optional[dict] = None,
                hints: tuple[str, ...] = ()) -> World:
    net = bundle.network
    vehicles = {}
    for a in bundle.agents:
        edge = net.edge(a.edge_id)
        params = (params_overrides or {}).get(a.id) or \
            _default_params(a.kind, edge.speed)
        route = ()
        if a.role == "AV":
            route = plan_route(net, a.edge_id)
        vehicles[a.id] = _Vehicle(state=a, params=params, route=route,
                                  hints=hints if a.role == "AV" else ())
    return World(net=net, vehicles=vehicles,
                 obstacles=_project_objects(net, bundle.objects))


def plan_route(net: netgen.RoadNetwork, start_edge: str) -> tuple[str, ...]:
    """Greedy depth route from start_edge, longest continuation first."""
    route = [start_edge]
    seen = {start_edge}
    while True:
        succ = [e for e in _successors(net, route[-1]) if e not in seen]
        if not succ:
            return tuple(route)
        succ.sort(key=lambda eid: -netgen.edge_length(net, net.edge(eid)))
        route.append(succ[0])
        seen.add(succ[0])


def route_length(net: netgen.RoadNetwork, route) -> float:
    return sum(netgen.edge_length(net, net.edge(eid)) for eid in route)


def run(bundle: ScenarioBundle, duration: float, dt: float = DEFAULT_DT,
        params_overrides: Optional[dict] = None,
        hints: tuple[str, ...] = ()) -> SimulationTrace:
    """Closed-loop run: ceil(duration/dt) steps, deterministic per bundle."""
    world = build_world(bundle, params_overrides, hints)
    n_steps = math.ceil(duration / dt)
    trace = SimulationTrace(dt=dt)
    prev_speed = {vid: v.state.speed for vid, v in world.vehicles.items()}
    prev_accel: dict = {}
    for vid in world.vehicles:
        trace.odometry[vid] = 0.0
        trace.accel_series[vid] = []
        trace.jerk_series[vid] = []

    seen_contacts: set = set()
    for k in range(n_steps):
        step(world, dt)
        states = [v.state for v in world.vehicles.values() if v.active]
        trace.steps.append(list(states))
        for ev in detect_collisions(states, step=k):
            key = (ev.agent_a, ev.agent_b)
            if key not in seen_contacts:
                seen_contacts.add(key)
                trace.collisions.append(ev)
        for vid, veh in world.vehicles.items():
            v_now = veh.state.speed if veh.active else 0.0
            trace.odometry[vid] += v_now * dt
            accel = (v_now - prev_speed[vid]) / dt
            trace.accel_series[vid].append(accel)
            if vid in prev_accel:
                trace.jerk_series[vid].append((accel - prev_accel[vid]) / dt)
            prev_accel[vid] = accel
            prev_speed[vid] = v_now
    return trace


def export_trace(trace: SimulationTrace) -> str:
    """Line-delimited trace records: step, id, x, y, speed, heading, accel."""
    lines = []
    for k, states in enumerate(trace.steps):
        for a in states:
            accel = trace.accel_series.get(a.id, [])
            acc = accel[k] if k < len(accel) else 0.0
            lines.append(json.dumps({
                "step": k, "id": a.id, "x": round(a.x, 4), "y": round(a.y, 4),
                "speed": round(a.speed, 4), "heading": round(a.heading, 4),
                "accel": round(acc, 4)}, sort_keys=True))
    return "\n".join(lines) + "\n"
