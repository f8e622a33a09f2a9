"""Scenario-set evaluation: conformity, diversity, embedding similarity,
AV-performance scoring, pipeline comparison, and collision-hint export."""
from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Optional

from . import compgen, netgen, simcore
from .ir import (AgentDescription, ObjectDescription, RoadDescription,
                 RoadSegment, ScenarioBundle, ScenarioDescription,
                 serialize_description)

FAILURE_KINDS = ("MalformedKeyword", "BlueprintReuse", "ValidationError",
                 "RuntimeError")

# driving-score decomposition constants (config-exposed; the source metric
# definition is not public, so these are an interpretation)
DEFAULT_WEIGHTS = (0.4, 0.3, 0.3)   # safety, efficiency, comfort
DEFAULT_TTC_REF = 4.0               # s
DEFAULT_JERK_REF = 2.0              # m/s^3

TABLE5_ROWS = ("Route completion", "Driving score", "Total score",
               "Use Time", "Success rate", "Collision rate")
SIMILARITY_SECTIONS = ("Overall scene", "Net", "Road User", "Static object",
                       "Vehicle behavior")
HINT_TAGS = ("DecelerateEarlier", "SaferLane")


class ZeroVector(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class AVNotFound(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingVector:
    components: tuple[float, ...]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "components",
                           tuple(float(c) for c in self.components))
        if len(self.components) != self.dimension:
            raise DimensionMismatch(
                f"{len(self.components)} components, dimension {self.dimension}")
        if any(not math.isfinite(c) for c in self.components):
            raise ValueError("non-finite embedding component")


class HashingEmbedder:
    """Offline deterministic embedder: token-hash counts, L2-normalized."""

    def __init__(self, dimension: int = 512):
        self.dimension = dimension

    def embed(self, text: str) -> EmbeddingVector:
        counts = [0.0] * self.dimension
        for tok in re.findall(r"[a-z0-9_.]+", text.lower()):
            idx = int.from_bytes(hashlib.sha256(tok.encode()).digest()[:8],
                                 "big") % self.dimension
            counts[idx] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        if norm > 0:
            counts = [c / norm for c in counts]
        return EmbeddingVector(tuple(counts), self.dimension)


class RemoteEmbedder:
    """HTTP embedding client: POST {model, input} -> {"embedding": [...]}."""

    def __init__(self, endpoint: str, model: str = "text-embedding",
                 api_key: Optional[str] = None, dimension: int = 1536,
                 timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, text: str) -> EmbeddingVector:
        import requests
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        resp = requests.post(self.endpoint,
                             json={"model": self.model, "input": text},
                             headers=headers, timeout=self.timeout)
        resp.raise_for_status()
        comps = tuple(resp.json()["embedding"])
        return EmbeddingVector(comps, len(comps))


def cosine_similarity(u: EmbeddingVector, v: EmbeddingVector) -> float:
    if u.dimension != v.dimension:
        raise DimensionMismatch(f"{u.dimension} vs {v.dimension}")
    nu = math.sqrt(sum(c * c for c in u.components))
    nv = math.sqrt(sum(c * c for c in v.components))
    if nu == 0 or nv == 0:
        raise ZeroVector("cosine similarity of a zero vector is undefined")
    dot = sum(a * b for a, b in zip(u.components, v.components))
    return max(-1.0, min(1.0, dot / (nu * nv)))


# ---------------------------------------------------------------------------
# bundle -> description (f applied to the generated scenario)

def classify_bundle(bundle: ScenarioBundle) -> str:
    """Scene class from the realized scenario, not its source description."""
    if any(o.kind == "Cone" for o in bundle.objects):
        return "ConstructionZone"
    neighbors: dict[str, set] = {}
    for e in bundle.network.edges:
        neighbors.setdefault(e.from_node, set()).add(e.to_node)
        neighbors.setdefault(e.to_node, set()).add(e.from_node)
    if any(len(v) >= 4 for v in neighbors.values()):
        return "Intersection"
    return "General"


def describe_bundle(bundle: ScenarioBundle) -> ScenarioDescription:
    """Re-derive a scenario description from a generated bundle."""
    net = bundle.network
    stats = netgen.network_stats(net)
    scene = classify_bundle(bundle)
    layout_map = {"ConstructionZone": "Straight",
                  "Intersection": "CrossIntersection", "General": "Straight"}
    lanes_fwd = max(1, round(stats.total_lanes / max(stats.total_edges, 1)))
    speed = max((e.speed for e in net.edges), default=13.89)
    road = RoadDescription(
        layout=layout_map[scene],
        segments=(RoadSegment(length=max(stats.route_length, 1.0),
                              lanes_forward=lanes_fwd, lanes_backward=0,
                              speed_limit=speed),))

    agents = tuple(
        AgentDescription(kind=a.kind,
                         role=a.role,
                         intent="cruise",
                         approx_speed=round(a.speed, 2),
                         color=a.color)
        for a in bundle.agents)
    counts: dict[str, int] = {}
    for o in bundle.objects:
        counts[o.kind] = counts.get(o.kind, 0) + 1
    objects = tuple(ObjectDescription(kind=k, count=n)
                    for k, n in sorted(counts.items()))
    return ScenarioDescription(road=road, objects=objects, agents=agents,
                               weather=bundle.weather,
                               narrative="generated scenario", scene_type=scene)


def objective_distance(description: ScenarioDescription,
                       bundle: ScenarioBundle, embedder,
                       describer=None) -> float:
    """1 - cosine similarity between the request text and the text of the
    scenario actually generated from it."""
    describer = describer or describe_bundle
    u = embedder.embed(serialize_description(description))
    v = embedder.embed(serialize_description(describer(bundle)))
    return 1.0 - cosine_similarity(u, v)


# ---------------------------------------------------------------------------
# conformity

@dataclass(frozen=True)
class ConformityReport:
    scene_type_acc: float
    vehicle_attr_acc: float
    static_obj_attr_acc: float
    success_rate: float
    failure_taxonomy_counts: dict = field(default_factory=dict)


def _vehicle_attr_acc(desc: ScenarioDescription, bundle: ScenarioBundle
                      ) -> float:
    desc_agents = [a for a in desc.agents if a.kind not in
                   ("Pedestrian", "Cyclist")]
    bundle_agents = [a for a in bundle.agents if a.kind not in
                     ("Pedestrian", "Cyclist")]
    if not desc_agents and not bundle_agents:
        return 1.0
    pool: list = list(bundle_agents)
    matched = 0
    for a in desc_agents:
        hit = None
        for i, b in enumerate(pool):
            if b is None or a.kind != b.kind:
                continue
            if a.color is None or b.color is None or a.color == b.color:
                hit = i
                break
        if hit is None:
            for i, b in enumerate(pool):
                if b is not None and a.kind == b.kind:
                    hit = i
                    break
        if hit is not None:
            pool[hit] = None
            matched += 1
    return matched / max(len(desc_agents), len(bundle_agents))


def _static_attr_acc(desc: ScenarioDescription, bundle: ScenarioBundle
                     ) -> float:
    want: dict[str, int] = {}
    for o in desc.objects:
        want[o.kind] = want.get(o.kind, 0) + o.count
    have: dict[str, int] = {}
    for o in bundle.objects:
        have[o.kind] = have.get(o.kind, 0) + 1
    kinds = set(want) | set(have)
    if not kinds:
        return 1.0
    scores = []
    for k in kinds:
        a, b = want.get(k, 0), have.get(k, 0)
        scores.append(min(a, b) / max(a, b) if max(a, b) else 1.0)
    return sum(scores) / len(scores)


def conformity(pairs, outcomes=None) -> ConformityReport:
    """Conformity over a batch.

    pairs: list of (ScenarioDescription, ScenarioBundle) for runs that
    produced a bundle. outcomes: list of per-run outcome records, each either
    {"ok": True} or {"ok": False, "failure": <taxonomy kind>}; defaults to
    all-ok over the pairs.
    """
    if outcomes is None:
        outcomes = [{"ok": True}] * len(pairs)
    scene_hits, veh_accs, obj_accs = [], [], []
    for desc, bundle in pairs:
        scene_hits.append(1.0 if classify_bundle(bundle) == desc.scene_type
                          else 0.0)
        veh_accs.append(_vehicle_attr_acc(desc, bundle))
        obj_accs.append(_static_attr_acc(desc, bundle))
    taxonomy = {k: 0 for k in FAILURE_KINDS}
    ok = 0
    for rec in outcomes:
        if rec.get("ok"):
            ok += 1
        else:
            kind = rec.get("failure", "RuntimeError")
            taxonomy[kind if kind in taxonomy else "RuntimeError"] += 1

    def avg(vals):
        return sum(vals) / len(vals) if vals else 1.0

    return ConformityReport(
        scene_type_acc=avg(scene_hits),
        vehicle_attr_acc=avg(veh_accs),
        static_obj_attr_acc=avg(obj_accs),
        success_rate=ok / len(outcomes) if outcomes else 1.0,
        failure_taxonomy_counts=taxonomy)


# ---------------------------------------------------------------------------
# diversity

def _mean_std(values) -> tuple[float, float]:
    return compgen._mean_std(values)


def format_pm(mean: float, std: float) -> str:
    return f"{mean:.2f} ± {std:.2f}"


DIVERSITY_METRICS = ("#Lanes", "#Edges", "Route Length", "#Agents",
                     "#Objects", "Shortest", "Vehicle yaw")


def diversity(scenarios) -> dict:
    """Mean/std table across a scenario set.

    scenarios: list of dicts with keys lanes, edges, route_length, agents
    (list[AgentState]), objects (count). Returns metric -> (mean, std).
    """
    if not scenarios:
        raise ValueError("need >= 1 scenario")
    table = {
        "#Lanes": _mean_std([s["lanes"] for s in scenarios]),
        "#Edges": _mean_std([s["edges"] for s in scenarios]),
        "Route Length": _mean_std([s["route_length"] for s in scenarios]),
        "#Agents": _mean_std([len(s["agents"]) for s in scenarios]),
        "#Objects": _mean_std([s["objects"] for s in scenarios]),
    }
    pd = compgen.placement_diversity([s["agents"] for s in scenarios])
    table["Shortest"] = pd["shortest_distance"]
    table["Vehicle yaw"] = pd["vehicle_yaw"]
    return table


def diversity_from_bundles(bundles) -> dict:
    rows = []
    for b in bundles:
        stats = netgen.network_stats(b.network)
        rows.append({"lanes": stats.total_lanes, "edges": stats.total_edges,
                     "route_length": stats.route_length,
                     "agents": list(b.agents), "objects": len(b.objects)})
    return diversity(rows)


def format_diversity_table(table: dict) -> str:
    width = max(len(k) for k in table) + 2
    lines = [f"{'Metric'.ljust(width)}Value"]
    for k in DIVERSITY_METRICS:
        if k in table:
            lines.append(f"{k.ljust(width)}{format_pm(*table[k])}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# AV performance

@dataclass(frozen=True)
class PerformanceReport:
    route_completion: float
    driving_score: float
    total_score: float
    use_time: float
    success: bool
    collision: bool


def _min_ttc(trace: simcore.SimulationTrace, av_id: str) -> float:
    best = math.inf
    for states in trace.steps:
        av = next((a for a in states if a.id == av_id), None)
        if av is None:
            continue
        rad = math.radians(av.heading)
        fx, fy = math.cos(rad), math.sin(rad)
        for other in states:
            if other.id == av_id:
                continue
            dx, dy = other.x - av.x, other.y - av.y
            ahead = dx * fx + dy * fy
            lateral = abs(-dx * fy + dy * fx)
            if ahead <= 0 or lateral > 2.0:
                continue
            gap = ahead - (av.length + other.length) / 2.0
            closing = av.speed - other.speed
            if gap > 0 and closing > 0:
                best = min(best, gap / closing)
    return best


def performance(trace: simcore.SimulationTrace, route_len: float,
                speed_limit: float, av_id: str = None,
                weights=DEFAULT_WEIGHTS, ttc_ref=DEFAULT_TTC_REF,
                jerk_ref=DEFAULT_JERK_REF) -> PerformanceReport:
    """Driving score (safety/efficiency/comfort mix), route completion,
    and their product as total score."""
    if av_id is None:
        ids = {a.id for states in trace.steps for a in states}
        av_id = next((i for i in sorted(ids)
                      if any(a.id == i and a.role == "AV"
                             for states in trace.steps for a in states)), None)
    if av_id is None or av_id not in trace.odometry:
        raise AVNotFound("trace contains no AV agent")

    distance = trace.odometry[av_id]
    route_completion = max(0.0, min(1.0, distance / route_len)) \
        if route_len > 0 else 0.0

    min_ttc = _min_ttc(trace, av_id)
    safety = 1.0 if math.isinf(min_ttc) else min(1.0, min_ttc / ttc_ref)

    speeds = [a.speed for states in trace.steps for a in states
              if a.id == av_id]
    mean_speed = sum(speeds) / len(speeds) if speeds else 0.0
    efficiency = min(1.0, mean_speed / speed_limit) if speed_limit > 0 else 0.0

    jerks = trace.jerk_series.get(av_id, [])
    mean_jerk = sum(abs(j) for j in jerks) / len(jerks) if jerks else 0.0
    comfort = 1.0 - min(1.0, mean_jerk / jerk_ref)

    w_s, w_e, w_c = weights
    driving_score = 100.0 * (w_s * safety + w_e * efficiency + w_c * comfort)
    total_score = driving_score * route_completion

    collision = any(av_id in (c.agent_a, c.agent_b)
                    for c in trace.collisions)
    completed = route_len > 0 and distance >= route_len - 1e-9
    if completed:
        # first step at which the route was done
        use_time = (distance_steps_to_complete(trace, av_id, route_len)
                    * trace.dt)
    else:
        use_time = len(trace.steps) * trace.dt
    return PerformanceReport(route_completion=route_completion,
                             driving_score=driving_score,
                             total_score=total_score, use_time=use_time,
                             success=completed and not collision,
                             collision=collision)


def distance_steps_to_complete(trace, av_id, route_len) -> int:
    acc = 0.0
    for k, states in enumerate(trace.steps):
        av = next((a for a in states if a.id == av_id), None)
        acc += (av.speed if av else 0.0) * trace.dt
        if acc >= route_len - 1e-9:
            return k + 1
    return len(trace.steps)


# ---------------------------------------------------------------------------
# pipeline comparison (six-row side-by-side table)

def compare_pipelines(ours: list[PerformanceReport],
                      baseline: list[PerformanceReport]) -> dict:
    """Per-metric mean/std for both arms plus collision rates."""
    if len(ours) != len(baseline):
        raise ValueError("arms must have equal run counts")

    def column(runs):
        return {
            "Route completion": _mean_std([r.route_completion for r in runs]),
            "Driving score": _mean_std([r.driving_score for r in runs]),
            "Total score": _mean_std([r.total_score for r in runs]),
            "Use Time": _mean_std([r.use_time for r in runs]),
            "Success rate": _mean_std([1.0 if r.success else 0.0
                                       for r in runs]),
            "Collision rate": (sum(1 for r in runs if r.collision)
                               / len(runs), None),
        }
    return {"rows": list(TABLE5_ROWS), "ours": column(ours),
            "baseline": column(baseline)}


def format_comparison(report: dict) -> str:
    width = max(len(r) for r in report["rows"]) + 2
    lines = [f"{'Scenario'.ljust(width)}{'Ours'.ljust(18)}RandomTrip"]
    for row in report["rows"]:
        cells = []
        for arm in ("ours", "baseline"):
            mean, std = report[arm][row]
            cells.append(f"{mean:.2f}" if std is None
                         else format_pm(mean, std))
        lines.append(f"{row.ljust(width)}{cells[0].ljust(18)}{cells[1]}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# cross-view description similarity

def _section_text(desc: ScenarioDescription, section: str) -> str:
    if section == "Overall scene":
        return serialize_description(desc)
    if section == "Net":
        return " ".join(
            f"{desc.road.layout} segment length {s.length} lanes "
            f"{s.lanes_forward}+{s.lanes_backward} speed {s.speed_limit}"
            for s in desc.road.segments)
    if section == "Road User":
        return " ".join(f"{a.color or ''} {a.kind} {a.role}"
                        for a in desc.agents)
    if section == "Static object":
        return " ".join(f"{o.count} {o.kind} {o.placement_hint}"
                        for o in desc.objects) or "no static objects"
    if section == "Vehicle behavior":
        return " ".join(f"{a.kind} {a.intent} at {a.approx_speed}"
                        for a in desc.agents) or "no vehicles"
    raise KeyError(section)


def cross_view_similarity(pairs_per_view: dict, embedder) -> dict:
    """Per-section similarity between inputs and per-view regenerations.

    pairs_per_view: view name -> list of (input_desc, regenerated_desc).
    Returns {section: {view: (mean, std)}}.
    """
    out: dict = {}
    for section in SIMILARITY_SECTIONS:
        out[section] = {}
        for view, pairs in pairs_per_view.items():
            sims = []
            for original, regen in pairs:
                u = embedder.embed(_section_text(original, section))
                v = embedder.embed(_section_text(regen, section))
                sims.append(cosine_similarity(u, v))
            out[section][view] = _mean_std(sims)
    return out


# ---------------------------------------------------------------------------
# collision hint export

@dataclass(frozen=True)
class HintRecord:
    scenario_id: str
    collision_step: int
    window: tuple[int, int]
    context: str
    hint: str


def _classify_collision(trace: simcore.SimulationTrace,
                        event: simcore.CollisionEvent) -> str:
    states = trace.steps[min(event.step, len(trace.steps) - 1)]
    a = next((s for s in states if s.id == event.agent_a), None)
    b = next((s for s in states if s.id == event.agent_b), None)
    if a is None or b is None:
        return "DecelerateEarlier"
    dh = abs((a.heading - b.heading + 180.0) % 360.0 - 180.0)
    rad = math.radians(a.heading)
    dx, dy = b.x - a.x, b.y - a.y
    along = abs(dx * math.cos(rad) + dy * math.sin(rad))
    lateral = abs(-dx * math.sin(rad) + dy * math.cos(rad))
    if dh < 30.0 and along >= lateral:
        return "DecelerateEarlier"
    return "SaferLane"


def export_hints(traces: dict, prompts: Optional[dict] = None,
                 window: int = 20) -> list[HintRecord]:
    """One hint record per collision: pre-collision window plus a suggested
    mitigation tag.

    traces: scenario id -> SimulationTrace. prompts: scenario id -> prompt or
    decision context captured during the run.
    """
    records = []
    for sid, trace in traces.items():
        for ev in trace.collisions:
            records.append(HintRecord(
                scenario_id=sid, collision_step=ev.step,
                window=(max(0, ev.step - window), ev.step),
                context=(prompts or {}).get(sid, ""),
                hint=_classify_collision(trace, ev)))
    return records
