"""Pipeline orchestration: interpret -> netgen -> compgen -> simulate -> eval.

Each run owns a directory under <output_dir>/runs/ holding every artifact and
all prompt/response logs; manifests record per-stage status in pipeline order
so a failure pins the taxonomy class of the stage that died.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from . import compgen, evalkit, ir, netgen, simcore
from .interpreter import (HttpProvider, LoggingProvider, MockProvider,
                          UnparseableAfterRetries, default_knowledge_base,
                          interpret, strip_knowledge)

STAGES = ("interpret", "netgen", "compgen", "simulate", "evaluate")

ABLATION_ROWS = ("Ours", "without interpreter", "without prior knowledge",
                 "without reasoning section")


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    provider_kind: str = "mock"          # mock | http
    provider_endpoint: Optional[str] = None
    provider_model: Optional[str] = None
    provider_fault: Optional[str] = None  # fault injection for the mock
    min_gap: float = 4.0
    max_agents: int = 32
    duration: float = 30.0
    dt: float = 0.1
    output_dir: str = "out"
    global_seed: int = 0
    variations: int = 10                 # scenarios per input
    workers: int = 1
    osm_cache_dir: str = "osm-cache"
    osm_fixture: Optional[str] = None    # path to a cached OSM extract
    score_weights: tuple = evalkit.DEFAULT_WEIGHTS
    ttc_ref: float = evalkit.DEFAULT_TTC_REF
    jerk_ref: float = evalkit.DEFAULT_JERK_REF

    def __post_init__(self):
        if not (0 < self.dt <= 0.5):
            raise ConfigError(f"dt must be in (0, 0.5], got {self.dt}")
        if self.variations < 1 or self.workers < 1:
            raise ConfigError("variations and workers must be >= 1")


def load_config(path: Optional[str] = None, **overrides) -> PipelineConfig:
    """Config from a JSON document plus environment credential overrides."""
    data = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        data.pop("format", None)
    data.update(overrides)
    if "score_weights" in data:
        data["score_weights"] = tuple(data["score_weights"])
    try:
        cfg = PipelineConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc))
    cfg.provider_endpoint = os.environ.get("SCENARIOFORGE_ENDPOINT",
                                           cfg.provider_endpoint)
    cfg.provider_model = os.environ.get("SCENARIOFORGE_MODEL",
                                        cfg.provider_model)
    return cfg


def make_provider(cfg: PipelineConfig, seed: int = 0):
    if cfg.provider_kind == "mock":
        return MockProvider(seed=0, fault=cfg.provider_fault)
    if cfg.provider_kind == "http":
        return HttpProvider(endpoint=cfg.provider_endpoint,
                            model=cfg.provider_model)
    raise ConfigError(f"unknown provider kind: {cfg.provider_kind}")


@dataclass
class RunManifest:
    run_id: str
    seed: int
    stages: dict = field(default_factory=dict)     # stage -> ok|error:kind|skipped
    artifacts: dict = field(default_factory=dict)  # name -> path
    timing: dict = field(default_factory=dict)     # stage -> seconds
    failure: Optional[str] = None                  # taxonomy kind

    @property
    def ok(self) -> bool:
        return all(v == "ok" for v in self.stages.values())

    def to_dict(self) -> dict:
        return {"run_id": self.run_id, "seed": self.seed,
                "stages": {s: self.stages.get(s, "skipped") for s in STAGES},
                "artifacts": self.artifacts, "timing": self.timing,
                "failure": self.failure}


def classify_failure(exc: Exception) -> str:
    if isinstance(exc, UnparseableAfterRetries):
        if isinstance(exc.last_error, ir.BlueprintReuse):
            return "BlueprintReuse"
        return "RuntimeError"
    if isinstance(exc, ir.BlueprintReuse):
        return "BlueprintReuse"
    if isinstance(exc, (netgen.CompileFailed, netgen.NetworkValidationError)):
        kinds = {e.kind for e in exc.errors}
        if "MalformedKeyword" in kinds:
            return "MalformedKeyword"
        return "ValidationError"
    if isinstance(exc, ir.DescriptionError):
        return "ValidationError"
    return "RuntimeError"


def _bundle_to_dict(bundle: ir.ScenarioBundle) -> dict:
    return {
        "seed": bundle.seed,
        "description": json.loads(ir.serialize_description(bundle.description)),
        "agents": [dataclasses.asdict(a) for a in bundle.agents],
        "objects": [dataclasses.asdict(o) for o in bundle.objects],
        "network": {
            "nodes": [dataclasses.asdict(n) for n in bundle.network.nodes],
            "edges": [dataclasses.asdict(e) for e in bundle.network.edges],
        },
    }


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _write_json(path: str, data) -> None:
    _write(path, json.dumps(data, sort_keys=True, indent=2) + "\n")


def run_pipeline(source: ir.MultimodalInput, cfg: PipelineConfig,
                 seed: Optional[int] = None, run_id: Optional[str] = None,
                 kb: Optional[ir.PromptKnowledgeBase] = None,
                 provider=None) -> RunManifest:
    """One end-to-end run. Artifacts land in <output_dir>/runs/<run_id>-<seed>."""
    seed = cfg.global_seed if seed is None else seed
    if run_id is None:
        run_id = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    run_dir = os.path.join(cfg.output_dir, "runs", f"{run_id}-{seed}")
    os.makedirs(run_dir, exist_ok=True)
    kb = kb or default_knowledge_base()
    provider = provider or make_provider(cfg, seed)
    provider = LoggingProvider(provider, os.path.join(run_dir, "prompts"))

    manifest = RunManifest(run_id=run_id, seed=seed)

    def fail(stage: str, exc: Exception) -> RunManifest:
        kind = classify_failure(exc)
        manifest.stages[stage] = f"error:{kind}"
        manifest.failure = kind
        for later in STAGES[STAGES.index(stage) + 1:]:
            manifest.stages[later] = "skipped"
        _write_json(os.path.join(run_dir, "manifest.json"),
                    manifest.to_dict())
        return manifest

    def timed(stage, fn):
        t0 = time.monotonic()
        result = fn()
        manifest.timing[stage] = round(time.monotonic() - t0, 4)
        manifest.stages[stage] = "ok"
        return result

    # interpret
    try:
        desc = timed("interpret",
                     lambda: interpret(source, kb, provider, seed=seed))
    except Exception as exc:
        return fail("interpret", exc)
    desc_path = os.path.join(run_dir, "description.json")
    _write(desc_path, ir.serialize_description(desc))
    manifest.artifacts["description"] = desc_path

    # network
    try:
        def build_net():
            if isinstance(source, ir.GpsBoundingBox):
                if cfg.osm_fixture:
                    with open(cfg.osm_fixture, encoding="utf-8") as fh:
                        extract = fh.read()
                else:
                    extract = netgen.fetch_osm_extract(source,
                                                       cfg.osm_cache_dir)
                return netgen.ingest_osm(source, extract)
            return netgen.compile_network(desc.road, kb, provider, seed=seed)
        net = timed("netgen", build_net)
    except Exception as exc:
        return fail("netgen", exc)
    xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
    nod_path = os.path.join(run_dir, "network.nod.xml")
    edg_path = os.path.join(run_dir, "network.edg.xml")
    _write(nod_path, xml_nodes)
    _write(edg_path, xml_edges)
    manifest.artifacts["network_nodes"] = nod_path
    manifest.artifacts["network_edges"] = edg_path

    # placement
    try:
        def place():
            constraints = compgen.PlacementConstraints(
                min_gap=cfg.min_gap, max_agents=cfg.max_agents, seed=seed)
            agents = compgen.generate_agents(desc, net, constraints, kb,
                                             provider)
            objects = compgen.generate_objects(desc, net, constraints, kb,
                                               provider)
            return ir.ScenarioBundle(description=desc, network=net,
                                     agents=tuple(agents),
                                     objects=tuple(objects),
                                     weather=desc.weather, seed=seed)
        bundle = timed("compgen", place)
    except Exception as exc:
        return fail("compgen", exc)
    bundle_path = os.path.join(run_dir, "bundle.json")
    _write_json(bundle_path, _bundle_to_dict(bundle))
    manifest.artifacts["bundle"] = bundle_path

    # simulation
    try:
        trace = timed("simulate",
                      lambda: simcore.run(bundle, cfg.duration, cfg.dt))
    except Exception as exc:
        return fail("simulate", exc)
    trace_path = os.path.join(run_dir, "trace.jsonl")
    _write(trace_path, simcore.export_trace(trace))
    manifest.artifacts["trace"] = trace_path

    # evaluation
    try:
        def evaluate():
            av = next(a for a in bundle.agents if a.role == "AV")
            route = simcore.plan_route(net, av.edge_id)
            route_len = simcore.route_length(net, route)
            speed_limit = max(e.speed for e in net.edges)
            perf = evalkit.performance(trace, route_len, speed_limit,
                                       av_id=av.id,
                                       weights=cfg.score_weights,
                                       ttc_ref=cfg.ttc_ref,
                                       jerk_ref=cfg.jerk_ref)
            embedder = evalkit.HashingEmbedder()
            dist = evalkit.objective_distance(desc, bundle, embedder)
            return {
                "behavior_model": "parametric car-following substitute",
                "objective_distance": round(dist, 6),
                "performance": dataclasses.asdict(perf),
                "scene_class": evalkit.classify_bundle(bundle),
                "trace_hash": trace.hash(),
                "collisions": len(trace.collisions),
            }
        report = timed("evaluate", evaluate)
    except Exception as exc:
        return fail("evaluate", exc)
    report_path = os.path.join(run_dir, "report.json")
    _write_json(report_path, report)
    manifest.artifacts["report"] = report_path

    _write_json(os.path.join(run_dir, "manifest.json"), manifest.to_dict())
    return manifest


def _load_bundle_pair(manifest: RunManifest):
    with open(manifest.artifacts["description"], encoding="utf-8") as fh:
        desc = ir.parse_description(fh.read())
    with open(manifest.artifacts["bundle"], encoding="utf-8") as fh:
        data = json.load(fh)
    net = netgen.RoadNetwork(
        nodes=tuple(netgen.Node(**n) for n in data["network"]["nodes"]),
        edges=tuple(netgen.Edge(
            id=e["id"], from_node=e["from_node"], to_node=e["to_node"],
            num_lanes=e["num_lanes"], speed=e["speed"],
            spread_type=e["spread_type"],
            lanes=tuple(netgen.Lane(index=l["index"],
                                    shape=tuple(map(tuple, l["shape"])))
                        for l in e["lanes"]))
            for e in data["network"]["edges"]))
    agents = tuple(compgen.AgentState(**a) for a in data["agents"])
    objects = tuple(compgen.PlacedObject(
        kind=o["kind"], x=o["x"], y=o["y"], yaw=o["yaw"],
        footprint=tuple(o["footprint"])) for o in data["objects"])
    bundle = ir.ScenarioBundle(description=desc, network=net, agents=agents,
                               objects=objects, weather=desc.weather,
                               seed=data["seed"])
    return desc, bundle


def run_batch(inputs, cfg: PipelineConfig,
              kb: Optional[ir.PromptKnowledgeBase] = None) -> dict:
    """Diversify each input into cfg.variations seeded runs and aggregate
    conformity + diversity over the whole batch. Partial failures are
    recorded and the batch continues."""
    if not inputs:
        raise ConfigError("batch needs >= 1 input")
    manifests = []
    for i, source in enumerate(inputs):
        for v in range(cfg.variations):
            seed = cfg.global_seed + i * 1000 + v
            run_id = f"batch-i{i:03d}-v{v:02d}"
            manifests.append(run_pipeline(source, cfg, seed=seed,
                                          run_id=run_id, kb=kb))

    outcomes = [{"ok": m.ok, "failure": m.failure} for m in manifests]
    pairs, bundles = [], []
    for m in manifests:
        if "bundle" in m.artifacts:
            desc, bundle = _load_bundle_pair(m)
            pairs.append((desc, bundle))
            bundles.append(bundle)

    conf = evalkit.conformity(pairs, outcomes)
    aggregate = {
        "behavior_model": "parametric car-following substitute",
        "runs": len(manifests),
        "ok": sum(1 for m in manifests if m.ok),
        "conformity": {
            "scene_type_acc": conf.scene_type_acc,
            "vehicle_attr_acc": conf.vehicle_attr_acc,
            "static_obj_attr_acc": conf.static_obj_attr_acc,
            "success_rate": conf.success_rate,
            "failure_taxonomy_counts": conf.failure_taxonomy_counts,
        },
    }
    if bundles:
        table = evalkit.diversity_from_bundles(bundles)
        aggregate["diversity"] = {k: list(v) for k, v in table.items()}
        aggregate["diversity_table"] = evalkit.format_diversity_table(table)
    _write_json(os.path.join(cfg.output_dir, "aggregate.json"), aggregate)
    return aggregate


def ablate(cfg: PipelineConfig, inputs=None) -> dict:
    """Success-rate table after removing named prompt components."""
    if inputs is None:
        inputs = [ir.TextRequest("two cars on a straight road, one cuts in"),
                  ir.TextRequest("construction zone lane closure with cones"),
                  ir.TextRequest("busy intersection left turn conflict")]
    kb_full = default_knowledge_base()
    knob_map = {
        "Ours": {},
        "without interpreter": {"no_interpreter": True},
        "without prior knowledge": {"no_prior_knowledge": True},
        "without reasoning section": {"no_reasoning_section": True},
    }
    rates = {}
    for row in ABLATION_ROWS:
        kb = strip_knowledge(kb_full, **knob_map[row])
        sub = dataclasses.replace(
            cfg, variations=1,
            output_dir=os.path.join(cfg.output_dir, "ablate",
                                    row.replace(" ", "_")))
        ok = 0
        for i, source in enumerate(inputs):
            m = run_pipeline(source, sub, seed=cfg.global_seed + i,
                             run_id=f"ablate-{i:02d}", kb=kb)
            ok += 1 if m.ok else 0
        rates[row] = ok / len(inputs)
    result = {"rows": list(ABLATION_ROWS), "success_rate": rates}
    _write_json(os.path.join(cfg.output_dir, "ablation.json"), result)
    return result


def format_ablation(result: dict) -> str:
    width = max(len(r) for r in result["rows"]) + 2
    lines = [f"{'Metrics'.ljust(width)}Success rate"]
    for row in result["rows"]:
        lines.append(f"{row.ljust(width)}{result['success_rate'][row]:.2f}")
    return "\n".join(lines)


_COMPARISON_FIXTURES = (
    "two cars on a curved road, one cuts in ahead",
    "busy intersection left turn conflict with three vehicles",
    "construction zone lane closure with cones and two cars",
    "highway merge with a truck and two cars",
    "straight road at night, lead vehicle rear-end risk",
)


def run_comparison(cfg: PipelineConfig, n_networks: int = 5,
                   n_inits: int = 5) -> dict:
    """A/B harness: guided placement vs the RandomTrip-style baseline on the
    same networks, n_networks x n_inits runs per arm."""
    kb = default_knowledge_base()
    provider = make_provider(cfg)
    ours, baseline = [], []
    for ni in range(n_networks):
        text = _COMPARISON_FIXTURES[ni % len(_COMPARISON_FIXTURES)]
        desc = interpret(ir.TextRequest(text), kb, provider, seed=ni)
        net = netgen.compile_network(desc.road, kb, provider, seed=ni)
        speed_limit = max(e.speed for e in net.edges)
        for vi in range(n_inits):
            seed = cfg.global_seed + ni * 100 + vi
            constraints = compgen.PlacementConstraints(
                min_gap=cfg.min_gap, max_agents=cfg.max_agents, seed=seed)
            placements = {
                "ours": compgen.generate_agents(desc, net, constraints),
                "baseline": compgen.random_trip_placement(
                    net, len(desc.agents), seed=seed),
            }
            for arm, agents in placements.items():
                bundle = ir.ScenarioBundle(
                    description=desc, network=net, agents=tuple(agents),
                    objects=tuple(compgen.generate_objects(desc, net,
                                                           constraints)),
                    weather=desc.weather, seed=seed)
                trace = simcore.run(bundle, cfg.duration, cfg.dt)
                av = next(a for a in bundle.agents if a.role == "AV")
                route = simcore.plan_route(net, av.edge_id)
                perf = evalkit.performance(
                    trace, simcore.route_length(net, route), speed_limit,
                    av_id=av.id, weights=cfg.score_weights,
                    ttc_ref=cfg.ttc_ref, jerk_ref=cfg.jerk_ref)
                (ours if arm == "ours" else baseline).append(perf)
    report = evalkit.compare_pipelines(ours, baseline)
    out = {"rows": report["rows"],
           "ours": {k: list(v) if v[1] is not None else [v[0]]
                    for k, v in report["ours"].items()},
           "baseline": {k: list(v) if v[1] is not None else [v[0]]
                        for k, v in report["baseline"].items()},
           "table": evalkit.format_comparison(report)}
    _write_json(os.path.join(cfg.output_dir, "comparison.json"), out)
    return report
