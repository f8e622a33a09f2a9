import math
import random

import pytest

from scenarioforge import ir, netgen
from scenarioforge.interpreter import MockProvider, default_knowledge_base

from conftest import random_network
from oracles import stats_oracle
from validator_cases import CASES, GOOD_EDGES, GOOD_NODES


def straight_road(length=100.0, fwd=2, back=0, speed=13.89):
    return ir.RoadDescription(
        layout="Straight", segments=(ir.RoadSegment(length, fwd, back, speed),))


# ---------------------------------------------------------------------------
# layout blueprints

def test_straight_blueprint():
    net = netgen.build_network_blueprint(straight_road())
    assert len(net.nodes) == 2
    assert len(net.edges) == 1
    edge = net.edges[0]
    assert edge.num_lanes == 2
    assert netgen.edge_length(net, edge) == pytest.approx(100.0)
    stats = netgen.network_stats(net)
    assert stats.total_lanes == 2
    assert stats.total_edges == 1
    assert stats.route_length == pytest.approx(100.0)
    assert stats.pairwise_junction_distance == 0.0


def test_straight_two_way_has_edge_pair():
    net = netgen.build_network_blueprint(straight_road(fwd=1, back=1))
    assert len(net.edges) == 2
    dirs = {(e.from_node, e.to_node) for e in net.edges}
    assert dirs == {("n0", "n1"), ("n1", "n0")}


def test_cross_intersection_blueprint():
    road = ir.RoadDescription(
        layout="CrossIntersection",
        segments=(ir.RoadSegment(50.0, 1, 1, 13.89),))
    net = netgen.build_network_blueprint(road)
    assert len(net.nodes) == 5
    assert len(net.edges) == 8
    assert net.node("c").node_type == "traffic_light"
    stats = netgen.network_stats(net)
    # arm -> center -> opposite arm
    assert stats.route_length == pytest.approx(100.0)
    # the single junction contributes no pairwise distance
    assert stats.pairwise_junction_distance == 0.0


def test_tjunction_blueprint():
    road = ir.RoadDescription(
        layout="TJunction", segments=(ir.RoadSegment(40.0, 1, 1, 10.0),))
    net = netgen.build_network_blueprint(road)
    assert len(net.nodes) == 4
    assert len(net.edges) == 6
    assert net.node("c").node_type == "priority"


def test_merge_blueprint_joins_two_ramps():
    road = ir.RoadDescription(
        layout="Merge", segments=(ir.RoadSegment(60.0, 1, 0, 20.0),
                                  ir.RoadSegment(80.0, 1, 0, 20.0)))
    net = netgen.build_network_blueprint(road)
    incoming = [e for e in net.edges if e.to_node == "m"]
    outgoing = [e for e in net.edges if e.from_node == "m"]
    assert len(incoming) == 2 and len(outgoing) == 1
    conns = {(c.from_edge, c.to_edge) for c in net.connections}
    assert ("ramp_a", "main") in conns and ("ramp_b", "main") in conns


def test_roundabout_blueprint_ring_is_cyclic():
    road = ir.RoadDescription(
        layout="Roundabout", segments=(ir.RoadSegment(100.0, 1, 1, 8.0),))
    net = netgen.build_network_blueprint(road)
    ring = [e for e in net.edges if e.id.startswith("ring")]
    assert len(ring) == 4
    conns = {(c.from_edge, c.to_edge) for c in net.connections}
    for i in range(4):
        assert (f"ring{i}", f"ring{(i + 1) % 4}") in conns


def test_every_layout_builds_a_valid_network():
    for layout in ir.ROAD_LAYOUTS:
        road = ir.RoadDescription(
            layout=layout, segments=(ir.RoadSegment(60.0, 1, 1, 13.89),))
        net = netgen.build_network_blueprint(road)
        xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
        assert netgen.validate_network(xml_nodes, xml_edges) == [], layout


def test_connections_skip_uturns():
    road = ir.RoadDescription(
        layout="Straight", segments=(ir.RoadSegment(50.0, 1, 1, 13.89),
                                     ir.RoadSegment(50.0, 1, 1, 13.89)))
    net = netgen.build_network_blueprint(road)
    conns = {(c.from_edge, c.to_edge) for c in net.connections}
    assert ("e0f", "e1f") in conns
    assert ("e1b", "e0b") in conns
    assert ("e0f", "e0b") not in conns
    assert ("e1b", "e1f") not in conns


# ---------------------------------------------------------------------------
# geometry

def test_point_along_midpoint_and_heading():
    poly = ((0.0, 0.0), (100.0, 0.0))
    x, y, heading = netgen.point_along(poly, 50.0)
    assert (x, y) == (50.0, 0.0)
    assert heading == 0.0
    x, y, heading = netgen.point_along(tuple(reversed(poly)), 50.0)
    assert (x, y) == (50.0, 0.0)
    assert heading == 180.0


def test_point_along_clamps_to_ends():
    poly = ((0.0, 0.0), (10.0, 0.0))
    assert netgen.point_along(poly, -5.0)[:2] == (0.0, 0.0)
    assert netgen.point_along(poly, 50.0)[:2] == (10.0, 0.0)


def test_heading_range_open_at_minus_180():
    # due west travel must report +180, never -180
    poly = ((10.0, 0.0), (0.0, 0.0))
    _, _, heading = netgen.point_along(poly, 1.0)
    assert heading == 180.0
    assert -180.0 < heading <= 180.0


def test_lane_centerline_right_spread_offsets():
    net = netgen.build_network_blueprint(straight_road(fwd=2))
    edge = net.edges[0]
    lane0 = netgen.lane_centerline(net, edge, 0)
    lane1 = netgen.lane_centerline(net, edge, 1)
    # travel along +x: right side is -y
    assert lane0[0][1] == pytest.approx(-0.5 * netgen.DEFAULT_LANE_WIDTH)
    assert lane1[0][1] == pytest.approx(-1.5 * netgen.DEFAULT_LANE_WIDTH)


def test_lane_centerline_center_spread_is_symmetric():
    net = netgen.RoadNetwork(
        (netgen.Node("a", 0, 0), netgen.Node("b", 100, 0)),
        (netgen.Edge("e", "a", "b", num_lanes=2, spread_type="center"),))
    lane0 = netgen.lane_centerline(net, net.edges[0], 0)
    lane1 = netgen.lane_centerline(net, net.edges[0], 1)
    assert lane0[0][1] == pytest.approx(-lane1[0][1])


# ---------------------------------------------------------------------------
# validation taxonomy

@pytest.mark.parametrize("name,kind,bad_n,bad_e,good_n,good_e", CASES,
                         ids=[c[0] for c in CASES])
def test_validator_taxonomy(name, kind, bad_n, bad_e, good_n, good_e):
    errors = netgen.validate_network(bad_n, bad_e)
    assert kind in {e.kind for e in errors}, name
    assert netgen.validate_network(good_n, good_e) == []


def test_validator_clean_baseline():
    assert netgen.validate_network(GOOD_NODES, GOOD_EDGES) == []


def test_validator_unparseable_xml():
    errors = netgen.validate_network("<nodes><node", GOOD_EDGES)
    assert errors[0].kind == "MalformedDocument"


def test_parse_raises_with_all_errors():
    bad = GOOD_EDGES.replace('spreadType="right"',
                             'spreadType="left" function="internal"')
    with pytest.raises(netgen.NetworkValidationError) as exc:
        netgen.parse_sumo_xml(GOOD_NODES, bad)
    kinds = {e.kind for e in exc.value.errors}
    assert {"InvalidEnum", "UndeclaredAttribute"} <= kinds


# ---------------------------------------------------------------------------
# serialization round trip

def test_serialize_attribute_spelling():
    net = netgen.build_network_blueprint(straight_road())
    xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
    assert "<nodes>" in xml_nodes and 'type="priority"' in xml_nodes
    assert 'numLanes="2"' in xml_edges
    assert 'spreadType="right"' in xml_edges
    assert 'from="n0" to="n1"' in xml_edges


def test_round_trip_simple():
    net = netgen.build_network_blueprint(straight_road())
    xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
    assert netgen.parse_sumo_xml(xml_nodes, xml_edges) == net


def test_round_trip_random_networks():
    rng = random.Random(11)
    for _ in range(60):
        net = random_network(rng)
        xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
        parsed = netgen.parse_sumo_xml(xml_nodes, xml_edges)
        assert parsed == net
        # serialize again: byte identical
        assert netgen.serialize_sumo_xml(parsed) == (xml_nodes, xml_edges)


def test_lane_shapes_survive_round_trip():
    lane = netgen.Lane(0, ((0.0, 0.0), (30.5, 4.25), (61.0, 0.0)))
    net = netgen.RoadNetwork(
        (netgen.Node("a", 0, 0), netgen.Node("b", 61, 0)),
        (netgen.Edge("e", "a", "b", num_lanes=1, lanes=(lane,)),))
    xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
    parsed = netgen.parse_sumo_xml(xml_nodes, xml_edges)
    assert parsed.edges[0].lanes[0].shape == lane.shape


# ---------------------------------------------------------------------------
# statistics

def test_stats_match_floyd_warshall_oracle():
    rng = random.Random(23)
    for _ in range(40):
        net = random_network(rng)
        stats = netgen.network_stats(net)
        lanes, edges, route, pjd = stats_oracle(net)
        assert stats.total_lanes == lanes
        assert stats.total_edges == edges
        assert stats.route_length == pytest.approx(route, abs=1e-9)
        assert stats.pairwise_junction_distance == pytest.approx(pjd, abs=1e-9)


def test_stats_use_largest_component():
    nodes = (netgen.Node("a", 0, 0), netgen.Node("b", 100, 0),
             netgen.Node("c", 0, 500), netgen.Node("d", 10, 500),
             netgen.Node("e", 20, 500))
    edges = (netgen.Edge("e0", "a", "b"),
             netgen.Edge("e1", "c", "d"), netgen.Edge("e2", "d", "e"))
    net = netgen.RoadNetwork(nodes, edges)
    # largest component is c-d-e with total length 20, not the 100 m edge
    assert netgen.network_stats(net).route_length == pytest.approx(20.0)


def test_stats_relabel_invariance(rng):
    net = random_network(rng)
    mapping = {n.id: f"node-{i}" for i, n in enumerate(reversed(net.nodes))}
    nodes = tuple(netgen.Node(mapping[n.id], n.x, n.y, n.node_type)
                  for n in net.nodes)
    edges = tuple(
        netgen.Edge(f"edge-{i}", mapping[e.from_node], mapping[e.to_node],
                    e.num_lanes, e.speed, e.spread_type, e.lanes)
        for i, e in enumerate(net.edges))
    relabeled = netgen.RoadNetwork(nodes, edges)
    s1, s2 = netgen.network_stats(net), netgen.network_stats(relabeled)
    assert s1.route_length == pytest.approx(s2.route_length)
    assert s1.total_lanes == s2.total_lanes
    assert s1.pairwise_junction_distance == \
        pytest.approx(s2.pairwise_junction_distance)


def test_parallel_edges_use_shorter():
    nodes = (netgen.Node("a", 0, 0), netgen.Node("b", 100, 0))
    lane = netgen.Lane(0, ((0.0, 0.0), (50.0, 80.0), (100.0, 0.0)))
    edges = (netgen.Edge("straight", "a", "b"),
             netgen.Edge("detour", "a", "b", lanes=(lane,)))
    net = netgen.RoadNetwork(nodes, edges)
    assert netgen.network_stats(net).route_length == pytest.approx(100.0)


# ---------------------------------------------------------------------------
# provider-backed compilation

def test_compile_network_happy_path():
    kb = default_knowledge_base()
    net = netgen.compile_network(straight_road(), kb, MockProvider())
    assert len(net.nodes) == 2 and len(net.edges) == 1
    assert net.edges[0].num_lanes == 2


def test_compile_network_persistent_fault_fails():
    kb = default_knowledge_base()
    with pytest.raises(netgen.CompileFailed) as exc:
        netgen.compile_network(straight_road(), kb,
                               MockProvider(fault="bad_spread"),
                               max_retries=2)
    assert any(e.kind == "InvalidEnum" and "spreadType=left" in e.detail
               for e in exc.value.errors)


def test_compile_network_hash_ids_reported_as_malformed_keyword():
    kb = default_knowledge_base()
    with pytest.raises(netgen.CompileFailed) as exc:
        netgen.compile_network(straight_road(), kb,
                               MockProvider(fault="hash_ids"), max_retries=1)
    assert any(e.kind == "MalformedKeyword" for e in exc.value.errors)


def test_compile_network_recovers_from_prose_once():
    kb = default_knowledge_base()
    provider = MockProvider(fault="prose_once")
    net = netgen.compile_network(straight_road(), kb, provider)
    assert len(net.edges) == 1
    assert provider._calls == 2


# ---------------------------------------------------------------------------
# OSM ingestion

OSM_FIXTURE = """<osm version="0.6">
  <node id="1" lat="0.000" lon="0.000"/>
  <node id="2" lat="0.001" lon="0.000"/>
  <node id="3" lat="0.002" lon="0.000"/>
  <node id="4" lat="0.001" lon="0.001"/>
  <way id="10">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/>
    <tag k="highway" v="residential"/>
    <tag k="lanes" v="2"/>
    <tag k="maxspeed" v="50"/>
  </way>
  <way id="11">
    <nd ref="4"/><nd ref="2"/>
    <tag k="highway" v="residential"/>
    <tag k="oneway" v="yes"/>
  </way>
  <way id="12">
    <nd ref="1"/><nd ref="4"/>
    <tag k="highway" v="footway"/>
  </way>
</osm>"""

BBOX = ir.GpsBoundingBox(-0.001, -0.001, 0.003, 0.002)


def test_ingest_osm_counts():
    net = netgen.ingest_osm(BBOX, OSM_FIXTURE)
    assert len(net.nodes) == 4
    # way 10 splits at the shared node and is two-way: 4 directed edges;
    # way 11 is one-way: 1 edge; the footway is dropped
    assert len(net.edges) == 5
    assert sum(e.num_lanes for e in net.edges) == 9


def test_ingest_osm_geometry_and_tags():
    net = netgen.ingest_osm(BBOX, OSM_FIXTURE)
    two_lane = [e for e in net.edges if e.num_lanes == 2]
    assert len(two_lane) == 4
    assert two_lane[0].speed == pytest.approx(50 / 3.6)
    # 0.001 deg of latitude is ~111 m
    length = netgen.edge_length(net, two_lane[0])
    assert 100.0 < length < 120.0
    # output passes its own validation
    xml_nodes, xml_edges = netgen.serialize_sumo_xml(net)
    assert netgen.validate_network(xml_nodes, xml_edges) == []


def test_ingest_osm_rejects_undrivable_extract():
    only_footway = """<osm><node id="1" lat="0" lon="0.0005"/>
      <node id="2" lat="0.001" lon="0.0005"/>
      <way id="9"><nd ref="1"/><nd ref="2"/>
      <tag k="highway" v="footway"/></way></osm>"""
    with pytest.raises(netgen.EmptyExtract):
        netgen.ingest_osm(BBOX, only_footway)


def test_ingest_osm_rejects_garbage():
    with pytest.raises(netgen.EmptyExtract):
        netgen.ingest_osm(BBOX, "not xml at all <<")


def test_fetch_osm_extract_uses_cache(tmp_path):
    import hashlib
    key = hashlib.sha256(
        f"{BBOX.min_lat},{BBOX.min_lon},{BBOX.max_lat},{BBOX.max_lon}"
        .encode()).hexdigest()[:16]
    cached = tmp_path / f"osm-{key}.xml"
    cached.write_text(OSM_FIXTURE, encoding="utf-8")
    # no network access happens on a cache hit
    assert netgen.fetch_osm_extract(BBOX, str(tmp_path)) == OSM_FIXTURE
