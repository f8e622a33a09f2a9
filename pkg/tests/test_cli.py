import json

from scenarioforge import cli

from test_netgen import OSM_FIXTURE
from validator_cases import GOOD_EDGES, GOOD_NODES


def run_cli(*argv):
    return cli.main(list(argv))


def test_run_happy_path(tmp_path, capsys):
    code = run_cli("run", "--text", "a car cuts in front of the ego vehicle",
                   "--output-dir", str(tmp_path), "--seed", "1",
                   "--duration", "5")
    assert code == 0
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["failure"] is None
    assert len(manifest["artifacts"]) >= 5
    run_dirs = list((tmp_path / "runs").iterdir())
    assert len(run_dirs) == 1
    names = {p.name for p in run_dirs[0].iterdir()}
    assert {"description.json", "network.nod.xml", "network.edg.xml",
            "bundle.json", "trace.jsonl", "report.json",
            "manifest.json"} <= names


def test_run_text_file_input(tmp_path, capsys):
    req = tmp_path / "req.txt"
    req.write_text("two cars near a construction zone\n")
    code = run_cli("run", "--text-file", str(req),
                   "--output-dir", str(tmp_path / "out"), "--duration", "5")
    assert code == 0


def test_run_crash_report_input(tmp_path, capsys):
    rep = tmp_path / "crash.txt"
    rep.write_text("The vehicle entered the intersection and struck a "
                   "cyclist crossing from the right side of the road.")
    code = run_cli("run", "--crash-report", str(rep),
                   "--output-dir", str(tmp_path / "out"), "--duration", "5")
    assert code == 0


def test_run_provider_fault_exits_nonzero(tmp_path, capsys):
    code = run_cli("run", "--text", "a car", "--provider-fault", "hash_ids",
                   "--output-dir", str(tmp_path))
    assert code == 1
    manifest = json.loads(capsys.readouterr().out)
    assert manifest["failure"] == "MalformedKeyword"


def test_run_without_input_is_config_error(tmp_path, capsys):
    code = run_cli("run", "--output-dir", str(tmp_path))
    assert code == 2


def test_run_bbox_with_fixture(tmp_path, capsys):
    fixture = tmp_path / "extract.osm"
    fixture.write_text(OSM_FIXTURE)
    code = run_cli("run", "--bbox=-0.001,-0.001,0.003,0.002",
                   "--osm-fixture", str(fixture),
                   "--output-dir", str(tmp_path / "out"), "--duration", "5")
    assert code == 0


def test_run_invalid_dt_is_config_error(tmp_path, capsys):
    code = run_cli("run", "--text", "a car", "--dt", "0.7",
                   "--output-dir", str(tmp_path))
    assert code == 2


def test_batch_fixtures(tmp_path, capsys):
    fixtures = tmp_path / "fixtures.txt"
    fixtures.write_text("a car cuts in on the highway\n"
                        "construction zone with three cones\n")
    code = run_cli("batch", "--fixtures", str(fixtures),
                   "--output-dir", str(tmp_path / "out"),
                   "--variations", "1", "--duration", "5")
    assert code == 0
    out = capsys.readouterr().out
    assert "Route Length" in out
    assert (tmp_path / "out" / "aggregate.json").exists()


def test_batch_needs_input(tmp_path, capsys):
    assert run_cli("batch", "--output-dir", str(tmp_path)) == 2


def test_ablate_command(tmp_path, capsys):
    code = run_cli("ablate", "--output-dir", str(tmp_path), "--duration", "5")
    assert code == 0
    out = capsys.readouterr().out
    for row in ("Ours", "without interpreter", "without prior knowledge",
                "without reasoning section"):
        assert row in out


def test_compare_command(tmp_path, capsys):
    code = run_cli("compare", "--networks", "2", "--inits", "2",
                   "--output-dir", str(tmp_path), "--duration", "5")
    assert code == 0
    out = capsys.readouterr().out
    assert "Collision rate" in out
    assert "RandomTrip" in out


def test_eval_reprints_aggregate(tmp_path, capsys):
    fixtures = tmp_path / "fixtures.txt"
    fixtures.write_text("a car on a straight road\n")
    run_cli("batch", "--fixtures", str(fixtures),
            "--output-dir", str(tmp_path / "out"), "--variations", "1",
            "--duration", "5")
    capsys.readouterr()
    code = run_cli("eval", str(tmp_path / "out" / "aggregate.json"))
    assert code == 0
    assert "success_rate" in capsys.readouterr().out


def test_netgen_compile_and_stats(tmp_path, capsys):
    prefix = str(tmp_path / "net")
    assert run_cli("netgen", "compile", "--text", "a two lane straight road",
                   "--out-prefix", prefix) == 0
    capsys.readouterr()
    assert run_cli("netgen", "stats", prefix + ".nod.xml",
                   prefix + ".edg.xml") == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["total_edges"] >= 1
    assert stats["total_lanes"] >= 1


def test_netgen_validate(tmp_path, capsys):
    good_n = tmp_path / "n.xml"
    good_e = tmp_path / "e.xml"
    good_n.write_text(GOOD_NODES)
    good_e.write_text(GOOD_EDGES)
    assert run_cli("netgen", "validate", str(good_n), str(good_e)) == 0
    bad_e = tmp_path / "bad.xml"
    bad_e.write_text(GOOD_EDGES.replace('spreadType="right"',
                                        'spreadType="left"'))
    assert run_cli("netgen", "validate", str(good_n), str(bad_e)) == 1
    assert "InvalidEnum" in capsys.readouterr().out


def test_netgen_osm_from_extract(tmp_path, capsys):
    extract = tmp_path / "extract.osm"
    extract.write_text(OSM_FIXTURE)
    prefix = str(tmp_path / "osm-net")
    code = run_cli("netgen", "osm", "--bbox=-0.001,-0.001,0.003,0.002",
                   "--extract", str(extract), "--out-prefix", prefix)
    assert code == 0
    assert (tmp_path / "osm-net.nod.xml").exists()
    assert (tmp_path / "osm-net.edg.xml").exists()


def test_place_command(capsys):
    code = run_cli("place", "--text", "a car cuts in ahead of the ego car",
                   "--seed", "4")
    assert code == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert len(out) >= 2
    assert any("AV" in line for line in out)
