import csv
import io
import json
import math

import pytest

from skyswarm.cli import main
from skyswarm.errors import InvalidParameter, ParseError
from skyswarm.harness import (
    RAW_COLUMNS,
    SUMMARY_COLUMNS,
    ExperimentConfig,
    NetworkParams,
    Variant,
    config_to_json,
    generate_requests,
    load_requests,
    raw_csv,
    run_experiment,
    save_requests,
    summarize,
)
from skyswarm.itinerary import dumps_itinerary, itinerary_from_json
from skyswarm.network import SkywayNetwork, generate_random_network, shortest_path, write_network

SMALL = NetworkParams(node_count=15, edge_density=0.15, seed=3)


def small_config(**kw):
    base = dict(network=SMALL, request_count=12, lookaheads=(0, 1), max_splits=(2,), cooperative=(False, True),
                brute_force=True)
    base.update(kw)
    return ExperimentConfig(**base)


# --- requests --------------------------------------------------------------

def test_requests_deterministic_and_bounded():
    net = generate_random_network(20, 0.2, (1, 4), (50, 400), 0)
    a = generate_requests(net, 300, 5)
    assert a == generate_requests(net, 300, 5)
    assert a != generate_requests(net, 300, 6)
    for r in a:
        assert r.source != r.destination
        assert 2 <= len(r.package_weights_kg) <= 10
        assert all(0 < w <= 5.0 for w in r.package_weights_kg)
    assert {len(r.package_weights_kg) for r in a} == set(range(2, 11))


def test_two_node_network_has_one_pair():
    net = SkywayNetwork([1, 1], [(0, 1, 10.0)])
    assert {(r.source, r.destination) for r in generate_requests(net, 50, 0)} == {(0, 1), (1, 0)}


def test_request_errors():
    net = SkywayNetwork([1, 1], [(0, 1, 10.0)])
    with pytest.raises(InvalidParameter):
        generate_requests(net, 0, 0)
    with pytest.raises(InvalidParameter):
        generate_requests(net, 5, 0, max_packages=1)


def test_request_file_round_trip(tmp_path):
    net = generate_random_network(10, 0.3, (1, 4), (50, 400), 0)
    reqs = generate_requests(net, 7, 2)
    save_requests(reqs, tmp_path / "r.json")
    assert load_requests(tmp_path / "r.json") == reqs


# --- experiments -----------------------------------------------------------

def test_row_cardinality_and_variants():
    cfg = small_config()
    labels = [v.label for v in cfg.variants()]
    assert labels == ["sequential-l0", "sequential-l0-coop", "sequential-l1", "sequential-l1-coop",
                      "parallel-l0-x2", "parallel-l1-x2", "dijkstra", "brute_force"]
    rows = run_experiment(cfg)
    assert len(rows) == 12 * 8
    assert [(r.request_id, r.variant) for r in rows] == [(i, v) for i in range(12) for v in cfg.variants()]


def test_sequential_and_parallel_give_two_rows_per_request():
    cfg = ExperimentConfig(network=NetworkParams(), request_count=100, dijkstra=False)
    rows = run_experiment(cfg)
    assert len(rows) == 200


def test_rows_are_additive_and_hops_inclusive():
    cfg = small_config()
    net = cfg.network.build()
    reqs = generate_requests(net, cfg.request_count, cfg.request_seed)
    for r in run_experiment(cfg):
        assert r.ok
        assert r.travel_min + r.charge_min + r.wait_min == pytest.approx(r.total_min, rel=1e-9)
        req = reqs[r.request_id]
        assert r.hops == len(shortest_path(net, req.source, req.destination)[0])


def test_oracle_column_dominates():
    rows = run_experiment(small_config())
    by = {(r.request_id, r.variant.label): r for r in rows}
    for rid in range(12):
        oracle = by[(rid, "brute_force")]
        if oracle.ok:
            assert oracle.total_min <= by[(rid, "sequential-l0")].total_min
            assert oracle.total_min <= by[(rid, "sequential-l1")].total_min


def test_failed_rows_are_counted_not_averaged():
    cfg = small_config(path_budget=1, lookaheads=(1,), cooperative=(False,))
    rows = run_experiment(cfg)
    oracle_rows = [r for r in rows if r.variant.algorithm == "brute_force"]
    assert any(r.status == "PathBudgetExceeded" for r in oracle_rows)
    for e in summarize(rows, cfg.variants()):
        group = [r for r in rows if r.variant == e["variant"] and r.hops == e["hops"]]
        good = [r.total_min for r in group if r.ok]
        assert e["n"] == len(group)
        assert e["failed"] == len(group) - len(good)
        if good:
            assert e["total_min"] == pytest.approx(sum(good) / len(good))
        else:
            assert math.isnan(e["total_min"])


def test_csv_files(tmp_path):
    cfg = small_config(timing=False)
    rows = run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("results.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    raw = list(csv.reader(io.StringIO((tmp_path / "a" / "results.csv").read_text())))
    assert raw[0] == RAW_COLUMNS
    assert len(raw) == len(rows) + 1
    summary = list(csv.reader(io.StringIO((tmp_path / "a" / "summary.csv").read_text())))
    assert summary[0] == SUMMARY_COLUMNS
    keys = [(row[0], row[1], row[2], row[3], row[4]) for row in summary[1:]]
    assert len(keys) == len(set(keys))
    assert raw_csv(rows) == (tmp_path / "a" / "results.csv").read_text()


def test_config_json_round_trip(tmp_path):
    cfg = small_config(timing=False)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config_to_json(cfg)))
    assert ExperimentConfig.load(path) == cfg


def test_config_rejects_unknown_keys():
    with pytest.raises(ParseError):
        ExperimentConfig.from_json({"planners": {"lookahead": [1]}})
    with pytest.raises(InvalidParameter):
        ExperimentConfig.from_json({"requests": {"count": 0}})


def test_config_network_file_is_relative(tmp_path):
    net = generate_random_network(8, 0.4, (1, 4), (50, 400), 1)
    write_network(net, tmp_path / "net.json")
    (tmp_path / "cfg.json").write_text(json.dumps({"network": {"file": "net.json"}, "requests": {"count": 3}}))
    cfg = ExperimentConfig.load(tmp_path / "cfg.json")
    assert cfg.network.build() == net


# --- CLI -------------------------------------------------------------------

def test_cli_end_to_end(tmp_path, capsys):
    net, reqs = str(tmp_path / "n.json"), str(tmp_path / "r.json")
    assert main(["gen-network", "--nodes", "12", "--density", "0.2", "--seed", "4", "-o", net]) == 0
    assert main(["gen-requests", "--network", net, "--count", "5", "-o", reqs]) == 0
    capsys.readouterr()
    for algo in ("sequential", "parallel", "dijkstra", "brute_force"):
        assert main(["plan", "--network", net, "--requests", reqs, "--index", "2", "--algorithm", algo]) == 0
        out = capsys.readouterr().out
        it_path = tmp_path / f"{algo}.json"
        it_path.write_text(out)
        assert main(["validate", "--network", net, "--itinerary", str(it_path), "--window", "15"]) == 0
        assert capsys.readouterr().out.strip() == "ok"


def test_cli_plan_single_edge(tmp_path, capsys):
    net = tmp_path / "edge.json"
    write_network(SkywayNetwork([1, 1], [(0, 1, 195.0)]), net)
    assert main(["plan", "--network", str(net), "--source", "0", "--dest", "1", "--weights", "5", "2.5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["total_min"] == pytest.approx(180.0)


def test_cli_validate_names_battery_invariant(tmp_path, capsys):
    net = tmp_path / "line.json"
    write_network(SkywayNetwork([1, 2, 1], [(0, 1, 650.0), (1, 2, 650.0)]), net)
    assert main(["plan", "--network", str(net), "--source", "0", "--dest", "2", "--weights", "5", "5", "5"]) == 0
    doc = json.loads(capsys.readouterr().out)
    for leg in doc["legs"]:
        for c in leg.get("charges", ()):
            c["to_pct"] = c["from_pct"]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--network", str(net), "--itinerary", str(bad)]) != 0
    assert "invariant battery" in capsys.readouterr().err


def test_cli_bench_is_reproducible(tmp_path, capsys):
    args = ["bench", "--requests", "6", "--lookaheads", "0", "1", "--brute-force", "--no-timing"]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"network": {"node_count": 12, "edge_density": 0.2, "seed": 1}}))
    assert main(args + ["--config", str(cfg), "-o", str(tmp_path / "a")]) == 0
    assert main(args + ["--config", str(cfg), "-o", str(tmp_path / "b")]) == 0
    for name in ("results.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_errors(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["plan", "--network", missing, "--source", "0", "--dest", "1", "--weights", "1", "1"]) == 1
    (tmp_path / "bad.json").write_text("{")
    assert main(["validate", "--network", str(tmp_path / "bad.json"), "--itinerary", missing]) == 1
    assert "ParseError" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code != 0


def test_itinerary_json_from_cli_parses(tmp_path, capsys):
    net = tmp_path / "edge.json"
    write_network(SkywayNetwork([1, 1], [(0, 1, 65.0)]), net)
    main(["plan", "--network", str(net), "--source", "1", "--dest", "0", "--weights", "1", "1"])
    it = itinerary_from_json(json.loads(capsys.readouterr().out))
    assert json.loads(dumps_itinerary(it))["total_min"] == pytest.approx(60.0)
    assert Variant("parallel", 1, 2).label == "parallel-l1-x2"
