import csv
import json

import numpy as np
import pytest

from imdpp.cli import main
from imdpp.errors import ConfigError
from imdpp.graph_model import count_meta_instances
from imdpp.harness import (Dataset, ExperimentConfig, SyntheticSpec, cell_seed,
                           generate_synthetic, run_experiment, solve, standard_metagraphs)
from imdpp.dysim import DysimConfig
from imdpp.world import Params

SMALL = {"users": 12, "items": 3, "edge_density": 0.25, "seed": 2}


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_tiny_spec_is_valid():
    ds = generate_synthetic(SyntheticSpec(users=1, items=1, features=1, brands=1, categories=1))
    w = ds.world()
    assert w.n == 1 and w.k == 1 and np.isfinite(w.costs).all()


def test_same_seed_same_files(tmp_path):
    generate_synthetic(SyntheticSpec(**SMALL)).save(tmp_path / "a")
    generate_synthetic(SyntheticSpec(**SMALL)).save(tmp_path / "b")
    for f in (tmp_path / "a").iterdir():
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_dataset_roundtrip(tmp_path):
    ds = generate_synthetic(SyntheticSpec(**SMALL))
    ds.save(tmp_path)
    back = Dataset.load(tmp_path)
    a, b = ds.world(), back.world()
    assert np.array_equal(a.costs, b.costs) and np.array_equal(a.init.pref, b.init.pref)
    assert np.array_equal(a.s_c, b.s_c) and np.array_equal(a.pact0, b.pact0)


def test_product_layout_spec():
    spec = SyntheticSpec(users=3, items=4, features=4, brands=1, categories=2,
                         supports={"i0": ["f0", "f1"], "i1": ["f0"], "i2": ["f1"], "i3": ["f2"]},
                         item_brand={"i0": "b0", "i1": "b0"}, seed=1)
    ds = generate_synthetic(spec)
    m1 = next(m for m in standard_metagraphs() if m.id == "m_feature")
    assert count_meta_instances(ds.kg, m1, "i0", "i1") == 1


@pytest.mark.parametrize("bad, key", [({"b": 0}, "budgets"), ({"T": 0}, "promotions"),
                                      ({"samples": 0}, "samples"), ({"solvers": ["x"]}, "solvers"),
                                      ({"nonsense": 1}, "nonsense"), ({"workers": 0}, "workers")])
def test_config_errors_name_the_key(bad, key):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"synthetic": SMALL, **bad})
    assert info.value.key == key


def test_config_needs_exactly_one_source(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"dataset": str(tmp_path / "missing")})


def test_empty_solver_list_gives_header_only(tmp_path):
    cfg = ExperimentConfig.from_dict({"synthetic": SMALL, "solvers": [], "output": str(tmp_path)})
    rows = read_rows(run_experiment(cfg, log=None))
    assert rows == [["solver", "b", "T", "sigma", "stderr", "time_ms", "cost_used"]]


def test_run_is_reproducible_and_leaves_dataset_alone(tmp_path):
    data = tmp_path / "data"
    generate_synthetic(SyntheticSpec(**SMALL)).save(data)
    before = {f.name: f.read_bytes() for f in data.iterdir()}
    out = []
    for name in ("r1", "r2"):
        cfg = ExperimentConfig.from_dict({"dataset": str(data), "b": [2, 4], "T": [2],
                                          "samples": 30, "output": str(tmp_path / name),
                                          "solvers": ["dysim", "greedy1", "degree", "random"]})
        rows = read_rows(run_experiment(cfg, log=None))
        out.append([r[:5] + r[6:] for r in rows])
    assert out[0] == out[1]
    assert {f.name: f.read_bytes() for f in data.iterdir()} == before


def test_cell_seeds_differ():
    assert len({cell_seed(0, i) for i in range(50)}) == 50


def test_greedy_sigma_grows_with_budget():
    w = generate_synthetic(SyntheticSpec(users=20, items=2, edge_density=0.2, seed=3)).world()
    from imdpp.diffusion import mean_stderr, sample_keys, sample_values, seed_array
    keys = sample_keys(1, 300)
    prev = None
    for b in (1.0, 2.0, 4.0):
        s = solve(w, "greedy1", b, 1, DysimConfig(samples=50))
        v = sample_values(w, seed_array(w, s, 1), 1, keys)[0] if s else np.zeros(300)
        if prev is not None:
            d = v - prev
            assert d.mean() >= -3 * mean_stderr(d)[1]
        prev = v


def test_opt_dominates_dysim_on_tiny_world():
    spec = SyntheticSpec(users=3, items=2, edge_density=0.6, seed=5)
    w = generate_synthetic(spec).world(Params())
    cfg = DysimConfig(samples=100)
    from imdpp.diffusion import sample_keys, sample_values, seed_array
    keys = sample_keys(9, 1000)
    opt = solve(w, "opt", 2.0, 2, cfg)
    dys = solve(w, "dysim", 2.0, 2, cfg)
    vo = sample_values(w, seed_array(w, opt, 2), 2, keys)[0]
    vd = sample_values(w, seed_array(w, dys, 2), 2, keys)[0] if dys else np.zeros(1000)
    d = vd - vo
    assert d.mean() <= 3 * d.std(ddof=1) / np.sqrt(len(d))


def test_all_solvers_run():
    w = generate_synthetic(SyntheticSpec(users=4, items=2, edge_density=0.5, seed=1)).world()
    for s in ("dysim", "dysim-adaptive", "smk", "opt", "degree", "random", "greedy1"):
        seeds = solve(w, s, 1.5, 2, DysimConfig(samples=20))
        assert sum(w.cost(u, x) for u, x, _ in seeds) <= 1.5 + 1e-9


# ------------------------------------------------------------------ CLI

def test_cli_generate_run_estimate(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SMALL))
    assert main(["generate", "--spec", str(spec), "--out", str(tmp_path / "ds")]) == 0
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": "ds", "b": 2, "T": 2, "samples": 20,
                               "output": "out", "write_traces": True}))
    assert main(["run", "--config", str(cfg), "--solver", "degree"]) == 0
    rows = read_rows(tmp_path / "out" / "metrics.csv")
    assert [r[0] for r in rows[1:]] == ["degree"]
    trace = (tmp_path / "out" / "trace_degree_b2_T2.jsonl").read_text().splitlines()
    assert set(json.loads(trace[0])) == {"t", "step", "user", "item", "kind"}
    est = tmp_path / "est.csv"
    assert main(["estimate", "--dataset", str(tmp_path / "ds"), "--seeds",
                 str(tmp_path / "out" / "seeds_degree_b2_T2.csv"), "--T", "2",
                 "--out", str(est)]) == 0
    assert read_rows(est)[0] == ["sigma", "stderr", "samples", "seed"]


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"synthetic": SMALL, "b": -1}))
    assert main(["run", "--config", str(cfg)]) == 2
    assert "budgets" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 2


def test_cli_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--check", "1", "--check", "2"]) == 0
    assert main(["verify", "--check", "1", "--perturb-dr"]) == 1
    cfg = tmp_path / "v.json"
    cfg.write_text(json.dumps({"checks": [2], "bogus": 1}))
    assert main(["verify", "--config", str(cfg)]) == 2
