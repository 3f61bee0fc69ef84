import csv
import io
import math
import os

import numpy as np
import pytest

from surrogate_ea import cli
from surrogate_ea.benchmarks import make_problem
from surrogate_ea.evolution import PopulationConfig
from surrogate_ea.harness import (CSV_COLUMNS, ConfigError, ExperimentConfig, ReportRow,
                                  aggregate, apply_override, config_from_mapping,
                                  method_config, parse_config_text, read_raw, render_table,
                                  run_experiment)
from surrogate_ea.optimizers import DafheaConfig, run_canonical_ga


def row(**kw):
    base = dict(method="dafhea", function="sphere", dim=5, noisy=False, replicates=10,
                mean_best_fitness=1.23456e-7, std_best_fitness=2.0e-8, mean_true_evals=4321.25,
                mean_generations=250.0, wall_ms=1234.4)
    base.update(kw)
    return ReportRow(**base)


def strip_wall(text):
    rows = list(csv.reader(io.StringIO(text)))
    for cols in ("wall_ms",):
        if cols in rows[0]:
            k = rows[0].index(cols)
            for r in rows:
                del r[k]
    return rows


# rendering

def test_render_one_row_csv():
    text = render_table([row()], "csv")
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1] == "dafhea,sphere,5,false,10,1.235e-07,2.000e-08,4321.2,250.0,1234"


def test_render_markdown_same_cells():
    rows = [row(), row(method="prefrank", noisy=True, mean_best_fitness=3.0)]
    csv_cells = list(csv.reader(io.StringIO(render_table(rows, "csv"))))
    md = render_table(rows, "markdown").splitlines()
    assert md[1].startswith("|---")
    md_cells = [[c.strip() for c in line.strip("|").split("|")] for line in md if line[1:4] != "---"]
    assert md_cells == csv_cells


def test_render_fitness_scientific():
    text = render_table([row(mean_best_fitness=0.5, std_best_fitness=12345.0)], "csv")
    cells = text.splitlines()[1].split(",")
    assert cells[5] == "5.000e-01" and cells[6] == "1.234e+04"


# config

def test_parse_config_text_comments_and_lists():
    kv = parse_config_text("""
        # a grid
        methods = dafhea, prefrank   # trailing comment
        functions = sphere
        dims = 5,10
        dafhea.policy.k = 1
    """)
    cfg = config_from_mapping(kv)
    assert len(cfg.cells) == 4
    assert method_config(cfg, "dafhea").policy.k == 1


def test_noisy_both_doubles_cells():
    cfg = config_from_mapping({"methods": "dafhea2", "functions": "sphere", "noisy": "both"})
    assert [c[3] for c in cfg.cells] == [False, True]


@pytest.mark.parametrize("kv", [
    {"methods": "cmaes", "functions": "sphere"},
    {"methods": "dafhea", "functions": "ackley"},
    {"methods": "dafhea", "functions": "sphere", "replicates": "0"},
    {"methods": "dafhea", "functions": "sphere", "format": "html"},
    {"methods": "dafhea", "functions": "sphere", "dims": "five"},
    {"methods": "dafhea", "functions": "sphere", "dafhea.no_such_field": "1"},
    {"methods": "dafhea", "functions": "sphere", "dafhea.policy.k": "many"},
    {"methods": "dafhea", "functions": "sphere", "unknown": "1"},
])
def test_config_errors(kv):
    with pytest.raises(ConfigError):
        config_from_mapping(kv)


def test_apply_override_nested_and_kernel():
    cfg = apply_override(DafheaConfig(), "policy.delta_threshold", "inf")
    assert math.isinf(cfg.policy.delta_threshold)
    cfg = apply_override(cfg, "svr.kernel", "gaussian variance=0.5")
    assert cfg.svr.kernel.describe() == "gaussian variance=0.5"


def test_generations_override_reaches_every_method():
    cfg = config_from_mapping({"methods": "canonical,dafhea", "functions": "sphere",
                               "generations": "7"})
    assert method_config(cfg, "canonical").max_generations == 7
    assert method_config(cfg, "dafhea").population.max_generations == 7


# running

def test_two_replicates_zero_generations(tmp_path):
    cfg = ExperimentConfig(cells=[("canonical", "sphere", 3, False)], replicates=2,
                           base_seed=11, generations=0, out=str(tmp_path))
    rows, raw = run_experiment(cfg)
    assert len(raw) == 2 and len(rows) == 1
    spec = make_problem("sphere", 3)
    bests = [run_canonical_ga(spec, PopulationConfig(max_generations=0), seed=s).best_fitness
             for s in (11, 12)]
    assert [r["seed"] for r in raw] == [11, 12]
    assert rows[0].mean_best_fitness == pytest.approx(np.mean(bests), abs=1e-15)
    assert rows[0].replicates == 2
    assert sorted(os.listdir(tmp_path)) == ["raw.csv", "report.csv", "report.md"]


def test_repeat_is_byte_identical_apart_from_wall_clock(tmp_path):
    texts = []
    for i in range(2):
        out = tmp_path / str(i)
        cfg = config_from_mapping({"methods": "canonical,prefrank", "functions": "rastrigin",
                                   "dims": "2", "noisy": "both", "replicates": "2",
                                   "generations": "3", "out": str(out), "format": "csv"})
        run_experiment(cfg)
        texts.append([(out / n).read_text() for n in ("report.csv", "raw.csv")])
    for a, b in zip(*texts):
        assert strip_wall(a) == strip_wall(b)


def test_parallel_matches_serial(tmp_path):
    kv = {"methods": "canonical,dafhea2", "functions": "sphere", "dims": "2",
          "replicates": "3", "generations": "2", "format": "csv"}
    a = config_from_mapping(dict(kv, out=str(tmp_path / "a")))
    b = config_from_mapping(dict(kv, out=str(tmp_path / "b"), jobs="2"))
    run_experiment(a)
    run_experiment(b)
    for n in ("report.csv", "raw.csv"):
        assert strip_wall((tmp_path / "a" / n).read_text()) == \
            strip_wall((tmp_path / "b" / n).read_text())


def test_aggregates_recompute_from_raw(tmp_path):
    cfg = config_from_mapping({"methods": "canonical,dafhea", "functions": "ellipsoidal",
                               "dims": "2", "replicates": "3", "generations": "2",
                               "out": str(tmp_path)})
    rows, _ = run_experiment(cfg)
    raw = read_raw(str(tmp_path / "raw.csv"))
    for rep, again in zip(rows, aggregate(raw, cfg.cells)):
        assert abs(rep.mean_best_fitness - again.mean_best_fitness) <= 1e-12
        assert abs(rep.std_best_fitness - again.std_best_fitness) <= 1e-12
        assert rep.mean_true_evals == again.mean_true_evals
    for rep, cell in zip(rows, cfg.cells):
        b = [r["best_fitness"] for r in raw if (r["method"], r["function"], r["dim"],
                                                r["noisy"]) == cell]
        assert abs(rep.std_best_fitness - np.std(b)) <= 1e-12


@pytest.mark.slow
def test_full_clean_grid_rows():
    cfg = config_from_mapping({"methods": "dafhea,dafhea2,prefrank",
                               "functions": "sphere,ellipsoidal,schwefel,rosenbrock,rastrigin",
                               "dims": "5,10,20", "replicates": "1", "generations": "1",
                               "jobs": str(min(4, os.cpu_count() or 1))})
    rows, raw = run_experiment(cfg)
    assert len(rows) == 45
    assert all(r["status"] == "ok" for r in raw)
    assert {(r.function, r.dim) for r in rows} == {
        (f, n) for f in ("sphere", "ellipsoidal", "schwefel", "rosenbrock", "rastrigin")
        for n in (5, 10, 20)}


# command line

def test_cli_run_success(tmp_path, capsys):
    code = cli.main(["run", "--method", "canonical", "--function", "sphere", "--dim", "2",
                     "--generations", "2", "--replicates", "2", "--seed", "3",
                     "--out", str(tmp_path), "--format", "csv"])
    assert code == 0
    assert capsys.readouterr().out.startswith("| method | function |")
    report = (tmp_path / "report.csv").read_text().splitlines()
    assert report[1].startswith("canonical,sphere,2,false,2,")
    assert not (tmp_path / "report.md").exists()


def test_cli_config_error_exit_code(tmp_path):
    assert cli.main(["run", "--method", "dafhea", "--function", "sphere", "--dim", "0",
                     "--out", str(tmp_path)]) == 1
    assert cli.main(["run", "--method", "dafhea", "--function", "sphere", "--dim", "2",
                     "--set", "dafhea.policy.k=lots", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["run", "--method", "cmaes", "--function", "sphere", "--dim", "2",
                  "--out", str(tmp_path)])
    assert exc.value.code == 1


def test_cli_partial_failure_exit_code(tmp_path, monkeypatch):
    from surrogate_ea import harness
    real = harness.METHODS["canonical"]

    def flaky(spec, cfg, seed, **kw):
        if seed == 1:
            raise RuntimeError("boom")
        return real(spec, cfg, seed=seed, **kw)

    monkeypatch.setitem(harness.METHODS, "canonical", flaky)
    code = cli.main(["run", "--method", "canonical", "--function", "sphere", "--dim", "2",
                     "--generations", "1", "--replicates", "3", "--out", str(tmp_path)])
    assert code == 2
    raw = read_raw(str(tmp_path / "raw.csv"))
    assert [r["status"] for r in raw] == ["ok", "failed", "ok"]
    assert "boom" in raw[1]["error"]
    assert (tmp_path / "report.csv").read_text().splitlines()[1].split(",")[4] == "2"


def test_cli_grid_from_config(tmp_path):
    conf = tmp_path / "grid.conf"
    conf.write_text("methods = canonical\nfunctions = sphere, rastrigin\ndims = 2\n"
                    "replicates = 1\ngenerations = 1\nformat = markdown\n")
    code = cli.main(["grid", "--config", str(conf), "--out", str(tmp_path / "o")])
    assert code == 0
    assert len((tmp_path / "o" / "report.md").read_text().splitlines()) == 4
