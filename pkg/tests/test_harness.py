import csv
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from symbandit.cli import main
from symbandit.errors import ArgumentError, ConfigError
from symbandit.harness import (
    ExperimentConfig,
    build_config,
    emit_csv,
    load_config,
    parse_config_text,
    parse_seeds,
    read_csv,
    render_svg,
    run_experiment,
    series_points,
    summarize,
    sweep,
)

SVG_NS = "{http://www.w3.org/2000/svg}"


def small(**kw):
    base = dict(d=4, d0=2, T=100, algorithm="EMC", partition_class="all")
    base.update(kw)
    return build_config(base)


def test_minimal_run():
    rec = run_experiment(small(stride=1))
    assert len(rec.t) == 100 and rec.t[-1] == 100
    assert np.all(np.diff(rec.cumulative_regret) >= 0)
    assert rec.metadata["rng"].startswith("PCG64")
    assert rec.selected_partition is not None


@pytest.mark.parametrize("T,stride", [(10, 1), (100, 7), (1000, 1000), (12345, 12)])
def test_series_points(T, stride):
    ts = series_points(T, stride)
    assert len(ts) == math.ceil(T / stride)
    assert ts[-1] == T and np.all(np.diff(ts) > 0)


def test_default_stride():
    assert small(T=5000).effective_stride() == 5
    assert small(T=999).effective_stride() == 1


def test_config_errors_name_the_field():
    with pytest.raises(ConfigError) as exc:
        small(d0=9)
    assert exc.value.field == "d0"
    with pytest.raises(ConfigError) as exc:
        build_config({"bogus": 1})
    assert exc.value.field == "bogus"
    with pytest.raises(ConfigError) as exc:
        small(T="ten")
    assert exc.value.field == "T"
    with pytest.raises(ConfigError) as exc:
        small(algorithm="EMC_WS")
    assert exc.value.field == "eps0"
    with pytest.raises(ConfigError) as exc:
        small(sigma=0)
    assert exc.value.field == "t1"


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# comment\nd = 6\nd0 = 3\nclass = nn\nT = 50\nseeds = 0-2,7\n")
    cfg = load_config(path, {"d0": "2", "T": 40})
    assert (cfg.d, cfg.d0, cfg.T) == (6, 2, 40)
    assert cfg.seeds == (0, 1, 2, 7)
    assert cfg.partition_class.short == "NN"
    assert parse_config_text(cfg.to_text())["d0"] == 2
    assert build_config(parse_config_text(cfg.to_text())) == cfg


def test_parse_seeds():
    assert parse_seeds("3") == (3,)
    assert parse_seeds("0-3, 9") == (0, 1, 2, 3, 9)


def test_sweep_is_order_stable_and_parallel_invariant(tmp_path):
    cfg = small(T=60, stride=1)
    seeds = list(range(10))
    a = sweep(cfg, seeds, 1)
    b = sweep(cfg, seeds, 4)
    assert [r.seed for r in a] == seeds
    emit_csv(a, tmp_path / "a.csv")
    emit_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    with pytest.raises(ArgumentError):
        sweep(cfg, [], 1)


def test_sweep_records_failures():
    cfg = small(algorithm="EMC_WS", eps0=0.3, d=8, d0=8, T=50)  # 8 blocks cannot be 0.3-separated in [-1, 1]
    recs = sweep(cfg, [0, 1], 1)
    assert all(r.failed and "InfeasibleSeparation" in r.metadata["error"] for r in recs)
    assert summarize(recs)["_failed"]["seeds"] == 2


def test_csv_schema_and_round_trip(tmp_path):
    recs = sweep(small(T=10, stride=1), [0, 1], 1)
    path = tmp_path / "out.csv"
    emit_csv(recs, path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["seed", "algorithm", "t", "cumulative_regret"]
    assert len(rows) == 1 + 20
    back = {(r.seed, r.algorithm): r for r in read_csv(path)}
    for r in recs:
        got = back[(r.seed, r.algorithm)]
        assert np.array_equal(got.t, r.t)
        assert np.array_equal(got.cumulative_regret, r.cumulative_regret)  # full precision


def test_svg_has_one_polyline_per_algorithm(tmp_path):
    recs = sweep(small(T=50), [0, 1, 2], 1) + sweep(small(T=50, algorithm="ESTC"), [0, 1, 2], 1)
    path = tmp_path / "plot.svg"
    render_svg(recs, path)
    root = ET.parse(path).getroot()
    lines = root.findall(f"{SVG_NS}polyline")
    bands = root.findall(f"{SVG_NS}polygon")
    assert sorted(p.get("data-algorithm") for p in lines) == ["EMC", "ESTC_LASSO"]
    assert len(bands) == 2
    texts = [t.text for t in root.findall(f"{SVG_NS}text")]
    assert "t" in texts and "cumulative regret" in texts


def test_summary_statistics():
    recs = sweep(small(T=40), list(range(5)), 1)
    s = summarize(recs)["EMC"]
    finals = [r.cumulative_regret[-1] for r in recs]
    assert s["seeds"] == 5 and math.isclose(s["median_final"], float(np.median(finals)))


def test_pipeline_is_deterministic_except_wall_time():
    a = run_experiment(small(), 3)
    b = run_experiment(small(), 3)
    assert a.config == b.config and a.metadata == b.metadata
    assert np.array_equal(a.cumulative_regret, b.cumulative_regret)


# --- command line -----------------------------------------------------------


def test_cli_run_and_plot(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--d", "5", "--d0", "2", "--T", "80", "--class", "nc", "--out", str(out)]) == 0
    assert out.exists()
    svg = tmp_path / "r.svg"
    assert main(["plot", str(out), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")


def test_cli_sweep(tmp_path):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--d", "5", "--d0", "2", "--T", "60", "--seeds", "0-3", "-j", "2", "--out", str(out)])
    assert code == 0
    assert len({row[0] for row in list(csv.reader(open(out)))[1:]}) == 4


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["run", "--d", "3", "--d0", "5"]) == 2
    assert "d0" in capsys.readouterr().err
    assert main(["plot", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x.svg")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_enumerate_and_rip(capsys):
    assert main(["enumerate", "--d", "4", "--class", "nc"]) == 0
    assert "total (k <= 4): 14" in capsys.readouterr().out
    assert main(["enumerate", "--d", "4", "--k", "2", "--list"]) == 0
    assert len([l for l in capsys.readouterr().out.splitlines() if "|" in l]) == 7
    assert main(["rip", "--n", "100", "--d", "10", "--model", "1,2|3,4,5|6,7,8,9,10"]) == 0
    assert "delta =" in capsys.readouterr().out


def test_cli_rip_supplied_design(tmp_path, capsys):
    path = tmp_path / "A.csv"
    np.savetxt(path, np.eye(4), delimiter=",")
    assert main(["rip", "--design", str(path), "--model", "1,2|3,4"]) == 0
    delta = float(capsys.readouterr().out.split("delta =")[1])
    assert delta < 1e-12


def test_cli_validate(capsys):
    assert main(["validate", "counts", "--quick", "--strict"]) == 0
    assert "[PASS]" in capsys.readouterr().out
