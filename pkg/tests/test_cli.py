import csv
import io
import json
import math

import pytest
from click.testing import CliRunner
from hypothesis import given
from hypothesis import strategies as st

from harmreg.cli import main as cli_main
from harmreg.cli.config import load_config
from harmreg.cli.report import numeric_rows, parse_csv_value, to_csv, to_json
from harmreg.errors import ConfigError, NumericalError


def run(args, tmp_path, config_text=None):
    argv = list(args) + ["--out", str(tmp_path / "out")]
    if config_text is not None:
        path = tmp_path / "exp.ini"
        path.write_text(config_text)
        argv += ["--config", str(path)]
    return CliRunner().invoke(cli_main.main, argv, catch_exceptions=False)


def load_json(tmp_path, stem):
    return json.loads((tmp_path / "out" / f"{stem}.json").read_text())


def test_majorant_check_regular(tmp_path):
    res = run(["majorant-check"], tmp_path)
    assert res.exit_code == 0, res.output
    rep = load_json(tmp_path, "majorant-check")
    reg = next(c for c in rep["checks"] if c["name"] == "regularity")
    assert reg["values"]["is_regular"] is True
    assert rep["passed"] is True


def test_check_failure_exit_one(tmp_path):
    res = run(["majorant-check"], tmp_path, "[majorant]\nkind = identity\nexpect = regular\n")
    assert res.exit_code == 1
    assert "FAIL  regularity" in res.output
    assert load_json(tmp_path, "majorant-check")["passed"] is False


def test_nonregular_expectation(tmp_path):
    res = run(["majorant-check"], tmp_path, "[majorant]\nkind = inverse-log-square\nexpect = nonregular\n")
    assert res.exit_code == 0, res.output


@pytest.mark.parametrize("text", [
    "[nonsense]\nx = 1\n",
    "[majorant]\nkind = power\nalpha = 1.5\n",
    "[majorant]\nkind = identity\n",  # main-theorem needs a regular majorant
    "[family]\nkind = tilted\nangle_deg = 95\n",
    "[run]\nseed = -3\n",
    "[budgets]\nsamples = lots\n",
    "not an ini file",
])
def test_config_errors_exit_two(tmp_path, text):
    res = run(["main-theorem"], tmp_path, text)
    assert res.exit_code == 2
    assert "config error" in res.output
    assert not (tmp_path / "out" / "main-theorem.json").exists()


def test_missing_config_file(tmp_path):
    res = CliRunner().invoke(cli_main.main, ["majorant-check", "--config", str(tmp_path / "nope.ini"),
                                             "--out", str(tmp_path / "out")])
    assert res.exit_code == 2


def test_numerical_failure_exit_three(tmp_path, monkeypatch):
    def boom(name, cfg):
        raise NumericalError("no feasible samples", {"feasible": 0})

    monkeypatch.setattr(cli_main, "run_command", boom)
    res = run(["seminorm", "global"], tmp_path)
    assert res.exit_code == 3
    rep = load_json(tmp_path, "seminorm-global")
    assert rep["complete"] is False and rep["passed"] is False
    assert rep["error"] == "no feasible samples"


def test_har_est_coordinate(tmp_path):
    res = run(["verify", "har-est"], tmp_path, "[function]\nkind = coordinate\n[verify]\nr = 0.3\nR = 0.6\n")
    assert res.exit_code == 0, res.output
    vals = load_json(tmp_path, "verify-har-est")["checks"][0]["values"]
    # lhs = 1, rhs = n R / (R - r) = 4
    assert vals["lhs"] == pytest.approx(1.0, abs=1e-6)
    assert vals["ratio"] == pytest.approx(0.25, abs=1e-6)


@pytest.mark.parametrize("args", [["verify", "trans-dist"], ["verify", "max-principle"], ["verify", "dilate"],
                                  ["seminorm", "global"], ["seminorm", "transversal"], ["seminorm", "hl"]])
def test_subcommands_pass(tmp_path, args):
    res = run(args + ["--format", "both"], tmp_path)
    assert res.exit_code == 0, res.output
    stem = "-".join(args)
    rep = load_json(tmp_path, stem)
    rows = list(csv.reader(io.StringIO((tmp_path / "out" / f"{stem}.csv").read_text())))
    assert rows[0] == ["check", "field", "value"]
    got = [(r[0], r[1], parse_csv_value(r[2])) for r in rows[1:]]
    assert got == numeric_rows(rep)


def test_determinism_and_output_independence(tmp_path):
    a = CliRunner().invoke(cli_main.main, ["main-theorem", "--seed", "11", "--out", str(tmp_path / "a")])
    b = CliRunner().invoke(cli_main.main, ["main-theorem", "--seed", "11", "--out", str(tmp_path / "b")])
    c = CliRunner().invoke(cli_main.main, ["main-theorem", "--seed", "12", "--out", str(tmp_path / "c")])
    assert a.exit_code == b.exit_code == c.exit_code == 0
    ja = (tmp_path / "a" / "main-theorem.json").read_bytes()
    assert ja == (tmp_path / "b" / "main-theorem.json").read_bytes()
    assert ja != (tmp_path / "c" / "main-theorem.json").read_bytes()
    timing = json.loads((tmp_path / "a" / "main-theorem.timing.json").read_text())
    assert timing["wall_time_s"] > 0


def test_config_echo(tmp_path):
    res = run(["main-theorem", "--seed", "5"], tmp_path, "[function]\nkind = holder\nalpha = 0.5\n[budgets]\nsamples = 4096\n")
    assert res.exit_code == 0, res.output
    rep = load_json(tmp_path, "main-theorem")
    assert rep["config"]["budgets"]["samples"] == "4096"
    assert rep["config"]["run"]["seed"] == "5"
    assert "out" not in rep["config"]["run"]
    assert rep["provenance"]["seed"] == 5


def test_seed_override_beats_file(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[run]\nseed = 1\n")
    cfg = load_config(path, {"run": {"seed": 9}})
    assert cfg.seed == 9
    with pytest.raises(ConfigError):
        load_config(path, {"run": {"format": "xml"}})


def test_plot_writes_svg(tmp_path):
    pytest.importorskip("matplotlib")
    res = run(["main-theorem", "--plot"], tmp_path)
    assert res.exit_code == 0, res.output
    svgs = sorted((tmp_path / "out").glob("*.svg"))
    assert svgs and all(p.read_text().lstrip().startswith("<?xml") for p in svgs)


leaf = st.one_of(st.floats(allow_nan=False), st.integers(-2**62, 2**62), st.booleans(), st.none(),
                 st.text(max_size=8))
tree = st.recursive(leaf, lambda kids: st.one_of(st.lists(kids, max_size=4),
                                                 st.dictionaries(st.text(max_size=6), kids, max_size=4)),
                    max_leaves=30)


def _same(a, b):
    if isinstance(a, float) and isinstance(b, str):
        return math.isinf(a) and b == ("inf" if a > 0 else "-inf")
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(_same(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


@given(tree)
def test_json_round_trip(obj):
    text = to_json(obj)
    assert _same(obj, json.loads(text))
    assert to_json(json.loads(text)) == text


names = st.text(alphabet="abcdefghijklmnopqrstuvwxyz_", min_size=1, max_size=6)


@given(st.lists(st.tuples(names,
                          st.one_of(st.floats(allow_nan=False), st.integers(-2**62, 2**62), st.booleans())),
                max_size=6))
def test_csv_matches_json_leaves(items):
    report = {"checks": [{"name": "c", "passed": True, "slack": None, "values": dict(items)}]}
    rows = list(csv.reader(io.StringIO(to_csv(report))))[1:]
    parsed = [(r[0], r[1], parse_csv_value(r[2])) for r in rows]
    assert [(a, b) for a, b, _ in parsed] == [(a, b) for a, b, _ in numeric_rows(report)]
    for (_, _, got), (_, _, want) in zip(parsed, numeric_rows(report)):
        assert type(got) is type(want) and got == want
