import csv
import io
import json
import math

import pytest

from skfluct import cli
from skfluct.bounds import beta_critical

SMALL = {
    "variance-scan": ["--n", "3,4", "--samples", "20"],
    "identity-check": ["--n", "4", "--samples", "20", "--nodes", "4"],
    "lemma-check": ["--n", "4", "--samples", "20"],
    "interpolation-check": ["--n", "4", "--samples", "20", "--points", "0.2:0.1,0.4:0.2"],
    "derivative-check": ["--n", "3", "--samples", "20", "--t-grid", "0.5", "--lambda-grid", "0,0.1"],
    "mgf-check": ["--n", "1-5", "--x-grid", "0.1,0.4"],
    "monotonicity": ["--n", "4", "--samples", "20", "--t-grid", "0,0.5,1"],
    "annealed-mgf": ["--n", "3", "--samples", "20"],
}


def _run(tmp_path, sub, *extra, fmt="json"):
    out = tmp_path / f"{sub}.{fmt}"
    code = cli.main([sub, *SMALL[sub], *extra, "--format", fmt, "--out", str(out)])
    return code, out


def _csv_rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def _strip_seconds(rows):
    return [{k: v for k, v in r.items() if k != "seconds"} for r in rows]


def test_subcommand_list_is_complete():
    assert set(cli.SUBCOMMANDS) == set(cli.COLUMNS) == set(cli.DEFAULTS) == set(cli.RUNNERS)


@pytest.mark.parametrize("sub", cli.SUBCOMMANDS)
def test_json_schema(tmp_path, sub):
    code, out = _run(tmp_path, sub)
    doc = json.loads(out.read_text())
    assert set(doc) == {"config", "rows", "summary"}
    assert doc["config"]["subcommand"] == sub
    assert doc["rows"]
    for row in doc["rows"]:
        assert list(row) == cli.COLUMNS[sub]
        assert row["subcommand"] == sub
    assert code == (1 if any(r["satisfied"] is False for r in doc["rows"]) else 0)


@pytest.mark.parametrize("sub", cli.SUBCOMMANDS)
def test_csv_schema(tmp_path, sub):
    _, out = _run(tmp_path, sub, fmt="csv")
    text = out.read_text()
    assert text.startswith("# config: ")
    header = next(l for l in text.splitlines() if not l.startswith("#"))
    assert header.split(",") == cli.COLUMNS[sub]
    assert all(r["satisfied"] in ("true", "false") for r in _csv_rows(out))


@pytest.mark.parametrize("fmt", ["json", "csv"])
@pytest.mark.parametrize("sub", ["variance-scan", "lemma-check", "annealed-mgf"])
def test_replay_from_output(tmp_path, sub, fmt):
    _, first = _run(tmp_path, sub, fmt=fmt)
    again = tmp_path / f"again.{fmt}"
    cli.main([sub, "--config", str(first), "--out", str(again)])
    if fmt == "json":
        a, b = (json.loads(p.read_text())["rows"] for p in (first, again))
    else:
        a, b = _csv_rows(first), _csv_rows(again)
    assert _strip_seconds(a) == _strip_seconds(b)


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": [3], "samples": 7, "seed": 5}))
    args = cli.build_parser().parse_args(["annealed-mgf", "--config", str(cfg), "--seed", "9"])
    c = cli.config_from_args(args)
    assert (c.n, c.samples, c.seed, c.x) == ([3], 7, 9, 0.3)


def test_config_for_other_subcommand_rejected(tmp_path):
    _, out = _run(tmp_path, "mgf-check")
    with pytest.raises(SystemExit):
        cli.main(["lemma-check", "--config", str(out)])


def test_unknown_config_key_rejected():
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_dict({"subcommand": "mgf-check", "bogus": 1})


def test_beta_selection():
    parse = cli.build_parser().parse_args
    assert cli.config_from_args(parse(["monotonicity", "--critical"])).betas(8) == [beta_critical()]
    assert cli.config_from_args(parse(["monotonicity", "--beta", "0.2,critical"])).betas(8) == [0.2, beta_critical()]
    near = cli.config_from_args(parse(["monotonicity", "--near", "0.5,1"])).betas(16)
    assert near == [pytest.approx(math.sqrt(0.5 + 0.25))]
    with pytest.raises(SystemExit):
        parse(["monotonicity", "--critical", "--beta", "0.3"])


def test_size_ranges():
    assert cli.build_parser().parse_args(["mgf-check", "--n", "1-3,7"]).n == [1, 2, 3, 7]


def test_variance_scan_at_zero_beta(tmp_path):
    code, out = _run(tmp_path, "variance-scan", "--beta", "0")
    rows = json.loads(out.read_text())["rows"]
    assert code == 0
    for r in rows:
        assert r["var_direct"] == 0.0
        assert r["var_identity"] == 0.0


def test_mgf_check_default_grid_all_satisfied(tmp_path, capsys):
    assert cli.main(["mgf-check", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)["rows"]
    assert len(rows) == 30 * 9
    assert all(r["strict"] for r in rows)


def test_threads_do_not_change_rows(tmp_path):
    outs = []
    for threads in ("1", "3"):
        out = tmp_path / f"t{threads}.json"
        cli.main(["lemma-check", *SMALL["lemma-check"], "--threads", threads, "--format", "json", "--out", str(out)])
        outs.append(_strip_seconds(json.loads(out.read_text())["rows"]))
    assert outs[0] == outs[1]


def test_lemma_grid_skips_out_of_range_t(tmp_path):
    _, out = _run(tmp_path, "lemma-check", "--beta", "0.3")
    ts = [r["t"] for r in json.loads(out.read_text())["rows"]]
    assert ts and all(0 <= t <= 1 for t in ts)


def test_exit_code_reports_violation(monkeypatch, tmp_path):
    def fake(cfg):
        return [cli._row(cfg, 2, 0.5, satisfied=False)], {}

    monkeypatch.setitem(cli.RUNNERS, "mgf-check", fake)
    assert cli.main(["mgf-check", "--out", str(tmp_path / "x.csv")]) == 1


def test_near_critical_scan_uses_near_envelope(tmp_path):
    from skfluct.bounds import NearCritical, theorem_envelope

    _, out = _run(tmp_path, "variance-scan", "--near", "0.5,1", "--no-identity")
    for r in json.loads(out.read_text())["rows"]:
        assert r["envelope_c1"] == pytest.approx(theorem_envelope(r["n"], NearCritical(0.5, 1.0)))
        assert r["beta"] == pytest.approx(math.sqrt(0.5 + r["n"] ** -0.5))
