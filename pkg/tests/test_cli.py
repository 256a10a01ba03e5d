import csv
import hashlib
import io
import json

import pytest

from ising_peel import asymptotics as asy
from ising_peel.cli import main, parse_nu
from ising_peel.curves import NU_C
from ising_peel.enumeration import build_count_table
from ising_peel.maps import IsingMap, validate_map


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    header, body = text.split("\n", 1)
    assert header.startswith("# manifest sha256:")
    return header.split(":", 1)[1], list(csv.DictReader(io.StringIO(body)))


# -- coupling parsing


@pytest.mark.parametrize("text, want", [("2", 2.0), ("7/2", 3.5), ("c", NU_C), ("6.2915", NU_C),
                                        ("6.29150262", NU_C), ("6.29", 6.29)])
def test_coupling_strings(text, want):
    assert parse_nu(text) == want


# -- output and manifests


def test_critical_curve_row(capsys):
    code, out, _ = invoke(capsys, "curves", "--nu", "6.2915", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)["rows"]
    assert row["branch"] == "critical"
    assert row["S_c"] == 3.0 and row["H_c"] == 2.0
    assert row["J1"] is None
    assert row["approx"] is False


def test_curve_grid_marks_branches(capsys):
    code, out, _ = invoke(capsys, "curves", "--grid", "2,c,8")
    _, rows = read_csv(out)
    assert [r["branch"] for r in rows] == ["high", "critical", "low"]
    assert rows[0]["J1"] and not rows[2]["J1"]


def test_enumeration_counts_are_exact_strings(capsys):
    code, out, _ = invoke(capsys, "enum", "--pmax", "2", "--qmax", "1", "--nmax", "3")
    assert code == 0
    rows = json.loads(out)["rows"]
    tab = build_count_table(2, 1, 3)
    assert rows
    for r in rows:
        assert isinstance(r["count"], str)
        assert int(r["count"]) == tab.get(r["p"], r["q"], r["n"])[r["m"]]


def test_manifest_file_matches_the_output_header(capsys, tmp_path):
    out = tmp_path / "cdf.csv"
    code, _, _ = invoke(capsys, "asympt", "scaling-cdf", "--t", "1,2", "--out", str(out))
    assert code == 0
    digest, rows = read_csv(out.read_text())
    manifest = json.loads((tmp_path / "cdf.csv.manifest.json").read_text())
    assert manifest["hash"] == digest
    core = {k: manifest[k] for k in ("command", "argv", "config", "seeds", "versions")}
    assert hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest() == digest
    assert float(rows[1]["survival"]) == pytest.approx(asy.scaling_cdf(1.0, 2.0), rel=1e-11)


def test_same_invocation_same_hash(capsys):
    argv = ("asympt", "c-lambda", "--phase", "high", "--grid", "0.5,1,2", "--format", "json")
    first = json.loads(invoke(capsys, *argv)[1])
    second = json.loads(invoke(capsys, *argv)[1])
    assert first == second


def test_hash_changes_with_arguments(capsys):
    a = read_csv(invoke(capsys, "asympt", "scaling-cdf", "--t", "1")[1])[0]
    b = read_csv(invoke(capsys, "asympt", "scaling-cdf", "--t", "2")[1])[0]
    assert a != b


def test_config_precedence_is_recorded(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"asympt": {"scaling-cdf": {"lam": 2.0, "ts": "3"}}}))
    man = tmp_path / "m.json"
    code, out, _ = invoke(capsys, "--config", str(cfg), "--manifest", str(man),
                          "asympt", "scaling-cdf", "--t", "1")
    assert code == 0
    config = json.loads(man.read_text())["config"]
    assert config["lam"] == {"value": 2.0, "source": "config"}
    assert config["ts"] == {"value": [1.0], "source": "flag"}
    assert config["precision"]["source"] == "default"
    _, rows = read_csv(out)
    assert rows == [{"lambda": "2", "t": "1", "survival": f"{asy.scaling_cdf(2.0, 1.0):.12g}", "approx": "false"}]


def test_precision_controls_digits(capsys):
    _, rows = read_csv(invoke(capsys, "asympt", "scaling-cdf", "--t", "1", "--precision", "4")[1])
    assert rows[0]["survival"] == f"{asy.scaling_cdf(1.0, 1.0):.4g}"


def test_outputs_do_not_depend_on_the_worker_count(capsys, monkeypatch):
    argv = ("peel", "simulate", "--nu", "2", "--steps", "40", "--replicas", "3", "--seed", "5")
    monkeypatch.setenv("ISING_PEEL_THREADS", "1")
    one = invoke(capsys, *argv)[1]
    monkeypatch.setenv("ISING_PEEL_THREADS", "3")
    three = invoke(capsys, *argv)[1]
    assert one == three
    _, rows = read_csv(one)
    assert {r["replica"] for r in rows} == {"0", "1", "2"}
    assert len(rows) == 3 * 41


def test_bad_worker_count_is_a_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("ISING_PEEL_THREADS", "zero")
    code, _, err = invoke(capsys, "peel", "simulate", "--nu", "2", "--steps", "4", "--replicas", "2")
    assert code == 2
    assert "ISING_PEEL_THREADS" in err


def test_survival_table_has_the_model_column(capsys):
    code, out, _ = invoke(capsys, "peel", "tm-survival", "--p", "20", "--replicas", "50",
                          "--t", "0.5,1", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert [r["t"] for r in body["rows"]] == [0.5, 1.0]
    for r in body["rows"]:
        assert r["model"] == pytest.approx(asy.scaling_cdf(1.0, r["t"]), rel=1e-11)
        assert 0 <= r["empirical"] <= 1 and r["approx"] is True
    assert body["p"] == 20 and body["q"] == 20


def test_sampled_map_round_trips(capsys):
    code, out, _ = invoke(capsys, "sample", "map", "--p", "2", "--q", "2", "--nu", "2", "--seed", "1")
    assert code == 0
    data = json.loads(out)
    assert data["valid"] is True
    m = IsingMap.from_json(out)
    assert validate_map(m).ok
    assert m.n_faces == data["n_faces"]
    assert m.monochromatic_edges() == data["monochromatic_edges"]


def test_order_parameter_rows(capsys):
    code, out, _ = invoke(capsys, "peel", "order-param", "--nu-grid", "2,c", "--format", "json")
    rows = json.loads(out)["rows"]
    assert code == 0 and len(rows) == 2


# -- errors and exit codes


def test_unknown_command_exits_with_usage_error(capsys):
    code, _, err = invoke(capsys, "frobnicate")
    assert code == 2
    assert "No such command" in err


def test_conflicting_options_exit_with_usage_error(capsys):
    assert invoke(capsys, "peel", "simulate", "--nu", "2")[0] == 2
    assert invoke(capsys, "peel", "simulate", "--nu", "2", "--steps", "3", "--until", "0")[0] == 2


def test_domain_error_is_reported_as_json(capsys):
    code, out, err = invoke(capsys, "curves", "--nu", "0.5")
    assert code == 1
    assert out == ""
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "DomainError"
    assert payload["argv"] == ["curves", "--nu", "0.5"]


def test_survival_off_criticality_is_a_domain_error(capsys):
    code, _, err = invoke(capsys, "peel", "tm-survival", "--nu", "2", "--p", "10", "--replicas", "5")
    assert code == 1
    assert json.loads(err.strip().splitlines()[-1])["error"] == "DomainError"


def test_verify_quick_passes(capsys):
    code, out, err = invoke(capsys, "verify", "--quick", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    assert rows and all(r["passed"] for r in rows)
    assert "PASS" in err


def test_verify_rejects_unknown_criteria(capsys):
    assert invoke(capsys, "verify", "--only", "99")[0] == 2
