import json

import jsonschema
import pytest

from specwindow.cli import main
from specwindow.report import REPORT_SCHEMA, SCHEMA_VERSION, render_table, validate_report


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _json(capsys, *argv):
    code, out, err = _run(capsys, *argv)
    doc = json.loads(out)
    validate_report(doc)
    assert doc["schema_version"] == SCHEMA_VERSION
    return code, doc


def test_schema_is_valid_draft():
    jsonschema.Draft202012Validator.check_schema(REPORT_SCHEMA)


def test_run_seq_three_events(capsys):
    code, doc = _json(capsys, "run", "spectre-pht", "--mode", "seq", "--r0", "3")
    (res,) = doc["results"]
    assert code == 0 and len(res["events"]) == 3
    assert res["speculative_events"] == 0 and res["arch_matches_seq"]


def test_run_a53_out_of_bounds_one_speculative_access(capsys):
    code, doc = _json(capsys, "run", "spectre-pht", "--mode", "a53", "--r0", "32")
    (res,) = doc["results"]
    spec = [e for e in res["events"] if e["speculative"]]
    assert res["speculative_events"] == 1 and len(spec) == 1
    assert spec[0]["addr"] == 0x1000 + 32
    assert not any(0x4000 <= e["addr"] < 0x8000 for e in res["events"])
    assert any(b["squashed"] for b in res["branches"])


def test_run_untrained_no_speculation(capsys):
    # a fresh predictor says not-taken at the bounds branch
    code, doc = _json(capsys, "run", "spectre-pht", "--mode", "a53", "--r0", "32",
                      "--iterations", "0")
    assert doc["results"][0]["speculative_events"] == 0


def test_run_random_seed(capsys):
    code, a = _json(capsys, "run", "random", "--seed", "11", "--mode", "ooo")
    _, b = _json(capsys, "run", "random", "--seed", "11", "--mode", "ooo")
    assert code == 0 and a == b and a["results"][0]["seed"] == 11
    assert a["results"][0]["arch_matches_seq"]


def test_run_random_needs_seed(capsys):
    code, _, err = _run(capsys, "run", "random")
    assert code == 2 and "--seed" in err


def test_invalid_mode_exit_2(capsys):
    code, out, err = _run(capsys, "run", "spectre-pht", "--mode", "bogus")
    assert code == 2 and "bogus" in err and out == ""


def test_unknown_gadget_exit_2(capsys):
    code, _, err = _run(capsys, "check", "nope", "--mode", "seq")
    assert code == 2 and "unknown gadget" in err


def test_fuel_exhaustion_exit_3(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"fuel": 10}))
    code, _, err = _run(capsys, "run", "spectre-pht", "--config", str(cfg))
    assert code == 3 and "simulation error" in err


@pytest.mark.parametrize("body", [
    {"model": {"mode": "a53", "depth": 2}},
    {"colour": "red"},
    {"model": {"mode": "fast"}},
    {"cache": {"line_size": 48}},
    {"model": {"hit_latency": 50}},
])
def test_bad_config_exit_2(capsys, tmp_path, body):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(body))
    code, _, err = _run(capsys, "check", "siscloak1", "--config", str(cfg))
    assert code == 2 and "config error" in err


def test_config_file_applies(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"mode": "a53", "spec_depth": 0},
                               "observer": "probe", "format": "json"}))
    code, doc = _json(capsys, "check", "siscloak1", "--config", str(cfg))
    (res,) = doc["results"]
    assert code == 0 and res["config"] == "a53(D=0)" and res["observer"] == "probe"


def test_attack_recovers(capsys):
    code, doc = _json(capsys, "attack", "siscloak2-scaled", "--secret", "0x2A", "--mode", "a53")
    (res,) = doc["results"]
    assert code == 0 and res["recovered"] == [0x2A] and res["success"]
    assert len(res["latencies"]) == 256


def test_attack_seq_fails(capsys):
    code, doc = _json(capsys, "attack", "siscloak2-scaled", "--secret", "0x2A", "--mode", "seq")
    res = doc["results"][0]
    assert res["hot_lines"] == [] and not res["success"]


def test_attack_spectre_fails(capsys):
    code, _, err = _run(capsys, "attack", "spectre-pht", "--secret", "7", "--mode", "a53")
    assert code == 3 and "scaled" in err
    code, doc = _json(capsys, "attack", "spectre-pht-scaled", "--secret", "7", "--mode", "a53")
    assert code == 0 and not doc["results"][0]["success"]


def test_attack_secret_out_of_domain(capsys):
    code, _, _ = _run(capsys, "attack", "siscloak2-scaled", "--secret", "300")
    assert code == 2


def test_check_matrix(capsys):
    code, doc = _json(capsys, "check", "all", "--modes", "seq,a53,ooo")
    cells = {(r["gadget"], r["mode"]): r["verdict"] for r in doc["results"]}
    assert cells == {
        ("spectre-pht", "seq"): "SECURE", ("siscloak1", "seq"): "SECURE",
        ("siscloak2", "seq"): "SECURE", ("spectre-pht", "a53"): "SECURE",
        ("siscloak1", "a53"): "LEAK", ("siscloak2", "a53"): "LEAK",
        ("spectre-pht", "ooo"): "LEAK", ("siscloak1", "ooo"): "LEAK",
        ("siscloak2", "ooo"): "LEAK"}
    assert code == 1


def test_check_exit_codes(capsys):
    code, doc = _json(capsys, "check", "siscloak1", "--mode", "seq")
    assert code == 0 and doc["results"][0]["verdict"] == "SECURE"
    code, doc = _json(capsys, "check", "siscloak1", "--mode", "a53")
    assert code == 1 and doc["results"][0]["witness"] is not None


def test_mode_and_modes_conflict(capsys):
    code, _, _ = _run(capsys, "check", "siscloak1", "--mode", "seq", "--modes", "a53")
    assert code == 2


def test_out_file_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        _run(capsys, "check", "siscloak2", "--modes", "a53,ooo", "--out", str(path),
             "--format", "table")
    assert a.read_bytes() == b.read_bytes()
    validate_report(json.loads(a.read_text()))


@pytest.mark.parametrize("argv", [
    ["run", "siscloak1", "--mode", "ooo"],
    ["attack", "siscloak1-scaled", "--secret", "5"],
    ["check", "spectre-pht", "--modes", "seq,ooo", "--observer", "final-cache"],
])
def test_table_rendering(capsys, argv):
    _, doc = _json(capsys, *argv)
    code, out, _ = _run(capsys, *argv, "--format", "table")
    assert out == render_table(doc)
    assert out.splitlines()[1].startswith("---")


def test_corpus_list(capsys):
    code, out, _ = _run(capsys, "corpus-list")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert "siscloak2-scaled" in names and len(names) == 6


def test_missing_subcommand():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_schema_rejects_malformed(capsys):
    _, doc = _json(capsys, "check", "siscloak1", "--mode", "seq")
    doc["results"][0]["extra"] = 1
    with pytest.raises(jsonschema.ValidationError):
        validate_report(doc)
    del doc["results"][0]["extra"]
    doc["results"][0]["verdict"] = "MAYBE"
    with pytest.raises(jsonschema.ValidationError):
        validate_report(doc)
