import copy
import json

import pytest

from specwindow.errors import ConfigError
from specwindow.gadgets import (CORE_GADGETS, corpus_names, load_gadget, load_manifest,
                                parse_manifest)
from specwindow.isa import run_seq

SRC = "LD R1, [#A-size]\nBLT R0, R1, b\nHALT\nb: LD R2, [#A + R0]\nLD R3, [#B + R2]\nHALT\n"
BASE = {
    "schema_version": 1, "name": "t", "assembly": "t.s",
    "symbols": {"A-size": "0x0F00", "A": "0x1000", "B": "0x4000"},
    "regions": {"A-size": {"base": "#A-size", "size": 4}, "A": {"base": "#A", "size": 16},
                "B": {"base": "#B", "size": 16384}},
    "monitored": "B",
    "memory": [{"addr": "#A-size", "words": [16]}],
    "secret": {"addresses": ["#A+32"], "domain": [0, 255]},
    "attacker_register": 0, "valid_inputs": [0, 4], "malicious_inputs": [32],
    "training_iterations": 4,
}


def _with(**kw):
    d = copy.deepcopy(BASE)
    d.update(kw)
    return d


def test_corpus_contents():
    names = corpus_names()
    for core in CORE_GADGETS:
        assert core in names and f"{core}-scaled" in names
    for n in names:
        g = load_gadget(n)
        assert g.leak_layout == ("scaled" if n.endswith("-scaled") else "raw")
        assert len(g.monitored_lines(64)) == 256
        assert g.secrets == range(0, 256)


def test_parse_minimal():
    g = parse_manifest(BASE, SRC)
    assert g.symbols["A"] == 0x1000 and g.secret_addresses == (0x1020,)
    assert g.initial_state(4).regs[0] == 4
    assert int.from_bytes(g.memory[0xF00:0xF04], "little") == 16


@pytest.mark.parametrize("mutate, msg", [
    (lambda d: d["regions"]["A"].update(size=0x4000), "overlap"),
    (lambda d: d.update(bogus=1), "bogus"),
    (lambda d: d["secret"].update(addresses=["#B+8"]), "monitored"),
    (lambda d: d.update(monitored="C"), "not declared"),
    (lambda d: d["symbols"].update(B="0x10000"), "outside"),
    (lambda d: d["secret"].update(domain=[5, 1]), "empty"),
    (lambda d: d.update(valid_inputs=[0, 32],
                        memory=[{"addr": "#A-size", "words": [64]}]), "valid input 32"),
    (lambda d: d["memory"].append({"addr": "#Q", "words": [1]}), "#Q"),
])
def test_manifest_rejections(mutate, msg):
    d = copy.deepcopy(BASE)
    mutate(d)
    with pytest.raises(ConfigError, match=msg):
        parse_manifest(d, SRC)


def test_load_manifest_from_disk(tmp_path):
    (tmp_path / "t.s").write_text(SRC)
    (tmp_path / "t.json").write_text(json.dumps(BASE))
    g = load_manifest(tmp_path / "t.json")
    assert g.name == "t"
    assert load_gadget(str(tmp_path / "t.json")).program == g.program


def test_missing_files(tmp_path):
    with pytest.raises(ConfigError):
        load_manifest(tmp_path / "none.json")
    (tmp_path / "t.json").write_text(json.dumps(BASE))
    with pytest.raises(ConfigError, match="t.s"):
        load_manifest(tmp_path / "t.json")
    with pytest.raises(ConfigError, match="unknown gadget"):
        load_gadget("no-such-gadget")


def test_siscloak1_secret_marked_confidential():
    g = load_gadget("siscloak1")
    assert not g.regions["A"].public
    assert g.regions["A"].contains(g.secret_addresses[0], 4)


@pytest.mark.parametrize("name", CORE_GADGETS)
def test_malicious_inputs_are_architecturally_harmless(name):
    g = load_gadget(name)
    b = g.monitored_region
    for s in (0, 0x2A, 0xFF):
        mem = bytearray(g.memory)
        for a in g.secret_addresses:
            mem[a:a + 4] = s.to_bytes(4, "little")
        for m in g.malicious_inputs:
            _, events = run_seq(g.initial_state(m, bytes(mem)), g.program, 100)
            assert not any(b.contains(e.addr) for e in events)
