"""JSON report documents and their schema."""
from __future__ import annotations

import json
from typing import Iterable, List, Optional

import jsonschema

from .checker import Verdict, VerdictMatrix
from .harness import AttackReport
from .isa import ArchState
from .muarch import SimResult

SCHEMA_VERSION = "specwindow-report/1"

_INT = {"type": "integer"}
_INTS = {"type": "array", "items": _INT}
_ELEMENT = {"oneOf": [{"type": "null"}, {"type": "boolean"}, _INTS]}

_RUN = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "gadget", "mode", "attacker_input", "secret", "cycles", "final_regs",
                 "final_pc", "events", "branches", "speculative_fills", "speculative_hits",
                 "speculative_events", "arch_matches_seq", "max_spec_count", "depth_violations"],
    "properties": {
        "kind": {"const": "run"},
        "gadget": {"type": "string"},
        "mode": {"enum": ["seq", "a53", "ooo"]},
        "attacker_input": {"type": ["integer", "null"]},
        "secret": {"type": ["integer", "null"]},
        "seed": _INT,
        "cycles": _INT,
        "final_regs": {"type": "array", "items": _INT, "minItems": 8, "maxItems": 8},
        "final_pc": _INT,
        "events": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["cycle", "kind", "set", "tag", "addr", "speculative", "pc"],
            "properties": {"cycle": _INT, "kind": {"enum": ["fill", "hit"]}, "set": _INT,
                           "tag": _INT, "addr": _INT, "speculative": {"type": "boolean"},
                           "pc": _INT}}},
        "branches": {"type": "array", "items": {
            "type": "object", "additionalProperties": False,
            "required": ["pc", "issue_cycle", "resolve_cycle", "predicted", "actual", "squashed"],
            "properties": {"pc": _INT, "issue_cycle": _INT, "resolve_cycle": _INT,
                           "predicted": {"type": ["boolean", "null"]},
                           "actual": {"type": "boolean"}, "squashed": {"type": "boolean"}}}},
        "speculative_fills": _INT,
        "speculative_hits": _INT,
        "speculative_events": _INT,
        "arch_matches_seq": {"type": "boolean"},
        "max_spec_count": _INT,
        "depth_violations": _INT,
    },
}

_ATTACK = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "gadget", "mode", "secret", "attacker_input", "latencies", "hot_lines",
                 "architectural_lines", "recovered", "success", "victim_cycles",
                 "probe_cycles", "threshold", "arch_matches_seq"],
    "properties": {
        "kind": {"const": "attack"},
        "gadget": {"type": "string"},
        "mode": {"enum": ["seq", "a53", "ooo"]},
        "secret": _INT,
        "attacker_input": _INT,
        "latencies": _INTS,
        "hot_lines": _INTS,
        "architectural_lines": _INTS,
        "recovered": _INTS,
        "success": {"type": "boolean"},
        "victim_cycles": _INT,
        "probe_cycles": _INT,
        "threshold": _INT,
        "arch_matches_seq": {"type": "boolean"},
    },
}

_CHECK = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "gadget", "config", "mode", "observer", "verdict", "spec_depth",
                 "resolve_delay", "training_iterations", "runs", "witness", "leaking_inputs"],
    "properties": {
        "kind": {"const": "check"},
        "gadget": {"type": "string"},
        "config": {"type": "string"},
        "mode": {"enum": ["seq", "a53", "ooo"]},
        "observer": {"enum": ["fill-trace", "final-cache", "probe"]},
        "verdict": {"enum": ["SECURE", "LEAK"]},
        "spec_depth": {"type": ["integer", "null"]},
        "resolve_delay": _INT,
        "training_iterations": _INT,
        "runs": _INT,
        "witness": {"oneOf": [{"type": "null"}, {
            "type": "object", "additionalProperties": False,
            "required": ["attacker_input", "secret_ref", "secret", "index",
                         "ref_element", "element"],
            "properties": {"attacker_input": _INT, "secret_ref": _INT, "secret": _INT,
                           "index": _INT, "ref_element": _ELEMENT, "element": _ELEMENT}}]},
        "leaking_inputs": _INTS,
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "command", "config_echo", "results"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["run", "attack", "check"]},
        "config_echo": {"type": "object"},
        "results": {"type": "array", "items": {"oneOf": [_RUN, _ATTACK, _CHECK]}},
    },
}


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, REPORT_SCHEMA)


def make_report(command: str, config_echo: dict, results: List[dict]) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "command": command,
           "config_echo": config_echo, "results": results}
    validate_report(doc)
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_result(gadget: str, mode: str, r: SimResult, seq_state: Optional[ArchState],
               attacker_input=None, secret=None, seed=None) -> dict:
    spec = r.trace.speculative()
    out = {
        "kind": "run",
        "gadget": gadget,
        "mode": mode,
        "attacker_input": attacker_input,
        "secret": secret,
        "cycles": r.cycles,
        "final_regs": list(r.arch.regs),
        "final_pc": r.arch.pc,
        "events": [{"cycle": e.cycle, "kind": e.kind, "set": e.set, "tag": e.tag,
                    "addr": e.addr, "speculative": e.speculative, "pc": e.pc}
                   for e in r.trace],
        "branches": [{"pc": b.pc, "issue_cycle": b.issue_cycle,
                      "resolve_cycle": b.resolve_cycle, "predicted": b.predicted,
                      "actual": b.actual, "squashed": b.squashed} for b in r.branches],
        "speculative_fills": sum(1 for e in spec if e.kind == "fill"),
        "speculative_hits": sum(1 for e in spec if e.kind == "hit"),
        "speculative_events": len(spec),
        "arch_matches_seq": seq_state is not None and r.arch == seq_state,
        "max_spec_count": r.max_spec_count,
        "depth_violations": r.depth_violations,
    }
    if seed is not None:
        out["seed"] = seed
    return out


def attack_result(a: AttackReport) -> dict:
    return {
        "kind": "attack",
        "gadget": a.gadget,
        "mode": a.mode,
        "secret": a.secret,
        "attacker_input": a.attacker_input,
        "latencies": a.latencies,
        "hot_lines": a.hot_lines,
        "architectural_lines": a.architectural_lines,
        "recovered": a.recovered,
        "success": a.success,
        "victim_cycles": a.victim_cycles,
        "probe_cycles": a.probe_cycles,
        "threshold": a.threshold,
        "arch_matches_seq": a.arch_matches_seq,
    }


def _element(x):
    if x is None or isinstance(x, bool):
        return x
    return list(x)


def verdict_result(v: Verdict) -> dict:
    w = v.witness
    return {
        "kind": "check",
        "gadget": v.gadget,
        "config": v.label,
        "mode": v.mode,
        "observer": v.observer,
        "verdict": v.status,
        "spec_depth": v.spec_depth,
        "resolve_delay": v.resolve_delay,
        "training_iterations": v.training_iterations,
        "runs": v.runs,
        "witness": None if w is None else {
            "attacker_input": w.attacker_input, "secret_ref": w.secret_ref,
            "secret": w.secret, "index": w.index,
            "ref_element": _element(w.ref_element), "element": _element(w.element)},
        "leaking_inputs": list(v.leaking_inputs),
    }


def matrix_results(m: VerdictMatrix) -> List[dict]:
    return [verdict_result(v) for _, row in m.rows() for v in row]


# -- human-readable rendering ------------------------------------------------

def _table(header: List[str], rows: Iterable[List[str]]) -> str:
    rows = [list(map(str, r)) for r in rows]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines) + "\n"


def render_table(doc: dict) -> str:
    results = doc["results"]
    if doc["command"] == "check":
        labels = list(dict.fromkeys(r["config"] for r in results))
        gadgets = list(dict.fromkeys(r["gadget"] for r in results))
        cell = {(r["gadget"], r["config"]): r for r in results}
        rows = []
        for g in gadgets:
            rows.append([g] + [cell[(g, lbl)]["verdict"] for lbl in labels])
        out = _table(["gadget"] + labels, rows)
        for r in results:
            w = r["witness"]
            if w:
                out += (f"{r['gadget']} [{r['config']}]: input {w['attacker_input']}, "
                        f"secrets 0x{w['secret_ref']:02x} vs 0x{w['secret']:02x} differ at "
                        f"observation {w['index']}: {w['ref_element']} vs {w['element']}\n")
        return out
    if doc["command"] == "attack":
        out = ""
        for r in results:
            rows = [[f"0x{i:02x}", lat, "hot" if lat < r["threshold"] else ""]
                    for i, lat in enumerate(r["latencies"])]
            out += _table(["line", "cycles", ""], rows)
            rec = ", ".join(f"0x{v:02x}" for v in r["recovered"]) or "none"
            out += (f"{r['gadget']} [{r['mode']}] secret 0x{r['secret']:02x}: recovered {rec}"
                    f" ({'success' if r['success'] else 'failed'})\n")
        return out
    out = ""
    for r in results:
        rows = [[e["cycle"], e["pc"], e["kind"], hex(e["addr"]), e["set"], e["tag"],
                 "spec" if e["speculative"] else ""] for e in r["events"]]
        out += _table(["cycle", "pc", "event", "addr", "set", "tag", ""], rows)
        brows = [[b["pc"], b["issue_cycle"], b["resolve_cycle"], b["predicted"], b["actual"],
                  "squash" if b["squashed"] else ""] for b in r["branches"]]
        out += _table(["branch", "issued", "resolved", "predicted", "actual", ""], brows)
        out += (f"{r['gadget']} [{r['mode']}]: {r['cycles']} cycles, "
                f"{r['speculative_fills']} speculative fills, "
                f"{r['speculative_hits']} speculative hits\n")
    return out
