"""``specwindow`` command-line entry point.

Exit codes: 0 success (and no LEAK for ``check``), 1 ``check`` found a LEAK,
2 configuration error, 3 simulation error or unusable gadget layout.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import jsonschema

from . import report
from ._backend import BACKEND
from .cache import CacheState
from .checker import ObserverMode, compare_models
from .config import DEFAULT_DEPTH, CacheGeometry, Mode, ModelConfig
from .errors import AssemblyError, ConfigError, SimulationError
from .gadgets import CORE_GADGETS, corpus_names, load_gadget
from .harness import DEFAULT_FUEL, LayoutError, attacker_flush, flush_reload_attack, mistrain, \
    plant_secret
from .isa import run_seq
from .muarch import simulate
from .predictor import PredictorState
from .randprog import random_case

_POS = {"type": "integer", "minimum": 1}
_NONNEG = {"type": "integer", "minimum": 0}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["seq", "a53", "ooo"]},
                "spec_depth": {"type": ["integer", "null"], "minimum": 0},
                "resolve_delay": _NONNEG,
                "hit_latency": _POS,
                "miss_latency": _POS,
                "alu_latency": _POS,
                "threshold": _POS,
                "mem_size": _POS,
            },
        },
        "cache": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"line_size": _POS, "num_sets": _POS, "ways": _POS},
        },
        "fuel": _POS,
        "training_iterations": _NONNEG,
        "observer": {"enum": ["fill-trace", "final-cache", "probe"]},
        "format": {"enum": ["json", "table"]},
    },
}


def load_run_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    try:
        jsonschema.validate(data, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise ConfigError(f"{path}: {where}: {e.message}") from None
    return data


class Settings:
    """Config file merged with command-line overrides."""

    def __init__(self, args):
        self.file = load_run_config(args.config) if args.config else {}
        model = dict(self.file.get("model", {}))
        self.explicit_depth = "spec_depth" in model
        if getattr(args, "depth", None) is not None:
            model["spec_depth"] = args.depth
            self.explicit_depth = True
        if getattr(args, "rho", None) is not None:
            model["resolve_delay"] = args.rho
        self.model = model
        self.geometry = CacheGeometry(**self.file.get("cache", {}))
        self.fuel = self.file.get("fuel", DEFAULT_FUEL)
        self.iterations = getattr(args, "iterations", None)
        if self.iterations is None:
            self.iterations = self.file.get("training_iterations")
        self.format = getattr(args, "format", None) or self.file.get("format", "json")
        self.observer = ObserverMode.parse(
            getattr(args, "observer", None) or self.file.get("observer", "fill-trace"))

    def model_config(self, mode=None) -> ModelConfig:
        fields = dict(self.model)
        mode = Mode.parse(mode or fields.pop("mode", "a53"))
        fields.pop("mode", None)
        if mode is not Mode.A53 or not self.explicit_depth:
            fields["spec_depth"] = DEFAULT_DEPTH[mode]
        return ModelConfig(mode=mode, geometry=self.geometry, **fields)

    def echo(self, cfgs) -> dict:
        out = {"backend": BACKEND, "fuel": self.fuel, "format": self.format,
               "models": [c.to_dict() for c in cfgs]}
        if self.iterations is not None:
            out["training_iterations"] = self.iterations
        return out


def _int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None


def _emit(doc: dict, settings: Settings, args) -> None:
    text = report.dumps(doc)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(report.render_table(doc) if settings.format == "table" else text)


def cmd_corpus_list(args) -> int:
    for name in corpus_names():
        g = load_gadget(name)
        print(f"{name:<20} {g.leak_layout:<7} {g.description}")
    return 0


def cmd_run(args) -> int:
    st = Settings(args)
    cfg = st.model_config(args.mode)
    if args.gadget == "random":
        if args.seed is None:
            raise ConfigError("run random needs --seed")
        program, state, pred, cache = random_case(args.seed, cfg.geometry, cfg.mem_size)
        if args.r0 is not None:
            state = state.with_reg(0, args.r0)
        name, r0, secret = "random", args.r0, None
    else:
        g = load_gadget(args.gadget)
        r0 = args.r0
        if r0 is None:
            r0 = (g.malicious_inputs or g.valid_inputs)[0]
        secret = g.secret_domain[0] if args.secret is None else args.secret
        try:
            mem = plant_secret(g.memory, g, secret)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        iters = g.training_iterations if st.iterations is None else st.iterations
        pred, cache = mistrain(g, cfg, PredictorState(), CacheState(cfg.geometry), iters,
                               mem, st.fuel)
        cache = attacker_flush(g, cache, cfg.geometry.line_size)
        program, state, name = g.program, g.initial_state(r0, mem), g.name
    r = simulate(program, state, cfg, pred, cache, st.fuel)
    seq_state, _ = run_seq(state, program, st.fuel)
    res = report.run_result(name, cfg.mode.value, r, seq_state, r0, secret, args.seed)
    _emit(report.make_report("run", st.echo([cfg]), [res]), st, args)
    return 0


def cmd_attack(args) -> int:
    st = Settings(args)
    cfg = st.model_config(args.mode)
    g = load_gadget(args.gadget)
    if args.secret is None:
        raise ConfigError("attack needs --secret")
    lo, hi = g.secret_domain
    if not lo <= args.secret <= hi:
        raise ConfigError(f"secret {args.secret} outside domain [{lo}, {hi}]")
    a = flush_reload_attack(g, args.secret, cfg, st.iterations, args.r0, st.fuel)
    _emit(report.make_report("attack", st.echo([cfg]), [report.attack_result(a)]), st, args)
    return 0


def cmd_check(args) -> int:
    st = Settings(args)
    if args.mode and args.modes:
        raise ConfigError("give either --mode or --modes, not both")
    if args.modes:
        modes = [m for m in args.modes.split(",") if m]
    elif args.mode:
        modes = [args.mode]
    else:
        modes = [st.model.get("mode", "a53")]
    cfgs = [st.model_config(m) for m in modes]
    if args.gadget == "all":
        gadgets = [load_gadget(n) for n in CORE_GADGETS]
    else:
        gadgets = [load_gadget(n) for n in args.gadget.split(",")]
    if st.iterations is not None:
        gadgets = [replace(g, training_iterations=st.iterations) for g in gadgets]
    matrix = compare_models(gadgets, cfgs, st.observer, st.fuel)
    echo = st.echo(cfgs)
    echo["observer"] = st.observer.value
    _emit(report.make_report("check", echo, report.matrix_results(matrix)), st, args)
    return 1 if matrix.any_leak else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="specwindow",
                                description="Speculative cache leakage simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="FILE", help="run-config JSON file")
        sp.add_argument("--out", metavar="FILE", help="also write the JSON report here")
        sp.add_argument("--format", choices=["json", "table"], help="stdout format")
        sp.add_argument("--iterations", type=_int, help="training iterations override")
        sp.add_argument("--depth", type=_int, help="A53 speculation depth D")
        sp.add_argument("--rho", type=_int, help="branch resolve delay")

    sp = sub.add_parser("run", help="simulate one gadget run and dump its trace")
    sp.add_argument("gadget", help="corpus name, manifest path, or 'random'")
    sp.add_argument("--mode")
    sp.add_argument("--r0", type=_int, help="attacker-controlled R0")
    sp.add_argument("--secret", type=_int)
    sp.add_argument("--seed", type=_int, help="seed for 'random'")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("attack", help="Flush+Reload secret recovery")
    sp.add_argument("gadget")
    sp.add_argument("--mode")
    sp.add_argument("--secret", type=_int)
    sp.add_argument("--r0", type=_int, help="attacker input (default: first malicious)")
    common(sp)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("check", help="speculative non-interference verdicts")
    sp.add_argument("gadget", help="'all', a corpus name, or comma-separated names")
    sp.add_argument("--mode")
    sp.add_argument("--modes", help="comma-separated modes, e.g. seq,a53,ooo")
    sp.add_argument("--observer", choices=[m.value for m in ObserverMode])
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("corpus-list", help="list bundled gadgets")
    sp.set_defaults(func=cmd_corpus_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LayoutError as e:
        print(f"specwindow: {e}", file=sys.stderr)
        return 3
    except (ConfigError, AssemblyError) as e:
        print(f"specwindow: config error: {e}", file=sys.stderr)
        return 2
    except SimulationError as e:
        print(f"specwindow: simulation error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
