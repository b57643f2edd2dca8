"""Command-line driver: generate, simulate, evolve, stream, export, validate.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime error.
A TOML config file (one section per subcommand) can provide defaults for any
flag; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import io as io_mod
from .control import ControlServer
from .evolve import EvolutionConfig, evolve
from .grammar import GrammarConfig, GrammarConfigError, generate_model
from .model import validate
from .noise import PROFILE_NAMES, NoiseConfig, profile
from .sim import (
    EventLog,
    InvalidModelError,
    SimulationConfig,
    simulate_log,
    simulate_trace,
)
from .stream import StreamConfig, StreamConfigError, StreamSession

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

log = logging.getLogger(__name__)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise UsageError(message)


def _env_seed() -> int:
    raw = os.environ.get("PLGEN_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PLGEN_SEED must be an integer, got {raw!r}") from None


def _load_config_defaults(argv: list[str]) -> dict[str, dict]:
    if "--config" not in argv:
        return {}
    path = argv[argv.index("--config") + 1]
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise UsageError(f"cannot load config {path!r}: {exc}") from exc
    return {k: v for k, v in doc.items() if isinstance(v, dict)}


def _add_grammar_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--weights", default="4,3,1,1,0.5",
                        help="comma list: single,sequence,parallel,exclusive,skip")
    parser.add_argument("--p-loop", type=float, default=0.1)
    parser.add_argument("--max-and-branches", type=int, default=3)
    parser.add_argument("--max-xor-branches", type=int, default=3)
    parser.add_argument("--p-data-object", type=float, default=0.1)
    parser.add_argument("--max-depth", type=int, default=3)


def _grammar_config(args, seed: int) -> GrammarConfig:
    try:
        weights = [float(w) for w in str(args.weights).split(",")]
    except ValueError:
        raise UsageError(f"--weights must be 5 numbers, got {args.weights!r}") from None
    if len(weights) != 5:
        raise UsageError("--weights needs exactly 5 values")
    try:
        return GrammarConfig(
            p_loop=args.p_loop,
            weight_single=weights[0],
            weight_sequence=weights[1],
            weight_parallel=weights[2],
            weight_exclusive=weights[3],
            weight_skip=weights[4],
            max_and_branches=args.max_and_branches,
            max_xor_branches=args.max_xor_branches,
            p_data_object=args.p_data_object,
            max_depth=args.max_depth,
            seed=seed,
        )
    except GrammarConfigError as exc:
        raise UsageError(str(exc)) from exc


def build_parser(defaults: dict[str, dict]) -> _Parser:
    parser = _Parser(prog="plgen", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="TOML file with per-subcommand defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="randomly generate model files")
    p_gen.add_argument("--count", type=int, default=1)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", default="models",
                       help="output file (count=1) or directory")
    p_gen.add_argument("--jobs", type=int, default=1)
    _add_grammar_flags(p_gen)
    p_gen.set_defaults(**defaults.get("generate", {}))

    p_sim = sub.add_parser("simulate", help="simulate a model into a XES log")
    p_sim.add_argument("model")
    p_sim.add_argument("--traces", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--noise", default="none",
                       help=f"noise profile: {', '.join(PROFILE_NAMES)}")
    p_sim.add_argument("--loop-probability", type=float, default=0.5)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.add_argument("--out", default="log.xes")
    p_sim.set_defaults(**defaults.get("simulate", {}))

    p_evo = sub.add_parser("evolve", help="derive a drifted variant of a model")
    p_evo.add_argument("model")
    p_evo.add_argument("--p-replace", type=float, default=0.2)
    p_evo.add_argument("--seed", type=int, default=None)
    p_evo.add_argument("--fragment-max-depth", type=int, default=2)
    p_evo.add_argument("--out", default="evolved.plgen.json")
    p_evo.set_defaults(**defaults.get("evolve", {}))

    p_str = sub.add_parser("stream", help="emit a live event stream")
    p_str.add_argument("model")
    p_str.add_argument("--port", type=int, default=9000)
    p_str.add_argument("--control-port", type=int, default=9001)
    p_str.add_argument("--multiplier", type=float, default=1.0)
    p_str.add_argument("--parallel-instances", type=int, default=2)
    p_str.add_argument("--seed", type=int, default=None)
    p_str.add_argument("--noise", default="none")
    p_str.add_argument("--format", dest="emission_format", default="ndjson",
                       choices=["ndjson", "xes_fragment"])
    p_str.add_argument("--max-rate", action="store_true",
                       help="emit as fast as possible")
    p_str.add_argument("--static-dir", default=None,
                       help="serve dashboard files from this directory")
    p_str.add_argument("--status-every", type=int, default=100)
    p_str.set_defaults(**defaults.get("stream", {}))

    p_exp = sub.add_parser("export", help="export a model as PNML or DOT")
    p_exp.add_argument("model")
    p_exp.add_argument("--format", required=True, choices=["pnml", "dot"])
    p_exp.add_argument("--out", default=None, help="default: stdout")
    p_exp.set_defaults(**defaults.get("export", {}))

    p_val = sub.add_parser("validate", help="check a model's structural invariants")
    p_val.add_argument("model")
    p_val.set_defaults(**defaults.get("validate", {}))

    return parser


def _seed_of(args) -> int:
    return args.seed if args.seed is not None else _env_seed()


def _noise_of(args) -> NoiseConfig:
    try:
        return profile(args.noise)
    except KeyError as exc:
        raise UsageError(str(exc)) from exc


def _generate_one(grammar_kwargs: dict, seed: int, name: str, model_id: str):
    config = GrammarConfig(**{**grammar_kwargs, "seed": seed})
    model = generate_model(config, name=name, model_id=model_id)
    text = io_mod.export_native(model, provenance={"grammar_seed": seed})
    return model, text


def cmd_generate(args) -> int:
    seed = _seed_of(args)
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    base = _grammar_config(args, seed)
    kwargs = {
        "p_loop": base.p_loop,
        "weight_single": base.weight_single,
        "weight_sequence": base.weight_sequence,
        "weight_parallel": base.weight_parallel,
        "weight_exclusive": base.weight_exclusive,
        "weight_skip": base.weight_skip,
        "max_and_branches": base.max_and_branches,
        "max_xor_branches": base.max_xor_branches,
        "p_data_object": base.p_data_object,
        "max_depth": base.max_depth,
    }
    if args.count == 1 and not os.path.isdir(args.out) and args.out.endswith(".json"):
        model, text = _generate_one(kwargs, seed, "Generated model", "process")
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(model.activities)} activities)")
        return EXIT_OK

    os.makedirs(args.out, exist_ok=True)
    width = len(str(args.count - 1))
    jobs = [(kwargs, seed + i, f"Generated model {i}", f"process_{i}")
            for i in range(args.count)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_generate_star, jobs))
    else:
        results = [_generate_star(job) for job in jobs]
    manifest = []
    for i, (model, text) in enumerate(results):
        filename = f"model_{i:0{width}d}.plgen.json"
        with open(os.path.join(args.out, filename), "w", encoding="utf-8") as fh:
            fh.write(text)
        manifest.append({"file": filename, "seed": seed + i,
                         "activities": len(model.activities)})
    with open(os.path.join(args.out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.count} models + manifest to {args.out}")
    return EXIT_OK


def _generate_star(job):
    return _generate_one(*job)


def cmd_simulate(args) -> int:
    if args.traces < 1:
        raise UsageError("--traces must be >= 1")
    model = io_mod.load_model(args.model)
    config = SimulationConfig(
        trace_count=args.traces,
        seed=_seed_of(args),
        loop_probability=args.loop_probability,
        noise=_noise_of(args),
    )
    if args.jobs > 1:
        violations = validate(model)
        if violations:
            raise InvalidModelError(violations)
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            traces = list(pool.map(_simulate_star,
                                   [(model, config, i) for i in range(args.traces)]))
        event_log = EventLog(traces)
    else:
        event_log = simulate_log(model, config)
    io_mod.save_xes(event_log, args.out)
    total_events = sum(len(t.events) for t in event_log.traces)
    print(f"wrote {args.out} ({len(event_log.traces)} traces, {total_events} events)")
    return EXIT_OK


def _simulate_star(job):
    model, config, index = job
    return simulate_trace(model, config, index)


def cmd_evolve(args) -> int:
    model = io_mod.load_model(args.model)
    config = EvolutionConfig(
        p_replace=args.p_replace,
        subprocess_grammar=GrammarConfig(max_depth=args.fragment_max_depth,
                                         seed=_seed_of(args)),
        seed=_seed_of(args),
    )
    evolved = evolve(model, config)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(io_mod.export_native(evolved, provenance={"evolution_seed": config.seed}))
    print(f"wrote {args.out} ({len(evolved.activities)} activities)")
    return EXIT_OK


def cmd_stream(args) -> int:
    model = io_mod.load_model(args.model)
    try:
        config = StreamConfig(
            parallel_instances=args.parallel_instances,
            time_multiplier=args.multiplier,
            port=args.port,
            simulation=SimulationConfig(seed=_seed_of(args), noise=_noise_of(args)),
            emission_format=args.emission_format,
            max_rate=args.max_rate,
        )
    except StreamConfigError as exc:
        raise UsageError(str(exc)) from exc
    session = StreamSession(model, config)
    session.start()
    control = ControlServer(session, port=args.control_port, static_dir=args.static_dir)
    control.start()
    print(f"stream port: {session.port}")
    print(f"control port: {control.port}")
    sys.stdout.flush()
    last_report = 0
    try:
        while session.running:
            time.sleep(0.2)
            status = session.status()
            if status["events_emitted"] >= last_report + args.status_every:
                last_report = status["events_emitted"]
                print(f"emitted {status['events_emitted']} events, "
                      f"buffer {status['buffer_size']}, "
                      f"clients {status['connected_clients']}")
                sys.stdout.flush()
    except KeyboardInterrupt:
        pass
    finally:
        control.stop()
        session.stop()
    print("stream stopped")
    return EXIT_OK


def cmd_export(args) -> int:
    model = io_mod.load_model(args.model)
    if args.format == "pnml":
        text = io_mod.export_pnml(model)
    else:
        text = io_mod.export_dot(model)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    model = io_mod.load_model(args.model)
    violations = validate(model)
    if not violations:
        print(f"{args.model}: valid")
        return EXIT_OK
    for v in violations:
        print(f"{args.model}: {v}")
    return EXIT_VALIDATION


_COMMANDS = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "evolve": cmd_evolve,
    "stream": cmd_stream,
    "export": cmd_export,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _load_config_defaults(argv)
        parser = build_parser(defaults)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidModelError, io_mod.NativeFormatError, io_mod.PnmlImportError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
