"""Token-game simulation of process models into traces and event logs."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional

from . import noise as noise_mod
from .model import Direction, ProcessModel, Sequence, validate
from .noise import NoiseConfig
from .scripting import ScriptEvaluator

#: default trace start: 2020-01-01T00:00:00Z in ms since epoch
DEFAULT_BASE_TIME_MS = 1_577_836_800_000

LIFECYCLE_START = "start"
LIFECYCLE_COMPLETE = "complete"


@dataclass
class Event:
    case_id: str
    activity: str
    timestamp: int  # ms since epoch
    lifecycle: str
    attributes: dict[str, object] = field(default_factory=dict)

    def copy(self) -> "Event":
        return Event(self.case_id, self.activity, self.timestamp, self.lifecycle,
                     dict(self.attributes))


@dataclass
class Trace:
    case_id: str
    events: list[Event] = field(default_factory=list)

    def sort(self) -> None:
        # stable: equal timestamps keep insertion order
        self.events.sort(key=lambda e: e.timestamp)

    def activity_sequence(self) -> list[str]:
        return [e.activity for e in self.events]

    def copy(self) -> "Trace":
        return Trace(self.case_id, [e.copy() for e in self.events])


@dataclass
class EventLog:
    traces: list[Trace] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.traces)


@dataclass(frozen=True)
class SimulationConfig:
    trace_count: int = 1
    seed: int = 0
    loop_probability: float = 0.5
    default_gap_seconds: float = 1.0
    case_id_prefix: str = "case_"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    #: lifecycle label of the single event of an instantaneous activity
    instantaneous_lifecycle: str = LIFECYCLE_COMPLETE
    base_time_ms: int = DEFAULT_BASE_TIME_MS
    #: simulated time between consecutive trace starts
    inter_arrival_seconds: float = 3600.0
    allow_script_io: bool = False

    def __post_init__(self) -> None:
        if self.trace_count < 1:
            raise ValueError("trace_count must be >= 1")
        if not 0.0 <= self.loop_probability <= 1.0:
            raise ValueError("loop_probability must be in [0, 1]")
        if self.default_gap_seconds < 0:
            raise ValueError("default_gap_seconds must be non-negative")
        if self.instantaneous_lifecycle not in (LIFECYCLE_START, LIFECYCLE_COMPLETE):
            raise ValueError("instantaneous_lifecycle must be 'start' or 'complete'")


class InvalidModelError(Exception):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "model failed validation: " + "; ".join(str(v) for v in self.violations)
        )


class DeadlockError(Exception):
    """The token game stalled with tokens left but no enabled component."""

    def __init__(self, case_id: str, stuck: list[str]):
        self.case_id = case_id
        self.stuck = stuck
        super().__init__(
            f"simulation deadlock in case {case_id!r}; stuck gateways: {', '.join(stuck) or 'none'}"
        )


def _derived_seed(seed: int, index: int) -> int:
    return (seed * 1_000_003 + index) & 0xFFFFFFFFFFFFFFFF


class _TraceRun:
    """State of one trace simulation: clock, tokens, script evaluator."""

    def __init__(self, model: ProcessModel, config: SimulationConfig,
                 case_id: str, rng: random.Random, start_time_ms: int):
        self.model = model
        self.config = config
        self.case_id = case_id
        self.rng = rng
        self.clock_ms = start_time_ms
        self.tokens: set[Sequence] = set()
        self.trace = Trace(case_id)
        self.evaluator = ScriptEvaluator(rng, allow_io=config.allow_script_io)
        self.required_at_head = 0  # required data objects with no preceding event

    # -- control flow -------------------------------------------------------

    def run(self) -> Trace:
        model = self.model
        start = self.rng.choice(sorted(model.start_events))
        stack: list[tuple[str, Optional[Sequence]]] = [(start, None)]
        while stack:
            component, edge = stack.pop()
            for nxt in reversed(self._step(component, edge)):
                stack.append(nxt)
        if self.tokens:
            stuck = sorted(
                {s.target for s in self.tokens if self.model.is_gateway(s.target)}
            )
            raise DeadlockError(self.case_id, stuck)
        self.trace.sort()
        return self.trace

    def _step(self, component: str, edge: Optional[Sequence]):
        """Process one component; returns the components to visit next (in order)."""
        model = self.model
        if component in model.end_events:
            if edge is not None:
                self.tokens.discard(edge)
            return []
        is_and = model.is_gateway(component) and model.gateway(component).kind.name == "PARALLEL"
        outgoing = sorted(model.outgoing(component))
        if not is_and:
            # start events, activities and exclusive gateways: consume the
            # incoming token, then continue along exactly one outgoing edge
            if model.is_activity(component):
                self._simulate_activity(model.activity(component))
            if edge is not None:
                self.tokens.discard(edge)
            if not outgoing:
                return []
            target = self._choose_successor(component, outgoing)
            chosen = Sequence(component, target)
            self.tokens.add(chosen)
            return [(target, chosen)]
        if len(outgoing) > 1:
            # parallel split: one token and one visit per branch, random order
            if edge is not None:
                self.tokens.discard(edge)
            self.rng.shuffle(outgoing)
            for target in outgoing:
                self.tokens.add(Sequence(component, target))
            return [(t, Sequence(component, t)) for t in outgoing]
        # parallel join: proceed only once every incoming edge holds a token
        incoming = model.incoming(component)
        if any(Sequence(p, component) not in self.tokens for p in incoming):
            return []
        for p in incoming:
            self.tokens.discard(Sequence(p, component))
        if not outgoing:
            return []
        target = outgoing[0]
        chosen = Sequence(component, target)
        self.tokens.add(chosen)
        return [(target, chosen)]

    def _choose_successor(self, component: str, outgoing: list[str]) -> str:
        rollbacks = [t for t in outgoing if Sequence(component, t) in self.model.loop_back]
        others = [t for t in outgoing if Sequence(component, t) not in self.model.loop_back]
        if rollbacks and others:
            if self.rng.random() < self.config.loop_probability:
                return self.rng.choice(rollbacks)
            return self.rng.choice(others)
        return self.rng.choice(outgoing)

    # -- activities ---------------------------------------------------------

    def _simulate_activity(self, activity) -> None:
        profile = activity.time_profile
        if profile is not None and profile.time_after is not None:
            gap_s = self.evaluator.evaluate(profile.time_after, self.case_id)
        else:
            gap_s = self.config.default_gap_seconds
        start_ms = self.clock_ms + round(gap_s * 1000)

        instantaneous = activity.instantaneous
        lifecycle = self.config.instantaneous_lifecycle if instantaneous else LIFECYCLE_START
        e_start = Event(self.case_id, activity.name, start_ms, lifecycle)

        for assoc in self.model.associations_of(activity.id, Direction.GENERATED):
            dobj = self.model.data_object(assoc.data_object)
            e_start.attributes[dobj.name] = self._data_value(dobj)
        for assoc in self.model.associations_of(activity.id, Direction.REQUIRED):
            dobj = self.model.data_object(assoc.data_object)
            value = self._data_value(dobj)
            if self.trace.events:
                self.trace.events[-1].attributes[dobj.name] = value
            else:
                # no preceding event: keep the value on this event instead of
                # dropping it
                e_start.attributes[dobj.name] = value
                self.required_at_head += 1
        self.trace.events.append(e_start)
        self.clock_ms = start_ms

        if not instantaneous:
            duration_s = self.evaluator.evaluate(profile.time_lasted, self.case_id)
            complete_ms = start_ms + round(duration_s * 1000)
            e_complete = Event(self.case_id, activity.name, complete_ms, LIFECYCLE_COMPLETE)
            self.trace.events.append(e_complete)
            self.clock_ms = complete_ms

    def _data_value(self, dobj):
        if not dobj.dynamic:
            return dobj.plain_value
        return self.evaluator.evaluate(dobj.generator, self.case_id)


def simulate_trace(model: ProcessModel, config: SimulationConfig, index: int,
                   apply_noise: bool = True) -> Trace:
    """Simulate the trace at position `index` of the log (deterministic)."""
    rng = random.Random(_derived_seed(config.seed, index))
    case_id = f"{config.case_id_prefix}{index + 1:04d}"
    start_ms = config.base_time_ms + round(config.inter_arrival_seconds * 1000) * index
    run = _TraceRun(model, config, case_id, rng, start_ms)
    trace = run.run()
    if apply_noise:
        noise_rng = random.Random(_derived_seed(config.noise.seed ^ config.seed, index))
        trace = noise_mod.apply_noise(
            trace, config.noise, noise_rng,
            known_activities=model.activity_names(),
            dynamic_integer_attrs={d.name for d in model.data_objects
                                   if d.kind.name == "DYNAMIC_INTEGER"},
            dynamic_string_attrs={d.name for d in model.data_objects
                                  if d.kind.name == "DYNAMIC_STRING"},
        )
    return trace


def simulate_log(model: ProcessModel, config: SimulationConfig) -> EventLog:
    """Simulate `config.trace_count` traces of the model."""
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)
    log = EventLog()
    for i in range(config.trace_count):
        log.traces.append(simulate_trace(model, config, i))
    return log
