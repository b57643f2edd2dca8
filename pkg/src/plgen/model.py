"""Process model graph: typed components and structural validation.

A process is a directed graph of start/end events, activities, gateways and
sequence edges, plus data objects attached to activities.  Models are treated
as immutable after construction; every transformation builds a new model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .scripting import ScriptHook, ScriptHookPair


class GatewayKind(Enum):
    EXCLUSIVE = "exclusive"
    PARALLEL = "parallel"


class DataObjectKind(Enum):
    PLAIN = "plain"
    DYNAMIC_INTEGER = "dynamic_integer"
    DYNAMIC_STRING = "dynamic_string"


class Direction(Enum):
    #: data object is read before the activity executes
    REQUIRED = "required"
    #: data object is written by the activity
    GENERATED = "generated"


@dataclass(frozen=True)
class Activity:
    id: str
    name: str
    time_profile: Optional[ScriptHookPair] = None

    @property
    def instantaneous(self) -> bool:
        return self.time_profile is None or self.time_profile.time_lasted is None


@dataclass(frozen=True)
class Gateway:
    id: str
    kind: GatewayKind


@dataclass(frozen=True)
class DataObject:
    id: str
    name: str
    kind: DataObjectKind
    plain_value: Optional[str] = None
    generator: Optional[ScriptHook] = None

    @property
    def dynamic(self) -> bool:
        return self.kind is not DataObjectKind.PLAIN


@dataclass(frozen=True)
class Association:
    activity: str
    data_object: str
    direction: Direction


@dataclass(frozen=True)
class Sequence:
    source: str
    target: str


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    components: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class ModelError(Exception):
    """Raised on lookups of unknown component ids."""


@dataclass(frozen=True)
class ProcessModel:
    id: str
    name: str
    start_events: frozenset[str] = frozenset()
    end_events: frozenset[str] = frozenset()
    activities: tuple[Activity, ...] = ()
    gateways: tuple[Gateway, ...] = ()
    data_objects: tuple[DataObject, ...] = ()
    sequences: tuple[Sequence, ...] = ()
    associations: tuple[Association, ...] = ()
    #: sequence edges that re-enter a structured loop (split gateway -> rollback
    #: path); used by the simulator to apply the configured loop probability.
    loop_back: frozenset[Sequence] = frozenset()

    # Lookup maps, built once (object.__setattr__ because the dataclass is frozen).
    def __post_init__(self) -> None:
        acts = {a.id: a for a in self.activities}
        gws = {g.id: g for g in self.gateways}
        dobjs = {d.id: d for d in self.data_objects}
        succ: dict[str, set[str]] = {}
        pred: dict[str, set[str]] = {}
        for s in self.sequences:
            succ.setdefault(s.source, set()).add(s.target)
            pred.setdefault(s.target, set()).add(s.source)
        object.__setattr__(self, "_activities_by_id", acts)
        object.__setattr__(self, "_gateways_by_id", gws)
        object.__setattr__(self, "_data_objects_by_id", dobjs)
        object.__setattr__(self, "_succ", succ)
        object.__setattr__(self, "_pred", pred)

    # -- component access ---------------------------------------------------

    @property
    def flow_object_ids(self) -> set[str]:
        return (
            set(self.start_events)
            | set(self.end_events)
            | set(self._activities_by_id)
            | set(self._gateways_by_id)
        )

    def activity(self, component_id: str) -> Activity:
        try:
            return self._activities_by_id[component_id]
        except KeyError:
            raise ModelError(f"unknown activity id: {component_id}") from None

    def gateway(self, component_id: str) -> Gateway:
        try:
            return self._gateways_by_id[component_id]
        except KeyError:
            raise ModelError(f"unknown gateway id: {component_id}") from None

    def data_object(self, component_id: str) -> DataObject:
        try:
            return self._data_objects_by_id[component_id]
        except KeyError:
            raise ModelError(f"unknown data object id: {component_id}") from None

    def is_activity(self, component_id: str) -> bool:
        return component_id in self._activities_by_id

    def is_gateway(self, component_id: str) -> bool:
        return component_id in self._gateways_by_id

    def activity_names(self) -> set[str]:
        return {a.name for a in self.activities}

    def associations_of(self, activity_id: str, direction: Direction) -> list[Association]:
        return [
            a
            for a in self.associations
            if a.activity == activity_id and a.direction is direction
        ]

    # -- graph navigation ---------------------------------------------------

    def incoming(self, component_id: str) -> set[str]:
        """Sequence-predecessors of a flow object."""
        if component_id not in self.flow_object_ids:
            raise ModelError(f"unknown flow object id: {component_id}")
        return set(self._pred.get(component_id, set()))

    def outgoing(self, component_id: str) -> set[str]:
        """Sequence-successors of a flow object."""
        if component_id not in self.flow_object_ids:
            raise ModelError(f"unknown flow object id: {component_id}")
        return set(self._succ.get(component_id, set()))


def incoming(model: ProcessModel, component_id: str) -> set[str]:
    return model.incoming(component_id)


def outgoing(model: ProcessModel, component_id: str) -> set[str]:
    return model.outgoing(component_id)


# -- validation -------------------------------------------------------------

def _edge_class_allowed(model: ProcessModel, s: Sequence) -> bool:
    src_act = model.is_activity(s.source)
    src_gw = model.is_gateway(s.source)
    tgt_act = model.is_activity(s.target)
    tgt_gw = model.is_gateway(s.target)
    if s.source in model.start_events:
        return tgt_act
    if s.target in model.end_events:
        return src_act
    return (src_act or src_gw) and (tgt_act or tgt_gw)


def validate(model: ProcessModel) -> list[Violation]:
    """Check all structural invariants; an empty list means the model is valid."""
    violations: list[Violation] = []

    ids: list[str] = (
        list(model.start_events)
        + list(model.end_events)
        + [a.id for a in model.activities]
        + [g.id for g in model.gateways]
        + [d.id for d in model.data_objects]
    )
    seen: set[str] = set()
    for cid in ids:
        if cid in seen:
            violations.append(
                Violation("duplicate-id", f"component id {cid!r} is not unique", (cid,))
            )
        seen.add(cid)

    if not model.start_events:
        violations.append(Violation("no-start-event", "model has no start event"))
    if not model.end_events:
        violations.append(Violation("no-end-event", "model has no end event"))

    for a in model.activities:
        if not a.name:
            violations.append(
                Violation("empty-activity-name", f"activity {a.id} has an empty name", (a.id,))
            )

    flow_ids = model.flow_object_ids
    for s in model.sequences:
        if s.source == s.target:
            violations.append(
                Violation("self-loop-edge", f"sequence {s.source}->{s.target} is a self loop", (s.source,))
            )
            continue
        if s.source not in flow_ids or s.target not in flow_ids:
            violations.append(
                Violation(
                    "dangling-sequence",
                    f"sequence {s.source}->{s.target} references an unknown flow object",
                    (s.source, s.target),
                )
            )
            continue
        if not _edge_class_allowed(model, s):
            violations.append(
                Violation(
                    "forbidden-edge-class",
                    f"sequence {s.source}->{s.target} connects a forbidden pair of component types",
                    (s.source, s.target),
                )
            )

    # Data objects: well-typed payload and at most one association each.
    assoc_count: dict[str, int] = {}
    for assoc in model.associations:
        assoc_count[assoc.data_object] = assoc_count.get(assoc.data_object, 0) + 1
        if assoc.activity not in {a.id for a in model.activities}:
            violations.append(
                Violation(
                    "association-unknown-activity",
                    f"association references unknown activity {assoc.activity}",
                    (assoc.activity,),
                )
            )
        if assoc.data_object not in {d.id for d in model.data_objects}:
            violations.append(
                Violation(
                    "association-unknown-data-object",
                    f"association references unknown data object {assoc.data_object}",
                    (assoc.data_object,),
                )
            )
    for d in model.data_objects:
        if assoc_count.get(d.id, 0) > 1:
            violations.append(
                Violation(
                    "data-object-multiple-associations",
                    f"data object {d.id} participates in {assoc_count[d.id]} associations (at most 1 allowed)",
                    (d.id,),
                )
            )
        if d.kind is DataObjectKind.PLAIN:
            if d.plain_value is None or d.generator is not None:
                violations.append(
                    Violation(
                        "plain-data-object-payload",
                        f"plain data object {d.id} must carry a value and no generator",
                        (d.id,),
                    )
                )
        else:
            if d.generator is None or d.plain_value is not None:
                violations.append(
                    Violation(
                        "dynamic-data-object-payload",
                        f"dynamic data object {d.id} must carry a generator and no plain value",
                        (d.id,),
                    )
                )

    # Gateways: pure split or pure join.
    for g in model.gateways:
        n_in = len(model._pred.get(g.id, set()))
        n_out = len(model._succ.get(g.id, set()))
        if not ((n_in == 1 and n_out > 1) or (n_in > 1 and n_out == 1) or (n_in == 1 and n_out == 1)):
            violations.append(
                Violation(
                    "gateway-mixed-split-join",
                    f"gateway {g.id} has in-degree {n_in} and out-degree {n_out}; "
                    "a gateway must be a pure split or a pure join",
                    (g.id,),
                )
            )

    # Reachability: every activity/gateway on a start->end path.
    fwd = _reachable(model.start_events, model._succ)
    bwd = _reachable(model.end_events, model._pred)
    for cid in list(model._activities_by_id) + list(model._gateways_by_id):
        if cid not in fwd:
            violations.append(
                Violation("unreachable-from-start", f"{cid} is unreachable from any start event", (cid,))
            )
        if cid not in bwd:
            violations.append(
                Violation("cannot-reach-end", f"{cid} cannot reach any end event", (cid,))
            )

    return violations


def _reachable(roots: Iterable[str], adjacency: dict[str, set[str]]) -> set[str]:
    seen = set(roots)
    stack = list(roots)
    while stack:
        node = stack.pop()
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def activity_name_after(name: str) -> str:
    """Next name in the Activity A, ..., Z, AA, AB, ... sequence."""
    prefix = "Activity "
    letters = name[len(prefix):] if name.startswith(prefix) else name
    return prefix + _increment_letters(letters)


def _increment_letters(letters: str) -> str:
    # Base-26 increment over A..Z, extending length on overflow (Z -> AA).
    chars = list(letters)
    i = len(chars) - 1
    while i >= 0:
        if chars[i] != "Z":
            chars[i] = chr(ord(chars[i]) + 1)
            return "".join(chars)
        chars[i] = "A"
        i -= 1
    return "A" + "".join(chars)


def letters_for_index(index: int) -> str:
    """0 -> A, 25 -> Z, 26 -> AA, ... (spreadsheet column naming)."""
    out = ""
    index += 1
    while index > 0:
        index, rem = divmod(index - 1, 26)
        out = chr(ord("A") + rem) + out
    return out
