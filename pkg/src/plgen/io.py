"""Model and log serialization: native JSON format, PNML, DOT, XES."""

from __future__ import annotations

import gzip
import json
import os
from datetime import datetime, timezone
from typing import Optional
from xml.etree import ElementTree as ET

from .model import (
    Activity,
    Association,
    DataObject,
    DataObjectKind,
    Direction,
    Gateway,
    GatewayKind,
    ProcessModel,
    Sequence,
    validate,
)
from .scripting import ScriptHook, ScriptHookPair
from .sim import EventLog, InvalidModelError

NATIVE_FORMAT = "plgen-model"
NATIVE_VERSION = 1


class NativeFormatError(Exception):
    """Malformed native model document; carries a location description."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{message}" + (f" (at {location})" if location else ""))


class PnmlImportError(Exception):
    pass


# -- native format -----------------------------------------------------------

def _hook_to_json(hook: Optional[ScriptHook]) -> Optional[dict]:
    if hook is None:
        return None
    return {"source": hook.source, "return_kind": hook.return_kind}


def _hook_from_json(doc, entry_point: str, location: str,
                    base_dir: Optional[str]) -> Optional[ScriptHook]:
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise NativeFormatError("hook must be an object", location)
    if "path" in doc:
        path = doc["path"]
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                source = fh.read()
        except OSError as exc:
            raise NativeFormatError(f"cannot load hook file {path!r}: {exc}", location) from exc
    elif "source" in doc:
        source = doc["source"]
    else:
        raise NativeFormatError("hook needs either 'source' or 'path'", location)
    return ScriptHook(source=source, entry_point=entry_point,
                      return_kind=doc.get("return_kind", "seconds"))


def export_native(model: ProcessModel, provenance: Optional[dict] = None) -> str:
    """Serialize a model to the native JSON document (round-trip stable)."""
    doc = {
        "format": NATIVE_FORMAT,
        "version": NATIVE_VERSION,
        "id": model.id,
        "name": model.name,
        "start_events": sorted(model.start_events),
        "end_events": sorted(model.end_events),
        "activities": [
            {
                "id": a.id,
                "name": a.name,
                "time_after": _hook_to_json(a.time_profile.time_after) if a.time_profile else None,
                "time_lasted": _hook_to_json(a.time_profile.time_lasted) if a.time_profile else None,
            }
            for a in model.activities
        ],
        "gateways": [{"id": g.id, "kind": g.kind.value} for g in model.gateways],
        "data_objects": [
            {
                "id": d.id,
                "name": d.name,
                "kind": d.kind.value,
                "plain_value": d.plain_value,
                "generator": _hook_to_json(d.generator),
            }
            for d in model.data_objects
        ],
        "sequences": [[s.source, s.target] for s in model.sequences],
        "associations": [
            {"activity": a.activity, "data_object": a.data_object, "direction": a.direction.value}
            for a in model.associations
        ],
        "loop_back": sorted([s.source, s.target] for s in model.loop_back),
    }
    if provenance:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def import_native(text: str, base_dir: Optional[str] = None) -> ProcessModel:
    """Parse a native JSON document back into a model."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NativeFormatError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}") from exc
    if not isinstance(doc, dict) or doc.get("format") != NATIVE_FORMAT:
        raise NativeFormatError(f"not a {NATIVE_FORMAT} document", "format")
    if doc.get("version") != NATIVE_VERSION:
        raise NativeFormatError(f"unsupported version {doc.get('version')!r}", "version")

    def need(key: str, kind, where: str = ""):
        if key not in doc:
            raise NativeFormatError(f"missing field {key!r}", where or key)
        value = doc[key]
        if not isinstance(value, kind):
            raise NativeFormatError(f"field {key!r} has wrong type", where or key)
        return value

    activities = []
    for i, entry in enumerate(need("activities", list)):
        loc = f"activities[{i}]"
        if not isinstance(entry, dict) or "id" not in entry or "name" not in entry:
            raise NativeFormatError("activity needs 'id' and 'name'", loc)
        time_after = _hook_from_json(entry.get("time_after"), "time_after", loc, base_dir)
        time_lasted = _hook_from_json(entry.get("time_lasted"), "time_lasted", loc, base_dir)
        profile = None
        if time_after is not None or time_lasted is not None:
            profile = ScriptHookPair(time_after=time_after, time_lasted=time_lasted)
        activities.append(Activity(id=entry["id"], name=entry["name"], time_profile=profile))

    gateways = []
    for i, entry in enumerate(need("gateways", list)):
        loc = f"gateways[{i}]"
        try:
            kind = GatewayKind(entry["kind"])
        except (KeyError, TypeError, ValueError):
            raise NativeFormatError("gateway needs a valid 'kind'", loc) from None
        gateways.append(Gateway(id=entry["id"], kind=kind))

    data_objects = []
    for i, entry in enumerate(need("data_objects", list)):
        loc = f"data_objects[{i}]"
        try:
            kind = DataObjectKind(entry["kind"])
        except (KeyError, TypeError, ValueError):
            raise NativeFormatError("data object needs a valid 'kind'", loc) from None
        generator = _hook_from_json(entry.get("generator"), "generate", loc, base_dir)
        data_objects.append(
            DataObject(id=entry["id"], name=entry["name"], kind=kind,
                       plain_value=entry.get("plain_value"), generator=generator)
        )

    sequences = []
    for i, pair in enumerate(need("sequences", list)):
        if not isinstance(pair, list) or len(pair) != 2:
            raise NativeFormatError("sequence must be a [source, target] pair", f"sequences[{i}]")
        sequences.append(Sequence(pair[0], pair[1]))

    associations = []
    for i, entry in enumerate(need("associations", list)):
        loc = f"associations[{i}]"
        try:
            direction = Direction(entry["direction"])
        except (KeyError, TypeError, ValueError):
            raise NativeFormatError("association needs a valid 'direction'", loc) from None
        associations.append(
            Association(activity=entry["activity"], data_object=entry["data_object"],
                        direction=direction)
        )

    loop_back = frozenset(
        Sequence(pair[0], pair[1]) for pair in doc.get("loop_back", [])
    )

    return ProcessModel(
        id=need("id", str),
        name=need("name", str),
        start_events=frozenset(need("start_events", list)),
        end_events=frozenset(need("end_events", list)),
        activities=tuple(activities),
        gateways=tuple(gateways),
        data_objects=tuple(data_objects),
        sequences=tuple(sequences),
        associations=tuple(associations),
        loop_back=loop_back,
    )


def load_model(path: str) -> ProcessModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".pnml"):
        return import_pnml(text)
    return import_native(text, base_dir=os.path.dirname(os.path.abspath(path)))


# -- PNML --------------------------------------------------------------------

def export_pnml(model: ProcessModel) -> str:
    """Translate the model into a place/transition net (control flow only).

    Activities become labeled transitions, exclusive gateways places, parallel
    gateways invisible transitions; connector places/transitions are inserted
    where the bipartite structure requires them.
    """
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)

    root = ET.Element("pnml")
    net = ET.SubElement(root, "net", id=f"net_{model.id}",
                        type="http://www.pnml.org/version-2009/grammar/ptnet")
    _text_child(net, "name", model.name)
    page = ET.SubElement(net, "page", id="page0")

    def add_place(pid: str, marked: bool = False) -> None:
        place = ET.SubElement(page, "place", id=pid)
        if marked:
            marking = ET.SubElement(place, "initialMarking")
            ET.SubElement(marking, "text").text = "1"

    def add_transition(tid: str, label: str, invisible: bool, activity_id: str = "") -> None:
        trans = ET.SubElement(page, "transition", id=tid)
        _text_child(trans, "name", label)
        tool = ET.SubElement(trans, "toolspecific", tool="plgen", version="1")
        tool.set("invisible", "true" if invisible else "false")
        if activity_id:
            tool.set("activity", activity_id)

    # node kind per flow object: True -> place, False -> transition
    is_place: dict[str, bool] = {}
    for eid in sorted(model.start_events):
        add_place(f"p_{eid}", marked=True)
        is_place[eid] = True
    for eid in sorted(model.end_events):
        add_place(f"p_{eid}")
        is_place[eid] = True
    for g in sorted(model.gateways, key=lambda g: g.id):
        if g.kind is GatewayKind.EXCLUSIVE:
            add_place(f"p_{g.id}")
            is_place[g.id] = True
        else:
            add_transition(f"t_{g.id}", "", invisible=True)
            is_place[g.id] = False
    for a in sorted(model.activities, key=lambda a: a.id):
        add_transition(f"t_{a.id}", a.name, invisible=False, activity_id=a.id)
        is_place[a.id] = False

    arcs: list[tuple[str, str]] = []
    for i, s in enumerate(sorted(model.sequences, key=lambda s: (s.source, s.target))):
        src_place = is_place[s.source]
        tgt_place = is_place[s.target]
        src_node = ("p_" if src_place else "t_") + s.source
        tgt_node = ("p_" if tgt_place else "t_") + s.target
        if src_place and tgt_place:
            # place -> place: connect via an invisible transition
            mid = f"t_conn{i}"
            add_transition(mid, "", invisible=True)
            arcs += [(src_node, mid), (mid, tgt_node)]
        elif not src_place and not tgt_place:
            # transition -> transition: connect via a place
            mid = f"p_conn{i}"
            add_place(mid)
            arcs += [(src_node, mid), (mid, tgt_node)]
        else:
            arcs.append((src_node, tgt_node))

    for i, (src, tgt) in enumerate(arcs):
        ET.SubElement(page, "arc", id=f"arc{i}", source=src, target=tgt)

    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def _text_child(parent: ET.Element, tag: str, text: str) -> None:
    el = ET.SubElement(parent, tag)
    ET.SubElement(el, "text").text = text


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def import_pnml(text: str) -> ProcessModel:
    """Reconstruct a process model from a place/transition net.

    Best effort: labeled transitions become activities; branching places
    become exclusive gateways, branching invisible transitions parallel
    gateways; pass-through nodes are contracted into direct edges.  Works for
    nets following this tool's export conventions and similar encodings.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise PnmlImportError(f"invalid XML: {exc}") from exc

    places: list[str] = []
    marked: set[str] = set()
    transitions: dict[str, tuple[str, bool]] = {}  # id -> (label, invisible)
    arcs: list[tuple[str, str]] = []
    for el in root.iter():
        tag = _strip_ns(el.tag)
        if tag == "place":
            pid = el.get("id")
            places.append(pid)
            for sub in el.iter():
                if _strip_ns(sub.tag) == "initialMarking":
                    marked.add(pid)
        elif tag == "transition":
            tid = el.get("id")
            label = ""
            invisible = False
            for sub in el:
                sub_tag = _strip_ns(sub.tag)
                if sub_tag == "name":
                    for text_el in sub:
                        if _strip_ns(text_el.tag) == "text" and text_el.text:
                            label = text_el.text
                elif sub_tag == "toolspecific" and sub.get("invisible") == "true":
                    invisible = True
            if not label:
                invisible = True
            transitions[tid] = (label, invisible)
        elif tag == "arc":
            arcs.append((el.get("source"), el.get("target")))
    if not places or not transitions:
        raise PnmlImportError("document contains no net (no places or no transitions)")

    succ: dict[str, list[str]] = {}
    pred: dict[str, list[str]] = {}
    for src, tgt in arcs:
        succ.setdefault(src, []).append(tgt)
        pred.setdefault(tgt, []).append(src)

    # classify each net node
    activities: dict[str, str] = {}
    gateways: dict[str, GatewayKind] = {}
    starts: list[str] = []
    ends: list[str] = []
    passthrough: set[str] = set()
    for pid in places:
        n_in = len(pred.get(pid, []))
        n_out = len(succ.get(pid, []))
        if pid in marked or n_in == 0:
            starts.append(pid)
        elif n_out == 0:
            ends.append(pid)
        elif n_in > 1 or n_out > 1:
            gateways[pid] = GatewayKind.EXCLUSIVE
        else:
            passthrough.add(pid)
    for tid, (label, invisible) in transitions.items():
        if not invisible:
            activities[tid] = label
        elif len(pred.get(tid, [])) > 1 or len(succ.get(tid, [])) > 1:
            gateways[tid] = GatewayKind.PARALLEL
        else:
            passthrough.add(tid)

    def real_successors(node: str) -> list[str]:
        out: list[str] = []
        stack = list(succ.get(node, []))
        seen: set[str] = set()
        while stack:
            nxt = stack.pop()
            if nxt in seen:
                continue
            seen.add(nxt)
            if nxt in passthrough:
                stack.extend(succ.get(nxt, []))
            else:
                out.append(nxt)
        return sorted(out)

    real_nodes = set(activities) | set(gateways) | set(starts) | set(ends)
    sequences: set[Sequence] = set()
    for node in sorted(real_nodes):
        if node in ends:
            continue
        for tgt in real_successors(node):
            sequences.add(Sequence(node, tgt))

    return ProcessModel(
        id="imported",
        name="Imported net",
        start_events=frozenset(starts),
        end_events=frozenset(ends),
        activities=tuple(Activity(id=tid, name=label)
                         for tid, label in sorted(activities.items())),
        gateways=tuple(Gateway(id=nid, kind=kind)
                       for nid, kind in sorted(gateways.items())),
        sequences=tuple(sorted(sequences, key=lambda s: (s.source, s.target))),
    )


# -- DOT ---------------------------------------------------------------------

def export_dot(model: ProcessModel) -> str:
    """Deterministic Graphviz text: boxes for activities, diamonds for
    gateways, circles for events, dashed notes for data objects."""
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)
    lines = [f'digraph "{model.name}" {{', "  rankdir=LR;"]
    for eid in sorted(model.start_events):
        lines.append(f'  "{eid}" [shape=circle, label="", style=filled, fillcolor=black];')
    for eid in sorted(model.end_events):
        lines.append(f'  "{eid}" [shape=doublecircle, label=""];')
    for a in sorted(model.activities, key=lambda a: a.id):
        lines.append(f'  "{a.id}" [shape=box, label="{a.name}"];')
    for g in sorted(model.gateways, key=lambda g: g.id):
        glyph = "×" if g.kind is GatewayKind.EXCLUSIVE else "+"
        lines.append(f'  "{g.id}" [shape=diamond, label="{glyph}"];')
    for d in sorted(model.data_objects, key=lambda d: d.id):
        lines.append(f'  "{d.id}" [shape=note, label="{d.name}"];')
    for s in sorted(model.sequences, key=lambda s: (s.source, s.target)):
        lines.append(f'  "{s.source}" -> "{s.target}";')
    for assoc in sorted(model.associations, key=lambda a: (a.activity, a.data_object)):
        if assoc.direction is Direction.GENERATED:
            lines.append(f'  "{assoc.activity}" -> "{assoc.data_object}" [style=dashed];')
        else:
            lines.append(f'  "{assoc.data_object}" -> "{assoc.activity}" [style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# -- XES ---------------------------------------------------------------------

_XES_EXTENSIONS = (
    ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
    ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
)


def _xes_timestamp(ms: int) -> str:
    dt = datetime.fromtimestamp(ms / 1000.0, tz=timezone.utc)
    return dt.isoformat(timespec="milliseconds")


def export_xes(log: EventLog, indent: bool = True) -> str:
    """Serialize an event log as a XES document."""
    root = ET.Element("log", attrib={
        "xes.version": "1.0",
        "xes.features": "nested-attributes",
        "xmlns": "http://www.xes-standard.org/",
    })
    for name, prefix, uri in _XES_EXTENSIONS:
        ET.SubElement(root, "extension", name=name, prefix=prefix, uri=uri)
    for trace in log.traces:
        trace_el = ET.SubElement(root, "trace")
        ET.SubElement(trace_el, "string", key="concept:name", value=trace.case_id)
        for event in trace.events:
            event_el = ET.SubElement(trace_el, "event")
            ET.SubElement(event_el, "string", key="concept:name", value=event.activity)
            ET.SubElement(event_el, "date", key="time:timestamp",
                          value=_xes_timestamp(event.timestamp))
            ET.SubElement(event_el, "string", key="lifecycle:transition",
                          value=event.lifecycle)
            for key in sorted(event.attributes):
                value = event.attributes[key]
                if isinstance(value, bool):
                    ET.SubElement(event_el, "boolean", key=key, value=str(value).lower())
                elif isinstance(value, int):
                    ET.SubElement(event_el, "int", key=key, value=str(value))
                else:
                    ET.SubElement(event_el, "string", key=key, value=str(value))
    if indent:
        ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def save_xes(log: EventLog, path: str) -> None:
    text = export_xes(log)
    if path.endswith(".gz"):
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
