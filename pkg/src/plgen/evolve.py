"""Concept-drift support: derive a new model by replacing random activities
with freshly generated sub-processes."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .grammar import (
    GrammarConfig,
    ModelBuilder,
    NameAllocator,
    _max_id_suffix,
    sample_fragment,
)
from .model import ProcessModel, Sequence, validate
from .sim import InvalidModelError

log = logging.getLogger(__name__)

_FRAGMENT_RETRIES = 25


def _default_subprocess_grammar() -> GrammarConfig:
    # shallow fragments keep evolutions local
    return GrammarConfig(max_depth=2)


@dataclass(frozen=True)
class EvolutionConfig:
    p_replace: float = 0.2
    subprocess_grammar: GrammarConfig = field(default_factory=_default_subprocess_grammar)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_replace <= 1.0:
            raise ValueError("p_replace must be in [0, 1]")


def _letters_to_index(letters: str) -> int:
    value = 0
    for ch in letters:
        value = value * 26 + (ord(ch) - ord("A") + 1)
    return value - 1


def _next_activity_index(model: ProcessModel) -> int:
    best = -1
    for a in model.activities:
        if a.name.startswith("Activity "):
            suffix = a.name[len("Activity "):]
            if suffix.isalpha() and suffix.isupper():
                best = max(best, _letters_to_index(suffix))
    return best + 1


def _next_variable_index(model: ProcessModel) -> int:
    best = -1
    for d in model.data_objects:
        if d.name.startswith("variable_"):
            suffix = d.name[len("variable_"):]
            if suffix.isalpha() and suffix.islower():
                best = max(best, _letters_to_index(suffix.upper()))
    return best + 1


def evolve(model: ProcessModel, config: EvolutionConfig) -> ProcessModel:
    """Return a drifted copy of the model.

    Each activity is independently replaced, with probability `p_replace`, by
    a fragment sampled from the sub-process grammar; an empty fragment removes
    the activity.  Associated data objects of replaced activities are removed.
    Fragments whose splice would break the edge-typing rules (e.g. deleting
    the only activity between start and end) are resampled a bounded number of
    times, after which the activity is kept unchanged.
    """
    violations = validate(model)
    if violations:
        raise InvalidModelError(violations)

    rng = random.Random(config.seed)
    builder = ModelBuilder(id_offset=_max_id_suffix(model))
    names = NameAllocator(
        activity_index=_next_activity_index(model),
        variable_index=_next_variable_index(model),
    )

    activities = list(model.activities)
    gateways = list(model.gateways)
    data_objects = list(model.data_objects)
    associations = list(model.associations)
    sequences = set(model.sequences)
    loop_back = set(model.loop_back)

    gateway_ids = {g.id for g in model.gateways}
    start_ids = set(model.start_events)
    end_ids = set(model.end_events)

    for activity in model.activities:
        if rng.random() >= config.p_replace:
            continue
        preds = sorted(s.source for s in sequences if s.target == activity.id)
        succs = sorted(s.target for s in sequences if s.source == activity.id)

        fragment = None
        splice = None  # (entry_id, exit_id) or None for deletion
        for _ in range(_FRAGMENT_RETRIES):
            candidate = sample_fragment(config.subprocess_grammar, rng, names)
            if candidate is None:
                # deletion: every pred->succ edge must be a legal pair
                ok = all(
                    not (p in start_ids and (s in gateway_ids or s in end_ids))
                    and not (s in end_ids and p in gateway_ids)
                    and p != s
                    for p in preds for s in succs
                )
                if ok:
                    fragment, splice = None, None
                    break
                continue
            probe = ModelBuilder(id_offset=builder._counter)
            entry, exit_ = probe.materialize(candidate)
            entry_is_gateway = any(g.id == entry for g in probe.gateways)
            exit_is_gateway = any(g.id == exit_ for g in probe.gateways)
            if entry_is_gateway and any(p in start_ids for p in preds):
                continue
            if exit_is_gateway and any(s in end_ids for s in succs):
                continue
            fragment, splice = probe, (entry, exit_)
            break
        else:
            log.warning("evolution kept activity %s: no legal fragment after %d attempts",
                        activity.id, _FRAGMENT_RETRIES)
            continue

        # detach the replaced activity, its data objects and its edges
        loopback_preds = {s.source for s in loop_back if s.target == activity.id}
        activities.remove(activity)
        dropped_dobj = {a.data_object for a in associations if a.activity == activity.id}
        associations = [a for a in associations if a.activity != activity.id]
        data_objects = [d for d in data_objects if d.id not in dropped_dobj]
        sequences = {s for s in sequences
                     if s.source != activity.id and s.target != activity.id}
        loop_back = {s for s in loop_back
                     if s.source != activity.id and s.target != activity.id}

        if fragment is None:
            for p in preds:
                for s in succs:
                    edge = Sequence(p, s)
                    sequences.add(edge)
                    if p in loopback_preds:
                        loop_back.add(edge)
        else:
            builder._counter = fragment._counter
            activities.extend(fragment.activities)
            gateways.extend(fragment.gateways)
            data_objects.extend(fragment.data_objects)
            associations.extend(fragment.associations)
            sequences.update(fragment.sequences)
            loop_back.update(fragment.loop_back)
            gateway_ids.update(g.id for g in fragment.gateways)
            entry, exit_ = splice
            for p in preds:
                edge = Sequence(p, entry)
                sequences.add(edge)
                if p in loopback_preds:
                    loop_back.add(edge)
            for s in succs:
                sequences.add(Sequence(exit_, s))

    evolved = ProcessModel(
        id=model.id,
        name=model.name,
        start_events=model.start_events,
        end_events=model.end_events,
        activities=tuple(activities),
        gateways=tuple(gateways),
        data_objects=tuple(data_objects),
        sequences=tuple(sorted(sequences, key=lambda s: (s.source, s.target))),
        associations=tuple(associations),
        loop_back=frozenset(loop_back),
    )
    remaining = validate(evolved)
    if remaining:
        raise InvalidModelError(remaining)
    return evolved
