"""Post-hoc perturbation of traces at the trace, event, and data levels.

Each phenomenon triggers independently with its configured probability.
With every probability at zero all functions are the identity.  Application
order: removals (head, tail, episode), insertions (alien, doubled), event
level (rename, order swap), data level; the trace is re-sorted by timestamp
after each level that can disturb ordering.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, TYPE_CHECKING

if TYPE_CHECKING:
    from .sim import Event, Trace

_PROFILE_P = 0.05
_PROFILE_MAX_SIZE = 3
_PROFILE_DELTA = 10

PROFILE_NAMES = ("complete", "control_flow_only", "data_only", "names_only", "none")


@dataclass(frozen=True)
class NoiseConfig:
    p_missing_head: float = 0.0
    max_head_size: int = 1
    p_missing_tail: float = 0.0
    max_tail_size: int = 1
    p_missing_episode: float = 0.0
    max_episode_size: int = 1
    p_alien_event: float = 0.0
    p_doubled_event: float = 0.0
    p_rename_activity: float = 0.0
    p_swap_order: float = 0.0
    p_perturb_integer: float = 0.0
    delta_max: int = 0
    p_perturb_string: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p_missing_head", "p_missing_tail", "p_missing_episode",
                     "p_alien_event", "p_doubled_event", "p_rename_activity",
                     "p_swap_order", "p_perturb_integer", "p_perturb_string"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.delta_max < 0:
            raise ValueError("delta_max must be non-negative")
        for p_name, size_name in (
            ("p_missing_head", "max_head_size"),
            ("p_missing_tail", "max_tail_size"),
            ("p_missing_episode", "max_episode_size"),
        ):
            if getattr(self, p_name) > 0 and getattr(self, size_name) < 1:
                raise ValueError(f"{size_name} must be >= 1 when {p_name} > 0")

    @property
    def silent(self) -> bool:
        return all(
            getattr(self, name) == 0.0
            for name in ("p_missing_head", "p_missing_tail", "p_missing_episode",
                         "p_alien_event", "p_doubled_event", "p_rename_activity",
                         "p_swap_order", "p_perturb_integer", "p_perturb_string")
        )


def profile(name: str) -> NoiseConfig:
    """Preset configurations; probabilities are presets of this implementation
    (0.05 per enabled phenomenon, removal sizes up to 3, integer delta 10)."""
    if name == "none":
        return NoiseConfig()
    if name == "complete":
        return NoiseConfig(
            p_missing_head=_PROFILE_P, max_head_size=_PROFILE_MAX_SIZE,
            p_missing_tail=_PROFILE_P, max_tail_size=_PROFILE_MAX_SIZE,
            p_missing_episode=_PROFILE_P, max_episode_size=_PROFILE_MAX_SIZE,
            p_alien_event=_PROFILE_P, p_doubled_event=_PROFILE_P,
            p_rename_activity=_PROFILE_P, p_swap_order=_PROFILE_P,
            p_perturb_integer=_PROFILE_P, delta_max=_PROFILE_DELTA,
            p_perturb_string=_PROFILE_P,
        )
    if name == "control_flow_only":
        return NoiseConfig(
            p_missing_head=_PROFILE_P, max_head_size=_PROFILE_MAX_SIZE,
            p_missing_tail=_PROFILE_P, max_tail_size=_PROFILE_MAX_SIZE,
            p_missing_episode=_PROFILE_P, max_episode_size=_PROFILE_MAX_SIZE,
            p_alien_event=_PROFILE_P, p_doubled_event=_PROFILE_P,
            p_rename_activity=_PROFILE_P, p_swap_order=_PROFILE_P,
        )
    if name == "data_only":
        return NoiseConfig(
            p_perturb_integer=_PROFILE_P, delta_max=_PROFILE_DELTA,
            p_perturb_string=_PROFILE_P,
        )
    if name == "names_only":
        return NoiseConfig(p_rename_activity=_PROFILE_P)
    raise KeyError(f"unknown noise profile {name!r}; choose from {PROFILE_NAMES}")


def _random_word(rng: random.Random, length: int = 8) -> str:
    return "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(length))


def _fresh_name(rng: random.Random, avoid: set[str]) -> str:
    while True:
        name = _random_word(rng)
        if name not in avoid:
            return name


def apply_trace_noise(trace: "Trace", config: NoiseConfig, rng: random.Random,
                      known_activities: Optional[set[str]] = None) -> "Trace":
    """Trace-level phenomena: head/tail/episode removal, alien and doubled
    events.  Removals never empty the trace (at least one event survives)."""
    from .sim import Event  # local import to avoid a module cycle

    events = [e.copy() for e in trace.events]

    if events and config.p_missing_head > 0 and rng.random() < config.p_missing_head:
        k = min(rng.randint(1, config.max_head_size), len(events) - 1)
        if k > 0:
            events = events[k:]
    if events and config.p_missing_tail > 0 and rng.random() < config.p_missing_tail:
        k = min(rng.randint(1, config.max_tail_size), len(events) - 1)
        if k > 0:
            events = events[:-k]
    if events and config.p_missing_episode > 0 and rng.random() < config.p_missing_episode:
        k = min(rng.randint(1, config.max_episode_size), len(events) - 1)
        if k > 0:
            start = rng.randint(0, len(events) - k)
            events = events[:start] + events[start + k:]

    if events and config.p_alien_event > 0 and rng.random() < config.p_alien_event:
        avoid = set(known_activities or ()) | {e.activity for e in events}
        low = min(e.timestamp for e in events)
        high = max(e.timestamp for e in events)
        alien = Event(
            case_id=trace.case_id,
            activity=_fresh_name(rng, avoid),
            timestamp=rng.randint(low, high),
            lifecycle="complete",
        )
        events.insert(rng.randint(0, len(events)), alien)
    if events and config.p_doubled_event > 0 and rng.random() < config.p_doubled_event:
        victim = rng.randrange(len(events))
        events.insert(victim + 1, events[victim].copy())

    from .sim import Trace as TraceCls
    out = TraceCls(trace.case_id, events)
    out.sort()
    return out


def apply_event_noise(trace: "Trace", config: NoiseConfig, rng: random.Random) -> "Trace":
    """Event-level phenomena: activity renaming and order perturbation
    (timestamp swap of adjacent events, then re-sort)."""
    out = trace.copy()
    if config.p_rename_activity > 0:
        for event in out.events:
            if rng.random() < config.p_rename_activity:
                event.activity = _fresh_name(rng, {event.activity})
    if config.p_swap_order > 0:
        for i in range(len(out.events) - 1):
            if rng.random() < config.p_swap_order:
                a, b = out.events[i], out.events[i + 1]
                a.timestamp, b.timestamp = b.timestamp, a.timestamp
    out.sort()
    return out


def apply_data_noise(event: "Event", config: NoiseConfig, rng: random.Random,
                     dynamic_integer_attrs: set[str] = frozenset(),
                     dynamic_string_attrs: set[str] = frozenset()) -> "Event":
    """Data-level phenomena on attributes coming from dynamic data objects;
    plain data objects are exempt."""
    out = event.copy()
    for name, value in list(out.attributes.items()):
        if (name in dynamic_integer_attrs and isinstance(value, int)
                and not isinstance(value, bool)
                and config.p_perturb_integer > 0
                and rng.random() < config.p_perturb_integer):
            out.attributes[name] = value + rng.randint(-config.delta_max, config.delta_max)
        elif (name in dynamic_string_attrs and isinstance(value, str)
                and config.p_perturb_string > 0
                and rng.random() < config.p_perturb_string):
            out.attributes[name] = _random_word(rng)
    return out


def apply_noise(trace: "Trace", config: NoiseConfig, rng: random.Random,
                known_activities: Optional[set[str]] = None,
                dynamic_integer_attrs: set[str] = frozenset(),
                dynamic_string_attrs: set[str] = frozenset()) -> "Trace":
    """All three noise levels in order; identity when config is all zeros."""
    if config.silent:
        return trace
    out = apply_trace_noise(trace, config, rng, known_activities)
    out = apply_event_noise(out, config, rng)
    if config.p_perturb_integer > 0 or config.p_perturb_string > 0:
        out.events = [
            apply_data_noise(e, config, rng, dynamic_integer_attrs, dynamic_string_attrs)
            for e in out.events
        ]
    return out
