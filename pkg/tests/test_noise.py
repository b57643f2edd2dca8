import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from plgen.noise import (
    PROFILE_NAMES,
    NoiseConfig,
    apply_data_noise,
    apply_event_noise,
    apply_noise,
    apply_trace_noise,
    profile,
)
from plgen.sim import Event, Trace


def make_trace(n=8, case="c1"):
    return Trace(case, [
        Event(case, f"A{i}", 1_000_000 + i * 1000, "complete", {"num": i, "txt": f"w{i}"})
        for i in range(n)
    ])


def names(trace):
    return [e.activity for e in trace.events]


def test_default_config_is_silent():
    assert NoiseConfig().silent
    assert not profile("complete").silent


def test_silent_config_is_identity():
    trace = make_trace()
    rng = random.Random(0)
    out = apply_noise(trace, NoiseConfig(), rng)
    assert out is trace  # not even copied


def test_profiles_enable_expected_phenomena():
    complete = profile("complete")
    assert complete.p_missing_head == 0.05 and complete.p_perturb_string == 0.05
    cf = profile("control_flow_only")
    assert cf.p_missing_head > 0 and cf.p_perturb_integer == 0
    data = profile("data_only")
    assert data.p_missing_head == 0 and data.p_perturb_integer > 0
    names_only = profile("names_only")
    assert names_only.p_rename_activity > 0
    assert all(getattr(names_only, f) == 0.0 for f in (
        "p_missing_head", "p_missing_tail", "p_missing_episode", "p_alien_event",
        "p_doubled_event", "p_swap_order", "p_perturb_integer", "p_perturb_string"))
    assert profile("none").silent
    with pytest.raises(KeyError):
        profile("everything")
    assert set(PROFILE_NAMES) == {
        "complete", "control_flow_only", "data_only", "names_only", "none"}


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        NoiseConfig(p_alien_event=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(delta_max=-1)
    with pytest.raises(ValueError):
        NoiseConfig(p_missing_head=0.1, max_head_size=0)


# -- phenomenon isolation ----------------------------------------------------

def test_missing_head_removes_prefix_only():
    trace = make_trace()
    config = NoiseConfig(p_missing_head=1.0, max_head_size=3)
    out = apply_trace_noise(trace, config, random.Random(1))
    k = len(trace.events) - len(out.events)
    assert 1 <= k <= 3
    assert names(out) == names(trace)[k:]


def test_missing_tail_removes_suffix_only():
    trace = make_trace()
    config = NoiseConfig(p_missing_tail=1.0, max_tail_size=3)
    out = apply_trace_noise(trace, config, random.Random(1))
    k = len(trace.events) - len(out.events)
    assert 1 <= k <= 3
    assert names(out) == names(trace)[:-k]


def test_missing_episode_removes_contiguous_run():
    trace = make_trace(10)
    config = NoiseConfig(p_missing_episode=1.0, max_episode_size=3)
    out = apply_trace_noise(trace, config, random.Random(1))
    k = len(trace.events) - len(out.events)
    assert 1 <= k <= 3
    original = names(trace)
    # removed block is contiguous: the survivors are a prefix plus a suffix
    for start in range(len(original) - k + 1):
        if names(out) == original[:start] + original[start + k:]:
            break
    else:
        pytest.fail("removed events were not contiguous")


def test_removals_never_empty_a_trace():
    trace = make_trace(2)
    config = NoiseConfig(
        p_missing_head=1.0, max_head_size=5,
        p_missing_tail=1.0, max_tail_size=5,
        p_missing_episode=1.0, max_episode_size=5,
    )
    for seed in range(50):
        out = apply_trace_noise(trace, config, random.Random(seed))
        assert len(out.events) >= 1


def test_alien_event_adds_unknown_name_inside_span():
    trace = make_trace()
    config = NoiseConfig(p_alien_event=1.0)
    known = set(names(trace))
    out = apply_trace_noise(trace, config, random.Random(2), known_activities=known)
    assert len(out.events) == len(trace.events) + 1
    aliens = [e for e in out.events if e.activity not in known]
    assert len(aliens) == 1
    low = min(e.timestamp for e in trace.events)
    high = max(e.timestamp for e in trace.events)
    assert low <= aliens[0].timestamp <= high
    # original events untouched
    survivors = [e for e in out.events if e.activity in known]
    assert [e.activity for e in survivors] == names(trace)


def test_doubled_event_duplicates_one_event():
    trace = make_trace()
    config = NoiseConfig(p_doubled_event=1.0)
    out = apply_trace_noise(trace, config, random.Random(3))
    assert len(out.events) == len(trace.events) + 1
    delta = Counter(names(out)) - Counter(names(trace))
    assert sum(delta.values()) == 1


def test_rename_changes_names_only():
    trace = make_trace()
    config = NoiseConfig(p_rename_activity=0.5)
    out = apply_event_noise(trace, config, random.Random(4))
    assert len(out.events) == len(trace.events)
    assert [e.timestamp for e in out.events] == [e.timestamp for e in trace.events]
    assert [e.attributes for e in out.events] == [e.attributes for e in trace.events]
    changed = sum(1 for a, b in zip(names(trace), names(out)) if a != b)
    assert changed >= 1


def test_swap_order_permutes_without_changing_content():
    trace = make_trace(12)
    config = NoiseConfig(p_swap_order=1.0)
    out = apply_event_noise(trace, config, random.Random(5))
    assert sorted(names(out)) == sorted(names(trace))
    assert sorted(e.timestamp for e in out.events) == [e.timestamp for e in trace.events]
    assert names(out) != names(trace)
    ts = [e.timestamp for e in out.events]
    assert ts == sorted(ts)  # still emitted in timestamp order


def test_integer_perturbation_bounded_and_targeted():
    event = Event("c", "A", 0, "complete", {"num": 50, "txt": "w", "fixed": 7})
    config = NoiseConfig(p_perturb_integer=1.0, delta_max=10)
    out = apply_data_noise(event, config, random.Random(6),
                           dynamic_integer_attrs={"num"})
    assert abs(out.attributes["num"] - 50) <= 10
    assert out.attributes["fixed"] == 7  # not a dynamic attribute: untouched
    assert out.attributes["txt"] == "w"


def test_string_perturbation_targeted():
    event = Event("c", "A", 0, "complete", {"num": 50, "txt": "word"})
    config = NoiseConfig(p_perturb_string=1.0)
    out = apply_data_noise(event, config, random.Random(7),
                           dynamic_string_attrs={"txt"})
    assert out.attributes["txt"] != "word"
    assert out.attributes["num"] == 50


def test_noise_is_deterministic_per_rng_seed():
    trace = make_trace(10)
    config = profile("complete")
    a = apply_noise(trace, config, random.Random(99), known_activities=set(names(trace)),
                    dynamic_integer_attrs={"num"}, dynamic_string_attrs={"txt"})
    b = apply_noise(trace, config, random.Random(99), known_activities=set(names(trace)),
                    dynamic_integer_attrs={"num"}, dynamic_string_attrs={"txt"})
    assert a.events == b.events


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=10**6))
def test_full_noise_keeps_traces_nonempty_and_sorted(n, seed):
    trace = make_trace(n)
    config = profile("complete")
    out = apply_noise(trace, config, random.Random(seed),
                      known_activities=set(names(trace)),
                      dynamic_integer_attrs={"num"}, dynamic_string_attrs={"txt"})
    assert len(out.events) >= 1
    ts = [e.timestamp for e in out.events]
    assert ts == sorted(ts)
