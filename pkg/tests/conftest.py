import pytest

from plgen.model import (
    Activity,
    Association,
    DataObject,
    DataObjectKind,
    Direction,
    Gateway,
    GatewayKind,
    ProcessModel,
    Sequence,
)
from plgen.scripting import ScriptHook, ScriptHookPair


def chain_model(names=("A", "B"), model_id="chain"):
    """start -> names[0] -> ... -> names[-1] -> end."""
    activities = tuple(Activity(id=f"a{i}", name=n) for i, n in enumerate(names))
    nodes = ["start"] + [a.id for a in activities] + ["end"]
    sequences = tuple(Sequence(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1))
    return ProcessModel(
        id=model_id, name="chain",
        start_events=frozenset({"start"}), end_events=frozenset({"end"}),
        activities=activities, sequences=sequences,
    )


def xor_and_model():
    """A; xor(C, D, E); G; and(H, I); Z — the branch-statistics reference."""
    acts = {n: Activity(id=f"a_{n}", name=n) for n in "ACDEGHIZ"}
    gws = (
        Gateway("xs", GatewayKind.EXCLUSIVE), Gateway("xj", GatewayKind.EXCLUSIVE),
        Gateway("as", GatewayKind.PARALLEL), Gateway("aj", GatewayKind.PARALLEL),
    )
    seqs = [
        ("start", "a_A"), ("a_A", "xs"),
        ("xs", "a_C"), ("xs", "a_D"), ("xs", "a_E"),
        ("a_C", "xj"), ("a_D", "xj"), ("a_E", "xj"),
        ("xj", "a_G"), ("a_G", "as"),
        ("as", "a_H"), ("as", "a_I"), ("a_H", "aj"), ("a_I", "aj"),
        ("aj", "a_Z"), ("a_Z", "end"),
    ]
    return ProcessModel(
        id="xor_and", name="xor_and",
        start_events=frozenset({"start"}), end_events=frozenset({"end"}),
        activities=tuple(acts.values()), gateways=gws,
        sequences=tuple(Sequence(s, t) for s, t in seqs),
    )


def loop_and_data_model():
    """a; loop(b; and(c{writes d1}, d); e  back via f); g.

    Activity c generates a dynamic integer data object named d1.
    """
    acts = {n: Activity(id=f"a_{n}", name=n) for n in "abcdefg"}
    gen = ScriptHook(
        source="def generate(caseId):\n    return randint(0, 100)\n",
        entry_point="generate", return_kind="integer",
    )
    dobj = DataObject(id="do_1", name="d1", kind=DataObjectKind.DYNAMIC_INTEGER,
                      generator=gen)
    gws = (
        Gateway("lj", GatewayKind.EXCLUSIVE), Gateway("ls", GatewayKind.EXCLUSIVE),
        Gateway("as", GatewayKind.PARALLEL), Gateway("aj", GatewayKind.PARALLEL),
    )
    seqs = [
        ("start", "a_a"), ("a_a", "lj"),
        ("lj", "a_b"), ("a_b", "as"),
        ("as", "a_c"), ("as", "a_d"), ("a_c", "aj"), ("a_d", "aj"),
        ("aj", "a_e"), ("a_e", "ls"),
        ("ls", "a_f"), ("a_f", "lj"),     # rollback path
        ("ls", "a_g"), ("a_g", "end"),
    ]
    return ProcessModel(
        id="loop_and_data", name="loop_and_data",
        start_events=frozenset({"start"}), end_events=frozenset({"end"}),
        activities=tuple(acts.values()), gateways=gws,
        data_objects=(dobj,),
        sequences=tuple(Sequence(s, t) for s, t in seqs),
        associations=(Association("a_c", "do_1", Direction.GENERATED),),
        loop_back=frozenset({Sequence("ls", "a_f")}),
    )


def required_data_model():
    """A; xor(B{requires d=1}, C{requires d=2}); Z."""
    acts = {n: Activity(id=f"a_{n}", name=n) for n in "ABCZ"}
    d1 = DataObject(id="do_1", name="d", kind=DataObjectKind.PLAIN, plain_value="1")
    d2 = DataObject(id="do_2", name="d", kind=DataObjectKind.PLAIN, plain_value="2")
    gws = (Gateway("xs", GatewayKind.EXCLUSIVE), Gateway("xj", GatewayKind.EXCLUSIVE))
    seqs = [
        ("start", "a_A"), ("a_A", "xs"),
        ("xs", "a_B"), ("xs", "a_C"), ("a_B", "xj"), ("a_C", "xj"),
        ("xj", "a_Z"), ("a_Z", "end"),
    ]
    return ProcessModel(
        id="required_data", name="required_data",
        start_events=frozenset({"start"}), end_events=frozenset({"end"}),
        activities=tuple(acts.values()), gateways=gws,
        data_objects=(d1, d2),
        sequences=tuple(Sequence(s, t) for s, t in seqs),
        associations=(
            Association("a_B", "do_1", Direction.REQUIRED),
            Association("a_C", "do_2", Direction.REQUIRED),
        ),
    )


def timed_chain_model(duration_seconds=300, gap_seconds=60):
    """start -> A -> end with fixed duration and gap hooks."""
    profile = ScriptHookPair(
        time_after=ScriptHook(
            source=f"def time_after(caseid):\n    return {gap_seconds}\n",
            entry_point="time_after", return_kind="seconds"),
        time_lasted=ScriptHook(
            source=f"def time_lasted(caseid):\n    return {duration_seconds}\n",
            entry_point="time_lasted", return_kind="seconds"),
    )
    activity = Activity(id="a0", name="A", time_profile=profile)
    return ProcessModel(
        id="timed", name="timed",
        start_events=frozenset({"start"}), end_events=frozenset({"end"}),
        activities=(activity,),
        sequences=(Sequence("start", "a0"), Sequence("a0", "end")),
    )


@pytest.fixture
def minimal_model():
    return chain_model(("A",))
