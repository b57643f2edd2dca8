"""Random generation of block-structured process models.

A model is obtained by sampling a derivation of a stochastic context-free
grammar whose productions correspond to workflow patterns: single activity,
sequence, parallel block, exclusive block, skip, and structured loop.  All
randomness flows through a single seeded RNG, so generation is a pure
function of the configuration.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

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
    letters_for_index,
)

#: production identifiers per nonterminal
PRODUCTIONS = {
    "G": ("loop", "simple"),
    "G'": ("single", "sequence", "parallel", "exclusive", "skip"),
    "G_and": ("extend", "close"),
    "G_xor": ("extend", "close"),
    "A": ("with_data", "plain_activity"),
    "A_do": ("required", "generated"),
}

_MAX_ROOT_ATTEMPTS = 1000


class GrammarConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GrammarConfig:
    """Knobs driving random model generation."""

    p_loop: float = 0.1
    weight_single: float = 4.0
    weight_sequence: float = 3.0
    weight_parallel: float = 1.0
    weight_exclusive: float = 1.0
    weight_skip: float = 0.5
    max_and_branches: int = 3
    max_xor_branches: int = 3
    p_data_object: float = 0.1
    p_required: float = 0.5
    max_depth: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p_loop", "p_data_object", "p_required"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise GrammarConfigError(f"{name} must be in [0, 1], got {value}")
        weights = self.weights
        if any(w < 0 for w in weights):
            raise GrammarConfigError("production weights must be non-negative")
        if sum(weights) <= 0:
            raise GrammarConfigError("at least one production weight must be positive")
        if self.max_and_branches < 2 or self.max_xor_branches < 2:
            raise GrammarConfigError("branch caps must be >= 2")
        if self.max_depth < 1:
            raise GrammarConfigError("max_depth must be >= 1")

    @property
    def weights(self) -> tuple[float, float, float, float, float]:
        return (
            self.weight_single,
            self.weight_sequence,
            self.weight_parallel,
            self.weight_exclusive,
            self.weight_skip,
        )

    @property
    def block_probabilities(self) -> dict[str, float]:
        """Normalized selection probabilities for the five block productions."""
        total = sum(self.weights)
        return {
            name: w / total
            for name, w in zip(PRODUCTIONS["G'"], self.weights)
        }


@dataclass
class DerivationState:
    """Sampling context: tree depth and consecutive branch-extension counts."""

    depth: int = 1
    and_extends: int = 0
    xor_extends: int = 0


@dataclass(frozen=True)
class DerivationNode:
    """Node of the derivation tree (terminal leaves, nonterminal internals)."""

    symbol: str
    depth: int
    children: tuple["DerivationNode", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ChoiceRecord:
    nonterminal: str
    production: str
    forced: bool


def sample_production(
    nonterminal: str,
    state: DerivationState,
    config: GrammarConfig,
    rng: random.Random,
    record: Optional[list[ChoiceRecord]] = None,
) -> str:
    """Draw one production for `nonterminal` under depth/branch constraints."""
    at_depth_cap = state.depth >= config.max_depth
    forced = False

    if nonterminal == "G":
        production = "loop" if rng.random() < config.p_loop else "simple"
    elif nonterminal == "G'":
        if at_depth_cap:
            production = "single" if rng.random() < 0.5 else "skip"
            forced = True
        else:
            names = PRODUCTIONS["G'"]
            production = rng.choices(names, weights=config.weights)[0]
    elif nonterminal in ("G_and", "G_xor"):
        cap = config.max_and_branches if nonterminal == "G_and" else config.max_xor_branches
        extends = state.and_extends if nonterminal == "G_and" else state.xor_extends
        # `extends` consecutive extensions plus the closing production yield
        # extends + 2 branches; stop extending once the cap would be exceeded.
        if at_depth_cap or extends >= cap - 2:
            production = "close"
            forced = True
        else:
            production = "extend" if rng.random() < 0.5 else "close"
    elif nonterminal == "A":
        production = "with_data" if rng.random() < config.p_data_object else "plain_activity"
    elif nonterminal == "A_do":
        production = "required" if rng.random() < config.p_required else "generated"
    else:
        raise ValueError(f"unknown nonterminal {nonterminal!r}")

    if record is not None:
        record.append(ChoiceRecord(nonterminal, production, forced))
    return production


# -- block intermediate form -------------------------------------------------

@dataclass
class ActivityBlock:
    name: str
    # (direction, variable name, plain value) when a data object is attached
    data: Optional[tuple[Direction, str, str]] = None


@dataclass
class SequenceBlock:
    parts: list["Block"]


@dataclass
class ParallelBlock:
    entry: ActivityBlock
    branches: list["Block"]
    exit: ActivityBlock


@dataclass
class ExclusiveBlock:
    entry: ActivityBlock
    branches: list["Block"]
    exit: ActivityBlock


@dataclass
class LoopBlock:
    body: Optional["Block"]
    rollback: Optional["Block"]


Block = Union[ActivityBlock, SequenceBlock, ParallelBlock, ExclusiveBlock, LoopBlock]


class NameAllocator:
    """Hands out activity names (Activity A, B, ..., AA, ...) and variable names."""

    def __init__(self, activity_index: int = 0, variable_index: int = 0):
        self.activity_index = activity_index
        self.variable_index = variable_index

    def next_activity(self) -> str:
        name = "Activity " + letters_for_index(self.activity_index)
        self.activity_index += 1
        return name

    def next_variable(self) -> str:
        name = "variable_" + letters_for_index(self.variable_index).lower()
        self.variable_index += 1
        return name


def random_word(rng: random.Random, length: int = 8) -> str:
    return "".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(length))


class _Deriver:
    """Samples a derivation, producing both the tree and the block form."""

    def __init__(self, config: GrammarConfig, rng: random.Random,
                 names: NameAllocator,
                 record: Optional[list[ChoiceRecord]] = None):
        self.config = config
        self.rng = rng
        self.names = names
        self.record = record

    def derive_g(self, depth: int) -> tuple[DerivationNode, Optional[Block]]:
        state = DerivationState(depth=depth)
        production = sample_production("G", state, self.config, self.rng, self.record)
        if production == "loop":
            body_node, body = self.derive_g_prime(depth + 1)
            roll_node, roll = self.derive_g(depth + 1)
            node = DerivationNode(
                "G", depth,
                (DerivationNode("(", depth + 1), body_node,
                 DerivationNode("loop", depth + 1), roll_node,
                 DerivationNode(")", depth + 1)),
            )
            return node, LoopBlock(body, roll)
        child, block = self.derive_g_prime(depth)
        return DerivationNode("G", depth, (child,)), block

    def derive_g_prime(self, depth: int) -> tuple[DerivationNode, Optional[Block]]:
        state = DerivationState(depth=depth)
        production = sample_production("G'", state, self.config, self.rng, self.record)
        if production == "single":
            node, act = self.derive_a(depth)
            return DerivationNode("G'", depth, (node,)), act
        if production == "sequence":
            left_node, left = self.derive_g(depth + 1)
            right_node, right = self.derive_g(depth + 1)
            node = DerivationNode("G'", depth, (left_node, DerivationNode(";", depth + 1), right_node))
            parts = [b for b in (left, right) if b is not None]
            if not parts:
                return node, None
            return node, parts[0] if len(parts) == 1 else SequenceBlock(parts)
        if production in ("parallel", "exclusive"):
            entry_node, entry = self.derive_a(depth)
            branch_nodes, branches = self.derive_branches(
                "G_and" if production == "parallel" else "G_xor", depth + 1
            )
            exit_node, exit_ = self.derive_a(depth)
            glyph = "and" if production == "parallel" else "xor"
            node = DerivationNode(
                "G'", depth,
                (entry_node, DerivationNode(";", depth + 1),
                 DerivationNode(glyph, depth + 1, tuple(branch_nodes)),
                 DerivationNode(";", depth + 1), exit_node),
            )
            block_cls = ParallelBlock if production == "parallel" else ExclusiveBlock
            return node, block_cls(entry, branches, exit_)
        # skip
        return DerivationNode("G'", depth, (DerivationNode("epsilon", depth + 1),)), None

    def derive_branches(self, nonterminal: str, depth: int) -> tuple[list[DerivationNode], list[Optional[Block]]]:
        nodes: list[DerivationNode] = []
        branches: list[Optional[Block]] = []
        extends = 0
        while True:
            state = DerivationState(depth=depth)
            if nonterminal == "G_and":
                state.and_extends = extends
            else:
                state.xor_extends = extends
            production = sample_production(nonterminal, state, self.config, self.rng, self.record)
            node, block = self.derive_g(depth)
            nodes.append(node)
            branches.append(block)
            if production == "close":
                node, block = self.derive_g(depth)
                nodes.append(node)
                branches.append(block)
                return nodes, branches
            extends += 1

    def derive_a(self, depth: int) -> tuple[DerivationNode, ActivityBlock]:
        state = DerivationState(depth=depth)
        production = sample_production("A", state, self.config, self.rng, self.record)
        name = self.names.next_activity()
        leaf = DerivationNode(name, depth + 2)
        if production == "plain_activity":
            node = DerivationNode("A", depth, (DerivationNode("A_act", depth + 1, (leaf,)),))
            return node, ActivityBlock(name)
        direction_name = sample_production("A_do", state, self.config, self.rng, self.record)
        direction = Direction.REQUIRED if direction_name == "required" else Direction.GENERATED
        variable = self.names.next_variable()
        value = random_word(self.rng)
        do_leaf = DerivationNode(variable, depth + 2)
        node = DerivationNode(
            "A", depth,
            (DerivationNode("A_do", depth + 1,
                            (DerivationNode("A_act", depth + 2, (leaf,)),
                             DerivationNode(direction.value, depth + 2, (do_leaf,)))),),
        )
        return node, ActivityBlock(name, (direction, variable, value))


# -- graph materialization ---------------------------------------------------

class ModelBuilder:
    """Accumulates components while translating blocks into the graph form.

    Can be preloaded with an existing model's components (used by evolution)
    so that fresh ids never collide.
    """

    def __init__(self, id_offset: int = 0):
        self._counter = id_offset
        self.start_events: list[str] = []
        self.end_events: list[str] = []
        self.activities: list[Activity] = []
        self.gateways: list[Gateway] = []
        self.data_objects: list[DataObject] = []
        self.sequences: set[Sequence] = set()
        self.associations: list[Association] = []
        self.loop_back: set[Sequence] = set()

    def fresh_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    def add_activity(self, name: str) -> str:
        cid = self.fresh_id("a")
        self.activities.append(Activity(id=cid, name=name))
        return cid

    def add_gateway(self, kind: GatewayKind) -> str:
        cid = self.fresh_id("g")
        self.gateways.append(Gateway(id=cid, kind=kind))
        return cid

    def add_edge(self, source: str, target: str, loop_back: bool = False) -> None:
        edge = Sequence(source, target)
        self.sequences.add(edge)
        if loop_back:
            self.loop_back.add(edge)

    def add_plain_data_object(self, activity_id: str, variable: str, value: str,
                              direction: Direction) -> None:
        cid = self.fresh_id("d")
        self.data_objects.append(
            DataObject(id=cid, name=variable, kind=DataObjectKind.PLAIN, plain_value=value)
        )
        self.associations.append(Association(activity_id, cid, direction))

    def materialize(self, block: Block) -> tuple[str, str]:
        """Create the components of a block; returns its (entry, exit) ids."""
        if isinstance(block, ActivityBlock):
            cid = self.add_activity(block.name)
            if block.data is not None:
                direction, variable, value = block.data
                self.add_plain_data_object(cid, variable, value, direction)
            return cid, cid
        if isinstance(block, SequenceBlock):
            entry, last = None, None
            for part in block.parts:
                sub_entry, sub_exit = self.materialize(part)
                if entry is None:
                    entry = sub_entry
                else:
                    self.add_edge(last, sub_entry)
                last = sub_exit
            assert entry is not None and last is not None
            return entry, last
        if isinstance(block, (ParallelBlock, ExclusiveBlock)):
            kind = GatewayKind.PARALLEL if isinstance(block, ParallelBlock) else GatewayKind.EXCLUSIVE
            entry_id, _ = self.materialize(block.entry)
            exit_id, _ = self.materialize(block.exit)
            real_branches = [b for b in block.branches if b is not None]
            if not real_branches:
                # all branches empty: the block degenerates to entry;exit
                self.add_edge(entry_id, exit_id)
                return entry_id, exit_id
            split = self.add_gateway(kind)
            join = self.add_gateway(kind)
            self.add_edge(entry_id, split)
            self.add_edge(join, exit_id)
            skip_branches = len(block.branches) - len(real_branches)
            if skip_branches:
                # empty branches collapse into (at most one) direct edge
                self.add_edge(split, join)
            for branch in real_branches:
                b_entry, b_exit = self.materialize(branch)
                self.add_edge(split, b_entry)
                self.add_edge(b_exit, join)
            return entry_id, exit_id
        if isinstance(block, LoopBlock):
            join = self.add_gateway(GatewayKind.EXCLUSIVE)
            split = self.add_gateway(GatewayKind.EXCLUSIVE)
            if block.body is None:
                self.add_edge(join, split)
            else:
                b_entry, b_exit = self.materialize(block.body)
                self.add_edge(join, b_entry)
                self.add_edge(b_exit, split)
            if block.rollback is None:
                self.add_edge(split, join, loop_back=True)
            else:
                r_entry, r_exit = self.materialize(block.rollback)
                self.add_edge(split, r_entry, loop_back=True)
                self.add_edge(r_exit, join)
            return join, split
        raise TypeError(f"unknown block type {type(block).__name__}")

    def build(self, model_id: str, name: str) -> ProcessModel:
        return ProcessModel(
            id=model_id,
            name=name,
            start_events=frozenset(self.start_events),
            end_events=frozenset(self.end_events),
            activities=tuple(self.activities),
            gateways=tuple(self.gateways),
            data_objects=tuple(self.data_objects),
            sequences=tuple(sorted(self.sequences, key=lambda s: (s.source, s.target))),
            associations=tuple(self.associations),
            loop_back=frozenset(self.loop_back),
        )


def _block_entry_is_activity(block: Optional[Block]) -> bool:
    if block is None:
        return False
    if isinstance(block, ActivityBlock):
        return True
    if isinstance(block, SequenceBlock):
        return _block_entry_is_activity(block.parts[0])
    if isinstance(block, (ParallelBlock, ExclusiveBlock)):
        return True
    return False  # loop: entry is a gateway


def _block_exit_is_activity(block: Optional[Block]) -> bool:
    if block is None:
        return False
    if isinstance(block, ActivityBlock):
        return True
    if isinstance(block, SequenceBlock):
        return _block_exit_is_activity(block.parts[-1])
    if isinstance(block, (ParallelBlock, ExclusiveBlock)):
        return True
    return False


def generate_model(
    config: GrammarConfig,
    name: str = "Generated model",
    model_id: str = "process",
    record: Optional[list[ChoiceRecord]] = None,
) -> ProcessModel:
    """Sample a random block-structured model; deterministic given the config."""
    rng = random.Random(config.seed)
    block: Optional[Block] = None
    # Start and end events may only connect to activities, so derivations whose
    # body starts/ends with a gateway (loops) or is empty are resampled.
    for _ in range(_MAX_ROOT_ATTEMPTS):
        names = NameAllocator()
        deriver = _Deriver(config, rng, names, record)
        _, candidate = deriver.derive_g(1)
        if _block_entry_is_activity(candidate) and _block_exit_is_activity(candidate):
            block = candidate
            break
    if block is None:
        names = NameAllocator()
        block = ActivityBlock(names.next_activity())

    builder = ModelBuilder()
    start = builder.fresh_id("start")
    builder.start_events.append(start)
    end = builder.fresh_id("end")
    builder.end_events.append(end)
    entry, exit_ = builder.materialize(block)
    builder.add_edge(start, entry)
    builder.add_edge(exit_, end)
    return builder.build(model_id, name)


def sample_fragment(
    config: GrammarConfig,
    rng: random.Random,
    names: NameAllocator,
) -> Optional[Block]:
    """Sample a sub-process block (no start/end events); None means a skip."""
    deriver = _Deriver(config, rng, names)
    _, block = deriver.derive_g(1)
    return block


def attach_data_objects(model: ProcessModel, config: GrammarConfig) -> ProcessModel:
    """Independently attach a plain data object to each activity with
    probability `p_data_object`; direction drawn per `p_required`."""
    rng = random.Random(config.seed ^ 0x5FD1)
    builder = ModelBuilder(id_offset=_max_id_suffix(model))
    variable_index = sum(1 for d in model.data_objects if d.name.startswith("variable_"))
    names = NameAllocator(variable_index=variable_index)
    data_objects = list(model.data_objects)
    associations = list(model.associations)
    for activity in model.activities:
        if rng.random() >= config.p_data_object:
            continue
        direction = Direction.REQUIRED if rng.random() < config.p_required else Direction.GENERATED
        cid = builder.fresh_id("d")
        data_objects.append(
            DataObject(id=cid, name=names.next_variable(), kind=DataObjectKind.PLAIN,
                       plain_value=random_word(rng))
        )
        associations.append(Association(activity.id, cid, direction))
    return ProcessModel(
        id=model.id,
        name=model.name,
        start_events=model.start_events,
        end_events=model.end_events,
        activities=model.activities,
        gateways=model.gateways,
        data_objects=tuple(data_objects),
        sequences=model.sequences,
        associations=tuple(associations),
        loop_back=model.loop_back,
    )


def _max_id_suffix(model: ProcessModel) -> int:
    best = 0
    for cid in (
        list(model.start_events) + list(model.end_events)
        + [a.id for a in model.activities] + [g.id for g in model.gateways]
        + [d.id for d in model.data_objects]
    ):
        digits = "".join(ch for ch in cid if ch.isdigit())
        if digits:
            best = max(best, int(digits))
    return best
