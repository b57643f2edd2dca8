"""Embedded value-generator scripts for time and dynamic data objects.

Hooks are small scripts in a restricted Python dialect.  A hook exposes a
single entry point of arity one (the case id) and returns either a number of
seconds (time hooks) or an integer/string value (data generators).  Scripts
see no wall clock, no filesystem (unless explicitly allowed) and no imports;
randomness is available only through host-provided functions backed by the
simulation's seeded RNG, so identical seeds reproduce identical values.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

ENTRY_POINTS = ("generate", "time_after", "time_lasted")
RETURN_KINDS = ("integer", "text", "seconds")

#: abort a hook after this many executed lines
DEFAULT_STEP_BUDGET = 200_000

import builtins as _builtins

_SAFE_BUILTINS = {
    name: getattr(_builtins, name)
    for name in (
        "abs", "bool", "dict", "divmod", "enumerate", "float", "int", "len",
        "list", "max", "min", "pow", "range", "repr", "round", "set", "sorted",
        "str", "sum", "tuple", "zip", "ValueError", "TypeError", "KeyError",
    )
}


class ScriptError(Exception):
    """A hook failed to compile, ran away, or returned a bad value."""

    def __init__(self, message: str, entry_point: str = "", case_id: str = ""):
        self.entry_point = entry_point
        self.case_id = case_id
        detail = message
        if entry_point:
            detail = f"{entry_point}: {detail}"
        if case_id:
            detail = f"{detail} (case {case_id!r})"
        super().__init__(detail)


@dataclass(frozen=True)
class ScriptHook:
    source: str
    entry_point: str
    return_kind: str

    def __post_init__(self) -> None:
        if self.entry_point not in ENTRY_POINTS:
            raise ScriptError(f"unknown entry point {self.entry_point!r}")
        if self.return_kind not in RETURN_KINDS:
            raise ScriptError(f"unknown return kind {self.return_kind!r}")


@dataclass(frozen=True)
class ScriptHookPair:
    time_after: Optional[ScriptHook] = None
    time_lasted: Optional[ScriptHook] = None


class _StepBudget:
    """Counts executed lines via sys.settrace and aborts runaway scripts."""

    def __init__(self, budget: int):
        self.remaining = budget

    def __call__(self, frame, event, arg):  # noqa: ANN001 - trace protocol
        if event == "line":
            self.remaining -= 1
            if self.remaining <= 0:
                raise ScriptError("step budget exhausted (possible infinite loop)")
        return self


class ScriptEvaluator:
    """Compiles and runs hooks for one simulation run.

    Keeps a per-case scratchpad (``store``) that scripts may use to share
    state between hook calls of the same case.
    """

    def __init__(self, rng: random.Random, allow_io: bool = False,
                 step_budget: int = DEFAULT_STEP_BUDGET):
        self._rng = rng
        self._allow_io = allow_io
        self._step_budget = step_budget
        self._compiled: dict[int, Any] = {}
        self._stores: dict[str, dict] = {}

    def _namespace(self, case_store: dict) -> dict:
        builtins = dict(_SAFE_BUILTINS)
        if self._allow_io:
            builtins["open"] = open
        return {
            "__builtins__": builtins,
            "randint": self._rng.randint,
            "uniform": self._rng.uniform,
            "random": self._rng.random,
            "choice": self._rng.choice,
            "gauss": self._rng.gauss,
            "store": case_store,
        }

    def _function(self, hook: ScriptHook, case_store: dict):
        namespace = self._namespace(case_store)
        try:
            exec(compile(hook.source, f"<hook:{hook.entry_point}>", "exec"), namespace)
        except SyntaxError as exc:
            raise ScriptError(f"compile error: {exc}", hook.entry_point) from exc
        except Exception as exc:
            raise ScriptError(f"module-level error: {exc}", hook.entry_point) from exc
        fn = namespace.get(hook.entry_point)
        if not callable(fn):
            raise ScriptError(f"entry point {hook.entry_point!r} not defined", hook.entry_point)
        return fn

    def evaluate(self, hook: ScriptHook, case_id: str):
        store = self._stores.setdefault(case_id, {})
        fn = self._function(hook, store)
        budget = _StepBudget(self._step_budget)
        old_trace = sys.gettrace()
        sys.settrace(budget)
        try:
            value = fn(case_id)
        except ScriptError as exc:
            raise ScriptError(str(exc), hook.entry_point, case_id) from None
        except Exception as exc:
            raise ScriptError(f"runtime error: {exc}", hook.entry_point, case_id) from exc
        finally:
            sys.settrace(old_trace)
        return self._check_return(hook, case_id, value)

    def _check_return(self, hook: ScriptHook, case_id: str, value):
        if hook.return_kind == "seconds":
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ScriptError(
                    f"expected a number of seconds, got {type(value).__name__}",
                    hook.entry_point, case_id,
                )
            if value < 0:
                raise ScriptError("negative number of seconds", hook.entry_point, case_id)
            return float(value)
        if hook.return_kind == "integer":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ScriptError(
                    f"expected an integer, got {type(value).__name__}",
                    hook.entry_point, case_id,
                )
            return value
        if not isinstance(value, str):
            raise ScriptError(
                f"expected a string, got {type(value).__name__}",
                hook.entry_point, case_id,
            )
        return value
