"""Turning matched plans into calls.

compile_tree lowers an InfoTree to a plain payload-level callable: dependency
children become leading arguments bound with functools.partial, the adapter
binding (a factory) wraps the native callable, and conversion entries wrap
individual parameters. Execution then moves between Values and payloads in
one place, so op bodies never see framework objects.

Kind contracts enforced here:
- functions allocate a fresh Value and never touch their arguments,
- computers produce content that is written into the caller's container only
  after the body finished (a failing body leaves the container unchanged),
- inplaces mutate exactly the declared argument and return it.

Every completed invocation is recorded in the environment's history as
(value uid -> plan signature).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import (
    DimensionMismatchError,
    ExecutionError,
    OpsError,
)
from .matcher import InfoTree, OpRequest, _as_type
from .registry import Io, Kind, OpEnvironment, OpInfo
from .runtime import frame_stack
from .types import SemanticType, describe_type
from .values import Value, wrap, write_back


def compile_tree(env: OpEnvironment, tree: InfoTree):
    """Payload-level callable for a plan, cached per environment by signature."""
    if env.cache_enabled:
        # lock-free read: dict lookup is atomic under CPython
        fn = env._exec_cache.get(tree.signature)
        if fn is not None:
            return fn
    fn = _build(env, tree)
    if env.cache_enabled:
        with env._exec_lock:
            env._exec_cache[tree.signature] = fn
    return fn


def _build(env: OpEnvironment, tree: InfoTree):
    deps = tuple(compile_tree(env, child) for child in tree.children)
    body = env.binding(tree.info.source)
    base = partial(body, *deps) if deps else body
    fn = _frame_wrap(env, tree.info.name, base)
    if tree.adapter is not None:
        ad_deps = tuple(compile_tree(env, c) for c in tree.adapter.children)
        factory = env.binding(tree.adapter.info.source)
        fn = factory(fn, *ad_deps)
    if tree.conversions or tree.copyback is not None:
        fn = _conversion_wrap(env, tree, fn)
    return fn


def _frame_wrap(env: OpEnvironment, label: str, fn):
    pool = env.pool

    def framed(*args):
        stack = frame_stack()
        stack.append((label, env._listeners, pool))
        try:
            return fn(*args)
        finally:
            stack.pop()

    return framed


def _leaf_fn(env: OpEnvironment, info: OpInfo):
    return _frame_wrap(env, info.name, env.binding(info.source))


def _assign_into(dst, src) -> None:
    """Physically copy converted content back into the caller's payload."""
    if isinstance(dst, bytearray):
        if not isinstance(src, (bytes, bytearray)) or len(src) != len(dst):
            raise DimensionMismatchError(
                f"copy-back length mismatch: {len(src)} into {len(dst)}"
            )
        dst[:] = src
        return
    if isinstance(dst, np.ndarray):
        if not isinstance(src, np.ndarray) or src.shape != dst.shape or src.dtype != dst.dtype:
            raise DimensionMismatchError("copy-back shape or dtype mismatch")
        np.copyto(dst, src)
        return
    raise ExecutionError("cannot copy back into a scalar payload")


def _conversion_wrap(env: OpEnvironment, tree: InfoTree, fn):
    n = tree.eff_arity
    in_map = {}
    mutable_out = None
    special_out = None
    copy_fn = _leaf_fn(env, tree.copyback) if tree.copyback is not None else None
    for c in tree.conversions:
        if c.position < n:
            if c.in_op is not None:
                in_map[c.position] = _leaf_fn(env, c.in_op)
            if c.out_op is not None:
                mutable_out = _leaf_fn(env, c.out_op)
        else:
            # Container conv-in is recorded for provenance but has nothing to
            # feed: computers ignore incoming container content.
            if c.out_op is not None:
                special_out = _leaf_fn(env, c.out_op)

    def convert_args(args):
        return [in_map[i](a) if i in in_map else a for i, a in enumerate(args)]

    if tree.eff_kind is Kind.FUNCTION:

        def wrapped(*args):
            result = fn(*convert_args(args))
            return special_out(result) if special_out is not None else result

        return wrapped

    if tree.eff_kind is Kind.COMPUTER:

        def wrapped(*args):
            content = fn(*convert_args(args))
            if special_out is not None:
                content = special_out(content)
            if copy_fn is not None:
                content = copy_fn(content)
            return content

        return wrapped

    mi = tree.eff_mutable

    def wrapped(*args):
        converted = convert_args(args)
        mutated = fn(*converted)
        if mi in in_map:
            staged = mutable_out(mutated)
            if copy_fn is not None:
                staged = copy_fn(staged)
            _assign_into(args[mi], staged)
            return args[mi]
        return mutated

    return wrapped


_SCALAR_BASES = ("Integer", "Real", "Boolean", "Text")


def execute_tree(
    env: OpEnvironment,
    tree: InfoTree,
    arg_values: tuple[Value, ...],
    container: Value | None = None,
) -> Value:
    return _run_with(env, tree, compile_tree(env, tree), arg_values, container)


def _run_with(env, tree, fn, arg_values, container):
    payloads = [v.payload for v in arg_values]
    try:
        result = fn(*payloads)
    except OpsError as exc:
        if isinstance(exc, ExecutionError) and exc.signature is None:
            exc.signature = tree.signature
        raise
    except Exception as exc:
        raise ExecutionError(
            f"{tree.info.name} failed: {exc}", signature=tree.signature
        ) from exc

    if tree.eff_kind is Kind.FUNCTION:
        try:
            out = Value(tree.out_type, result)
        except Exception as exc:
            raise ExecutionError(
                f"{tree.info.name} produced invalid output: {exc}",
                signature=tree.signature,
            ) from exc
        env.history.record(out, tree.signature)
        return out

    if tree.eff_kind is Kind.COMPUTER:
        try:
            write_back(container, result)
        except DimensionMismatchError as exc:
            if exc.signature is None:
                exc.signature = tree.signature
            raise
        env.history.record(container, tree.signature)
        return container

    mutated = arg_values[tree.eff_mutable]
    if result is not mutated.payload and mutated.type.base in _SCALAR_BASES:
        mutated.payload = result
    env.history.record(mutated, tree.signature)
    return mutated


@dataclass(frozen=True)
class HistoryRecord:
    uid: int
    signature: str
    at: float


class OpHistory:
    """Maps produced values (by uid) to the plan signature that made them.

    Records are stored as bare tuples and appended lock-free; list.append
    and dict assignment are each atomic under CPython, and the counters are
    append-only, so readers always see a consistent prefix.
    """

    def __init__(self):
        self._by_uid: dict[int, tuple] = {}
        self._records: list[tuple] = []

    def record(self, value: Value, signature: str) -> None:
        rec = (value.uid, signature, time.time())
        self._by_uid[value.uid] = rec
        self._records.append(rec)

    def lookup(self, value: Value) -> HistoryRecord | None:
        rec = self._by_uid.get(value.uid)
        return HistoryRecord(*rec) if rec is not None else None

    def snapshot(self) -> tuple[HistoryRecord, ...]:
        return tuple(HistoryRecord(*r) for r in self._records)

    def __len__(self) -> int:
        return len(self._records)


class OpBuilder:
    """Fluent request construction: stage inputs, pick a terminal.

    Value terminals (apply, compute, mutate) match and run once. Handle
    terminals (function, computer, inplace) match once and return a callable
    that never matches again.
    """

    def __init__(self, env: OpEnvironment, name: str):
        self._env = env
        self._name = name
        self._inputs: list[Value] = []
        self._types: list[SemanticType] = []
        self._output: SemanticType | None = None
        self._container: Value | None = None
        self._container_t: SemanticType | None = None

    def input(self, *objs) -> "OpBuilder":
        for obj in objs:
            self._inputs.append(obj if isinstance(obj, Value) else wrap(obj))
        return self

    def input_types(self, *types) -> "OpBuilder":
        self._types.extend(_as_type(t) for t in types)
        return self

    def output_type(self, t) -> "OpBuilder":
        self._output = _as_type(t)
        return self

    def container(self, value: Value) -> "OpBuilder":
        if not isinstance(value, Value):
            raise ExecutionError("container(...) takes a Value to write into")
        self._container = value
        return self

    def container_type(self, t) -> "OpBuilder":
        self._container_t = _as_type(t)
        return self

    def _value_types(self) -> tuple[SemanticType, ...]:
        return tuple(v.type for v in self._inputs)

    def _staged_types(self) -> tuple[SemanticType, ...]:
        if self._types:
            return tuple(self._types)
        return self._value_types()

    def apply(self) -> Value:
        req = OpRequest(
            self._name, Kind.FUNCTION, self._value_types(), output_type=self._output
        )
        tree = self._env.match(req)
        return execute_tree(self._env, tree, tuple(self._inputs))

    def compute(self) -> Value:
        if self._container is None:
            raise ExecutionError("compute() needs container(...) staged first")
        req = OpRequest(
            self._name,
            Kind.COMPUTER,
            self._value_types(),
            container_type=self._container.type,
        )
        tree = self._env.match(req)
        return execute_tree(
            self._env, tree, tuple(self._inputs), container=self._container
        )

    def mutate(self, index: int = 0) -> Value:
        req = OpRequest(
            self._name, Kind.INPLACE, self._value_types(), mutable_index=index
        )
        tree = self._env.match(req)
        return execute_tree(self._env, tree, tuple(self._inputs))

    def function(self) -> "FunctionHandle":
        req = OpRequest(
            self._name, Kind.FUNCTION, self._staged_types(), output_type=self._output
        )
        return FunctionHandle(self._env, self._env.match(req))

    def computer(self) -> "ComputerHandle":
        ct = self._container_t
        if ct is None and self._container is not None:
            ct = self._container.type
        if ct is None:
            raise ExecutionError(
                "computer() needs container_type(...) or container(...) staged first"
            )
        req = OpRequest(
            self._name, Kind.COMPUTER, self._staged_types(), container_type=ct
        )
        return ComputerHandle(self._env, self._env.match(req))

    def inplace(self, index: int = 0) -> "InplaceHandle":
        req = OpRequest(
            self._name, Kind.INPLACE, self._staged_types(), mutable_index=index
        )
        return InplaceHandle(self._env, self._env.match(req))

    def help(self, verbose: bool = False) -> str:
        return help_text(self._env, self._name, verbose=verbose)


class _Handle:
    """Matched once; invocations reuse the compiled plan without matching."""

    def __init__(self, env: OpEnvironment, tree: InfoTree):
        self._env = env
        self._tree = tree
        self._fn = compile_tree(env, tree)

    @property
    def tree(self) -> InfoTree:
        return self._tree

    @property
    def signature(self) -> str:
        return self._tree.signature

    def _values(self, objs) -> tuple[Value, ...]:
        vals = tuple(o if isinstance(o, Value) else wrap(o) for o in objs)
        if len(vals) != self._tree.eff_arity:
            raise ExecutionError(
                f"{self._tree.info.name} takes {self._tree.eff_arity} "
                f"arguments, got {len(vals)}"
            )
        return vals


class FunctionHandle(_Handle):
    def __call__(self, *objs) -> Value:
        return _run_with(self._env, self._tree, self._fn, self._values(objs), None)


class ComputerHandle(_Handle):
    def __call__(self, *objs, container: Value) -> Value:
        if not isinstance(container, Value):
            raise ExecutionError("container must be a Value")
        return _run_with(
            self._env, self._tree, self._fn, self._values(objs), container
        )


class InplaceHandle(_Handle):
    def __call__(self, *objs) -> Value:
        vals = self._values(objs)
        if not isinstance(objs[self._tree.eff_mutable], Value):
            raise ExecutionError("the mutable argument must be passed as a Value")
        return _run_with(self._env, self._tree, self._fn, vals, None)


# ---------------------------------------------------------------------------
# Help rendering
# ---------------------------------------------------------------------------


def describe_semantic_type(env: OpEnvironment, t: SemanticType) -> str:
    """Render a type for humans via a matched engine.describe op, if any."""
    try:
        from .matcher import function_request

        tree = env.match(function_request("engine.describe", [t], "Text"))
        fn = compile_tree(env, tree)
        return str(fn(None))
    except OpsError:
        return describe_type(t, env.describe_table)


def render_signature(env: OpEnvironment, info: OpInfo) -> str:
    inputs = []
    for p in info.params:
        if p.io is Io.OUTPUT:
            continue
        label = describe_semantic_type(env, p.type) if p.type.is_concrete() else str(p.type)
        if p.io is Io.MUTABLE:
            label += "*"
        inputs.append(f"{p.name}: {label}")
    head = f"{info.name}({', '.join(inputs)})"
    if info.kind is Kind.FUNCTION:
        out = info.special_param.type
        label = describe_semantic_type(env, out) if out.is_concrete() else str(out)
        return f"{head} -> {label}"
    if info.kind is Kind.COMPUTER:
        return f"{head} [computer -> {info.special_param.name}]"
    return f"{head} [inplace]"


def _edit_distance(a: str, b: str) -> int:
    if a == b:
        return 0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _suggestions(query: str, names) -> list[str]:
    scored = []
    for n in names:
        last = n.rsplit(".", 1)[-1]
        d = min(_edit_distance(query, n), _edit_distance(query, last))
        if d <= 2:
            scored.append((d, n))
    return [n for _, n in sorted(scored)[:5]]


def help_text(env: OpEnvironment, query: str = "", verbose: bool = False) -> str:
    names = env.distinct_names()
    if not query:
        return "\n".join(names) if names else "(no ops registered)"
    matches = env.candidates(query)
    if matches:
        blocks = []
        for info in matches:
            line = render_signature(env, info)
            if not verbose:
                blocks.append(line)
                continue
            extra = [line]
            if info.description:
                extra.append(f"  {info.description}")
            extra.append(f"  priority: {info.priority:g}")
            extra.append(f"  source: {info.source}")
            for p in info.params:
                desc = f": {p.description}" if p.description else ""
                opt = " (optional)" if p.optional else ""
                extra.append(f"  {p.io.value} {p.name} ({p.type}){opt}{desc}")
            for dep in info.dependencies:
                extra.append(f"  dependency {dep.field} -> {dep.op_name} [{dep.kind.value}]")
            blocks.append("\n".join(extra))
        return "\n\n".join(blocks)
    prefix = query + "."
    under = [n for n in names if n.startswith(prefix)]
    if under:
        return f"Namespace '{query}':\n" + "\n".join(under)
    msg = f"No ops found matching '{query}'"
    close = _suggestions(query, names)
    if close:
        msg += "\nDid you mean: " + ", ".join(close) + "?"
    return msg
