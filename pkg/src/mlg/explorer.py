"""Bounded explicit-state exploration: deadlock detection and reachability.

States are quotiented by structural congruence: parallel composition is
flattened and sorted, nil operands dropped, sum operands sorted, and
restriction-bound channels renamed to scope indices in order of first
occurrence. The object store fingerprint is part of state identity, so
data-dependent coordination is explored correctly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import syntax as S
from .evaluate import ChanRef, Closure, NatVal, ObjRef, ValueEnv
from .engine import (
    Comm, Configuration, Redex, ReplSpawn, SoupMember, enabled_redexes,
    initial_configuration, step,
)
from .pretty import pretty_expr, pretty_sort, pretty_type

# ---------------------------------------------------------------------------
# Canonicalization


def _render_value(v, chan_alias: dict[int, str]) -> str:
    if isinstance(v, NatVal):
        return str(v.n)
    if isinstance(v, ChanRef):
        return chan_alias.get(v.id, f"@c{v.id}")
    if isinstance(v, ObjRef):
        return f"@o{v.id}"
    if isinstance(v, Closure):
        return f"<fun({v.param}:{pretty_type(v.param_type)}) " + _render_expr(
            v.body, v.env, chan_alias, {v.param.text}
        ) + ">"
    return repr(v)


def _render_expr(e, env: ValueEnv, chan_alias, bound: set[str]) -> str:
    """Expression with env-bound free variables replaced by their values."""
    if isinstance(e, S.Var):
        if e.name.text not in bound and e.name.text in env:
            return _render_value(env.lookup(e.name.text), chan_alias)
        return e.name.text
    if isinstance(e, S.Zero):
        return "z"
    if isinstance(e, S.Succ):
        return f"succ({_render_expr(e.arg, env, chan_alias, bound)})"
    if isinstance(e, S.Rec):
        inner = bound | {e.succ_binder.text, e.rec_binder.text}
        return (
            f"rec {_render_expr(e.scrutinee, env, chan_alias, bound)}"
            f"{{z->{_render_expr(e.zero_branch, env, chan_alias, bound)}"
            f"|succ({e.succ_binder}) with {e.rec_binder}->"
            f"{_render_expr(e.succ_branch, env, chan_alias, inner)}}}"
        )
    if isinstance(e, S.Lambda):
        inner = bound | {e.param.text}
        return (
            f"fun({e.param}:{pretty_type(e.param_type)})"
            f"{_render_expr(e.body, env, chan_alias, inner)}"
        )
    if isinstance(e, S.App):
        return (
            f"({_render_expr(e.fn, env, chan_alias, bound)} "
            f"{_render_expr(e.arg, env, chan_alias, bound)})"
        )
    if isinstance(e, S.FieldSel):
        return f"{_render_expr(e.subject, env, chan_alias, bound)}.{e.label}"
    return repr(e)


def _render_payload(p, env, chan_alias, bound) -> str:
    if isinstance(p, S.NamePayload):
        if p.name.text not in bound and p.name.text in env:
            return _render_value(env.lookup(p.name.text), chan_alias)
        return p.name.text
    if isinstance(p, S.CompPayload):
        return _render_expr(p.expr, env, chan_alias, bound)
    d = p.data
    if isinstance(d, S.MakeObject):
        inner = ",".join(
            f"{lab}={_render_expr(v, env, chan_alias, bound)}"
            for lab, v in d.fields
        )
        return f"[{inner}]"
    inner = ",".join(
        f"{lab}<={_render_expr(v, env, chan_alias, bound)}"
        for lab, v in d.updates
    )
    return f"{_render_expr(d.target, env, chan_alias, bound)}.[{inner}]"


def _render_action(a, env, chan_alias, bound) -> tuple[str, set[str]]:
    """Rendered action plus the names it binds in the continuation."""
    guards = []
    while isinstance(a, S.Match):
        guards.append(
            f"[{_render_payload(a.left, env, chan_alias, bound)}="
            f"{_render_payload(a.right, env, chan_alias, bound)}]"
        )
        a = a.inner
    chan = a.chan.text
    if chan not in bound and chan in env:
        chan = _render_value(env.lookup(chan), chan_alias)
    prefix = "".join(guards)
    if isinstance(a, S.Send):
        payload = _render_payload(a.payload, env, chan_alias, bound)
        return f"{prefix}{chan}!({payload})", set()
    return f"{prefix}{chan}?({a.binder})", {a.binder.text}


def _render_proc(p, env, chan_alias, bound: set[str]) -> str:
    if isinstance(p, S.Nil):
        return "0"
    if isinstance(p, S.Prefix):
        action, binds = _render_action(p.action, env, chan_alias, bound)
        cont = _render_proc(p.continuation, env, chan_alias, bound | binds)
        return f"{action}.{cont}"
    if isinstance(p, S.Sum):
        operands = sorted(_sum_operands(p, env, chan_alias, bound))
        return "(" + "+".join(operands) + ")"
    if isinstance(p, S.Par):
        operands = sorted([
            _render_proc(p.left, env, chan_alias, bound),
            _render_proc(p.right, env, chan_alias, bound),
        ])
        return "(" + "|".join(operands) + ")"
    if isinstance(p, S.Restrict):
        # the binder shadows any outer binding of the same name
        return (
            f"new(:{pretty_sort(p.chan_sort)})"
            + _render_proc(p.body, env, chan_alias, bound | {p.chan.text})
        )
    if isinstance(p, S.Repl):
        return "!" + _render_proc(p.body, env, chan_alias, bound)
    if isinstance(p, S.ProcRef):
        return f"ref:{p.name}"
    return repr(p)


def _sum_operands(p, env, chan_alias, bound) -> list[str]:
    if isinstance(p, S.Sum):
        return (
            _sum_operands(p.left, env, chan_alias, bound)
            + _sum_operands(p.right, env, chan_alias, bound)
        )
    return [_render_proc(p, env, chan_alias, bound)]


def _member_key(member: SoupMember, chan_alias: dict[int, str]) -> str:
    text = _render_proc(member.term, member.env, chan_alias, set())
    if isinstance(member.term, S.Repl) and member.repl_budget is not None:
        text = f"{text}@budget{member.repl_budget}"
    return text


@dataclass(frozen=True)
class CanonicalState:
    soup: tuple[str, ...]
    store: tuple
    scopes: tuple[str, ...]

    def is_empty(self) -> bool:
        return not self.soup


def canonicalize(config: Configuration) -> CanonicalState:
    """Quotient a configuration by structural congruence."""
    # pass 1: restricted channel ids neutralized to fix a member order
    neutral = {cid: "@r" for cid, info in config.chan_scopes.items()
               if info.restricted}
    order = sorted(
        config.soup, key=lambda m: (_member_key(m, neutral), m.pid)
    )
    # pass 2: number restricted channels by first occurrence in that order
    alias: dict[int, str] = {}

    def register(cid: int):
        if cid not in alias:
            alias[cid] = f"@r{len(alias)}"

    class _Registering(dict):
        def get(self, cid, default=None):
            info = config.chan_scopes.get(cid)
            if info is not None and info.restricted:
                register(cid)
                return alias[cid]
            return default

    registering = _Registering()
    keys = [_member_key(m, registering) for m in order]
    keys.sort()
    scope_rows = tuple(sorted(
        f"{alias.get(info.id, info.name)}:{pretty_sort(info.sort)}"
        f":{'x' if info.extruded else 'r' if info.restricted else 'g'}"
        for info in config.chan_scopes.values()
        if not info.restricted or info.id in alias
    ))
    return CanonicalState(tuple(keys), config.store.snapshot(), scope_rows)


# ---------------------------------------------------------------------------
# State graph


@dataclass
class StateGraph:
    initial: CanonicalState
    states: set[CanonicalState] = field(default_factory=set)
    edges: list[tuple[CanonicalState, str, CanonicalState]] = field(
        default_factory=list
    )
    deadlocks: set[CanonicalState] = field(default_factory=set)
    terminals: set[CanonicalState] = field(default_factory=set)
    frontier: set[CanonicalState] = field(default_factory=set)
    # one representative concrete configuration per canonical state
    representatives: dict[CanonicalState, Configuration] = field(
        default_factory=dict
    )

    @property
    def budget_cut(self) -> bool:
        return bool(self.frontier)

    def to_dot(self) -> str:
        index = {s: i for i, s in enumerate(sorted(
            self.states, key=lambda s: (s != self.initial, s.soup, s.store)
        ))}
        lines = ["digraph states {"]
        for state, i in index.items():
            flags = []
            if state in self.deadlocks:
                flags.append("deadlock")
            if state in self.terminals:
                flags.append("terminal")
            if state in self.frontier:
                flags.append("frontier")
            label = f"s{i}" + (f" [{','.join(flags)}]" if flags else "")
            attrs = f'label="{label}"'
            if state in self.deadlocks:
                attrs += ' color="red"'
            lines.append(f"  s{i} [{attrs}];")
        for src, label, dst in self.edges:
            lines.append(
                f'  s{index[src]} -> s{index[dst]} [label="{label}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"


def _edge_label(config: Configuration, redex: Redex) -> str:
    if isinstance(redex, ReplSpawn):
        return f"spawn(pid{redex.pid})"
    info = config.chan_scopes[redex.chan_id]
    return f"comm({info.name})"


def explore(
    program: S.Program,
    max_depth: int = 32,
    max_states: int = 10**5,
    repl_budget: int = 2,
    annotations: dict[int, S.ObjType] | None = None,
) -> StateGraph:
    """BFS over canonical states, expanding every enabled redex."""
    config = initial_configuration(program, annotations,
                                   repl_budget=repl_budget)
    config.trace = []  # traces are per-path; not part of explored state
    initial = canonicalize(config)
    graph = StateGraph(initial)
    graph.states.add(initial)
    graph.representatives[initial] = config
    queue: deque[tuple[Configuration, CanonicalState, int]] = deque(
        [(config, initial, 0)]
    )
    while queue:
        current, state, depth = queue.popleft()
        current.budget_cut = False
        redexes = enabled_redexes(current)
        if current.budget_cut:
            graph.frontier.add(state)
        if not redexes:
            if not current.soup:
                graph.terminals.add(state)
            elif state not in graph.frontier:
                graph.deadlocks.add(state)
            continue
        if depth >= max_depth:
            graph.frontier.add(state)
            continue
        for redex in redexes:
            succ = step(current, redex)
            succ.trace = []
            succ_state = canonicalize(succ)
            graph.edges.append((state, _edge_label(current, redex),
                                succ_state))
            if succ_state not in graph.states:
                if len(graph.states) >= max_states:
                    graph.frontier.add(succ_state)
                    graph.states.add(succ_state)
                    graph.representatives[succ_state] = succ
                    continue
                graph.states.add(succ_state)
                graph.representatives[succ_state] = succ
                queue.append((succ, succ_state, depth + 1))
    return graph


def find_deadlocks(
    graph: StateGraph,
) -> list[tuple[CanonicalState, list[str]]]:
    """Each deadlock state with one shortest edge path from the initial."""
    paths: dict[CanonicalState, list[str]] = {graph.initial: []}
    adjacency: dict[CanonicalState, list[tuple[str, CanonicalState]]] = {}
    for src, label, dst in graph.edges:
        adjacency.setdefault(src, []).append((label, dst))
    queue = deque([graph.initial])
    while queue:
        state = queue.popleft()
        for label, dst in adjacency.get(state, []):
            if dst not in paths:
                paths[dst] = paths[state] + [label]
                queue.append(dst)
    result = [
        (state, paths[state])
        for state in graph.deadlocks
        if state in paths
    ]
    result.sort(key=lambda pair: (len(pair[1]), pair[1]))
    return result
