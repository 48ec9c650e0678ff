"""Pretty-printer; `parse(pretty(t))` is structurally identical to `t`."""

from __future__ import annotations

from . import syntax as S
from . import typecheck as T


# -- types ------------------------------------------------------------------

def pretty_type(ty: S.CompType) -> str:
    if isinstance(ty, S.NatType):
        return "nat"
    if isinstance(ty, S.ArrowType):
        dom = pretty_type(ty.domain)
        if isinstance(ty.domain, S.ArrowType):
            dom = f"({dom})"
        return f"{dom} -> {pretty_type(ty.codomain)}"
    inner = ", ".join(
        f"{lab} : {pretty_type(t)}" for lab, t in ty.signature
    )
    return f"[{inner}]"


def pretty_sort(sort: T.ChannelSort) -> str:
    if isinstance(sort, T.CarriesChan):
        return f"chan({pretty_sort(sort.inner)})"
    if isinstance(sort, T.CarriesNat):
        return "nat"
    if isinstance(sort, T.CarriesFn):
        return pretty_type(sort.fn_type)
    return pretty_type(sort.signature)


# -- computation expressions ------------------------------------------------

# precedence contexts
_EXPR, _APP, _POSTFIX = 0, 1, 2


def _expr(e, level: int) -> str:
    if isinstance(e, S.Var):
        return e.name.text
    if isinstance(e, S.Zero):
        return "z"
    if isinstance(e, S.Succ):
        n = S.as_numeral(e)
        if n is not None:
            return str(n)
        return f"succ({_expr(e.arg, _EXPR)})"
    if isinstance(e, S.Lambda):
        text = (
            f"fun ({e.param} : {pretty_type(e.param_type)}) "
            f"{_expr(e.body, _EXPR)}"
        )
        return f"({text})" if level > _EXPR else text
    if isinstance(e, S.Rec):
        scrut = _expr(e.scrutinee, _APP)
        text = (
            f"rec {scrut} {{ z -> {_expr(e.zero_branch, _EXPR)} | "
            f"succ({e.succ_binder}) with {e.rec_binder} -> "
            f"{_expr(e.succ_branch, _EXPR)} }}"
        )
        return f"({text})" if level > _EXPR else text
    if isinstance(e, S.App):
        text = f"{_expr(e.fn, _APP)} {_expr(e.arg, _POSTFIX)}"
        return f"({text})" if level > _APP else text
    if isinstance(e, S.FieldSel):
        return f"{_expr(e.subject, _POSTFIX)}.{e.label}"
    if isinstance(e, (S.MakeObject, S.UpdateObject)):
        return pretty_data(e)
    raise TypeError(f"not an expression: {e!r}")


def pretty_expr(e: S.CompExpr) -> str:
    return _expr(e, _EXPR)


def pretty_data(d: S.DataExpr) -> str:
    if isinstance(d, S.MakeObject):
        inner = ", ".join(
            f"{lab} = {_expr(init, _EXPR)}" for lab, init in d.fields
        )
        return f"[{inner}]"
    inner = ", ".join(
        f"{lab} <= {_expr(val, _EXPR)}" for lab, val in d.updates
    )
    return f"{_expr(d.target, _POSTFIX)}.[{inner}]"


def pretty_payload(p: S.Payload) -> str:
    if isinstance(p, S.NamePayload):
        return p.name.text
    if isinstance(p, S.CompPayload):
        return pretty_expr(p.expr)
    return pretty_data(p.data)


# -- processes --------------------------------------------------------------

_PAR, _SUM, _PREFIXED = 0, 1, 2


def _action(a: S.ProcAction) -> str:
    if isinstance(a, S.Send):
        return f"{a.chan}!({pretty_payload(a.payload)})"
    if isinstance(a, S.Receive):
        return f"{a.chan}?({a.binder})"
    return (
        f"[{pretty_payload(a.left)} = {pretty_payload(a.right)}] "
        f"{_action(a.inner)}"
    )


def _proc(p: S.ProcTerm, level: int) -> str:
    if isinstance(p, S.Nil):
        return "0"
    if isinstance(p, S.ProcRef):
        return p.name.text
    if isinstance(p, S.Prefix):
        return f"{_action(p.action)} . {_proc(p.continuation, _PREFIXED)}"
    if isinstance(p, S.Sum):
        text = f"{_proc(p.left, _SUM)} + {_proc(p.right, _PREFIXED)}"
        return f"({text})" if level > _SUM else text
    if isinstance(p, S.Par):
        # operands at sum level: restrictions extend maximally rightward and
        # must be parenthesized inside a parallel composition
        left = (
            _proc(p.left, _PAR)
            if isinstance(p.left, S.Par)
            else _proc(p.left, _SUM)
        )
        text = f"{left} | {_proc(p.right, _SUM)}"
        return f"({text})" if level > _PAR else text
    if isinstance(p, S.Repl):
        return f"!{_proc(p.body, _PREFIXED)}"
    if isinstance(p, S.Restrict):
        text = (
            f"new {p.chan} : {pretty_sort(p.chan_sort)} in "
            f"{_proc(p.body, _PAR)}"
        )
        # `new` extends maximally rightward; parenthesize in any sub-position
        return f"({text})" if level > _PAR else text
    raise TypeError(f"not a process: {p!r}")


def pretty_proc(p: S.ProcTerm) -> str:
    return _proc(p, _PAR)


# -- programs ---------------------------------------------------------------

def pretty_program(program: S.Program) -> str:
    lines: list[str] = []
    for item in program.defs:
        if isinstance(item, S.DefDef):
            lines.append(f"def {item.name} = {pretty_expr(item.body)}")
        elif isinstance(item, S.ChanDecl):
            lines.append(f"chan {item.name} : {pretty_sort(item.sort)}")
        else:
            lines.append(f"proc {item.name} = {pretty_proc(item.body)}")
    if program.entry is not None:
        lines.append(f"system = {pretty_proc(program.entry)}")
    return "\n".join(lines) + "\n"


def pretty(item) -> str:
    """Render any syntax item back to concrete syntax."""
    if isinstance(item, S.Program):
        return pretty_program(item)
    if isinstance(item, (S.MakeObject, S.UpdateObject)):
        return pretty_data(item)
    if isinstance(item, (S.Nil, S.Prefix, S.Sum, S.Par, S.Restrict,
                         S.Repl, S.ProcRef)):
        return pretty_proc(item)
    if isinstance(item, (S.NamePayload, S.CompPayload, S.ObjPayload)):
        return pretty_payload(item)
    if isinstance(item, (S.NatType, S.ArrowType, S.ObjType)):
        return pretty_type(item)
    if isinstance(item, (T.CarriesChan, T.CarriesNat, T.CarriesFn,
                         T.CarriesObj)):
        return pretty_sort(item)
    return pretty_expr(item)
