"""Static checking for all three cores.

Computation expressions get simple types (naturals and arrows, with a
well-founded recursor rule) extended with structural object types; object
creation/update is checked against those signatures; process terms are
checked against declared channel sorts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, Span
from . import syntax as S

# ---------------------------------------------------------------------------
# Channel sorts


@dataclass(frozen=True)
class CarriesChan:
    inner: "ChannelSort"

    def __str__(self) -> str:
        return f"chan({self.inner})"


@dataclass(frozen=True)
class CarriesNat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class CarriesFn:
    fn_type: S.CompType

    def __str__(self) -> str:
        return str(self.fn_type)


@dataclass(frozen=True)
class CarriesObj:
    signature: S.ObjType

    def __str__(self) -> str:
        return str(self.signature)


ChannelSort = CarriesChan | CarriesNat | CarriesFn | CarriesObj


def sort_of_type(ty: S.CompType) -> ChannelSort:
    if isinstance(ty, S.NatType):
        return CarriesNat()
    if isinstance(ty, S.ArrowType):
        return CarriesFn(ty)
    return CarriesObj(ty)


def type_of_sort(sort: ChannelSort) -> S.CompType | None:
    """The computation type a receive binder gets, or None for channel sorts."""
    if isinstance(sort, CarriesNat):
        return S.NAT
    if isinstance(sort, CarriesFn):
        return sort.fn_type
    if isinstance(sort, CarriesObj):
        return sort.signature
    return None


# ---------------------------------------------------------------------------
# Environments


class TypeError_(Exception):
    def __init__(self, message: str, span: Span):
        self.diagnostic = Diagnostic(message, span)
        super().__init__(message)


@dataclass(frozen=True)
class TypeEnv:
    comp_bindings: dict[str, S.CompType] = field(default_factory=dict)
    chan_bindings: dict[str, ChannelSort] = field(default_factory=dict)

    def with_comp(self, name: str, ty: S.CompType) -> "TypeEnv":
        comp = dict(self.comp_bindings)
        comp[name] = ty
        return TypeEnv(comp, self.chan_bindings)

    def with_chan(self, name: str, sort: ChannelSort) -> "TypeEnv":
        chans = dict(self.chan_bindings)
        chans[name] = sort
        return TypeEnv(self.comp_bindings, chans)


# ---------------------------------------------------------------------------
# Computation core


def infer_comp(env: TypeEnv, e: S.CompExpr) -> S.CompType:
    """Type of `e` under `env`; raises TypeError_ with a span on failure."""
    if isinstance(e, S.Var):
        ty = env.comp_bindings.get(e.name.text)
        if ty is None:
            raise TypeError_(f"unbound variable '{e.name}'", e.span)
        return ty
    if isinstance(e, S.Zero):
        return S.NAT
    if isinstance(e, S.Succ):
        arg = infer_comp(env, e.arg)
        if not isinstance(arg, S.NatType):
            raise TypeError_(f"succ expects nat, got {arg}", e.span)
        return S.NAT
    if isinstance(e, S.Rec):
        scrut = infer_comp(env, e.scrutinee)
        if not isinstance(scrut, S.NatType):
            raise TypeError_(f"rec scrutinee must be nat, got {scrut}", e.span)
        zero_ty = infer_comp(env, e.zero_branch)
        body_env = env.with_comp(e.succ_binder.text, S.NAT).with_comp(
            e.rec_binder.text, zero_ty
        )
        succ_ty = infer_comp(body_env, e.succ_branch)
        if succ_ty != zero_ty:
            raise TypeError_(
                f"rec branches disagree: {zero_ty} vs {succ_ty}", e.span
            )
        return zero_ty
    if isinstance(e, S.Lambda):
        body_ty = infer_comp(env.with_comp(e.param.text, e.param_type), e.body)
        return S.ArrowType(e.param_type, body_ty)
    if isinstance(e, S.App):
        fn_ty = infer_comp(env, e.fn)
        if not isinstance(fn_ty, S.ArrowType):
            raise TypeError_(f"cannot apply a value of type {fn_ty}", e.span)
        arg_ty = infer_comp(env, e.arg)
        if arg_ty != fn_ty.domain:
            raise TypeError_(
                f"argument type {arg_ty} does not match parameter type "
                f"{fn_ty.domain}",
                e.arg.span,
            )
        return fn_ty.codomain
    if isinstance(e, S.FieldSel):
        subj = infer_comp(env, e.subject)
        if not isinstance(subj, S.ObjType):
            raise TypeError_(
                f"field selection on non-object type {subj}", e.span
            )
        ty = subj.lookup(e.label.text)
        if ty is None:
            raise TypeError_(
                f"object has no field '{e.label}' (fields: "
                f"{', '.join(subj.labels())})",
                e.span,
            )
        return ty
    raise TypeError_(f"unknown expression form {type(e).__name__}", e.span)


# ---------------------------------------------------------------------------
# Data core


def check_data(
    env: TypeEnv,
    d: S.DataExpr,
    annotations: dict[int, S.ObjType] | None = None,
) -> S.ObjType:
    """Object type of a creation/update expression.

    When `annotations` is given, the inferred signature of every MakeObject
    node is recorded there (keyed by node identity) so the engine can allocate
    with the statically known signature.
    """
    if isinstance(d, S.MakeObject):
        sig = tuple(
            (lab, infer_comp(env, init)) for lab, init in d.fields
        )
        obj_ty = S.ObjType(sig)
        if annotations is not None:
            annotations[id(d)] = obj_ty
        return obj_ty
    if isinstance(d, S.UpdateObject):
        target_ty = infer_comp(env, d.target)
        if not isinstance(target_ty, S.ObjType):
            raise TypeError_(
                f"update target has non-object type {target_ty}", d.span
            )
        for lab, new_value in d.updates:
            declared = target_ty.lookup(lab.text)
            if declared is None:
                raise TypeError_(
                    f"update writes unknown field '{lab}'", lab.span
                )
            actual = infer_comp(env, new_value)
            if actual != declared:
                raise TypeError_(
                    f"update changes type of field '{lab}' from {declared} "
                    f"to {actual}",
                    new_value.span,
                )
        return target_ty
    raise TypeError_(f"unknown data form {type(d).__name__}", d.span)


# ---------------------------------------------------------------------------
# Coordination core

# Payload categories for Match comparability.
CAT_CHAN = "channel"
CAT_NAT = "nat"
CAT_FN = "function"
CAT_OBJ = "object"


def _category_of_sort(sort: ChannelSort) -> str:
    if isinstance(sort, CarriesChan):
        return CAT_CHAN
    if isinstance(sort, CarriesNat):
        return CAT_NAT
    if isinstance(sort, CarriesFn):
        return CAT_FN
    return CAT_OBJ


def _payload_sort(
    env: TypeEnv,
    payload: S.Payload,
    annotations: dict[int, S.ObjType] | None,
) -> ChannelSort:
    """The sort a payload would need its channel to carry."""
    if isinstance(payload, S.NamePayload):
        text = payload.name.text
        if text in env.chan_bindings:
            return CarriesChan(env.chan_bindings[text])
        if text in env.comp_bindings:
            return sort_of_type(env.comp_bindings[text])
        raise TypeError_(f"unbound name '{text}'", payload.span)
    if isinstance(payload, S.CompPayload):
        return sort_of_type(infer_comp(env, payload.expr))
    # ObjPayload
    return CarriesObj(check_data(env, payload.data, annotations))


def _check_action(
    env: TypeEnv,
    action: S.ProcAction,
    diags: list[Diagnostic],
    annotations: dict[int, S.ObjType] | None,
) -> TypeEnv | None:
    """Check one action; returns the continuation environment or None."""
    if isinstance(action, S.Match):
        try:
            left = _payload_sort(env, action.left, annotations)
            right = _payload_sort(env, action.right, annotations)
        except TypeError_ as exc:
            diags.append(exc.diagnostic)
            return None
        lcat, rcat = _category_of_sort(left), _category_of_sort(right)
        if lcat != rcat:
            diags.append(
                Diagnostic(
                    f"match compares a {lcat} with a {rcat}", action.span
                )
            )
            return None
        if lcat == CAT_FN:
            diags.append(
                Diagnostic("functions are not comparable in match", action.span)
            )
            return None
        if isinstance(action.left, S.ObjPayload) or isinstance(
            action.right, S.ObjPayload
        ):
            diags.append(
                Diagnostic(
                    "match guards may not create or update objects",
                    action.span,
                )
            )
            return None
        return _check_action(env, action.inner, diags, annotations)

    sort = env.chan_bindings.get(action.chan.text)
    if sort is None:
        diags.append(
            Diagnostic(f"unsorted channel '{action.chan}'", action.chan.span)
        )
        return None
    if isinstance(action, S.Send):
        try:
            actual = _payload_sort(env, action.payload, annotations)
        except TypeError_ as exc:
            diags.append(exc.diagnostic)
            return None
        if actual != sort:
            diags.append(
                Diagnostic(
                    f"channel '{action.chan}' carries {sort} but payload "
                    f"has sort {actual}",
                    action.span,
                )
            )
            return None
        return env
    # Receive: bind the binder at the sort-implied type
    if isinstance(sort, CarriesChan):
        return env.with_chan(action.binder.text, sort.inner)
    return env.with_comp(action.binder.text, type_of_sort(sort))


def check_proc(
    env: TypeEnv,
    p: S.ProcTerm,
    proc_env: dict[str, S.ProcTerm] | None = None,
    annotations: dict[int, S.ObjType] | None = None,
) -> list[Diagnostic]:
    """Diagnostics for a process term; empty list means ok."""
    diags: list[Diagnostic] = []
    _check_proc(env, p, diags, proc_env or {}, annotations)
    return diags


def _check_proc(
    env: TypeEnv,
    p: S.ProcTerm,
    diags: list[Diagnostic],
    proc_env: dict[str, S.ProcTerm],
    annotations: dict[int, S.ObjType] | None,
) -> None:
    if isinstance(p, S.Nil):
        return
    if isinstance(p, S.Prefix):
        cont_env = _check_action(env, p.action, diags, annotations)
        if cont_env is not None:
            _check_proc(cont_env, p.continuation, diags, proc_env, annotations)
        return
    if isinstance(p, S.Sum):
        for side in (p.left, p.right):
            if not S.is_guarded(side):
                diags.append(Diagnostic("unguarded sum operand", side.span))
            else:
                _check_proc(env, side, diags, proc_env, annotations)
        return
    if isinstance(p, S.Par):
        _check_proc(env, p.left, diags, proc_env, annotations)
        _check_proc(env, p.right, diags, proc_env, annotations)
        return
    if isinstance(p, S.Restrict):
        _check_proc(
            env.with_chan(p.chan.text, p.chan_sort),
            p.body,
            diags,
            proc_env,
            annotations,
        )
        return
    if isinstance(p, S.Repl):
        _check_proc(env, p.body, diags, proc_env, annotations)
        return
    if isinstance(p, S.ProcRef):
        if p.name.text not in proc_env:
            diags.append(
                Diagnostic(f"unbound process name '{p.name}'", p.span)
            )
        # the definition itself is checked where it is defined
        return
    diags.append(Diagnostic(f"unknown process form {type(p).__name__}", p.span))


# ---------------------------------------------------------------------------
# Whole programs


@dataclass
class CheckResult:
    env: TypeEnv
    def_types: dict[str, S.CompType]
    diagnostics: list[Diagnostic]
    # MakeObject node id -> statically inferred signature (for allocation)
    obj_annotations: dict[int, S.ObjType]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def check_program(program: S.Program) -> CheckResult:
    env = TypeEnv()
    def_types: dict[str, S.CompType] = {}
    diags: list[Diagnostic] = []
    annotations: dict[int, S.ObjType] = {}
    proc_env: dict[str, S.ProcTerm] = {}
    for item in program.defs:
        if isinstance(item, S.DefDef):
            try:
                ty = infer_comp(env, item.body)
            except TypeError_ as exc:
                diags.append(exc.diagnostic)
                continue
            env = env.with_comp(item.name.text, ty)
            def_types[item.name.text] = ty
        elif isinstance(item, S.ChanDecl):
            env = env.with_chan(item.name.text, item.sort)
        else:  # ProcDef
            diags.extend(check_proc(env, item.body, proc_env, annotations))
            proc_env[item.name.text] = item.body
    if program.entry is not None:
        diags.extend(check_proc(env, program.entry, proc_env, annotations))
    return CheckResult(env, def_types, diags, annotations)
