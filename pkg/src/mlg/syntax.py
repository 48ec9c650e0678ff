"""Abstract syntax for the three language cores.

Structural equality ignores source spans, so `parse(pretty(t)) == t` is the
round-trip law used throughout the tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import DUMMY_SPAN, Span

# ---------------------------------------------------------------------------
# Names

VARIABLE = "variable"
FIELD_LABEL = "field-label"
CHANNEL = "channel"

_NAME_CHARS_OK = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Name:
    text: str
    kind: str = field(default=VARIABLE, compare=False)
    span: Span = field(default=DUMMY_SPAN, compare=False)

    def __post_init__(self):
        if not _NAME_CHARS_OK.match(self.text):
            raise ValueError(f"invalid name: {self.text!r}")

    def __str__(self) -> str:
        return self.text


# ---------------------------------------------------------------------------
# Computation-core types


@dataclass(frozen=True)
class NatType:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class ArrowType:
    domain: CompType
    codomain: CompType

    def __str__(self) -> str:
        dom = str(self.domain)
        if isinstance(self.domain, ArrowType):
            dom = f"({dom})"
        return f"{dom} -> {self.codomain}"


@dataclass(frozen=True)
class ObjType:
    # ordered (label, type) pairs; labels pairwise distinct, at least one
    signature: tuple[tuple[Name, "CompType"], ...]

    def __post_init__(self):
        labels = [lab.text for lab, _ in self.signature]
        if not labels:
            raise ValueError("object signature must have at least one field")
        if len(set(labels)) != len(labels):
            raise ValueError("object signature has duplicate labels")

    def lookup(self, label: str) -> "CompType | None":
        for lab, ty in self.signature:
            if lab.text == label:
                return ty
        return None

    def labels(self) -> list[str]:
        return [lab.text for lab, _ in self.signature]

    def __str__(self) -> str:
        inner = ", ".join(f"{lab} : {ty}" for lab, ty in self.signature)
        return f"[{inner}]"


CompType = NatType | ArrowType | ObjType

NAT = NatType()


# ---------------------------------------------------------------------------
# Computation-core expressions


@dataclass(frozen=True)
class Var:
    name: Name
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Zero:
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Succ:
    arg: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Rec:
    scrutinee: CompExpr
    zero_branch: CompExpr
    succ_binder: Name
    rec_binder: Name
    succ_branch: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)

    def __post_init__(self):
        if self.succ_binder.text == self.rec_binder.text:
            raise ValueError("rec binders must be distinct")


@dataclass(frozen=True)
class Lambda:
    param: Name
    param_type: CompType
    body: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class App:
    fn: CompExpr
    arg: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class FieldSel:
    subject: CompExpr
    label: Name
    span: Span = field(default=DUMMY_SPAN, compare=False)


CompExpr = Var | Zero | Succ | Rec | Lambda | App | FieldSel


def numeral(n: int, span: Span = DUMMY_SPAN) -> CompExpr:
    """Iterated-succ representation of a literal natural."""
    e: CompExpr = Zero(span)
    for _ in range(n):
        e = Succ(e, span)
    return e


def as_numeral(e: CompExpr) -> int | None:
    """Inverse of `numeral` on succ-chains ending in zero, else None."""
    n = 0
    while isinstance(e, Succ):
        n += 1
        e = e.arg
    return n if isinstance(e, Zero) else None


# ---------------------------------------------------------------------------
# Data-core expressions


@dataclass(frozen=True)
class MakeObject:
    fields: tuple[tuple[Name, CompExpr], ...]
    span: Span = field(default=DUMMY_SPAN, compare=False)

    def __post_init__(self):
        labels = [lab.text for lab, _ in self.fields]
        if not labels:
            raise ValueError("object literal must have at least one field")
        if len(set(labels)) != len(labels):
            raise ValueError("object literal has duplicate labels")


@dataclass(frozen=True)
class UpdateObject:
    target: CompExpr
    updates: tuple[tuple[Name, CompExpr], ...]
    span: Span = field(default=DUMMY_SPAN, compare=False)

    def __post_init__(self):
        labels = [lab.text for lab, _ in self.updates]
        if not labels:
            raise ValueError("update must write at least one field")
        if len(set(labels)) != len(labels):
            raise ValueError("update has duplicate labels")


DataExpr = MakeObject | UpdateObject


# ---------------------------------------------------------------------------
# Coordination-core payloads and processes


@dataclass(frozen=True)
class NamePayload:
    """A bare identifier in payload position.

    Variable and channel namespaces are shared, so which category the name
    belongs to is resolved by the checker/engine from the enclosing scope.
    """

    name: Name
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class CompPayload:
    expr: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class ObjPayload:
    data: DataExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


Payload = NamePayload | CompPayload | ObjPayload


@dataclass(frozen=True)
class Send:
    chan: Name
    payload: Payload
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Receive:
    chan: Name
    binder: Name
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Match:
    left: Payload
    right: Payload
    inner: ProcAction
    span: Span = field(default=DUMMY_SPAN, compare=False)


ProcAction = Send | Receive | Match


@dataclass(frozen=True)
class Nil:
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Prefix:
    action: ProcAction
    continuation: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Sum:
    left: ProcTerm
    right: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Par:
    left: ProcTerm
    right: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Restrict:
    chan: Name
    chan_sort: "object"  # ChannelSort; kept untyped to avoid an import cycle
    body: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class Repl:
    body: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class ProcRef:
    """Reference to a named top-level process definition."""

    name: Name
    span: Span = field(default=DUMMY_SPAN, compare=False)


ProcTerm = Nil | Prefix | Sum | Par | Restrict | Repl | ProcRef


def is_guarded(p: ProcTerm) -> bool:
    """Sum operands must be Nil, a prefix, or a sum of such."""
    if isinstance(p, (Nil, Prefix)):
        return True
    if isinstance(p, Sum):
        return is_guarded(p.left) and is_guarded(p.right)
    return False


# ---------------------------------------------------------------------------
# Programs


@dataclass(frozen=True)
class DefDef:
    name: Name
    body: CompExpr
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class ChanDecl:
    name: Name
    sort: "object"  # ChannelSort
    span: Span = field(default=DUMMY_SPAN, compare=False)


@dataclass(frozen=True)
class ProcDef:
    name: Name
    body: ProcTerm
    span: Span = field(default=DUMMY_SPAN, compare=False)


TopItem = DefDef | ChanDecl | ProcDef


@dataclass(frozen=True)
class Program:
    defs: tuple[TopItem, ...]
    entry: ProcTerm | None = None
    span: Span = field(default=DUMMY_SPAN, compare=False)

    def comp_defs(self) -> list[DefDef]:
        return [d for d in self.defs if isinstance(d, DefDef)]

    def chan_decls(self) -> list[ChanDecl]:
        return [d for d in self.defs if isinstance(d, ChanDecl)]

    def proc_defs(self) -> list[ProcDef]:
        return [d for d in self.defs if isinstance(d, ProcDef)]

    def uses_replication(self) -> bool:
        def walk(p: ProcTerm) -> bool:
            if isinstance(p, Repl):
                return True
            if isinstance(p, (Sum, Par)):
                return walk(p.left) or walk(p.right)
            if isinstance(p, Prefix):
                return walk(p.continuation)
            if isinstance(p, Restrict):
                return walk(p.body)
            return False

        terms = [d.body for d in self.proc_defs()]
        if self.entry is not None:
            terms.append(self.entry)
        return any(walk(t) for t in terms)
