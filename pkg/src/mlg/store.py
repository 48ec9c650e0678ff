"""Heap of stateful objects: allocation, field reads, atomic multi-field
updates."""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import MlgError
from . import syntax as S


@dataclass
class StoredObject:
    id: int
    signature: S.ObjType | None  # None only for unchecked programs
    fields: dict[str, object]  # label -> Value
    version: int = 0

    def snapshot(self) -> tuple:
        return (self.id, self.version, tuple(sorted(
            (lab, render_value(val)) for lab, val in self.fields.items()
        )))

    def render(self) -> str:
        inner = ",".join(
            f"{lab}={render_value(val)}"
            for lab, val in sorted(self.fields.items())
        )
        return f"obj#{self.id}{{{inner}}}@v{self.version}"


def render_value(v) -> str:
    # local import keeps store free of an evaluate dependency at module load
    from .evaluate import NatVal, Closure, ObjRef, ChanRef

    if isinstance(v, NatVal):
        return str(v.n)
    if isinstance(v, ObjRef):
        return f"obj#{v.id}"
    if isinstance(v, ChanRef):
        return f"chan#{v.id}"
    if isinstance(v, Closure):
        return f"<fun({v.param} : {v.param_type})>"
    return repr(v)


class ObjectStore:
    """Object identifiers are monotonically allocated and never reused."""

    def __init__(self):
        self.objects: dict[int, StoredObject] = {}
        self.next_id = 0
        self.write_count = 0  # allocations + updates, for purity assertions

    def alloc(self, signature: S.ObjType | None,
              initial: dict[str, object]) -> "object":
        from .evaluate import ObjRef

        if signature is not None:
            if set(initial) != set(signature.labels()):
                raise MlgError(
                    "allocation fields do not match object signature"
                )
        obj = StoredObject(self.next_id, signature, dict(initial))
        self.objects[obj.id] = obj
        self.next_id += 1
        self.write_count += 1
        return ObjRef(obj.id)

    def _lookup(self, ref) -> StoredObject:
        obj = self.objects.get(ref.id)
        if obj is None:
            raise MlgError(f"dangling object reference #{ref.id}")
        return obj

    def get(self, ref, label: str):
        obj = self._lookup(ref)
        if label not in obj.fields:
            raise MlgError(
                f"object #{ref.id} has no field '{label}'"
            )
        return obj.fields[label]

    def update(self, ref, writes: list[tuple[str, object]]) -> None:
        """Apply all writes as one transaction and bump the version once."""
        obj = self._lookup(ref)
        labels = [lab for lab, _ in writes]
        if len(set(labels)) != len(labels):
            raise MlgError("duplicate labels in one update")
        for lab in labels:
            if lab not in obj.fields:
                raise MlgError(
                    f"object #{ref.id} has no field '{lab}'"
                )
        for lab, val in writes:
            obj.fields[lab] = val
        obj.version += 1
        self.write_count += 1

    def snapshot(self) -> tuple:
        return tuple(
            self.objects[oid].snapshot() for oid in sorted(self.objects)
        )

    def clone(self) -> "ObjectStore":
        other = ObjectStore()
        other.next_id = self.next_id
        other.write_count = self.write_count
        for oid, obj in self.objects.items():
            other.objects[oid] = StoredObject(
                obj.id, obj.signature, dict(obj.fields), obj.version
            )
        return other
