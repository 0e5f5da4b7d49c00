from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from actorsnap.errors import ArityMismatch, DuplicateTypeName, ForeignAccess, UnknownTypeName
from actorsnap.values import (
    BUILTINS,
    Arr,
    FarRef,
    Kind,
    Obj,
    TypeRegistry,
    acting_as,
    current_actor_id,
    is_primitive,
    new_object,
)


def test_register_assigns_next_free_id():
    reg = TypeRegistry()
    tag = reg.register("Pair", 2, Kind.OBJECT)
    assert tag.id == len(BUILTINS)
    assert tag.arity == 2
    assert reg["Pair"] is tag
    assert reg[tag.id] is tag


def test_duplicate_name_rejected():
    reg = TypeRegistry()
    reg.register("Pair", 2)
    with pytest.raises(DuplicateTypeName):
        reg.register("Pair", 2)


def test_unknown_lookup():
    reg = TypeRegistry()
    with pytest.raises(UnknownTypeName):
        reg["Nope"]
    with pytest.raises(UnknownTypeName):
        reg[999]


def test_negative_arity_rejected():
    with pytest.raises(ValueError):
        TypeRegistry().register("Bad", -1)


@given(st.lists(st.text(min_size=1, max_size=8), unique=True, max_size=30))
def test_ids_are_dense(names):
    reg = TypeRegistry(builtins=False)
    for n in names:
        reg.register(n, 1)
    assert [t.id for t in reg] == list(range(len(names)))


@given(st.lists(st.tuples(st.text(min_size=1, max_size=8), st.integers(0, 5)), unique_by=lambda t: t[0], max_size=20))
def test_registration_is_deterministic(regs):
    a, b = TypeRegistry(builtins=False), TypeRegistry(builtins=False)
    for n, k in regs:
        a.register(n, k)
    for n, k in regs:
        b.register(n, k)
    assert list(a) == list(b)


def test_object_field_access_by_owner():
    reg = TypeRegistry()
    pair = reg.register("Pair", 2)
    o = new_object(1, pair, [1, 2])
    with acting_as(1):
        assert o[0] == 1
        o[1] = 5
        assert o[1] == 5


def test_arity_mismatch():
    pair = TypeRegistry().register("Pair", 2)
    with pytest.raises(ArityMismatch):
        new_object(1, pair, [1])


def test_new_object_needs_object_kind():
    reg = TypeRegistry()
    with pytest.raises(TypeError):
        new_object(1, reg["Array"], [])


def test_foreign_access_rejected():
    pair = TypeRegistry().register("Pair", 2)
    o = Obj(1, pair, [1, 2])
    a = Arr(1, [1, 2, 3])
    with acting_as(2):
        with pytest.raises(ForeignAccess):
            o[0]
        with pytest.raises(ForeignAccess):
            o[0] = 3
        with pytest.raises(ForeignAccess):
            a.append(4)
        with pytest.raises(ForeignAccess):
            list(a)
    # host code outside any turn is unrestricted
    assert current_actor_id() is None
    assert o[0] == 1


def test_acting_as_restores_previous():
    with acting_as(3):
        with acting_as(4):
            assert current_actor_id() == 4
        assert current_actor_id() == 3
    assert current_actor_id() is None


def test_array_ops():
    a = Arr(1, [1, 2])
    with acting_as(1):
        a.append(3)
        assert a.pop() == 3
        assert a.pop(0) == 1
        assert list(a) == [2]
        assert len(a) == 1


def test_farref_equality_is_identity_of_target():
    pair = TypeRegistry().register("Pair", 2)
    o1 = Obj(1, pair, [1, 2])
    o2 = Obj(1, pair, [1, 2])
    assert FarRef(1, o1) == FarRef(1, o1)
    assert FarRef(1, o1) != FarRef(1, o2)
    assert len({FarRef(1, o1), FarRef(1, o1)}) == 1


def test_is_primitive():
    assert all(is_primitive(v) for v in (None, True, 3, 2.5, "x"))
    assert not is_primitive(Arr(1))
