import re

import numpy as np
import pytest

from gridkit import (FactoryLookupError, Registry, TypeDescriptor,
                     defaultRegistry, describe, generateTypeName, insertClass,
                     moduleKey, resolveFactory)


def test_generate_type_name_with_int():
    desc = generateTypeName("MyModule::FooImplA", 2)
    assert desc.typeName == "MyModule::FooImplA< 2 >"
    assert desc.includes == ()


def test_generate_type_name_nested():
    inner = generateTypeName("MyModule::FooImplA", 2).withIncludes(
        "dune/mymodule/fooimpl.hh", "dune/mymodule/py/foo.hh")
    outer = generateTypeName("MyModule::FooImplC", inner)
    assert outer.typeName == "MyModule::FooImplC< MyModule::FooImplA< 2 > >"
    assert outer.includes == ("dune/mymodule/fooimpl.hh",
                              "dune/mymodule/py/foo.hh")


def test_generate_type_name_no_args():
    desc = generateTypeName("X")
    assert desc.typeName == "X"
    assert desc.includes == ()


def test_generate_type_name_multiple_args():
    a = TypeDescriptor("A", ("a.hh", "shared.hh"))
    b = TypeDescriptor("B", ("shared.hh", "b.hh"))
    desc = generateTypeName("Pair", a, b)
    assert desc.typeName == "Pair< A, B >"
    assert desc.includes == ("a.hh", "shared.hh", "b.hh")


def test_nesting_associativity():
    inner = generateTypeName("Inner", 3)
    viaDescriptor = generateTypeName("Outer", inner)
    viaString = generateTypeName("Outer", inner.typeName)
    assert viaDescriptor.typeName == viaString.typeName


def test_insert_class_dedup():
    reg = Registry()
    desc = generateTypeName("MyModule::FooImplA", 2)
    handle, isNew = insertClass(reg, desc, lambda: "a")
    assert isNew is True
    again, isNew2 = insertClass(reg, desc, lambda: "other")
    assert isNew2 is False
    assert again is handle


def test_insertion_order_preserved():
    reg = Registry()
    names = ["B", "A", "C"]
    for name in names:
        insertClass(reg, TypeDescriptor(name), None)
    assert [h.descriptor.typeName for h in reg] == names


def test_module_key_format_and_determinism():
    desc = generateTypeName("MyModule::FooImplC",
                            generateTypeName("MyModule::FooImplA", 2))
    key = moduleKey(desc)
    assert re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*_[0-9a-f]{32}", key)
    assert key == moduleKey(desc)
    withInclude = desc.withIncludes("foo.hh")
    assert moduleKey(withInclude) != key


def test_module_key_collisions_unlikely():
    rng = np.random.default_rng(123)
    keys = set()
    for _ in range(1000):
        base = "NS::Cls" + str(rng.integers(0, 10 ** 9))
        desc = generateTypeName(base, int(rng.integers(0, 100)))
        if rng.integers(0, 2):
            desc = desc.withIncludes(f"inc/{rng.integers(0, 10 ** 6)}.hh")
        keys.add(moduleKey(desc))
    assert len(keys) == 1000


def test_resolve_structured_grid():
    view = resolveFactory(defaultRegistry, "structuredGrid",
                          {"lower": [0, 0], "upper": [1, 0.25],
                           "cells": [15, 4]})
    assert view.size(0) == 60
    desc = describe(view)
    assert "2" in desc.typeName
    assert "StructuredGrid" in desc.typeName


def test_resolve_unknown_name():
    with pytest.raises(FactoryLookupError) as info:
        resolveFactory(defaultRegistry, "nope", {})
    assert "structuredGrid" in str(info.value)


def test_resolve_same_params_equal_descriptors():
    params = {"lower": [0], "upper": [1], "cells": [4]}
    a = resolveFactory(defaultRegistry, "structuredGrid", params)
    b = resolveFactory(defaultRegistry, "structuredGrid", params)
    assert describe(a) == describe(b)
    assert a is not b


def test_resolve_conform_and_simplex():
    params = {"vertices": [(0, 0), (1, 0), (0, 1)], "simplices": [(0, 1, 2)]}
    conform = resolveFactory(defaultRegistry, "conformGrid", params)
    quartering = resolveFactory(defaultRegistry, "simplexGrid", params)
    assert conform.size(0) == quartering.size(0) == 1
    assert describe(conform) != describe(quartering)
