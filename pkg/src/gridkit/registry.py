"""Runtime type registry: composable type-name strings and named factories.

Type descriptors carry a C++-style template spelling plus an ordered,
deduplicated include list; the registry maps descriptors to construction
handles and backs the dynamic ``resolveFactory`` entry point used by the
CLI and the protocol server.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import FactoryLookupError


@dataclass(frozen=True)
class TypeDescriptor:
    typeName: str
    includes: tuple = ()

    def withIncludes(self, *more) -> "TypeDescriptor":
        return TypeDescriptor(self.typeName,
                              _dedup(tuple(self.includes) + tuple(more)))


def _dedup(items):
    seen, out = set(), []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return tuple(out)


def generateTypeName(base: str, *args) -> TypeDescriptor:
    """Compose ``base< a1, a2 >``; descriptor arguments contribute includes."""
    if not args:
        return TypeDescriptor(base)
    parts, includes = [], []
    for arg in args:
        if isinstance(arg, TypeDescriptor):
            parts.append(arg.typeName)
            includes.extend(arg.includes)
        else:
            parts.append(str(arg))
    return TypeDescriptor(f"{base}< {', '.join(parts)} >", _dedup(includes))


def moduleKey(desc: TypeDescriptor) -> str:
    """Deterministic module key: sanitized name plus 128-bit digest."""
    digestInput = desc.typeName + "\n" + "\n".join(desc.includes)
    digest = hashlib.md5(digestInput.encode("utf-8")).hexdigest()
    sanitized = "".join(c if c.isalnum() else "_" for c in desc.typeName)
    return f"{sanitized}_{digest}"


class RegisteredClass:
    """Handle stored per registered type name."""

    def __init__(self, descriptor: TypeDescriptor, factory):
        self.descriptor = descriptor
        self.factory = factory

    def __repr__(self):
        return f"RegisteredClass({self.descriptor.typeName!r})"


class Registry:
    """Insertion-ordered association from type names to factories."""

    def __init__(self):
        self._entries = {}
        self._named = {}

    def insertClass(self, desc: TypeDescriptor, factory):
        """Store once per type name; returns ``(handle, isNew)``."""
        existing = self._entries.get(desc.typeName)
        if existing is not None:
            return existing, False
        handle = RegisteredClass(desc, factory)
        self._entries[desc.typeName] = handle
        return handle, True

    def __iter__(self):
        return iter(self._entries.values())

    def __len__(self):
        return len(self._entries)

    def __contains__(self, typeName):
        return typeName in self._entries

    def registerFactory(self, name: str, builder):
        """Register a named builder: ``builder(params) -> (descriptor, object)``."""
        self._named[name] = builder

    @property
    def factoryNames(self):
        return tuple(self._named)

    def resolveFactory(self, name: str, params=None):
        """Construct via a named factory and tag the result with its descriptor."""
        builder = self._named.get(name)
        if builder is None:
            raise FactoryLookupError(
                f"no factory named {name!r}; registered: {sorted(self._named)}")
        desc, obj = builder(dict(params or {}))
        self.insertClass(desc, builder)
        try:
            obj._descriptor = desc
        except AttributeError:
            pass
        return obj


def describe(obj) -> TypeDescriptor | None:
    """Descriptor tag attached by ``resolveFactory``, if any."""
    return getattr(obj, "_descriptor", None)


def insertClass(reg: Registry, desc: TypeDescriptor, factory):
    return reg.insertClass(desc, factory)


def resolveFactory(reg: Registry, name: str, params=None):
    return reg.resolveFactory(name, params)


def _buildStructured(params):
    from .structured import cartesianDomain, structuredGrid
    domain = cartesianDomain(params["lower"], params["upper"], params["cells"])
    desc = generateTypeName("GridKit::StructuredGrid", domain.dimension)
    return desc, structuredGrid(domain)


def _buildConform(params):
    from .simplexgrid import SimplexGridData, conformGrid
    data = SimplexGridData.coerce(params)
    desc = generateTypeName("GridKit::ConformSimplexGrid", 2)
    return desc, conformGrid(data)


def _buildSimplex(params):
    from .simplexgrid import SimplexGridData, simplexGrid
    data = SimplexGridData.coerce(params)
    desc = generateTypeName("GridKit::QuarteringSimplexGrid", 2)
    return desc, simplexGrid(data)


defaultRegistry = Registry()
defaultRegistry.registerFactory("structuredGrid", _buildStructured)
defaultRegistry.registerFactory("conformGrid", _buildConform)
defaultRegistry.registerFactory("simplexGrid", _buildSimplex)
