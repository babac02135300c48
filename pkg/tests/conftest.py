"""Shared fixtures: small APIs exercising every corner of the pipeline."""

import pytest

from typesmith.graph import build_graph
from typesmith.ingest import RawApiDocument, load_api

# The collections example: a static factory, two generic classes with
# constructors carrying their own type parameters, and boolean results.
COLLECTIONS_DOC = {
    "library": "collections",
    "classes": [
        {
            "name": "Utils",
            "methods": [
                {
                    "name": "createList",
                    "type_parameters": ["X"],
                    "parameters": [],
                    "return_type": "List<X>",
                    "static": True,
                }
            ],
        },
        {
            "name": "List",
            "type_parameters": ["T"],
            "methods": [
                {
                    "constructor": True,
                    "type_parameters": ["K"],
                    "parameters": ["int"],
                },
                {"name": "add", "parameters": ["T"], "return_type": "boolean"},
                {"name": "toSet", "parameters": [], "return_type": "Set<T>"},
            ],
        },
        {
            "name": "Set",
            "type_parameters": ["E"],
            "methods": [
                {
                    "constructor": True,
                    "type_parameters": ["V"],
                    "parameters": ["int"],
                },
                {"name": "add", "parameters": ["E"], "return_type": "boolean"},
                {"name": "toList", "parameters": [], "return_type": "List<E>"},
            ],
        },
    ],
}

# Two factories into Map, one monomorphic and one polymorphic, and a
# keySet hop into Set: the polymorphism worked example.
MAPS_DOC = {
    "library": "maps",
    "classes": [
        {
            "name": "Utils",
            "methods": [
                {
                    "name": "mapOf",
                    "type_parameters": ["X", "Y"],
                    "parameters": [],
                    "return_type": "Map<X, Y>",
                    "static": True,
                },
                {
                    "name": "mapOfStrs",
                    "parameters": [],
                    "return_type": "Map<String, String>",
                    "static": True,
                },
            ],
        },
        {
            "name": "Map",
            "type_parameters": ["K", "V"],
            "methods": [
                {"name": "keySet", "parameters": [], "return_type": "Set<K>"}
            ],
        },
        {"name": "Set", "type_parameters": ["E"]},
        {"name": "String"},
        {"name": "Int"},
    ],
}

# One method on a two-class hierarchy: the enumeration worked example.
AB_DOC = {
    "library": "ab",
    "classes": [
        {
            "name": "A",
            "methods": [
                {"name": "m", "parameters": ["B"], "return_type": "B"}
            ],
        },
        {"name": "B", "supertypes": ["A"]},
    ],
}

# Two polymorphic free-standing statics: the erasure worked example.
ERASURE_DOC = {
    "library": "erasure-demo",
    "classes": [
        {"name": "Object"},
        {"name": "String", "supertypes": ["Object"]},
        {"name": "Unit"},
        {
            "name": "Fns",
            "methods": [
                {
                    "name": "m1",
                    "type_parameters": ["T"],
                    "parameters": ["T"],
                    "return_type": "Unit",
                    "static": True,
                },
                {
                    "name": "m2",
                    "type_parameters": ["X", "Y"],
                    "parameters": ["X"],
                    "return_type": "Y",
                    "static": True,
                },
            ],
        },
    ],
}


def spec_of(doc):
    return load_api([RawApiDocument.from_data(doc)])


@pytest.fixture(scope="session")
def collections_spec():
    return spec_of(COLLECTIONS_DOC)


@pytest.fixture(scope="session")
def collections_graph(collections_spec):
    return build_graph(collections_spec)


@pytest.fixture(scope="session")
def maps_spec():
    return spec_of(MAPS_DOC)


@pytest.fixture(scope="session")
def maps_graph(maps_spec):
    return build_graph(maps_spec)


@pytest.fixture(scope="session")
def ab_spec():
    return spec_of(AB_DOC)


@pytest.fixture(scope="session")
def ab_graph(ab_spec):
    return build_graph(ab_spec)


@pytest.fixture(scope="session")
def erasure_spec():
    return spec_of(ERASURE_DOC)


@pytest.fixture(scope="session")
def erasure_graph(erasure_spec):
    return build_graph(erasure_spec)


def def_named(spec, name, owner=None):
    """The unique definition with this name (and owner class name)."""
    found = [
        d
        for d in spec.all_defs()
        if d.name == name and (owner is None or (d.owner and d.owner.name == owner))
    ]
    assert len(found) == 1, f"{name}: {found}"
    return found[0]
