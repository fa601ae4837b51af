import os

import pytest

from tortrust.beliefs import build_the_man
from tortrust.bbn import compile_bbn
from tortrust.editor import EditedWorld, apply_structural
from tortrust.ontology import default_ontology
from tortrust.synth import SynthParams, generate_synthetic
from tortrust.world import RelationshipInstance, TypeInstance, World
from tortrust.worldgen import build_world

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def ontology():
    return default_ontology()


@pytest.fixture(scope="session")
def small_bundle():
    params = SynthParams(n_as=12, n_ixp=2, n_relays=10,
                         family_sizes=(2, 2), as_org_sizes=(3,),
                         ixp_org_sizes=(2,), n_epochs=8)
    return generate_synthetic(params, seed=42)


@pytest.fixture(scope="session")
def small_world(ontology, small_bundle):
    return build_world(ontology, small_bundle)


@pytest.fixture(scope="session")
def the_man_doc(small_world):
    return build_the_man(small_world)


@pytest.fixture(scope="session")
def small_bbn(small_world, ontology, the_man_doc):
    ew = apply_structural(small_world, ontology, the_man_doc)
    return compile_bbn(ew, the_man_doc.trust, the_man_doc.scale)


@pytest.fixture
def make_edited(ontology):
    """Factory for tiny hand-built edited worlds.

    nodes: {id: type_name} or {id: (type_name, attrs)}; edges: (parent, child)
    pairs.  Skips the editor so tests can wire structures directly.
    """
    def make(nodes, edges=(), budgets=None, ce_specs=None):
        instances = []
        for node_id, value in nodes.items():
            if isinstance(value, tuple):
                type_name, attrs = value
            else:
                type_name, attrs = value, {}
            instances.append(TypeInstance(node_id, type_name, dict(attrs)))
        rels = tuple(RelationshipInstance(p, c) for p, c in edges)
        world = World(tuple(instances), rels)
        return EditedWorld(world=world, ontology=ontology,
                           budgets=budgets or {}, ce_specs=ce_specs or {},
                           user_edges=frozenset(edges))
    return make


@pytest.fixture
def example_doc_text():
    with open(os.path.join(FIXTURES, "example_beliefs.json"),
              encoding="utf-8") as fh:
        return fh.read()
