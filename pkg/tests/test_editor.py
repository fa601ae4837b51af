import json

import pytest

from tortrust.beliefs import (Budget1, Budget2, CE1, CE2,
                              parse_belief_document)
from tortrust.editor import (apply_structural, children_matching,
                             edited_world_from_dict, edited_world_to_dict)
from tortrust.errors import EditError
from tortrust.predicates import parse_predicate
from tortrust.world import RelationshipInstance, TypeInstance, World

BASE = World(
    instances=(
        TypeInstance("as:1", "AS"),
        TypeInstance("as:2", "AS"),
        TypeInstance("relay:a", "Tor Relay"),
        TypeInstance("relay:b", "Tor Relay"),
        TypeInstance("vlink:as1-relay:a", "Virtual Link"),
        TypeInstance("vlink:as1-relay:b", "Virtual Link"),
    ),
    relationships=(
        RelationshipInstance("as:1", "vlink:as1-relay:a"),
        RelationshipInstance("as:1", "vlink:as1-relay:b"),
    ))


def _apply(ontology, *beliefs, scale=None):
    doc = parse_belief_document(json.dumps({
        "scale": {"mapping": {"SC": 0.999, "LC": 0.85, "U": 0.5,
                              "LT": 0.15, "ST": 0.02}},
        "structural": list(beliefs),
        "trust": []}))
    return apply_structural(BASE, ontology, doc)


def test_novel_type_and_instance(ontology):
    ew = _apply(ontology,
                ["ut", "Treaty", {"name": "string"}, None],
                ["inst", "Treaty", {"name": "pact"}, "treaty:t1"],
                ["rel", "treaty:t1", "relay:a"])
    assert ew.world.type_of("treaty:t1") == "Treaty"
    assert ew.world.attribute("treaty:t1", "name") == "pact"
    assert "relay:a" in ew.world.children("treaty:t1")
    # base world untouched
    assert "treaty:t1" not in BASE


def test_instance_of_unknown_type_rejected(ontology):
    with pytest.raises(EditError, match="unknown type"):
        _apply(ontology, ["inst", "Teleporter", {}, "t:1"])


def test_duplicate_instance_rejected(ontology):
    with pytest.raises(EditError, match="already"):
        _apply(ontology, ["inst", "AS", {}, "as:1"])


def test_remove_instance_cascades(ontology):
    ew = _apply(ontology, ["rminst", "vlink:as1-relay:a"])
    assert "vlink:as1-relay:a" not in ew.world
    assert ew.world.children("as:1") == ("vlink:as1-relay:b",)


def test_remove_unknown_instance_rejected(ontology):
    with pytest.raises(EditError):
        _apply(ontology, ["rminst", "ghost"])


def test_relationship_endpoints_must_exist(ontology):
    with pytest.raises(EditError):
        _apply(ontology, ["rel", "as:1", "ghost"])


def test_user_edge_outside_ontology_is_tracked(ontology):
    # AS -> Tor Relay has no ontology edge pair; the editor keeps it as a
    # user-supplied relationship instead of rejecting the world.
    ew = _apply(ontology, ["rel", "as:1", "relay:a"])
    assert ("as:1", "relay:a") in ew.user_edges
    assert "relay:a" in ew.world.children("as:1")


def test_cycle_rejected(ontology):
    with pytest.raises(EditError, match="cycle"):
        _apply(ontology,
               ["rel", "as:1", "as:2"],
               ["rel", "as:2", "as:1"])


def test_remove_relationship(ontology):
    ew = _apply(ontology, ["rmrel", "as:1", "vlink:as1-relay:a"])
    assert ew.world.children("as:1") == ("vlink:as1-relay:b",)


def test_set_attribute(ontology):
    ew = _apply(ontology, ["attr", "relay:a", "Relay Software", "linux"])
    assert ew.world.attribute("relay:a", "Relay Software") == "linux"


def test_set_attribute_type_checked(ontology):
    # final validation gate catches values that clash with the ontology
    with pytest.raises(EditError):
        _apply(ontology, ["attr", "relay:a", "Relay Software", 5])


def _trust_doc(*beliefs):
    return parse_belief_document(json.dumps({
        "scale": {"mapping": {"SC": 0.999, "LC": 0.85, "U": 0.5,
                              "LT": 0.15, "ST": 0.02}},
        "structural": [], "trust": list(beliefs)}))


def test_budget_attaches(ontology):
    doc = _trust_doc(["bu1", "as:1", "VirtualLink", 4],
                     ["bu2", "as:2", "all", 1])
    ew = apply_structural(BASE, ontology, doc)
    assert ew.budgets["as:1"] == (Budget1("as:1", "VirtualLink", 4),)
    assert ew.budgets["as:2"] == (Budget2("as:2", 1),)


def test_budget_on_unknown_instance_rejected(ontology):
    with pytest.raises(EditError):
        apply_structural(BASE, ontology,
                         _trust_doc(["bu1", "ghost", "VirtualLink", 2]))


def test_ce_attaches(ontology):
    doc = _trust_doc(["ce1", "as:1", 'id in {"vlink:as1-relay:a"}', "LC"])
    ew = apply_structural(BASE, ontology, doc)
    (spec,) = ew.ce_specs["as:1"]
    assert isinstance(spec, CE1)
    assert spec.v == "LC"


def test_overlapping_ce_predicates_rejected(ontology):
    doc = _trust_doc(
        ["ce1", "as:1", 'id in {"vlink:as1-relay:a"}', "LC"],
        ["ce1", "as:1", "is VirtualLink", "U"])
    with pytest.raises(EditError, match="overlap"):
        apply_structural(BASE, ontology, doc)


def test_ce2_supersedes_ce1(ontology, caplog):
    doc = _trust_doc(
        ["ce1", "as:1", 'id in {"vlink:as1-relay:a"}', "LC"],
        ["ce2", "as:1", "top", "U"])
    with caplog.at_level("WARNING"):
        ew = apply_structural(BASE, ontology, doc)
    assert ew.ce_specs["as:1"] == (CE2("as:1", "U"),)
    assert "ce" in caplog.text.lower()


def test_two_ce2_rejected(ontology):
    doc = _trust_doc(["ce2", "as:1", "top", "U"],
                     ["ce2", "as:1", "top", "LC"])
    with pytest.raises(EditError):
        apply_structural(BASE, ontology, doc)


def test_budget_ce_overlap_rejected(ontology):
    doc = _trust_doc(["bu1", "as:1", "VirtualLink", 2],
                     ["ce2", "as:1", "top", "U"])
    with pytest.raises(EditError, match="overlap"):
        apply_structural(BASE, ontology, doc)


def test_children_matching(ontology):
    ew = _apply(ontology)
    pred = parse_predicate('id in {"vlink:as1-relay:b"}')
    assert children_matching(ew, "as:1", pred) == ("vlink:as1-relay:b",)


def test_edited_world_roundtrip(ontology):
    doc = _trust_doc(["bu1", "as:1", "VirtualLink", 4],
                     ["ce1", "as:2", "is VirtualLink", "LC"])
    ew = apply_structural(BASE, ontology, doc)
    again = edited_world_from_dict(edited_world_to_dict(ew))
    assert again.world == ew.world
    assert again.budgets == ew.budgets
    assert again.ce_specs == ew.ce_specs
    assert again.user_edges == ew.user_edges
