"""Applies a belief document's structural part to a world.

The construction sequence is strictly ordered: novel types, instance
adds/removes, relationship adds/removes, attribute edits, budget
attachment, CE attachment.  Later steps see earlier edits.  The output is
an EditedWorld: the new world graph plus per-node budget and CE
attachments and the augmented ontology.
"""

import json
import logging
from dataclasses import dataclass, field

from .beliefs import (AddInstance, AddRelationship, Budget1, Budget2, CE1,
                      CE2, NovelType, RemoveInstance, RemoveRelationship,
                      SetAttribute)
from .errors import EditError, OntologyError
from .ontology import (AttributeDef, TypeDef, USER, extend_ontology,
                       normalize_type_name)
from .predicates import eval_predicate
from .world import RelationshipInstance, TypeInstance, World, validate_world

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EditedWorld:
    world: World
    ontology: object
    budgets: dict = field(default_factory=dict)    # NodeId -> tuple of beliefs
    ce_specs: dict = field(default_factory=dict)   # NodeId -> tuple of beliefs
    user_edges: frozenset = frozenset()            # (parent, child) pairs


def children_matching(ew, node_id, pred):
    """Children of node_id satisfying pred, ordered by id."""
    return tuple(c for c in ew.world.children(node_id)
                 if eval_predicate(pred, ew.world, c, ctx="trust"))


def apply_structural(world, ontology, doc):
    """Run the construction sequence; raises EditError on any violation."""
    new_types = [b for b in doc.structural if isinstance(b, NovelType)]
    ontology = _augment_types(ontology, new_types)

    instances = {i.id: i for i in world.instances}
    edges = {(r.parent, r.child): r for r in world.relationships}
    children = {i.id: set() for i in world.instances}
    parents = {i.id: set() for i in world.instances}
    for p, c in edges:
        children[p].add(c)
        parents[c].add(p)
    user_edges = set()

    for belief in doc.structural:
        if isinstance(belief, NovelType):
            continue
        if isinstance(belief, AddInstance):
            _add_instance(belief, ontology, instances, children, parents)
        elif isinstance(belief, RemoveInstance):
            _remove_instance(belief, instances, edges, children, parents,
                             user_edges)
        elif isinstance(belief, AddRelationship):
            _add_relationship(belief, ontology, instances, edges, children,
                              parents, user_edges)
        elif isinstance(belief, RemoveRelationship):
            _remove_relationship(belief, edges, children, parents, user_edges)
        elif isinstance(belief, SetAttribute):
            _set_attribute(belief, instances)
        else:
            raise EditError(f"unknown structural belief {belief!r}")

    edited = World(instances=tuple(instances.values()),
                   relationships=tuple(edges.values()))

    budgets = _attach_budgets(doc.trust, edited)
    ce_specs = _attach_ce(doc.trust, edited)
    _check_budget_ce_overlap(edited, budgets, ce_specs)

    report = validate_world(edited, ontology, allowed_edges=user_edges)
    if not report.ok:
        raise EditError("edited world is invalid:\n" + report.summary())
    return EditedWorld(world=edited, ontology=ontology, budgets=budgets,
                       ce_specs=ce_specs, user_edges=frozenset(user_edges))


def _augment_types(ontology, novel_types):
    if not novel_types:
        return ontology
    type_defs = []
    for nt in novel_types:
        attrs = tuple(AttributeDef(name, dtype, USER, "required")
                      for name, dtype in nt.struct_req)
        attrs += tuple(AttributeDef(name, dtype, USER, "optional")
                       for name, dtype in nt.struct_opt)
        type_defs.append(TypeDef(name=nt.tname, label=USER, attributes=attrs))
    try:
        return extend_ontology(ontology, type_defs, ())
    except OntologyError as exc:
        raise EditError(str(exc)) from exc


def _add_instance(belief, ontology, instances, children, parents):
    if belief.id in instances:
        raise EditError(f"instance id {belief.id!r} already exists")
    resolved = belief.type_name if ontology.has_type(belief.type_name) \
        else ontology.resolve_type_name(belief.type_name)
    if resolved is None:
        raise EditError(f"instance {belief.id!r} has unknown type "
                        f"{belief.type_name!r}")
    instances[belief.id] = TypeInstance(belief.id, resolved,
                                        dict(belief.data))
    children[belief.id] = set()
    parents[belief.id] = set()


def _remove_instance(belief, instances, edges, children, parents, user_edges):
    if belief.id not in instances:
        raise EditError(f"cannot remove unknown instance {belief.id!r}")
    del instances[belief.id]
    incident = [key for key in edges if belief.id in key]
    for key in incident:
        del edges[key]
        user_edges.discard(key)
    for c in children.pop(belief.id):
        parents[c].discard(belief.id)
    for p in parents.pop(belief.id):
        children[p].discard(belief.id)


def _reachable(start, goal, children):
    stack = [start]
    seen = {start}
    while stack:
        cur = stack.pop()
        if cur == goal:
            return True
        for nxt in children[cur]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def _add_relationship(belief, ontology, instances, edges, children, parents,
                      user_edges):
    p, c = belief.parent, belief.child
    for node in (p, c):
        if node not in instances:
            raise EditError(f"relationship references unknown instance {node!r}")
    if p == c or _reachable(c, p, children):
        raise EditError(f"relationship ({p!r}, {c!r}) would create a cycle")
    if (p, c) in edges:
        return
    edges[(p, c)] = RelationshipInstance(p, c)
    children[p].add(c)
    parents[c].add(p)
    ptype = instances[p].type_name
    ctype = instances[c].type_name
    if not ontology.has_edge(ptype, ctype):
        # No declared ontology edge: keep it, with default propagation
        # semantics, and exempt it from world validation.
        user_edges.add((p, c))


def _remove_relationship(belief, edges, children, parents, user_edges):
    key = (belief.parent, belief.child)
    if key not in edges:
        raise EditError(f"cannot remove unknown relationship {key!r}")
    del edges[key]
    user_edges.discard(key)
    children[belief.parent].discard(belief.child)
    parents[belief.child].discard(belief.parent)


def _set_attribute(belief, instances):
    if belief.id not in instances:
        raise EditError(f"cannot set attribute on unknown instance {belief.id!r}")
    inst = instances[belief.id]
    attrs = dict(inst.attributes)
    attrs[belief.name] = belief.value
    instances[belief.id] = TypeInstance(inst.id, inst.type_name, attrs)


def _attach_budgets(trust, world):
    budgets = {}
    for belief in trust:
        if not isinstance(belief, (Budget1, Budget2)):
            continue
        if belief.instance not in world.by_id:
            raise EditError(f"budget targets unknown instance "
                            f"{belief.instance!r}")
        if belief.k < 0:
            raise EditError(f"budget on {belief.instance!r} has negative k")
        budgets.setdefault(belief.instance, []).append(belief)
    return {n: tuple(v) for n, v in budgets.items()}


def _attach_ce(trust, world):
    ce_specs = {}
    for belief in trust:
        if not isinstance(belief, (CE1, CE2)):
            continue
        if belief.instance not in world.by_id:
            raise EditError(f"CE belief targets unknown instance "
                            f"{belief.instance!r}")
        ce_specs.setdefault(belief.instance, []).append(belief)
    out = {}
    for node, specs in ce_specs.items():
        tops = [s for s in specs if isinstance(s, CE2)]
        if len(tops) > 1:
            raise EditError(f"multiple top CE beliefs on {node!r}")
        if tops:
            if len(specs) > 1:
                log.warning("top CE belief on %s suppresses %d other CE "
                            "beliefs", node, len(specs) - 1)
            out[node] = (tops[0],)
            continue
        _check_ce_disjoint(world, node, specs)
        out[node] = tuple(specs)
    return out


def _check_ce_disjoint(world, node, specs):
    for child in world.children(node):
        hits = [s for s in specs
                if eval_predicate(s.pred, world, child, ctx="trust")]
        if len(hits) > 1:
            raise EditError(
                f"CE predicates on {node!r} overlap at child {child!r}")


def _budget_scope(world, node, budget):
    if isinstance(budget, Budget2):
        return set(world.children(node))
    matches = set()
    for child in world.children(node):
        ctype = world.type_of(child)
        if budget.type_name == ctype \
                or budget.type_name == normalize_type_name(ctype):
            matches.add(child)
    return matches


def _ce_scope(world, node, spec):
    if isinstance(spec, CE2):
        return set(world.children(node))
    return {c for c in world.children(node)
            if eval_predicate(spec.pred, world, c, ctx="trust")}


def _check_budget_ce_overlap(world, budgets, ce_specs):
    for node in sorted(set(budgets) & set(ce_specs)):
        covered_by_budget = set()
        for b in budgets[node]:
            covered_by_budget |= _budget_scope(world, node, b)
        for spec in ce_specs[node]:
            overlap = covered_by_budget & _ce_scope(world, node, spec)
            if overlap:
                raise EditError(
                    f"budget and CE beliefs on {node!r} overlap at children "
                    f"{sorted(overlap)[:3]}")


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def edited_world_to_dict(ew):
    from .beliefs import _trust_to_json
    from .ontology import ontology_to_dict
    from .world import world_to_dict
    payload = world_to_dict(ew.world)
    payload["ontology"] = ontology_to_dict(ew.ontology)
    payload["budgets"] = [_trust_to_json(b)
                          for n in sorted(ew.budgets)
                          for b in ew.budgets[n]]
    payload["ce_specs"] = [_trust_to_json(b)
                           for n in sorted(ew.ce_specs)
                           for b in ew.ce_specs[n]]
    payload["user_relationships"] = sorted(list(e) for e in ew.user_edges)
    return payload


def edited_world_from_dict(data):
    from .beliefs import _parse_trust, default_scale
    from .ontology import ontology_from_dict
    from .world import world_from_dict
    world = world_from_dict(data)
    ontology = ontology_from_dict(data["ontology"])
    scale = default_scale()
    budgets = {}
    for i, entry in enumerate(data.get("budgets", [])):
        belief = _parse_trust(entry, f"budgets[{i}]", scale)
        budgets.setdefault(belief.instance, []).append(belief)
    ce_specs = {}
    for i, entry in enumerate(data.get("ce_specs", [])):
        belief = _parse_trust(entry, f"ce_specs[{i}]", scale)
        ce_specs.setdefault(belief.instance, []).append(belief)
    user_edges = frozenset(tuple(e) for e in data.get("user_relationships", []))
    return EditedWorld(world=world, ontology=ontology,
                       budgets={n: tuple(v) for n, v in budgets.items()},
                       ce_specs={n: tuple(v) for n, v in ce_specs.items()},
                       user_edges=user_edges)


def save_edited_world(ew, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(edited_world_to_dict(ew), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_edited_world(path):
    with open(path, encoding="utf-8") as fh:
        return edited_world_from_dict(json.load(fh))
