"""Translation of an edited world plus trust beliefs into a BBN of binary
compromise indicators, with sampling, estimation, and an exact oracle.

Node distributions are never tabulated.  Each node carries edge weights,
a risk multiset and an optional absolute probability; conditioned on its
parents' indicators X_j the node is compromised with probability

    1 - prod_{j: X_j=1} (1 - w_j) * prod_{q in risks} (1 - q)

which the noisy-OR structure keeps linear in the parent count.  CE beliefs
become synthetic "ce" nodes: Bernoulli(activation) when their single parent
is compromised, propagating with weight 1 to all covered children.
Absolute beliefs sever a node from its parents.

Sampling uses one independent substream per node index, so estimating a
subset of nodes draws exactly the same values as estimating all of them,
and reruns with one seed are byte-identical.
"""

import heapq
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .beliefs import (Absolute, Budget1, Budget2, CE1, CE2, Relative,
                      default_scale)
from .errors import CompileError, NetworkTooLargeError
from .ontology import normalize_type_name
from .predicates import And, Const, IdIn, IsType, Not, Or, eval_predicate

EXACT_NODE_CAP = 24

SAMPLE_MAGIC = b"TBBN"
SAMPLE_VERSION = 1


def compromise_probability(S, R):
    """1 - prod_{p in S}(1-p) * prod_{q in R}(1-q); empty products are 1."""
    keep = 1.0
    for p in S:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"propagation value {p!r} outside [0,1]")
        keep *= 1.0 - p
    for q in R:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"risk value {q!r} outside [0,1]")
        keep *= 1.0 - q
    return 1.0 - keep


@dataclass(frozen=True)
class BbnNode:
    id: str
    kind: str                 # "world" or "ce"
    parents: tuple = ()       # ((parent index, weight), ...)
    risks: tuple = ()
    absolute: object = None
    is_output: bool = False


@dataclass(frozen=True)
class CompiledBbn:
    nodes: tuple

    @cached_property
    def index(self):
        return {node.id: i for i, node in enumerate(self.nodes)}

    @cached_property
    def output_index(self):
        return {node.id: i for i, node in enumerate(self.nodes)
                if node.is_output}

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True, eq=False)
class SampleResult:
    compromised: np.ndarray
    seed: int


@dataclass(frozen=True)
class MarginalEstimate:
    node: str
    estimate: float
    n_samples: int


# --- Compilation -------------------------------------------------------------

def matching_nodes(world, pred):
    """World node ids satisfying pred, sorted. Fast paths for the two
    predicate shapes adversary documents are made of."""
    root = pred.root
    if isinstance(root, IdIn):
        return tuple(i for i in sorted(root.ids) if i in world.by_id)
    if isinstance(root, IsType):
        out = []
        for tname in sorted(world.ids_by_type):
            if root.name == tname or root.name == normalize_type_name(tname):
                out.extend(world.ids_by_type[tname])
        return tuple(sorted(out))
    return tuple(inst.id for inst in world.instances
                 if eval_predicate(pred, world, inst.id, ctx="trust"))


def _merge_attachments(ew, trust):
    budgets = {n: list(v) for n, v in ew.budgets.items()}
    ce_specs = {n: list(v) for n, v in ew.ce_specs.items()}
    relatives = []
    absolutes = []
    for belief in trust:
        if isinstance(belief, Relative):
            relatives.append(belief)
        elif isinstance(belief, Absolute):
            absolutes.append(belief)
        elif isinstance(belief, (Budget1, Budget2)):
            if belief.instance not in ew.world.by_id:
                raise CompileError(
                    f"budget targets unknown instance {belief.instance!r}")
            entries = budgets.setdefault(belief.instance, [])
            if belief not in entries:
                entries.append(belief)
        elif isinstance(belief, (CE1, CE2)):
            if belief.instance not in ew.world.by_id:
                raise CompileError(
                    f"CE belief targets unknown instance {belief.instance!r}")
            entries = ce_specs.setdefault(belief.instance, [])
            if belief not in entries:
                entries.append(belief)
        else:
            raise CompileError(f"unknown trust belief {belief!r}")
    # Mirror the editor's rule: one top CE per node silences the others.
    for node, entries in ce_specs.items():
        tops = [s for s in entries if isinstance(s, CE2)]
        if len(tops) > 1:
            raise CompileError(f"multiple top CE beliefs on {node!r}")
        if tops and len(entries) > 1:
            ce_specs[node] = [tops[0]]
    return budgets, ce_specs, relatives, absolutes


def compile_bbn(ew, trust=(), scale=None):
    """Translate EditedWorld + trust beliefs into a CompiledBbn.

    Budget and CE beliefs may arrive attached to `ew`, in `trust`, or both
    (value-equal duplicates collapse), so a belief document can be applied
    in one step or two.
    """
    if scale is None:
        scale = default_scale()
    world = ew.world
    budgets, ce_specs, relatives, absolutes = _merge_attachments(ew, trust)

    # Edge map: child id -> {parent id: weight}; world edges default to 1.
    in_edges = {inst.id: {} for inst in world.instances}
    for rel in world.relationships:
        in_edges[rel.child][rel.parent] = 1.0

    # CE nodes reroute covered children through a synthetic activation node.
    ce_nodes = []              # (ce id, parent id, activation, children)
    for parent in sorted(ce_specs):
        specs = ce_specs[parent]
        claimed = {}
        for i, spec in enumerate(specs):
            if isinstance(spec, CE2):
                covered = list(world.children(parent))
            else:
                covered = [c for c in world.children(parent)
                           if eval_predicate(spec.pred, world, c, ctx="trust")]
            for child in covered:
                if child in claimed:
                    raise CompileError(
                        f"CE beliefs on {parent!r} overlap at child {child!r}")
                claimed[child] = True
            if not covered:
                continue
            ce_id = f"ce:{parent}#{i}"
            activation = scale.ce_prob(spec.v)
            ce_nodes.append((ce_id, parent, activation, covered))
            for child in covered:
                del in_edges[child][parent]
                in_edges[child][ce_id] = 1.0

    # Budgets scale the parent's outgoing edge weights by min(1, k/c), where
    # c counts the children in scope in the edited world.  An "all" budget
    # silences every other budget on the node; the last one wins.
    for parent in sorted(budgets):
        entries = budgets[parent]
        all_budgets = [b for b in entries if isinstance(b, Budget2)]
        if all_budgets:
            entries = [all_budgets[-1]]
        for budget in entries:
            if isinstance(budget, Budget2):
                scope = list(world.children(parent))
            else:
                scope = [c for c in world.children(parent)
                         if world.type_of(c) == budget.type_name
                         or normalize_type_name(world.type_of(c))
                         == budget.type_name]
            if not scope:
                continue
            factor = min(1.0, budget.k / len(scope))
            for child in scope:
                if parent not in in_edges[child]:
                    raise CompileError(
                        f"budget and CE beliefs on {parent!r} overlap at "
                        f"child {child!r}")
                in_edges[child][parent] *= factor

    risks = {inst.id: [] for inst in world.instances}
    for belief in relatives:
        p = scale.prob(belief.v)
        for node in matching_nodes(world, belief.pred):
            risks[node].append(p)

    absolute = {}
    for belief in absolutes:
        p = scale.prob(belief.v)
        for node in matching_nodes(world, belief.pred):
            absolute[node] = p
    for node in absolute:
        in_edges[node] = {}
        risks[node] = []

    # Deterministic topological order: Kahn's algorithm, min-heap on id.
    all_ids = sorted(in_edges) + [ce_id for ce_id, _, _, _ in ce_nodes]
    ce_children = {ce_id: (parent, activation, children)
                   for ce_id, parent, activation, children in ce_nodes}
    out_edges = {nid: [] for nid in all_ids}
    indegree = {nid: 0 for nid in all_ids}
    for child, parent_map in in_edges.items():
        for parent in parent_map:
            out_edges[parent].append(child)
            indegree[child] += 1
    for ce_id, (parent, _, _) in ce_children.items():
        out_edges[parent].append(ce_id)
        indegree[ce_id] += 1

    heap = [nid for nid, deg in indegree.items() if deg == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        nid = heapq.heappop(heap)
        order.append(nid)
        for child in sorted(out_edges[nid]):
            indegree[child] -= 1
            if indegree[child] == 0:
                heapq.heappush(heap, child)
    if len(order) != len(all_ids):
        raise CompileError("translated network is cyclic")

    position = {nid: i for i, nid in enumerate(order)}
    outputs = ew.ontology.output_types
    nodes = []
    for nid in order:
        if nid in ce_children:
            parent, activation, _ = ce_children[nid]
            nodes.append(BbnNode(id=nid, kind="ce",
                                 parents=((position[parent], activation),),
                                 risks=(), absolute=None, is_output=False))
            continue
        parent_items = sorted(in_edges[nid].items())
        nodes.append(BbnNode(
            id=nid, kind="world",
            parents=tuple((position[p], w) for p, w in parent_items),
            risks=tuple(risks[nid]),
            absolute=absolute.get(nid),
            is_output=world.type_of(nid) in outputs))
    return CompiledBbn(nodes=tuple(nodes))


# --- Sampling ----------------------------------------------------------------

class Sampler:
    """Lazy column-wise sampler over a compiled network.

    Materializes one boolean column of `n` draws per node, computing only
    the ancestor closure of whatever is requested.  Columns depend only on
    (seed, node position), never on the request pattern.
    """

    def __init__(self, bbn, n, seed):
        if n < 1:
            raise ValueError("need at least one sample")
        self.bbn = bbn
        self.n = int(n)
        self.seed = int(seed)
        self._cols = {}

    def column(self, node_id):
        try:
            idx = self.bbn.index[node_id]
        except KeyError:
            raise KeyError(f"unknown node {node_id!r}") from None
        return self._column(idx)

    def _column(self, idx):
        col = self._cols.get(idx)
        if col is not None:
            return col
        needed = set()
        stack = [idx]
        while stack:
            k = stack.pop()
            if k in needed or k in self._cols:
                continue
            needed.add(k)
            for j, _ in self.bbn.nodes[k].parents:
                stack.append(j)
        # Node positions are already topologically sorted.
        for k in sorted(needed):
            self._cols[k] = self._compute(k)
        return self._cols[idx]

    def _uniforms(self, idx):
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, idx]))
        return rng.random(self.n)

    def _compute(self, idx):
        node = self.bbn.nodes[idx]
        u = self._uniforms(idx)
        if node.absolute is not None:
            return u < node.absolute
        if node.kind == "ce":
            (j, activation), = node.parents
            return self._cols[j] & (u < activation)
        keep_static = 1.0
        for q in node.risks:
            keep_static *= 1.0 - q
        certain = None
        keep = None
        for j, w in node.parents:
            parent_col = self._cols[j]
            if w >= 1.0:
                certain = parent_col if certain is None \
                    else certain | parent_col
            elif w > 0.0:
                factor = np.where(parent_col, 1.0 - w, 1.0)
                keep = factor if keep is None else keep * factor
        if keep is None:
            col = u < (1.0 - keep_static)
        else:
            col = u < (1.0 - keep * keep_static)
        if certain is not None:
            col = col | certain
        return col


def sample(bbn, seed):
    """One joint draw over every node."""
    sampler = Sampler(bbn, 1, seed)
    bits = np.zeros(len(bbn.nodes), dtype=bool)
    for i in range(len(bbn.nodes)):
        bits[i] = sampler._column(i)[0]
    return SampleResult(compromised=bits, seed=int(seed))


def sample_matrix(bbn, n, seed, nodes=None):
    """(n, len(nodes)) boolean matrix of joint draws."""
    sampler = Sampler(bbn, n, seed)
    ids = [node.id for node in bbn.nodes] if nodes is None else list(nodes)
    out = np.zeros((n, len(ids)), dtype=bool)
    for k, nid in enumerate(ids):
        out[:, k] = sampler.column(nid)
    return out


def estimate_marginals(bbn, nodes=None, n=100_000, seed=0):
    sampler = Sampler(bbn, n, seed)
    ids = [node.id for node in bbn.nodes] if nodes is None else list(nodes)
    return [MarginalEstimate(node=nid,
                             estimate=float(sampler.column(nid).mean()),
                             n_samples=n)
            for nid in ids]


# --- Event expressions -------------------------------------------------------

_EVENT_PUNCT = {"(": "(", ")": ")"}
_EVENT_KEYWORDS = {"and", "or", "not"}


def _event_tokens(text):
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _EVENT_PUNCT:
            tokens.append((ch, ch))
            pos += 1
            continue
        if ch == '"':
            end = text.find('"', pos + 1)
            if end < 0:
                raise ValueError("unterminated quoted node id in event")
            tokens.append(("atom", text[pos + 1:end]))
            pos = end + 1
            continue
        end = pos
        while end < len(text) and not text[end].isspace() \
                and text[end] not in "()":
            end += 1
        word = text[pos:end]
        if word in _EVENT_KEYWORDS:
            tokens.append((word, word))
        else:
            tokens.append(("atom", word))
        pos = end
    tokens.append(("eof", None))
    return tokens


@dataclass(frozen=True)
class _EventAtom:
    node_id: str


class _EventParser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos][0]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self):
        node = self.parse_or()
        if self.peek() != "eof":
            raise ValueError(f"trailing input in event expression: "
                             f"{self.tokens[self.pos][1]!r}")
        return node

    def parse_or(self):
        items = [self.parse_and()]
        while self.peek() == "or":
            self.take()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self):
        items = [self.parse_unary()]
        while self.peek() == "and":
            self.take()
            items.append(self.parse_unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary(self):
        if self.peek() == "not":
            self.take()
            return Not(self.parse_unary())
        if self.peek() == "(":
            self.take()
            node = self.parse_or()
            if self.peek() != ")":
                raise ValueError("missing ) in event expression")
            self.take()
            return node
        kind, value = self.take()
        if kind != "atom" or not value:
            raise ValueError("expected a node id in event expression")
        return _EventAtom(value)


def parse_event(text):
    if not text or not text.strip():
        raise ValueError("empty event expression")
    return _EventParser(_event_tokens(text)).parse()


def _event_column(node, sampler):
    if isinstance(node, _EventAtom):
        return sampler.column(node.node_id)
    if isinstance(node, Not):
        return ~_event_column(node.inner, sampler)
    if isinstance(node, And):
        col = _event_column(node.items[0], sampler)
        for item in node.items[1:]:
            col = col & _event_column(item, sampler)
        return col
    if isinstance(node, Or):
        col = _event_column(node.items[0], sampler)
        for item in node.items[1:]:
            col = col | _event_column(item, sampler)
        return col
    if isinstance(node, Const):
        return np.full(sampler.n, node.value, dtype=bool)
    raise TypeError(f"unknown event node {node!r}")


def estimate_event(bbn, event, n=100_000, seed=0):
    """Monte Carlo estimate of a boolean event over node indicators.

    `event` is an expression string (and/or/not/parentheses over node ids)
    or a pre-parsed tree."""
    tree = parse_event(event) if isinstance(event, str) else event
    sampler = Sampler(bbn, n, seed)
    return float(_event_column(tree, sampler).mean())


# --- Exact enumeration -------------------------------------------------------

def _joint_vector(bbn, cap):
    m = len(bbn.nodes)
    if m > cap:
        raise NetworkTooLargeError(
            f"{m} nodes exceeds the exact-enumeration cap of {cap}")
    n_states = 1 << m
    states = np.arange(n_states, dtype=np.uint32)

    def bit(i):
        return ((states >> np.uint32(i)) & np.uint32(1)).astype(bool)

    prob = np.ones(n_states)
    for i, node in enumerate(bbn.nodes):
        on = bit(i)
        if node.absolute is not None:
            p_i = np.where(on, node.absolute, 1.0 - node.absolute)
            prob *= p_i
            continue
        if node.kind == "ce":
            (j, activation), = node.parents
            p_on = np.where(bit(j), activation, 0.0)
        else:
            keep = np.ones(n_states)
            for q in node.risks:
                keep *= 1.0 - q
            for j, w in node.parents:
                keep = keep * np.where(bit(j), 1.0 - w, 1.0)
            p_on = 1.0 - keep
        prob *= np.where(on, p_on, 1.0 - p_on)
    return prob


def enumerate_exact(bbn, cap=EXACT_NODE_CAP):
    """Joint distribution as {state bitmask: probability}, zero states
    omitted; bit i of the mask is node i in topological order."""
    prob = _joint_vector(bbn, cap)
    nonzero = np.flatnonzero(prob)
    return {int(s): float(prob[s]) for s in nonzero}


def exact_marginals(bbn, cap=EXACT_NODE_CAP):
    """Exact marginal per node id, by full enumeration."""
    prob = _joint_vector(bbn, cap)
    states = np.arange(prob.size, dtype=np.uint32)
    out = {}
    for i, node in enumerate(bbn.nodes):
        mask = ((states >> np.uint32(i)) & np.uint32(1)).astype(bool)
        out[node.id] = float(prob[mask].sum())
    return out


def exact_event(bbn, event, cap=EXACT_NODE_CAP):
    """Exact probability of an event expression, by full enumeration."""
    tree = parse_event(event) if isinstance(event, str) else event
    prob = _joint_vector(bbn, cap)
    states = np.arange(prob.size, dtype=np.uint32)

    def column(node):
        if isinstance(node, _EventAtom):
            try:
                i = bbn.index[node.node_id]
            except KeyError:
                raise KeyError(f"unknown node {node.node_id!r}") from None
            return ((states >> np.uint32(i)) & np.uint32(1)).astype(bool)
        if isinstance(node, Not):
            return ~column(node.inner)
        if isinstance(node, And):
            out = column(node.items[0])
            for item in node.items[1:]:
                out = out & column(item)
            return out
        if isinstance(node, Or):
            out = column(node.items[0])
            for item in node.items[1:]:
                out = out | column(item)
            return out
        if isinstance(node, Const):
            return np.full(prob.size, node.value, dtype=bool)
        raise TypeError(f"unknown event node {node!r}")

    return float(prob[column(tree)].sum())


# --- Serialization -----------------------------------------------------------

def bbn_to_dict(bbn):
    return {
        "nodes": [
            {"id": node.id, "kind": node.kind,
             "parents": [[j, w] for j, w in node.parents],
             "risks": list(node.risks),
             "absolute": node.absolute,
             "is_output": node.is_output}
            for node in bbn.nodes
        ],
    }


def bbn_from_dict(data):
    nodes = []
    for i, entry in enumerate(data.get("nodes", [])):
        parents = tuple((int(j), float(w)) for j, w in entry.get("parents", []))
        for j, _ in parents:
            if j >= i:
                raise CompileError(
                    f"node {entry['id']!r} has parent index {j} not before "
                    f"its own position {i}")
        absolute = entry.get("absolute")
        nodes.append(BbnNode(
            id=entry["id"], kind=entry.get("kind", "world"),
            parents=parents,
            risks=tuple(float(q) for q in entry.get("risks", [])),
            absolute=None if absolute is None else float(absolute),
            is_output=bool(entry.get("is_output", False))))
    return CompiledBbn(nodes=tuple(nodes))


def save_bbn(bbn, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bbn_to_dict(bbn), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_bbn(path):
    with open(path, encoding="utf-8") as fh:
        return bbn_from_dict(json.load(fh))


def save_samples(path, matrix):
    """Bit-packed sample dump: magic, version byte, node count as 3 bytes
    little-endian, then one packed row per sample."""
    matrix = np.asarray(matrix, dtype=bool)
    if matrix.ndim != 2:
        raise ValueError("sample matrix must be 2-dimensional")
    n_nodes = matrix.shape[1]
    if n_nodes >= 1 << 24:
        raise NetworkTooLargeError("sample dump supports at most 2^24-1 nodes")
    with open(path, "wb") as fh:
        fh.write(SAMPLE_MAGIC)
        fh.write(bytes([SAMPLE_VERSION]))
        fh.write(int(n_nodes).to_bytes(3, "little"))
        fh.write(np.packbits(matrix, axis=1).tobytes())


def load_samples(path):
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8 or header[:4] != SAMPLE_MAGIC:
            raise ValueError(f"{path} is not a sample dump")
        if header[4] != SAMPLE_VERSION:
            raise ValueError(f"unsupported sample dump version {header[4]}")
        n_nodes = int.from_bytes(header[5:8], "little")
        payload = fh.read()
    row_bytes = (n_nodes + 7) // 8
    if row_bytes == 0:
        return np.zeros((0, 0), dtype=bool)
    if len(payload) % row_bytes:
        raise ValueError("truncated sample dump")
    packed = np.frombuffer(payload, dtype=np.uint8).reshape(-1, row_bytes)
    return np.unpackbits(packed, axis=1)[:, :n_nodes].astype(bool)
