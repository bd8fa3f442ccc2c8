"""Bipartite event-entity graph, its access queries and GEXF / JSON export."""

from __future__ import annotations

import json
from collections import Counter, defaultdict, deque
from dataclasses import asdict, dataclass, field, replace
from datetime import date
from xml.sax.saxutils import quoteattr

from .corpus import TIMEX_LABELS
from .dates import intersects, normalize_date

SNAPSHOT_FORMAT = "histevents-graph"
SNAPSHOT_VERSION = 1


class GraphQueryError(LookupError):
    pass


@dataclass(frozen=True)
class DateValue:
    raw: str
    iso: str | None
    role: str | None = None


@dataclass(frozen=True)
class EventNode:
    node_id: str
    event_class: str
    doc: str
    sentence: str
    anchor_text: str
    confidence: str
    lemma: str = ""
    sentence_text: str = ""
    dates: tuple[DateValue, ...] = ()
    kind: str = field(default="event", init=False)

    @property
    def label(self) -> str:
        return self.anchor_text


@dataclass(frozen=True)
class EntityNode:
    node_id: str
    linked: bool
    label: str
    entity_type: str
    entity_id: str | None = None
    doc: str | None = None
    sentence: str | None = None
    kind: str = field(default="entity", init=False)


@dataclass(frozen=True, order=True)
class RoleEdge:
    event: str
    entity: str
    role: str
    doc: str
    sentence: str


def event_node_id(doc, sentence, first, last) -> str:
    return f"event:{doc}:{sentence}:{first}-{last}"


def entity_node_id(entity_id) -> str:
    return f"entity:{entity_id}"


def mention_node_id(doc, sentence, first, last) -> str:
    return f"mention:{doc}:{sentence}:{first}-{last}"


class EventGraph:
    def __init__(self, nodes=(), edges=()):
        self.nodes: dict[str, EventNode | EntityNode] = {}
        for n in nodes:
            self.nodes[n.node_id] = n
        self.edges: list[RoleEdge] = sorted(set(edges))
        self._adj: dict[str, set[str]] = defaultdict(set)
        for e in self.edges:
            if not isinstance(self.nodes.get(e.event), EventNode) or not isinstance(self.nodes.get(e.entity), EntityNode):
                raise ValueError(f"edge {e} must join an event node to an entity node")
            self._adj[e.event].add(e.entity)
            self._adj[e.entity].add(e.event)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def event_nodes(self) -> list[EventNode]:
        return [n for _, n in sorted(self.nodes.items()) if isinstance(n, EventNode)]

    @property
    def entity_nodes(self) -> list[EntityNode]:
        return [n for _, n in sorted(self.nodes.items()) if isinstance(n, EntityNode)]

    def neighbors(self, node_id: str) -> set[str]:
        return set(self._adj.get(node_id, ()))

    def degree(self, node_id: str) -> int:
        return len(self._adj.get(node_id, ()))

    def induced(self, node_ids) -> "EventGraph":
        keep = set(node_ids)
        return EventGraph(
            (self.nodes[n] for n in sorted(keep)),
            (e for e in self.edges if e.event in keep and e.entity in keep),
        )

    # -- persistence ----------------------------------------------------------

    def to_snapshot(self) -> dict:
        nodes = []
        for node_id, n in sorted(self.nodes.items()):
            d = asdict(n)
            if isinstance(n, EventNode):
                d["dates"] = [asdict(v) for v in n.dates]
            nodes.append(d)
        return {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "nodes": nodes,
            "edges": [asdict(e) for e in self.edges],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_snapshot(), ensure_ascii=False, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_snapshot(cls, data: dict) -> "EventGraph":
        if data.get("format") != SNAPSHOT_FORMAT:
            raise ValueError("not a histevents graph snapshot")
        nodes = []
        for d in data["nodes"]:
            d = dict(d)
            kind = d.pop("kind")
            if kind == "event":
                d["dates"] = tuple(DateValue(**v) for v in d.get("dates", ()))
                nodes.append(EventNode(**d))
            elif kind == "entity":
                nodes.append(EntityNode(**d))
            else:
                raise ValueError(f"unknown node kind {kind!r}")
        return cls(nodes, (RoleEdge(**e) for e in data["edges"]))

    @classmethod
    def load(cls, path) -> "EventGraph":
        with open(path, encoding="utf-8") as f:
            return cls.from_snapshot(json.load(f))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())


# -- construction -------------------------------------------------------------


def build_graph(mentions) -> EventGraph:
    """One event node per mention; linked entities shared, unlinked ones per mention.

    ``mentions`` may be EventMention objects or their JSON-lines records.
    """
    nodes: dict[str, EventNode | EntityNode] = {}
    edges = []
    surfaces: dict[str, Counter] = defaultdict(Counter)  # linked node -> argument texts
    for m in mentions:
        r = m if isinstance(m, dict) else m.to_record()
        doc, sent = r["doc"], r["sentence"]
        first, last = r["anchor_span"]
        ev_id = event_node_id(doc, sent, first, last)
        dates = []
        for a in r["args"]:
            if a["sem_type"] in TIMEX_LABELS:
                if a["sem_type"] == "DATE":
                    dates.append(DateValue(a["text"], normalize_date(a["text"]), a.get("role")))
                continue
            role = a.get("role")
            if role is None:
                continue
            if a.get("entity_id"):
                ent_id = entity_node_id(a["entity_id"])
                surfaces[ent_id][a["text"]] += 1
                if ent_id not in nodes:
                    nodes[ent_id] = EntityNode(ent_id, True, a["text"], a["sem_type"], a["entity_id"])
            else:
                f, l = a["span"]
                ent_id = mention_node_id(doc, sent, f, l)
                if ent_id not in nodes:
                    nodes[ent_id] = EntityNode(ent_id, False, a["text"], a["sem_type"], None, doc, sent)
            edges.append(RoleEdge(ev_id, ent_id, role, doc, sent))
        nodes[ev_id] = EventNode(
            ev_id, r["event_class"], doc, sent, r.get("anchor_text", ""), r["confidence"],
            r.get("lemma", ""), r.get("sentence_text", ""), tuple(dates),
        )
    # label a shared node by its commonest surface so input order does not matter
    for ent_id, counts in surfaces.items():
        label = min(counts, key=lambda t: (-counts[t], -len(t), t))
        nodes[ent_id] = replace(nodes[ent_id], label=label)
    return EventGraph(nodes.values(), edges)


# -- access scenarios -----------------------------------------------------------


def _center(graph: EventGraph, center: str) -> str:
    for node_id in (center, entity_node_id(center)):
        if isinstance(graph.nodes.get(node_id), EntityNode):
            return node_id
    raise GraphQueryError(f"unknown entity {center!r}")


def ego_network(graph: EventGraph, center: str, hops: int = 2) -> EventGraph:
    if hops < 0:
        raise ValueError("hops must be >= 0")
    start = _center(graph, center)
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if dist[cur] == hops:
            continue
        for nb in sorted(graph.neighbors(cur)):
            if nb not in dist:
                dist[nb] = dist[cur] + 1
                queue.append(nb)
    return graph.induced(dist)


def date_network(graph: EventGraph, start: date, end: date) -> EventGraph:
    if start > end:
        raise ValueError(f"empty interval {start} > {end}")
    events = [
        n.node_id for n in graph.event_nodes
        if any(v.iso and intersects(v.iso, start, end) for v in n.dates)
    ]
    keep = set(events)
    for e in events:
        keep |= graph.neighbors(e)
    return graph.induced(keep)


@dataclass(frozen=True)
class Provenance:
    event: str
    event_class: str
    role: str
    doc: str
    sentence: str


def constrained_query(graph: EventGraph, entity_types=(), event_classes=(), roles=(),
                      known_classes=None, known_roles=None):
    """Entities with an edge meeting every non-empty constraint set.

    Labels are validated against ``known_classes`` / ``known_roles`` (the
    pattern dictionary), or against the labels present in the graph.
    """
    if known_classes is None:
        known_classes = {n.event_class for n in graph.event_nodes}
    if known_roles is None:
        known_roles = {e.role for e in graph.edges}
    for label in sorted(set(event_classes) - set(known_classes)):
        raise GraphQueryError(f"unknown event class {label!r}")
    for label in sorted(set(roles) - set(known_roles)):
        raise GraphQueryError(f"unknown role {label!r}")
    hits: dict[str, list[Provenance]] = defaultdict(list)
    for e in graph.edges:
        ent, ev = graph.nodes[e.entity], graph.nodes[e.event]
        if entity_types and ent.entity_type not in entity_types:
            continue
        if event_classes and ev.event_class not in event_classes:
            continue
        if roles and e.role not in roles:
            continue
        hits[e.entity].append(Provenance(e.event, ev.event_class, e.role, e.doc, e.sentence))
    return [(graph.nodes[n], hits[n]) for n in sorted(hits)]


def document_subgraph(graph: EventGraph, doc_ids) -> EventGraph:
    docs = set(doc_ids)
    keep = {n.node_id for n in graph.event_nodes if n.doc in docs}
    for e in graph.edges:
        if e.doc in docs:
            keep.update((e.event, e.entity))
    return graph.induced(keep)


# -- GEXF ---------------------------------------------------------------------------

_NODE_ATTRS = ("kind", "class", "doc", "sentence", "confidence", "dates")
_EDGE_ATTRS = ("role", "doc", "sentence")


def _node_values(n) -> dict:
    if isinstance(n, EventNode):
        return {
            "kind": "event",
            "class": n.event_class,
            "doc": n.doc,
            "sentence": n.sentence,
            "confidence": n.confidence,
            "dates": ";".join(v.iso or v.raw for v in n.dates),
        }
    return {
        "kind": "entity" if n.linked else "mention",
        "class": n.entity_type,
        "doc": n.doc or "",
        "sentence": n.sentence or "",
        "confidence": "",
        "dates": "",
    }


def to_gexf(graph: EventGraph) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        '  <meta>',
        '    <creator>histevents</creator>',
        '    <description>event-entity graph</description>',
        '  </meta>',
        '  <graph mode="static" defaultedgetype="directed">',
        '    <attributes class="node">',
    ]
    for i, name in enumerate(_NODE_ATTRS):
        out.append(f'      <attribute id="{i}" title="{name}" type="string"/>')
    out.append("    </attributes>")
    out.append('    <attributes class="edge">')
    for i, name in enumerate(_EDGE_ATTRS):
        out.append(f'      <attribute id="{i}" title="{name}" type="string"/>')
    out.append("    </attributes>")
    out.append("    <nodes>")
    for node_id, n in sorted(graph.nodes.items()):
        out.append(f"      <node id={quoteattr(node_id)} label={quoteattr(n.label)}>")
        out.append("        <attvalues>")
        vals = _node_values(n)
        for i, name in enumerate(_NODE_ATTRS):
            out.append(f'          <attvalue for="{i}" value={quoteattr(vals[name])}/>')
        out.append("        </attvalues>")
        out.append("      </node>")
    out.append("    </nodes>")
    out.append("    <edges>")
    for i, e in enumerate(graph.edges):
        out.append(
            f'      <edge id="{i}" source={quoteattr(e.event)} target={quoteattr(e.entity)} label={quoteattr(e.role)}>'
        )
        out.append("        <attvalues>")
        for j, val in enumerate((e.role, e.doc, e.sentence)):
            out.append(f'          <attvalue for="{j}" value={quoteattr(val)}/>')
        out.append("        </attvalues>")
        out.append("      </edge>")
    out.append("    </edges>")
    out.append("  </graph>")
    out.append("</gexf>")
    return "\n".join(out) + "\n"


def export_gexf(graph: EventGraph, path) -> None:
    data = to_gexf(graph).encode("utf-8")
    with open(path, "wb") as f:
        f.write(data)


def subgraph_json(graph: EventGraph) -> str:
    return graph.dumps()


def query_json(results) -> str:
    payload = [
        {"entity": asdict(ent), "provenance": [asdict(p) for p in prov]}
        for ent, prov in results
    ]
    return json.dumps(payload, ensure_ascii=False, indent=1, sort_keys=True) + "\n"


__all__ = [
    "EventGraph", "EventNode", "EntityNode", "RoleEdge", "DateValue", "Provenance",
    "GraphQueryError", "build_graph", "ego_network", "date_network", "constrained_query",
    "document_subgraph", "export_gexf", "to_gexf",
]
