"""Exchange documents: graph files, provenance files, and chain exports.

All documents are JSON objects with a ``format_version`` and deterministic
key/element ordering, so identical inputs serialize byte-identically.
"""
from __future__ import annotations

import json

from .graph import ChainPattern, CliquePattern, Graph, GraphError, build_graph
from .ingest import Provenance

__all__ = [
    "GRAPH_FORMAT_VERSION",
    "CHAINS_FORMAT_VERSION",
    "graph_to_doc",
    "graph_from_doc",
    "provenance_to_doc",
    "chains_to_doc",
    "render_chains_text",
    "render_chains_dot",
    "dump_json",
]

GRAPH_FORMAT_VERSION = 1
CHAINS_FORMAT_VERSION = 1


def dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def graph_to_doc(g: Graph) -> dict:
    edges = []
    for u, v in g.edges:
        a, b = g.labels[u], g.labels[v]
        if not g.directed and b < a:
            a, b = b, a
        edges.append([a, b])
    edges.sort()
    return {
        "format_version": GRAPH_FORMAT_VERSION,
        "directed": g.directed,
        "labels": list(g.labels),
        "edges": edges,
    }


def graph_from_doc(doc: dict) -> Graph:
    if doc.get("format_version") != GRAPH_FORMAT_VERSION:
        raise GraphError(f"unsupported graph format_version {doc.get('format_version')!r}")
    return build_graph(doc["labels"], [tuple(e) for e in doc["edges"]], doc["directed"])


def provenance_to_doc(prov: Provenance) -> dict:
    return {
        "format_version": GRAPH_FORMAT_VERSION,
        "mentions": {
            entity: [[doc_id, idx] for doc_id, idx in places]
            for entity, places in sorted(prov.mentions.items())
        },
        "cooccurrences": [
            {"pair": [a, b], "witnesses": [[doc_id, idx] for doc_id, idx in places]}
            for (a, b), places in sorted(prov.cooccurrences.items())
        ],
    }


def chains_to_doc(
    dataset_id: str,
    g: Graph,
    chains: list[ChainPattern],
    clique_lookup,
    model_epoch: int,
    scores: list[dict] | None = None,
) -> dict:
    """Chain export: ordered clique label lists, connector labels, per-clique
    scores with their epochs, and the model epoch at finalization."""
    out_chains = []
    for pos, chain in enumerate(chains):
        score_map = scores[pos] if scores else {}
        cliques = []
        for cid in chain.cliques:
            clique: CliquePattern = clique_lookup(cid)
            score, score_epoch = score_map.get(cid, (clique.score, clique.score_epoch))
            cliques.append({
                "id": cid,
                "vertices": [g.labels[v] for v in clique.vertices],
                "score": score,
                "score_epoch": score_epoch,
            })
        out_chains.append({
            "cliques": cliques,
            "connectors": [[g.labels[v] for v in conn] for conn in chain.connectors],
        })
    return {
        "format_version": CHAINS_FORMAT_VERSION,
        "dataset": dataset_id,
        "directed": g.directed,
        "symmetrized_for_cliques": g.directed,
        "model_epoch": model_epoch,
        "chains": out_chains,
    }


def render_chains_text(doc: dict) -> str:
    lines = [f"dataset: {doc['dataset']}", f"model epoch: {doc['model_epoch']}", ""]
    for pos, chain in enumerate(doc["chains"], start=1):
        lines.append(f"chain {pos} ({len(chain['cliques'])} cliques)")
        for i, clique in enumerate(chain["cliques"]):
            score = clique["score"]
            shown = f"{score:.4f}" if score is not None else "unscored"
            lines.append(
                f"  [{clique['id']}] {', '.join(clique['vertices'])} (score {shown})"
            )
            if i < len(chain["connectors"]):
                lines.append(f"      shared: {', '.join(chain['connectors'][i])}")
        lines.append("")
    return "\n".join(lines).rstrip("\n") + "\n"


def _dot_quote(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_chains_dot(doc: dict) -> str:
    """One cluster per clique; connector vertices are shared node names."""
    lines = ["graph chains {", "  node [shape=ellipse];"]
    for c_pos, chain in enumerate(doc["chains"], start=1):
        for q_pos, clique in enumerate(chain["cliques"], start=1):
            lines.append(f"  subgraph cluster_c{c_pos}_{q_pos} {{")
            lines.append(f"    label=\"chain {c_pos} clique {clique['id']}\";")
            members = sorted(clique["vertices"])
            for label in members:
                lines.append(f"    {_dot_quote(label)};")
            lines.append("  }")
            for i, a in enumerate(members):
                for b in members[i + 1:]:
                    lines.append(f"  {_dot_quote(a)} -- {_dot_quote(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
