"""Batch command-line entry points mirroring the service.

Commands: ingest (corpus -> graph + provenance), mine (graph -> chains +
model snapshot), score (rank cliques against a model), serve (start the HTTP
service), export (render chain files). All outputs are pure functions of the
inputs and flags; repeated runs are byte-identical.

Exit codes: 0 ok, 2 usage error, 3 parse error, 4 non-convergence, 5 internal.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .discovery import DEFAULT_MIN_SCORE, DEFAULT_MIN_SIZE, create_session
from .export import (
    chains_to_doc,
    dump_json,
    graph_from_doc,
    graph_to_doc,
    provenance_to_doc,
    render_chains_dot,
    render_chains_text,
)
from .graph import Graph, GraphError, enumerate_maximal_cliques, format_edge_list, parse_edge_list
from .ingest import CorpusError, build_entity_graph, load_corpus
from .maxent import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    ConvergenceError,
    ModelError,
    build_background,
    interestingness,
    load_snapshot,
    save_snapshot,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NONCONVERGENCE = 4
EXIT_INTERNAL = 5


def load_graph_file(path: str, directed: bool = False) -> Graph:
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix == ".json":
        try:
            return graph_from_doc(json.loads(text))
        except json.JSONDecodeError as exc:
            raise GraphError(f"{path}: invalid JSON: {exc}") from exc
    return parse_edge_list(text, directed=directed)


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.input)
    graph, prov = build_entity_graph(corpus)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "graph.json").write_text(dump_json(graph_to_doc(graph)), encoding="utf-8")
    (out / "provenance.json").write_text(dump_json(provenance_to_doc(prov)), encoding="utf-8")
    (out / "graph.tsv").write_text(format_edge_list(graph), encoding="utf-8")
    print(f"{graph.n} entities, {len(graph.edges)} edges -> {out}/")
    return EXIT_OK


def cmd_mine(args) -> int:
    g = load_graph_file(args.graph, directed=args.directed)
    session = create_session(
        Path(args.graph).name,
        g,
        tol=args.tol,
        max_iter=args.max_iter,
        min_size=args.min_size,
    )
    mined = session.auto_mine(args.k, min_score=args.min_score)
    doc = chains_to_doc(
        session.dataset_id,
        g,
        [fc.chain for fc in mined],
        session.clique,
        session.background.epoch,
        scores=[fc.scores for fc in mined],
    )
    Path(args.out).write_text(dump_json(doc), encoding="utf-8")
    model_out = args.model_out or f"{args.out}.model.json"
    save_snapshot(session.background, model_out)
    print(f"{len(mined)} chains -> {args.out}; model snapshot -> {model_out}")
    return EXIT_OK


def cmd_score(args) -> int:
    g = load_graph_file(args.graph, directed=args.directed)
    if args.model:
        background = load_snapshot(args.model)
        if background.n != g.n or background.directed != g.directed:
            raise ModelError(
                f"model snapshot shape (n={background.n}, directed={background.directed}) "
                f"does not match the graph (n={g.n}, directed={g.directed})"
            )
    else:
        background = build_background(g, tol=args.tol, max_iter=args.max_iter)
    cliques = enumerate_maximal_cliques(g, min_size=args.min_size)
    scored = []
    for c in cliques:
        value = interestingness(background, g, c.vertices, tol=args.tol, max_iter=args.max_iter)
        scored.append((c, value))
    scored.sort(key=lambda pair: (-pair[1], pair[0].id))
    print("id\tscore\tvertices")
    for c, value in scored:
        labels = ",".join(g.labels[v] for v in c.vertices)
        print(f"{c.id}\t{value:.9f}\t{labels}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(ServiceConfig(
        snapshot_dir=args.snapshot_dir,
        tol=args.tol,
        max_iter=args.max_iter,
        min_size=args.min_size,
        min_score=args.min_score,
    ))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        doc = json.loads(Path(args.chains).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphError(f"{args.chains}: invalid JSON: {exc}") from exc
    if args.format == "dot":
        rendered = render_chains_dot(doc)
    else:
        rendered = render_chains_text(doc)
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chainminer",
        description="Mine chains of surprising cliques from entity graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an entity graph from a corpus file")
    p.add_argument("--input", required=True, help="corpus JSON file")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("mine", help="discover chains and write the updated model")
    p.add_argument("--graph", required=True, help="graph file (.json or .tsv)")
    p.add_argument("--k", type=int, required=True, help="number of chains")
    p.add_argument("--min-score", type=float, default=DEFAULT_MIN_SCORE)
    p.add_argument("--min-size", type=int, default=DEFAULT_MIN_SIZE)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--directed", action="store_true", help="edge-list input is directed")
    p.add_argument("--out", required=True, help="chain export file")
    p.add_argument("--model-out", help="model snapshot file (default: <out>.model.json)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("score", help="rank all maximal cliques")
    p.add_argument("--graph", required=True)
    p.add_argument("--model", help="model snapshot; omitted = fresh background")
    p.add_argument("--min-size", type=int, default=DEFAULT_MIN_SIZE)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--directed", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--snapshot-dir")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--min-size", type=int, default=DEFAULT_MIN_SIZE)
    p.add_argument("--min-score", type=float, default=DEFAULT_MIN_SCORE)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("export", help="render a chain export file")
    p.add_argument("--chains", required=True)
    p.add_argument("--format", choices=("dot", "text"), default="text")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, GraphError, ModelError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
