"""Session-oriented HTTP API over the mining engine.

State lives in memory, guarded by one lock per session (mutating calls
serialize; distinct sessions are independent), with optional snapshots to disk
on demand and on shutdown. The serving layer only translates payloads and
delegates to the engine; it adds no behavior of its own.

Every session response carries the background epoch. Mutating session calls
accept an optional ``epoch`` the client last saw; a mismatch is rejected with
an ``epoch_conflict`` so stale candidate lists cannot be committed.
"""
from __future__ import annotations

import itertools
import json
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .discovery import (
    DEFAULT_MIN_SCORE,
    DEFAULT_MIN_SIZE,
    ExplorationSession,
    SessionStateError,
    UnknownCliqueError,
    create_session,
)
from .export import chains_to_doc, graph_from_doc, graph_to_doc
from .graph import (
    CliquePattern,
    Graph,
    GraphError,
    enumerate_maximal_cliques,
    parse_edge_list,
)
from .ingest import CorpusError, Provenance, build_entity_graph, parse_corpus
from .maxent import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    ConvergenceError,
    model_from_snapshot,
    model_to_snapshot,
)

__all__ = ["ServiceConfig", "ServiceState", "ApiError", "create_app"]


@dataclass
class ServiceConfig:
    snapshot_dir: str | None = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    min_size: int = DEFAULT_MIN_SIZE
    min_score: float = DEFAULT_MIN_SCORE
    # Mining requests whose graph-size x clique-count product exceeds this run
    # as background jobs with a polling endpoint (roughly the > 2 s mark).
    job_threshold: int = 200_000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, where: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.where = where

    def body(self) -> dict:
        err = {"code": self.code, "message": self.message}
        if self.where:
            err["where"] = self.where
        return {"error": err}


@dataclass
class DatasetHandle:
    id: str
    graph: Graph
    cliques: list[CliquePattern]
    min_size: int
    provenance: Provenance | None = None
    created_at: float = 0.0
    source: str | None = None

    def summary(self) -> dict:
        return {
            "id": self.id,
            "vertices": self.graph.n,
            "edges": len(self.graph.edges),
            "cliques": len(self.cliques),
            "min_size": self.min_size,
            "directed": self.graph.directed,
            "symmetrized_for_cliques": self.graph.directed,
            "created_at": self.created_at,
            "source": self.source,
        }


@dataclass
class SessionEntry:
    id: str
    session: ExplorationSession
    lock: threading.RLock = field(default_factory=threading.RLock)


@dataclass
class Job:
    id: str
    session_id: str
    status: str = "pending"  # pending | done | failed
    result: dict | None = None
    error: dict | None = None


class ServiceState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.datasets: dict[str, DatasetHandle] = {}
        self.sessions: dict[str, SessionEntry] = {}
        self.jobs: dict[str, Job] = {}
        self._counter = itertools.count(1)
        self._registry_lock = threading.Lock()

    def next_id(self, prefix: str) -> str:
        return f"{prefix}-{next(self._counter)}"

    def dataset(self, dataset_id: str) -> DatasetHandle:
        try:
            return self.datasets[dataset_id]
        except KeyError:
            raise ApiError(404, "not_found", f"unknown dataset {dataset_id!r}") from None

    def entry(self, session_id: str) -> SessionEntry:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise ApiError(404, "not_found", f"unknown session {session_id!r}") from None

    # -- persistence -------------------------------------------------------

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        doc = {
            "format_version": 1,
            "counter": next(self._counter),
            "datasets": {},
            "sessions": {},
        }
        for ds in self.datasets.values():
            doc["datasets"][ds.id] = {
                "graph": graph_to_doc(ds.graph),
                "cliques": [
                    {"id": c.id, "vertices": list(c.vertices)} for c in ds.cliques
                ],
                "min_size": ds.min_size,
                "created_at": ds.created_at,
                "source": ds.source,
                "provenance": _prov_to_state(ds.provenance),
            }
        for entry in self.sessions.values():
            s = entry.session
            doc["sessions"][entry.id] = {
                "dataset_id": s.dataset_id,
                "background": model_to_snapshot(s.background),
                "cliques": [
                    {
                        "id": c.id,
                        "vertices": list(c.vertices),
                        "score": c.score,
                        "score_epoch": c.score_epoch,
                    }
                    for c in s.cliques
                ],
                "current_chain": _chain_to_state(s.current_chain),
                "finalized": [
                    {
                        "chain": _chain_to_state(fc.chain),
                        "scores": {str(k): list(v) for k, v in fc.scores.items()},
                        "epoch": fc.epoch,
                    }
                    for fc in s.finalized
                ],
                "status": s.status,
                "tol": s.tol,
                "max_iter": s.max_iter,
            }
        path = directory / "state.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, ensure_ascii=False)
            fh.write("\n")
        return path

    def load(self, directory: str | Path) -> None:
        path = Path(directory) / "state.json"
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        from .discovery import FinalizedChain
        from .graph import ChainPattern

        for ds_id, raw in sorted(doc["datasets"].items()):
            graph = graph_from_doc(raw["graph"])
            cliques = [
                CliquePattern(id=c["id"], vertices=tuple(c["vertices"]))
                for c in raw["cliques"]
            ]
            self.datasets[ds_id] = DatasetHandle(
                id=ds_id,
                graph=graph,
                cliques=cliques,
                min_size=raw["min_size"],
                provenance=_prov_from_state(raw.get("provenance")),
                created_at=raw["created_at"],
                source=raw.get("source"),
            )
        for s_id, raw in sorted(doc["sessions"].items()):
            ds = self.datasets[raw["dataset_id"]]
            session = ExplorationSession(
                dataset_id=raw["dataset_id"],
                graph=ds.graph,
                background=model_from_snapshot(raw["background"]),
                cliques=[
                    CliquePattern(
                        id=c["id"],
                        vertices=tuple(c["vertices"]),
                        score=c["score"],
                        score_epoch=c["score_epoch"],
                    )
                    for c in raw["cliques"]
                ],
                current_chain=_chain_from_state(raw.get("current_chain")),
                finalized=[
                    FinalizedChain(
                        chain=_chain_from_state(fc["chain"]),
                        scores={int(k): tuple(v) for k, v in fc["scores"].items()},
                        epoch=fc["epoch"],
                    )
                    for fc in raw["finalized"]
                ],
                status=raw["status"],
                tol=raw["tol"],
                max_iter=raw["max_iter"],
            )
            self.sessions[s_id] = SessionEntry(id=s_id, session=session)
        self._counter = itertools.count(doc.get("counter", 1))


def _chain_to_state(chain):
    if chain is None:
        return None
    return {
        "cliques": list(chain.cliques),
        "connectors": [list(c) for c in chain.connectors],
    }


def _chain_from_state(raw):
    if raw is None:
        return None
    from .graph import ChainPattern

    return ChainPattern(
        cliques=list(raw["cliques"]),
        connectors=[tuple(c) for c in raw["connectors"]],
    )


def _prov_to_state(prov: Provenance | None):
    if prov is None:
        return None
    return {
        "mentions": {k: [list(w) for w in v] for k, v in sorted(prov.mentions.items())},
        "cooccurrences": [
            {"pair": list(pair), "witnesses": [list(w) for w in v]}
            for pair, v in sorted(prov.cooccurrences.items())
        ],
    }


def _prov_from_state(raw) -> Provenance | None:
    if raw is None:
        return None
    prov = Provenance()
    prov.mentions = {
        k: [tuple(w) for w in v] for k, v in raw["mentions"].items()
    }
    prov.cooccurrences = {
        tuple(item["pair"]): [tuple(w) for w in item["witnesses"]]
        for item in raw["cooccurrences"]
    }
    return prov


class RegisterDatasetBody(BaseModel):
    format_version: int | None = None
    documents: list[dict] | None = None
    alias_map: dict[str, list[str]] | None = None
    stop_list: list[str] | None = None
    edge_list: str | None = None
    directed: bool = False
    source: str | None = None
    min_size: int | None = None


class CreateSessionBody(BaseModel):
    dataset_id: str
    tol: float | None = None
    max_iter: int | None = None
    min_size: int | None = None


class CliqueRefBody(BaseModel):
    clique_id: int
    epoch: int | None = None


class EpochBody(BaseModel):
    epoch: int | None = None


class MineBody(BaseModel):
    k: int
    min_score: float | None = None
    epoch: int | None = None


def _clique_payload(c: CliquePattern, g: Graph) -> dict:
    return {
        "id": c.id,
        "vertices": [g.labels[v] for v in c.vertices],
        "score": c.score,
        "score_epoch": c.score_epoch,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    state = ServiceState(config)

    if config.snapshot_dir and (Path(config.snapshot_dir) / "state.json").exists():
        state.load(config.snapshot_dir)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        if config.snapshot_dir:
            state.save(config.snapshot_dir)

    app = FastAPI(title="chainminer", lifespan=lifespan)
    app.state.engine = state

    @app.exception_handler(ApiError)
    async def handle_api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.exception_handler(RequestValidationError)
    async def handle_validation(_req: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(p) for p in first.get("loc", ()))
        return JSONResponse(
            status_code=400,
            content={
                "error": {
                    "code": "invalid_payload",
                    "message": first.get("msg", "invalid request body"),
                    "where": where,
                }
            },
        )

    def check_epoch(session: ExplorationSession, epoch: int | None) -> None:
        if epoch is not None and epoch != session.background.epoch:
            raise ApiError(
                409,
                "epoch_conflict",
                f"request was built against epoch {epoch} but the background "
                f"is at epoch {session.background.epoch}; refresh and retry",
            )

    def translate(exc: Exception) -> ApiError:
        if isinstance(exc, UnknownCliqueError):
            return ApiError(404, "not_found", str(exc))
        if isinstance(exc, SessionStateError):
            return ApiError(409, "state_conflict", str(exc))
        if isinstance(exc, ConvergenceError):
            return ApiError(409, "non_convergence", str(exc))
        if isinstance(exc, (CorpusError, GraphError)):
            return ApiError(400, "parse_error", str(exc))
        raise exc

    # -- datasets ----------------------------------------------------------

    @app.post("/datasets", status_code=201)
    def register_dataset(body: RegisterDatasetBody):
        min_size = body.min_size if body.min_size is not None else config.min_size
        provenance = None
        try:
            if body.documents is not None:
                corpus = parse_corpus(body.model_dump(exclude_none=True))
                graph, provenance = build_entity_graph(corpus)
            elif body.edge_list is not None:
                graph = parse_edge_list(body.edge_list, directed=body.directed)
            else:
                raise ApiError(
                    400, "invalid_payload",
                    "payload needs either 'documents' or 'edge_list'",
                )
            cliques = enumerate_maximal_cliques(graph, min_size=min_size)
        except (CorpusError, GraphError) as exc:
            raise translate(exc) from exc
        handle = DatasetHandle(
            id=state.next_id("ds"),
            graph=graph,
            cliques=cliques,
            min_size=min_size,
            provenance=provenance,
            created_at=time.time(),
            source=body.source,
        )
        with state._registry_lock:
            state.datasets[handle.id] = handle
        return handle.summary()

    @app.get("/datasets/{dataset_id}")
    def get_dataset(dataset_id: str):
        return state.dataset(dataset_id).summary()

    @app.get("/datasets/{dataset_id}/cliques")
    def get_cliques(dataset_id: str, min_size: int | None = None):
        ds = state.dataset(dataset_id)
        floor = min_size if min_size is not None else ds.min_size
        if floor < ds.min_size:
            raise ApiError(
                400, "invalid_payload",
                f"dataset was enumerated at min_size={ds.min_size}; "
                f"smaller floors would change clique ids",
                where="min_size",
            )
        cliques = [c for c in ds.cliques if len(c.vertices) >= floor]
        return {
            "dataset_id": ds.id,
            "min_size": floor,
            "cliques": [
                {"id": c.id, "vertices": [ds.graph.labels[v] for v in c.vertices]}
                for c in cliques
            ],
        }

    # -- sessions ----------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def post_session(body: CreateSessionBody):
        ds = state.dataset(body.dataset_id)
        min_size = body.min_size if body.min_size is not None else ds.min_size
        if min_size < ds.min_size:
            raise ApiError(
                400, "invalid_payload",
                f"dataset was enumerated at min_size={ds.min_size}",
                where="min_size",
            )
        cliques = [c for c in ds.cliques if len(c.vertices) >= min_size]
        try:
            session = create_session(
                ds.id,
                ds.graph,
                cliques=cliques,
                tol=body.tol if body.tol is not None else config.tol,
                max_iter=body.max_iter if body.max_iter is not None else config.max_iter,
            )
        except ConvergenceError as exc:
            raise translate(exc) from exc
        entry = SessionEntry(id=state.next_id("s"), session=session)
        with state._registry_lock:
            state.sessions[entry.id] = entry
        return {
            "session_id": entry.id,
            "dataset_id": ds.id,
            "epoch": session.background.epoch,
            "cliques": len(session.cliques),
        }

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            return {
                "session_id": entry.id,
                "dataset_id": s.dataset_id,
                "status": s.status,
                "epoch": s.background.epoch,
                "chain_length": len(s.current_chain) if s.current_chain else 0,
                "finalized_chains": len(s.finalized),
            }

    @app.get("/sessions/{session_id}/ranked")
    def get_ranked(session_id: str):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            try:
                ranked = s.rank_cliques()
            except (ConvergenceError,) as exc:
                raise translate(exc) from exc
            return {
                "epoch": s.background.epoch,
                "cliques": [_clique_payload(c, s.graph) for c in ranked],
            }

    @app.get("/sessions/{session_id}/candidates")
    def get_candidates(session_id: str):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            try:
                candidates = s.candidate_cliques()
            except (SessionStateError, ConvergenceError) as exc:
                raise translate(exc) from exc
            return {
                "epoch": s.background.epoch,
                "chain": _chain_payload(s),
                "candidates": [
                    {
                        **_clique_payload(c.clique, s.graph),
                        "end": c.end,
                        "connector": [s.graph.labels[v] for v in c.connector],
                    }
                    for c in candidates
                ],
            }

    def _chain_payload(s: ExplorationSession, chain=None):
        chain = chain if chain is not None else s.current_chain
        if chain is None:
            return None
        return {
            "cliques": [
                {
                    "id": cid,
                    "vertices": [s.graph.labels[v] for v in s.clique(cid).vertices],
                }
                for cid in chain.cliques
            ],
            "connectors": [[s.graph.labels[v] for v in c] for c in chain.connectors],
        }

    def _mutate(session_id: str, epoch: int | None, action):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            check_epoch(s, epoch)
            try:
                action(s)
            except (UnknownCliqueError, SessionStateError, ConvergenceError) as exc:
                raise translate(exc) from exc
            return {
                "session_id": entry.id,
                "status": s.status,
                "epoch": s.background.epoch,
                "chain": _chain_payload(s),
            }

    @app.post("/sessions/{session_id}/start")
    def post_start(session_id: str, body: CliqueRefBody):
        return _mutate(session_id, body.epoch, lambda s: s.start_chain(body.clique_id))

    @app.post("/sessions/{session_id}/extend")
    def post_extend(session_id: str, body: CliqueRefBody):
        return _mutate(session_id, body.epoch, lambda s: s.extend_chain(body.clique_id))

    @app.post("/sessions/{session_id}/finalize")
    def post_finalize(session_id: str, body: EpochBody | None = None):
        epoch = body.epoch if body else None
        return _mutate(session_id, epoch, lambda s: s.finalize_chain())

    @app.post("/sessions/{session_id}/clear")
    def post_clear(session_id: str):
        return _mutate(session_id, None, lambda s: s.clear_chain())

    # -- mining jobs ---------------------------------------------------------

    def run_mine(entry: SessionEntry, job: Job, k: int, min_score: float):
        with entry.lock:
            s = entry.session
            try:
                mined = s.auto_mine(k, min_score=min_score)
            except (SessionStateError, ConvergenceError) as exc:
                api = translate(exc)
                job.status = "failed"
                job.error = api.body()["error"]
                return
            job.result = {
                "epoch": s.background.epoch,
                "chains": [
                    {
                        **_chain_payload(s, fc.chain),
                        "scores": {str(cid): list(sc) for cid, sc in fc.scores.items()},
                        "epoch": fc.epoch,
                    }
                    for fc in mined
                ],
            }
            job.status = "done"

    @app.post("/sessions/{session_id}/mine", status_code=202)
    def post_mine(session_id: str, body: MineBody):
        if body.k < 0:
            raise ApiError(400, "invalid_payload", "k must be non-negative", where="k")
        entry = state.entry(session_id)
        with entry.lock:
            check_epoch(entry.session, body.epoch)
            if entry.session.status != "idle":
                raise ApiError(409, "state_conflict", "session is exploring a chain")
        min_score = body.min_score if body.min_score is not None else config.min_score
        job = Job(id=state.next_id("j"), session_id=session_id)
        with state._registry_lock:
            state.jobs[job.id] = job
        size = entry.session.graph.n * max(len(entry.session.cliques), 1)
        if size > config.job_threshold:
            thread = threading.Thread(
                target=run_mine, args=(entry, job, body.k, min_score), daemon=True
            )
            thread.start()
            return {"job_id": job.id, "status": job.status}
        run_mine(entry, job, body.k, min_score)
        payload = {"job_id": job.id, "status": job.status}
        if job.status == "done":
            payload.update(job.result)
        elif job.status == "failed":
            return JSONResponse(status_code=409, content={"error": job.error, "job_id": job.id})
        return payload

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "not_found", f"unknown job {job_id!r}")
        payload = {"job_id": job.id, "session_id": job.session_id, "status": job.status}
        if job.result is not None:
            payload["result"] = job.result
        if job.error is not None:
            payload["error"] = job.error
        return payload

    # -- chains & provenance -------------------------------------------------

    @app.get("/sessions/{session_id}/chains")
    def get_chains(session_id: str):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            doc = chains_to_doc(
                s.dataset_id,
                s.graph,
                [fc.chain for fc in s.finalized],
                s.clique,
                s.background.epoch,
                scores=[fc.scores for fc in s.finalized],
            )
            doc["session_id"] = entry.id
            doc["current_chain"] = _chain_payload(s)
            return doc

    @app.get("/sessions/{session_id}/provenance")
    def get_provenance(session_id: str, chain: str = "current"):
        entry = state.entry(session_id)
        with entry.lock:
            s = entry.session
            if chain == "current":
                target = s.current_chain
                if target is None:
                    raise ApiError(409, "state_conflict", "no active chain")
            else:
                try:
                    target = s.finalized[int(chain)].chain
                except (ValueError, IndexError):
                    raise ApiError(404, "not_found", f"unknown chain {chain!r}") from None
            ds = state.dataset(s.dataset_id)
            prov = ds.provenance
            entities = sorted(
                {s.graph.labels[v] for cid in target.cliques for v in s.clique(cid).vertices}
            )
            edges = []
            documents = set()
            for cid in target.cliques:
                vs = s.clique(cid).vertices
                for i, u in enumerate(vs):
                    for v in vs[i + 1:]:
                        a, b = sorted((s.graph.labels[u], s.graph.labels[v]))
                        witnesses = prov.witnesses(a, b) if prov else []
                        edges.append({
                            "pair": [a, b],
                            "witnesses": [[d, i2] for d, i2 in witnesses],
                        })
                        documents.update(d for d, _ in witnesses)
            mentions = {}
            if prov:
                mentions = {
                    e: [[d, i2] for d, i2 in prov.mentions.get(e, [])] for e in entities
                }
            return {
                "epoch": s.background.epoch,
                "entities": entities,
                "mentions": mentions,
                "edges": edges,
                "documents": sorted(documents),
            }

    # -- snapshots -----------------------------------------------------------

    @app.post("/snapshot")
    def post_snapshot():
        if not config.snapshot_dir:
            raise ApiError(409, "state_conflict", "no snapshot directory configured")
        path = state.save(config.snapshot_dir)
        return {"path": str(path), "datasets": len(state.datasets), "sessions": len(state.sessions)}

    return app
