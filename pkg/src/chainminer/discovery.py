"""Chain discovery: the greedy auto-miner and the stateful exploration session.

A session owns a background model, the dataset's maximal cliques (with cached
scores), and at most one chain under construction. Mutators follow a two-state
machine: ``idle`` (no active chain) and ``exploring`` (chain present). Cached
clique scores are keyed by the background epoch and recomputed lazily whenever
the background has moved on.

One writer per session: callers serialize start/extend/finalize/clear/auto_mine
per session. Distinct sessions are fully independent.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .graph import (
    ChainPattern,
    CliquePattern,
    Graph,
    VertexSet,
    enumerate_maximal_cliques,
    vertex_set,
)
from .maxent import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    EdgeProbabilityModel,
    build_background,
    interestingness,
    update_background,
)

__all__ = [
    "DEFAULT_MIN_SCORE",
    "DEFAULT_MIN_SIZE",
    "Candidate",
    "FinalizedChain",
    "ExplorationSession",
    "SessionStateError",
    "UnknownCliqueError",
    "create_session",
    "discover_chains",
]

# Floor on the interestingness (nats) a clique needs to seed or extend a chain
# in auto mode; operationalizes "no more chains can be formed".
DEFAULT_MIN_SCORE = 1e-3
DEFAULT_MIN_SIZE = 3


class SessionStateError(RuntimeError):
    """An operation was attempted in the wrong session state."""


class UnknownCliqueError(LookupError):
    """Referenced clique id does not exist in this session."""


@dataclass(frozen=True)
class Candidate:
    """A clique eligible to extend the current chain, with preview metadata."""

    clique: CliquePattern
    end: str  # "front" | "back"
    connector: VertexSet


@dataclass
class FinalizedChain:
    """A committed chain plus the per-clique scores it was built under.

    ``scores`` maps clique id to (score, score_epoch) captured just before the
    background update; ``epoch`` is the background version the finalization
    produced.
    """

    chain: ChainPattern
    scores: dict[int, tuple[float, int]]
    epoch: int


@dataclass
class ExplorationSession:
    dataset_id: str
    graph: Graph
    background: EdgeProbabilityModel
    cliques: list[CliquePattern]
    current_chain: ChainPattern | None = None
    finalized: list[FinalizedChain] = field(default_factory=list)
    status: str = "idle"  # "idle" | "exploring"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        self._by_id = {c.id: c for c in self.cliques}

    def clique(self, clique_id: int) -> CliquePattern:
        try:
            return self._by_id[clique_id]
        except KeyError:
            raise UnknownCliqueError(f"no clique with id {clique_id}") from None

    # -- scoring ---------------------------------------------------------

    def _refresh_scores(self) -> None:
        epoch = self.background.epoch
        for c in self.cliques:
            if c.score is None or c.score_epoch < epoch:
                c.score = interestingness(
                    self.background, self.graph, c.vertices,
                    tol=self.tol, max_iter=self.max_iter,
                )
                c.score_epoch = epoch

    def rank_cliques(self) -> list[CliquePattern]:
        """All cliques scored against the current background, best first.

        Stale cached scores are recomputed before ranking. Ties break toward
        the smaller clique id.
        """
        self._refresh_scores()
        return sorted(self.cliques, key=lambda c: (-c.score, c.id))

    # -- chain construction ----------------------------------------------

    def candidate_cliques(self) -> list[Candidate]:
        """Cliques that can extend the current chain, scored and sorted.

        A candidate shares at least one vertex with the chain's first or last
        clique and is not already part of the chain. A clique overlapping both
        ends attaches at the back.
        """
        if self.current_chain is None:
            raise SessionStateError("no active chain")
        self._refresh_scores()
        chain = self.current_chain
        in_chain = set(chain.cliques)
        first = set(self.clique(chain.cliques[0]).vertices)
        last = set(self.clique(chain.cliques[-1]).vertices)
        out = []
        for c in self.cliques:
            if c.id in in_chain:
                continue
            members = set(c.vertices)
            back = members & last
            front = members & first
            if back:
                out.append(Candidate(clique=c, end="back", connector=vertex_set(back)))
            elif front:
                out.append(Candidate(clique=c, end="front", connector=vertex_set(front)))
        out.sort(key=lambda cand: (-cand.clique.score, cand.clique.id))
        return out

    def start_chain(self, clique_id: int) -> None:
        if self.status != "idle":
            raise SessionStateError("a chain is already being explored")
        clique = self.clique(clique_id)
        self.current_chain = ChainPattern(cliques=[clique.id], connectors=[])
        self.status = "exploring"

    def extend_chain(self, clique_id: int) -> None:
        if self.current_chain is None:
            raise SessionStateError("no active chain")
        self.clique(clique_id)
        match = next(
            (cand for cand in self.candidate_cliques() if cand.clique.id == clique_id),
            None,
        )
        if match is None:
            raise SessionStateError(
                f"clique {clique_id} is not a candidate for the current chain"
            )
        chain = self.current_chain
        if match.end == "back":
            chain.cliques.append(clique_id)
            chain.connectors.append(match.connector)
        else:
            chain.cliques.insert(0, clique_id)
            chain.connectors.insert(0, match.connector)

    def finalize_chain(self) -> FinalizedChain:
        """Fold the current chain into the background and archive it.

        On fit failure the chain is retained and the background untouched.
        """
        if self.current_chain is None:
            raise SessionStateError("no active chain to finalize")
        chain = self.current_chain
        self._refresh_scores()
        scores = {
            cid: (self.clique(cid).score, self.clique(cid).score_epoch)
            for cid in chain.cliques
        }
        sets = [self.clique(cid).vertices for cid in chain.cliques]
        self.background = update_background(
            self.background, self.graph, sets, tol=self.tol, max_iter=self.max_iter
        )
        done = FinalizedChain(chain=chain, scores=scores, epoch=self.background.epoch)
        self.finalized.append(done)
        self.current_chain = None
        self.status = "idle"
        return done

    def clear_chain(self) -> None:
        """Discard the chain under construction; the background keeps whatever
        it already absorbed. No-op when idle."""
        self.current_chain = None
        self.status = "idle"

    # -- automatic discovery ----------------------------------------------

    def auto_mine(self, k: int, min_score: float = DEFAULT_MIN_SCORE) -> list[FinalizedChain]:
        """Greedy chain discovery, folding each finished chain into the model.

        Seeds with the top-ranked clique (stopping when none reaches
        ``min_score``), then repeatedly attaches the best-scoring candidate at
        either end until no candidate reaches ``min_score``. Scores are always
        measured against the background only, which moves once per finished
        chain. Deterministic given the tie-break rules.
        """
        if self.status != "idle":
            raise SessionStateError("cannot auto-mine while a chain is being explored")
        if k < 0:
            raise ValueError("k must be non-negative")
        mined: list[FinalizedChain] = []
        while len(mined) < k:
            ranked = self.rank_cliques()
            if not ranked or ranked[0].score < min_score:
                break
            self.start_chain(ranked[0].id)
            while True:
                candidates = self.candidate_cliques()
                if not candidates or candidates[0].clique.score < min_score:
                    break
                self.extend_chain(candidates[0].clique.id)
            mined.append(self.finalize_chain())
        return mined


def create_session(
    dataset_id: str,
    g: Graph,
    cliques: list[CliquePattern] | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    min_size: int = DEFAULT_MIN_SIZE,
) -> ExplorationSession:
    """Build a session: fit the background and take session-local clique copies.

    ``cliques``, when given, is a pre-enumerated list (ids are preserved);
    otherwise maximal cliques of size >= ``min_size`` are enumerated here.
    Copies keep score caching private to the session.
    """
    background = build_background(g, tol=tol, max_iter=max_iter)
    if cliques is None:
        cliques = enumerate_maximal_cliques(g, min_size=min_size)
    owned = [replace(c, score=None, score_epoch=-1) for c in cliques]
    return ExplorationSession(
        dataset_id=dataset_id,
        graph=g,
        background=background,
        cliques=owned,
        tol=tol,
        max_iter=max_iter,
    )


def discover_chains(
    g: Graph,
    k: int,
    min_score: float = DEFAULT_MIN_SCORE,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    min_size: int = DEFAULT_MIN_SIZE,
) -> list[ChainPattern]:
    """Batch entry point: background, cliques, then greedy mining of ``k`` chains."""
    session = create_session("adhoc", g, tol=tol, max_iter=max_iter, min_size=min_size)
    return [fc.chain for fc in session.auto_mine(k, min_score=min_score)]
