"""Acceptance suite: one test per release criterion, each at its stated
tolerance, printing one PASS line per criterion (run with -s to see them)."""
import json
import math
import random
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from hypothesis import given, settings, strategies as st

from chainminer.cli import main as cli_main
from chainminer.discovery import SessionStateError, create_session
from chainminer.graph import enumerate_maximal_cliques, subgraph_density
from chainminer.maxent import (
    build_background,
    density_constraint,
    expected_degree,
    expected_density,
    fit,
    init_uniform_model,
    interestingness,
    update_background,
)
from chainminer.service import ServiceConfig, create_app

from util import (
    PLANTED_CLIQUES,
    brute_force_maximal_cliques,
    degree_density_system,
    index_graph,
    planted_chain_graph,
    projected_gradient_maxent,
    random_graph,
)

GOLDEN_EDGE_LIST = (
    "Ana Beltran\tMeridian Star\n"
    "Ana Beltran\tTheodore Quinn\n"
    "Basilica\tNadia Rahal\n"
    "Basilica\tOmar Haddad\n"
    "Castellan Imports\tPorto\n"
    "Castellan Imports\tTheodore Quinn\n"
    "Elena Vargas\tLisbon\n"
    "Elena Vargas\tOmar Haddad\n"
    "Elena Vargas\tTheodore Quinn\n"
    "Lisbon\tMeridian Star\n"
    "Lisbon\tOmar Haddad\n"
    "Lisbon\tTheodore Quinn\n"
    "Meridian Star\tOmar Haddad\n"
    "Meridian Star\tTheodore Quinn\n"
    "Nadia Rahal\tOmar Haddad\n"
)


def report(criterion: str) -> None:
    print(f"\n[PASS] {criterion}")


def test_is_convergence_and_speed():
    """fit() meets every degree target within 1e-4 on random directed graphs
    with n in {10, 50, 200}; the n=200 fit finishes within 10 s."""
    for n, seed in ((10, 101), (50, 102), (200, 103)):
        rng = random.Random(seed)
        g = random_graph(n, 0.5, rng, directed=True)
        started = time.perf_counter()
        m = build_background(g, tol=1e-4)
        elapsed = time.perf_counter() - started
        assert m.fit_info.converged
        for v in range(n):
            for direction in ("in", "out"):
                observed = len(g.neighbors(v, direction)) / n
                assert abs(expected_degree(m, v, direction) - observed) <= 1e-4
        if n == 200:
            assert elapsed <= 10.0, f"n=200 fit took {elapsed:.2f}s"
    report("IS convergence & speed: residuals <= 1e-4 at n=10/50/200, n=200 within 10 s")


def _interior_directed_graph(rng):
    while True:
        g = random_graph(4, 0.5, rng, directed=True)
        degrees = [len(g.neighbors(v, d)) for v in range(4) for d in ("in", "out")]
        if all(1 <= d <= 2 for d in degrees):
            return g


def test_maxent_oracle_equivalence():
    """Fitted edge marginals match projected-gradient entropy maximization
    within 1e-3 per edge on 50 random n=4 instances, with degree constraints
    alone and with one added density constraint."""
    rng = random.Random(2024)
    for instance in range(50):
        g = _interior_directed_graph(rng)
        density_sets = []
        if instance % 2 == 1:
            size = rng.choice([2, 3])
            density_sets = [tuple(sorted(rng.sample(range(4), size)))]
        # Default-tolerance residuals (1e-6) leave the marginals far inside
        # the 1e-3 comparison band; tighter demands would fall below the
        # epsilon-clamp noise floor on instances whose constraints force
        # probabilities onto the boundary.
        m = build_background(g)
        if density_sets:
            s = density_sets[0]
            m = fit(m, [density_constraint(s, subgraph_density(g, s))])
            assert m.fit_info.converged
        A, b, pairs = degree_density_system(g, density_sets=density_sets)
        oracle = projected_gradient_maxent(A, b, len(pairs))
        for i, (u, v) in enumerate(pairs):
            assert abs(m.probs[u, v] - oracle[i]) <= 1e-3, (
                f"instance {instance}: pair ({u},{v}) IS={m.probs[u, v]:.6f} "
                f"oracle={oracle[i]:.6f}"
            )
    report("MaxEnt oracle equivalence: 50 n=4 instances within 1e-3 per edge")


def test_clique_oracle_equivalence():
    """enumerate_maximal_cliques equals brute-force subset enumeration on 100
    random graphs with n <= 12."""
    for seed in range(100):
        rng = random.Random(seed)
        n = rng.randint(4, 12)
        p = rng.uniform(0.15, 0.85)
        min_size = rng.choice([1, 2, 3])
        g = random_graph(n, p, rng)
        ours = {c.vertices for c in enumerate_maximal_cliques(g, min_size=min_size)}
        assert ours == brute_force_maximal_cliques(g, min_size=min_size)
    report("Clique oracle equivalence: 100 random graphs (n <= 12) match brute force")


def test_interestingness_axioms():
    """Zero score iff the observed density matches the background expectation
    (tolerance 1e-9); positive otherwise; low-degree cliques outrank
    equally-sized high-degree cliques."""
    # Zero case 1: uniform background, observed density equals expectation.
    g = index_graph(4, [(0, 1), (1, 2), (2, 3)])
    m = init_uniform_model(g)
    assert expected_density(m, range(4)) == pytest.approx(subgraph_density(g, range(4)))
    assert abs(interestingness(m, g, range(4))) <= 1e-9

    # Zero case 2: degree-fitted background on a regular directed cycle.
    cycle = index_graph(4, [(i, (i + 1) % 4) for i in range(4)], directed=True)
    bg = build_background(cycle)
    assert abs(interestingness(bg, cycle, range(4))) <= 1e-9

    # Positive whenever observed and expected densities differ.
    chord = index_graph(6, [(i, (i + 1) % 6) for i in range(6)] + [(0, 2)])
    bg2 = build_background(chord)
    assert interestingness(bg2, chord, (0, 1, 2)) > 0.0
    spread = index_graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)])
    bg3 = build_background(spread)
    assert interestingness(bg3, spread, (0, 1, 2)) > 0.0

    # Hub vs periphery: same clique size, lower-degree members score higher.
    edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]
    spoke = 6
    for hub in (0, 1, 2):
        for _ in range(4):
            edges.append((hub, spoke))
            spoke += 1
    hubby = index_graph(spoke, edges)
    bg4 = build_background(hubby)
    hub_score = interestingness(bg4, hubby, (0, 1, 2))
    periphery_score = interestingness(bg4, hubby, (3, 4, 5))
    assert periphery_score > hub_score
    report(
        "Interestingness axioms: zero at matched density (<= 1e-9), positive "
        "otherwise, periphery clique above hub clique"
    )


def test_redundancy_suppression():
    """After a chain is finalized, every clique in it re-scores <= 1e-6."""
    for seed in (0, 7, 13):
        g = planted_chain_graph(seed)
        session = create_session("fixture", g, min_size=3)
        before = {c.id: c.score for c in session.rank_cliques()}
        mined = session.auto_mine(1, min_score=5.0)
        assert mined
        chain = mined[0].chain
        assert len(chain.cliques) >= 2
        for cid in chain.cliques:
            assert before[cid] > 0
            rescored = interestingness(
                session.background, g, session.clique(cid).vertices
            )
            assert rescored <= 1e-6, f"seed {seed}: clique {cid} rescored {rescored}"
    report("Redundancy suppression: finalized cliques re-score <= 1e-6")


def test_planted_chain_recovery():
    """discover_chains(k=1) on the 60-vertex planted fixture returns exactly
    the five planted 4-cliques in path order for >= 19/20 seeds, each run
    within 5 s."""
    want = [tuple(c) for c in PLANTED_CLIQUES]
    successes = 0
    slowest = 0.0
    for seed in range(20):
        started = time.perf_counter()
        g = planted_chain_graph(seed)
        session = create_session("planted", g, min_size=4)
        mined = session.auto_mine(1)
        elapsed = time.perf_counter() - started
        slowest = max(slowest, elapsed)
        assert elapsed <= 5.0, f"seed {seed} took {elapsed:.2f}s"
        if len(mined) == 1:
            got = [session.clique(cid).vertices for cid in mined[0].chain.cliques]
            if got == want or got == want[::-1]:
                successes += 1
    assert successes >= 19, f"only {successes}/20 seeds recovered the planted chain"
    report(
        f"Planted-chain recovery: {successes}/20 seeds exact, slowest {slowest:.2f}s"
    )


def test_ingestion_determinism(tmp_path, capsys):
    """The fixture corpus ingests to the golden entity graph byte-identically."""
    from pathlib import Path

    fixture = Path(__file__).resolve().parent.parent / "data" / "fixture_corpus.json"
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        code = cli_main(["ingest", "--input", str(fixture), "--output", str(out)])
        capsys.readouterr()
        assert code == 0
        outputs.append({
            name: (out / name).read_bytes()
            for name in ("graph.json", "provenance.json", "graph.tsv")
        })
    assert outputs[0] == outputs[1]
    assert outputs[0]["graph.tsv"].decode("utf-8") == GOLDEN_EDGE_LIST
    report("Ingestion determinism: fixture corpus matches the golden graph byte-for-byte")


ACTIONS = st.lists(
    st.sampled_from(["start", "extend", "finalize", "clear"]), min_size=1, max_size=10
)


@given(ACTIONS, st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_session_state_machine_engine(actions, seed):
    """Random legal/illegal action sequences respect the idle/exploring rules."""
    rng = random.Random(seed)
    g = index_graph(7, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4),
                        (4, 5), (5, 6), (4, 6)])
    session = create_session("sm", g)
    exploring = False
    for action in actions:
        if action == "start":
            cid = rng.choice(session.cliques).id
            if exploring:
                with pytest.raises(SessionStateError):
                    session.start_chain(cid)
            else:
                session.start_chain(cid)
                exploring = True
        elif action == "extend":
            if not exploring:
                with pytest.raises(SessionStateError):
                    session.extend_chain(0)
            else:
                cands = session.candidate_cliques()
                if cands:
                    session.extend_chain(rng.choice(cands).clique.id)
                else:
                    with pytest.raises(SessionStateError):
                        session.extend_chain(session.cliques[0].id)
        elif action == "finalize":
            if exploring:
                session.finalize_chain()
                exploring = False
            else:
                with pytest.raises(SessionStateError):
                    session.finalize_chain()
        else:
            session.clear_chain()
            exploring = False
        assert session.status == ("exploring" if exploring else "idle")


def test_session_state_machine_and_epoch_guard_over_api():
    """The same transition rules hold through the HTTP surface, and stale
    epochs are rejected with an epoch conflict."""
    from pathlib import Path

    fixture = Path(__file__).resolve().parent.parent / "data" / "fixture_corpus.json"
    client = TestClient(create_app(ServiceConfig()))
    payload = json.loads(fixture.read_text())
    ds = client.post("/datasets", json=payload).json()["id"]
    s = client.post("/sessions", json={"dataset_id": ds}).json()["session_id"]

    rng = random.Random(7)
    exploring = False
    epoch = 0
    for _ in range(60):
        action = rng.choice(["start", "extend", "finalize", "clear", "stale"])
        ranked = client.get(f"/sessions/{s}/ranked").json()["cliques"]
        if action == "stale":
            r = client.post(
                f"/sessions/{s}/start",
                json={"clique_id": ranked[0]["id"], "epoch": epoch + 1},
            )
            assert r.status_code == 409
            assert r.json()["error"]["code"] == "epoch_conflict"
        elif action == "start":
            r = client.post(f"/sessions/{s}/start", json={"clique_id": ranked[0]["id"],
                                                          "epoch": epoch})
            assert r.status_code == (409 if exploring else 200)
            exploring = exploring or r.status_code == 200
        elif action == "extend":
            if exploring:
                cands = client.get(f"/sessions/{s}/candidates").json()["candidates"]
                if cands:
                    r = client.post(f"/sessions/{s}/extend",
                                    json={"clique_id": cands[0]["id"], "epoch": epoch})
                    assert r.status_code == 200
            else:
                r = client.post(f"/sessions/{s}/extend", json={"clique_id": 0})
                assert r.status_code == 409
        elif action == "finalize":
            r = client.post(f"/sessions/{s}/finalize")
            if exploring:
                assert r.status_code == 200
                epoch = r.json()["epoch"]
                exploring = False
            else:
                assert r.status_code == 409
        else:
            assert client.post(f"/sessions/{s}/clear").status_code == 200
            exploring = False
        state = client.get(f"/sessions/{s}").json()
        assert state["status"] == ("exploring" if exploring else "idle")
        assert state["epoch"] == epoch
    report(
        "Session state machine: idle/exploring transitions and epoch-guard "
        "conflicts hold through the engine and the API"
    )
