"""Factorized maximum-entropy edge-probability models.

The model is a product of independent Bernoulli variables, one per admissible
vertex pair: ordered pairs (u, v) with u != v for directed graphs, unordered
pairs for undirected graphs. It is fitted by iterative scaling against degree
and subgraph-density constraints, and compared by KL divergence.

All statistics (degrees, densities, KL) use ordered-pair bookkeeping: in the
undirected case the single stored variable for {u, v} stands for both
orientations, so expectations and divergences count it twice while enumeration
quantities (variable count, entropy) count it once.

Operations are value-semantic: they never mutate their input model, so a
background model may be scored against concurrently while a new fit runs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .graph import Graph, VertexSet, vertex_set, normalized_degree, subgraph_density

__all__ = [
    "EPSILON",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
    "Constraint",
    "EdgeProbabilityModel",
    "FitReport",
    "ConvergenceError",
    "ModelError",
    "degree_constraint",
    "density_constraint",
    "init_uniform_model",
    "expected_degree",
    "expected_density",
    "constraint_expectation",
    "is_update_constraint",
    "fit",
    "entropy",
    "kl_divergence",
    "interestingness",
    "build_background",
    "update_background",
    "model_to_snapshot",
    "model_from_snapshot",
    "save_snapshot",
    "load_snapshot",
]

# Probability clamp. Keeps every stored probability in [EPSILON, 1 - EPSILON]
# so the iterative-scaling step ratio is always finite.
EPSILON = 1e-9

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 1000


class ModelError(ValueError):
    """Invalid constraint or model query."""


class ConvergenceError(RuntimeError):
    """A committing fit failed to converge within the sweep budget."""

    def __init__(self, message: str, report: "FitReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class Constraint:
    """A degree or density expectation constraint.

    Degree constraints pin the expected normalized degree of one vertex in one
    direction; density constraints pin the expected ordered-pair density of a
    vertex set. Targets live in [0, 1] and must be achievable for the model's
    graph kind (validated against a concrete model at use time).
    """

    kind: str  # "degree" | "density"
    target: float
    vertex: int | None = None
    direction: str | None = None  # "in" | "out" | "undirected"
    vertices: VertexSet | None = None

    def scope_key(self):
        if self.kind == "degree":
            return ("degree", self.vertex, self.direction)
        return ("density", self.vertices)


def degree_constraint(vertex: int, direction: str, target: float) -> Constraint:
    return Constraint(kind="degree", target=float(target), vertex=vertex, direction=direction)


def density_constraint(vertices, target: float) -> Constraint:
    return Constraint(kind="density", target=float(target), vertices=vertex_set(vertices))


@dataclass(frozen=True)
class FitReport:
    sweeps: int
    max_residual: float
    converged: bool
    tol: float


@dataclass(eq=False)
class EdgeProbabilityModel:
    """Product-of-Bernoulli distribution over the space of n-vertex graphs.

    ``probs`` is an (n, n) matrix with the diagonal fixed at zero (self-loops
    carry no variable). Undirected models keep the matrix symmetric; the
    shared entry is the single variable for the unordered pair. ``epoch``
    counts committed constraint-set changes and is what invalidates cached
    pattern scores downstream.
    """

    n: int
    directed: bool
    probs: np.ndarray
    epoch: int = 0
    constraints: tuple[Constraint, ...] = ()
    fit_info: FitReport | None = None

    def copy(self) -> "EdgeProbabilityModel":
        return replace(self, probs=self.probs.copy())

    @property
    def num_variables(self) -> int:
        pairs = self.n * (self.n - 1)
        return pairs if self.directed else pairs // 2

    def same_shape(self, other: "EdgeProbabilityModel") -> bool:
        return self.n == other.n and self.directed == other.directed

    def log_odds(self) -> np.ndarray:
        """Read-only log-odds of the stored probabilities, for debugging.

        These aggregate the exponential-form parameters of every constraint
        touching a pair; the diagonal carries no variable and is zeroed.
        """
        out = np.log(self.probs.clip(EPSILON, 1.0 - EPSILON))
        out -= np.log1p(-self.probs.clip(EPSILON, 1.0 - EPSILON))
        np.fill_diagonal(out, 0.0)
        out.flags.writeable = False
        return out


def _offdiag_mask(n: int) -> np.ndarray:
    mask = np.ones((n, n), dtype=bool)
    np.fill_diagonal(mask, False)
    return mask


def _clamp(probs: np.ndarray) -> None:
    np.clip(probs, EPSILON, 1.0 - EPSILON, out=probs)
    np.fill_diagonal(probs, 0.0)


def init_uniform_model(g: Graph) -> EdgeProbabilityModel:
    """The maximally uncertain model: every admissible pair at probability 1/2."""
    n = g.n
    probs = np.full((n, n), 0.5)
    np.fill_diagonal(probs, 0.0)
    return EdgeProbabilityModel(n=n, directed=g.directed, probs=probs)


def _check_vertex(m: EdgeProbabilityModel, v: int) -> None:
    if not 0 <= v < m.n:
        raise ModelError(f"vertex index {v} out of range for n={m.n}")


def _check_direction(m: EdgeProbabilityModel, direction: str) -> None:
    if m.directed and direction not in ("in", "out"):
        raise ModelError(f"direction {direction!r} invalid for a directed model")
    if not m.directed and direction != "undirected":
        raise ModelError(f"direction {direction!r} invalid for an undirected model")


def expected_degree(m: EdgeProbabilityModel, v: int, direction: str) -> float:
    """Expected normalized degree: the mean of incident pair probabilities over n."""
    _check_vertex(m, v)
    _check_direction(m, direction)
    if direction == "in":
        return float(m.probs[:, v].sum()) / m.n
    return float(m.probs[v, :].sum()) / m.n


def expected_density(m: EdgeProbabilityModel, s) -> float:
    """Expected ordered-pair density of the vertex set ``s``."""
    s = vertex_set(s)
    if not s:
        raise ModelError("expected density of an empty vertex set is undefined")
    for v in s:
        _check_vertex(m, v)
    idx = np.asarray(s)
    block = m.probs[np.ix_(idx, idx)]
    return float(block.sum()) / len(s) ** 2


def constraint_expectation(m: EdgeProbabilityModel, c: Constraint) -> float:
    if c.kind == "degree":
        return expected_degree(m, c.vertex, c.direction)
    return expected_density(m, c.vertices)


def _max_degree_target(m: EdgeProbabilityModel) -> float:
    return (m.n - 1) / m.n if m.n else 0.0


def _validate_constraint(m: EdgeProbabilityModel, c: Constraint) -> None:
    if c.kind == "degree":
        _check_vertex(m, c.vertex)
        _check_direction(m, c.direction)
        hi = _max_degree_target(m)
        if not 0.0 <= c.target <= hi + 1e-12:
            raise ModelError(
                f"degree target {c.target} outside achievable range [0, {hi}] "
                f"for n={m.n} without self-loops"
            )
    elif c.kind == "density":
        if not c.vertices:
            raise ModelError("density constraint needs a non-empty vertex set")
        for v in c.vertices:
            _check_vertex(m, v)
        k = len(c.vertices)
        hi = (k * k - k) / (k * k)
        if not 0.0 <= c.target <= hi + 1e-12:
            raise ModelError(
                f"density target {c.target} outside achievable range [0, {hi}] "
                f"for a {k}-vertex set without self-loops"
            )
    else:
        raise ModelError(f"unknown constraint kind {c.kind!r}")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _scope(m: EdgeProbabilityModel, c: Constraint):
    """Index selector and expectation denominator for a constraint's scope.

    Returns None when the scope carries no edge variables. Degree scopes are a
    row (out/undirected) or column (in); density scopes are the s x s block.
    """
    if c.kind == "degree":
        if m.n < 2:
            return None
        if c.direction == "in":
            return (slice(None), c.vertex), m.n
        return (c.vertex, slice(None)), m.n
    idx = np.asarray(c.vertices)
    if len(idx) < 2:
        return None
    return np.ix_(idx, idx), len(idx) ** 2


def _write_scope(probs: np.ndarray, m: EdgeProbabilityModel, c: Constraint, block: np.ndarray, sel) -> None:
    """Store an updated scope block, restoring the zero diagonal and the
    symmetric mirror for undirected degree rows."""
    probs[sel] = block
    if c.kind == "degree":
        probs[c.vertex, c.vertex] = 0.0
        if not m.directed:
            probs[:, c.vertex] = probs[c.vertex, :]
    else:
        idx = np.asarray(c.vertices)
        probs[idx, idx] = 0.0


def _closed_form_step(probs: np.ndarray, m: EdgeProbabilityModel, c: Constraint) -> None:
    """One multiplicative scaling step with the closed-form step ratio.

    Multiplies the odds of every variable in the constraint's scope by
    x = target(1-h) / (h(1-target)), where h is the current expectation.
    Exact when the scope probabilities are homogeneous; otherwise it under- or
    overshoots and needs outer-loop iteration.
    """
    sc = _scope(m, c)
    if sc is None:
        return
    sel, denom = sc
    block = np.array(probs[sel])
    h = block.sum() / denom
    if h <= 0.0 or h >= 1.0:
        return
    target = min(c.target, 1.0 - EPSILON)
    x = target * (1.0 - h) / (h * (1.0 - target))
    block = x * block / (1.0 - (1.0 - x) * block)
    structural = np.array(probs[sel]) == 0.0
    np.clip(block, EPSILON, 1.0 - EPSILON, out=block)
    block[structural] = 0.0
    _write_scope(probs, m, c, block, sel)


def _projection_step(
    probs: np.ndarray,
    m: EdgeProbabilityModel,
    c: Constraint,
    damping: float = 1.0,
    pinned: np.ndarray | None = None,
) -> None:
    """Scale the scope's odds by the multiplier that meets the target exactly.

    This is the exact single-constraint I-projection: all scope variables get
    the same odds multiplier x, with x chosen (by safeguarded Newton on log x)
    so that the constraint's expectation equals its target after the step. It
    coincides with the closed-form ratio on homogeneous scopes and is the
    fixed-point no-op (x = 1) whenever the target is already met, but unlike
    the closed form it resolves saturating constraints in one visit instead of
    creeping toward the boundary.

    ``pinned`` marks variables held at a clamp by some saturating constraint;
    they contribute to the expectation as constants and are never rescaled.
    """
    sc = _scope(m, c)
    if sc is None:
        return
    sel, denom = sc
    block = np.array(probs[sel])
    valid = block > 0.0  # structural zeros (the diagonal) carry no variable
    if pinned is not None:
        pin_block = np.asarray(pinned[sel])
        fixed = valid & pin_block
        valid = valid & ~pin_block
        fixed_sum = float(block[fixed].sum())
    else:
        fixed_sum = 0.0
    vals = block[valid]
    if vals.size == 0:
        return
    s_target = min(c.target, 1.0 - EPSILON) * denom - fixed_sum
    lo, hi = vals.size * EPSILON, vals.size * (1.0 - EPSILON)
    if s_target >= hi:
        new_vals = np.full_like(vals, 1.0 - EPSILON)
    elif s_target <= lo:
        new_vals = np.full_like(vals, EPSILON)
    else:
        # Solve sum(clip(sigmoid(ell + t))) = s_target for the log-multiplier
        # t. Clipping inside the solve keeps the step exact even when some
        # scope variables sit pinned at the clamp; otherwise their clipped-off
        # mass circulates through overlapping constraints as a limit cycle.
        ell = np.log(vals) - np.log1p(-vals)
        t, t_lo, t_hi = 0.0, -80.0, 80.0
        for _ in range(100):
            sig = np.clip(_sigmoid(ell + t), EPSILON, 1.0 - EPSILON)
            err = sig.sum() - s_target
            if abs(err) <= 1e-13 * max(1.0, s_target):
                break
            if err > 0:
                t_hi = t
            else:
                t_lo = t
            interior = (sig > EPSILON) & (sig < 1.0 - EPSILON)
            slope = float((sig[interior] * (1.0 - sig[interior])).sum())
            if slope > 1e-300:
                t_next = t - err / slope
            else:
                t_next = 0.5 * (t_lo + t_hi)
            if not t_lo < t_next < t_hi:
                t_next = 0.5 * (t_lo + t_hi)
            t = t_next
        if t == 0.0:
            return  # already exact; avoid a lossy logit round-trip
        new_vals = _sigmoid(ell + damping * t)
    np.clip(new_vals, EPSILON, 1.0 - EPSILON, out=new_vals)
    block[valid] = new_vals
    _write_scope(probs, m, c, block, sel)


def is_update_constraint(m: EdgeProbabilityModel, c: Constraint) -> EdgeProbabilityModel:
    """A single iterative-scaling step for one constraint.

    Returns a new model with every variable in the constraint's scope moved by
    the closed-form multiplicative odds update x = target(1-h)/(h(1-target))
    and re-clamped; all other probabilities are untouched. Does not commit
    anything: epoch and the constraint log are unchanged.
    """
    _validate_constraint(m, c)
    probs = m.probs.copy()
    _closed_form_step(probs, m, c)
    return replace(m, probs=probs, fit_info=None)


def _effective_tol(tol: float, n: int) -> float:
    # Saturated constraints can only reach within O(EPSILON) of their target.
    return max(tol, 10.0 * EPSILON * max(n, 1))


def _sweep_order(constraints) -> list[Constraint]:
    degrees = [c for c in constraints if c.kind == "degree"]
    densities = [c for c in constraints if c.kind == "density"]
    degrees.sort(key=lambda c: c.vertex)  # stable: keeps in/out insertion order per vertex
    return degrees + densities


def _merged_constraints(old, new) -> list[Constraint]:
    """Append new constraints to the log, replacing any with the same scope."""
    merged: list[Constraint] = []
    by_key: dict = {}
    for c in list(old) + list(new):
        key = c.scope_key()
        if key in by_key:
            merged[by_key[key]] = c
        else:
            by_key[key] = len(merged)
            merged.append(c)
    return merged


def _pin_saturated(m: EdgeProbabilityModel, constraints, probs: np.ndarray) -> np.ndarray | None:
    """Fix variables that the constraint targets force onto the clamp.

    A constraint whose target sits at its achievable maximum (minimum) can
    only be met with every scope variable at 1 (0): the scope mean equals the
    extreme iff all members do. Once some variables are pinned, another
    constraint's remaining free target may itself land on the clamp floor or
    ceiling and force its free variables too, so the rule is cascaded to a
    fixpoint. Freezing these variables keeps overlapping constraints from
    endlessly circulating clipped-off mass, which otherwise leaves a
    persistent residual of order epsilon times the constraint count.
    """
    pinned = np.zeros((m.n, m.n), dtype=bool)
    any_pinned = False
    changed = True
    while changed:
        changed = False
        for c in constraints:
            sc = _scope(m, c)
            if sc is None:
                continue
            sel, denom = sc
            block = np.array(probs[sel])
            pin_block = np.array(pinned[sel])
            slots = block > 0.0
            free = slots & ~pin_block
            k_free = int(free.sum())
            if k_free == 0:
                continue
            free_target = c.target * denom - float(block[slots & pin_block].sum())
            margin = 10.0 * EPSILON * k_free
            if free_target <= k_free * EPSILON + margin:
                value = EPSILON
            elif free_target >= k_free * (1.0 - EPSILON) - margin:
                value = 1.0 - EPSILON
            else:
                continue
            block[free] = value
            pin_block |= free
            probs[sel] = block
            pinned[sel] = pin_block
            if c.kind == "degree":
                probs[c.vertex, c.vertex] = 0.0
                pinned[c.vertex, c.vertex] = False
                if not m.directed:
                    probs[:, c.vertex] = probs[c.vertex, :]
                    pinned[:, c.vertex] = pinned[c.vertex, :]
            else:
                idx = np.asarray(c.vertices)
                probs[idx, idx] = 0.0
                pinned[idx, idx] = False
            changed = True
            any_pinned = True
    return pinned if any_pinned else None


def fit(
    m: EdgeProbabilityModel,
    constraints,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damping: float = 1.0,
) -> EdgeProbabilityModel:
    """Iterative scaling over the model's constraint log plus ``constraints``.

    Sweeps every constraint (degree constraints first in vertex order, then
    density constraints in insertion order) until the worst expectation
    residual falls under the tolerance or ``max_iter`` sweeps have run. Each
    visit applies the exact odds multiplier for that constraint (see
    :func:`_projection_step`); ``damping`` in (0, 1] shrinks the log-multiplier
    for pathological constraint sets.

    On success the returned model has the new constraints appended to its log
    (same-scope constraints are replaced, not duplicated) and its epoch
    bumped. On non-convergence the attempted probabilities are still returned
    but nothing is committed; ``fit_info.converged`` is False and callers that
    need a hard guarantee should check it (the committing wrappers in this
    module raise :class:`ConvergenceError`).
    """
    if not 0.0 < damping <= 1.0:
        raise ModelError(f"damping must be in (0, 1], got {damping}")
    new = list(constraints)
    for c in new:
        _validate_constraint(m, c)
    merged = _merged_constraints(m.constraints, new)
    ordered = _sweep_order(merged)
    eff_tol = _effective_tol(tol, m.n)

    probs = m.probs.copy()

    def worst_residual(pr: np.ndarray) -> float:
        work = replace(m, probs=pr)
        return max(
            (abs(constraint_expectation(work, c) - c.target) for c in ordered),
            default=0.0,
        )

    pinned = _pin_saturated(m, ordered, probs)

    def sweep(pr: np.ndarray) -> None:
        for c in ordered:
            _projection_step(pr, m, c, damping=damping, pinned=pinned)

    mask = _offdiag_mask(m.n)
    if pinned is not None:
        mask &= ~pinned
    logit_lo = math.log(EPSILON) - math.log1p(-EPSILON)

    def extrapolate(p0: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray | None:
        """Aitken-style vector extrapolation of three consecutive sweep states
        in log-odds space. Cuts through the harmonic tail the sweeps develop
        when the solution sits on the probability box boundary; the fixed
        point itself is untouched because candidates are re-swept and only
        kept when they strictly reduce the residual."""
        t0 = np.log(p0[mask]) - np.log1p(-p0[mask])
        t1 = np.log(p1[mask]) - np.log1p(-p1[mask])
        t2 = np.log(p2[mask]) - np.log1p(-p2[mask])
        r = t1 - t0
        v = (t2 - t1) - r
        vnorm = float(np.linalg.norm(v))
        if vnorm < 1e-14:
            return None
        alpha = min(-float(np.linalg.norm(r)) / vnorm, -1.0)
        te = np.clip(t0 - 2.0 * alpha * r + alpha * alpha * v, logit_lo, -logit_lo)
        cand = p2.copy()  # keeps pinned entries and the zero diagonal
        cand[mask] = _sigmoid(te)
        return cand

    # Convergence is checked before each pass, so a fit whose constraints are
    # already satisfied returns its input probabilities untouched.
    sweeps = 0
    residual = worst_residual(probs)
    converged = residual <= eff_tol
    history: list[np.ndarray] = []
    while sweeps < max_iter and not converged:
        history.append(probs.copy())
        sweeps += 1
        sweep(probs)
        residual = worst_residual(probs)
        converged = residual <= eff_tol
        if converged or len(history) < 2 or sweeps >= max_iter:
            continue
        cand = extrapolate(history[-2], history[-1], probs)
        history.clear()
        if cand is None:
            continue
        sweeps += 1
        sweep(cand)
        cand_residual = worst_residual(cand)
        if cand_residual < residual:
            probs[...] = cand
            residual = cand_residual
            converged = residual <= eff_tol
    report = FitReport(sweeps=sweeps, max_residual=residual, converged=converged, tol=eff_tol)
    if not converged:
        return replace(m, probs=probs, fit_info=report)
    return replace(
        m,
        probs=probs,
        constraints=tuple(merged),
        epoch=m.epoch + 1,
        fit_info=report,
    )


def entropy(m: EdgeProbabilityModel) -> float:
    """Model entropy in nats: the sum of per-variable Bernoulli entropies."""
    p = m.probs[_offdiag_mask(m.n)]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -p * np.log(p) - (1.0 - p) * np.log(1.0 - p)
    terms = np.nan_to_num(terms, nan=0.0, posinf=0.0, neginf=0.0)
    total = float(terms.sum())
    return total if m.directed else total / 2.0


def kl_divergence(p: EdgeProbabilityModel, q: EdgeProbabilityModel) -> float:
    """KL(p || q) in nats between two models of the same shape.

    Factorizes over edge variables with ordered-pair bookkeeping: for
    undirected models the symmetric storage already counts the unordered
    variable once per orientation.
    """
    if not p.same_shape(q):
        raise ModelError(
            f"model shapes differ: n={p.n} directed={p.directed} "
            f"vs n={q.n} directed={q.directed}"
        )
    mask = _offdiag_mask(p.n)
    a = p.probs[mask]
    b = q.probs[mask]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = a * np.log(a / b) + (1.0 - a) * np.log((1.0 - a) / (1.0 - b))
    terms = np.nan_to_num(terms, nan=0.0)
    return float(terms.sum())


def interestingness(
    background: EdgeProbabilityModel,
    g: Graph,
    s,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Information the subgraph ``s`` carries beyond the background model.

    Fits a fresh model from a copy of the background with one added density
    constraint (target = the observed density of ``s``) and returns the KL
    divergence from that model to the background. The background itself is
    never modified. Warm-starting from the background is sound because the
    fixed point is determined by the constraint set alone.
    """
    s = vertex_set(s)
    observed = subgraph_density(g, s)
    augmented = fit(background, [density_constraint(s, observed)], tol=tol, max_iter=max_iter)
    if not augmented.fit_info.converged:
        raise ConvergenceError(
            f"interestingness fit for {s} did not converge within "
            f"{max_iter} sweeps (residual {augmented.fit_info.max_residual:.3e})",
            augmented.fit_info,
        )
    return kl_divergence(augmented, background)


def build_background(
    g: Graph,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EdgeProbabilityModel:
    """Fit the background model to the observed normalized vertex degrees.

    Directed graphs constrain both in- and out-degrees; undirected graphs one
    degree per vertex. The returned model is the epoch-0 baseline that all
    pattern scores are measured against.
    """
    m = init_uniform_model(g)
    constraints = []
    for v in range(g.n):
        if g.directed:
            constraints.append(degree_constraint(v, "in", normalized_degree(g, v, "in")))
            constraints.append(degree_constraint(v, "out", normalized_degree(g, v, "out")))
        else:
            constraints.append(
                degree_constraint(v, "undirected", normalized_degree(g, v, "undirected"))
            )
    fitted = fit(m, constraints, tol=tol, max_iter=max_iter)
    if not fitted.fit_info.converged:
        raise ConvergenceError(
            f"background fit did not converge within {max_iter} sweeps "
            f"(residual {fitted.fit_info.max_residual:.3e})",
            fitted.fit_info,
        )
    # The freshly built background is the baseline version.
    return replace(fitted, epoch=0)


def update_background(
    background: EdgeProbabilityModel,
    g: Graph,
    cliques,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> EdgeProbabilityModel:
    """Fold discovered patterns into the background model.

    Refits with the union of the existing constraint log and one density
    constraint per clique (target = its observed density), bumping the epoch
    so cached scores elsewhere become stale. Afterwards each folded clique
    carries (near) zero information against the new background, which is the
    redundancy-suppression mechanism.
    """
    new = [density_constraint(s, subgraph_density(g, s)) for s in cliques]
    updated = fit(background, new, tol=tol, max_iter=max_iter)
    if not updated.fit_info.converged:
        raise ConvergenceError(
            f"background update did not converge within {max_iter} sweeps "
            f"(residual {updated.fit_info.max_residual:.3e})",
            updated.fit_info,
        )
    return updated


# --- snapshot format ---------------------------------------------------------
#
# A JSON document with the probability vector in canonical pair order:
# directed models list (u, v) row-major over u then v skipping u == v;
# undirected models list (u, v) with u < v. Floats round-trip bit-exactly
# through repr.

SNAPSHOT_VERSION = 1


def _canonical_pairs(n: int, directed: bool):
    if directed:
        return [(u, v) for u in range(n) for v in range(n) if u != v]
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def _constraint_to_dict(c: Constraint) -> dict:
    if c.kind == "degree":
        return {"kind": "degree", "vertex": c.vertex, "direction": c.direction,
                "target": c.target}
    return {"kind": "density", "vertices": list(c.vertices), "target": c.target}


def _constraint_from_dict(d: dict) -> Constraint:
    if d["kind"] == "degree":
        return degree_constraint(d["vertex"], d["direction"], d["target"])
    if d["kind"] == "density":
        return density_constraint(d["vertices"], d["target"])
    raise ModelError(f"unknown constraint kind {d.get('kind')!r} in snapshot")


def model_to_snapshot(m: EdgeProbabilityModel) -> dict:
    return {
        "format_version": SNAPSHOT_VERSION,
        "n": m.n,
        "directed": m.directed,
        "epsilon": EPSILON,
        "epoch": m.epoch,
        "constraints": [_constraint_to_dict(c) for c in m.constraints],
        "probs": [float(m.probs[u, v]) for u, v in _canonical_pairs(m.n, m.directed)],
    }


def model_from_snapshot(doc: dict) -> EdgeProbabilityModel:
    if doc.get("format_version") != SNAPSHOT_VERSION:
        raise ModelError(f"unsupported snapshot format_version {doc.get('format_version')!r}")
    n = int(doc["n"])
    directed = bool(doc["directed"])
    pairs = _canonical_pairs(n, directed)
    values = doc["probs"]
    if len(values) != len(pairs):
        raise ModelError(
            f"snapshot probability vector has {len(values)} entries, expected {len(pairs)}"
        )
    probs = np.zeros((n, n))
    for (u, v), value in zip(pairs, values):
        probs[u, v] = value
        if not directed:
            probs[v, u] = value
    return EdgeProbabilityModel(
        n=n,
        directed=directed,
        probs=probs,
        epoch=int(doc["epoch"]),
        constraints=tuple(_constraint_from_dict(d) for d in doc["constraints"]),
    )


def save_snapshot(m: EdgeProbabilityModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_snapshot(m), fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def load_snapshot(path) -> EdgeProbabilityModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_snapshot(json.load(fh))
