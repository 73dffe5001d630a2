"""Optimal-policy extraction, least favorable distribution, evaluation.

From a solved :class:`~npkw.bellman.CostTable` this module materializes the
optimal randomized sequential test together with the adversary's least
favorable distribution (LFD) as one tree of :class:`PolicyNode` records, one
per observable history:

* ``p_continue`` — probability the test takes another sample at this node
  (1 strictly inside the continuation region, 0 strictly inside the stopping
  region, and the exact randomization weight at threshold kinks);
* ``decision`` — which hypothesis is accepted when stopping here;
* ``lfd_probs`` — the adversary's conditional PMF for the next symbol,
  read off the sup-convolution split of the node's likelihood z0;
* ``e_enter`` / ``e_continue`` — integer labels: the expected number of
  remaining samples on entering the node, and conditional on continuing.
  Their ratio is exactly ``p_continue``.

The labels obey an equalization law: every child reached with positive LFD
probability carries the same ``e_enter``, equal to the parent's continuation
slope c, and ``e_continue = 1 + c``.  The continuation slope is the right
derivative of the node's sup-convolution slice at its z0 (linearly extended
at the right edge — the reading consistent with the subtree's actual
conditional expectations when a child is consumed to its full domain).
Extraction validates these laws and raises :class:`ExtractionError` on any
inconsistency rather than patching over it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import Decimal, localcontext
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional

from .bellman import CostTable, DesignState, NominalModel, child_counts
from .pwl import RationalLike, rat, slope_left, slope_right, split_at, superdiff


class Decision(Enum):
    """Terminal decision at a stopping node."""

    H1 = "H1"
    H2 = "H2"
    RANDOMIZED = "randomized"  # likelihoods tie exactly: fair coin


class ExtractionError(ValueError):
    """The cost table and the policy laws disagree — a genuine bug upstream."""


@dataclass
class PolicyNode:
    """One observable history in the extracted design.

    ``decision`` is None while continuing for sure; ``e_continue``,
    ``lfd_probs`` and ``children`` are None at sure-stop nodes.  A node with
    ``p_continue > 0`` but ``children is None`` only occurs in display trees
    cut at a depth limit; evaluation rejects such trees.

    ``sure_stop_state`` records a fact about the *state*, not the extracted
    behaviour: the canonical design stops here for every positive adversary
    mass (the continuation value already matches the stopping cost at zero).
    A node entered with zero mass but a positive promise keeps continuing —
    cost-free, because of that exact tie — so the flag and ``p_continue``
    may disagree.
    """

    state: DesignState
    z0: Fraction
    e_enter: int
    e_continue: Optional[int]
    p_continue: Fraction
    decision: Optional[Decision]
    lfd_probs: Optional[tuple[Fraction, ...]]
    children: Optional[tuple["PolicyNode", ...]]
    sure_stop_state: bool = False

    @property
    def depth(self) -> int:
        return self.state.depth


def _stop_decision(state: DesignState, model: NominalModel) -> Decision:
    lhs = model.lam1 * state.z1
    rhs = model.lam2 * state.z2
    if lhs > rhs:
        return Decision.H1
    if lhs < rhs:
        return Decision.H2
    return Decision.RANDOMIZED


def _stop_node(state: DesignState, z0: Fraction, model: NominalModel,
               promised: Optional[int], sure_state: bool) -> PolicyNode:
    if promised not in (None, 0):
        raise ExtractionError(
            f"state {state.counts}: parent promises {promised} remaining "
            "samples to a node that stops surely"
        )
    return PolicyNode(
        state=state, z0=z0, e_enter=0, e_continue=None,
        p_continue=Fraction(0), decision=_stop_decision(state, model),
        lfd_probs=None, children=None, sure_stop_state=sure_state,
    )


def extract_tree(table: CostTable, max_depth: Optional[int] = None) -> PolicyNode:
    """Materialize the optimal policy / LFD tree from a solved cost table.

    ``max_depth`` (relative to the root) cuts the tree for display; the
    returned nodes keep exact labels but nodes at the cut carry
    ``children = None`` even where they continue.  Verification and
    evaluation need the full tree (``max_depth=None``).

    The root enters unconditionally; its ``e_enter`` is the right derivative
    of the root cost slice at z0 = 1 — the smallest expected sample size
    consistent with optimality.  Inside the tree each node's label is the
    parent's promise c; a hard :class:`ExtractionError` is raised whenever a
    promise falls outside the child's superdifferential (the equalization
    law would be violated, meaning the table is inconsistent).
    """
    model = table.model
    root_counts = (0,) * model.alphabet_size
    # Zero-mass subtrees depend only on (counts, promise); sharing them turns
    # the materialized tree into a DAG and keeps full extraction linear in
    # the number of distinct histories.  Display cuts are depth-relative, so
    # sharing is only safe on full extractions.
    memo: Optional[dict] = {} if max_depth is None else None
    return _extract(table, model, root_counts, Fraction(1), None, max_depth, 0,
                    memo)


def _extract(
    table: CostTable,
    model: NominalModel,
    counts: tuple[int, ...],
    z0: Fraction,
    promised: Optional[int],
    max_depth: Optional[int],
    rel_depth: int,
    memo: Optional[dict] = None,
) -> PolicyNode:
    share = memo is not None and z0 == 0
    if share:
        cached = memo.get((counts, promised))
        if cached is not None:
            return cached
    node = _extract_node(table, model, counts, z0, promised, max_depth,
                         rel_depth, memo)
    if share:
        memo[(counts, promised)] = node
    return node


def _extract_node(
    table: CostTable,
    model: NominalModel,
    counts: tuple[int, ...],
    z0: Fraction,
    promised: Optional[int],
    max_depth: Optional[int],
    rel_depth: int,
    memo: Optional[dict],
) -> PolicyNode:
    state = table.states[counts]
    if state.depth == model.horizon:
        return _stop_node(state, z0, model, promised, True)

    z0_star = table.z0_star[counts]
    sure_state = z0_star == 0  # stopping already matches continuing at zero mass
    d_slice = table.d[counts]

    if z0 > 0:
        if z0_star is not None and z0 > z0_star:
            return _stop_node(state, z0, model, promised, sure_state)
        # Continuing is optimal (strictly below the kink) or tied (at it).
        # The equalized continuation slope c may sit anywhere in the
        # superdifferential of the continuation slice at z0; the right
        # derivative is the canonical smallest choice, and a parent's
        # promise pins the choice instead where one exists.
        d_right = slope_right(d_slice, z0)  # linear extension at the edge
        d_left = slope_left(d_slice, z0)
        if z0_star is not None and z0 == z0_star:
            # stopping weight is free at the kink; the promise pins it
            e_enter = 0 if promised is None else promised
            if e_enter == 0:
                return _stop_node(state, z0, model, None, sure_state)
            c = max(d_right, e_enter - 1)
            if c > d_left:
                raise ExtractionError(
                    f"state {counts}: promise {e_enter} needs continuation "
                    f"slope {e_enter - 1}, outside [{d_right}, {d_left}]"
                )
        else:
            if promised is None:
                c = d_right
            else:
                c = promised - 1
                if not d_right <= c <= d_left:
                    raise ExtractionError(
                        f"state {counts}: sure-continue promise {promised} "
                        f"needs slope {c}, outside [{d_right}, {d_left}]"
                    )
            e_enter = 1 + c
    else:
        # Zero adversary mass: the least favorable distribution never comes
        # here, so stopping and continuing cost the same (the continuation
        # value ties the stopping cost at z0 = 0 whenever stopping is
        # optimal).  The node keeps the parent's promise alive so that the
        # expected sample size stays equalized along *every* symbol path,
        # not just the positively-weighted ones.
        if promised is None or promised == 0:
            return _stop_node(state, z0, model, promised, sure_state)
        e_enter = promised
        c = max(slope_right(d_slice, Fraction(0)), e_enter - 1)

    e_continue = 1 + c
    if not 0 <= e_enter <= e_continue:
        raise ExtractionError(
            f"state {counts}: entry label {e_enter} outside [0, {e_continue}]"
        )
    # the entry label must be a supergradient of the node's own cost slice
    # (unbounded above at the left endpoint of the domain)
    rho_sd = superdiff(table.rho[counts], z0)
    contained = (e_enter >= rho_sd.lo) if z0 == 0 \
        else (rho_sd.lo <= e_enter <= rho_sd.hi)
    if not contained:
        raise ExtractionError(
            f"state {counts}: e_enter {e_enter} outside the superdifferential "
            f"[{rho_sd.lo}, {rho_sd.hi}] of the cost slice at z0 = {z0}"
        )

    p_continue = Fraction(e_enter, e_continue)
    decision = None if p_continue == 1 else _stop_decision(state, model)

    alloc = split_at(table.split[counts], z0)
    if z0 > 0:
        lfd = tuple(a / z0 for a in alloc)
    else:
        # limiting allocation direction as z0 -> 0+: the merge's first slope
        # class, shared in proportion to segment widths (uniform when every
        # child slice is flat and the split is wholly indifferent)
        entries = table.split[counts].entries
        weights = [Fraction(0)] * model.alphabet_size
        total = Fraction(0)
        for op, slope, width in entries:
            if slope != entries[0][1]:
                break
            weights[op] += width
            total += width
        if total == 0:
            lfd = tuple(
                Fraction(1, model.alphabet_size)
                for _ in range(model.alphabet_size)
            )
        else:
            lfd = tuple(w / total for w in weights)

    children: Optional[tuple[PolicyNode, ...]]
    if max_depth is not None and rel_depth >= max_depth:
        children = None
    else:
        # equalization: every child is promised c, weighted or not
        children = tuple(
            _extract(table, model, child_counts(counts, x), alloc[x], c,
                     max_depth, rel_depth + 1, memo)
            for x in range(model.alphabet_size)
        )

    return PolicyNode(
        state=state, z0=z0, e_enter=e_enter, e_continue=e_continue,
        p_continue=p_continue, decision=decision, lfd_probs=lfd,
        children=children, sure_stop_state=sure_state,
    )


# ---------------------------------------------------------------------------
# tree walks
# ---------------------------------------------------------------------------

def iter_nodes(root: PolicyNode) -> Iterator[PolicyNode]:
    """Preorder traversal of the virtual tree (shared subtrees re-yielded
    once per occurrence — see :func:`iter_unique_nodes`)."""
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        if node.children:
            stack.extend(reversed(node.children))


def iter_unique_nodes(root: PolicyNode) -> Iterator[PolicyNode]:
    """Each distinct node object once.  Full extraction shares zero-mass
    subtrees (they depend only on state and promise), so the materialized
    structure is a DAG; node-local queries should walk it this way."""
    seen: set[int] = set()
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        if node.children:
            stack.extend(reversed(node.children))


def _by_depth(root: PolicyNode) -> list[PolicyNode]:
    """Unique nodes in nondecreasing depth order (a topological order: every
    parent sits strictly above its children)."""
    return sorted(iter_unique_nodes(root), key=lambda n: n.depth)


def _require_full(root: PolicyNode) -> None:
    for node in iter_unique_nodes(root):
        if node.p_continue > 0 and node.children is None:
            raise ValueError(
                "tree was cut at a display depth limit; rebuild it with "
                "max_depth=None for evaluation"
            )


def max_conditional_remaining(root: PolicyNode) -> int:
    """Largest e_continue over randomized nodes (0 < p_continue < 1): the
    worst expected remaining sample size conditional on continuing at a
    genuine stop-or-continue coin flip.  0 when nothing randomizes."""
    best = 0
    for node in iter_unique_nodes(root):
        if node.e_continue is not None and 0 < node.p_continue < 1:
            best = max(best, node.e_continue)
    return best


def lfd_range(root: PolicyNode, symbol: int = 1) -> tuple[Fraction, Fraction]:
    """Range of the least favorable probability of ``symbol`` over nodes the
    adversary actually randomizes at.

    Nodes with z0 = 0 never occur under the least favorable distribution and
    carry a limiting-direction convention rather than a real conditional
    law; transition probabilities of exactly 0 or 1 mark branches the
    adversary abandons because the next sample surely ends the test there.
    Both are excluded — the range covers the genuine randomized transitions.
    """
    lo: Optional[Fraction] = None
    hi: Optional[Fraction] = None
    for node in iter_unique_nodes(root):
        if node.lfd_probs is None or node.p_continue == 0 or node.z0 == 0:
            continue
        v = node.lfd_probs[symbol]
        if not 0 < v < 1:
            continue
        lo = v if lo is None else min(lo, v)
        hi = v if hi is None else max(hi, v)
    if lo is None:
        raise ValueError("empty tree: no randomized transitions to range over")
    return lo, hi


def find_node(root: PolicyNode, symbols: tuple[int, ...]) -> PolicyNode:
    """Follow a symbol path from the root; raises KeyError off the tree."""
    node = root
    for x in symbols:
        if node.children is None:
            raise KeyError(f"path {symbols} leaves the materialized tree")
        node = node.children[x]
    return node


# ---------------------------------------------------------------------------
# exact evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    """Exact performance of the design under an i.i.d. probe distribution.

    ``expected_sample_size`` and ``stop_time_pmf`` are under the probe;
    ``alpha1`` = P(accept H2 | data ~ P1) and ``alpha2`` = P(accept H1 |
    data ~ P2) do not depend on the probe — they are recomputed on the same
    walk from the per-state likelihoods and reported alongside.
    """

    probe: tuple[Fraction, ...]
    expected_sample_size: Fraction
    alpha1: Fraction
    alpha2: Fraction
    stop_time_pmf: tuple[tuple[int, Fraction], ...]


def evaluate(root: PolicyNode, probe: list[RationalLike]) -> EvalReport:
    """Exact forward accounting of the design against an i.i.d. probe.

    The probe is a PMF over the alphabet (degenerate entries allowed).  The
    stopping randomizations are independent of the data, so the walk carries
    the probe likelihood and the survival product separately.
    """
    k = len(root.state.counts)
    pmf = tuple(rat(v) for v in probe)
    if len(pmf) != k or any(v < 0 for v in pmf) or sum(pmf) != 1:
        raise ValueError("probe must be a PMF over the model alphabet")

    _, alpha1, alpha2, cont_w, stop_w = _eval_base(root)

    # Every history reaching a state has the same probe likelihood (it is a
    # function of the symbol counts alone), so the probe-independent
    # survival aggregates cached per count vector contract the whole walk
    # to one term per reachable count class.
    def mono(counts: tuple[int, ...]) -> Fraction:
        out = Fraction(1)
        for x, c in enumerate(counts):
            if c:
                out *= pmf[x] ** c
        return out

    e_tau = Fraction(0)
    stop_pmf: dict[int, Fraction] = {}
    zero = Fraction(0)
    for counts, weight in cont_w.items():
        like = mono(counts)
        if like > 0:
            e_tau += like * weight
    for counts, weight in stop_w.items():
        like = mono(counts)
        if like > 0:
            d = sum(counts)
            stop_pmf[d] = stop_pmf.get(d, zero) + like * weight

    pmf_rows = tuple(sorted(stop_pmf.items()))
    total = sum(stop_pmf.values(), Fraction(0))
    assert total == 1, f"stop-time PMF sums to {total}"
    return EvalReport(pmf, e_tau, alpha1, alpha2, pmf_rows)


def _eval_base(root: PolicyNode) -> tuple[
    list[PolicyNode], Fraction, Fraction,
    dict[tuple[int, ...], Fraction], dict[tuple[int, ...], Fraction],
]:
    """Probe-independent evaluation aggregates, cached on the root.

    One pass over the shared structure computes the survival-only path
    aggregate ``srv[n] = sum over histories reaching n of survival``
    (the stopping coins are data-independent) and from it

    * the two error probabilities, which integrate the per-state
      hypothesis likelihoods against ``srv`` and do not depend on any
      probe at all, and
    * per count vector, the total continuation weight ``sum srv * p`` and
      stopping weight ``sum srv * (1 - p)``: contracting a probe against
      these is exact because the probe likelihood of a history is a
      function of its symbol counts alone.

    The cache assumes the tree is not mutated after its first evaluation.
    """
    cached = root.__dict__.get("_eval_base")
    if cached is not None:
        return cached

    _require_full(root)
    order = _by_depth(root)
    alpha1 = Fraction(0)
    alpha2 = Fraction(0)
    zero = Fraction(0)
    cont_w: dict[tuple[int, ...], Fraction] = {}
    stop_w: dict[tuple[int, ...], Fraction] = {}
    srv: dict[int, Fraction] = {id(root): Fraction(1)}
    for node in order:
        sr = srv.get(id(node), zero)
        if sr == 0:
            continue
        p = node.p_continue
        counts = node.state.counts
        if p < 1:
            stopped = sr * (1 - p)
            stop_w[counts] = stop_w.get(counts, zero) + stopped
            if node.decision is Decision.H2:
                alpha1 += node.state.z1 * stopped
            elif node.decision is Decision.H1:
                alpha2 += node.state.z2 * stopped
            elif node.decision is Decision.RANDOMIZED:
                alpha1 += node.state.z1 * stopped / 2
                alpha2 += node.state.z2 * stopped / 2
        if p > 0:
            srv_step = sr * p
            cont_w[counts] = cont_w.get(counts, zero) + srv_step
            for child in node.children:
                cid = id(child)
                srv[cid] = srv.get(cid, zero) + srv_step

    base = (order, alpha1, alpha2, cont_w, stop_w)
    root.__dict__["_eval_base"] = base
    return base


# ---------------------------------------------------------------------------
# verification: equalization and LFD support
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EqualizationCertificate:
    """Path-wise check that the design equalizes expected sample size.

    For every maximal symbol path, the conditional expected sample size
    (computed from the stopping probabilities alone — the labels are not
    trusted) must not exceed ``c_root``, with equality on every path the
    adversary can follow with positive probability.
    """

    c_root: int
    passes: bool
    max_path_expectation: Fraction
    q0_path_expectations_equal: bool
    n_paths: int
    n_q0_positive_paths: int
    violating_paths: tuple[tuple[tuple[int, ...], Fraction], ...]

    def __bool__(self) -> bool:
        return self.passes


def verify_equalization(root: PolicyNode) -> EqualizationCertificate:
    """Check the certificate bottom-up over the shared structure.

    Per node (children first) we compute, from the stopping probabilities
    alone, the conditional expected remaining sample size along (a) the
    worst symbol path and (b) the positively-weighted paths — the latter as
    a single value when all of them agree and ``None`` otherwise.  The
    per-path quantities the certificate is defined over fold through
    ``e = p * (1 + e_child)``, so the recursion reproduces the exhaustive
    path walk exactly while touching each distinct node once.
    """
    _require_full(root)
    c_root = root.e_enter

    max_e: dict[int, Fraction] = {}       # worst path from here
    eq: dict[int, Optional[Fraction]] = {}  # common positive-path value
    n_paths: dict[int, int] = {}
    n_pos: dict[int, int] = {}
    zero = Fraction(0)

    for node in reversed(_by_depth(root)):
        nid = id(node)
        p = node.p_continue
        if p == 0 or node.children is None:
            max_e[nid] = zero
            eq[nid] = zero
            n_paths[nid] = 1
            n_pos[nid] = 1
            continue
        max_e[nid] = p * (1 + max(max_e[id(ch)] for ch in node.children))
        n_paths[nid] = sum(n_paths[id(ch)] for ch in node.children)
        vals = {
            eq[id(ch)]
            for x, ch in enumerate(node.children) if node.lfd_probs[x] > 0
        }
        eq[nid] = p * (1 + vals.pop()) if len(vals) == 1 and None not in vals \
            else None
        n_pos[nid] = sum(
            n_pos[id(ch)]
            for x, ch in enumerate(node.children) if node.lfd_probs[x] > 0
        )

    pos_equal = eq[id(root)] == c_root
    ok = pos_equal and max_e[id(root)] <= c_root
    violating: list[tuple[tuple[int, ...], Fraction]] = []
    if not ok:
        violating = _equalization_witnesses(root, c_root, max_e, eq)

    return EqualizationCertificate(
        c_root=c_root,
        passes=ok,
        max_path_expectation=max_e[id(root)],
        q0_path_expectations_equal=pos_equal,
        n_paths=n_paths[id(root)],
        n_q0_positive_paths=n_pos[id(root)],
        violating_paths=tuple(violating),
    )


def _equalization_witnesses(
    root: PolicyNode,
    c_root: int,
    max_e: dict[int, Fraction],
    eq: dict[int, Optional[Fraction]],
) -> list[tuple[tuple[int, ...], Fraction]]:
    """Concrete offending paths for a failed certificate (up to 8).

    Walks only subtrees known to contain a deviation: a positive path whose
    expectation differs from ``c_root``, or the worst path when it exceeds
    ``c_root``.  The DFS carries absolute survival and accumulated
    expectation like the exhaustive walk would.
    """
    found: list[tuple[tuple[int, ...], Fraction]] = []

    # worst path, when it overshoots
    if max_e[id(root)] > c_root:
        node, path = root, []
        surv, acc = Fraction(1), Fraction(0)
        while node.p_continue > 0 and node.children is not None:
            surv *= node.p_continue
            acc += surv
            x = max(range(len(node.children)),
                    key=lambda i: max_e[id(node.children[i])])
            path.append(x)
            node = node.children[x]
        found.append((tuple(path), acc))

    # positive paths that miss c_root; prune equalized-and-correct subtrees
    stack = [(root, (), Fraction(1), Fraction(0))]
    while stack and len(found) < 8:
        node, path, surv, acc = stack.pop()
        surv = surv * node.p_continue
        acc = acc + surv
        if surv == 0 or node.children is None:
            if acc != c_root:
                found.append((path, acc))
            continue
        for x, child in enumerate(node.children):
            if node.lfd_probs[x] == 0:
                continue
            v = eq[id(child)]
            if v is not None and acc + surv * v == c_root:
                continue  # every positive path below lands exactly right
            stack.append((child, path + (x,), surv, acc))
    return found


@dataclass(frozen=True)
class LfdSupportReport:
    """Support check for the least favorable distribution.

    Wherever the adversary actually plays (z0 > 0 and the node may
    continue), it must put positive mass on every symbol both hypotheses
    can produce.  The one exception: a branch may get zero mass when the
    state it leads to stops surely anyway — the sample taken on entering
    it would have been the last.  Mass placed *outside* the mutual support
    kills one hypothesis's likelihood, so it is only allowed where every
    next state stops surely.  ``offending`` lists violating symbol paths.
    """

    passes: bool
    mutual_support: tuple[int, ...]
    offending: tuple[tuple[int, ...], ...]

    def __bool__(self) -> bool:
        return self.passes


def verify_lfd_support(root: PolicyNode, model: NominalModel) -> LfdSupportReport:
    _require_full(root)
    support = tuple(
        x for x in range(model.alphabet_size)
        if model.p1[x] > 0 and model.p2[x] > 0
    )
    offending: list[tuple[int, ...]] = []
    seen: set[int] = set()
    stack: list[tuple[PolicyNode, tuple[int, ...]]] = [(root, ())]
    while stack:
        node, path = stack.pop()
        if id(node) in seen:
            continue  # shared subtree: checked at its first occurrence
        seen.add(id(node))
        if node.p_continue == 0 or node.children is None:
            continue
        if node.z0 > 0:
            bad = any(
                node.lfd_probs[x] == 0 and not node.children[x].sure_stop_state
                for x in support
            )
            outside = any(
                node.lfd_probs[x] > 0 for x in range(len(node.lfd_probs))
                if x not in support
            )
            if outside and not all(ch.sure_stop_state for ch in node.children):
                bad = True
            if bad:
                offending.append(path)
        for x, child in enumerate(node.children):
            stack.append((child, path + (x,)))
    return LfdSupportReport(
        passes=not offending,
        mutual_support=support,
        offending=tuple(sorted(offending)),
    )


# ---------------------------------------------------------------------------
# seeded simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimReport:
    trials: int
    seed: int
    strategy: str
    mean_sample_size: Fraction
    freq_h1: Fraction
    freq_h2: Fraction
    max_sample_size: int


def _uniform(rng: random.Random) -> Fraction:
    """Exact uniform draw on [0, 1) with 64-bit resolution."""
    return Fraction(rng.getrandbits(64), 2**64)


def simulate(
    root: PolicyNode,
    trials: int,
    seed: int,
    strategy: str = "fixed",
    pmf: Optional[list[RationalLike]] = None,
) -> SimReport:
    """Monte Carlo runs of the design against a data-generating strategy.

    Strategies:
        ``fixed``       i.i.d. symbols from ``pmf``;
        ``alternating`` deterministic cycle 0, 1, ..., K-1, 0, ...;
        ``lfd``         replay the adversary: sample each symbol from the
                        current node's LFD PMF.

    Determinism: trial t uses its own generator seeded with the string
    ``"{seed}:{t}"`` (string seeding is stable across platforms and runs),
    so results are reproducible and independent of trial order.  All
    comparisons are exact: uniforms are 64-bit dyadic rationals compared
    against exact probabilities, biasing each event by less than 2**-64.
    """
    _require_full(root)
    k = len(root.state.counts)
    if strategy == "fixed":
        if pmf is None:
            raise ValueError("fixed strategy needs a pmf")
        fixed = tuple(rat(v) for v in pmf)
        if len(fixed) != k or any(v < 0 for v in fixed) or sum(fixed) != 1:
            raise ValueError("pmf must be a PMF over the model alphabet")
    elif strategy not in ("alternating", "lfd"):
        raise ValueError(f"unknown strategy {strategy!r}")

    total_tau = 0
    max_tau = 0
    n_h1 = 0
    n_h2 = 0
    for t in range(trials):
        rng = random.Random(f"{seed}:{t}")
        node = root
        steps = 0
        while True:
            if _uniform(rng) >= node.p_continue:
                d = node.decision
                if d is Decision.RANDOMIZED:
                    d = Decision.H1 if _uniform(rng) < Fraction(1, 2) else Decision.H2
                if d is Decision.H1:
                    n_h1 += 1
                else:
                    n_h2 += 1
                break
            if strategy == "fixed":
                x = _draw(rng, fixed)
            elif strategy == "alternating":
                x = steps % k
            else:
                x = _draw(rng, node.lfd_probs)
            node = node.children[x]
            steps += 1
        total_tau += steps
        max_tau = max(max_tau, steps)

    return SimReport(
        trials=trials, seed=seed, strategy=strategy,
        mean_sample_size=Fraction(total_tau, trials),
        freq_h1=Fraction(n_h1, trials), freq_h2=Fraction(n_h2, trials),
        max_sample_size=max_tau,
    )


def _draw(rng: random.Random, pmf: tuple[Fraction, ...]) -> int:
    u = _uniform(rng)
    acc = Fraction(0)
    for x, p in enumerate(pmf):
        acc += p
        if u < acc:
            return x
    return len(pmf) - 1  # u landed in the top residue of an exact-sum PMF


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def _dec(x: Fraction, places: int = 6) -> str:
    """Exactly-rounded fixed-point decimal rendering of a rational."""
    with localcontext() as ctx:
        ctx.prec = 50
        d = Decimal(x.numerator) / Decimal(x.denominator)
        q = d.quantize(Decimal(1).scaleb(-places))
    return f"{q:f}"


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


_STOP_COLORS = {
    Decision.H1: "#b3d1ff",
    Decision.H2: "#ffbdbd",
    Decision.RANDOMIZED: "#e0c7f5",
}


def tree_to_dot(root: PolicyNode) -> str:
    """Graphviz rendering of the policy tree.

    Node label: ``e_enter/e_continue`` while continuing is possible, plain
    ``0`` at sure stops.  Sure stops are colored by decision; mixed nodes
    are shaded gray proportionally to their stopping probability.  Edge
    label: the LFD transition probability as an exact rational with a
    6-digit decimal alongside.
    """
    lines = [
        "digraph policy {",
        '  node [shape=circle, style=filled, fontname="Helvetica"];',
        '  edge [fontname="Helvetica", fontsize=10];',
    ]
    counter = 0

    def emit(node: PolicyNode) -> str:
        nonlocal counter
        name = f"n{counter}"
        counter += 1
        if node.p_continue == 0:
            color = _STOP_COLORS[node.decision]
            lines.append(f'  {name} [label="0", fillcolor="{color}"];')
            return name
        label = f"{node.e_enter}/{node.e_continue}"
        p_stop = 1 - node.p_continue
        # white at p_stop = 0 down to mid-gray at p_stop = 1
        level = 255 - int(round(96 * float(p_stop)))
        fill = f"#{level:02x}{level:02x}{level:02x}"
        lines.append(f'  {name} [label="{label}", fillcolor="{fill}"];')
        if node.children is not None:
            for x, child in enumerate(node.children):
                cname = emit(child)
                p = node.lfd_probs[x]
                lines.append(
                    f'  {name} -> {cname} [label="{_frac(p)} ({_dec(p)})"];'
                )
        return name

    emit(root)
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_json(root: PolicyNode) -> dict:
    """Nested JSON form of the tree; rationals as "num/den" strings."""
    def conv(node: PolicyNode) -> dict:
        return {
            "depth": node.depth,
            "counts": list(node.state.counts),
            "z0": _frac(node.z0),
            "e_enter": node.e_enter,
            "e_continue": node.e_continue,
            "p_continue": _frac(node.p_continue),
            "decision": node.decision.value if node.decision else None,
            "lfd": [_frac(p) for p in node.lfd_probs] if node.lfd_probs else None,
            "children": (
                [conv(ch) for ch in node.children]
                if node.children is not None else None
            ),
        }
    return conv(root)
