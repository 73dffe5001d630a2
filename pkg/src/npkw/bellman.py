"""Finite-horizon minimax recursion for the sequential design problem.

The design problem: observe iid symbols from a finite alphabet of size K,
stop at some time and accept one of two simple hypotheses P1 / P2, while an
adversary picks the sampling distribution to maximize expected sample size.
The figure of merit is

    worst-case E[sample size]  +  lambda1 * alpha1  +  lambda2 * alpha2,

and the backward recursion tracks, per count history, the optimal cost as a
function of the adversary's likelihood z0 — a concave nondecreasing PWL
function of z0 with integer slopes, handled exactly by :mod:`npkw.pwl`.

For each state (depth n, count vector) with per-hypothesis likelihoods
z1, z2 the recursion is

    rho_n(z0) = min( g,  z0 + d_n(z0) ),        g = min(lam1*z1, lam2*z2),
    d_n = sup-convolution over symbols x of rho_{n+1} at the child counts,

with rho at the horizon equal to the stopping risk g.  The sup-convolution
is where the adversary's one-step choice is optimized out: allocating a_x of
the current likelihood z0 to symbol x corresponds to the adversary placing
probability a_x / z0 on x.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, floor, log
from typing import Iterator

from .pwl import (
    PwlConcave,
    RationalLike,
    SplitMap,
    cap_min_const,
    crossing_point,
    lift_identity,
    pwl,
    rat,
    supconv,
)


@dataclass(frozen=True)
class NominalModel:
    """The two simple hypotheses, error weights and horizon.

    Attributes:
        p1: PMF of the first hypothesis on the alphabet {0, ..., K-1}.
        p2: PMF of the second hypothesis; must differ from p1.
        lam1: weight on alpha1 = P_{P1}(accept the second hypothesis).
        lam2: weight on alpha2 = P_{P2}(accept the first hypothesis).
        horizon: hard truncation depth N >= 1.
    """

    p1: tuple[Fraction, ...]
    p2: tuple[Fraction, ...]
    lam1: Fraction
    lam2: Fraction
    horizon: int

    def __post_init__(self) -> None:
        k = len(self.p1)
        if k < 2 or len(self.p2) != k:
            raise ValueError("need two PMFs of equal length >= 2")
        for p in (self.p1, self.p2):
            if any(not isinstance(v, Fraction) or v < 0 for v in p):
                raise ValueError("PMF entries must be nonnegative Fractions")
            if sum(p) != 1:
                raise ValueError("PMF must sum to exactly 1")
        if self.p1 == self.p2:
            raise ValueError("the two hypotheses must differ")
        if self.lam1 <= 0 or self.lam2 <= 0:
            raise ValueError("error weights must be positive")
        if not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")

    @property
    def alphabet_size(self) -> int:
        return len(self.p1)


def make_model(
    p1: list[RationalLike],
    p2: list[RationalLike],
    lam1: RationalLike,
    lam2: RationalLike,
    horizon: int,
) -> NominalModel:
    """Exact-converting constructor for :class:`NominalModel`."""
    return NominalModel(
        tuple(rat(v) for v in p1),
        tuple(rat(v) for v in p2),
        rat(lam1),
        rat(lam2),
        horizon,
    )


def bernoulli_model(
    theta1: RationalLike,
    theta2: RationalLike,
    lam1: RationalLike,
    lam2: RationalLike,
    horizon: int,
) -> NominalModel:
    """Two Bernoulli hypotheses on {0, 1}; symbol 1 is a success."""
    t1, t2 = rat(theta1), rat(theta2)
    for t in (t1, t2):
        if not 0 < t < 1:
            raise ValueError("success probabilities must lie strictly in (0, 1)")
    return make_model([1 - t1, t1], [1 - t2, t2], lam1, lam2, horizon)


@dataclass(frozen=True)
class DesignState:
    """A count history: depth n and per-symbol counts summing to n.

    z1, z2 are the likelihoods of the counts under the two hypotheses and
    g = min(lam1*z1, lam2*z2) is the risk of stopping now with the better
    decision.  Symbol order within the counts does not matter for z1/z2/g
    (the hypotheses are iid), so states are indexed by the count vector.
    """

    depth: int
    counts: tuple[int, ...]
    z1: Fraction
    z2: Fraction
    g: Fraction


def make_state(model: NominalModel, counts: tuple[int, ...]) -> DesignState:
    if len(counts) != model.alphabet_size or any(c < 0 for c in counts):
        raise ValueError("counts must be nonnegative, one per symbol")
    z1 = Fraction(1)
    z2 = Fraction(1)
    for x, c in enumerate(counts):
        z1 *= model.p1[x] ** c
        z2 *= model.p2[x] ** c
    g = min(model.lam1 * z1, model.lam2 * z2)
    return DesignState(sum(counts), counts, z1, z2, g)


def _counts_at_depth(k: int, n: int) -> Iterator[tuple[int, ...]]:
    """All count vectors over k symbols summing to n, lexicographic."""
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _counts_at_depth(k - 1, n - first):
            yield (first, *rest)


def build_states(model: NominalModel) -> dict[int, list[DesignState]]:
    """Per-depth lists of states, depth 0..horizon, lexicographic counts.

    Depth n holds C(n + K - 1, K - 1) states (count vectors, not histories);
    e.g. K = 2 at depth 21 gives 22 states.
    """
    out: dict[int, list[DesignState]] = {}
    k = model.alphabet_size
    for n in range(model.horizon + 1):
        states = [make_state(model, c) for c in _counts_at_depth(k, n)]
        assert len(states) == comb(n + k - 1, k - 1)
        out[n] = states
    return out


@dataclass
class CostTable:
    """Output of the backward recursion.

    Per count vector: the optimal cost slice ``rho`` (a PWL function of the
    adversary likelihood z0 on [0, 1]).  For internal states (depth <
    horizon) additionally the continuation slice ``d`` (sup-convolution of
    the children), its :class:`SplitMap`, and the stopping threshold
    ``z0_star`` — the exact crossing of z0 + d(z0) with g, with None meaning
    the cap never binds on [0, 1] (continuing is strictly better everywhere).
    """

    model: NominalModel
    states: dict[tuple[int, ...], DesignState]
    rho: dict[tuple[int, ...], PwlConcave]
    d: dict[tuple[int, ...], PwlConcave]
    split: dict[tuple[int, ...], SplitMap]
    z0_star: dict[tuple[int, ...], Fraction | None]

    def root_value(self) -> Fraction:
        """rho(1) at the empty history: the minimax cost of the design."""
        root = (0,) * self.model.alphabet_size
        return self.rho[root](1)


def child_counts(counts: tuple[int, ...], x: int) -> tuple[int, ...]:
    c = list(counts)
    c[x] += 1
    return tuple(c)


def backward_recursion(model: NominalModel) -> CostTable:
    """Run the exact backward recursion over all count states."""
    per_depth = build_states(model)
    k = model.alphabet_size
    states: dict[tuple[int, ...], DesignState] = {}
    rho: dict[tuple[int, ...], PwlConcave] = {}
    d: dict[tuple[int, ...], PwlConcave] = {}
    split: dict[tuple[int, ...], SplitMap] = {}
    z0_star: dict[tuple[int, ...], Fraction | None] = {}

    for st in per_depth[model.horizon]:
        states[st.counts] = st
        rho[st.counts] = pwl(st.g, [(0, 1)])

    for n in range(model.horizon - 1, -1, -1):
        for st in per_depth[n]:
            states[st.counts] = st
            children = [rho[child_counts(st.counts, x)] for x in range(k)]
            d_slice, sm = supconv(children, 1)
            lifted = lift_identity(d_slice)
            rho[st.counts] = cap_min_const(lifted, st.g)
            d[st.counts] = d_slice
            split[st.counts] = sm
            z0_star[st.counts] = crossing_point(lifted, st.g)

    return CostTable(model, states, rho, d, split, z0_star)


def stopping_threshold(table: CostTable, counts: tuple[int, ...]) -> Fraction | None:
    """z0 threshold above which stopping is strictly optimal at this state.

    None means the state never stops for any z0 in [0, 1] (the sentinel for
    "always continue"); a value of exactly 1 means stopping only becomes
    optimal at the right edge of the domain.  Horizon states always stop and
    have no threshold entry — asking for one raises KeyError.
    """
    return table.z0_star[counts]


# ---------------------------------------------------------------------------
# truncation bound for the worst-case design
# ---------------------------------------------------------------------------

def kwt_truncation_bound(model: NominalModel) -> int:
    """Depth beyond which continuing can never pay, by exact scan.

    Precondition: the supports of the two hypotheses intersect in exactly
    one symbol x* (the classical worst case: only x* keeps both hypotheses
    alive, so the longest run any reasonable design can continue is along
    repeated x*).  Along that path the stopping risk after j steps is
    g_j = min(lam1 * p1(x*)^j, lam2 * p2(x*)^j); one more sample is worth
    its unit cost only while g_j - g_{j+1} >= 1.  The bound is the smallest
    k >= 0 with g_k - g_{k+1} < 1, clamped to at least 1 (the first sample
    is always taken by a nondegenerate design).

    For lam1 == lam2 == lam this equals the closed form
    max(1, floor(1 - (ln lam + ln(1 - p*)) / ln p*)) with
    p* = min(p1(x*), p2(x*)) — the smaller probability drives the decay of
    the stopping risk; see :func:`kwt_truncation_closed_form`.
    """
    inter = [
        x
        for x in range(model.alphabet_size)
        if model.p1[x] > 0 and model.p2[x] > 0
    ]
    if len(inter) != 1:
        raise ValueError(
            "truncation bound needs a single common support symbol; "
            f"supports intersect in {len(inter)} symbols"
        )
    x_star = inter[0]
    a, b = model.p1[x_star], model.p2[x_star]

    def g(j: int) -> Fraction:
        return min(model.lam1 * a**j, model.lam2 * b**j)

    k = 0
    while g(k) - g(k + 1) >= 1:
        k += 1
        if k > 10**6:  # the drop is eventually geometric; this cannot trip
            raise AssertionError("truncation scan failed to terminate")
    return max(1, k)


def kwt_truncation_closed_form(model: NominalModel) -> int:
    """Closed form of the truncation bound for lam1 == lam2.

    max(1, floor(1 - (ln lam + ln(1-p*)) / ln p*)) where p* is the smaller
    of the two probabilities of the common support symbol (the stopping risk
    along repeated x* is lam * p*^j, so p* sets the decay rate).  Provided
    for cross-checking the exact scan; float log arithmetic, so the scan is
    the authority.
    """
    if model.lam1 != model.lam2:
        raise ValueError("closed form only applies to equal error weights")
    inter = [
        x
        for x in range(model.alphabet_size)
        if model.p1[x] > 0 and model.p2[x] > 0
    ]
    if len(inter) != 1:
        raise ValueError("closed form needs a single common support symbol")
    x_star = inter[0]
    p_star = min(model.p1[x_star], model.p2[x_star])
    lam = model.lam1
    x = 1 - (log(lam) + log(1 - p_star)) / log(p_star)
    return max(1, floor(x))


# ---------------------------------------------------------------------------
# JSON serialization (exact, stable)
# ---------------------------------------------------------------------------

def _frac_str(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _parse_frac(s: str) -> Fraction:
    return Fraction(s)


def _slice_to_json(f: PwlConcave) -> dict:
    return {
        "value_at_zero": _frac_str(f.value_at_zero),
        "domain_upper": _frac_str(f.domain_upper),
        "segments": [
            {"slope": s, "width": _frac_str(w)} for s, w in f.segments
        ],
    }


def _slice_from_json(d: dict) -> PwlConcave:
    return PwlConcave(
        _parse_frac(d["value_at_zero"]),
        tuple((seg["slope"], _parse_frac(seg["width"])) for seg in d["segments"]),
        _parse_frac(d["domain_upper"]),
    )


def model_to_json(model: NominalModel) -> dict:
    return {
        "p1": [_frac_str(v) for v in model.p1],
        "p2": [_frac_str(v) for v in model.p2],
        "lambda1": _frac_str(model.lam1),
        "lambda2": _frac_str(model.lam2),
        "horizon": model.horizon,
    }


def model_from_json(d: dict) -> NominalModel:
    return NominalModel(
        tuple(_parse_frac(v) for v in d["p1"]),
        tuple(_parse_frac(v) for v in d["p2"]),
        _parse_frac(d["lambda1"]),
        _parse_frac(d["lambda2"]),
        int(d["horizon"]),
    )


def cost_table_to_json(table: CostTable) -> dict:
    """Exact JSON form: model echo plus one record per state.

    States are listed by (depth, counts) so the order — and with sorted keys
    the bytes — are stable across runs.
    """
    recs = []
    for counts in sorted(table.states, key=lambda c: (sum(c), c)):
        st = table.states[counts]
        rec: dict = {
            "depth": st.depth,
            "counts": list(st.counts),
            "z1": _frac_str(st.z1),
            "z2": _frac_str(st.z2),
            "g": _frac_str(st.g),
            "rho": _slice_to_json(table.rho[counts]),
        }
        if counts in table.d:
            zs = table.z0_star[counts]
            rec["d"] = _slice_to_json(table.d[counts])
            rec["z0_star"] = None if zs is None else _frac_str(zs)
            sm = table.split[counts]
            rec["split"] = [
                {"operand": op, "slope": s, "width": _frac_str(w)}
                for op, s, w in sm.entries
            ]
        else:
            rec["d"] = None
            rec["z0_star"] = None
            rec["split"] = None
        recs.append(rec)
    return {"model": model_to_json(table.model), "states": recs}


def cost_table_from_json(d: dict) -> CostTable:
    model = model_from_json(d["model"])
    states: dict[tuple[int, ...], DesignState] = {}
    rho: dict[tuple[int, ...], PwlConcave] = {}
    dd: dict[tuple[int, ...], PwlConcave] = {}
    split: dict[tuple[int, ...], SplitMap] = {}
    z0_star: dict[tuple[int, ...], Fraction | None] = {}
    for rec in d["states"]:
        counts = tuple(rec["counts"])
        states[counts] = make_state(model, counts)
        rho[counts] = _slice_from_json(rec["rho"])
        if rec["d"] is not None:
            dd[counts] = _slice_from_json(rec["d"])
            entries = tuple(
                (e["operand"], e["slope"], _parse_frac(e["width"]))
                for e in rec["split"]
            )
            split[counts] = SplitMap(
                model.alphabet_size, entries, dd[counts].domain_upper
            )
            z0_star[counts] = (
                None if rec["z0_star"] is None else _parse_frac(rec["z0_star"])
            )
    return CostTable(model, states, rho, dd, split, z0_star)


def cost_table_to_json_str(table: CostTable) -> str:
    return json.dumps(cost_table_to_json(table), sort_keys=True, indent=1)
