"""Randomized-threshold post-processing toward equal classification rates.

Each group's decision rule is a mixture of deterministic score thresholds:
with some probability a row is judged against one threshold, otherwise
against another. Mixtures make every point on a segment between two of the
group's ROC points achievable, and mixing in the "select everybody" /
"select nobody" sentinels reaches any point of the ROC convex hull — which
is what the equalized-odds construction needs, since the utility-optimal
common point is generally interior to at least one group's hull and a
two-point mixture alone cannot land on an interior point.

Fitting maximizes cost-weighted expected utility, computed from the
empirical confusion counts and normalized by the total row count. "High
error cost" applications equalize both positive and negative classification
rates (equalized odds); "low" ones equalize only the positive rate (equal
opportunity) and buy utility with the freed slack. The search is exact:
total utility is piecewise linear in the target (concave after the
per-group hull step), so enumerating breakpoints — hull vertices plus
boundary crossings — dominates any fixed-resolution grid scan.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import AuditDataset
from .errors import FairpathError, NoFeasiblePointError, UnknownGroupError
from .roc import RocCurve, roc

OBJECTIVE_EQUAL_OPPORTUNITY = "equal-opportunity"
OBJECTIVE_EQUALIZED_ODDS = "equalized-odds"

_RESERVED_POLICY_KEYS = {"utility", "objective"}


@dataclass(frozen=True)
class UtilitySpec:
    """Non-negative error costs and correct-decision benefits, not all zero."""

    cost_fp: float = 1.0
    cost_fn: float = 1.0
    benefit_tp: float = 1.0
    benefit_tn: float = 1.0

    def __post_init__(self):
        values = (self.cost_fp, self.cost_fn, self.benefit_tp, self.benefit_tn)
        if any(v < 0 for v in values):
            raise FairpathError("utility costs/benefits must be non-negative")
        if all(v == 0 for v in values):
            raise FairpathError("utility spec must not be all zero")

    def to_json_dict(self) -> dict:
        return {
            "cost_fp": self.cost_fp,
            "cost_fn": self.cost_fn,
            "benefit_tp": self.benefit_tp,
            "benefit_tn": self.benefit_tn,
        }


@dataclass(frozen=True)
class PolicyComponent:
    threshold: float
    weight: float


@dataclass(frozen=True)
class GroupPolicy:
    """Mixture of deterministic thresholds for one group.

    Components are ordered by ascending threshold with positive weights
    summing to 1. Policies with at most two components expose the
    t_lo / t_hi / mix view (mix = probability of the lower threshold);
    richer mixtures (equalized odds at hull-interior points) only have the
    component list.
    """

    components: tuple[PolicyComponent, ...]
    achieved_fpr: float | None = None
    achieved_tpr: float | None = None

    @property
    def t_lo(self) -> float | None:
        if len(self.components) == 1:
            return self.components[0].threshold
        if len(self.components) == 2:
            return self.components[0].threshold
        return None

    @property
    def t_hi(self) -> float | None:
        if len(self.components) == 1:
            return self.components[0].threshold
        if len(self.components) == 2:
            return self.components[1].threshold
        return None

    @property
    def mix(self) -> float | None:
        if len(self.components) == 1:
            return 1.0
        if len(self.components) == 2:
            return self.components[0].weight
        return None

    def to_json_dict(self) -> dict:
        return {
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "mix": self.mix,
            "components": [
                {"threshold": c.threshold, "weight": c.weight} for c in self.components
            ],
            "achieved": {"fpr": self.achieved_fpr, "tpr": self.achieved_tpr},
        }


def two_point_policy(t_lo: float, t_hi: float, mix: float) -> GroupPolicy:
    """Plain two-threshold mixture (mix = probability of applying t_lo)."""
    if t_lo > t_hi:
        raise FairpathError("t_lo must not exceed t_hi")
    if not 0.0 <= mix <= 1.0:
        raise FairpathError("mix must lie in [0, 1]")
    if t_lo == t_hi or mix == 1.0:
        return GroupPolicy(components=(PolicyComponent(t_lo, 1.0),))
    if mix == 0.0:
        return GroupPolicy(components=(PolicyComponent(t_hi, 1.0),))
    return GroupPolicy(
        components=(PolicyComponent(t_lo, mix), PolicyComponent(t_hi, 1.0 - mix))
    )


@dataclass(frozen=True)
class ThresholdPolicy:
    objective: str
    per_group: dict[str, GroupPolicy]
    utility: float

    def to_json_dict(self) -> dict:
        out: dict = {}
        for g in sorted(self.per_group):
            if g in _RESERVED_POLICY_KEYS:
                raise FairpathError(f"group name '{g}' collides with a policy JSON key")
            out[g] = self.per_group[g].to_json_dict()
        out["utility"] = self.utility
        out["objective"] = self.objective
        return out


def point_utilities(curve: RocCurve, u: UtilitySpec, n_total: int) -> np.ndarray:
    """Expected-utility contribution of each operating point of one group."""
    tn = curve.n_neg - curve.fp
    fn = curve.n_pos - curve.tp
    raw = (
        u.benefit_tp * curve.tp
        + u.benefit_tn * tn
        - u.cost_fp * curve.fp
        - u.cost_fn * fn
    )
    return raw / n_total


def _upper_hull_indices(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vertex indices of the upper concave hull, by strictly increasing x.

    Equal-x points collapse onto the highest y (lowest original index on
    full ties), and collinear interior points are pruned.
    """
    order = np.lexsort((-y, x))
    xs = x[order]
    first = np.ones(xs.shape[0], dtype=bool)
    first[1:] = xs[1:] != xs[:-1]
    candidates = order[first]
    hull: list[int] = []
    for idx in candidates:
        while len(hull) >= 2:
            x0, y0 = x[hull[-2]], y[hull[-2]]
            x1, y1 = x[hull[-1]], y[hull[-1]]
            cross = (x1 - x0) * (y[idx] - y0) - (x[idx] - x0) * (y1 - y0)
            if cross >= 0.0:
                hull.pop()
            else:
                break
        hull.append(int(idx))
    return np.asarray(hull, dtype=np.int64)


def _polyline_crossings(
    ax: np.ndarray, ay: np.ndarray, bx: np.ndarray, by: np.ndarray
) -> np.ndarray:
    """x-coordinates where two piecewise-linear curves intersect properly."""
    if ax.shape[0] < 2 or bx.shape[0] < 2:
        return np.empty(0)
    p1x, p1y = ax[:-1, None], ay[:-1, None]
    dax, day = (ax[1:] - ax[:-1])[:, None], (ay[1:] - ay[:-1])[:, None]
    q1x, q1y = bx[None, :-1], by[None, :-1]
    dbx, dby = (bx[1:] - bx[:-1])[None, :], (by[1:] - by[:-1])[None, :]
    denom = dax * dby - day * dbx
    with np.errstate(divide="ignore", invalid="ignore"):
        s = ((q1x - p1x) * dby - (q1y - p1y) * dbx) / denom
        t = ((q1x - p1x) * day - (q1y - p1y) * dax) / denom
    tol = 1e-12
    valid = (
        (np.abs(denom) > 1e-18)
        & (s >= -tol)
        & (s <= 1.0 + tol)
        & (t >= -tol)
        & (t <= 1.0 + tol)
    )
    return (p1x + s * dax)[valid]


def _merge_components(parts: list[tuple[float, float, int, int]]) -> list[tuple[float, float, int, int]]:
    """Merge (threshold, weight, tp, fp) parts sharing a threshold; drop dust."""
    merged: dict[float, tuple[float, int, int]] = {}
    for thr, w, tp, fp in parts:
        if thr in merged:
            w0, tp0, fp0 = merged[thr]
            merged[thr] = (w0 + w, tp0, fp0)
        else:
            merged[thr] = (w, tp, fp)
    out = [
        (thr, w, tp, fp)
        for thr, (w, tp, fp) in sorted(merged.items())
        if w > 1e-15
    ]
    total = sum(w for _, w, _, _ in out)
    return [(thr, w / total, tp, fp) for thr, w, tp, fp in out]


def _finish_group(
    curve: RocCurve, parts: list[tuple[float, float, int, int]], u: UtilitySpec, n_total: int
) -> tuple[GroupPolicy, float]:
    """Build a GroupPolicy from raw parts; returns (policy, utility share)."""
    merged = _merge_components(parts)
    achieved_fpr = sum(w * (fp / curve.n_neg) for _, w, _, fp in merged)
    achieved_tpr = sum(w * (tp / curve.n_pos) for _, w, tp, _ in merged)
    utility = 0.0
    for _, w, tp, fp in merged:
        tn = curve.n_neg - fp
        fn = curve.n_pos - tp
        utility += w * (
            u.benefit_tp * tp + u.benefit_tn * tn - u.cost_fp * fp - u.cost_fn * fn
        )
    policy = GroupPolicy(
        components=tuple(PolicyComponent(thr, w) for thr, w, _, _ in merged),
        achieved_fpr=achieved_fpr,
        achieved_tpr=achieved_tpr,
    )
    return policy, utility / n_total


def fit_equal_opportunity(d: AuditDataset, u: UtilitySpec = UtilitySpec()) -> ThresholdPolicy:
    """Equalize the true positive rate across groups, maximizing utility.

    For a shared TPR target, the best two-threshold mixture a group can
    offer is the upper concave envelope of its (TPR, utility) operating
    points; total utility is the sum of these concave piecewise-linear
    envelopes, so the exact optimum sits on an envelope breakpoint. Ties
    break toward the smaller target TPR.
    """
    curves = {g: roc(d, g) for g in d.groups}
    n_total = len(d)
    envelopes: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for g, c in curves.items():
        utils = point_utilities(c, u, n_total)
        hull = _upper_hull_indices(c.tpr, utils)
        envelopes[g] = (c.tpr[hull], utils[hull], hull)

    candidates = np.unique(np.concatenate([e[0] for e in envelopes.values()]))
    total = np.zeros_like(candidates)
    for ex, ey, _ in envelopes.values():
        total += np.interp(candidates, ex, ey)
    tau = float(candidates[int(np.argmax(total))])

    per_group: dict[str, GroupPolicy] = {}
    utility = 0.0
    for g, c in curves.items():
        ex, _, hull = envelopes[g]
        pos = int(np.searchsorted(ex, tau))
        if pos < ex.shape[0] and ex[pos] == tau:
            i = int(hull[pos])
            parts = [(float(c.thresholds[i]), 1.0, int(c.tp[i]), int(c.fp[i]))]
        else:
            a, b = int(hull[pos - 1]), int(hull[pos])
            lam = (float(ex[pos]) - tau) / (float(ex[pos]) - float(ex[pos - 1]))
            parts = [
                (float(c.thresholds[a]), lam, int(c.tp[a]), int(c.fp[a])),
                (float(c.thresholds[b]), 1.0 - lam, int(c.tp[b]), int(c.fp[b])),
            ]
        per_group[g], share = _finish_group(c, parts, u, n_total)
        utility += share
    return ThresholdPolicy(
        objective=OBJECTIVE_EQUAL_OPPORTUNITY, per_group=per_group, utility=utility
    )


def fit_equalized_odds(
    d: AuditDataset, u: UtilitySpec = UtilitySpec(), allow_trivial: bool = True
) -> ThresholdPolicy:
    """Equalize both TPR and FPR across groups at maximum utility.

    The common operating point must lie in every group's achievable region:
    the convex hull of its ROC points restricted to at-or-above the
    diagonal. Utility is linear over that intersection, so the optimum sits
    on the lower envelope of the groups' hull boundaries, at one of its
    breakpoints (a hull vertex or a boundary crossing). Each group then
    realizes the point as a mixture of the two bracketing hull vertices,
    blended — when the point is interior to its hull — with the diagonal
    mixture of the "select everybody" / "select nobody" sentinels. Ties
    break toward the lexicographically smaller (fpr, -tpr).

    With allow_trivial=False, an intersection that collapses onto the
    diagonal (only random/constant classifiers are common) raises instead
    of returning one of those trivial points.
    """
    curves = {g: roc(d, g) for g in d.groups}
    n_total = len(d)
    hulls: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for g, c in curves.items():
        hull = _upper_hull_indices(c.fpr, c.tpr)
        hulls[g] = (c.fpr[hull], c.tpr[hull], hull)

    xs = [hx for hx, _, _ in hulls.values()]
    for g1, g2 in combinations(d.groups, 2):
        ax, ay, _ = hulls[g1]
        bx, by, _ = hulls[g2]
        xs.append(_polyline_crossings(ax, ay, bx, by))
    candidates = np.unique(np.clip(np.concatenate(xs), 0.0, 1.0))

    envelope = np.full(candidates.shape[0], np.inf)
    for hx, hy, _ in hulls.values():
        envelope = np.minimum(envelope, np.interp(candidates, hx, hy))

    if float(np.max(envelope - candidates)) <= 1e-12 and not allow_trivial:
        raise NoFeasiblePointError(
            "no non-trivial equalized-odds point: the groups' achievable regions "
            "only share the diagonal (random/constant classifiers)"
        )

    n_pos_total = sum(c.n_pos for c in curves.values())
    n_neg_total = sum(c.n_neg for c in curves.values())
    a_coef = (u.benefit_tp + u.cost_fn) * n_pos_total / n_total
    b_coef = (u.benefit_tn + u.cost_fp) * n_neg_total / n_total
    const = (u.benefit_tn * n_neg_total - u.cost_fn * n_pos_total) / n_total
    utilities = a_coef * envelope - b_coef * candidates + const
    best = int(np.argmax(utilities))
    x_star = float(candidates[best])
    y_star = float(envelope[best])

    per_group: dict[str, GroupPolicy] = {}
    utility = 0.0
    for g, c in curves.items():
        hx, hy, hull = hulls[g]
        pos = int(np.searchsorted(hx, x_star))
        if pos < hx.shape[0] and hx[pos] == x_star:
            boundary = [(int(hull[pos]), 1.0)]
            boundary_y = float(hy[pos])
        else:
            mu = (float(hx[pos]) - x_star) / (float(hx[pos]) - float(hx[pos - 1]))
            boundary = [(int(hull[pos - 1]), mu), (int(hull[pos]), 1.0 - mu)]
            boundary_y = mu * float(hy[pos - 1]) + (1.0 - mu) * float(hy[pos])

        if boundary_y - x_star > 1e-15:
            lam = (y_star - x_star) / (boundary_y - x_star)
            lam = min(max(lam, 0.0), 1.0)
        else:
            lam = 1.0  # hull boundary touches the diagonal here; no blend needed

        parts = [
            (float(c.thresholds[i]), lam * w, int(c.tp[i]), int(c.fp[i]))
            for i, w in boundary
        ]
        if lam < 1.0:
            # diagonal point (x*, x*) = mixture of "everybody" and "nobody"
            parts.append(
                (
                    float(c.thresholds[-1]),
                    (1.0 - lam) * x_star,
                    int(c.tp[-1]),
                    int(c.fp[-1]),
                )
            )
            parts.append(
                (
                    float(c.thresholds[0]),
                    (1.0 - lam) * (1.0 - x_star),
                    int(c.tp[0]),
                    int(c.fp[0]),
                )
            )
        per_group[g], share = _finish_group(c, parts, u, n_total)
        utility += share
    return ThresholdPolicy(
        objective=OBJECTIVE_EQUALIZED_ODDS, per_group=per_group, utility=utility
    )


def apply_policy(d: AuditDataset, policy: ThresholdPolicy, seed: int) -> np.ndarray:
    """Per-row randomized decisions under the policy, reproducible by seed.

    Row i consumes the i-th variate of a counter-based Philox stream keyed
    by the seed, so decisions do not depend on evaluation order and a
    two-threshold group policy decides each row by t_lo with probability
    mix, else t_hi.
    """
    missing = sorted(set(d.groups) - set(policy.per_group))
    if missing:
        raise UnknownGroupError(f"policy lacks thresholds for groups: {missing}")
    draws = np.random.Generator(np.random.Philox(key=seed)).random(len(d))
    decisions = np.zeros(len(d), dtype=np.int8)
    for g, gp in policy.per_group.items():
        if g not in d.groups:
            continue
        mask = d.group_mask(g)
        thresholds = np.array([c.threshold for c in gp.components], dtype=np.float64)
        cum = np.cumsum(np.array([c.weight for c in gp.components], dtype=np.float64))
        cum[-1] = 1.0  # weights sum to 1 up to rounding; make the last bin airtight
        pick = np.searchsorted(cum, draws[mask], side="right")
        pick = np.clip(pick, 0, thresholds.shape[0] - 1)
        decisions[mask] = (d.scores[mask] >= thresholds[pick]).astype(np.int8)
    return decisions
