"""The normalizing event, its pinch points u and v, X_n = D(u, v), and the
quantile constants q_n(p) by conditional Monte Carlo.

The event requires three alternating left-right crossings (closed, open,
closed) whose two closed clusters pinch to within graph distance 2; u and v
are the left- and right-most open sites adjacent to both closed clusters.
The strict variant additionally pins the clusters to delta-windows around
the side midpoints and keeps them away from the other midpoints.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .clusters import crossing_labels, label_mask
from .config import sample
from .lattice import TriCoord
from .rng import hash64


@dataclass(frozen=True)
class EventEReport:
    holds: bool
    top_cluster_id: int = -1       # raw closed-label ids (internal labeling)
    bottom_cluster_id: int = -1
    middle_open_cluster_id: int = -1
    u: TriCoord = None
    v: TriCoord = None
    delta_used: float = float("nan")


@dataclass(frozen=True)
class QuantileEstimate:
    n: int
    p: float
    metric_kind: str              # "geo" or "res"
    q_hat: float
    n_conditional_samples: int
    ci: tuple                     # bootstrap 95% interval (lo, hi)
    n_attempts: int
    acceptance_rate: float
    strict: bool
    seed: int

    def __post_init__(self):
        if not self.ci[0] <= self.q_hat <= self.ci[1]:
            raise ValueError("q_hat must lie inside its bootstrap interval")


class AcceptanceStall(RuntimeError):
    """Rejection sampling made too many attempts; carries diagnostics."""

    def __init__(self, n, attempts, accepted):
        super().__init__(
            f"event acceptance stalled at n={n}: {accepted} accepted in "
            f"{attempts} attempts; delta/strictness likely infeasible")
        self.attempts = attempts
        self.accepted = accepted


def default_delta(n):
    """The continuum window 1/10000, floored to keep >= ~4 sites at scale n."""
    return max(1.0 / 10000.0, 4.0 / n)


def _crossing_level(mask, highest):
    """Max t with an LR crossing inside mask & {b >= t} (highest=True), or
    min t with one inside mask & {b <= t} (highest=False)."""
    side = mask.shape[0]
    lo, hi = 0, side - 1
    # binary search on the threshold; the crossing predicate is monotone
    while lo < hi:
        mid = (lo + hi + (1 if highest else 0)) // 2
        sub = mask.copy()
        if highest:
            sub[:mid, :] = False
        else:
            sub[mid + 1:, :] = False
        labels, k = label_mask(sub)
        ok = k > 0 and crossing_labels(labels, "LR").size > 0
        if highest:
            if ok:
                lo = mid
            else:
                hi = mid - 1
        else:
            if ok:
                hi = mid
            else:
                lo = mid + 1
    return lo


def _neighbor_union_mask(mask):
    """Sites having at least one triangular neighbor inside ``mask``."""
    out = np.zeros_like(mask)
    out[:, 1:] |= mask[:, :-1]    # neighbor (a-1, b) of (a, b)
    out[:, :-1] |= mask[:, 1:]    # (a+1, b)
    out[1:, :] |= mask[:-1, :]    # (a, b-1)
    out[:-1, :] |= mask[1:, :]    # (a, b+1)
    out[1:, :-1] |= mask[:-1, 1:]   # (a+1, b-1)
    out[:-1, 1:] |= mask[1:, :-1]   # (a-1, b+1)
    return out


def _neighbor_reduce(labels, maximum):
    """Per-site max (or positive min) of labels over the 6 neighbors."""
    big = np.int64(1) << 40
    if maximum:
        work = labels.astype(np.int64)
        out = np.zeros(labels.shape, dtype=np.int64)
        op = np.maximum
    else:
        work = np.where(labels > 0, labels, big).astype(np.int64)
        out = np.full(labels.shape, big, dtype=np.int64)
        op = np.minimum
    out[:, 1:] = op(out[:, 1:], work[:, :-1])
    out[:, :-1] = op(out[:, :-1], work[:, 1:])
    out[1:, :] = op(out[1:, :], work[:-1, :])
    out[:-1, :] = op(out[:-1, :], work[1:, :])
    out[1:, :-1] = op(out[1:, :-1], work[:-1, 1:])
    out[:-1, 1:] = op(out[:-1, 1:], work[1:, :-1])
    if not maximum:
        out[out == big] = 0
    return out


def detect_event_E(cfg, delta=None, strict=False):
    """Detect the normalizing event and locate the pinch points u, v.

    holds=False is a value, not an error.  Top/bottom closed clusters are
    the ones whose crossings run highest/lowest: the top cluster maximizes
    max-over-paths of the minimal b along a crossing path, the bottom one
    minimizes the analogous min-over-paths of the maximal b.
    """
    n = cfg.side
    if delta is None:
        delta = default_delta(n)
    if strict and not 0.0 < delta < 0.25:
        raise ValueError(
            f"strict windows need delta in (0, 1/4); got {delta} "
            f"(n={n} is too small for the midpoint constraints)")
    grid = cfg.grid()
    closed_labels, n_closed = label_mask(~grid)
    if n_closed == 0:
        return EventEReport(holds=False, delta_used=delta)
    cross = crossing_labels(closed_labels, "LR")
    if cross.size < 2:
        return EventEReport(holds=False, delta_used=delta)

    # cheap pre-check: some open site must neighbor two distinct crossing
    # clusters, otherwise no pair can pinch and the level search is wasted
    cross_only = np.where(np.isin(closed_labels, cross), closed_labels, 0)
    nbr_max = _neighbor_reduce(cross_only, maximum=True)
    nbr_min = _neighbor_reduce(cross_only, maximum=False)
    if not (grid & (nbr_min > 0) & (nbr_max > nbr_min)).any():
        return EventEReport(holds=False, delta_used=delta)

    top_lab, top_level = -1, -1
    bot_lab, bot_level = -1, n
    for lab in cross:
        mask = closed_labels == lab
        hi = _crossing_level(mask, highest=True)
        lo = _crossing_level(mask, highest=False)
        if hi > top_level:
            top_lab, top_level = int(lab), hi
        if lo < bot_level:
            bot_lab, bot_level = int(lab), lo
    if top_lab == bot_lab:
        return EventEReport(holds=False, delta_used=delta)

    top_mask = closed_labels == top_lab
    bot_mask = closed_labels == bot_lab
    candidates = grid & _neighbor_union_mask(top_mask) & _neighbor_union_mask(bot_mask)
    rows, cols = np.nonzero(candidates)
    if rows.size == 0:
        return EventEReport(holds=False, delta_used=delta)

    a = cols + cfg.box.lo.a
    b = rows + cfg.box.lo.b
    order = np.lexsort((b, a + 0.5 * b))    # left-to-right Euclidean order
    u = TriCoord(int(a[order[0]]), int(b[order[0]]))
    v = TriCoord(int(a[order[-1]]), int(b[order[-1]]))

    open_labels, _ = label_mask(grid)
    mid_lab = int(open_labels[u.b - cfg.box.lo.b, u.a - cfg.box.lo.a])
    if open_labels[v.b - cfg.box.lo.b, v.a - cfg.box.lo.a] != mid_lab:
        return EventEReport(holds=False, delta_used=delta)
    mid_mask = open_labels == mid_lab
    if crossing_labels(np.where(mid_mask, 1, 0), "LR").size == 0:
        return EventEReport(holds=False, delta_used=delta)

    if strict and not _strict_midpoint_conditions(
            cfg, top_mask, bot_mask, mid_mask, delta):
        return EventEReport(holds=False, delta_used=delta)

    return EventEReport(holds=True, top_cluster_id=top_lab,
                        bottom_cluster_id=bot_lab,
                        middle_open_cluster_id=mid_lab,
                        u=u, v=v, delta_used=delta)


def _strict_midpoint_conditions(cfg, top_mask, bot_mask, mid_mask, delta):
    """Delta-window hitting and 2*delta avoidance around the rescaled side
    midpoints (sup norm in rescaled triangular coordinates)."""
    n = cfg.side
    a_resc = np.arange(n)[None, :] / n
    b_resc = np.arange(n)[:, None] / n
    c_top, c_bot = (0.5, 1.0), (0.5, 0.0)
    c_left, c_right = (0.0, 0.5), (1.0, 0.5)

    def supdist_to(c):
        return np.maximum(np.abs(a_resc - c[0]), np.abs(b_resc - c[1]))

    def hits(mask, line_mask, c):
        return bool((mask & line_mask & (supdist_to(c) <= delta)).any())

    def avoids(mask, cs):
        return all(not (mask & (supdist_to(c) < 2 * delta)).any() for c in cs)

    top_line = np.zeros((n, n), bool)
    top_line[n - 1, :] = True
    bot_line = np.zeros((n, n), bool)
    bot_line[0, :] = True
    left_line = np.zeros((n, n), bool)
    left_line[:, 0] = True
    right_line = np.zeros((n, n), bool)
    right_line[:, n - 1] = True

    return (hits(top_mask, top_line, c_top)
            and avoids(top_mask, (c_left, c_bot, c_right))
            and hits(bot_mask, bot_line, c_bot)
            and avoids(bot_mask, (c_top, c_left, c_right))
            and hits(mid_mask, left_line, c_left)
            and hits(mid_mask, right_line, c_right)
            and avoids(mid_mask, (c_top, c_bot)))


def compute_Xn(cfg, report, metric_kind):
    """D(u, v) in the chosen metric on the open cluster through the pinch."""
    if not report.holds:
        raise ValueError("event report does not hold; X_n undefined")
    u, v = report.u, report.v
    if u == v:
        return 0.0
    grid = cfg.grid()
    box = cfg.box
    ur, uc = u.b - box.lo.b, u.a - box.lo.a
    vr, vc = v.b - box.lo.b, v.a - box.lo.a
    if not (grid[ur, uc] and grid[vr, vc]):
        raise AssertionError("pinch points must be open sites")
    if metric_kind == "geo":
        dist = _kernels.grid_bfs(grid, np.array([ur], dtype=np.int64),
                                 np.array([uc], dtype=np.int64), True)
        d = int(dist[vr, vc])
        if d < 0:
            raise AssertionError("pinch points must share an open cluster")
        return float(d)
    if metric_kind == "res":
        from .resistance import ClusterResistor
        open_labels, _ = label_mask(grid)
        lab = open_labels[ur, uc]
        if open_labels[vr, vc] != lab:
            raise AssertionError("pinch points must share an open cluster")
        rows, cols = np.nonzero(open_labels == lab)
        sites = np.column_stack([cols + box.lo.a, rows + box.lo.b])
        return ClusterResistor(sites).resistance(u, v)
    raise ValueError(f"metric_kind must be geo or res, got {metric_kind!r}")


def empirical_quantile(values, p):
    """inf{x : P(X <= x) >= 1 - p} for the empirical distribution."""
    xs = np.sort(np.asarray(values, dtype=np.float64))
    m = len(xs)
    k = math.ceil((1.0 - p) * m)
    k = min(max(k, 1), m)
    return float(xs[k - 1])


def conditional_samples(n, n_conditional, seed, strict=False, delta=None,
                        stall_attempts=10_000_000, min_rate=1e-4):
    """Rejection-sample until n_conditional configurations satisfy the event.

    Attempt i uses seed hash64(seed, n, i); accepted samples are returned in
    attempt order, so the result is worker-count and restart independent.
    Returns (list of (cfg, report), n_attempts).
    """
    out = []
    attempts = 0
    while len(out) < n_conditional:
        cfg = sample(n, hash64(seed, n, attempts))
        attempts += 1
        rep = detect_event_E(cfg, delta=delta, strict=strict)
        if rep.holds:
            out.append((cfg, rep))
        if attempts >= stall_attempts and len(out) < min_rate * attempts:
            raise AcceptanceStall(n, attempts, len(out))
    return out, attempts


def estimate_qn(n, p, metric_kind, n_conditional, seed, strict=False,
                delta=None, stall_attempts=10_000_000, min_rate=1e-4,
                _presampled=None):
    """Estimate q_n(p) by rejection sampling conditioned on the event.

    Deterministic in (n, p, metric_kind, n_conditional, seed, strict).  The
    harness may pass a shared ``_presampled`` (samples, attempts) bundle so
    both metrics reuse one rejection stream.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError(f"p must be in (0, 1/2], got {p}")
    if n_conditional < 100:
        raise ValueError("need at least 100 conditional samples")
    if _presampled is None:
        accepted, attempts = conditional_samples(
            n, n_conditional, seed, strict=strict, delta=delta,
            stall_attempts=stall_attempts, min_rate=min_rate)
    else:
        accepted, attempts = _presampled
        if len(accepted) < n_conditional:
            raise ValueError("presampled bundle smaller than n_conditional")
        accepted = accepted[:n_conditional]
    xs = [compute_Xn(cfg, rep, metric_kind) for cfg, rep in accepted]
    q_hat = empirical_quantile(xs, p)
    rng = np.random.Generator(np.random.PCG64(hash64(seed, n, 0xB007)))
    boot = np.empty(1000)
    arr = np.asarray(xs)
    for i in range(len(boot)):
        boot[i] = empirical_quantile(rng.choice(arr, size=len(arr)), p)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return QuantileEstimate(
        n=n, p=p, metric_kind=metric_kind, q_hat=q_hat,
        n_conditional_samples=n_conditional,
        ci=(min(float(lo), q_hat), max(float(hi), q_hat)),
        n_attempts=attempts, acceptance_rate=len(xs) / attempts,
        strict=strict, seed=seed)
