"""Experiment orchestration: plans, seed fan-out, JSONL persistence,
exponent fitting, and the acceptance report.

Data files are JSON Lines with sorted keys; a manifest (plan, code version,
rng id, seed derivation) sits next to each data file.  Reruns of the same
plan are byte-identical except manifest timestamps, independent of the
worker count: every sample i of size n uses seed hash64(base_seed, n, i)
and records are written in (size, sample) order.
"""

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .rng import RNG_ALGORITHM_ID, hash64

PLAN_KINDS = ["crossing", "arms", "qn", "metrics", "volume", "walk", "gh"]

PLAN_SCHEMA = {
    "type": "object",
    "required": ["kind", "sizes", "samples", "base_seed", "output_path"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": PLAN_KINDS},
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1},
                  "minItems": 1},
        "samples": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer"},
        "metric_kind": {"enum": ["geo", "res", "both"]},
        "p": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.5},
        "strict": {"type": "boolean"},
        "output_path": {"type": "string"},
        "options": {"type": "object"},
    },
}


@dataclass(frozen=True)
class ExperimentPlan:
    kind: str
    sizes: tuple
    samples: int
    base_seed: int
    output_path: str
    metric_kind: str = "both"
    p: float = 0.25
    strict: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(sorted(self.sizes)))
        validate_plan_dict(self.to_dict())

    def to_dict(self):
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        return d


def validate_plan_dict(doc):
    import jsonschema
    try:
        jsonschema.validate(doc, PLAN_SCHEMA)
    except jsonschema.ValidationError as e:
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValueError(f"invalid plan at {path}: {e.message}") from None
    if list(doc["sizes"]) != sorted(doc["sizes"]):
        raise ValueError("invalid plan at sizes: must be sorted ascending")


def plan_from_file(path):
    with open(path) as fh:
        doc = json.load(fh)
    validate_plan_dict(doc)
    doc["sizes"] = tuple(doc["sizes"])
    return ExperimentPlan(**doc)


def default_workers():
    env = os.environ.get("PERC_LAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# JSONL + manifest IO

def dump_record(rec):
    return json.dumps(rec, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def write_records(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dump_record(rec) + "\n")


def read_records(path, kind=None):
    out = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_no}: bad record: {e}") from None
            if kind is None or rec.get("kind") == kind:
                out.append(rec)
    return out


def write_manifest(data_path, plan):
    manifest = {
        "plan": plan.to_dict(),
        "code_version": __version__,
        "rng": RNG_ALGORITHM_ID,
        "seed_derivation":
            "sample_seed = hash64(base_seed, size, sample_index); "
            "hash64 folds arguments through SplitMix64",
        "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path = Path(str(data_path) + ".manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _parallel_chunks(sizes, n_samples, worker_fn, workers, chunk=None):
    """Run worker_fn(size, lo, hi) over sample ranges; keep output order."""
    if chunk is None:
        chunk = max(1, math.ceil(n_samples / (4 * max(workers, 1))))
    tasks = []
    for n in sizes:
        for lo in range(0, n_samples, chunk):
            tasks.append((n, lo, min(lo + chunk, n_samples)))
    if workers <= 1:
        results = [worker_fn(*t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: worker_fn(*t), tasks))
    records = []
    for recs in results:
        records.extend(recs)
    return records


# ---------------------------------------------------------------------------
# experiments

def run_crossing(plan, workers=1):
    """Per-sample open-LR / closed-TB indicators plus per-size summaries."""
    from .clusters import crossing_labels, label_mask
    from .config import sample

    def work(n, lo, hi):
        recs = []
        for i in range(lo, hi):
            cfg = sample(n, hash64(plan.base_seed, n, i))
            grid = cfg.grid()
            ol, k1 = label_mask(grid)
            open_lr = k1 > 0 and crossing_labels(ol, "LR").size > 0
            cl, k2 = label_mask(~grid)
            closed_tb = k2 > 0 and crossing_labels(cl, "TB").size > 0
            recs.append({"kind": "crossing", "n": n, "sample": i,
                         "open_lr": bool(open_lr),
                         "closed_tb": bool(closed_tb)})
        return recs

    records = _parallel_chunks(plan.sizes, plan.samples, work, workers)
    for n in plan.sizes:
        sub = [r for r in records if r["n"] == n]
        records.append({"kind": "crossing_summary", "n": n,
                        "hits": sum(r["open_lr"] for r in sub),
                        "samples": len(sub), "seed": plan.base_seed})
    return records


def run_arms(plan, workers=1):
    """Arm-probability estimates for the plan's query families.

    options["families"] is a list of [r, R_multiplier_ignored, sigma, half];
    each family is estimated at every plan size R (sizes are the outer
    radii).  Defaults to the one-arm family.
    """
    from .arms import estimate_arm_probability
    families = plan.options.get("families", [[1, "O", False]])
    records = []

    def work(task):
        (r, sigma, half), n = task
        if r >= n and not (r == n == 1):
            return None
        ac = estimate_arm_probability(r, n, sigma, half, plan.samples,
                                      plan.base_seed)
        return {"kind": "arm", "r": r, "R": n, "sigma": sigma, "half": half,
                "hits": ac.n_hits, "samples": ac.n_samples,
                "seed": plan.base_seed}

    tasks = [((int(f[0]), str(f[1]), bool(f[2])), n)
             for f in families for n in plan.sizes]
    if workers <= 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))
    records.extend(r for r in results if r is not None)
    return records


def run_qn(plan, workers=1):
    """Quantile estimates; one shared rejection stream fills both metrics."""
    from .normalizer import conditional_samples, estimate_qn
    metrics = (["geo", "res"] if plan.metric_kind == "both"
               else [plan.metric_kind])

    def work(n):
        bundle = conditional_samples(n, plan.samples, plan.base_seed,
                                     strict=plan.strict)
        recs = []
        for mk in metrics:
            est = estimate_qn(n, plan.p, mk, plan.samples, plan.base_seed,
                              strict=plan.strict, _presampled=bundle)
            recs.append({"kind": "qn", "n": n, "p": est.p, "metric": mk,
                         "q_hat": est.q_hat, "ci": list(est.ci),
                         "n_conditional_samples": est.n_conditional_samples,
                         "n_attempts": est.n_attempts,
                         "acceptance_rate": est.acceptance_rate,
                         "strict": est.strict, "seed": est.seed})
        return recs

    if workers <= 1:
        results = [work(n) for n in plan.sizes]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, plan.sizes))
    return [r for recs in results for r in recs]


def run_metrics(plan, workers=1):
    """Distance samples (geodesic, path bracket, resistance) on the largest
    open cluster of each sampled configuration."""
    from .clusters import label_clusters
    from .config import sample
    from .metrics import MetricSample, geodesic_distance, path_metric_bracket
    from .resistance import pairwise_resistance_fill
    pairs_per = plan.options.get("pairs_per_config", 5)

    def work(n, lo, hi):
        recs = []
        for i in range(lo, hi):
            cfg = sample(n, hash64(plan.base_seed, n, i))
            lab = label_clusters(cfg)
            open_clusters = [c for c in lab.clusters if c.color == "open"]
            if not open_clusters:
                continue
            big = open_clusters[0]
            sites = lab.sites_of(big.id)
            if len(sites) < 2:
                continue
            rng = np.random.Generator(np.random.PCG64(
                hash64(plan.base_seed, n, i, 0xA11)))
            samples = []
            for _ in range(pairs_per):
                ix, iy = rng.integers(0, len(sites), size=2)
                x = tuple(int(v) for v in sites[ix])
                y = tuple(int(v) for v in sites[iy])
                d = geodesic_distance(lab, x, y)
                plo, phi = path_metric_bracket(lab, x, y)
                samples.append(MetricSample(x=x, y=y, d_geo=d,
                                            d_path_lo=plo, d_path_hi=phi))
            for s in pairwise_resistance_fill(lab, samples):
                recs.append({"kind": "metric", "n": n,
                             "seed": hash64(plan.base_seed, n, i),
                             "x": list(s.x), "y": list(s.y),
                             "d_geo": s.d_geo if math.isfinite(s.d_geo) else None,
                             "d_path_lo": s.d_path_lo, "d_path_hi": s.d_path_hi,
                             "d_res": s.d_res if math.isfinite(s.d_res) else None})
        return recs

    return _parallel_chunks(plan.sizes, plan.samples, work, workers)


def run_volume(plan, workers=1):
    """Box counts Y_k of the largest cluster plus its normalized mass."""
    from .clusters import label_clusters
    from .config import sample
    from .measures import box_count_Yk, cluster_measure
    one_arm_hat = plan.options.get("one_arm_hat", {})

    def work(n, lo, hi):
        k_max = int(math.log2(n))
        recs = []
        for i in range(lo, hi):
            cfg = sample(n, hash64(plan.base_seed, n, i))
            lab = label_clusters(cfg)
            big = lab.clusters[0]
            for k in range(1, k_max + 1):
                recs.append({"kind": "yk", "n": n, "sample": i, "k": k,
                             "count": box_count_Yk(lab, big.id, k)})
            a_hat = float(one_arm_hat.get(str(n), one_arm_hat.get(n, 1.0)))
            mu = cluster_measure(lab, big.id, a_hat)
            recs.append({"kind": "measure", "n": n, "cluster": big.id,
                         "mass": mu.total_mass})
        return recs

    return _parallel_chunks(plan.sizes, plan.samples, work, workers)


def run_walk(plan, workers=1):
    """Return-probability series and exit times on one-arm environments.

    sizes[] is interpreted as window radii r; options: R_factor (default
    128), t_max (default 512), exit_radii (default powers of 2 below r).
    """
    from .walk import (_ArmScratch, expected_exit_time,
                       return_probability_series, sample_iic_environment)
    r_factor = int(plan.options.get("R_factor", 128))
    t_max = int(plan.options.get("t_max", 512))
    records = []
    for r in plan.sizes:
        exit_radii = plan.options.get(
            "exit_radii", [2 ** j for j in range(2, int(math.log2(r)) + 1)])
        scratch = _ArmScratch(r_factor * r)
        for i in range(plan.samples):
            env = sample_iic_environment(
                r, r_factor, hash64(plan.base_seed, r, i), scratch=scratch)
            series = return_probability_series(env, t_max // 2)
            for t in range(1, len(series)):
                records.append({"kind": "walk", "n": r, "env": i, "t": 2 * t,
                                "p2t": float(series[t])})
            for radius in exit_radii:
                sites = env.sites
                d = np.maximum(np.abs(sites[:, 0] - env.start.a),
                               np.abs(sites[:, 1] - env.start.b))
                if not (d >= radius).any():
                    continue
                records.append({"kind": "exit", "n": r, "env": i,
                                "radius": int(radius),
                                "e_tau": expected_exit_time(env, radius)})
        records.append({"kind": "walk_env_meta", "n": r,
                        "R_factor": r_factor, "samples": plan.samples,
                        "seed": plan.base_seed, "conditioning": "one_arm"})
    return records


def run_gh(plan, workers=1):
    """Embedding-correspondence GH diagnostics between coupled sizes n, 2n."""
    from .clusters import label_clusters
    from .config import sample
    from .ghtool import UncoveredPoint, geodesic_space, gh_upper_by_embedding
    n_pairs = plan.samples
    q = plan.options.get("q_geo", {})
    records = []
    for n in plan.sizes:
        q1 = float(q.get(str(n), q.get(n, n ** 1.13)))
        q2 = float(q.get(str(2 * n), q.get(2 * n, (2 * n) ** 1.13)))
        for i in range(n_pairs):
            spaces = []
            for (size, qq, tag) in ((n, q1, 1), (2 * n, q2, 2)):
                cfg = sample(size, hash64(plan.base_seed, size, i, tag))
                lab = label_clusters(cfg)
                big = next(c for c in lab.clusters if c.color == "open")
                sp = geodesic_space(lab, big.id,
                                    max_points=plan.options.get("max_points", 60))
                spaces.append(_rescaled_space(sp, qq))
            radius = 4.0 / n
            while True:
                try:
                    val = gh_upper_by_embedding(spaces[0], spaces[1], radius)
                    break
                except UncoveredPoint:
                    radius *= 2.0
                    if radius > 8.0:
                        raise
            records.append({"kind": "gh", "n1": n, "n2": 2 * n,
                            "metric": "geo", "value": val,
                            "match_radius": radius, "pair": i})
    return records


def _rescaled_space(space, q):
    from .ghtool import FiniteMetricSpace
    return FiniteMetricSpace(points=space.points, dist=space.dist / q,
                             embedding=space.embedding)


RUNNERS = {
    "crossing": run_crossing,
    "arms": run_arms,
    "qn": run_qn,
    "metrics": run_metrics,
    "volume": run_volume,
    "walk": run_walk,
    "gh": run_gh,
}


def run(plan, workers=None):
    """Execute a plan, stream records to plan.output_path, write manifest."""
    if workers is None:
        workers = default_workers()
    records = RUNNERS[plan.kind](plan, workers=workers)
    write_records(plan.output_path, records)
    write_manifest(plan.output_path, plan)
    return Path(plan.output_path)


# ---------------------------------------------------------------------------
# exponent fitting

@dataclass(frozen=True)
class ExponentFit:
    xs: tuple
    ys: tuple
    slope: float
    intercept: float
    stderr: float
    window: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or len(self.xs) < 2:
            raise ValueError("need at least 2 (x, y) points")


def fit_exponent(records, x_field, y_field, window=None):
    """OLS slope of log(y) against log(x) over records within the window.

    Records with equal x are averaged (in y) before fitting, so Monte-Carlo
    replicates at one size enter as their mean.
    """
    by_x = {}
    for rec in records:
        x, y = rec[x_field], rec[y_field]
        if window and not (window[0] <= x <= window[1]):
            continue
        by_x.setdefault(float(x), []).append(float(y))
    xs = sorted(by_x)
    ys = [float(np.mean(by_x[x])) for x in xs]
    if len(xs) < 2:
        raise ValueError(f"need >= 2 distinct x values in window, got {len(xs)}")
    if any(y <= 0 for y in ys):
        raise ValueError("log-log fit needs positive y values")
    if xs[0] <= 0:
        raise ValueError("log-log fit needs positive x values")
    lx, ly = np.log(np.asarray(xs)), np.log(np.asarray(ys))
    if np.allclose(lx, lx[0]):
        raise ValueError("degenerate x values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    dof = len(xs) - 2
    sxx = float(((lx - lx.mean()) ** 2).sum())
    stderr = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else 0.0
    return ExponentFit(xs=tuple(xs), ys=tuple(ys), slope=float(slope),
                       intercept=float(intercept), stderr=stderr,
                       window=tuple(window) if window else (xs[0], xs[-1]))


def fit_record(fit, label):
    return {"kind": "fit", "label": label, "slope": fit.slope,
            "intercept": fit.intercept, "stderr": fit.stderr,
            "window": list(fit.window), "xs": list(fit.xs),
            "ys": list(fit.ys)}
