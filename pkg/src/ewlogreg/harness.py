"""Experiment harness: online protocol, comparator and regret, sweeps, lemma checks, outputs."""

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .data_io import Dataset, HazanConfig, gen_hazan, load_data, permute
from .loss import logistic_loss, loss_grad_scalar, sigmoid, smooth
from .posterior import PosteriorSpec
from .predictors import OGD, PREDICTORS, corollary_schedule, ew_predict_exact

THREADS_ENV = "EWLR_THREADS"
ROUND_FIELDS = ("t", "loss", "cum_loss", "avg_loss", "acceptance", "h", "q_t")


class RoundError(RuntimeError):
    pass


@dataclass
class RunConfig:
    data: str = "gen:gaussian:n=200,d=2,norm=2"
    predictor: str = "ew-exact"
    B: float = 5.0
    n: int = 200
    seed: int = 0
    repeats: int = 1
    out: str = "runs/out"
    R: float = None
    normalize: bool = False
    permute: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")
        if self.predictor not in PREDICTORS:
            raise ValueError(f"unknown predictor {self.predictor!r}; choose from {sorted(PREDICTORS)}")


@dataclass(frozen=True)
class RoundLog:
    t: int
    loss: float
    cum_loss: float
    avg_loss: float
    acceptance: float
    h: float
    q_t: int


@dataclass(frozen=True)
class RegretReport:
    comparator_loss: float
    comparator_theta: np.ndarray
    regret: float = float("nan")
    converged: bool = True
    iterations: int = 0


def n_workers():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Map over independent tasks, in worker processes when ``EWLR_THREADS`` > 1."""
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def make_learner(name, B, d, R=1.0, n=None, seed=0, **options):
    cls = PREDICTORS[name]
    if name == "ew-theory":
        return cls(B, d, n=n, R=R, seed=seed, **options)
    if name in ("ew-practical", "solid-angle"):
        return cls(B, d, R=R, seed=seed, **options)
    return cls(B, d, R=R, **options)


def run_online(data, learner, n=None):
    """Strict online protocol: predict round ``t`` from rounds ``< t``, then reveal ``y_t``."""
    n = data.n if n is None else min(n, data.n)
    logs, cum = [], 0.0
    for i in range(n):
        x, y = data.X[i], data.y[i]
        try:
            pred = learner.predict(x)
            loss = pred.loss(y)
        except Exception as exc:
            raise RoundError(f"round {i + 1}: {exc}") from exc
        cum += loss
        st = learner.stats
        logs.append(RoundLog(t=i + 1, loss=loss, cum_loss=cum, avg_loss=cum / (i + 1),
                             acceptance=float(st["acceptance"]), h=float(st["h"]),
                             q_t=int(st["transitions"])))
        try:
            learner.update(x, y)
        except Exception as exc:
            raise RoundError(f"round {i + 1} update: {exc}") from exc
    return logs


def run_config(cfg, data=None):
    """Resolve the data of a :class:`RunConfig` and run it once per repeat."""
    results = []
    for r in range(cfg.repeats):
        seed = cfg.seed + r
        ds = data if data is not None else load_data(cfg.data, seed=seed, normalize=cfg.normalize)
        if cfg.permute:
            ds = permute(ds, seed)
        n = min(cfg.n, ds.n)
        R = cfg.R if cfg.R is not None else max(ds.head(n).R, 1e-12)
        learner = make_learner(cfg.predictor, cfg.B, ds.d, R, n=n, seed=seed, **cfg.options)
        results.append((seed, ds, run_online(ds, learner, n)))
    return results


def _objective(X, y, theta):
    z = y * (X @ theta)
    return float(np.sum(logistic_loss(z))), (loss_grad_scalar(z) * y) @ X


def _project(theta, B):
    nrm = np.linalg.norm(theta)
    return theta if nrm <= B else theta * (B / nrm)


def _pgd(X, y, B, theta, tol, max_iter):
    f, g = _objective(X, y, theta)
    step = 1.0 / max(1e-12, 0.25 * np.linalg.norm(X, 2) ** 2)
    for it in range(1, max_iter + 1):
        if np.linalg.norm(theta - _project(theta - g, B)) <= tol:
            return theta, f, True, it
        # Armijo backtracking along the projection arc, Barzilai-Borwein initial step
        s = step
        while True:
            cand = _project(theta - s * g, B)
            fc, gc = _objective(X, y, cand)
            if fc <= f + g @ (cand - theta) + (0.5 / s) * np.sum((cand - theta) ** 2) or s < 1e-20:
                break
            s *= 0.5
        dx, dg = cand - theta, gc - g
        theta, f, g = cand, fc, gc
        curv = dx @ dg
        step = (dx @ dx) / curv if curv > 0 else s * 2.0
    return theta, f, False, max_iter


def comparator_loss(data, B, tol=1e-9, max_iter=100_000, cache_dir=None, warm=None):
    """``min_{|theta| <= B} sum_t logloss(y_t <theta, x_t>)`` by projected gradient.

    Restarts from 0 and from the final OGD iterate (or ``warm``); keeps the better.
    With ``cache_dir`` results are cached on disk keyed by a content hash.
    """
    X, y = data.X, data.y
    if data.n == 0:
        return RegretReport(0.0, np.zeros(data.d))
    key = None
    if cache_dir is not None:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(X).tobytes())
        h.update(np.ascontiguousarray(y).tobytes())
        h.update(repr((float(B), tol, X.shape)).encode())
        key = os.path.join(cache_dir, f"comparator-{h.hexdigest()[:32]}.json")
        if os.path.exists(key):
            with open(key, encoding="utf-8") as fh:
                c = json.load(fh)
            return RegretReport(c["value"], np.array(c["theta"]), converged=c["converged"],
                                iterations=c["iterations"])
    if warm is None:
        ogd = OGD(B, data.d, R=max(data.R, 1e-12))
        for x, yy in zip(X, y):
            ogd.update(x, yy)
        warm = ogd.theta
    best = None
    for start in (np.zeros(data.d), _project(np.asarray(warm, dtype=np.float64), B)):
        res = _pgd(X, y, B, start, tol, max_iter)
        if best is None or res[1] < best[1]:
            best = res
    theta, f, ok, it = best
    rep = RegretReport(f, theta, converged=ok, iterations=it)
    if key is not None:
        os.makedirs(cache_dir, exist_ok=True)
        with open(key, "w", encoding="utf-8") as fh:
            json.dump({"value": f, "theta": theta.tolist(), "converged": ok, "iterations": it}, fh)
    return rep


def regret_report(logs, data, B, **kwargs):
    comp = comparator_loss(data.head(len(logs)), B, **kwargs)
    total = logs[-1].cum_loss if logs else 0.0
    return RegretReport(comp.comparator_loss, comp.comparator_theta, total - comp.comparator_loss,
                        comp.converged, comp.iterations)


def exact_cumulative_loss(data, B, n=None):
    """EW cumulative loss through the normaliser, ``-log E_prior[prod_t sigmoid(y_t <x_t, theta>)]``."""
    from .quadrature import log_normalizer

    n = data.n if n is None else n
    spec = PosteriorSpec(B=B, d=data.d, X=data.X[:n], y=data.y[:n])
    log_z0 = 0.5 * data.d * math.log(2 * math.pi * B * B)
    return -(log_normalizer(spec) - log_z0)


def _sweep_task(args):
    data, predictor, B, seed, n, options = args
    ds = permute(data, seed)
    learner = make_learner(predictor, B, ds.d, max(ds.head(n).R, 1e-12), n=n, seed=seed, **options)
    return run_online(ds, learner, n)[-1].avg_loss


def sweep_B(data, predictor, B_grid, seeds=(0, 1, 2, 3, 4), n=None, options=None):
    """Average loss at round ``n`` across permutations, per prior scale.

    Returns rows ``{"B", "median", "q25", "q75", "values"}``.
    """
    B_grid = list(B_grid)
    if not B_grid:
        raise ValueError("B grid is empty")
    n = data.n if n is None else min(n, data.n)
    tasks = [(data, predictor, float(B), s, n, options or {}) for B in B_grid for s in seeds]
    vals = pmap(_sweep_task, tasks)
    rows, k = [], len(seeds)
    for i, B in enumerate(B_grid):
        v = np.array(vals[i * k:(i + 1) * k])
        q25, med, q75 = np.percentile(v, [25, 50, 75])
        rows.append({"B": float(B), "median": float(med), "q25": float(q25), "q75": float(q75),
                     "values": [float(a) for a in v]})
    return rows


def _chi_task(args):
    n, chi, seed, predictor, eps, options = args
    data = gen_hazan(HazanConfig(n=n, eps=eps, chi=chi, seed=seed))
    B = data.meta["B"]
    learner = make_learner(predictor, B, 1, R=1.0, n=n, seed=seed, **options)
    logs = run_online(data, learner)
    return regret_report(logs, data, B).regret


def worst_of_chi(n, seeds, predictor="ew-practical", eps=0.01, options=None):
    """Mean regret over seeds for each ``chi`` in (+1, -1) on the adversarial process; the worse one.

    Returns ``(worst_mean, {chi: (mean, stderr, values)})``.
    """
    per = {}
    for chi in (1, -1):
        vals = np.array(pmap(_chi_task, [(n, chi, s, predictor, eps, options or {}) for s in seeds]))
        se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
        per[chi] = (float(vals.mean()), se, vals.tolist())
    return max(m for m, _, _ in per.values()), per


# lemma checks -----------------------------------------------------------------

def _check(name, passed, value, bound, **detail):
    return {"name": name, "passed": bool(passed), "value": float(value), "bound": float(bound),
            "detail": detail}


def verify_lemmas(seed=0):
    """Run the numeric property checks at a fixed seed; returns a machine-readable report."""
    from .geometry import (BCRIT_CONST, cap_probability_check, cone_cap_inclusion_check,
                           margin_report)
    from .posterior import renyi2_between_rungs
    from .quadrature import log_normalizer

    rng = np.random.default_rng([seed, 2024])
    out = []

    # smoothing: total extra loss from smoothing the exact EW prediction
    n = 12
    X = rng.uniform(-1, 1, (n, 1))
    y = np.where(rng.random(n) < 0.6, 1.0, -1.0)
    alpha = 1 / (2 * n)
    spec = PosteriorSpec(B=2.0, d=1)
    extra, cum = 0.0, 0.0
    for t in range(n):
        p = ew_predict_exact(spec, X[t]).prob(y[t])
        extra += -math.log(smooth(p, alpha)) + math.log(p)
        cum += -math.log(p)
        spec = spec.extend(X[t], y[t])
    out.append(_check("smoothing_additive", extra <= 2 * n * alpha, extra, 2 * n * alpha, n=n))

    # telescoping identity: the cumulative exact loss equals minus the log evidence
    log_z0 = 0.5 * math.log(2 * math.pi * 4.0)
    evidence = -(log_normalizer(spec) - log_z0)
    rel = abs(math.expm1(evidence - cum))
    out.append(_check("telescoping_identity", rel <= 1e-6, rel, 1e-6))

    # TV shift: -log smooth(q) <= -log smooth(p) + 2 |p - q| / alpha
    p = rng.random(10_000)
    q = np.clip(p + rng.uniform(-0.05, 0.05, p.size), 0, 1)
    for a in (0.01, 0.1, 0.5):
        gap = np.max(-np.log(smooth(q, a)) + np.log(smooth(p, a)) - 2 * np.abs(p - q) / a)
        out.append(_check(f"tv_shift_alpha={a}", gap <= 1e-12, gap, 0.0))

    # Chernoff hypothesis of the corollary schedule
    for nn in (1, 5, 10, 100, 1000):
        for dl in (0.1, 0.01):
            s = corollary_schedule(nn, dl)
            lhs, rhs = s.alpha * s.s, 16 * math.log(1 / s.delta_t)
            out.append(_check(f"chernoff_schedule_n={nn}_delta={dl}", lhs >= rhs, lhs, rhs))

    # Renyi rung bound in d = 1
    for B in (0.5, 1.0, 2.0):
        k = int(rng.integers(1, 4))
        Xr = rng.uniform(-1, 1, (k, 1))
        Xr[-1] = np.sign(Xr[-1]) * max(abs(Xr[-1, 0]), 0.5)
        yr = np.where(rng.random(k) < 0.5, 1.0, -1.0)
        spec_r = PosteriorSpec(B=B, d=1, X=Xr, y=yr, R=1.0)
        for v, dv in ((0.0, 0.1), (0.5, 0.25), (0.0, 1.0), (0.9, -0.3)):
            D2 = renyi2_between_rungs(spec_r, v, dv)
            bound = dv**2 * 1.0 * B**2
            out.append(_check(f"renyi_B={B}_v={v}_dv={dv}", D2 <= bound, D2, bound, k=k))

    # sigma(z) >= 1 - exp(-z) for z >= 0, compared as sigma(-z) <= exp(-z) to avoid cancellation
    z = np.linspace(0, 50, 100_001)
    gap = float(np.min(np.exp(-z) - sigmoid(-z)))
    out.append(_check("sigmoid_lower_bound", gap >= 0, gap, 0.0))

    # cap probability lower bound, up to 3 Monte-Carlo standard errors
    mc = 100_000
    for d in (2, 3, 5, 10):
        for t in (0.0, 0.3, 0.6, 0.9):
            emp, lb = cap_probability_check(d, t, mc, seed=[seed, d, int(10 * t)])
            se = math.sqrt(max(emp * (1 - emp), 1.0 / mc) / mc)
            out.append(_check(f"cap_probability_d={d}_t={t}", emp >= lb - 3 * se, emp, lb - 3 * se))

    # alpha(t1) >= gamma / (2 (2 + sqrt 2)) on random separable instances
    worst = math.inf
    for _ in range(100):
        d = int(rng.integers(2, 6))
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        Xs = rng.standard_normal((int(rng.integers(3, 30)), d)) * rng.uniform(0.2, 3.0)
        ys = np.sign(Xs @ u)
        ys[ys == 0] = 1.0
        rep = margin_report(Xs, ys, u)
        if rep.separable:
            worst = min(worst, rep.alpha_t1 - rep.gamma / BCRIT_CONST)
    out.append(_check("alpha_t1_lower_bound", worst >= 0, worst, 0.0))

    # cap-in-cone inclusion on one random separable instance
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    Xs = rng.standard_normal((20, 3))
    ys = np.sign(Xs @ u)
    rep = margin_report(Xs, ys, u)
    ok = cone_cap_inclusion_check(Xs, ys, u, rep.t1, 10_000, seed=seed)
    out.append(_check("cap_in_cone", ok, float(ok), 1.0))

    # chi-square median fact
    for d in range(2, 11):
        draws = rng.chisquare(d, 100_000)
        frac = float(np.mean(draws >= d - 1))
        out.append(_check(f"chi2_median_d={d}", frac >= 0.5, frac, 0.5))

    return {"seed": seed, "passed": all(c["passed"] for c in out), "checks": out}


# outputs ----------------------------------------------------------------------

def write_round_csv(logs, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROUND_FIELDS)
        for r in logs:
            w.writerow([r.t, repr(r.loss), repr(r.cum_loss), repr(r.avg_loss), repr(r.acceptance),
                        repr(r.h), r.q_t])


def read_round_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != ROUND_FIELDS:
        raise ValueError(f"unexpected header {rows[0]}")
    return [RoundLog(int(r[0]), float(r[1]), float(r[2]), float(r[3]), float(r[4]), float(r[5]),
                     int(r[6])) for r in rows[1:]]


def write_table_csv(rows, path, columns):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(a) for a in v)
    return str(v)


def emit_outputs(logs, path, summary=None, plot=True, title="average log-loss"):
    """Write ``rounds.csv``, ``summary.csv`` and (optionally) ``avg_loss.svg`` under ``path``."""
    from .svg import line_plot

    os.makedirs(path, exist_ok=True)
    write_round_csv(logs, os.path.join(path, "rounds.csv"))
    summary = dict(summary or {})
    if logs:
        summary.setdefault("n", logs[-1].t)
        summary.setdefault("cum_loss", logs[-1].cum_loss)
        summary.setdefault("avg_loss", logs[-1].avg_loss)
    keys = sorted(summary)
    write_table_csv([summary], os.path.join(path, "summary.csv"), keys)
    if plot:
        svg = line_plot({"avg loss": ([r.t for r in logs], [r.avg_loss for r in logs])},
                        title=title, xlabel="round t", ylabel="average log-loss")
        with open(os.path.join(path, "avg_loss.svg"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)


def emit_sweep(rows, path, plot=True):
    from .svg import line_plot

    os.makedirs(path, exist_ok=True)
    write_table_csv(rows, os.path.join(path, "sweep.csv"), ["B", "median", "q25", "q75", "values"])
    if plot:
        xs = [r["B"] for r in rows]
        svg = line_plot({"median": (xs, [r["median"] for r in rows]),
                         "q25": (xs, [r["q25"] for r in rows]),
                         "q75": (xs, [r["q75"] for r in rows])},
                        title="average loss at round n", xlabel="B", ylabel="average log-loss",
                        logx=True)
        with open(os.path.join(path, "sweep.svg"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(svg)


def write_config(cfg, path):
    """Record the fully resolved configuration next to the outputs."""
    os.makedirs(path, exist_ok=True)
    d = asdict(cfg) if hasattr(cfg, "__dataclass_fields__") else dict(cfg)
    with open(os.path.join(path, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def config_fields():
    return [f.name for f in fields(RunConfig)]
