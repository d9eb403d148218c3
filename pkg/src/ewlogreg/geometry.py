"""Separable-data geometry: version cones, margin slices, the SVM mode and margin bounds.

``ConeSlice(rows, gamma)`` encodes ``{theta : <a_i, theta> >= gamma}`` with
``a_i = y_i x_i``; ``gamma = 0`` stands for the open version cone.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import lsq_linear
from scipy.special import gammaln

from .rng import make_rng

BCRIT_CONST = 2.0 * (2.0 + math.sqrt(2.0))


@dataclass(frozen=True, eq=False)
class ConeSlice:
    rows: np.ndarray
    gamma: float = 0.0

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_data(cls, X, y, gamma=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return cls(rows=np.asarray(y, dtype=np.float64)[:, None] * X, gamma=gamma)

    @property
    def d(self):
        return self.rows.shape[1]

    def contains(self, theta):
        """Membership, strict for the open cone. Vectorised over leading axes."""
        m = np.asarray(theta, dtype=np.float64) @ self.rows.T
        ok = m > 0 if self.gamma == 0 else m >= self.gamma
        return np.all(ok, axis=-1)

    def scaled(self, gamma):
        return ConeSlice(self.rows, gamma)


@dataclass(frozen=True)
class SvmSolution:
    w: np.ndarray
    theta: np.ndarray
    margin_norm: float
    feasible: bool


@dataclass(frozen=True)
class MarginReport:
    gamma: float
    R: float
    gamma_bar: float
    t0: float
    t1: float
    alpha_t1: float
    lambda0: float
    B_critic: float
    n: int
    d: int
    separable: bool


def _ldp(G, h):
    """``min |x|`` subject to ``G x >= h`` via the NNLS dual; ``None`` if infeasible."""
    m, d = G.shape
    E = np.vstack([G.T, h[None, :]])
    f = np.zeros(d + 1)
    f[-1] = 1.0
    # bounded-variable least squares; scipy 1.15's nnls can stop at non-optimal points
    u = lsq_linear(E, f, bounds=(0.0, np.inf), method="bvls", tol=1e-15).x
    r = E @ u - f
    if abs(r[-1]) < 1e-12:
        return None, u
    return -r[:d] / r[-1], u


def _polish(G, h, x, u, tol=1e-12):
    """Re-solve the KKT system on the detected active set for full accuracy."""
    active = np.flatnonzero(u > tol * max(1.0, u.max(initial=0.0)))
    if active.size == 0:
        return x
    GA = G[active]
    lam, *_ = np.linalg.lstsq(GA @ GA.T, h[active], rcond=None)
    cand = GA.T @ lam
    if np.all(lam >= -1e-12) and np.all(G @ cand >= h - 1e-10 * max(1.0, np.abs(h).max())):
        return cand
    return x


def min_norm_point(cone):
    """Minimum-norm point of the slice ``{<a_i, theta> >= gamma}`` (hard-margin SVM).

    Returns the slice point ``theta`` and the SVM direction ``w = theta / gamma``.
    An open cone (``gamma = 0``) is treated through the unit slice. Infeasible
    (non-separable) data give ``feasible=False``.
    """
    gamma = cone.gamma if cone.gamma > 0 else 1.0
    G = cone.rows
    h = np.full(G.shape[0], gamma)
    x, u = _ldp(G, h)
    if x is None:
        nan = np.full(cone.d, np.nan)
        return SvmSolution(w=nan, theta=nan, margin_norm=float("nan"), feasible=False)
    x = _polish(G, h, x, u)
    if np.min(G @ x) < gamma * (1 - 1e-8):
        nan = np.full(cone.d, np.nan)
        return SvmSolution(w=nan, theta=nan, margin_norm=float("nan"), feasible=False)
    w = x / gamma
    return SvmSolution(w=w, theta=x if cone.gamma > 0 else w, margin_norm=float(np.linalg.norm(w)),
                       feasible=True)


def min_norm_point_bruteforce(cone):
    """Exhaustive KKT enumeration over active sets of size <= d (small instances only)."""
    gamma = cone.gamma if cone.gamma > 0 else 1.0
    G = cone.rows
    best = None
    for k in range(1, min(G.shape[0], cone.d) + 1):
        for S in combinations(range(G.shape[0]), k):
            GA = G[list(S)]
            M = GA @ GA.T
            if np.linalg.matrix_rank(M) < k:
                continue
            lam = np.linalg.solve(M, np.full(k, gamma))
            if np.any(lam < -1e-12):
                continue
            x = GA.T @ lam
            if np.all(G @ x >= gamma - 1e-9) and (best is None or x @ x < best @ best):
                best = x
    return best


def truncated_gaussian_mode(cone):
    """Mode of ``N(0, I)`` restricted to the slice, i.e. its minimum-norm point."""
    if not cone.gamma > 0:
        raise ValueError("the mode is defined for gamma > 0")
    sol = min_norm_point(cone)
    if not sol.feasible:
        raise ValueError("slice is empty (data not separable)")
    return sol.theta


def margin_report(X, y, u, n=None, k=BCRIT_CONST):
    """Margin quantities of a separating direction ``u`` (normalised here).

    ``n`` is the horizon entering ``log(2n)`` (defaults to the sample size);
    ``k`` is the constant of the one-dimensional threshold ``k log(2n) / gamma``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    nu = np.linalg.norm(u)
    if nu == 0:
        raise ValueError("direction must be nonzero")
    u = u / nu
    n = X.shape[0] if n is None else int(n)
    d = X.shape[1]
    gamma = float(np.min(y * (X @ u)))
    R = float(np.max(np.linalg.norm(X, axis=1)))
    gbar = gamma / R
    t0 = 1.0 / math.sqrt(1.0 + gbar**2)
    t1 = 0.5 * (1.0 + t0)
    alpha = gamma * t1 - R * math.sqrt(1.0 - t1**2)
    sep = gamma > 0
    lam0 = math.log(2 * n) / alpha if sep else float("nan")
    if not sep:
        bc = float("nan")
    elif d >= 2:
        bc = BCRIT_CONST * math.log(2 * n) / (gamma * math.sqrt(d - 1))
    else:
        bc = k * math.log(2 * n) / gamma
    return MarginReport(gamma=gamma, R=R, gamma_bar=gbar, t0=t0, t1=t1, alpha_t1=alpha,
                        lambda0=lam0, B_critic=bc, n=n, d=d, separable=sep)


def cap_constant(d):
    """``c_d = Gamma(d/2) / ((d - 1) sqrt(pi) Gamma((d - 1)/2))``."""
    return math.exp(gammaln(d / 2) - gammaln((d - 1) / 2)) / ((d - 1) * math.sqrt(math.pi))


def chi_tail_constant(d):
    """``e^{-3/2} / (2^{d/2 - 1} Gamma(d/2))``."""
    return math.exp(-1.5 - (d / 2 - 1) * math.log(2) - gammaln(d / 2))


def uniform_sphere(rng, n, d):
    z = rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def cap_probability_check(d, t, mc, seed=0):
    """Monte-Carlo cap probability ``P(<U, e_1> >= t)`` and its analytic lower bound."""
    if d < 2 or not 0 <= t < 1:
        raise ValueError("need d >= 2 and t in [0, 1)")
    rng = make_rng(seed)
    hits, left = 0, mc
    while left:
        m = min(left, 200_000)
        hits += int(np.sum(uniform_sphere(rng, m, d)[:, 0] >= t))
        left -= m
    return hits / mc, cap_constant(d) * (1 - t * t) ** ((d - 1) / 2)


def cone_cap_inclusion_check(X, y, u, t1, mc, seed=0):
    """Check ``min_i y_i <x_i, v> >= gamma t1 - R sqrt(1 - t1^2)`` on sampled cap directions.

    Directions are drawn with ``<v, u>`` uniform on ``[t1, 1]`` plus ``mc // 10``
    on the cap boundary, where the bound is tightest.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    A = np.asarray(y, dtype=np.float64)[:, None] * X
    u = np.asarray(u, dtype=np.float64)
    u = u / np.linalg.norm(u)
    gamma = float(np.min(A @ u))
    R = float(np.max(np.linalg.norm(X, axis=1)))
    bound = gamma * t1 - R * math.sqrt(max(0.0, 1 - t1 * t1))
    d = u.size
    rng = make_rng(seed)
    a = np.concatenate([rng.uniform(t1, 1.0, mc), np.full(mc // 10, t1)])
    if d == 1:
        V = np.broadcast_to(u, (a.size, 1))
    else:
        w = rng.standard_normal((a.size, d))
        w -= np.outer(w @ u, u)
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        V = a[:, None] * u + np.sqrt(1 - a * a)[:, None] * w
    margins = np.min(V @ A.T, axis=1)
    return bool(np.all(margins >= bound - 1e-12))


def cumulative_loss_bound(report, B, d, tight=False):
    """Diagnostic upper bound on the EW cumulative loss for separable data.

    ``1 - log c_d + angular + Rad``. The angular term is ``(d - 1) log(2 / gbar)``;
    with ``tight=True`` the sharper ``(d - 1)/2 log(1 / (1 - t1^2))`` is used.
    ``Rad`` is ``log 2`` once ``B >= lambda0 / sqrt(d - 1)`` and
    ``(lambda0 / B)^2 / 2 - log c_chi`` below that.
    """
    if d < 2:
        raise ValueError("bound is stated for d >= 2")
    if not report.separable:
        return float("inf")
    if tight:
        angular = 0.5 * (d - 1) * math.log(1.0 / (1.0 - report.t1**2))
    else:
        angular = (d - 1) * math.log(2.0 / report.gamma_bar)
    if B >= report.lambda0 / math.sqrt(d - 1):
        rad = math.log(2.0)
    else:
        rad = 0.5 * (report.lambda0 / B) ** 2 - math.log(chi_tail_constant(d))
    return 1.0 - math.log(cap_constant(d)) + angular + rad


def _feasible_direction(cone):
    sol = min_norm_point(cone.scaled(1.0))
    if not sol.feasible:
        raise ValueError("cone is empty: no strictly feasible direction")
    return sol.w


def exact_solid_angle_2d(cone, x):
    """Exact ``P(<x, theta> > 0)`` for ``N(0, I)`` conditioned on an open 2-D cone.

    Directions of a standard Gaussian are uniform on the circle, so this is the
    favourable fraction of the cone's arc of directions.
    """
    if cone.d != 2:
        raise ValueError("two-dimensional cones only")
    x = np.asarray(x, dtype=np.float64)
    if not np.any(x):
        return 0.5
    w = _feasible_direction(cone)
    ref = math.atan2(w[1], w[0])

    def arc(a):
        # half-circle of directions with positive inner product, relative to ref
        c = math.atan2(a[1], a[0]) - ref
        c = (c + math.pi) % (2 * math.pi) - math.pi
        return c - math.pi / 2, c + math.pi / 2

    lo, hi = -math.pi, math.pi
    for a in cone.rows:
        if np.any(a):
            a_lo, a_hi = arc(a)
            lo, hi = max(lo, a_lo), min(hi, a_hi)
    width = hi - lo
    xl, xh = arc(x)
    fav = 0.0
    # the favourable half-circle may wrap around +-pi relative to ref
    for shift in (-2 * math.pi, 0.0, 2 * math.pi):
        fav += max(0.0, min(hi, xh + shift) - max(lo, xl + shift))
    return fav / width


def hit_and_run_cone(cone, n_samples, seed=0, burn_in=1000, n_chains=256):
    """Approximate draws of ``N(0, I)`` restricted to a polyhedral slice.

    Gibbs-style hit-and-run: a uniform random direction, then an exact draw of the
    one-dimensional truncated Gaussian along that line. ``burn_in`` steps are
    discarded per chain; heuristic for high dimension.
    """
    from scipy.stats import truncnorm

    rng = make_rng(seed)
    A = cone.rows
    g = cone.gamma
    w = _feasible_direction(cone)
    # strictly interior start: margin max(1, 2 gamma)
    theta = np.tile(w * max(1.0, 2.0 * g), (n_chains, 1))
    out = []
    total_steps = burn_in + math.ceil(n_samples / n_chains)
    for step in range(total_steps):
        u = uniform_sphere(rng, n_chains, cone.d)
        au = u @ A.T
        slack = theta @ A.T - g
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = -slack / au
        lo = np.max(np.where(au > 0, ratio, -np.inf), axis=1)
        hi = np.min(np.where(au < 0, ratio, np.inf), axis=1)
        mu = -np.sum(theta * u, axis=1)
        s = truncnorm.rvs(lo - mu, hi - mu, loc=mu, scale=1.0, random_state=rng)
        theta = theta + s[:, None] * u
        if step >= burn_in:
            out.append(theta.copy())
    return np.concatenate(out)[:n_samples]


def solid_angle_predict(cone, x, mc_samples=100_000, seed=0, max_rejection_dim=3):
    """Estimate ``P(<x, theta> > 0)`` under ``N(0, I)`` conditioned on the cone.

    Rejection sampling from ``N(0, I)`` for ``d <= 3``; hit-and-run otherwise or
    when the rejection acceptance falls below ``1e-6``. Returns ``(p_plus, p_minus)``.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.any(x):
        return 0.5, 0.5
    _feasible_direction(cone)
    rng = make_rng(seed)
    samples = None
    if cone.d <= max_rejection_dim:
        kept, tried, batch = [], 0, 200_000
        count = 0
        while count < mc_samples:
            z = rng.standard_normal((batch, cone.d))
            z = z[cone.contains(z)]
            tried += batch
            kept.append(z)
            count += z.shape[0]
            if tried >= 10_000_000 and count / tried < 1e-6:
                break
        if count >= mc_samples:
            samples = np.concatenate(kept)[:mc_samples]
    if samples is None:
        samples = hit_and_run_cone(cone, mc_samples, seed=rng)
    pos = np.count_nonzero(samples @ x > 0)
    neg = samples.shape[0] - pos
    return pos / samples.shape[0], neg / samples.shape[0]


def truncated_gaussian_tv_2d(a, gamma):
    """TV distance between ``N(0, I)`` restricted to ``{<a, theta> >= gamma}`` and to ``{> 0}``.

    The first law is the second one restricted further, so the distance equals
    ``1 - Z_gamma / Z_0`` with ``Z_c = P(<a, Z> >= c)``, computed here by quadrature
    of the one-dimensional marginal along ``a``.
    """
    from scipy.integrate import quad
    from scipy.stats import norm

    s = gamma / float(np.linalg.norm(a))
    z_gamma, _ = quad(norm.pdf, s, np.inf, epsabs=1e-14)
    z_0 = 0.5
    return 1.0 - z_gamma / z_0
