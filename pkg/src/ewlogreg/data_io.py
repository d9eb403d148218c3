"""Datasets: LIBSVM text files, the adversarial two-point process and Gaussian designs."""

import math
from dataclasses import dataclass, field

import numpy as np

from .posterior import LabeledExample
from .rng import make_rng


class LibsvmFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    source: str = "array"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        if X.shape[0] != y.size:
            if y.size == 0:
                X = X.reshape(0, X.shape[-1] if X.size else 0)
            else:
                raise ValueError("X and y disagree on the number of examples")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.y.size

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def R(self):
        return float(np.linalg.norm(self.X, axis=1).max()) if self.n else 0.0

    @property
    def examples(self):
        return [LabeledExample(x, int(v)) for x, v in zip(self.X, self.y)]

    def head(self, n):
        """First ``n`` examples."""
        return Dataset(self.X[:n], self.y[:n], self.source, dict(self.meta))

    def normalized(self):
        """Every nonzero feature vector rescaled to unit norm."""
        nrm = np.linalg.norm(self.X, axis=1, keepdims=True)
        return Dataset(self.X / np.where(nrm > 0, nrm, 1.0), self.y, self.source, dict(self.meta))

    def with_bias(self):
        """Append a constant feature (regularised intercept)."""
        return Dataset(np.hstack([self.X, np.ones((self.n, 1))]), self.y, self.source,
                       dict(self.meta))


_POS = {"+1", "1", "+1.0", "1.0"}
_NEG = {"-1", "-1.0"}
_ZERO = {"0", "0.0", "+0", "-0"}


def _label(tok, lineno, zero_is_negative):
    if tok in _POS:
        return 1.0
    if tok in _NEG or (zero_is_negative and tok in _ZERO):
        return -1.0
    raise LibsvmFormatError(f"line {lineno}: non-binary label {tok!r}")


def _tokens(line, lineno, zero_is_negative):
    body = line.split("#", 1)[0].strip()
    if not body:
        return None
    parts = body.split()
    y = _label(parts[0], lineno, zero_is_negative)
    feats = {}
    for tok in parts[1:]:
        idx, sep, val = tok.partition(":")
        try:
            if not sep:
                raise ValueError
            i, v = int(idx), float(val)
        except ValueError:
            raise LibsvmFormatError(f"line {lineno}: malformed token {tok!r}") from None
        if i < 1:
            raise LibsvmFormatError(f"line {lineno}: feature index must be >= 1, got {i}")
        if not math.isfinite(v):
            raise LibsvmFormatError(f"line {lineno}: non-finite value in {tok!r}")
        feats[i] = v
    return y, feats


def parse_libsvm(lines, zero_is_negative=True, normalize=False, n_features=None, first_n=None):
    """Parse ``label idx:val ...`` lines (1-based indices) into a dense dataset.

    Blank lines and ``#`` comments are skipped. Labels ``+1``/``1`` map to +1;
    ``-1`` and (with ``zero_is_negative``) ``0`` map to -1.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    rows = []
    for lineno, line in enumerate(lines, start=1):
        tok = _tokens(line, lineno, zero_is_negative)
        if tok is None:
            continue
        rows.append(tok)
        if first_n is not None and len(rows) >= first_n:
            break
    d = max((max(f) for _, f in rows if f), default=0)
    if n_features is not None:
        if n_features < d:
            raise LibsvmFormatError(f"feature index {d} exceeds n_features={n_features}")
        d = n_features
    X = np.zeros((len(rows), d))
    for r, (_, feats) in enumerate(rows):
        for i, v in feats.items():
            X[r, i - 1] = v
    data = Dataset(X, np.array([y for y, _ in rows]), "libsvm-file")
    return data.normalized() if normalize else data


def read_libsvm(path, **kwargs):
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh, **kwargs)


def _format_row(y, pairs):
    label = "+1" if y > 0 else "-1"
    return " ".join([label] + [f"{i}:{v!r}" for i, v in pairs])


def serialize_libsvm(data):
    """Canonical LIBSVM lines: ``+1``/``-1`` labels, ascending indices, zeros dropped,
    shortest round-trip float formatting."""
    out = []
    for x, y in zip(data.X, data.y):
        nz = np.flatnonzero(x)
        out.append(_format_row(y, [(int(i) + 1, float(x[i])) for i in nz]))
    return out


def canonicalize_libsvm(lines, zero_is_negative=True):
    """Canonical form of each data line, computed token-wise without densifying."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    out = []
    for lineno, line in enumerate(lines, start=1):
        tok = _tokens(line, lineno, zero_is_negative)
        if tok is None:
            continue
        y, feats = tok
        out.append(_format_row(y, [(i, feats[i]) for i in sorted(feats) if feats[i] != 0.0]))
    return out


def write_libsvm(data, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in serialize_libsvm(data):
            fh.write(line + "\n")


@dataclass(frozen=True)
class HazanConfig:
    n: int
    B: float = None
    eps: float = 0.01
    chi: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.B is None:
            object.__setattr__(self, "B", math.log(self.n))
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not self.B > 0:
            raise ValueError("B must be positive")
        if self.chi not in (-1, 1):
            raise ValueError("chi must be -1 or +1")

    @property
    def support(self):
        """``(x_plus, x_minus)``: the feature values attached to labels +1 and -1."""
        a = math.sqrt(self.eps) / (2 * self.B)
        return 1.0 - a, a

    @property
    def p_plus(self):
        return math.sqrt(self.eps) / (2 * self.B) + self.chi * self.eps / self.B


def gen_hazan(cfg):
    """One-dimensional two-point process: ``(1 - a, +1)`` w.p. ``a + chi eps / B``, else ``(a, -1)``,
    with ``a = sqrt(eps) / (2B)``."""
    p = cfg.p_plus
    if not 0 < p < 1:
        raise ValueError(f"positive-class probability {p} is outside (0, 1)")
    x_pos, x_neg = cfg.support
    rng = make_rng(cfg.seed)
    pos = rng.random(cfg.n) < p
    X = np.where(pos, x_pos, x_neg)[:, None]
    return Dataset(X, np.where(pos, 1.0, -1.0), "hazan-1d",
                   {"B": cfg.B, "eps": cfg.eps, "chi": cfg.chi, "seed": cfg.seed})


@dataclass(frozen=True)
class GaussianDesignConfig:
    n: int
    d: int
    theta_star: np.ndarray = None
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")
        ts = np.zeros(self.d) if self.theta_star is None else np.asarray(self.theta_star, float)
        if ts.shape != (self.d,):
            raise ValueError("theta_star must have length d")
        object.__setattr__(self, "theta_star", ts)


def gen_gaussian_design(cfg):
    """``x ~ N(0, I_d)`` and ``P(y = 1 | x) = sigmoid(<x, theta_star>)``."""
    from .loss import sigmoid

    rng = make_rng(cfg.seed)
    X = rng.standard_normal((cfg.n, cfg.d))
    y = np.where(rng.random(cfg.n) < sigmoid(X @ cfg.theta_star), 1.0, -1.0)
    return Dataset(X, y, "gaussian-design", {"theta_star": cfg.theta_star.tolist(),
                                             "seed": cfg.seed})


def permute(data, seed):
    """Uniformly random reordering (Fisher-Yates via ``Generator.permutation``)."""
    idx = make_rng(seed).permutation(data.n)
    return Dataset(data.X[idx], data.y[idx], data.source, dict(data.meta))


def _kv(spec):
    out = {}
    for part in filter(None, spec.split(",")):
        k, _, v = part.partition("=")
        out[k.strip()] = v.strip()
    return out


def load_data(spec, seed=0, n=None, normalize=False):
    """Resolve a data argument: a LIBSVM path, or ``gen:hazan:k=v,...`` /
    ``gen:gaussian:k=v,...`` for the synthetic generators.

    Generator keys: hazan ``n, B, eps, chi``; gaussian ``n, d, norm`` (the true
    parameter is ``norm`` times a random unit vector) or ``theta`` given as
    ``a;b;...``.
    """
    if spec.startswith("gen:"):
        kind, _, rest = spec[4:].partition(":")
        kv = _kv(rest)
        size = int(kv.get("n", n if n is not None else 100))
        if kind == "hazan":
            cfg = HazanConfig(n=size, B=float(kv["B"]) if "B" in kv else None,
                              eps=float(kv.get("eps", 0.01)), chi=int(kv.get("chi", 1)), seed=seed)
            return gen_hazan(cfg)
        if kind == "gaussian":
            d = int(kv.get("d", 2))
            if "theta" in kv:
                ts = np.array([float(v) for v in kv["theta"].split(";")])
            else:
                u = make_rng([seed, 1]).standard_normal(d)
                ts = float(kv.get("norm", 1.0)) * u / np.linalg.norm(u)
            return gen_gaussian_design(GaussianDesignConfig(n=size, d=d, theta_star=ts, seed=seed))
        raise ValueError(f"unknown generator {kind!r}")
    data = read_libsvm(spec, normalize=normalize)
    return data.head(n) if n is not None else data
