"""Truncated realizations of Banach scales.

A scale E = E_0 > E_1 > E_2 > ... is modelled on coefficient vectors with a
weight sequence w_n >= 1.  The level-m norm at truncation N is

    |x|_m = ( sum_{n<N} w_n^{2m} x_n^2 )^{1/2}

so the inclusion E_{m+1} -> E_m is the diagonal map with entries 1/w_n, and
compactness of the inclusions becomes decay of those entries.  Shifted scales
E^k (levels E_{m+k}) carry an integer ``offset`` that is added to every level
exponent.

The line scale of weighted Sobolev spaces on [-L, L] is discretized separately
in :class:`GridLineScale` because its norms are not diagonal in any basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import LevelError, PreconditionError, ShapeError

SOBOLEV_CIRCLE = "sobolev_circle"
FRACTAL = "fractal"
GRID_EXPONENTIAL = "grid_exponential"
WEIGHT_KINDS = (SOBOLEV_CIRCLE, FRACTAL, GRID_EXPONENTIAL)


def fourier_frequency(n):
    """Frequency of real Fourier basis index ``n``.

    Index 0 is the constant mode; indices 2k-1 and 2k are cos and sin of
    frequency k.
    """
    n = np.asarray(n)
    return (n + 1) // 2


@dataclass(frozen=True)
class WeightSequence:
    """Rule n -> w_n >= 1, nondecreasing.

    ``sobolev_circle``: w_n = (1 + freq(n)^2)^{1/2}
    ``fractal``:        w_n = f(n+1) with f(nu) = nu^p, params = [p]
    ``grid_exponential``: w_n = exp(c n), params = [c]
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind == FRACTAL:
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ValueError("fractal weights need one positive growth exponent")
        if self.kind == GRID_EXPONENTIAL:
            if len(self.params) != 1 or self.params[0] <= 0:
                raise ValueError("grid_exponential weights need one positive rate")

    def __call__(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.kind == SOBOLEV_CIRCLE:
            k = fourier_frequency(n.astype(int))
            return np.sqrt(1.0 + k.astype(float) ** 2)
        if self.kind == FRACTAL:
            return (n + 1.0) ** self.params[0]
        return np.exp(self.params[0] * n)

    def vector(self, dim: int) -> np.ndarray:
        return self(np.arange(dim))

    @property
    def growth_order(self) -> float:
        """Exponent p with w ~ (shell index)^p; ``inf`` for exponential growth.

        Shells are the groups of indices sharing one weight value (cos/sin
        pairs for the circle).
        """
        if self.kind == SOBOLEV_CIRCLE:
            return 1.0
        if self.kind == FRACTAL:
            return self.params[0]
        return math.inf


class Scale:
    """Common surface of every scale model used by the operators."""

    max_level: int

    def norm(self, x, m: int) -> float:
        raise NotImplementedError

    def check_level(self, m: int) -> None:
        if not (0 <= m <= self.max_level):
            raise LevelError(f"level {m} outside 0..{self.max_level}")

    def regularity(self, x) -> Optional[float]:
        return None

    def ladder_dims(self) -> tuple:
        raise NotImplementedError

    def resize(self, x, dim: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != dim:
            raise ShapeError(f"cannot resize a vector of {x.shape[0]} entries to {dim}")
        return x


@dataclass(frozen=True)
class TruncatedScale(Scale):
    weights: WeightSequence
    ladder: tuple
    max_level: int = 4
    offset: int = 0

    def __post_init__(self):
        ladder = tuple(int(n) for n in self.ladder)
        if not ladder or ladder[0] <= 0 or any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError(f"ladder must be strictly increasing positive integers, got {ladder}")
        object.__setattr__(self, "ladder", ladder)
        if self.max_level < 0:
            raise ValueError("max_level must be nonnegative")

    def weight_vector(self, dim: int) -> np.ndarray:
        return self.weights.vector(dim)

    def level_weights(self, dim: int, m: int) -> np.ndarray:
        self.check_level(m)
        return self.weight_vector(dim) ** (m + self.offset)

    def norm(self, x, m: int) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(self.level_weights(x.shape[0], m) * x))

    def shifted(self, k: int = 1) -> "TruncatedScale":
        """The scale E^k whose level m is E_{m+k}."""
        return replace(self, offset=self.offset + k)

    def ladder_dims(self) -> tuple:
        return self.ladder

    def resize(self, x, dim: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(dim)
        n = min(dim, x.shape[0])
        out[:n] = x[:n]
        return out

    def regularity(self, x) -> float:
        return estimate_regularity(ScalePoint(x, self)).value

    def to_dict(self) -> dict:
        return {
            "kind": self.weights.kind,
            "params": list(self.weights.params),
            "ladder": list(self.ladder),
            "max_level": self.max_level,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TruncatedScale":
        return cls(
            WeightSequence(d["kind"], tuple(d.get("params", ()))),
            tuple(d["ladder"]),
            int(d.get("max_level", 4)),
            int(d.get("offset", 0)),
        )


def circle_scale(ladder=(65, 129, 257), max_level=4) -> TruncatedScale:
    return TruncatedScale(WeightSequence(SOBOLEV_CIRCLE), tuple(ladder), max_level)


def fractal_scale(exponent=2.0, ladder=(64, 128, 256), max_level=4) -> TruncatedScale:
    return TruncatedScale(WeightSequence(FRACTAL, (exponent,)), tuple(ladder), max_level)


@dataclass(frozen=True)
class ConstantScale(Scale):
    """R^dim with every level equal to the Euclidean space."""

    dim: int
    max_level: int = 4

    def weight_vector(self, dim: int) -> np.ndarray:
        if dim != self.dim:
            raise ShapeError(f"constant scale has dimension {self.dim}, got {dim}")
        return np.ones(dim)

    def level_weights(self, dim: int, m: int) -> np.ndarray:
        self.check_level(m)
        return self.weight_vector(dim)

    def norm(self, x, m: int) -> float:
        self.check_level(m)
        x = np.asarray(x, dtype=float)
        self.weight_vector(x.shape[0])
        return float(np.linalg.norm(x))

    def shifted(self, k: int = 1) -> "ConstantScale":
        return self

    def ladder_dims(self) -> tuple:
        return (self.dim,)

    def regularity(self, x) -> float:
        return math.inf

    def to_dict(self) -> dict:
        return {"kind": "constant", "dim": self.dim, "max_level": self.max_level}


@dataclass(frozen=True)
class SumScale(Scale):
    """Direct sum of scales; all parts but the last have fixed dimension."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("SumScale needs at least one part")
        for p in parts[:-1]:
            if not isinstance(p, ConstantScale):
                raise ValueError("only the last summand may be truncated")
        object.__setattr__(self, "parts", parts)

    @property
    def max_level(self) -> int:
        return min(p.max_level for p in self.parts)

    @property
    def head_dim(self) -> int:
        return sum(p.dim for p in self.parts[:-1])

    def split(self, x) -> list:
        x = np.asarray(x, dtype=float)
        out, start = [], 0
        for p in self.parts[:-1]:
            out.append(x[start:start + p.dim])
            start += p.dim
        out.append(x[start:])
        return out

    def level_weights(self, dim: int, m: int) -> np.ndarray:
        self.check_level(m)
        ws = [p.level_weights(p.dim, m) for p in self.parts[:-1]]
        ws.append(self.parts[-1].level_weights(dim - self.head_dim, m))
        return np.concatenate(ws)

    def norm(self, x, m: int) -> float:
        self.check_level(m)
        return float(math.sqrt(sum(p.norm(c, m) ** 2 for p, c in zip(self.parts, self.split(x)))))

    def shifted(self, k: int = 1) -> "SumScale":
        return SumScale(tuple(p.shifted(k) for p in self.parts))

    def ladder_dims(self) -> tuple:
        return tuple(self.head_dim + n for n in self.parts[-1].ladder_dims())

    def resize(self, x, dim: int) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        h = self.head_dim
        return np.concatenate([x[:h], self.parts[-1].resize(x[h:], dim - h)])

    def regularity(self, x) -> Optional[float]:
        vals = [p.regularity(c) for p, c in zip(self.parts, self.split(x))]
        if any(v is None for v in vals):
            return None
        return min(vals)

    def to_dict(self) -> dict:
        return {"kind": "sum", "parts": [p.to_dict() for p in self.parts]}


@dataclass(frozen=True)
class ScalePoint:
    coeffs: np.ndarray
    scale: Scale
    level_tag: Optional[int] = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.ndim != 1:
            raise ShapeError("coefficients must be a flat vector")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    def norm(self, m: int) -> float:
        return level_norm(self, m)

    def regularity(self) -> Optional[float]:
        return self.scale.regularity(self.coeffs)


def level_norm(x: ScalePoint, m: int) -> float:
    """Level-m norm of a point; raises :class:`LevelError` past ``max_level``."""
    x.scale.check_level(m)
    return x.scale.norm(x.coeffs, m)


def inclusion_singular_values(scale: TruncatedScale, m: int, N: int) -> np.ndarray:
    """Singular values of E_{m+1} -> E_m at truncation N, decreasing.

    The inclusion is diagonal with entries w_n^m / w_n^{m+1} = 1/w_n, so the
    values do not depend on m.
    """
    if N not in scale.ladder:
        raise LevelError(f"truncation {N} is not on the ladder {scale.ladder}")
    scale.check_level(m)
    if m + 1 > scale.max_level:
        raise LevelError(f"level {m + 1} outside 0..{scale.max_level}")
    sv = scale.level_weights(N, m) / scale.level_weights(N, m + 1)
    return np.sort(sv)[::-1]


@dataclass(frozen=True)
class RegularityEstimate:
    value: float
    slope: float
    degenerate: bool = False
    superpolynomial: bool = False


DEFAULT_WINDOW = 0.5
DEFAULT_SLOPE_CAP = 50.0
# slope steepening between the two tail halves that signals faster than
# polynomial decay (relative to max(1, early slope))
ACCELERATION_TOL = 0.25


def _weight_shells(coeffs: np.ndarray, w: np.ndarray):
    """Pool coefficients sharing one weight value into (weight, rms amplitude) pairs.

    RMS rather than total mass keeps a truncated shell (a lone top cosine)
    on the same footing as complete cos/sin pairs.
    """
    vals, inverse = np.unique(w, return_inverse=True)
    count = np.bincount(inverse, minlength=vals.shape[0])
    rms = np.sqrt(np.bincount(inverse, weights=coeffs ** 2, minlength=vals.shape[0]) / count)
    return vals, rms


def _fit_slope(logw, logm):
    return -np.polyfit(logw, logm, 1)[0]


def _slope_with_error(logw, logm):
    """Decay slope and its standard error from an ordinary least-squares line."""
    coef = np.polyfit(logw, logm, 1)
    resid = logm - np.polyval(coef, logw)
    dof = max(logw.shape[0] - 2, 1)
    sxx = float(np.sum((logw - logw.mean()) ** 2))
    se = math.sqrt(float(resid @ resid) / dof / sxx) if sxx > 0 else math.inf
    return -float(coef[0]), se


def estimate_regularity(x: ScalePoint, window: float = DEFAULT_WINDOW,
                        slope_cap: float = DEFAULT_SLOPE_CAP) -> RegularityEstimate:
    """Estimate the largest level m for which x lies in E_m.

    Fits log(shell mass) against log(weight) over the trailing ``window``
    fraction of weight shells.  With decay rate s and weights growing like
    (shell index)^p, the level sums converge for m < s - 1/(2p); that
    threshold is returned, relative to the scale's own level indexing.
    Decay faster than any power (slope above ``slope_cap``, or slopes that
    steepen along the tail) returns +inf.
    """
    scale = x.scale
    if not isinstance(scale, TruncatedScale):
        raise PreconditionError("regularity estimation needs a TruncatedScale")
    if x.dim < 16:
        raise PreconditionError("regularity estimation needs at least 16 coefficients")
    if not 0.0 < window < 1.0:
        raise PreconditionError("window must lie in (0, 1)")

    w = scale.weight_vector(x.dim)
    vals, mass = _weight_shells(x.coeffs, w)
    n_tail = max(4, int(math.ceil(window * vals.shape[0])))
    vals, mass = vals[-n_tail:], mass[-n_tail:]
    keep = mass > 0
    if keep.sum() < 3:
        return RegularityEstimate(math.inf, math.inf, degenerate=True)
    logw, logm = np.log(vals[keep]), np.log(mass[keep])

    s = _fit_slope(logw, logm)
    half = logw.shape[0] // 2
    accelerating = False
    if half >= 2 and logw.shape[0] - half >= 2:
        s_early, se_early = _slope_with_error(logw[:half], logm[:half])
        s_late, se_late = _slope_with_error(logw[half:], logm[half:])
        gap = s_late - s_early
        # steepening must beat both a relative threshold and the fit noise
        accelerating = (gap > ACCELERATION_TOL * max(1.0, abs(s_early)) and s_late > 1.0
                        and gap > 3.0 * math.hypot(se_early, se_late))
    if s > slope_cap or accelerating:
        return RegularityEstimate(math.inf, float(s), superpolynomial=True)

    p = scale.weights.growth_order
    threshold = s - (0.0 if math.isinf(p) else 1.0 / (2.0 * p))
    return RegularityEstimate(float(threshold - scale.offset), float(s))


def density_residual(x: ScalePoint, m: int, K: int) -> float:
    """|x - P_K x|_m where P_K keeps the first K coefficients."""
    if not 0 <= K <= x.dim:
        raise ShapeError(f"cutoff {K} outside 0..{x.dim}")
    tail = np.array(x.coeffs)
    tail[:K] = 0.0
    return x.scale.norm(tail, m)


def _smooth_step(x):
    """C-infinity step from 0 (x<=0) to 1 (x>=1)."""
    x = np.asarray(x, dtype=float)

    def psi(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    a, b = psi(x), psi(1.0 - x)
    return a / (a + b)


def smooth_cutoff(s):
    """Monotone beta with beta = -1 for s <= -1 and beta = 1 for s >= 1."""
    return 2.0 * _smooth_step((np.asarray(s, dtype=float) + 1.0) / 2.0) - 1.0


@dataclass(frozen=True)
class GridLineScale(Scale):
    """Weighted Sobolev scale W^{m,p}_{delta_m} on a uniform grid of [-L, L].

    Level m norm: sum over derivative orders i <= m of the discrete L^p norm
    of gamma_{delta_m} * D^i f with gamma_delta(s) = exp(delta s beta(s)).
    Derivatives are repeated central differences, integrals are trapezoidal.
    """

    half_width: float = 64.0
    grid_size: int = 8192
    deltas: tuple = (0.0, 0.5, 1.0, 1.5)
    p: float = 2.0
    offset: int = 0
    cutoff: Callable = field(default=smooth_cutoff, compare=False, repr=False)

    def __post_init__(self):
        d = tuple(float(v) for v in self.deltas)
        if d[0] != 0.0 or any(b <= a for a, b in zip(d, d[1:])):
            raise ValueError("deltas must start at 0 and increase strictly")
        if not 1.0 < self.p < math.inf:
            raise ValueError("p must lie in (1, inf)")
        if self.grid_size < 3:
            raise ValueError("grid needs at least 3 points")
        object.__setattr__(self, "deltas", d)

    @property
    def max_level(self) -> int:
        return len(self.deltas) - 1 - self.offset

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / (self.grid_size - 1)

    def grid(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.grid_size)

    def quadrature_weights(self) -> np.ndarray:
        q = np.full(self.grid_size, self.step)
        q[0] = q[-1] = self.step / 2.0
        return q

    def gamma(self, delta: float) -> np.ndarray:
        s = self.grid()
        return np.exp(delta * s * self.cutoff(s))

    def derivative(self, f, order: int) -> np.ndarray:
        g = np.asarray(f, dtype=float)
        for _ in range(order):
            g = np.gradient(g, self.step, edge_order=2)
        return g

    def _lp(self, g) -> float:
        return float(np.sum(self.quadrature_weights() * np.abs(g) ** self.p) ** (1.0 / self.p))

    def norm(self, f, m: int) -> float:
        self.check_level(m)
        f = np.asarray(f, dtype=float)
        if f.shape[0] != self.grid_size:
            raise ShapeError(f"grid vector has {f.shape[0]} samples, expected {self.grid_size}")
        level = m + self.offset
        gam = self.gamma(self.deltas[level])
        return sum(self._lp(gam * self.derivative(f, i)) for i in range(level + 1))

    def shifted(self, k: int = 1) -> "GridLineScale":
        return replace(self, offset=self.offset + k)

    def ladder_dims(self) -> tuple:
        return (self.grid_size,)

    def inner(self, f, g) -> float:
        return grid_inner_product(f, g, self)

    def to_dict(self) -> dict:
        return {
            "kind": "grid_line",
            "half_width": self.half_width,
            "grid_size": self.grid_size,
            "deltas": list(self.deltas),
            "p": self.p,
            "offset": self.offset,
        }


def grid_inner_product(f, g, scale: GridLineScale) -> float:
    """Trapezoidal L^2([-L, L]) inner product of two grid vectors."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.shape != (scale.grid_size,):
        raise ShapeError(f"grid vectors of shapes {f.shape}, {g.shape} on a grid of {scale.grid_size}")
    return float(np.sum(scale.quadrature_weights() * f * g))


def scale_from_dict(d: dict) -> Scale:
    kind = d.get("kind")
    if kind in WEIGHT_KINDS:
        return TruncatedScale.from_dict(d)
    if kind == "constant":
        return ConstantScale(int(d["dim"]), int(d.get("max_level", 4)))
    if kind == "sum":
        return SumScale(tuple(scale_from_dict(p) for p in d["parts"]))
    if kind == "grid_line":
        return GridLineScale(float(d["half_width"]), int(d["grid_size"]), tuple(d["deltas"]),
                             float(d.get("p", 2.0)), int(d.get("offset", 0)))
    raise ValueError(f"unknown scale kind {kind!r}")


def random_phase_point(scale: TruncatedScale, dim: int, decay: float, rng) -> np.ndarray:
    """Coefficients with shell RMS amplitude w^{-decay} and random phases.

    Within each weight shell the amplitude is spread over the shell's
    coordinates along a random direction (a random phase for cos/sin pairs).
    """
    w = scale.weight_vector(dim)
    vals, inverse = np.unique(w, return_inverse=True)
    count = np.bincount(inverse, minlength=vals.shape[0])
    x = rng.standard_normal(dim)
    shell_rms = np.sqrt(np.bincount(inverse, weights=x ** 2, minlength=vals.shape[0]) / count)
    shell_rms[shell_rms == 0] = 1.0
    return x / shell_rms[inverse] * vals[inverse] ** (-decay)


def points_on(scale: Scale, coeffs: Sequence) -> list:
    return [ScalePoint(c, scale) for c in coeffs]
