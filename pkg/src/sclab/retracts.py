"""Retractions, retracts and splicing cores.

A retract is the image O = r(U) = Fix r of an idempotent map.  Everything
here is checked on samples: idempotency, the tangent retraction
(x, xi) -> (r(x), Dr(x) xi), tangent spaces as Fix Dr(x), Cartan's local
linearization alpha = (1 - R)(1 - r) + R r, and the translated-bump splicing
whose image jumps from dimension 1 to dimension 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .diff import (CertificateReport, ScMap, _coeffs, certify_sc1, derivative_matrix,
                   directional_derivative, fd_jacobian, tangent_scale)
from .errors import (AmbiguousRankError, ContainmentError, DomainError, PreconditionError,
                     RetractionError)
from .scales import ConstantScale, GridLineScale, Scale, SumScale

IDEMPOTENCY_TOL = 1e-8
EIGEN_TOL = 1e-6


@dataclass
class RetractModel:
    r: ScMap
    idempotency_tol: float
    samples: list
    residuals: list
    certificate: Optional[CertificateReport] = None

    def sample_fixed_points(self) -> list:
        """Points of O = Fix r obtained as images of the stored samples."""
        return [self.r(x) for x in self.samples]

    @property
    def max_residual(self) -> float:
        return max(self.residuals, default=0.0)

    def to_dict(self) -> dict:
        d = {"map": self.r.name, "idempotency_tol": self.idempotency_tol,
             "max_residual": self.max_residual, "samples": len(self.samples)}
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


def idempotency_residual(r: ScMap, x) -> float:
    rx = r(x)
    return r.domain.norm(r(rx) - rx, 0)


def check_retraction(r: ScMap, samples, tol: float = IDEMPOTENCY_TOL, certify: bool = False,
                     m_max: int = 1) -> RetractModel:
    """Accept r when |r(r(x)) - r(x)|_0 <= tol on every sample."""
    xs = [_coeffs(s) for s in samples]
    res = [idempotency_residual(r, x) for x in xs]
    worst = int(np.argmax(res))
    if res[worst] > tol:
        raise RetractionError(f"{r.name}: r o r != r (residual {res[worst]:.3g} > {tol:g})",
                              worst_sample=xs[worst], residual=res[worst])
    cert = certify_sc1(r, xs, m_max) if certify else None
    return RetractModel(r, tol, xs, res, cert)


@dataclass
class TangentRetraction:
    map: ScMap
    residuals: list

    def sample_tangent_points(self, points) -> list:
        """Points of TO = Fix Tr."""
        return [self.map(z) for z in points]


def tangent_retraction(model: RetractModel, directions=None, seed: int = 0) -> TangentRetraction:
    """Tr(x, xi) = (r(x), Dr(x) xi), checked for Tr o Tr = Tr on the samples."""
    r = model.r
    dom = tangent_scale(r.domain)

    def ev(z):
        x, xi = dom.split(z)
        return np.concatenate([r(x), directional_derivative(r, x, xi)])

    Tr = ScMap(ev, dom, dom, None, f"T{r.name}")
    rng = np.random.default_rng(seed)
    res = []
    for i, x in enumerate(model.samples):
        xi = _coeffs(directions[i]) if directions is not None else rng.standard_normal(x.shape[0])
        z = np.concatenate([x, xi])
        tz = Tr(z)
        res.append(float(np.linalg.norm(Tr(tz) - tz)))
    return TangentRetraction(Tr, res)


@dataclass
class TangentSpace:
    basis: np.ndarray
    dimension: int
    eigenvalues: np.ndarray


def tangent_space(model: RetractModel, x, tol: float = EIGEN_TOL,
                  fixed_tol: float = 1e-8) -> TangentSpace:
    """T_x O = Fix Dr(x), read off a Schur form of Dr(x)."""
    r = model.r
    x = _coeffs(x)
    if r.domain.norm(r(x) - x, 0) > fixed_tol:
        raise PreconditionError("tangent_space needs a fixed point of r")
    reg = r.domain.regularity(x)
    if reg is not None and reg < 1:
        raise PreconditionError(f"tangent_space needs regularity >= 1, got {reg:.3g}")
    D = derivative_matrix(r, x)
    T = scipy.linalg.schur(D, output="complex")[0]
    lam = np.diag(T)
    near_one = np.abs(lam - 1.0) <= tol
    settled = near_one | (np.abs(lam) <= tol)
    if not np.all(settled):
        bad = lam[~settled]
        raise AmbiguousRankError(f"{bad.size} eigenvalue(s) of Dr(x) are neither 0 nor 1 within {tol:g}",
                                 gap=[complex(b) for b in bad])
    dim = int(np.count_nonzero(near_one))
    _, _, Vt = np.linalg.svd(D - np.eye(D.shape[0]))
    basis = Vt[D.shape[0] - dim:].T if dim else np.zeros((D.shape[0], 0))
    return TangentSpace(basis, dim, lam)


@dataclass
class RetractMapReport:
    containment_residuals: list
    certificate: CertificateReport
    alternative: Optional[CertificateReport] = None

    @property
    def ok(self) -> bool:
        good = self.certificate.accepted
        if self.alternative is not None:
            good = good and self.alternative.accepted == self.certificate.accepted
        return good

    def to_dict(self) -> dict:
        d = {"ok": self.ok, "containment_residuals": self.containment_residuals,
             "certificate": self.certificate.to_dict()}
        if self.alternative is not None:
            d["alternative"] = self.alternative.to_dict()
            d["decompression_independent"] = self.alternative.accepted == self.certificate.accepted
        return d


def _decompressed(f: ScMap, r: ScMap) -> ScMap:
    deriv = None
    if f.derivative is not None and r.derivative is not None:
        deriv = lambda x, xi: f.derivative(r(x), r.derivative(x, xi))
    return ScMap(lambda x: f(r(x)), r.domain, f.target, deriv, f"{f.name}o{r.name}", r.contains)


def check_retract_map(f: ScMap, model: RetractModel, target_model: RetractModel, samples,
                      alternative: Optional[RetractModel] = None, tol: float = 1e-8,
                      m_max: int = 1) -> RetractMapReport:
    """Certify f: O -> O' through its decompression f o r.

    Raises :class:`ContainmentError` when f leaves O'.  With ``alternative``
    (a second retraction onto the same O) the certificate is recomputed for
    f o r_alt and the two acceptance decisions are compared.
    """
    pts = [model.r(_coeffs(s)) for s in samples]
    res = []
    for p in pts:
        fp = f(p)
        res.append(target_model.r.domain.norm(target_model.r(fp) - fp, 0))
    if max(res) > tol:
        raise ContainmentError(f"{f.name}: image leaves the target retract (residual {max(res):.3g})")
    cert = certify_sc1(_decompressed(f, model.r), pts, m_max)
    alt = None
    if alternative is not None:
        alt = certify_sc1(_decompressed(f, alternative.r), pts, m_max)
    return RetractMapReport([float(v) for v in res], cert, alt)


@dataclass
class CartanChart:
    base: np.ndarray
    R: np.ndarray
    fix_basis: np.ndarray
    local_dimension: int
    conjugation_residual: float
    dalpha_residual: float
    chart_residual: float
    radius: float
    alpha: Callable = field(repr=False)

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "R": self.R.tolist(), "fix_basis": self.fix_basis.tolist(),
                "local_dimension": self.local_dimension,
                "conjugation_residual": self.conjugation_residual,
                "dalpha_residual": self.dalpha_residual, "chart_residual": self.chart_residual,
                "radius": self.radius}


def _ball(center, radius, n, rng):
    d = center.shape[0]
    g = rng.standard_normal((n, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.uniform(0, 1, n) ** (1.0 / d)
    pts = center + g * rad[:, None]
    return np.vstack([center, center + g[: min(n, 16)] * radius, pts])


def cartan_chart(r: ScMap, x, radius: float = 0.1, tol: float = 1e-8, n_samples: int = 200,
                 seed: int = 0, retries: int = 3, projector_tol: float = 1e-6) -> CartanChart:
    """Linearize a retraction near a fixed point.

    R = dr(x) is a projection, alpha = (1 - R)(1 - r) + R r satisfies
    alpha o r = R o alpha, and alpha(x) = R x with d alpha(x) = 1, so alpha
    carries Fix r near x onto the linear space Fix R.
    """
    x = _coeffs(x)
    if np.linalg.norm(r(x) - x) > tol:
        raise PreconditionError("cartan_chart needs a fixed point of r")
    R = derivative_matrix(r, x)
    n = R.shape[0]
    I = np.eye(n)
    if np.linalg.norm(R @ R - R, 2) > projector_tol:
        raise RetractionError("dr(x) is not a projection; r is not a retraction near x")

    def alpha(z):
        z = np.asarray(z, dtype=float)
        rz = r(z)
        return (I - R) @ (z - rz) + R @ rz

    alpha_map = ScMap(alpha, r.domain, r.domain, None, "alpha")
    dA = fd_jacobian(alpha_map, x)
    dalpha_res = float(np.linalg.norm(dA - I, 2))

    rng = np.random.default_rng(seed)
    rad = radius
    for _ in range(retries + 1):
        pts = _ball(x, rad, n_samples, rng)
        conj = max(float(np.linalg.norm(alpha(r(z)) - R @ alpha(z))) for z in pts)
        if conj <= tol:
            break
        rad /= 2
    # Fix r is carried into Fix R: test on points of O and their alpha images
    chart = 0.0
    for z in pts:
        o = r(z)
        a = alpha(o)
        chart = max(chart, float(np.linalg.norm(R @ a - a)))
    s_vals, basis = _fix_basis(R)
    return CartanChart(x, R, basis, basis.shape[1], conj, dalpha_res, chart, rad, alpha)


def _fix_basis(R: np.ndarray, tol: float = EIGEN_TOL):
    n = R.shape[0]
    U, s, Vt = np.linalg.svd(R - np.eye(n))
    dim = int(np.count_nonzero(s <= tol * max(1.0, s[0] if s.size else 1.0)))
    return s, (Vt[n - dim:].T if dim else np.zeros((n, 0)))


# --------------------------------------------------------------------------
# splicings


@dataclass(frozen=True)
class RankOneProjection:
    """f -> <f, b> b for the trapezoidal inner product; b = 0 gives the zero map."""

    vector: np.ndarray
    quadrature: np.ndarray

    def apply(self, f) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return float(np.sum(self.quadrature * self.vector * f)) * self.vector

    __call__ = apply

    def matrix(self) -> np.ndarray:
        return np.outer(self.vector, self.quadrature * self.vector)

    def singular_values(self) -> np.ndarray:
        return np.array([np.linalg.norm(self.vector) * np.linalg.norm(self.quadrature * self.vector)])

    def rank(self, threshold: float = 1e-8) -> int:
        return int(self.singular_values()[0] > threshold)

    def idempotency_residual(self) -> float:
        """Spectral norm of pi^2 - pi = (<b, b> - 1) b (q b)^T."""
        if not np.any(self.vector):
            return 0.0
        bb = float(np.sum(self.quadrature * self.vector ** 2))
        return abs(bb - 1.0) * float(self.singular_values()[0])


def cosine_bump(s) -> np.ndarray:
    """cos^2(pi s / 2) on [-1, 1], zero outside."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) <= 1.0, np.cos(np.pi * s / 2.0) ** 2, 0.0)


def admissible_t_min(scale: GridLineScale) -> float:
    """Smallest t > 0 with e^{1/t} + 1 <= L."""
    if scale.half_width <= 2.0:
        raise DomainError("window too small for any translated bump")
    return 1.0 / math.log(scale.half_width - 1.0)


def build_pi_t(t: float, scale: GridLineScale, beta: Callable = cosine_bump) -> RankOneProjection:
    """pi_t f = <f, beta_t> beta_t with beta_t(s) = beta(s + e^{1/t}); zero for t <= 0.

    beta_t is renormalized on the grid so that <beta_t, beta_t> = 1 for the
    discrete inner product.
    """
    q = scale.quadrature_weights()
    if t <= 0:
        return RankOneProjection(np.zeros(scale.grid_size), q)
    t_min = admissible_t_min(scale)
    if t < t_min * (1 - 1e-12):
        raise DomainError(f"t={t:g} translates the bump out of [-L, L]; need t >= {t_min:.4g}")
    b = beta(scale.grid() + math.exp(1.0 / t))
    b = b / math.sqrt(float(np.sum(q * b * b)))
    return RankOneProjection(b, q)


@dataclass(frozen=True)
class SplicingFamily:
    """v -> pi_v on a scale, over a parameter set in R^d.

    ``corner_mask[i]`` marks parameter i as a corner coordinate (v_i >= 0).
    """

    param_dim: int
    projection: Callable
    corner_mask: tuple = ()

    def admissible(self, v) -> bool:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return all(v[i] >= 0 for i, c in enumerate(self.corner_mask) if c)


def translated_bump_family(scale: GridLineScale, beta: Callable = cosine_bump) -> SplicingFamily:
    return SplicingFamily(1, lambda v: build_pi_t(float(np.atleast_1d(v)[0]), scale, beta))


def splicing_core_scan(family: SplicingFamily, grid, threshold: float = 1e-8) -> list:
    rows = []
    for v in grid:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if not family.admissible(v):
            raise DomainError(f"parameter {v.tolist()} violates the corner mask")
        pi = family.projection(v)
        rank = pi.rank(threshold) if hasattr(pi, "rank") else int(np.linalg.matrix_rank(pi.matrix(), threshold))
        res = pi.idempotency_residual() if hasattr(pi, "idempotency_residual") else float(
            np.linalg.norm(pi.matrix() @ pi.matrix() - pi.matrix(), 2))
        rows.append({"v": v.tolist(), "rank": rank, "residual": res,
                     "retract_dimension": family.param_dim + rank})
    return rows


def splicing_retraction(family: SplicingFamily, fiber: Scale) -> ScMap:
    """r_pi(v, f) = (v, pi_v f) on R^d + E."""
    d = family.param_dim
    dom = SumScale((ConstantScale(d), fiber))

    def ev(z):
        v, f = z[:d], z[d:]
        return np.concatenate([v, family.projection(v).apply(f)])

    return ScMap(ev, dom, dom, None, "r_pi")
