"""Partial quadrants, degeneracy indices, tameness and sampled atlases."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .diff import ScMap, _coeffs, certify_sc1, derivative_matrix
from .errors import (ChartError, ContainmentError, DiffeoError, EvaluationError, QuadrantError,
                     RetractionError)
from .retracts import RetractModel, check_retract_map, check_retraction

ZERO_TOL = 1e-9


@dataclass(frozen=True)
class QuadrantPoint:
    corner: np.ndarray
    rest: np.ndarray

    @property
    def coords(self) -> np.ndarray:
        return np.concatenate([self.corner, self.rest])


@dataclass(frozen=True)
class PartialQuadrant:
    """[0, inf)^n + W, with the n corner coordinates first."""

    n: int
    rest_dim: int = 0
    eps: float = ZERO_TOL

    @property
    def dim(self) -> int:
        return self.n + self.rest_dim

    def point(self, z) -> QuadrantPoint:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if z.shape[0] != self.dim:
            raise QuadrantError(f"expected {self.dim} coordinates, got {z.shape[0]}")
        return QuadrantPoint(z[: self.n], z[self.n:])

    def contains(self, z) -> bool:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return bool(np.all(z[: self.n] >= -self.eps))

    def active(self, z) -> np.ndarray:
        """Indices of corner coordinates that vanish (to eps)."""
        return np.flatnonzero(np.abs(np.asarray(z, dtype=float)[: self.n]) < self.eps)


def degeneracy_index(p, quadrant: Optional[PartialQuadrant] = None, eps: float = ZERO_TOL) -> int:
    """Number of vanishing corner coordinates."""
    if not isinstance(p, QuadrantPoint):
        if quadrant is None:
            raise QuadrantError("a bare coordinate vector needs its quadrant")
        eps = quadrant.eps
        p = quadrant.point(p)
    a = np.asarray(p.corner, dtype=float)
    if np.any(a < -eps):
        raise QuadrantError(f"corner coordinates {a.tolist()} leave the quadrant")
    return int(np.count_nonzero(a < eps))


@dataclass(frozen=True)
class Chart:
    """phi: X -> C with image in a retract O = Fix r of the quadrant C."""

    label: str
    phi: Callable
    quadrant: PartialQuadrant
    retraction: Optional[ScMap] = None
    inverse: Optional[Callable] = None


def chart_degeneracy(x, chart: Chart) -> int:
    try:
        z = np.atleast_1d(np.asarray(chart.phi(x), dtype=float))
        return degeneracy_index(z, chart.quadrant)
    except (QuadrantError, EvaluationError, ValueError, TypeError, ArithmeticError) as exc:
        raise ChartError(f"chart {chart.label!r} failed at {x!r}: {exc}", label=chart.label) from exc


def min_degeneracy(x, charts: Sequence[Chart]) -> int:
    if not charts:
        raise ChartError("no charts supplied", label=None)
    return min(chart_degeneracy(x, c) for c in charts)


@dataclass
class TameReport:
    tame: bool
    stratum_violations: list
    transversality_violations: list
    n_samples: int

    def to_dict(self) -> dict:
        return {"tame": self.tame, "stratum_violations": self.stratum_violations,
                "transversality_violations": self.transversality_violations,
                "n_samples": self.n_samples}


def _complement_basis(D: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the range of 1 - D."""
    U, s, _ = np.linalg.svd(np.eye(D.shape[0]) - D)
    k = int(np.count_nonzero(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return U[:, :k]


def check_tame(model: RetractModel, quadrant: PartialQuadrant, samples, tol: float = 1e-6) -> TameReport:
    """(a) d_C(r(x)) = d_C(x) on the samples; (b) at sampled points of O the
    complement (1 - Dr(x))E has no component along the vanishing corner
    coordinates of x.  Violations are listed, not raised.
    """
    r = model.r
    strata, transversal = [], []
    for s in samples:
        x = _coeffs(s)
        rx = r(x)
        d0 = degeneracy_index(x, quadrant)
        try:
            d1 = degeneracy_index(rx, quadrant)
        except QuadrantError:
            d1 = None
        if d1 != d0:
            strata.append({"point": x.tolist(), "image": rx.tolist(), "index": d0, "image_index": d1})
        if np.linalg.norm(rx - x) <= model.idempotency_tol:
            act = quadrant.active(x)
            if act.size:
                A = _complement_basis(derivative_matrix(r, x), tol)
                leak = float(np.max(np.abs(A[act]))) if A.size else 0.0
                if leak > tol:
                    transversal.append({"point": x.tolist(), "active": act.tolist(),
                                        "complement": A.T.tolist(), "leak": leak})
    return TameReport(not strata and not transversal, strata, transversal, len(samples))


@dataclass
class DiffeoReport:
    ok: bool
    mismatches: list
    inverse_residual: float
    n_samples: int

    def to_dict(self) -> dict:
        return {"ok": self.ok, "mismatches": self.mismatches,
                "inverse_residual": self.inverse_residual, "n_samples": self.n_samples}


def verify_diffeo_invariance(f: ScMap, f_inv: ScMap, source: PartialQuadrant, target: PartialQuadrant,
                             samples, tol: float = 1e-8, certify: bool = False) -> DiffeoReport:
    """Check d_C(x) = d_D(f(x)) on samples; f^-1 o f must return x."""
    xs = [_coeffs(s) for s in samples]
    if certify:
        for g in (f, f_inv):
            cert = certify_sc1(g, xs[:5], m_max=1)
            if not cert.accepted:
                raise DiffeoError(f"{g.name} fails the sc1 certificate")
    worst, bad = 0.0, []
    for x in xs:
        y = f(x)
        worst = max(worst, float(np.linalg.norm(f_inv(y) - x)))
        if not target.contains(y):
            raise DiffeoError(f"{f.name} maps {x.tolist()} out of the target quadrant")
        d0, d1 = degeneracy_index(x, source), degeneracy_index(y, target)
        if d0 != d1:
            bad.append({"point": x.tolist(), "index": d0, "image_index": d1})
    if worst > tol:
        raise DiffeoError(f"inverse residual {worst:.3g} exceeds {tol:g}")
    return DiffeoReport(not bad, bad, worst, len(xs))


@dataclass
class ChartedSpace:
    charts: list
    transition_tol: float = 1e-8


@dataclass
class AtlasReport:
    compatible: bool
    pairs: list = field(default_factory=list)
    n_samples: int = 0
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {"compatible": self.compatible, "pairs": self.pairs, "n_samples": self.n_samples,
                "seed": self.seed}


def check_atlas(space: ChartedSpace, overlap, seed: Optional[int] = None) -> AtlasReport:
    """Sampled pairwise compatibility: phi_b o phi_a^-1 certified as a retract map O_a -> O_b."""
    charts = space.charts
    if len(charts) < 2:
        return AtlasReport(True, [], len(overlap), seed)
    models, pairs = {}, []
    for c in charts:
        pts = [np.atleast_1d(np.asarray(c.phi(x), dtype=float)) for x in overlap]
        try:
            models[c.label] = check_retraction(c.retraction, pts, space.transition_tol)
        except RetractionError as exc:
            models[c.label] = exc
    for a in charts:
        for b in charts:
            if a is b:
                continue
            entry = {"from": a.label, "to": b.label}
            ma, mb = models[a.label], models[b.label]
            if isinstance(ma, Exception) or isinstance(mb, Exception):
                bad = ma if isinstance(ma, Exception) else mb
                entry.update(ok=False, error=str(bad))
                pairs.append(entry)
                continue
            phi_b, psi_a = b.phi, a.inverse
            dom = a.retraction.domain
            trans = ScMap(lambda z, phi_b=phi_b, psi_a=psi_a: np.atleast_1d(np.asarray(phi_b(psi_a(z)), dtype=float)),
                          dom, b.retraction.domain, None, f"{b.label}<-{a.label}")
            pts = [np.atleast_1d(np.asarray(a.phi(x), dtype=float)) for x in overlap]
            try:
                rep = check_retract_map(trans, ma, mb, pts, tol=space.transition_tol, m_max=1)
                entry.update(ok=rep.ok, containment=max(rep.containment_residuals),
                             failures=[c.name for c in rep.certificate.failures()])
            except (ContainmentError, EvaluationError) as exc:
                entry.update(ok=False, error=str(exc))
            pairs.append(entry)
    return AtlasReport(all(p["ok"] for p in pairs), pairs, len(overlap), seed)


def line_chart_pair(a: float = 1.0):
    """The half line [0, inf) charted into [0, inf)^2 through L_a and by the identity."""
    from .diff import linear_map, identity_map
    from .scales import ConstantScale

    C2, C1 = ConstantScale(2), ConstantScale(1)
    v = np.array([1.0, a])
    Ra = np.outer(v, v) / (1.0 + a * a)
    phi_a = Chart(f"phi_{a:g}", lambda x: np.asarray(x, dtype=float).reshape(-1)[0] * v,
                  PartialQuadrant(2), linear_map(Ra, C2, name="r_a"),
                  lambda z: np.array([(z[0] + a * z[1]) / (1.0 + a * a)]))
    ident = Chart("identity", lambda x: np.atleast_1d(np.asarray(x, dtype=float)).copy(),
                  PartialQuadrant(1), identity_map(C1), lambda z: np.atleast_1d(z).copy())
    return phi_a, ident


def projection_retraction_a(a: float = 1.0) -> ScMap:
    """r_a(x, y) = ((x + a y) / (1 + a^2)) (1, a), orthogonal projection onto L_a."""
    from .diff import linear_map
    from .scales import ConstantScale

    v = np.array([1.0, a])
    return linear_map(np.outer(v, v) / (1.0 + a * a), ConstantScale(2), name="r_a")
