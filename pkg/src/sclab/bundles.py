"""Double scales for trivial strong bundles.

U > F carries levels (m, k) with k <= m + 1.  Two single scales are read off
it: [0] pairs U_m with F_m and [1] pairs U_m with F_{m+1}.  Strong bundle
retractions act fiberwise linearly, R(u, xi) = (r(u), rho_u xi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .diff import ScMap, _coeffs, certify_sc0, certify_sc1
from .errors import LevelError
from .retracts import RetractModel
from .scales import Scale, TruncatedScale

GAIN_MARGIN = 0.75


@dataclass(frozen=True)
class DoubleScaleIndex:
    m: int
    k: int


def validate_double_index(idx: DoubleScaleIndex) -> bool:
    return idx.m >= 0 and 0 <= idx.k <= idx.m + 1


@dataclass(frozen=True)
class BundleScale(Scale):
    """U_m + F_{m+shift}; the first ``base_dim`` coordinates belong to U."""

    base: Scale
    fiber: Scale
    base_dim: int
    shift: int = 0

    @property
    def max_level(self) -> int:
        return min(self.base.max_level, self.fiber.max_level - self.shift)

    def split(self, z):
        z = np.asarray(z, dtype=float)
        return z[: self.base_dim], z[self.base_dim:]

    def norm(self, z, m: int) -> float:
        self.check_level(m)
        u, xi = self.split(z)
        return math.hypot(self.base.norm(u, m), self.fiber.norm(xi, m + self.shift))

    def level_pair(self, m: int) -> DoubleScaleIndex:
        return DoubleScaleIndex(m, m + self.shift)

    def ladder_dims(self) -> tuple:
        return tuple(self.base_dim + n for n in self.fiber.ladder_dims())

    def regularity(self, z):
        u, xi = self.split(z)
        rb, rf = self.base.regularity(u), self.fiber.regularity(xi)
        if rb is None or rf is None:
            return None
        return min(rb, rf - self.shift)

    def shifted(self, k: int = 1) -> "BundleScale":
        return BundleScale(self.base.shifted(k), self.fiber.shifted(k), self.base_dim, self.shift)

    def to_dict(self) -> dict:
        return {"kind": "bundle", "base": self.base.to_dict(), "fiber": self.fiber.to_dict(),
                "base_dim": self.base_dim, "shift": self.shift}


@dataclass(frozen=True)
class TrivialStrongBundle:
    base: Scale
    fiber: Scale
    base_dim: int
    contains: Optional[Callable] = None


@dataclass(frozen=True)
class ExtractedBundle:
    scale: BundleScale
    projection: ScMap


def extract_shifted_bundle(b: TrivialStrongBundle, i: int) -> ExtractedBundle:
    if i not in (0, 1):
        raise LevelError(f"extracted scales are [0] and [1], got [{i}]")
    sc = BundleScale(b.base, b.fiber, b.base_dim, i)
    n = b.base_dim
    proj = ScMap(lambda z: np.array(z[:n], dtype=float), sc, b.base,
                 lambda z, dz: np.array(dz[:n], dtype=float), f"p[{i}]", b.contains)
    return ExtractedBundle(sc, proj)


def _apply(op, xi) -> np.ndarray:
    if callable(getattr(op, "apply", None)):
        return np.asarray(op.apply(xi), dtype=float)
    return np.asarray(op, dtype=float) @ xi


def _rank(op, threshold: float = 1e-8) -> int:
    if callable(getattr(op, "rank", None)):
        return int(op.rank(threshold))
    return int(np.linalg.matrix_rank(np.asarray(op, dtype=float), threshold))


@dataclass(frozen=True)
class StrongBundleRetraction:
    base: RetractModel
    rho: Callable
    fiber: Scale
    tol: float = 1e-8

    @property
    def bundle(self) -> TrivialStrongBundle:
        r = self.base.r
        n = self.base.samples[0].shape[0]
        return TrivialStrongBundle(r.domain, self.fiber, n, r.contains)

    def __call__(self, z) -> np.ndarray:
        n = self.bundle.base_dim
        z = np.asarray(z, dtype=float)
        u, xi = z[:n], z[n:]
        return np.concatenate([self.base.r(u), _apply(self.rho(u), xi)])


@dataclass
class StrongRetractionReport:
    accepted: bool
    idempotency: dict                # "[0]" / "[1]" -> per-sample residuals
    fiber_projection_residuals: list
    fiber_dimensions: list           # (base point, rank rho_x)
    regularity: list
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "idempotency": self.idempotency,
                "fiber_projection_residuals": self.fiber_projection_residuals,
                "fiber_dimensions": self.fiber_dimensions, "regularity": self.regularity,
                "failures": self.failures, "notes": self.notes}


def check_strong_retraction(R: StrongBundleRetraction, samples, regularity_cap: float = 3.0,
                            margin: float = 0.25) -> StrongRetractionReport:
    """Sampled checks of R o R = R in [0] and [1] (relative residuals), of rho_x^2 = rho_x on Fix r,
    of fiber regularity preservation, and the fiber dimension rank(rho_x).

    ``samples`` are concatenated vectors (u, xi).
    """
    b = R.bundle
    n = b.base_dim
    scales = {f"[{i}]": extract_shifted_bundle(b, i).scale for i in (0, 1)}
    idem = {k: [] for k in scales}
    proj_res, dims, regs, failures, notes = [], [], [], [], []
    for j, s in enumerate(samples):
        z = _coeffs(s)
        Rz = R(z)
        d = R(Rz) - Rz
        for key, sc in scales.items():
            # relative: weighted fiber norms reach e^{delta |s|} far out on the line
            res = sc.norm(d, 0) / max(1.0, sc.norm(Rz, 0))
            idem[key].append(res)
            if res > R.tol:
                failures.append({"sample": j, "check": f"idempotency{key}", "residual": res})
        u, xi = z[:n], z[n:]
        x = R.base.r(u)
        rho_x = R.rho(x)
        if callable(getattr(rho_x, "idempotency_residual", None)):
            pr = float(rho_x.idempotency_residual())
        elif callable(getattr(rho_x, "apply", None)):
            e = _apply(rho_x, xi)
            pr = float(np.linalg.norm(_apply(rho_x, e) - e))
        else:
            M = np.asarray(rho_x, dtype=float)
            pr = float(np.linalg.norm(M @ M - M, 2))
        proj_res.append(pr)
        if pr > R.tol:
            failures.append({"sample": j, "check": "rho_projection", "residual": pr})
        dims.append({"base": x[: min(n, 4)].tolist(), "fiber_dimension": _rank(rho_x)})
        if isinstance(R.fiber, TruncatedScale):
            k = R.fiber.regularity(xi)
            out = R.fiber.regularity(_apply(R.rho(u), xi))
            good = out >= min(k, regularity_cap) - margin
            regs.append({"sample": j, "input": k, "output": out, "ok": bool(good)})
            if not good:
                failures.append({"sample": j, "check": "double_scale", "input": k, "output": out})
    if not isinstance(R.fiber, TruncatedScale):
        notes.append("fiber regularity not estimable on this fiber scale; double-scale check skipped")
    return StrongRetractionReport(not failures, idem, proj_res, dims, regs, failures, notes)


@dataclass
class SectionReport:
    kind: str
    certificate: dict
    plus_certificate: Optional[dict]
    gains: list

    def to_dict(self) -> dict:
        return {"kind": self.kind, "certificate": self.certificate,
                "plus_certificate": self.plus_certificate, "gains": self.gains}


def classify_section(s: ScMap, model: RetractModel, fiber: Scale, samples, m_max: int = 1,
                     gain_margin: float = GAIN_MARGIN, cap: float = 6.0) -> SectionReport:
    """Classify the principal part of x -> (x, s(x)) as "sc", "sc+" or "rejected".

    sc+ needs every sampled value to gain at least ``gain_margin`` levels over
    its argument (capped at ``cap``) and s to certify into the shifted fiber.
    Samples should have finite regularity, or the gain test is vacuous.
    """
    xs = [model.r(_coeffs(x)) for x in samples]
    cert = certify_sc1(s, xs, m_max)
    if not cert.accepted:
        return SectionReport("rejected", cert.to_dict(), None, [])
    gains, gained = [], True
    for x in xs:
        rx = model.r.domain.regularity(x)
        y = s(x)
        if not np.any(y):
            ry = math.inf
        else:
            ry = fiber.regularity(y)
        if rx is None or ry is None:
            gained = False
            gains.append({"input": rx, "output": ry, "ok": False})
            continue
        ok = ry >= min(rx + gain_margin, cap)
        gains.append({"input": rx, "output": ry, "ok": bool(ok)})
        gained = gained and bool(ok)
    plus = None
    if gained:
        lifted = ScMap(s.eval, s.domain, fiber.shifted(1), s.derivative, f"{s.name}+", s.contains)
        pc = certify_sc0(lifted, xs, m_max)
        plus = pc.to_dict()
        gained = pc.accepted
    return SectionReport("sc+" if gained else "sc", cert.to_dict(), plus, gains)
