"""Finite sc-differentiability certificates for maps between scales.

Every check here is a sampled, finite-order statement: a map is certified on
the samples and levels it was tested on, and the report records that
envelope.  Derivatives are central finite differences in the coefficient
basis unless the map carries an analytic derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import fourier
from .errors import (EvaluationError, FDInstabilityError, LevelError, PreconditionError,
                     ScLabError)
from .scales import ConstantScale, Scale, ScalePoint, SumScale

FD_STEP = 1e-5
FD_STEP_SECOND = 1e-3
LEVEL_MARGIN = 0.25
STABILIZATION_TOL = 0.05
CONTINUITY_DECAY = 0.05


@dataclass(frozen=True)
class ScMap:
    """A map between scales acting on coefficient vectors of any truncation.

    ``derivative(x, xi)`` returns Df(x) xi when known analytically.
    ``contains`` is the open-set predicate; stencils shrink to stay inside.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    domain: Scale
    target: Scale
    derivative: Optional[Callable] = None
    name: str = "map"
    contains: Optional[Callable[[np.ndarray], bool]] = None

    def __call__(self, x):
        x = _coeffs(x)
        try:
            return np.asarray(self.eval(x), dtype=float)
        except ScLabError:
            raise
        except Exception as exc:  # black-box maps may fail arbitrarily
            raise EvaluationError(f"{self.name}: evaluation failed: {exc}") from exc

    def then(self, g: "ScMap") -> "ScMap":
        """g o self."""
        deriv = None
        if self.derivative is not None and g.derivative is not None:
            deriv = lambda x, xi: g.derivative(self(x), self.derivative(x, xi))
        return ScMap(lambda x: g(self(x)), self.domain, g.target, deriv,
                     f"{g.name}o{self.name}", self.contains)


def _coeffs(x) -> np.ndarray:
    if isinstance(x, ScalePoint):
        return np.asarray(x.coeffs, dtype=float)
    return np.asarray(x, dtype=float)


def linear_map(A: np.ndarray, scale: Scale, target: Optional[Scale] = None, name="linear") -> ScMap:
    """Fixed-size linear map x -> A x with its exact derivative."""
    A = np.asarray(A, dtype=float)
    return ScMap(lambda x: A @ x, scale, target or scale, lambda x, xi: A @ xi, name)


def identity_map(scale: Scale) -> ScMap:
    return ScMap(lambda x: np.array(x, dtype=float), scale, scale,
                 lambda x, xi: np.array(xi, dtype=float), "identity")


def pointwise_polynomial(scale: Scale, coeffs, name: Optional[str] = None) -> ScMap:
    """v -> sum_j c_j v^j with products taken pointwise on the circle."""
    c = np.asarray(coeffs, dtype=float)
    dc = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)

    def ev(x):
        return fourier.pointwise(lambda s: np.polynomial.polynomial.polyval(s, c), x)

    def deriv(x, xi):
        return fourier.from_samples(
            np.polynomial.polynomial.polyval(fourier.to_samples(x), dc) * fourier.to_samples(xi),
            x.shape[0])

    label = name or "poly(" + ",".join(f"{v:g}" for v in c) + ")"
    return ScMap(ev, scale, scale, deriv, label)


def shift_by(scale: Scale, tau: float) -> ScMap:
    """The linear map v -> v(. + tau) on the circle."""
    return ScMap(lambda v: fourier.shift(v, tau), scale, scale,
                 lambda v, xi: fourier.shift(xi, tau), f"shift({tau:g})")


def shift_map(circle: Scale) -> ScMap:
    """Psi(tau, v) = v(. + tau) on R + E, with D Psi(tau,v)(T,V) = T tau_* v' + tau_* V."""
    dom = SumScale((ConstantScale(1, circle.max_level), circle))

    def ev(z):
        return fourier.shift(z[1:], z[0])

    def deriv(z, dz):
        tau, v = z[0], z[1:]
        return dz[0] * fourier.shift(fourier.derivative(v), tau) + fourier.shift(dz[1:], tau)

    return ScMap(ev, dom, circle, deriv, "shift_map")


# --------------------------------------------------------------------------
# finite differences


def _inside(f: ScMap, y) -> bool:
    return f.contains is None or bool(f.contains(y))


def _diff(f: ScMap, x, d, h):
    """Difference quotient along d; central when the stencil fits in the domain."""
    for _ in range(12):
        if _inside(f, x + h * d) and _inside(f, x - h * d):
            return (f(x + h * d) - f(x - h * d)) / (2 * h)
        h /= 2
    if _inside(f, x + h * d):
        return (f(x + h * d) - f(x)) / h
    if _inside(f, x - h * d):
        return (f(x) - f(x - h * d)) / h
    raise EvaluationError(f"{f.name}: no admissible finite-difference stencil at this point")


def default_step(f: ScMap, x) -> float:
    x = _coeffs(x)
    lvl = 1 if f.domain.max_level >= 1 else 0
    return FD_STEP * (f.domain.norm(x, lvl) + 1.0)


def fd_jacobian(f: ScMap, x, step: Optional[float] = None, N: Optional[int] = None) -> np.ndarray:
    """Central-difference Jacobian, one column per coefficient."""
    x = _coeffs(x)
    if N is not None:
        x = f.domain.resize(x, N)
    if step is not None and step <= 0:
        raise PreconditionError("finite-difference step must be positive")
    h = step if step is not None else default_step(f, x)
    cols = []
    e = np.zeros_like(x)
    for j in range(x.shape[0]):
        e[j] = 1.0
        cols.append(_diff(f, x, e, h))
        e[j] = 0.0
    return np.column_stack(cols)


def fd_forward_jacobian(f: ScMap, x, step: float) -> np.ndarray:
    x = _coeffs(x)
    fx = f(x)
    cols = []
    e = np.zeros_like(x)
    for j in range(x.shape[0]):
        e[j] = 1.0
        cols.append((f(x + step * e) - fx) / step if _inside(f, x + step * e) else _diff(f, x, e, step))
        e[j] = 0.0
    return np.column_stack(cols)


def directional_derivative(f: ScMap, x, xi, step: Optional[float] = None) -> np.ndarray:
    x, xi = _coeffs(x), _coeffs(xi)
    if f.derivative is not None and step is None:
        return np.asarray(f.derivative(x, xi), dtype=float)
    h = step if step is not None else default_step(f, x)
    return _diff(f, x, xi, h)


def derivative_matrix(f: ScMap, x) -> np.ndarray:
    """Df(x) from the analytic derivative when present, else by finite differences."""
    x = _coeffs(x)
    if f.derivative is None:
        return fd_jacobian(f, x)
    eye = np.eye(x.shape[0])
    return np.column_stack([f.derivative(x, e) for e in eye])


def second_derivative(f: ScMap, x, xi, eta, step: float = FD_STEP_SECOND,
                      richardson: bool = True) -> np.ndarray:
    """D^2 f(x)(xi, eta) as the xi-difference of the eta-derivative.

    With ``richardson`` the steps h and h/2 are combined to cancel the h^2
    error term.
    """
    x, xi, eta = _coeffs(x), _coeffs(xi), _coeffs(eta)
    inner = (lambda y: f.derivative(y, eta)) if f.derivative is not None else (
        lambda y: _diff(f, y, eta, FD_STEP * (1.0 + np.linalg.norm(y))))

    def quotient(h):
        return (inner(x + h * xi) - inner(x - h * xi)) / (2 * h)

    if not richardson:
        return quotient(step)
    return (4.0 * quotient(step / 2) - quotient(step)) / 3.0


def operator_level_norm(J: np.ndarray, domain: Scale, target: Scale, m: int, m_target: int) -> float:
    wd = domain.level_weights(J.shape[1], m)
    wt = target.level_weights(J.shape[0], m_target)
    return float(np.linalg.norm((wt[:, None] * J) / wd[None, :], 2))


def random_direction(scale: Scale, dim: int, m: int, rng, extra_decay: float = 2.0) -> np.ndarray:
    """Random vector of unit level-m norm that also lies well inside E_{m+1}."""
    g = rng.standard_normal(dim)
    if hasattr(scale, "level_weights"):
        lw = scale.level_weights(dim, m)
        w = scale.level_weights(dim, 1) / scale.level_weights(dim, 0) if scale.max_level >= 1 else np.ones(dim)
        g = g / (lw * w ** extra_decay)
    n = scale.norm(g, m)
    return g / n if n > 0 else g


# --------------------------------------------------------------------------
# reports


@dataclass
class Check:
    name: str
    status: str                  # "pass" | "fail" | "skip"
    sample: int
    level: Optional[int]
    residuals: list = field(default_factory=list)
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "sample": self.sample, "level": self.level,
                "residuals": [float(r) for r in self.residuals], "detail": self.detail}


@dataclass
class ScDerivativeSample:
    base: np.ndarray
    jacobian: np.ndarray
    fd_step: float
    levels_checked: list
    residuals: dict = field(default_factory=dict)


@dataclass
class CertificateReport:
    map: str
    order: int
    levels: list
    n_samples: int
    checks: list
    derivative_samples: list = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return all(c.status != "fail" for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if c.status == "fail"]

    def to_dict(self) -> dict:
        return {"map": self.map, "order": self.order, "accepted": self.accepted,
                "samples": self.n_samples, "levels": list(self.levels),
                "checks": [c.to_dict() for c in self.checks]}


def _levels(f: ScMap, m_max: int, need: int) -> list:
    top = min(m_max, f.domain.max_level - need, f.target.max_level)
    return list(range(top + 1))


def _decays(values, atol) -> bool:
    return values[-1] <= max(atol, CONTINUITY_DECAY * values[0])


def certify_sc0(f: ScMap, samples, m_max: int = 2, halvings: int = 16, seed: int = 0) -> CertificateReport:
    """Level preservation plus a sampled modulus of continuity on each level."""
    if not samples:
        raise PreconditionError("certify_sc0 needs at least one sample")
    rng = np.random.default_rng(seed)
    levels = _levels(f, m_max, 0)
    checks = []
    for i, s in enumerate(samples):
        x = _coeffs(s)
        fx = f(x)
        rx, rf = f.domain.regularity(x), f.target.regularity(fx)
        if rx is None or rf is None:
            checks.append(Check("level_preservation", "skip", i, None, detail="no regularity estimator"))
        else:
            need = min(rx, m_max)
            ok = rf >= need - LEVEL_MARGIN
            checks.append(Check("level_preservation", "pass" if ok else "fail", i, None,
                                [rx, rf], f"regularity {rx:.3g} -> {rf:.3g}"))
        for m in levels:
            d = random_direction(f.domain, x.shape[0], m, rng)
            eps0 = 0.1 * (f.domain.norm(x, m) + 1.0)
            dists = []
            for j in range(halvings + 1):
                eps = eps0 * 2.0 ** -j
                while not _inside(f, x + eps * d) and eps > 1e-300:
                    eps /= 2
                dists.append(f.target.norm(f(x + eps * d) - fx, m))
            atol = 1e-12 * (1.0 + f.target.norm(fx, m))
            ok = _decays(dists, atol)
            checks.append(Check("continuity", "pass" if ok else "fail", i, m,
                                [dists[0], dists[-1]], "" if ok else "increments do not shrink"))
    return CertificateReport(f.name, 0, levels, len(samples), checks)


def _fd_consistency(f, x, h, domain, target, m):
    """Step-halving table for the central-difference Jacobian as E_{m+1} -> F_m."""
    J = [fd_jacobian(f, x, h * 2.0 ** -j) for j in range(3)]
    r1 = operator_level_norm(J[0] - J[1], domain, target, m + 1, m)
    r2 = operator_level_norm(J[1] - J[2], domain, target, m + 1, m)
    scale = operator_level_norm(J[2], domain, target, m + 1, m)
    return J, r1, r2, scale


def certify_sc1(f: ScMap, samples, m_max: int = 2, seed: int = 0, check_sc0: bool = True,
                fd_floor: float = 1e-7, analytic_tol: float = 1e-6) -> CertificateReport:
    """Sampled sc^1 certificate.

    Per sample x of regularity >= m+1 and level m:
      (i)   the FD Jacobian as a map E_{m+1} -> F_m is consistent under step
            halving, and forward and central quotients agree to O(h);
      (ii)  the same matrix measured E_m -> F_m has level norms that settle
            along the ladder (bounded extension to level m);
      (iii) Df(x_j) xi -> Df(x) xi in F_m along x_j -> x in E_{m+1}.
    """
    if check_sc0:
        pre = certify_sc0(f, samples, m_max, seed=seed)
        if not pre.accepted:
            raise PreconditionError(f"{f.name}: sc0 certificate rejected; sc1 not attempted")
    rng = np.random.default_rng(seed + 1)
    levels = _levels(f, m_max, 1)
    checks, dsamples = [], []
    for i, s in enumerate(samples):
        x = _coeffs(s)
        rx = f.domain.regularity(x)
        h = default_step(f, x)
        J_final = None
        for m in levels:
            if rx is not None and rx < m + 1 - LEVEL_MARGIN:
                checks.append(Check("diagonal_C1", "skip", i, m, detail=f"regularity {rx:.3g} < {m + 1}"))
                continue
            J, r1, r2, size = _fd_consistency(f, x, h, f.domain, f.target, m)
            J_final = J[2]
            floor = fd_floor * max(1.0, size)
            table = [(h, r1), (h / 2, r2)]
            if r2 > floor and r2 > r1:
                raise FDInstabilityError(f"{f.name}: FD residual grows under step halving", table)
            # convergence only: C^1 maps that are not C^2 halve rather than quarter
            ok = r2 <= floor or r2 <= 0.75 * r1
            checks.append(Check("diagonal_C1", "pass" if ok else "fail", i, m, [r1, r2]))

            F1 = fd_forward_jacobian(f, x, h)
            F2 = fd_forward_jacobian(f, x, h / 2)
            g1 = operator_level_norm(F1 - J[0], f.domain, f.target, m + 1, m)
            g2 = operator_level_norm(F2 - J[1], f.domain, f.target, m + 1, m)
            ok = g2 <= max(1e3 * floor, 0.75 * g1) or g2 <= floor
            checks.append(Check("pointwise_differentiable", "pass" if ok else "fail", i, m, [g1, g2],
                                "" if ok else "one-sided and central quotients disagree"))

            if f.derivative is not None:
                D = derivative_matrix(f, x)
                err = operator_level_norm(J[2] - D, f.domain, f.target, m + 1, m)
                ref = max(1.0, operator_level_norm(D, f.domain, f.target, m + 1, m))
                ok = err <= analytic_tol * ref
                checks.append(Check("analytic_agreement", "pass" if ok else "fail", i, m, [err / ref]))

            dims = [d for d in f.domain.ladder_dims()]
            if len(dims) >= 2 and dims[-1] != dims[0]:
                norms = []
                for d in dims[-2:]:
                    xd = f.domain.resize(x, d)
                    Jd = derivative_matrix(f, xd) if f.derivative is not None else fd_jacobian(f, xd)
                    norms.append(operator_level_norm(Jd, f.domain, f.target, m, m))
                ratio = norms[1] / norms[0] if norms[0] > 0 else (1.0 if norms[1] == 0 else math.inf)
                ok = ratio <= 1.0 + STABILIZATION_TOL
                checks.append(Check("extension_bounded", "pass" if ok else "fail", i, m, norms + [ratio]))
            else:
                checks.append(Check("extension_bounded", "skip", i, m, detail="single truncation"))

            xi = random_direction(f.domain, x.shape[0], m, rng)
            delta = random_direction(f.domain, x.shape[0], m + 1, rng)
            eps0 = 0.1 * (f.domain.norm(x, m + 1) + 1.0)
            base = directional_derivative(f, x, xi)
            dist = []
            for j in range(11):
                xj = x + eps0 * 2.0 ** -j * delta
                if not _inside(f, xj):
                    continue
                dist.append(f.target.norm(directional_derivative(f, xj, xi) - base, m))
            atol = 1e-6 * (1.0 + f.target.norm(base, m))
            ok = len(dist) >= 2 and _decays(dist, atol)
            checks.append(Check("derivative_continuity", "pass" if ok else "fail", i, m,
                                [dist[0], dist[-1]] if dist else []))
        if J_final is not None:
            dsamples.append(ScDerivativeSample(x, J_final, h / 4, levels))
    return CertificateReport(f.name, 1, levels, len(samples), checks, dsamples)


def certify_sc2(f: ScMap, samples, m_max: int = 1, seed: int = 0, pairs: int = 4,
                symmetry_tol: float = 1e-6, fd_floor: float = 1e-6,
                check_sc1: bool = True) -> CertificateReport:
    """Sampled sc^2 certificate via second differences of the first derivative."""
    if check_sc1:
        pre = certify_sc1(f, samples, m_max, seed=seed)
        if not pre.accepted:
            raise PreconditionError(f"{f.name}: sc1 certificate rejected; sc2 not attempted")
    rng = np.random.default_rng(seed + 2)
    levels = _levels(f, m_max, 2)
    checks = []
    for i, s in enumerate(samples):
        x = _coeffs(s)
        rx = f.domain.regularity(x)
        for m in levels:
            if rx is not None and rx < m + 2 - LEVEL_MARGIN:
                checks.append(Check("hessian", "skip", i, m, detail=f"regularity {rx:.3g} < {m + 2}"))
                continue
            dirs = [(random_direction(f.domain, x.shape[0], m + 1, rng),
                     random_direction(f.domain, x.shape[0], m + 1, rng)) for _ in range(pairs)]
            cons, sym, vals = [], [], []
            for xi, eta in dirs:
                B = [second_derivative(f, x, xi, eta, FD_STEP_SECOND * 2.0 ** -j) for j in range(3)]
                r1 = f.target.norm(B[0] - B[1], m)
                r2 = f.target.norm(B[1] - B[2], m)
                size = f.target.norm(B[2], m)
                cons.append(r2 <= fd_floor * max(1.0, size) or r2 <= r1 / 3.0)
                swap = second_derivative(f, x, eta, xi)
                scale = f.domain.norm(xi, 0) * f.domain.norm(eta, 0)
                sym.append(f.target.norm(B[0] - swap, 0) / max(scale, 1e-300))
                vals.append(size)
            checks.append(Check("hessian_consistency", "pass" if all(cons) else "fail", i, m))
            ok = max(sym) <= symmetry_tol
            checks.append(Check("hessian_symmetry", "pass" if ok else "fail", i, m, [max(sym)]))

            dims = f.domain.ladder_dims()
            if len(dims) >= 2 and dims[-1] != dims[0]:
                est = []
                for d in dims[-2:]:
                    xd = f.domain.resize(x, d)
                    vals_d = []
                    for xi, eta in dirs:
                        xi_d, eta_d = f.domain.resize(xi, d), f.domain.resize(eta, d)
                        b = second_derivative(f, xd, xi_d, eta_d)
                        vals_d.append(f.target.norm(b, m) /
                                      (f.domain.norm(xi_d, m + 1) * f.domain.norm(eta_d, m + 1)))
                    est.append(max(vals_d))
                ratio = est[1] / est[0] if est[0] > 0 else (1.0 if est[1] == 0 else math.inf)
                ok = ratio <= 1.0 + STABILIZATION_TOL
                checks.append(Check("hessian_extension_bounded", "pass" if ok else "fail", i, m, est + [ratio]))
    return CertificateReport(f.name, 2, levels, len(samples), checks)


@dataclass(frozen=True)
class PairScale(Scale):
    """E' + E'' on vectors [x, xi] of two equal-length halves (tangent bundles)."""

    first: Scale
    second: Scale

    @property
    def max_level(self) -> int:
        return min(self.first.max_level, self.second.max_level)

    def split(self, z):
        z = np.asarray(z, dtype=float)
        h = z.shape[0] // 2
        return z[:h], z[h:]

    def norm(self, z, m):
        self.check_level(m)
        a, b = self.split(z)
        return math.hypot(self.first.norm(a, m), self.second.norm(b, m))

    def level_weights(self, dim, m):
        h = dim // 2
        return np.concatenate([self.first.level_weights(h, m), self.second.level_weights(dim - h, m)])

    def ladder_dims(self):
        return tuple(2 * n for n in self.second.ladder_dims())

    def resize(self, z, dim):
        a, b = self.split(z)
        return np.concatenate([self.first.resize(a, dim // 2), self.second.resize(b, dim // 2)])

    def regularity(self, z):
        a, b = self.split(z)
        ra, rb = self.first.regularity(a), self.second.regularity(b)
        return None if ra is None or rb is None else min(ra, rb)

    def shifted(self, k=1):
        return PairScale(self.first.shifted(k), self.second.shifted(k))

    def to_dict(self):
        return {"kind": "pair", "first": self.first.to_dict(), "second": self.second.to_dict()}


def tangent_scale(scale: Scale) -> PairScale:
    """TU = U^1 + E^0."""
    return PairScale(scale.shifted(1), scale)


def tangent_map(f: ScMap, check_regularity: bool = True) -> ScMap:
    """Tf(x, xi) = (f(x), Df(x) xi) on TU = U^1 + E^0."""
    dom, tgt = tangent_scale(f.domain), tangent_scale(f.target)

    def ev(z):
        x, xi = dom.split(z)
        if check_regularity:
            r = f.domain.regularity(x)
            if r is not None and r < 1 - LEVEL_MARGIN:
                raise LevelError(f"Tf needs base points of regularity >= 1, got {r:.3g}")
        return np.concatenate([f(x), directional_derivative(f, x, xi)])

    contains = None
    if f.contains is not None:
        contains = lambda z: f.contains(dom.split(z)[0])
    return ScMap(ev, dom, tgt, None, f"T{f.name}", contains)


@dataclass
class ChainRuleReport:
    residuals: list      # dicts: sample, level, residual
    tol: float

    @property
    def max_residual(self) -> float:
        return max((r["residual"] for r in self.residuals), default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol

    def to_dict(self) -> dict:
        return {"tol": self.tol, "ok": self.ok, "max_residual": self.max_residual,
                "residuals": self.residuals}


def verify_chain_rule(f: ScMap, g: ScMap, samples, m_max: int = 1, xis=None, seed: int = 0,
                      tol: float = 1e-6, step: Optional[float] = None) -> ChainRuleReport:
    """Compare the FD derivative of g o f with Dg(f(x)) Df(x) xi, relative to the latter.

    The right side uses analytic derivatives when the maps carry them.
    """
    rng = np.random.default_rng(seed)
    comp = ScMap(lambda x: g(f(x)), f.domain, g.target, None, f"{g.name}o{f.name}", f.contains)
    out = []
    for i, s in enumerate(samples):
        x = _coeffs(s)
        rx = f.domain.regularity(x)
        for m in range(min(m_max, f.domain.max_level - 1, g.target.max_level) + 1):
            if rx is not None and rx < m + 1 - LEVEL_MARGIN:
                continue
            xi = _coeffs(xis[i]) if xis is not None else random_direction(f.domain, x.shape[0], m, rng)
            lhs = directional_derivative(comp, x, xi, step or default_step(comp, x))
            rhs = directional_derivative(g, f(x), directional_derivative(f, x, xi))
            res = g.target.norm(lhs - rhs, m) / max(g.target.norm(rhs, m), 1e-300)
            out.append({"sample": i, "level": m, "residual": float(res)})
    return ChainRuleReport(out, tol)


# --------------------------------------------------------------------------
# shift map case study


def horizontal_gap(tau: float, K: int) -> float:
    """|A(tau) - A(0)| on E_m -> E_m with frequencies up to K (any m)."""
    k = np.arange(0, K + 1)
    return float(np.max(2.0 * np.abs(np.sin(np.pi * k * tau))))


def diagonal_gap(tau: float, K: int) -> float:
    """|A(tau) - A(0)| on E_{m+1} -> E_m with frequencies up to K."""
    k = np.arange(0, K + 1)
    return float(np.max(2.0 * np.abs(np.sin(np.pi * k * tau)) / np.sqrt(1.0 + k ** 2)))


@dataclass
class DichotomyReport:
    taus: list
    truncations: list
    pointwise_residuals: list
    horizontal_gaps: list
    diagonal_gaps: list
    diagonal_bounds: list
    checks: dict
    envelope: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"taus": self.taus, "truncations": self.truncations, "envelope": self.envelope,
                "pointwise_residuals": self.pointwise_residuals,
                "horizontal_gaps": self.horizontal_gaps, "diagonal_gaps": self.diagonal_gaps,
                "diagonal_bounds": self.diagonal_bounds, "checks": self.checks, "ok": self.ok}


def shift_map_dichotomy(v, m: int, taus, truncations=None, xi=None, T: float = 1.0,
                        diagonal_truncation: int = 4096, gap_floor: float = 1.9,
                        bound_slack: float = 1.01, circle=None) -> DichotomyReport:
    """Compact-open convergence versus norm failure of tau -> D Psi(tau, v).

    (i)   |D Psi(tau,v)(T,xi) - D Psi(0,v)(T,xi)|_m along the taus;
    (ii)  |A(tau) - A(0)|_{m -> m} with A(tau) = tau_*, frequency cutoff
          ``truncations[i]`` (default ceil(1/(2 tau)));
    (iii) |A(tau) - A(0)|_{m+1 -> m} at ``diagonal_truncation`` frequencies,
          against the bound 2 pi tau.
    The rotation blocks of tau_* make (ii) and (iii) exact suprema over 2x2
    blocks, so no dense SVD is needed at large truncations.
    """
    from .errors import ConfigurationError
    from .scales import circle_scale

    v = _coeffs(v)
    fourier.require_odd(v.shape[0], "shift map")
    circle = circle or circle_scale((v.shape[0],), max_level=m + 2)
    psi = shift_map(circle)
    xi = _coeffs(xi) if xi is not None else np.exp(-0.3 * np.arange(v.shape[0]))
    taus = [float(t) for t in taus]
    if truncations is None:
        truncations = [max(1, math.ceil(1.0 / (2.0 * t))) if t > 0 else 1 for t in taus]
    base = psi.derivative(np.concatenate([[0.0], v]), np.concatenate([[T], xi]))
    res, hgap, dgap, bounds = [], [], [], []
    for t, K in zip(taus, truncations):
        if t > 0 and 2 * K * t < 1.0 - 1e-12:
            raise ConfigurationError(f"frequency cutoff {K} cannot resolve tau={t:g}; need >= {1 / (2 * t):g}")
        d = psi.derivative(np.concatenate([[t], v]), np.concatenate([[T], xi]))
        res.append(circle.norm(d - base, m))
        hgap.append(horizontal_gap(t, K))
        dgap.append(diagonal_gap(t, diagonal_truncation))
        bounds.append(2 * np.pi * abs(t))
    # |tau_* u - u|_m <= 2 pi tau |u|_{m+1} for u = T v' + xi
    u = T * fourier.derivative(v) + xi
    envelope = [2 * np.pi * abs(t) * circle.norm(u, m + 1) for t in taus]
    pos = [r for r, t in zip(res, taus) if t > 0]
    monotone = all(later <= 2.0 * r for j, r in enumerate(pos) for later in pos[j + 1:])
    checks = {
        "pointwise_convergence": bool(monotone and all(r <= e * (1 + 1e-12) for r, e in zip(res, envelope))),
        "horizontal_norm_gap": all(g >= gap_floor for g, t in zip(hgap, taus) if t > 0),
        "diagonal_norm_bound": all(g <= b * bound_slack + 1e-15 for g, b in zip(dgap, bounds)),
    }
    return DichotomyReport(taus, list(truncations), res, hgap, dgap, bounds, checks, envelope)
