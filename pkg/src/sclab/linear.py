"""Scale-linear theory on truncated scales.

An operator is a rule N -> matrix acting on the first N coefficients.  Its
level-(m -> m') norm at truncation N is the spectral norm of

    W_target^{m'} A_N W_domain^{-m}

and "bounded on every level" is tested by watching these norms stabilize
along the truncation ladder.  Kernels, cokernels and ranks come from SVDs of
the same weighted matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import subspace_angles

from .errors import (AmbiguousRankError, DegenerateBasisError, LevelError, PreconditionError,
                     ShapeError)
from .scales import (Scale, ScalePoint, TruncatedScale, inclusion_singular_values,
                     random_phase_point)

DEFAULT_SVD_THRESHOLD = 1e-8
STABILIZATION_TOL = 0.05
KERNEL_ANGLE_TOL = 1e-6
REGULARITY_MARGIN = 0.25


@dataclass(frozen=True)
class ScOperator:
    assembler: Callable[[int], np.ndarray]
    domain: Scale
    target: Scale
    declared_shift: int = 0
    name: str = "operator"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.declared_shift not in (0, 1):
            raise ValueError("declared_shift must be 0 (sc) or 1 (sc+)")

    def matrix(self, N: int) -> np.ndarray:
        A = np.atleast_2d(np.asarray(self.assembler(N), dtype=float))
        if A.shape[1] != N:
            raise ShapeError(f"{self.name}: assembler returned {A.shape} for truncation {N}")
        return A

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.matrix(x.shape[0]) @ x

    def ladder(self) -> tuple:
        return tuple(self.domain.ladder_dims())

    def __add__(self, other: "ScOperator") -> "ScOperator":
        return ScOperator(lambda N: self.matrix(N) + other.matrix(N), self.domain, self.target,
                          0, f"{self.name}+{other.name}")

    def compose(self, inner: "ScOperator") -> "ScOperator":
        """self o inner."""
        def assemble(N):
            B = inner.matrix(N)
            return self.matrix(B.shape[0]) @ B
        return ScOperator(assemble, inner.domain, self.target, 0, f"{self.name}*{inner.name}")

    def to_dict(self) -> dict:
        return {
            "assembler": {"template": self.name, "params": dict(self.params)},
            "domain": self.domain.to_dict(),
            "target": self.target.to_dict(),
            "declared_shift": self.declared_shift,
        }


def weighted_matrix(T: ScOperator, N: int, m: int, m_target: int) -> np.ndarray:
    A = T.matrix(N)
    wd = T.domain.level_weights(A.shape[1], m)
    wt = T.target.level_weights(A.shape[0], m_target)
    return (wt[:, None] * A) / wd[None, :]


def level_operator_norm(T: ScOperator, m: int, m_target: int, N: int) -> float:
    if N not in T.ladder():
        raise LevelError(f"truncation {N} is not on the domain ladder {T.ladder()}")
    M = weighted_matrix(T, N, m, m_target)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


@dataclass
class ScCheckReport:
    accepted: bool
    shift: int
    ladder: tuple
    norms: dict          # level -> list of norms along the ladder
    ratios: dict         # level -> last / penultimate norm

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "shift": self.shift, "ladder": list(self.ladder),
                "norms": {str(k): v for k, v in self.norms.items()},
                "ratios": {str(k): v for k, v in self.ratios.items()}}


def _stabilized(values, tol) -> tuple:
    prev, last = values[-2], values[-1]
    if prev == 0.0:
        return last == 0.0, (1.0 if last == 0.0 else math.inf)
    ratio = last / prev
    return ratio <= 1.0 + tol, ratio


def check_sc(T: ScOperator, tol: float = STABILIZATION_TOL) -> ScCheckReport:
    """Accept T when every level norm m -> m + declared_shift stabilizes along the ladder."""
    ladder = T.ladder()
    if len(ladder) < 3:
        raise PreconditionError("check_sc needs a ladder of at least three truncations")
    shift = T.declared_shift
    top = min(T.domain.max_level, T.target.max_level - shift)
    norms, ratios, ok = {}, {}, True
    for m in range(top + 1):
        vals = [level_operator_norm(T, m, m + shift, N) for N in ladder]
        good, ratio = _stabilized(vals, tol)
        norms[m], ratios[m] = vals, ratio
        ok = ok and good
    return ScCheckReport(ok, shift, ladder, norms, ratios)


@dataclass
class CompactnessReport:
    singular_values: np.ndarray
    bound: np.ndarray
    plus_norm: float
    ok: bool


def check_sc_plus_compactness(S: ScOperator, m: int, N: int) -> CompactnessReport:
    """Singular values of the level-m operator of an sc+ operator.

    S_m factors as (inclusion F_{m+1} -> F_m) o (S: E_m -> F_{m+1}), so the
    k-th singular value is at most |S|_{m -> m+1} times the k-th singular
    value of the inclusion.
    """
    sv = np.linalg.svd(weighted_matrix(S, N, m, m), compute_uv=False)
    plus_norm = level_operator_norm(S, m, m + 1, N)
    rows = S.matrix(N).shape[0]
    incl = np.sort(S.target.level_weights(rows, m) / S.target.level_weights(rows, m + 1))[::-1]
    bound = plus_norm * incl[:sv.shape[0]]
    ok = bool(np.all(sv <= bound * (1 + 1e-9) + 1e-14))
    return CompactnessReport(sv, bound, plus_norm, ok)


@dataclass(frozen=True)
class ScSubspace:
    """Finite-dimensional subspace spanned by the columns of ``basis``."""

    basis: np.ndarray
    ambient: Scale

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    def basis_at(self, N: int) -> np.ndarray:
        if self.rank == 0:
            return np.zeros((N, 0))
        return np.column_stack([self.ambient.resize(b, N) for b in self.basis.T])

    def points(self) -> list:
        return [ScalePoint(b, self.ambient) for b in self.basis.T]

    def is_smooth(self) -> bool:
        return all(p.regularity() == math.inf for p in self.points())


def _check_independent(B: np.ndarray, what: str) -> None:
    if B.shape[1] == 0:
        return
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= 1e-12 * s[0]:
        raise DegenerateBasisError(f"{what}: basis is numerically rank deficient "
                                   f"(condition {s[0] / max(s[-1], 1e-300):.3g})")


def build_sc_projection(K: ScSubspace) -> ScOperator:
    """Projection onto span K along its level-0 orthogonal complement.

    P x = sum_i lambda_i(x) e_i where (lambda_i) is the dual basis of (e_i)
    for the level-0 inner product; P is the same matrix at every level.
    """
    if not K.is_smooth():
        raise PreconditionError("sc-projections onto finite-dimensional subspaces need smooth basis vectors")
    _check_independent(K.basis, "build_sc_projection")
    scale = K.ambient

    def assemble(N):
        B = K.basis_at(N)
        g = scale.level_weights(N, 0) ** 2
        dual = np.linalg.solve(B.T @ (g[:, None] * B), (B * g[:, None]).T)
        return B @ dual

    return ScOperator(assemble, scale, scale, 0, "sc_projection", {"rank": K.rank})


def complement(P: ScOperator, x) -> np.ndarray:
    """(1 - P) x."""
    x = np.asarray(x, dtype=float)
    return x - P(x)


def splitting_residual(P: ScOperator, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.linalg.norm(x - P(x) - complement(P, x)))


def idempotency_defect(P: ScOperator, N: int) -> float:
    A = P.matrix(N)
    return float(np.linalg.norm(A @ A - A, 2))


def quotient_distance(x: ScalePoint, A: ScSubspace, m: int) -> float:
    """inf over a in A of |x - a|_m, as a weighted least-squares residual."""
    x.scale.check_level(m)
    N = x.dim
    w = x.scale.level_weights(N, m)
    B = w[:, None] * A.basis_at(N)
    y = w * x.coeffs
    if A.rank == 0:
        return float(np.linalg.norm(y))
    _check_independent(B, "quotient_distance")
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    return float(np.linalg.norm(y - B @ coef))


def _orth_complement(B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the column span of B."""
    N, k = B.shape
    if k == 0:
        return np.eye(N)
    Q, _ = np.linalg.qr(B, mode="complete")
    return Q[:, k:]


def quotient_inclusion_singular_values(A: ScSubspace, m: int, N: int) -> np.ndarray:
    """Singular values of E_{m+1}/A -> E_m/A at truncation N.

    Cosets are represented by their level-orthogonal complements of A; the
    map is x -> (level-m residual of x off A) on the level-(m+1) complement.
    """
    scale = A.ambient
    if isinstance(scale, TruncatedScale) and N not in scale.ladder:
        raise LevelError(f"truncation {N} is not on the ladder {scale.ladder}")
    B = A.basis_at(N)
    if A.rank:
        _check_independent(B, "quotient_inclusion_singular_values")
    w0 = scale.level_weights(N, m)
    w1 = scale.level_weights(N, m + 1)
    C1 = _orth_complement(w1[:, None] * B)          # level-(m+1) complement, weighted coords
    raw = C1 / w1[:, None]                          # back to coefficients
    M = w0[:, None] * raw
    if A.rank:
        Q, _ = np.linalg.qr(w0[:, None] * B)
        M = M - Q @ (Q.T @ M)
    return np.linalg.svd(M, compute_uv=False)


@dataclass
class FredholmCertificate:
    kernel_dim: int
    cokernel_dim: int
    index: int
    per_level_kernel_dims: list
    per_level_cokernel_dims: list
    level_regularity_ok: bool
    svd_threshold: float
    accepted: bool
    truncation: int
    kernel_angles: list = field(default_factory=list)
    regularity_table: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kernel_dim": self.kernel_dim,
            "cokernel_dim": self.cokernel_dim,
            "index": self.index,
            "per_level_kernel_dims": list(self.per_level_kernel_dims),
            "per_level_cokernel_dims": list(self.per_level_cokernel_dims),
            "level_regularity_ok": self.level_regularity_ok,
            "svd_threshold": self.svd_threshold,
            "accepted": self.accepted,
            "truncation": self.truncation,
            "kernel_angles": [float(a) for a in self.kernel_angles],
            "regularity_table": self.regularity_table,
            "notes": list(self.notes),
        }


def numerical_rank(sv: np.ndarray, threshold: float) -> int:
    """Rank at a relative threshold; raises when a value sits within the ambiguity band.

    The band is one decade wide, centred on the threshold.
    """
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    rel = sv / sv[0]
    lo, hi = threshold / math.sqrt(10.0), threshold * math.sqrt(10.0)
    straddle = rel[(rel >= lo) & (rel <= hi)]
    if straddle.size:
        raise AmbiguousRankError(
            f"{straddle.size} singular value(s) within the ambiguity band [{lo:.1e}, {hi:.1e}]",
            gap=straddle.tolist())
    return int(np.count_nonzero(rel > threshold))


def _regularity_check(T, A, M0_svd, rank0, levels, samples, rng, margin, m0=0):
    """Solve T x = y for synthetic y of known regularity and re-estimate x.

    The minimum-norm solve reuses the SVD of the weighted level-``m0`` matrix.
    """
    target, domain = T.target, T.domain
    rows, cols = A.shape
    if not (isinstance(target, TruncatedScale) and isinstance(domain, TruncatedScale)) or min(rows, cols) < 16:
        return True, [{"status": "not applicable"}]
    U, s, Vt = M0_svd
    coker = U[:, rank0:]
    wt0 = target.level_weights(rows, m0)
    wd0 = domain.level_weights(cols, m0)
    table, ok = [], True
    for m in levels:
        if m > target.max_level:
            continue
        for _ in range(samples):
            y = random_phase_point(target, rows, m + target.offset + 0.5, rng)
            yw = wt0 * y
            yw = yw - coker @ (coker.T @ yw)
            y = yw / wt0
            z = Vt[:rank0].T @ ((U[:, :rank0].T @ yw) / s[:rank0])
            x = z / wd0
            ry = target.regularity(y)
            rx = domain.regularity(x)
            good = rx >= min(m, domain.max_level) - margin
            ok = ok and bool(good)
            table.append({"level": m, "target_regularity": ry, "solution_regularity": rx, "ok": bool(good)})
    return ok, table


def fredholm_certificate(T: ScOperator, svd_threshold: float = DEFAULT_SVD_THRESHOLD,
                         N: Optional[int] = None, levels=None, regularity_samples: int = 2,
                         seed: int = 0, angle_tol: float = KERNEL_ANGLE_TOL,
                         regularity_margin: float = REGULARITY_MARGIN) -> FredholmCertificate:
    """Kernel/cokernel dimensions per level plus a sampled level-regularity test."""
    N = N or T.ladder()[-1]
    if levels is None:
        levels = range(min(T.domain.max_level, T.target.max_level) + 1)
    levels = list(levels)
    A = T.matrix(N)
    rows, cols = A.shape

    kdims, cdims, kernels, svd0, rank0 = [], [], [], None, None
    for m in levels:
        M = weighted_matrix(T, N, m, m)
        U, s, Vt = np.linalg.svd(M)
        r = numerical_rank(s, svd_threshold)
        kdims.append(cols - r)
        cdims.append(rows - r)
        wd = T.domain.level_weights(cols, m)
        K = Vt[r:].T / wd[:, None]
        if K.shape[1]:
            K, _ = np.linalg.qr(K)
        kernels.append(K)
        if m == levels[0]:
            svd0, rank0 = (U, s, Vt), r

    angles = []
    for K in kernels[1:]:
        if K.shape[1] and kernels[0].shape[1] and K.shape[1] == kernels[0].shape[1]:
            angles.append(float(np.max(subspace_angles(kernels[0], K))))
        elif K.shape[1] == kernels[0].shape[1] == 0:
            angles.append(0.0)
        else:
            angles.append(math.inf)

    rng = np.random.default_rng(seed)
    reg_ok, table = _regularity_check(T, A, svd0, rank0, levels, regularity_samples, rng,
                                      regularity_margin, levels[0])
    dims_agree = len(set(kdims)) == 1 and len(set(cdims)) == 1
    angles_ok = all(a <= angle_tol for a in angles)
    notes = []
    if not dims_agree:
        notes.append("kernel or cokernel dimension changes across levels")
    if not angles_ok:
        notes.append("kernels differ across levels")
    return FredholmCertificate(
        kernel_dim=kdims[0], cokernel_dim=cdims[0], index=kdims[0] - cdims[0],
        per_level_kernel_dims=kdims, per_level_cokernel_dims=cdims,
        level_regularity_ok=reg_ok, svd_threshold=svd_threshold,
        accepted=dims_agree and angles_ok and reg_ok, truncation=N,
        kernel_angles=angles, regularity_table=table, notes=notes)


def random_smoothing_operator(domain: Scale, target: Scale, rank: int, rng,
                              strength: float = 0.5, decay: float = 0.25) -> ScOperator:
    """S = strength * sum_j <., u_j> v_j with exponentially decaying u_j, v_j.

    The vectors are drawn once at the top of the ladder and truncated for
    smaller N, so S is one operator seen at different truncations.
    """
    top = domain.ladder_dims()[-1]
    n = np.arange(top)
    U = rng.standard_normal((top, rank)) * np.exp(-decay * n)[:, None]
    V = rng.standard_normal((top, rank)) * np.exp(-decay * n)[:, None]
    U /= np.linalg.norm(U, axis=0)
    V /= np.linalg.norm(V, axis=0)
    c = rng.uniform(0.2, 1.0, rank) * strength

    def assemble(N):
        Vn = np.column_stack([target.resize(v, N) for v in V.T])
        Un = np.column_stack([domain.resize(u, N) for u in U.T])
        return (Vn * c) @ Un.T

    return ScOperator(assemble, domain, target, 1, "rank_smoothing",
                      {"rank": rank, "strength": strength})


def rank_one_operator(u: np.ndarray, v: np.ndarray, domain: Scale, target: Scale,
                      weight: float = 1.0) -> ScOperator:
    """x -> weight * <x, u> v, with u and v truncated or zero-padded to N."""
    def assemble(N):
        return weight * np.outer(target.resize(v, N), domain.resize(u, N))
    return ScOperator(assemble, domain, target, 1, "rank_one", {"weight": weight})


@dataclass
class StabilityReport:
    base: FredholmCertificate
    trials: list
    ok: bool

    def to_dict(self) -> dict:
        return {"base": self.base.to_dict(), "trials": self.trials, "ok": self.ok}


def perturbation_stability(T: ScOperator, S: Optional[ScOperator] = None, trials: int = 20,
                           seed: int = 0, rank: int = 3, strength: float = 0.5,
                           N: Optional[int] = None, levels=None,
                           svd_threshold: float = DEFAULT_SVD_THRESHOLD) -> StabilityReport:
    """Recompute the Fredholm certificate of T + S over seeded sc+ perturbations.

    With ``S`` given every trial uses it; otherwise each trial draws a fresh
    rank-<=``rank`` smoothing operator.  Failing trials are listed, not raised.
    """
    base = fredholm_certificate(T, svd_threshold, N=N, levels=levels, seed=seed)
    rng = np.random.default_rng(seed)
    rows, ok = [], base.accepted
    for i in range(trials):
        Si = S if S is not None else random_smoothing_operator(
            T.domain, T.target, int(rng.integers(1, rank + 1)), rng, strength)
        entry = {"trial": i, "perturbation": Si.name}
        try:
            cert = fredholm_certificate(T + Si, svd_threshold, N=N, levels=levels, seed=seed + i + 1)
        except AmbiguousRankError as exc:
            entry.update(accepted=False, error=str(exc))
            rows.append(entry)
            ok = False
            continue
        good = cert.accepted and cert.index == base.index and len(set(cert.per_level_kernel_dims)) == 1
        entry.update(accepted=cert.accepted, index=cert.index, kernel_dims=cert.per_level_kernel_dims,
                     cokernel_dim=cert.cokernel_dim, same_index=cert.index == base.index, ok=good)
        rows.append(entry)
        ok = ok and good
    return StabilityReport(base, rows, ok)
