"""Experiment runners behind the command line driver.

Each runner takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding a JSON-ready report, CSV tables and an
overall pass flag.  Runners are deterministic given the config and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bundles, polyfold, retracts
from .diff import verify_chain_rule, shift_map_dichotomy
from .errors import ConfigurationError
from .linear import check_sc, fredholm_certificate, perturbation_stability
from .scales import (ConstantScale, GridLineScale, ScalePoint, TruncatedScale, circle_scale,
                     estimate_regularity, inclusion_singular_values, random_phase_point,
                     scale_from_dict)
from .templates import (MAP_TEMPLATES, OPERATOR_TEMPLATES, RETRACTION_TEMPLATES, build_map,
                        build_operator, build_retraction)


@dataclass
class ExperimentConfig:
    experiment: str
    scale: Optional[dict] = None
    templates: dict = field(default_factory=dict)
    ladder: Optional[list] = None
    tolerances: dict = field(default_factory=dict)
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("configuration must be a JSON object")
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known - {"schema"}
        if extra:
            raise ConfigurationError(f"unknown configuration fields: {sorted(extra)}")
        if "experiment" not in d:
            raise ConfigurationError("configuration needs an 'experiment' field")
        cfg = cls(**{k: v for k, v in d.items() if k in known})
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}; known: {sorted(EXPERIMENTS)}")
        if self.ladder is not None:
            lad = list(self.ladder)
            if not lad or any(int(b) <= int(a) for a, b in zip(lad, lad[1:])) or int(lad[0]) <= 0:
                raise ConfigurationError(f"ladder must be strictly increasing positive integers, got {lad}")
        tables = {"operator": OPERATOR_TEMPLATES, "map": MAP_TEMPLATES, "f": MAP_TEMPLATES,
                  "g": MAP_TEMPLATES, "retraction": RETRACTION_TEMPLATES}
        for slot, entry in self.templates.items():
            if slot not in tables:
                raise ConfigurationError(f"unknown template slot {slot!r}")
            name = entry.get("name") if isinstance(entry, dict) else None
            if name not in tables[slot]:
                raise ConfigurationError(f"unknown {slot} template {name!r}")
        if EXPERIMENTS[self.experiment].randomized and self.seed is None:
            raise ConfigurationError(f"experiment {self.experiment!r} is randomized and needs a seed")
        if self.scale is not None:
            try:
                self.truncated_scale()
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigurationError(f"bad scale specification: {exc}") from exc

    def truncated_scale(self, default: Optional[TruncatedScale] = None) -> TruncatedScale:
        if self.scale is None:
            if default is None:
                raise ConfigurationError(f"experiment {self.experiment!r} needs a scale")
            sc = default
        else:
            d = dict(self.scale)
            if self.ladder is not None:
                d["ladder"] = list(self.ladder)
            sc = scale_from_dict(d)
        if not isinstance(sc, TruncatedScale):
            raise ConfigurationError("this experiment needs a weighted coefficient scale")
        return sc

    def template(self, slot: str, default: str) -> tuple:
        entry = self.templates.get(slot, {"name": default})
        return entry["name"], dict(entry.get("params", {}))

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "scale": self.scale, "templates": self.templates,
                "ladder": self.ladder, "tolerances": self.tolerances, "seed": self.seed,
                "params": self.params}


@dataclass
class ExperimentResult:
    ok: bool
    report: dict
    tables: dict = field(default_factory=dict)     # name -> (columns, rows)


@dataclass(frozen=True)
class Experiment:
    run: Callable
    randomized: bool
    tables: dict
    description: str


def _verify_scale(cfg: ExperimentConfig) -> ExperimentResult:
    E = cfg.truncated_scale(circle_scale((128, 256, 512)))
    tol = cfg.tol("estimator", 0.1)
    N = E.ladder[-1]
    p = E.weights.growth_order
    rows, ok = [], True
    for s in cfg.params.get("decays", [1, 2, 3]):
        x = E.weight_vector(N) ** (-float(s))
        est = estimate_regularity(ScalePoint(x, E)).value
        expected = float(s) - (0.0 if math.isinf(p) else 1.0 / (2.0 * p))
        good = abs(est - expected) <= tol
        ok = ok and good
        rows.append({"input": f"w^-{s}", "estimate": est, "expected": expected, "ok": good})
    est = estimate_regularity(ScalePoint(np.exp(-np.arange(N, dtype=float)), E)).value
    rows.append({"input": "exp(-n)", "estimate": est, "expected": math.inf, "ok": math.isinf(est)})
    ok = ok and math.isinf(est)
    sv_rows = []
    for m in range(E.max_level):
        sv = inclusion_singular_values(E, m, N)
        ref = np.sort(1.0 / E.weight_vector(N))[::-1]
        err = float(np.max(np.abs(sv - ref)))
        ok = ok and err <= 1e-12
        sv_rows.append({"level": m, "max_error": err, "largest": float(sv[0]), "smallest": float(sv[-1])})
    return ExperimentResult(ok, {"scale": E.to_dict(), "estimator": rows, "inclusions": sv_rows},
                            {"regularity": (["input", "estimate", "expected", "ok"], rows)})


def _shift_map(cfg: ExperimentConfig) -> ExperimentResult:
    P = cfg.params
    m = int(P.get("level", 1))
    nu = int(P.get("max_power", 10))
    N = int(P.get("N", 129))
    if N % 2 == 0:
        raise ConfigurationError("the shift map needs an odd number of coefficients")
    v = np.exp(-0.5 * np.arange(N))
    taus = [2.0 ** -k for k in range(1, nu + 1)]
    rep = shift_map_dichotomy(v, m, taus, T=float(P.get("T", 1.0)),
                              diagonal_truncation=int(P.get("diagonal_truncation", 4096)),
                              gap_floor=cfg.tol("gap_floor", 1.9), bound_slack=cfg.tol("bound_slack", 1.01))
    cols = ["tau", "truncation", "residual", "envelope", "horizontal_gap", "diagonal_gap", "bound"]
    rows = [dict(zip(cols, r)) for r in zip(rep.taus, rep.truncations, rep.pointwise_residuals,
                                             rep.envelope, rep.horizontal_gaps, rep.diagonal_gaps,
                                             rep.diagonal_bounds)]
    return ExperimentResult(rep.ok, rep.to_dict(), {"dichotomy": (cols, rows)})


def _fredholm(cfg: ExperimentConfig) -> ExperimentResult:
    E = cfg.truncated_scale(circle_scale((128, 256, 512)))
    name, params = cfg.template("operator", "ddt_plus_one")
    T = build_operator(name, E, params)
    P = cfg.params
    levels = list(range(int(P.get("levels", 4))))
    svd_thr = cfg.tol("svd_threshold", 1e-8)
    sc = check_sc(T)
    cert = fredholm_certificate(T, svd_thr, levels=levels, seed=cfg.seed)
    trials = int(P.get("trials", 20))
    stab = perturbation_stability(T, trials=trials, seed=cfg.seed, rank=int(P.get("rank", 3)),
                                  strength=float(P.get("strength", 0.5)), levels=levels,
                                  svd_threshold=svd_thr) if trials else None
    ok = sc.accepted and cert.accepted and (stab is None or stab.ok)
    rows = [{"trial": "base", "index": cert.index, "kernel_dims": " ".join(map(str, cert.per_level_kernel_dims)),
             "ok": cert.accepted}]
    if stab is not None:
        rows += [{"trial": t["trial"], "index": t.get("index"),
                  "kernel_dims": " ".join(map(str, t.get("kernel_dims", []))), "ok": t.get("ok", False)}
                 for t in stab.trials]
    report = {"operator": T.to_dict(), "sc_check": sc.to_dict(), "certificate": cert.to_dict(),
              "stability": stab.to_dict() if stab is not None else None}
    return ExperimentResult(ok, report, {"fredholm": (["trial", "index", "kernel_dims", "ok"], rows)})


def _chain_rule(cfg: ExperimentConfig) -> ExperimentResult:
    E = cfg.truncated_scale(circle_scale((256,), max_level=3))
    fname, fp = cfg.template("f", "polynomial")
    gname, gp = cfg.template("g", "polynomial")
    fp.setdefault("coeffs", [0.0, 1.0, 1.0])
    gp.setdefault("coeffs", [0.0, 1.0, 0.0, 1.0])
    f, g = build_map(fname, E, fp), build_map(gname, E, gp)
    rng = np.random.default_rng(cfg.seed)
    N = E.ladder[-1]
    n = int(cfg.params.get("samples", 20))
    xs = [0.3 * random_phase_point(E, N, 4.0, rng) for _ in range(n)]
    rep = verify_chain_rule(f, g, xs, m_max=int(cfg.params.get("max_level", 1)), seed=cfg.seed,
                            tol=cfg.tol("relative", 1e-6))
    return ExperimentResult(rep.ok, rep.to_dict(), {"chain_rule": (["sample", "level", "residual"], rep.residuals)})


def _splicing(cfg: ExperimentConfig) -> ExperimentResult:
    P = cfg.params
    G = GridLineScale(float(P.get("half_width", 64.0)), int(P.get("grid_size", 8192)))
    fam = retracts.translated_bump_family(G)
    grid = P.get("t_grid", [-1.0, -0.5, -0.1, 0.0, 0.25, 0.5, 1.0, 2.0])
    tol = cfg.tol("idempotency", 1e-10)
    rows = retracts.splicing_core_scan(fam, grid)
    rng = np.random.default_rng(cfg.seed)
    r = retracts.splicing_retraction(fam, G)
    t_min = retracts.admissible_t_min(G)
    res = []
    for _ in range(int(P.get("samples", 50))):
        t = rng.uniform(-1.0, 0.0) if rng.uniform() < 0.5 else rng.uniform(t_min, 3.0)
        z = np.concatenate([[t], rng.standard_normal(G.grid_size)])
        res.append(retracts.idempotency_residual(r, z))
    ok = all(row["residual"] <= tol for row in rows) and max(res) <= tol
    ok = ok and all(row["rank"] == (1 if row["v"][0] > 0 else 0) for row in rows)
    table = [{"t": row["v"][0], "rank": row["rank"], "residual": row["residual"],
              "retract_dimension": row["retract_dimension"]} for row in rows]
    report = {"grid": G.to_dict(), "t_min": t_min, "scan": rows,
              "retraction_idempotency_max": max(res), "samples": len(res)}
    return ExperimentResult(ok, report, {"splicing": (["t", "rank", "residual", "retract_dimension"], table)})


def _degeneracy(cfg: ExperimentConfig) -> ExperimentResult:
    P = cfg.params
    Q = polyfold.PartialQuadrant(2, eps=cfg.tol("zero", polyfold.ZERO_TOL))
    pts = P.get("points", [[0.0, 0.0], [0.0, 3.7], [1.2, 3.7]])
    expected = P.get("expected", [2, 1, 0])
    rows = [{"x": p[0], "y": p[1], "index": polyfold.degeneracy_index(p, Q)} for p in pts]
    ok = [r["index"] for r in rows] == list(expected)
    chart_rows = []
    for a in P.get("a_values", [0.0, 1.0]):
        phi, ident = polyfold.line_chart_pair(float(a))
        for x in P.get("line_points", [0.0, 0.5, 2.0]):
            chart_rows.append({"x": x, "a": a, "phi_a": polyfold.chart_degeneracy(x, phi),
                               "identity": polyfold.chart_degeneracy(x, ident),
                               "min": polyfold.min_degeneracy(x, [phi, ident])})
    for r in chart_rows:
        want_phi = 2 if r["x"] == 0 else (1 if r["a"] == 0 else 0)
        want_id = 1 if r["x"] == 0 else 0
        ok = ok and r["phi_a"] == want_phi and r["identity"] == want_id and r["min"] == want_id
    return ExperimentResult(ok, {"quadrant": rows, "charts": chart_rows},
                            {"degeneracy": (["x", "y", "index"], rows),
                             "charts": (["x", "a", "phi_a", "identity", "min"], chart_rows)})


def _cartan(cfg: ExperimentConfig) -> ExperimentResult:
    name, params = cfg.template("retraction", "graph_square")
    r = build_retraction(name, params)
    P = cfg.params
    x = np.asarray(P.get("base_point", [0.0] * r.domain.dim), dtype=float)
    ch = retracts.cartan_chart(r, x, radius=float(P.get("radius", 0.1)), tol=cfg.tol("conjugation", 1e-8),
                               n_samples=int(P.get("samples", 200)), seed=cfg.seed)
    ok = (ch.conjugation_residual <= cfg.tol("conjugation", 1e-8)
          and ch.dalpha_residual <= cfg.tol("dalpha", 1e-6)
          and ch.chart_residual <= cfg.tol("conjugation", 1e-8))
    if "expected_dimension" in P:
        ok = ok and ch.local_dimension == int(P["expected_dimension"])
    return ExperimentResult(ok, {"retraction": name, "chart": ch.to_dict()})


def _tame(cfg: ExperimentConfig) -> ExperimentResult:
    P = cfg.params
    rng = np.random.default_rng(cfg.seed)
    Q = polyfold.PartialQuadrant(2)
    samples = [np.array(p, dtype=float) for p in P.get("points", [[1.0, 0.0], [0.0, 0.0], [0.5, 0.5]])]
    samples += [rng.uniform(0.0, 2.0, 2) for _ in range(int(P.get("random_samples", 20)))]
    cases = P.get("retractions", [{"name": "r_a", "params": {"a": 1.0}, "expect_tame": False},
                                  {"name": "identity", "params": {"dim": 2}, "expect_tame": True}])
    rows, reports, ok = [], {}, True
    for case in cases:
        r = build_retraction(case["name"], case.get("params", {}))
        model = retracts.check_retraction(r, samples)
        pts = [model.r(s) for s in samples] + samples
        rep = polyfold.check_tame(model, Q, pts)
        label = case["name"] + "".join(f"_{k}={v}" for k, v in sorted(case.get("params", {}).items()))
        reports[label] = rep.to_dict()
        first = rep.stratum_violations[0]["point"] if rep.stratum_violations else None
        rows.append({"retraction": label, "tame": rep.tame,
                     "stratum_violations": len(rep.stratum_violations),
                     "transversality_violations": len(rep.transversality_violations),
                     "first_counterexample": " ".join(f"{v:g}" for v in first) if first else ""})
        if "expect_tame" in case:
            ok = ok and rep.tame == bool(case["expect_tame"])
    cols = ["retraction", "tame", "stratum_violations", "transversality_violations", "first_counterexample"]
    return ExperimentResult(ok, {"reports": reports}, {"tame": (cols, rows)})


def _strong_bundle(cfg: ExperimentConfig) -> ExperimentResult:
    P = cfg.params
    top = int(P.get("max_level", 10))
    grid_ok = all(bundles.validate_double_index(bundles.DoubleScaleIndex(m, k)) == (k <= m + 1)
                  for m in range(top + 1) for k in range(top + 3))
    G = GridLineScale(float(P.get("half_width", 64.0)), int(P.get("grid_size", 8192)))
    fam = retracts.translated_bump_family(G)
    r = retracts.splicing_retraction(fam, G)
    rng = np.random.default_rng(cfg.seed)
    ts = P.get("t_grid", [-1.0, -0.5, 0.0, 0.25, 0.5, 1.0, 2.0])
    base = [np.concatenate([[t], rng.standard_normal(G.grid_size)]) for t in ts]
    model = retracts.check_retraction(r, base)
    R = bundles.StrongBundleRetraction(model, lambda u: retracts.build_pi_t(float(u[0]), G), G)
    samples = [np.concatenate([b, rng.standard_normal(G.grid_size)]) for b in base]
    rep = bundles.check_strong_retraction(R, samples)
    rows = [{"t": t, "fiber_dimension": d["fiber_dimension"]} for t, d in zip(ts, rep.fiber_dimensions)]
    jump = all(row["fiber_dimension"] == (1 if row["t"] > 0 else 0) for row in rows)
    ok = grid_ok and rep.accepted and jump
    return ExperimentResult(ok, {"double_index_grid_ok": grid_ok, "strong_retraction": rep.to_dict()},
                            {"fiber_dimension": (["t", "fiber_dimension"], rows)})


EXPERIMENTS: dict = {
    "verify-scale": Experiment(_verify_scale, False, {"regularity": ["input", "estimate", "expected", "ok"]},
                               "estimator calibration and inclusion singular values"),
    "shift-map": Experiment(_shift_map, False,
                            {"dichotomy": ["tau", "truncation", "residual", "envelope", "horizontal_gap",
                                           "diagonal_gap", "bound"]},
                            "compact-open convergence versus operator-norm failure of the shift map"),
    "fredholm": Experiment(_fredholm, True, {"fredholm": ["trial", "index", "kernel_dims", "ok"]},
                           "Fredholm certificate and stability under sc+ perturbations"),
    "chain-rule": Experiment(_chain_rule, True, {"chain_rule": ["sample", "level", "residual"]},
                             "D(g o f) against Dg Df on random points"),
    "splicing": Experiment(_splicing, True, {"splicing": ["t", "rank", "residual", "retract_dimension"]},
                           "translated-bump splicing core and its jumping dimension"),
    "degeneracy": Experiment(_degeneracy, False, {"degeneracy": ["x", "y", "index"],
                                                  "charts": ["x", "a", "phi_a", "identity", "min"]},
                             "degeneracy indices on the quadrant and along the L_a charts"),
    "cartan": Experiment(_cartan, True, {}, "local linearization of a retraction"),
    "tame": Experiment(_tame, True, {"tame": ["retraction", "tame", "stratum_violations",
                                              "transversality_violations", "first_counterexample"]},
                       "tameness diagnosis for retractions of the quadrant"),
    "strong-bundle": Experiment(_strong_bundle, True, {"fiber_dimension": ["t", "fiber_dimension"]},
                                "double-index lattice and the splicing strong bundle retraction"),
}
