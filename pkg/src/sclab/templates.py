"""Named operator and map templates, so configurations can refer to them by name."""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import fourier
from .diff import ScMap, identity_map, pointwise_polynomial, shift_by, shift_map
from .errors import ConfigurationError
from .linear import ScOperator, random_smoothing_operator
from .scales import Scale, TruncatedScale


def _identity(E: TruncatedScale, p: dict) -> ScOperator:
    return ScOperator(lambda N: np.eye(N), E, E, 0, "identity", p)


def _inclusion(E: TruncatedScale, p: dict) -> ScOperator:
    return ScOperator(lambda N: np.eye(N), E.shifted(1), E, 0, "inclusion", p)


def _diag_weight_power(E: TruncatedScale, p: dict) -> ScOperator:
    """x -> w^{-k} x on E; k = 1 maps E_m into E_{m+1}, an sc+ operator."""
    k = int(p.get("power", 1))
    if k not in (0, 1):
        raise ConfigurationError("diag_weight_power supports power 0 or 1")
    return ScOperator(lambda N: np.diag(E.weight_vector(N) ** (-k)), E, E, k,
                      "diag_weight_power", p)


def _shift_multiplier(E: TruncatedScale, p: dict) -> ScOperator:
    tau = float(p.get("tau", 0.25))
    return ScOperator(lambda N: fourier.rotation_blocks_matrix(N, lambda k: 2 * np.pi * k * tau),
                      E, E, 0, "shift_multiplier", p)


def _ddt(E: TruncatedScale, p: dict) -> ScOperator:
    return ScOperator(lambda N: fourier.derivative_matrix(N, 0.0), E.shifted(1), E, 0, "ddt", p)


def _ddt_plus_one(E: TruncatedScale, p: dict) -> ScOperator:
    mass = float(p.get("mass", 1.0))
    return ScOperator(lambda N: fourier.derivative_matrix(N, mass, top="modulus"),
                      E.shifted(1), E, 0, "ddt_plus_one", p)


def _rank_smoothing(E: TruncatedScale, p: dict) -> ScOperator:
    if "seed" not in p:
        raise ConfigurationError("rank_smoothing is randomized and needs a seed")
    rng = np.random.default_rng(int(p["seed"]))
    return random_smoothing_operator(E, E, int(p.get("rank", 1)), rng,
                                     float(p.get("strength", 0.5)))


OPERATOR_TEMPLATES: dict = {
    "identity": (_identity, "identity on E"),
    "inclusion": (_inclusion, "inclusion E^1 -> E"),
    "diag_weight_power": (_diag_weight_power, "diagonal w^{-power} on E (sc+ for power 1); params: power"),
    "shift_multiplier": (_shift_multiplier, "translation by tau on the circle (odd N); params: tau"),
    "ddt": (_ddt, "d/dt: E^1 -> E on the circle (odd N)"),
    "ddt_plus_one": (_ddt_plus_one, "d/dt + mass: E^1 -> E; params: mass"),
    "rank_smoothing": (_rank_smoothing, "random rank-r smoothing on E, sc+; params: rank, strength, seed"),
}


MAP_TEMPLATES: dict = {
    "identity": (lambda E, p: identity_map(E), "identity map"),
    "polynomial": (lambda E, p: pointwise_polynomial(E, p.get("coeffs", [0.0, 1.0, 1.0])),
                   "v -> sum c_j v^j pointwise; params: coeffs"),
    "shift_by": (lambda E, p: shift_by(E, float(p.get("tau", 0.25))), "v -> v(. + tau); params: tau"),
    "shift_map": (lambda E, p: shift_map(E), "(tau, v) -> v(. + tau) on R + E"),
}


def _lookup(table: dict, kind: str, name: str) -> Callable:
    if name not in table:
        raise ConfigurationError(f"unknown {kind} template {name!r}; known: {sorted(table)}")
    return table[name][0]


def build_operator(name: str, scale: Scale, params: dict | None = None) -> ScOperator:
    return _lookup(OPERATOR_TEMPLATES, "operator", name)(scale, dict(params or {}))


def build_map(name: str, scale: Scale, params: dict | None = None) -> ScMap:
    return _lookup(MAP_TEMPLATES, "map", name)(scale, dict(params or {}))


def list_templates() -> dict:
    return {"operators": {k: v[1] for k, v in OPERATOR_TEMPLATES.items()},
            "maps": {k: v[1] for k, v in MAP_TEMPLATES.items()},
            "retractions": {k: v[1] for k, v in RETRACTION_TEMPLATES.items()}}


def _graph_square(p: dict) -> ScMap:
    """r(x, y) = (x, x^2): a retraction of R^2 onto the parabola."""
    from .scales import ConstantScale

    C = ConstantScale(2)
    return ScMap(lambda z: np.array([z[0], z[0] ** 2]), C, C,
                 lambda z, d: np.array([d[0], 2.0 * z[0] * d[0]]), "graph_square")


def _r_a(p: dict) -> ScMap:
    from .polyfold import projection_retraction_a

    return projection_retraction_a(float(p.get("a", 1.0)))


def _coordinate_projector(p: dict) -> ScMap:
    from .diff import linear_map
    from .scales import ConstantScale

    mask = np.asarray(p.get("keep", [1, 0]), dtype=float)
    return linear_map(np.diag(mask), ConstantScale(mask.shape[0]), name="coordinate_projector")


def _identity_retraction(p: dict) -> ScMap:
    from .scales import ConstantScale

    return identity_map(ConstantScale(int(p.get("dim", 2))))


RETRACTION_TEMPLATES: dict = {
    "identity": (_identity_retraction, "identity on R^dim; params: dim"),
    "graph_square": (_graph_square, "(x, y) -> (x, x^2) on R^2"),
    "r_a": (_r_a, "orthogonal projection of R^2 onto L_a = R(1, a); params: a"),
    "coordinate_projector": (_coordinate_projector, "diagonal 0/1 projector; params: keep"),
}


def build_retraction(name: str, params: dict | None = None) -> ScMap:
    return _lookup(RETRACTION_TEMPLATES, "retraction", name)(dict(params or {}))
