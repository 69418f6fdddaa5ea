"""Closed-form reference solutions used as oracles and convergence targets.

Each bundle evaluates the graph height and enough derivatives to check the
discrete geometry against exact values. The translating solution
u = log cosh x + t, perpendicular to the trumpet y = log sinh |x|, is the
singular benchmark: its boundary position is x_b(t) = artanh(e^t) and the
maximum boost factor on the surface is cosh x_b = 1/sqrt(1 - e^{2t}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class AnalyticSolution:
    name: str
    u: Callable            # u(x, t)
    du: Callable           # spatial derivative u_x(x, t)
    d2u: Callable          # u_xx(x, t)
    ut: Callable           # time derivative
    static: bool = False


def grim_reaper() -> AnalyticSolution:
    return AnalyticSolution(
        name="grim_reaper",
        u=lambda x, t: np.log(np.cosh(x)) + t,
        du=lambda x, t: np.tanh(x),
        d2u=lambda x, t: 1.0 / np.cosh(x) ** 2,
        ut=lambda x, t: np.ones_like(np.asarray(x, dtype=float)),
    )


def grim_reaper_boundary(t: float) -> float:
    """Exact half-width x_b(t) = artanh(e^t) of the translating solution, t < 0."""
    if t >= 0:
        raise ValueError("the translating solution has a boundary only for t < 0")
    return math.atanh(math.exp(t))


def grim_reaper_sup_vhat(t: float) -> float:
    """sup v_hat = cosh x_b(t) = 1/sqrt(1 - e^{2t})."""
    return 1.0 / math.sqrt(1.0 - math.exp(2.0 * t))


def plane(z0: float) -> AnalyticSolution:
    z0 = float(z0)
    return AnalyticSolution(
        name="plane",
        u=lambda x, t: np.full_like(np.asarray(x, dtype=float), z0),
        du=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        d2u=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        ut=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        static=True,
    )


def hyperbolic_plane(R: float, J: float = 0.0, sign: int = 1) -> AnalyticSolution:
    """Static hyperboloid t = J + sign*sqrt(R^2 + rho^2); |H| = 2/R (n = 2)."""
    R, J, sign = float(R), float(J), int(sign)

    def u(rho, t):
        return J + sign * np.sqrt(R * R + np.asarray(rho, dtype=float) ** 2)

    def du(rho, t):
        rho = np.asarray(rho, dtype=float)
        return sign * rho / np.sqrt(R * R + rho**2)

    def d2u(rho, t):
        rho = np.asarray(rho, dtype=float)
        return sign * R * R / (R * R + rho**2) ** 1.5

    return AnalyticSolution(
        name="hyperbolic_plane",
        u=u,
        du=du,
        d2u=d2u,
        ut=lambda rho, t: np.zeros_like(np.asarray(rho, dtype=float)),
        static=True,
    )


def hyperbolic_plane_mean_curvature(R: float, rho) -> np.ndarray:
    """Exact |H| = 2/R of the hyperboloid, via the graph formulas (n = 2).

    Assembled from u_rho = rho/sqrt(R^2+rho^2) and u_rhorho through the
    same two-term expression the discrete geometry uses, so a symbolic
    cancellation check rather than the constant 2/R directly.
    """
    rho = np.asarray(rho, dtype=float)
    R = float(R)
    s = np.sqrt(R * R + rho**2)
    ur = rho / s
    urr = R * R / s**3
    m = 1.0 - ur**2
    # axis limit of u_rho/rho is u_rhorho
    angular = np.where(rho > 0, ur / np.maximum(rho, 1e-300), urr) / np.sqrt(m)
    return urr / m**1.5 + angular


def cylinder_disk_constant(c: float) -> AnalyticSolution:
    return AnalyticSolution(
        name="cylinder_disk_constant",
        u=lambda x, t: np.full_like(np.asarray(x, dtype=float), float(c)),
        du=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        d2u=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        ut=lambda x, t: np.zeros_like(np.asarray(x, dtype=float)),
        static=True,
    )


def pseudosphere_profile(A: float = 1.0, B: float = 0.0):
    """Exact radius data of the pseudo-sphere: f, f' = (z+B)/f, f'' = A^2/f^3."""
    from .profiles import pseudosphere

    return pseudosphere(A, B)


REGISTRY = {
    "grim_reaper": grim_reaper,
    "plane": plane,
    "hyperbolic_plane": hyperbolic_plane,
    "cylinder_disk_constant": cylinder_disk_constant,
    "pseudosphere_profile": pseudosphere_profile,
}
