"""Closed-form evasion-space primitives.

A pursuer at ``x_P`` with speed ``v_P`` and capture radius ``r`` races an
evader at ``x_E`` with speed ``v_E`` toward points of 3D space.  With the
speed ratio ``alpha = v_P / v_E`` the potential

    f(x) = ||x - x_P|| - alpha * ||x - x_E|| - r

is positive exactly on the points the evader reaches strictly before the
pursuer can place it inside the capture sphere.  For ``alpha > 1`` the
closure ``{f >= 0}`` is a compact, strictly convex body around the evader;
its boundary has an explicit radial description in polar coordinates
centred on the evader, which this module exposes together with curvature
checks of planar cross-sections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from ._linalg import Vec

# Membership in the closed evasion space tolerates this much rounding below
# zero so that exact boundary points classify as inside.
CLOSURE_TOLERANCE = 1e-12


class AssumptionViolation(ValueError):
    """A game-setup assumption (speed ratio, initial deployment) fails."""


class CapturedConfigurationError(ValueError):
    """The evader already lies inside a pursuer's capture sphere."""


class SingularPointError(ValueError):
    """Evaluation requested at a point where the formula is singular."""


@dataclass(frozen=True)
class PursuerSpec:
    """A pursuer: position, speed (length/time) and capture radius (length)."""

    position: Vec
    speed: float
    capture_radius: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", la.as_vec(self.position))
        object.__setattr__(self, "speed", float(self.speed))
        object.__setattr__(self, "capture_radius", float(self.capture_radius))
        if not self.speed > 0.0:
            raise ValueError(f"pursuer speed must be > 0, got {self.speed}")
        if self.capture_radius < 0.0:
            raise ValueError(f"capture radius must be >= 0, got {self.capture_radius}")


@dataclass(frozen=True)
class EvaderSpec:
    """An evader: position and speed (length/time)."""

    position: Vec
    speed: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", la.as_vec(self.position))
        object.__setattr__(self, "speed", float(self.speed))
        if not self.speed > 0.0:
            raise ValueError(f"evader speed must be > 0, got {self.speed}")


@dataclass(frozen=True)
class PolarFrame:
    """Polar coordinates centred on the evader with initial rotations.

    ``theta`` rotates about the positive x-axis direction in the x-y plane,
    ``psi`` lifts out of the x-y plane; ``theta0``/``psi0`` are fixed offsets.
    """

    origin: Vec
    theta0: float = 0.0
    psi0: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", la.as_vec(self.origin))
        object.__setattr__(self, "theta0", float(self.theta0))
        object.__setattr__(self, "psi0", float(self.psi0))
        if not 0.0 <= self.theta0 <= math.pi:
            raise ValueError(f"theta0 must lie in [0, pi], got {self.theta0}")
        if not 0.0 <= self.psi0 <= 2.0 * math.pi:
            raise ValueError(f"psi0 must lie in [0, 2*pi], got {self.psi0}")


def speed_ratio(pursuer: PursuerSpec, evader: EvaderSpec) -> float:
    """Pursuer-to-evader speed ratio ``alpha``."""
    return pursuer.speed / evader.speed


def _check_not_captured(pursuer: PursuerSpec, evader: EvaderSpec) -> float:
    separation = la.dist(evader.position, pursuer.position)
    if separation <= pursuer.capture_radius:
        raise CapturedConfigurationError(
            f"evader at distance {separation} from pursuer is within capture "
            f"radius {pursuer.capture_radius}"
        )
    return separation


def potential(pursuer: PursuerSpec, evader: EvaderSpec, x) -> float:
    """Race potential ``||x - x_P|| - alpha*||x - x_E|| - r`` at point ``x``.

    Positive where the evader wins the race, zero on the boundary of its
    evasion space, negative where the pursuer wins.  Rejects configurations
    in which the evader is already captured.
    """
    _check_not_captured(pursuer, evader)
    point = la.as_vec(x)
    alpha = speed_ratio(pursuer, evader)
    return (
        la.dist(point, pursuer.position)
        - alpha * la.dist(point, evader.position)
        - pursuer.capture_radius
    )


def potential_gradient(pursuer: PursuerSpec, evader: EvaderSpec, x) -> np.ndarray:
    """Gradient of :func:`potential` with respect to the evaluation point.

    Singular at the player positions themselves.
    """
    point = la.as_vec(x)
    d_p = la.dist(point, pursuer.position)
    d_e = la.dist(point, evader.position)
    if d_p == 0.0 or d_e == 0.0:
        raise SingularPointError("gradient is undefined at a player position")
    alpha = speed_ratio(pursuer, evader)
    g = la.sub(
        la.scale(la.sub(point, pursuer.position), 1.0 / d_p),
        la.scale(la.sub(point, evader.position), alpha / d_e),
    )
    return np.array(g)


def _radial_h1_h2(pursuer: PursuerSpec, evader: EvaderSpec,
                  direction: Vec) -> tuple[float, float, float]:
    """Shared pieces of the radial boundary description along ``direction``."""
    separation = _check_not_captured(pursuer, evader)
    alpha = speed_ratio(pursuer, evader)
    if alpha <= 1.0:
        raise AssumptionViolation(
            f"boundary radius requires speed ratio > 1, got alpha={alpha}"
        )
    r = pursuer.capture_radius
    h1 = la.dot(la.sub(evader.position, pursuer.position), direction) - alpha * r
    h2 = math.sqrt(h1 * h1 + (alpha * alpha - 1.0) * (separation * separation - r * r))
    return h1, h2, alpha


def boundary_radius(pursuer: PursuerSpec, evader: EvaderSpec, direction) -> float:
    """Distance from the evader to its evasion-space boundary along ``direction``.

    ``direction`` must be a unit vector.  The returned radius is finite and
    strictly positive, and the boundary point ``x_E + rho * direction`` has
    zero potential.
    """
    e = la.as_vec(direction)
    if abs(la.norm(e) - 1.0) > 1e-12:
        raise ValueError(f"direction must be a unit vector, got norm {la.norm(e)}")
    h1, h2, alpha = _radial_h1_h2(pursuer, evader, e)
    return (h1 + h2) / (alpha * alpha - 1.0)


def boundary_point(pursuer: PursuerSpec, evader: EvaderSpec, direction) -> np.ndarray:
    """Boundary point of the evasion space along a unit ``direction``."""
    e = la.as_vec(direction)
    rho = boundary_radius(pursuer, evader, e)
    return np.array(la.add(evader.position, la.scale(e, rho)))


def in_closure(coalition, evader: EvaderSpec, pursuers, x) -> bool:
    """Whether ``x`` lies in the closed evasion space against a coalition.

    The coalition is a collection of indices into ``pursuers``; the closed
    space is the intersection of the per-pursuer closures, so membership
    requires every potential to be >= -CLOSURE_TOLERANCE.
    """
    members = tuple(coalition)
    if not members:
        raise ValueError("coalition must contain at least one pursuer index")
    point = la.as_vec(x)
    return all(
        potential(pursuers[i], evader, point) >= -CLOSURE_TOLERANCE for i in members
    )


def polar_direction(frame: PolarFrame, theta: float, psi: float) -> np.ndarray:
    """Unit direction for angles ``(theta, psi)`` in the frame's rotated polar
    coordinates."""
    t = theta + frame.theta0
    p = psi + frame.psi0
    return np.array((
        math.cos(p) * math.cos(t),
        math.cos(p) * math.sin(t),
        math.sin(p),
    ))


def _rho_of_psi(pursuer: PursuerSpec, evader: EvaderSpec, frame: PolarFrame,
                theta: float, psi: float) -> float:
    e = la.as_vec(polar_direction(frame, theta, psi))
    h1, h2, alpha = _radial_h1_h2(pursuer, evader, e)
    return (h1 + h2) / (alpha * alpha - 1.0)


def _rho_derivatives(pursuer: PursuerSpec, evader: EvaderSpec, frame: PolarFrame,
                     theta: float, psi: float) -> tuple[float, float, float]:
    """Radial boundary function and its first two psi-derivatives at fixed theta."""
    t = theta + frame.theta0
    p = psi + frame.psi0
    cos_p, sin_p = math.cos(p), math.sin(p)
    cos_t, sin_t = math.cos(t), math.sin(t)
    e: Vec = (cos_p * cos_t, cos_p * sin_t, sin_p)
    de: Vec = (-sin_p * cos_t, -sin_p * sin_t, cos_p)

    h1, h2, alpha = _radial_h1_h2(pursuer, evader, e)
    offset = la.sub(evader.position, pursuer.position)
    a2m1 = alpha * alpha - 1.0
    h1_d = la.dot(offset, de)
    # d^2 e / d psi^2 = -e, so h1'' collapses to -(h1 + alpha*r).
    h1_dd = -(h1 + alpha * pursuer.capture_radius)

    rho = (h1 + h2) / a2m1
    rho_d = (h2 + h1) / h2 * h1_d / a2m1
    rho_dd = ((h2 + h1) / h2 * h1_dd + (h2 * h2 - h1 * h1) / h2 ** 3 * h1_d * h1_d) / a2m1
    return rho, rho_d, rho_dd


def cross_section_curvature(pursuer: PursuerSpec, evader: EvaderSpec,
                            frame: PolarFrame, theta: float, psi: float,
                            method: str = "analytic") -> float:
    """Curvature of the planar boundary cross-section at angle ``psi``.

    Fixing ``theta`` selects a plane through the evader; the boundary traces
    a closed curve ``rho(psi)`` in that plane whose curvature is

        kappa = (rho^2 + 2 rho'^2 - rho rho'') / (rho^2 + rho'^2)^(3/2).

    ``method="analytic"`` differentiates the radial formula exactly;
    ``method="fd"`` uses central differences and exists to cross-validate
    the analytic chain.  Strict convexity of the evasion space makes the
    result positive everywhere.
    """
    if la.dist(frame.origin, evader.position) > 1e-9:
        raise ValueError("frame origin must coincide with the evader position")
    if method == "analytic":
        rho, rho_d, rho_dd = _rho_derivatives(pursuer, evader, frame, theta, psi)
    elif method == "fd":
        h = 1e-4
        rho = _rho_of_psi(pursuer, evader, frame, theta, psi)
        rho_plus = _rho_of_psi(pursuer, evader, frame, theta, psi + h)
        rho_minus = _rho_of_psi(pursuer, evader, frame, theta, psi - h)
        rho_d = (rho_plus - rho_minus) / (2.0 * h)
        rho_dd = (rho_plus - 2.0 * rho + rho_minus) / (h * h)
    else:
        raise ValueError(f"method must be 'analytic' or 'fd', got {method!r}")
    numerator = rho * rho + 2.0 * rho_d * rho_d - rho * rho_dd
    return numerator / (rho * rho + rho_d * rho_d) ** 1.5
