"""Interception points of evasion spaces via small convex programs.

Against a coalition of pursuers, the evader's reachable-without-capture
set is a compact, strictly convex intersection of per-pursuer bodies.  The
interception point is the unique lowest-altitude point of that set,
optionally further intersected with a closed ball play region:

    minimize    z
    subject to  f_i(x) >= 0        for every coalition member i,
                g(x)  >= 0         (ball region only),

with f_i the race potential of :mod:`reachavoid.geometry` and
g(x) = R^2 - ||x - c||^2.  Each constraint is handled internally through
the equivalent concave form

    f_i(x) >= 0  <=>  ||x - x_P||^2 - (alpha ||x - x_E|| + r)^2 >= 0,

which makes the log-barrier strictly convex, and the solution is then
Newton-polished on the original Karush-Kuhn-Tucker system so that
multipliers and residuals are reported for f_i itself.

The module also classifies the winner of the single-evader game from the
sign of the optimal altitude, reduces coalitions to the (at most three)
members that pin down the interception point, and cross-checks
three-pursuer solutions against the quartic equation satisfied by triple
boundary intersections.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _linalg as la
from ._linalg import Vec
from .geometry import (
    AssumptionViolation,
    CapturedConfigurationError,
    EvaderSpec,
)

# Altitude threshold separating pursuit wins / tie / evader wins.
GOAL_TOLERANCE = 1e-7
# A constraint counts as active when |f_i| at the solution is below this.
ACTIVE_TOLERANCE = 1e-7
# Certified results must satisfy stationarity and complementary slackness
# to this accuracy.
KKT_TOLERANCE = 1e-8

_BARRIER_GAP = 1e-10
_NEWTON_DECREMENT_TOL = 1e-12
_COALITION_MAX = 3

Coalition = tuple[int, ...]


class SolverFailure(RuntimeError):
    """The interception solver did not reach its certified accuracy."""


class CoplanarConfigurationError(ValueError):
    """Triple-intersection candidates need a non-coplanar configuration."""


class SolveStatus(enum.Enum):
    SOLVED = "solved"
    INFEASIBLE = "infeasible"
    EVASION_REACHES_GOAL = "evasion_reaches_goal"


class GameKind(enum.Enum):
    PURSUIT_WINS = "PursuitWins"
    TIE = "Tie"
    EVADER_WINS = "EvaderWins"


@dataclass(frozen=True)
class Unbounded:
    """Half-space play region above the exit plane z = 0."""


@dataclass(frozen=True)
class Ball:
    """Closed ball play region; must cut the plane z = 0 in a real disk."""

    center: Vec
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", la.as_vec(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0.0:
            raise ValueError(f"ball radius must be > 0, got {self.radius}")
        if abs(self.center[2]) >= self.radius:
            raise ValueError(
                "ball must intersect the exit plane z=0 in a disk of positive radius"
            )

    def g(self, point: Vec) -> float:
        dx = point[0] - self.center[0]
        dy = point[1] - self.center[1]
        dz = point[2] - self.center[2]
        return self.radius * self.radius - (dx * dx + dy * dy + dz * dz)

    def boundary_distance(self, point: Vec) -> float:
        """Signed distance to the sphere (positive inside)."""
        return self.radius - la.dist(point, self.center)


Region = Unbounded | Ball
UNBOUNDED = Unbounded()


@dataclass(frozen=True)
class InterceptionResult:
    """Certified solution of the interception program.

    ``multipliers`` aligns with ``coalition``; inactive members carry 0.
    All multipliers are <= 0 and satisfy stationarity

        (0, 0, -1) = sum_i multipliers[i] * grad f_i + region_multiplier * grad g

    to within ``kkt_residual``.
    """

    coalition: Coalition
    point: Vec
    value: float
    active_set: Coalition
    multipliers: tuple[float, ...]
    region_active: bool
    region_multiplier: float
    status: SolveStatus
    kkt_residual: float
    slackness_residual: float


def validate_coalition(members, num_pursuers: int | None = None,
                       max_size: int | None = _COALITION_MAX) -> Coalition:
    """Check strictly increasing indices and size bounds; returns a tuple."""
    out = tuple(int(i) for i in members)
    if not out:
        raise ValueError("coalition must contain at least one pursuer index")
    if max_size is not None and len(out) > max_size:
        raise ValueError(f"coalition size {len(out)} exceeds maximum {max_size}")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"coalition indices must be strictly increasing, got {out}")
    if out[0] < 0:
        raise ValueError(f"coalition indices must be non-negative, got {out}")
    if num_pursuers is not None and out[-1] >= num_pursuers:
        raise ValueError(
            f"coalition index {out[-1]} out of range for {num_pursuers} pursuers"
        )
    return out


# --------------------------------------------------------------------------
# constraint bookkeeping
#
# Each coalition member contributes the tuple (p, alpha, r); the concave
# form evaluated everywhere below is
#     ftilde(x) = ||x-p||^2 - alpha^2 ||x-E||^2 - r^2 - 2 alpha r ||x-E||
# which is positive exactly where the original potential f is.
#
# For positive capture radii the final term puts a cone kink at the evader
# position, and for small barrier weights the barrier minimum can sit
# exactly on that kink, trapping Newton.  The barrier phase therefore works
# with ||x-E|| replaced by sqrt(||x-E||^2 + mu^2) for a tiny mu: the
# smoothed set lies strictly inside the true one, the barrier becomes C^2,
# and the KKT polish on the unsmoothed constraints removes the O(mu)
# perturbation afterwards.

_Con = tuple[Vec, float, float]


def _constraints(members: Coalition, evader: EvaderSpec,
                 pursuers) -> list[_Con]:
    cons: list[_Con] = []
    for i in members:
        p = pursuers[i]
        alpha = p.speed / evader.speed
        if alpha <= 1.0:
            raise AssumptionViolation(
                f"pursuer {i} is not faster than the evader (alpha={alpha})"
            )
        separation = la.dist(p.position, evader.position)
        if separation <= p.capture_radius:
            raise CapturedConfigurationError(
                f"evader is already within capture radius of pursuer {i}"
            )
        cons.append((p.position, alpha, p.capture_radius))
    return cons


def _f_original(con: _Con, evader_pos: Vec, x: Vec) -> float:
    p, alpha, r = con
    return la.dist(x, p) - alpha * la.dist(x, evader_pos) - r


def _ftilde(con: _Con, evader_pos: Vec, x: Vec, mu2: float = 0.0) -> float:
    p, alpha, r = con
    d_e2 = (
        (x[0] - evader_pos[0]) ** 2
        + (x[1] - evader_pos[1]) ** 2
        + (x[2] - evader_pos[2]) ** 2
    )
    d_p2 = (x[0] - p[0]) ** 2 + (x[1] - p[1]) ** 2 + (x[2] - p[2]) ** 2
    return (d_p2 - alpha * alpha * d_e2 - r * r
            - 2.0 * alpha * r * math.sqrt(d_e2 + mu2))


def _strictly_feasible(cons, evader_pos: Vec, ball: Ball | None, x: Vec,
                       mu2: float = 0.0) -> bool:
    if ball is not None and ball.g(x) <= 0.0:
        return False
    return all(_ftilde(con, evader_pos, x, mu2) > 0.0 for con in cons)


def _initial_point(cons, evader_pos: Vec, ball: Ball | None,
                   mu2: float = 0.0) -> Vec:
    """Strictly feasible start near the evader position.

    The evader itself is strictly feasible for every race constraint, but
    with positive capture radii the barrier has a cone kink there whose
    curvature grows like 1/distance, so the start must sit a sizeable
    fraction of the feasibility margin away from it (and move inward when
    the evader sits on the ball boundary).
    """
    needs_offset = any(con[2] > 0.0 for con in cons)
    if ball is not None and ball.g(evader_pos) <= 0.0:
        needs_offset = True
    if not needs_offset and _strictly_feasible(cons, evader_pos, ball,
                                               evader_pos, mu2):
        return evader_pos

    directions: list[Vec] = []
    if ball is not None:
        toward_center = la.sub(ball.center, evader_pos)
        if la.norm(toward_center) > 0.0:
            directions.append(la.unit(toward_center))
    directions.extend([(0.0, 0.0, -1.0), (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)])

    margin = min(la.dist(con[0], evader_pos) - con[2] for con in cons)
    for exponent in (2, 3, 4, 6, 9, 12):
        delta = margin * 10.0 ** (-exponent)
        for direction in directions:
            candidate = la.add(evader_pos, la.scale(direction, delta))
            if (
                la.dist(candidate, evader_pos) > 0.0
                and _strictly_feasible(cons, evader_pos, ball, candidate, mu2)
            ):
                return candidate
    raise SolverFailure("could not construct a strictly feasible starting point")


def _slide_down(cons, evader_pos: Vec, ball: Ball | None, x0: Vec,
                mu2: float) -> Vec:
    """Move the start down the vertical feasible ray, most of the way.

    Slow pursuers make the feasible body enormous compared to the scene,
    and the early barrier stages would otherwise spend hundreds of damped
    Newton steps traversing it; a doubling search along -z removes that
    travel for the cost of a few feasibility evaluations.
    """
    step = 1e-3 * (1.0 + abs(x0[2]))
    reach = 0.0
    for _ in range(80):
        candidate = (x0[0], x0[1], x0[2] - (reach + step))
        if not _strictly_feasible(cons, evader_pos, ball, candidate, mu2):
            break
        reach += step
        step *= 2.0
    else:
        raise SolverFailure("feasible region appears unbounded below")
    if reach == 0.0:
        return x0
    return (x0[0], x0[1], x0[2] - 0.9 * reach)


# --------------------------------------------------------------------------
# log-barrier Newton continuation


def _barrier_value(cons, epos: Vec, ball: Ball | None, x: Vec, t: float,
                   mu2: float) -> float | None:
    """Smoothed barrier objective, or None when x is not strictly feasible."""
    value = t * x[2]
    ex, ey, ez = epos
    dex = x[0] - ex
    dey = x[1] - ey
    dez = x[2] - ez
    d_e2 = dex * dex + dey * dey + dez * dez
    ds = math.sqrt(d_e2 + mu2)
    for p, a, r in cons:
        dpx = x[0] - p[0]
        dpy = x[1] - p[1]
        dpz = x[2] - p[2]
        ft = (dpx * dpx + dpy * dpy + dpz * dpz) - a * a * d_e2 - r * r - 2.0 * a * r * ds
        if ft <= 0.0:
            return None
        value -= math.log(ft)
    if ball is not None:
        g = ball.g(x)
        if g <= 0.0:
            return None
        value -= math.log(g)
    return value


def _barrier_step(cons, epos: Vec, ball: Ball | None, x: Vec, t: float,
                  mu2: float):
    """Value, gradient and Hessian of the smoothed barrier at a feasible x."""
    ex, ey, ez = epos
    dex = x[0] - ex
    dey = x[1] - ey
    dez = x[2] - ez
    d_e2 = dex * dex + dey * dey + dez * dez
    ds = math.sqrt(d_e2 + mu2)
    if ds < 1e-150:
        ds = 1e-150
    value = t * x[2]
    g0 = 0.0
    g1 = 0.0
    g2 = t
    h11 = h12 = h13 = h22 = h23 = h33 = 0.0
    for p, a, r in cons:
        dpx = x[0] - p[0]
        dpy = x[1] - p[1]
        dpz = x[2] - p[2]
        a2 = a * a
        ft = (dpx * dpx + dpy * dpy + dpz * dpz) - a2 * d_e2 - r * r - 2.0 * a * r * ds
        if ft <= 0.0:
            raise SolverFailure("barrier evaluated at an infeasible point")
        value -= math.log(ft)
        cone = 2.0 * a * r / ds if r != 0.0 else 0.0
        k = 2.0 * a2 + cone
        gf0 = 2.0 * dpx - k * dex
        gf1 = 2.0 * dpy - k * dey
        gf2 = 2.0 * dpz - k * dez
        inv = 1.0 / ft
        inv2 = inv * inv
        g0 -= gf0 * inv
        g1 -= gf1 * inv
        g2 -= gf2 * inv
        # Hessian of smoothed ftilde:
        #   (2 - 2 a^2 - cone) I + (cone/ds^2) dE dE^T
        hd = 2.0 - 2.0 * a2 - cone
        cw = cone / (ds * ds) if cone != 0.0 else 0.0
        h11 += inv2 * gf0 * gf0 - inv * (hd + cw * dex * dex)
        h22 += inv2 * gf1 * gf1 - inv * (hd + cw * dey * dey)
        h33 += inv2 * gf2 * gf2 - inv * (hd + cw * dez * dez)
        h12 += inv2 * gf0 * gf1 - inv * (cw * dex * dey)
        h13 += inv2 * gf0 * gf2 - inv * (cw * dex * dez)
        h23 += inv2 * gf1 * gf2 - inv * (cw * dey * dez)
    if ball is not None:
        g = ball.g(x)
        if g <= 0.0:
            raise SolverFailure("barrier evaluated outside the play region")
        value -= math.log(g)
        bx = x[0] - ball.center[0]
        by = x[1] - ball.center[1]
        bz = x[2] - ball.center[2]
        inv = 1.0 / g
        inv2 = inv * inv
        g0 += 2.0 * bx * inv
        g1 += 2.0 * by * inv
        g2 += 2.0 * bz * inv
        h11 += 4.0 * bx * bx * inv2 + 2.0 * inv
        h22 += 4.0 * by * by * inv2 + 2.0 * inv
        h33 += 4.0 * bz * bz * inv2 + 2.0 * inv
        h12 += 4.0 * bx * by * inv2
        h13 += 4.0 * bx * bz * inv2
        h23 += 4.0 * by * bz * inv2
    return value, (g0, g1, g2), (h11, h12, h13, h22, h23, h33)


# Hard but legitimate geometries (barely-faster pursuers whose bodies dwarf
# the scene) can take a long steady march per stage, so the budget is
# generous; the stall and step-floor guards below stop genuinely stuck runs
# long before it is spent.
_NEWTON_MAX_ITER = 3000


def _newton_center(cons, epos: Vec, ball: Ball | None, x: Vec, t: float,
                   mu2: float, max_iter: int = _NEWTON_MAX_ITER) -> Vec:
    previous_decrement = math.inf
    for _ in range(max_iter):
        value, grad, hess = _barrier_step(cons, epos, ball, x, t, mu2)
        try:
            dx = la.solve_sym3(*hess, -grad[0], -grad[1], -grad[2])
        except ValueError:
            raise SolverFailure("singular Newton system in the barrier") from None
        decrement = -(grad[0] * dx[0] + grad[1] * dx[1] + grad[2] * dx[2])
        # The barrier gradient is a difference of terms of order t times the
        # coordinate scale, so its rounding noise (and hence the reachable
        # decrement floor) grows with both; the stopping tolerance scales to
        # match.  Steps at the resolution floor of x and decrements that stop
        # shrinking are the same noise floor in disguise.  The KKT polish
        # restores full precision afterwards.
        noise_scale = t * (1.0 + la.norm(x))
        tol = max(_NEWTON_DECREMENT_TOL, 4e-16 * noise_scale)
        if decrement <= 2.0 * tol:
            return x
        if la.norm(dx) <= 1e-11 * (1.0 + la.norm(x)):
            return x
        if decrement < 1e-2 and decrement >= 0.9 * previous_decrement:
            return x
        previous_decrement = decrement
        slope = -decrement
        step = 1.0
        moved = 0.0
        for _ in range(60):
            candidate = (x[0] + step * dx[0], x[1] + step * dx[1], x[2] + step * dx[2])
            cand_value = _barrier_value(cons, epos, ball, candidate, t, mu2)
            if cand_value is not None and cand_value <= value + 0.25 * step * slope:
                moved = step * la.norm(dx)
                x = candidate
                break
            step *= 0.5
        else:
            if decrement <= max(2e-9, 4e-14 * noise_scale):
                return x
            raise SolverFailure("barrier line search failed to make progress")
        if moved <= 1e-13 * (1.0 + la.norm(x)):
            return x
    raise SolverFailure("Newton iteration budget exhausted")


def _barrier_solve(cons, epos: Vec, ball: Ball | None, x0: Vec,
                   mu2: float, gap: float = _BARRIER_GAP) -> Vec:
    m = len(cons) + (1 if ball is not None else 0)
    t = 1.0
    x = x0
    while True:
        x = _newton_center(cons, epos, ball, x, t, mu2)
        if m / t <= gap:
            return x
        t *= 10.0


# --------------------------------------------------------------------------
# single-pursuer fast path
#
# The evasion space of one pursuer is a body of revolution about the
# evader-pursuer axis, so its lowest point lies in the vertical plane
# containing that axis and one scalar angle parameterizes the search.


def _solve_single(con: _Con, epos: Vec) -> tuple[Vec, float]:
    p, a, r = con
    q = la.sub(p, epos)
    d = la.norm(q)
    a2m1 = a * a - 1.0
    const = a2m1 * (d * d - r * r)
    qp = math.hypot(q[0], q[1])
    if qp > 1e-13 * max(d, 1.0):
        phat = (q[0] / qp, q[1] / qp, 0.0)
    else:
        phat = (1.0, 0.0, 0.0)
        qp = 0.0
    qz = q[2]
    ar = a * r

    def derivs(phi: float):
        s = math.sin(phi)
        c = math.cos(phi)
        h1 = -(s * qp - c * qz) - ar
        h1_d = -(c * qp + s * qz)
        h1_dd = -(h1 + ar)
        h2 = math.sqrt(h1 * h1 + const)
        rho = (h1 + h2) / a2m1
        rho_d = (h2 + h1) / h2 * h1_d / a2m1
        rho_dd = ((h2 + h1) / h2 * h1_dd
                  + (h2 * h2 - h1 * h1) / h2 ** 3 * h1_d * h1_d) / a2m1
        z = -rho * c
        z_d = -rho_d * c + rho * s
        z_dd = -rho_dd * c + 2.0 * rho_d * s + rho * c
        return z, z_d, z_dd, rho, s, c

    # Coarse scan; the altitude along the closed convex section is circularly
    # unimodal, so the sample argmin brackets the true minimum.
    n = 16
    best_k = 0
    best_z = math.inf
    two_pi = 2.0 * math.pi
    for k in range(n):
        z = derivs(-math.pi + two_pi * k / n)[0]
        if z < best_z:
            best_z = z
            best_k = k
    lo = -math.pi + two_pi * (best_k - 1) / n
    hi = -math.pi + two_pi * (best_k + 1) / n
    phi = -math.pi + two_pi * best_k / n
    for _ in range(100):
        z, z_d, z_dd, rho, s, c = derivs(phi)
        if abs(z_d) <= 1e-14 * max(1.0, rho):
            break
        if z_d > 0.0:
            hi = phi
        else:
            lo = phi
        if z_dd > 0.0:
            candidate = phi - z_d / z_dd
            if not lo < candidate < hi:
                candidate = 0.5 * (lo + hi)
        else:
            candidate = 0.5 * (lo + hi)
        phi = candidate
    z, z_d, z_dd, rho, s, c = derivs(phi)
    point = (
        epos[0] + rho * s * phat[0],
        epos[1] + rho * s * phat[1],
        epos[2] - rho * c,
    )
    return point, epos[2] + z


# --------------------------------------------------------------------------
# KKT polish on the original constraint functions


def _f_grad_hess(con: _Con, epos: Vec, x: Vec):
    p, a, r = con
    dpv = la.sub(x, p)
    dev = la.sub(x, epos)
    d_p = la.norm(dpv)
    d_e = la.norm(dev)
    f = d_p - a * d_e - r
    u = la.scale(dpv, 1.0 / d_p)
    w = la.scale(dev, 1.0 / d_e)
    grad = la.sub(u, la.scale(w, a))
    # Hessian (I - u u^T)/d_p - a (I - w w^T)/d_e, packed symmetric.
    ip = 1.0 / d_p
    ie = a / d_e
    h = (
        ip * (1.0 - u[0] * u[0]) - ie * (1.0 - w[0] * w[0]),
        ip * (-u[0] * u[1]) - ie * (-w[0] * w[1]),
        ip * (-u[0] * u[2]) - ie * (-w[0] * w[2]),
        ip * (1.0 - u[1] * u[1]) - ie * (1.0 - w[1] * w[1]),
        ip * (-u[1] * u[2]) - ie * (-w[1] * w[2]),
        ip * (1.0 - u[2] * u[2]) - ie * (1.0 - w[2] * w[2]),
    )
    return f, grad, h


def _polish_kkt(cons, epos: Vec, ball: Ball | None, x: Vec,
                active: tuple[int, ...], region_active: bool,
                lam0: dict[int, float] | None = None):
    """Newton-refine the active-set KKT system; returns (x, lam, lam_g) or None.

    ``active`` holds positions into ``cons``.  The system solved is
    stationarity plus f_i(x) = 0 on the active set (and g(x) = 0 when the
    region is active); quadratic convergence from the barrier output.

    Multipliers start from a least-squares fit of stationarity: with all
    of them zero the bordered Jacobian has a vanishing curvature block and
    is singular whenever fewer than three constraints are active.
    """
    k = len(active)
    extra = 1 if region_active else 0
    n = 3 + k + extra
    if lam0 is None:
        lam_seed, lam_g = _lstsq_multipliers(cons, epos, ball, x, active,
                                             region_active)
        lam = [lam_seed.get(idx, 0.0) for idx in active]
    else:
        lam = [lam0.get(idx, 0.0) for idx in active]
        lam_g = lam0.get(-1, 0.0)
    xc = x
    for _ in range(20):
        f_vals = []
        grads = []
        w11 = w12 = w13 = w22 = w23 = w33 = 0.0
        for j, idx in enumerate(active):
            f, grad, hess = _f_grad_hess(cons[idx], epos, xc)
            f_vals.append(f)
            grads.append(grad)
            lj = lam[j]
            w11 += lj * hess[0]
            w12 += lj * hess[1]
            w13 += lj * hess[2]
            w22 += lj * hess[3]
            w23 += lj * hess[4]
            w33 += lj * hess[5]
        if region_active:
            gb = ball.g(xc)
            grad_g = la.scale(la.sub(xc, ball.center), -2.0)
            w11 += lam_g * -2.0
            w22 += lam_g * -2.0
            w33 += lam_g * -2.0
        # residual of stationarity: sum lam grad f + lam_g grad g - (0,0,-1)
        r0 = sum(lam[j] * grads[j][0] for j in range(k))
        r1 = sum(lam[j] * grads[j][1] for j in range(k))
        r2 = sum(lam[j] * grads[j][2] for j in range(k)) + 1.0
        if region_active:
            r0 += lam_g * grad_g[0]
            r1 += lam_g * grad_g[1]
            r2 += lam_g * grad_g[2]
        residual = [r0, r1, r2] + f_vals + ([gb] if region_active else [])
        if max(abs(v) for v in residual) < 1e-13:
            break
        matrix = [[0.0] * n for _ in range(n)]
        matrix[0][0] = w11
        matrix[0][1] = w12
        matrix[0][2] = w13
        matrix[1][0] = w12
        matrix[1][1] = w22
        matrix[1][2] = w23
        matrix[2][0] = w13
        matrix[2][1] = w23
        matrix[2][2] = w33
        for j in range(k):
            g = grads[j]
            for axis in range(3):
                matrix[axis][3 + j] = g[axis]
                matrix[3 + j][axis] = g[axis]
        if region_active:
            for axis in range(3):
                matrix[axis][3 + k] = grad_g[axis]
                matrix[3 + k][axis] = grad_g[axis]
        rhs = [-v for v in residual]
        try:
            delta = la.gauss_solve(matrix, rhs)
        except ValueError:
            return None
        xc = (xc[0] + delta[0], xc[1] + delta[1], xc[2] + delta[2])
        for j in range(k):
            lam[j] += delta[3 + j]
        if region_active:
            lam_g += delta[3 + k]
    else:
        return None
    return xc, dict(zip(active, lam)), lam_g


def _polish_hypothesis(cons, epos: Vec, ball: Ball | None, x: Vec,
                       active, region_active: bool):
    """Polish one active-set guess, shedding wrong-sign multipliers.

    Returns ``(x, lam, lam_g)`` or None when the guess cannot be made
    consistent.
    """
    polish_active = list(active)
    polish_region = region_active
    for _ in range(len(cons) + 2):
        if not polish_active and not polish_region:
            return None
        polished = _polish_kkt(cons, epos, ball, x, tuple(polish_active),
                               polish_region)
        if polished is None:
            return None
        x_new, lam_new, lam_g_new = polished
        offender = None
        worst = 1e-10
        for idx, value in lam_new.items():
            if value > worst:
                worst = value
                offender = idx
        if offender is not None:
            polish_active.remove(offender)
            continue
        if polish_region and lam_g_new > 1e-10:
            polish_region = False
            continue
        return x_new, lam_new, lam_g_new
    return None


def _certificate(cons, epos: Vec, ball: Ball | None, x: Vec,
                 lam: dict[int, float], lam_g: float):
    """Stationarity and complementary-slackness residuals at (x, lam)."""
    r0 = r1 = 0.0
    r2 = 1.0
    slack = 0.0
    for idx, con in enumerate(cons):
        f, grad, _ = _f_grad_hess(con, epos, x)
        lj = lam.get(idx, 0.0)
        r0 += lj * grad[0]
        r1 += lj * grad[1]
        r2 += lj * grad[2]
        slack = max(slack, abs(lj * f))
    if ball is not None:
        g = ball.g(x)
        grad_g = la.scale(la.sub(x, ball.center), -2.0)
        r0 += lam_g * grad_g[0]
        r1 += lam_g * grad_g[1]
        r2 += lam_g * grad_g[2]
        slack = max(slack, abs(lam_g * g))
    stationarity = math.sqrt(r0 * r0 + r1 * r1 + r2 * r2)
    return stationarity, slack


def _lstsq_multipliers(cons, epos: Vec, ball: Ball | None, x: Vec,
                       active: tuple[int, ...], region_active: bool):
    """Least-squares multipliers on the active gradients (fallback path)."""
    columns = [
        np.array(_f_grad_hess(cons[idx], epos, x)[1]) for idx in active
    ]
    if region_active:
        columns.append(np.array(la.scale(la.sub(x, ball.center), -2.0)))
    if not columns:
        return {}, 0.0
    matrix = np.column_stack(columns)
    target = np.array([0.0, 0.0, -1.0])
    coef, *_ = np.linalg.lstsq(matrix, target, rcond=None)
    coef = np.minimum(coef, 0.0)
    lam = {idx: float(coef[j]) for j, idx in enumerate(active)}
    lam_g = float(coef[len(active)]) if region_active else 0.0
    return lam, lam_g


def _solve(members: Coalition, evader: EvaderSpec, pursuers,
           region: Region, initial_point: Vec | None = None) -> InterceptionResult:
    cons = _constraints(members, evader, pursuers)
    epos = evader.position
    ball = region if isinstance(region, Ball) else None
    if ball is not None:
        for i in members:
            if ball.g(pursuers[i].position) < -1e-9:
                raise ValueError(f"pursuer {i} lies outside the ball play region")
        if ball.g(epos) < -1e-9:
            raise ValueError("evader lies outside the ball play region")

    # Smoothing scale for the barrier phase, relative to the tightest
    # feasibility margin; zero when no capture radius introduces a kink.
    margin = min(la.dist(con[0], epos) - con[2] for con in cons)
    mu2 = (1e-7 * margin) ** 2 if any(con[2] > 0.0 for con in cons) else 0.0

    x: Vec | None = None
    if initial_point is not None:
        x0 = la.as_vec(initial_point)
        if not _strictly_feasible(cons, epos, ball, x0, mu2):
            raise ValueError("initial point must be strictly feasible")
        x = _barrier_solve(cons, epos, ball, x0, mu2)
    else:
        # A single constraint's minimizer that happens to satisfy all other
        # constraints is the global minimizer, since each single body
        # contains the full feasible set.
        for idx in range(len(cons)):
            candidate, _ = _solve_single(cons[idx], epos)
            ok = all(
                _f_original(cons[j], epos, candidate) >= -1e-12
                for j in range(len(cons)) if j != idx
            )
            if ok and (ball is None or ball.g(candidate) >= -1e-12):
                x = candidate
                break
        if x is None:
            start = _slide_down(
                cons, epos, ball, _initial_point(cons, epos, ball, mu2), mu2
            )
            x = _barrier_solve(cons, epos, ball, start, mu2)

    # The barrier stops at a finite duality gap, so a constraint that is
    # truly active can still show a residual slightly above any single
    # threshold.  Try active-set hypotheses from tight to loose and keep the
    # first whose polished point verifies.
    f_at = [_f_original(con, epos, x) for con in cons]
    hypotheses: list[tuple[tuple[int, ...], bool]] = []
    for tol in (ACTIVE_TOLERANCE, 1e-5, 1e-3):
        candidate = (
            tuple(j for j, f in enumerate(f_at) if abs(f) <= tol),
            ball is not None and abs(ball.boundary_distance(x)) <= tol,
        )
        if candidate not in hypotheses:
            hypotheses.append(candidate)

    best: tuple | None = None
    for active0, region0 in hypotheses:
        outcome = _polish_hypothesis(cons, epos, ball, x, active0, region0)
        if outcome is None:
            continue
        x_new, lam_new, lam_g_new = outcome
        stationarity, slack = _certificate(cons, epos, ball, x_new, lam_new, lam_g_new)
        f_new = [_f_original(con, epos, x_new) for con in cons]
        feasible = all(f >= -1e-8 for f in f_new)
        if ball is not None:
            feasible &= ball.boundary_distance(x_new) >= -1e-8
        if stationarity <= KKT_TOLERANCE and slack <= KKT_TOLERANCE and feasible:
            best = (x_new, lam_new, lam_g_new, stationarity, slack)
            break
    if best is None:
        # Degenerate actives (dependent gradients): keep the barrier point
        # and report sign-clamped least-squares multipliers.
        active0 = tuple(j for j, f in enumerate(f_at) if abs(f) <= 1e-5)
        region0 = ball is not None and abs(ball.boundary_distance(x)) <= 1e-5
        lam, lam_g = _lstsq_multipliers(cons, epos, ball, x, active0, region0)
        stationarity, slack = _certificate(cons, epos, ball, x, lam, lam_g)
        best = (x, lam, lam_g, stationarity, slack)

    x, lam, lam_g, _, _ = best
    f_final = [_f_original(con, epos, x) for con in cons]
    if any(f < -1e-8 for f in f_final):
        raise SolverFailure("polished point violates a race constraint")
    active_positions = tuple(
        j for j, f in enumerate(f_final) if abs(f) <= ACTIVE_TOLERANCE
    )
    region_active = ball is not None and abs(ball.boundary_distance(x)) <= ACTIVE_TOLERANCE
    # Report multipliers only on the reported active set and certify with
    # exactly those values, so the certificate is reproducible from the
    # result fields alone.
    lam = {j: lam[j] for j in lam if j in active_positions}
    lam_g = lam_g if region_active else 0.0
    stationarity, slack = _certificate(cons, epos, ball, x, lam, lam_g)
    if stationarity > KKT_TOLERANCE or slack > KKT_TOLERANCE:
        raise SolverFailure(
            f"KKT certificate out of tolerance (stationarity {stationarity:.3e}, "
            f"slackness {slack:.3e})"
        )
    return InterceptionResult(
        coalition=members,
        point=x,
        value=x[2],
        active_set=tuple(members[j] for j in active_positions),
        multipliers=tuple(lam.get(j, 0.0) for j in range(len(members))),
        region_active=region_active,
        region_multiplier=lam_g,
        status=SolveStatus.SOLVED,
        kkt_residual=stationarity,
        slackness_residual=slack,
    )


def solve_interception(coalition, evader: EvaderSpec, pursuers,
                       region: Region = UNBOUNDED, *,
                       initial_point=None) -> InterceptionResult:
    """Solve the interception program for a coalition against one evader.

    Returns the unique lowest-altitude point of the evader's evasion-space
    closure (intersected with the ball region when given) together with a
    KKT certificate.  ``initial_point`` optionally forces the barrier
    continuation to start from a given strictly feasible point, which is
    useful for verifying uniqueness of the minimizer.
    """
    members = validate_coalition(coalition, len(pursuers), max_size=None)
    start = la.as_vec(initial_point) if initial_point is not None else None
    return _solve(members, evader, pursuers, region, initial_point=start)


def triple_candidates(coalition, evader: EvaderSpec, pursuers) -> list[np.ndarray]:
    """All common points of three evasion-space boundaries.

    Eliminating the radial coordinate from the three boundary equations
    leaves a quartic in the distance rho from the evader, so there are at
    most four candidates.  Requires the evader and the three pursuers to be
    non-coplanar; coplanar configurations raise
    :class:`CoplanarConfigurationError` and are handled by coalition
    reduction instead.
    """
    members = validate_coalition(coalition, len(pursuers))
    if len(members) != 3:
        raise ValueError("triple candidates require a coalition of exactly 3")
    cons = _constraints(members, evader, pursuers)
    epos = np.array(evader.position)

    m_rows = []
    b = np.empty(3)
    c = np.empty(3)
    for j, (p, a, r) in enumerate(cons):
        a2m1 = a * a - 1.0
        offset = epos - np.array(p)
        m_rows.append(2.0 * offset / a2m1)
        b[j] = 2.0 * a * r / a2m1
        d2 = float(offset @ offset)
        c[j] = (d2 - r * r) / a2m1
    m_matrix = np.array(m_rows)
    scale = max(float(np.linalg.norm(row)) for row in m_rows)
    if abs(float(np.linalg.det(m_matrix))) <= 1e-10 * scale ** 3:
        raise CoplanarConfigurationError(
            "evader and pursuers are coplanar; boundary intersections are "
            "not isolated points"
        )
    inv = np.linalg.inv(m_matrix)
    u = inv @ np.ones(3)
    pv = inv @ b
    qv = inv @ c
    # || u rho^2 + pv rho - qv ||^2 = rho^2, expanded in powers of rho.
    coeffs = [
        float(u @ u),
        2.0 * float(u @ pv),
        float(pv @ pv) - 2.0 * float(u @ qv) - 1.0,
        -2.0 * float(pv @ qv),
        float(qv @ qv),
    ]
    poly = np.polynomial.Polynomial(coeffs[::-1])
    dpoly = poly.deriv()
    candidates: list[np.ndarray] = []
    for root in np.roots(coeffs):
        if abs(root.imag) > 1e-8:
            continue
        rho = float(root.real)
        if rho <= 1e-12:
            continue
        for _ in range(6):
            slope = dpoly(rho)
            if slope == 0.0:
                break
            step = poly(rho) / slope
            rho -= step
            if abs(step) < 1e-15 * max(1.0, abs(rho)):
                break
        if rho <= 1e-12:
            continue
        direction = inv @ (rho * np.ones(3) + b - c / rho)
        if abs(float(np.linalg.norm(direction)) - 1.0) > 1e-6:
            continue
        point = epos + rho * direction
        residual = max(
            abs(_f_original(con, evader.position, tuple(point))) for con in cons
        )
        if residual > 1e-7:
            continue
        candidates.append(point)
    candidates.sort(key=lambda pt: (pt[2], pt[0], pt[1]))
    unique: list[np.ndarray] = []
    for point in candidates:
        if all(float(np.linalg.norm(point - other)) > 1e-8 for other in unique):
            unique.append(point)
    return unique


def _gradients_dependent(cons, epos: Vec, x: Vec, active_positions) -> bool:
    if len(active_positions) < 2:
        return False
    grads = np.array([
        _f_grad_hess(cons[j], epos, x)[1] for j in active_positions
    ])
    singular_values = np.linalg.svd(grads, compute_uv=False)
    return bool(singular_values[-1] <= 1e-10 * singular_values[0])


def reduce_coalition(coalition, evader: EvaderSpec, pursuers,
                     region: Region = UNBOUNDED) -> Coalition:
    """Smallest subcoalition that pins down the same interception point.

    Inactive members are redundant by complementary slackness; when the
    active gradients are linearly dependent a dependent member can also be
    dropped (highest index first), re-solving to confirm the point is
    unchanged.  At most three members ever remain.
    """
    members = validate_coalition(coalition, len(pursuers), max_size=None)
    result = _solve(members, evader, pursuers, region)
    current = members
    for _ in range(len(members) + 1):
        active = result.active_set
        if not active:
            # Only the region constraint binds; any single member certifies
            # the same point.  Keep the lowest index.
            return (current[0],)
        cons = _constraints(current, evader, pursuers)
        positions = [current.index(i) for i in active]
        if not _gradients_dependent(cons, evader.position, result.point, positions):
            return tuple(active)
        dropped = False
        for drop in sorted(active, reverse=True):
            trial = tuple(i for i in active if i != drop)
            if not trial:
                continue
            trial_result = _solve(trial, evader, pursuers, region)
            if la.dist(trial_result.point, result.point) <= 1e-7:
                current, result = trial, trial_result
                dropped = True
                break
        if not dropped:
            return tuple(active)
    return tuple(result.active_set)


def classify_kind(coalition, evader: EvaderSpec, pursuers,
                  region: Region = UNBOUNDED) -> GameKind:
    """Decide the winner of the coalition-versus-evader game.

    The sign of the optimal altitude settles it: positive means the
    reachable set stays clear of the exit plane (pursuit wins), negative
    means the evader reaches the exit (evader wins), and zero within
    tolerance is a tie.  For ball regions an evader win is confirmed by
    exhibiting an explicit reachable exit point on the segment from the
    evader to the minimizer.
    """
    result = solve_interception(coalition, evader, pursuers, region)
    return classify_result(result, evader, pursuers, region)


def classify_result(result: InterceptionResult, evader: EvaderSpec, pursuers,
                    region: Region = UNBOUNDED) -> GameKind:
    """Winner classification from an already-computed interception result."""
    value = result.value
    if value > GOAL_TOLERANCE:
        return GameKind.PURSUIT_WINS
    if value >= -GOAL_TOLERANCE:
        return GameKind.TIE
    if isinstance(region, Ball):
        epos = evader.position
        if epos[2] > 0.0:
            # The segment from the evader to the minimizer stays feasible by
            # convexity; its crossing of z=0 is a reachable exit point.
            tau = epos[2] / (epos[2] - value)
            crossing = la.add(epos, la.scale(la.sub(result.point, epos), tau))
            cons = _constraints(result.coalition, evader, pursuers)
            feasible = all(
                _f_original(con, epos, crossing) >= -1e-9 for con in cons
            ) and region.g(crossing) >= -1e-9
            if not feasible:
                raise SolverFailure(
                    "negative optimal altitude without a reachable exit point"
                )
    return GameKind.EVADER_WINS
