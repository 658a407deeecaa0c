"""Fixed-coalition mini-simulation used by the drift and saddle tests.

Runs the straight-at-interception pursuit strategy against a configurable
evader, re-solving the interception program every frame, and reports the
worst per-frame drop of the interception altitude (the discretization
slack; zero means the guarantee held exactly).
"""

from __future__ import annotations

import random
from dataclasses import replace

from reachavoid import (
    evader_optimal_heading,
    pursuer_heading,
    solve_interception,
)
from reachavoid._linalg import add, dist, norm, scale


def worst_altitude_drop(pursuers, evader, dt: float, total_time: float,
                        evader_mode: str, seed: int) -> float:
    rng = random.Random(seed)
    members = tuple(range(len(pursuers)))
    p_pos = [p.position for p in pursuers]
    e_pos = evader.position
    previous = None
    worst = 0.0
    for _ in range(int(round(total_time / dt))):
        # Stop once capture could land within a couple of frames.
        if any(
            dist(e_pos, pos) <= p.capture_radius + 2.0 * (p.speed + evader.speed) * dt
            for p, pos in zip(pursuers, p_pos)
        ):
            break
        current_ps = [replace(p, position=pos) for p, pos in zip(pursuers, p_pos)]
        result = solve_interception(
            members, replace(evader, position=e_pos), current_ps
        )
        if previous is not None:
            worst = max(worst, previous - result.value)
        previous = result.value

        point = result.point
        new_p = []
        for p, pos in zip(pursuers, p_pos):
            heading = tuple(pursuer_heading(pos, point))
            if norm(heading) <= 1e-12:
                new_p.append(pos)
            else:
                new_p.append(add(pos, scale(heading, p.speed * dt)))
        p_pos = new_p

        if evader_mode == "random":
            while True:
                raw = (rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
                n = norm(raw)
                if n > 1e-12:
                    break
            e_heading = scale(raw, 1.0 / n)
        elif evader_mode == "optimal":
            e_heading = tuple(evader_optimal_heading(e_pos, point))
        else:
            raise ValueError(f"unknown evader mode {evader_mode!r}")
        if norm(e_heading) > 1e-12:
            e_pos = add(e_pos, scale(e_heading, evader.speed * dt))
    return worst
