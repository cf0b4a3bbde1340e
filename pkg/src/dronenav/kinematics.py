"""Nonholonomic drone state, control saturation, and the fixed-step integrator.

The model: pos' = v * heading, heading' = u, with |heading| = 1, u orthogonal
to heading, |u| <= U_max and v bounded by V_max. Works identically for 2D and
3D state vectors. All functions are pure; callers own the stepping loop.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geom import EPS, norm, ortho_toward, sign_gate, unit

# speed range modes: aerial survey drones may back up, herding drones may not
SPEED_BIDIRECTIONAL = "bidirectional"   # v in [-V_max, V_max]
SPEED_FORWARD = "forward"               # v in [0, V_max]


@dataclass(frozen=True)
class Limits:
    V_max: float          # m/s
    U_max: float          # 1/s, heading turn rate bound
    dt: float             # s
    boundary_layer: float = 0.05  # saturation width for the speed gate

    def __post_init__(self):
        if min(self.V_max, self.U_max, self.dt, self.boundary_layer) <= 0:
            raise ValueError("limits must all be positive")


@dataclass(frozen=True)
class DroneState:
    pos: np.ndarray       # meters, 2 or 3 components
    heading: np.ndarray   # unit vector, same dimension
    speed: float = 0.0    # last commanded speed, m/s

    def __post_init__(self):
        object.__setattr__(self, "pos", np.asarray(self.pos, dtype=float))
        h = np.asarray(self.heading, dtype=float)
        n = norm(h)
        if n < EPS:
            raise ValueError("heading must be nonzero")
        object.__setattr__(self, "heading", h / n)


@dataclass(frozen=True)
class ControlInput:
    u: np.ndarray         # heading-rate vector, orthogonal to heading
    v: float              # speed command, m/s

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))


def step(state: DroneState, ctrl: ControlInput, dt: float) -> DroneState:
    """Explicit-Euler update; heading renormalized each step to fight drift."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    pos = state.pos + ctrl.v * state.heading * dt
    heading = unit(state.heading + ctrl.u * dt)
    return DroneState(pos=pos, heading=heading, speed=ctrl.v)


def saturate_steer(raw_sign: float, boundary_layer: float) -> float:
    """Piecewise-linear stand-in for sign(): clamp(raw / width, -1, 1)."""
    if boundary_layer <= 0:
        raise ValueError("boundary_layer must be positive")
    return min(max(raw_sign / boundary_layer, -1.0), 1.0)


def _any_perp(h: np.ndarray) -> np.ndarray:
    if len(h) == 2:
        return np.array([-h[1], h[0]])
    p = np.cross(h, [0.0, 0.0, 1.0])
    if norm(p) < EPS:
        p = np.cross(h, [0.0, 1.0, 0.0])
    return unit(p)


def steer_to_control(state: DroneState, b: np.ndarray, limits: Limits,
                     speed_mode: str = SPEED_BIDIRECTIONAL) -> ControlInput:
    """Sliding-mode steering toward the vector ``b`` (drone frame origin).

    Bidirectional mode: u = U_max * g(h, b) * W(h, b) and v = V_max * sat(cos),
    the saturated version of the binary speed gate; a target astern is reached
    by reversing (tail-aligned). Forward mode clamps v to [0, V_max], so the
    turn gate is held at +1 to rotate toward an astern target instead of
    parking tail-first. Speed is additionally capped at |b|/dt so one step can
    land exactly on the target point instead of orbiting it. b = 0 holds.
    """
    b = np.asarray(b, dtype=float)
    nb = norm(b)
    if nb < EPS:
        return ControlInput(u=np.zeros_like(state.heading), v=0.0)
    h = state.heading
    w = ortho_toward(h, b)
    cos = float(np.dot(h, b)) / nb
    if speed_mode == SPEED_FORWARD:
        if norm(w) < EPS and cos < 0.0:
            w = _any_perp(h)       # exactly astern: break the dead turn
        u = limits.U_max * w
        v = max(limits.V_max * saturate_steer(cos, limits.boundary_layer), 0.0)
    else:
        u = limits.U_max * sign_gate(h, b) * w
        v = limits.V_max * saturate_steer(cos, limits.boundary_layer)
    v_cap = nb / limits.dt
    v = min(max(v, -v_cap), v_cap)
    return ControlInput(u=u, v=v)
