"""Covert multi-target observation on a fixed sphere around the habitat.

A survey drone approaches a habitat point F, rides the observation sphere of
radius L_u around it, and retreats, all while minimizing the worst per-target
bearing change (the angle each target sees between its line to a fixed
reference point R and its line to the drone). Staying on a target's
camouflage line (target-to-R) zeroes that angle; the navigation laws chase
the foot of the perpendicular to the worst offender's line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import trace as trace_mod
from .geom import EPS, DegenerateGeometryError, norm, ortho_toward, unit
from .kinematics import (SPEED_BIDIRECTIONAL, ControlInput, DroneState,
                         Limits, step, steer_to_control)

PHASE_TO_SPHERE = "to_sphere"
PHASE_ON_SPHERE = "on_sphere"
PHASE_RETREAT = "retreat"
PHASE_DONE = "done"


@dataclass(frozen=True)
class ObservationConfig:
    F: np.ndarray                 # farthest habitat point
    R: np.ndarray                 # reference point (e.g. a tall landmark)
    D_s: np.ndarray               # post-takeoff start, outside the sphere
    D_v: np.ndarray               # ground VTOL point (takeoff/landing ignored in sim)
    L_u: float                    # observation sphere radius, m
    V_T: float                    # max target ground speed
    limits: Limits
    duration: float = 120.0
    retreat_start: float | None = None   # default: 88% of the duration
    visual_range: float = 150.0          # how far targets can see the drone
    camera_range: float = 400.0          # must exceed visual_range
    noise: float = 0.0                   # measured-position perturbation fraction
    argmax_blend: float = 0.0175         # rad; feet within this band of the max blend in
    progress_gain: float = 4.0           # m; weight of the approach/retreat component
    arrival_radius: float = 3.5          # m; retreat parking radius at D_s
    capture_band: float = 2.0            # m; sphere-proximity band where the riding law takes over
    radial_tau: float = 0.05              # s; sphere drift-correction time constant

    def __post_init__(self):
        for name in ("F", "R", "D_s", "D_v"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.L_u <= 0:
            raise ValueError("L_u must be positive")
        if norm(self.D_s - self.F) <= self.L_u:
            raise ValueError("D_s must start outside the observation sphere")
        if self.camera_range <= self.visual_range:
            raise ValueError("camera range must exceed the targets' visual range")

    @property
    def sphere_arrival_tol(self) -> float:
        """On-sphere begins only once inside the adherence band."""
        return max(self.limits.V_max * self.limits.dt, 0.45)

    @property
    def home_arrival_tol(self) -> float:
        """Retreat parking: the camouflage pull leaves a standing offset at D_s."""
        return max(self.limits.V_max * self.limits.dt, self.arrival_radius)

    def retreat_at(self) -> float:
        return self.duration * 0.88 if self.retreat_start is None else self.retreat_start


@dataclass
class TargetTrack:
    id: int
    pos: np.ndarray
    observable: bool = True


@dataclass(frozen=True)
class BearingReport:
    betas: dict                 # id -> bearing change, observable targets only
    m: int                      # argmax target id, -1 when nothing observable
    beta_m: float               # max bearing change, nan when nothing observable
    degenerate: frozenset = frozenset()   # ids where drone sat exactly on the line through R


def bearing_change(a_j: np.ndarray, r: np.ndarray) -> float:
    """Bearing change seen by one target: angle between a_j and (a_j - r).

    a_j is drone-to-target, r drone-to-reference. Returns 0 for the
    degenerate a_j == r case (target exactly behind the reference point).
    """
    a_j = np.asarray(a_j, dtype=float)
    d = a_j - np.asarray(r, dtype=float)
    na, nd = norm(a_j), norm(d)
    if na < EPS or nd < EPS:
        return 0.0
    c = float(np.dot(a_j, d)) / (na * nd)
    return math.acos(min(1.0, max(-1.0, c)))


def camouflage_foot(a_j: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Vector from the drone to the nearest point of the target's camouflage line.

    The line runs through the target and the reference point; near the line
    (bearing acute) the perpendicular foot is the fastest direction for
    shrinking the bearing.
    """
    a_j = np.asarray(a_j, dtype=float)
    r = np.asarray(r, dtype=float)
    diff = a_j - r
    denom = float(diff @ diff)
    if denom < EPS * EPS:
        raise DegenerateGeometryError("target and reference coincide from the drone")
    a2 = float(a_j @ a_j)
    r2 = float(r @ r)
    ra = float(r @ a_j)
    return ((a2 - ra) * r + (r2 - ra) * a_j) / denom


def descent_foot(a_j: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Exact steepest-descent step for one target's bearing change.

    Direction is the negated bearing gradient, magnitude the distance to the
    camouflage line (|a| sin beta), so near the line this coincides with the
    perpendicular foot. Unlike the foot it never points across the target:
    chasing the infinite-line foot from beyond the target drives the bearing
    up to pi instead of down to 0.
    """
    a_j = np.asarray(a_j, dtype=float)
    d = a_j - np.asarray(r, dtype=float)
    na, nd = norm(a_j), norm(d)
    if na < EPS or nd < EPS:
        return np.zeros_like(a_j)
    a_hat, d_hat = a_j / na, d / nd
    c = float(np.dot(a_hat, d_hat))
    g = c * a_hat - d_hat             # ∝ -grad(beta), |g| = sin(beta)
    s = norm(g)
    if s < EPS:
        return np.zeros_like(a_j)
    return (na * s) * (g / s)


def bearing_report(drone_pos: np.ndarray, targets, R: np.ndarray) -> BearingReport:
    """Per-target bearings from a world snapshot; argmax ties go to the lowest id."""
    r = R - drone_pos
    betas, degenerate = {}, set()
    for t in targets:
        if not t.observable:
            continue
        a = t.pos - drone_pos
        if norm(a - r) < EPS:
            degenerate.add(t.id)
            betas[t.id] = 0.0
        else:
            betas[t.id] = bearing_change(a, r)
    if not betas:
        return BearingReport(betas={}, m=-1, beta_m=float("nan"))
    m = max(sorted(betas), key=lambda k: betas[k])
    # max() keeps the first of equals, so sorting ids first breaks ties low
    return BearingReport(betas=betas, m=m, beta_m=betas[m], degenerate=frozenset(degenerate))


def _worst_foot(drone_pos, targets, R, blend: float = 0.0):
    """(report, steering foot) for the worst-bearing target; None if nothing visible.

    The bearing maximum switches argmax discontinuously once two targets'
    bearings equalize, which makes the bang-bang law chatter in place on that
    surface. The same saturation idea used on the sign gates applies here:
    feet of targets within ``blend`` radians of the max are averaged in, with
    weight ramping linearly to 0 at the band's edge. blend=0 is the pure
    argmax.
    """
    rep = bearing_report(drone_pos, targets, R)
    if rep.m < 0:
        return rep, None
    r = R - drone_pos
    if blend <= 0.0:
        if rep.m in rep.degenerate:
            return rep, None
        tgt = next(t for t in targets if t.id == rep.m)
        return rep, descent_foot(tgt.pos - drone_pos, r)
    total_w = 0.0
    acc = np.zeros_like(np.asarray(drone_pos, dtype=float))
    for t in targets:
        if t.id not in rep.betas:
            continue
        w = (rep.betas[t.id] - rep.beta_m + blend) / blend
        if w <= 0.0:
            continue
        if t.id in rep.degenerate:
            total_w += w             # on this line already: zero pull, still weighted
            continue
        acc = acc + w * descent_foot(t.pos - drone_pos, r)
        total_w += w
    if total_w <= 0.0:
        return rep, None
    return rep, acc / total_w


def on_sphere_step(drone: DroneState, targets, cfg: ObservationConfig) -> ControlInput:
    """Ride the sphere while steering toward the worst offender's camouflage line.

    The steering vector is the sphere-tangent component of the perpendicular
    foot, blended with a radial correction that cancels integration drift.
    With no observable target the drone holds (drift correction only).
    """
    f = cfg.F - drone.pos
    nf = norm(f)
    f_hat = unit(f)
    rep, p_m = _worst_foot(drone.pos, targets, cfg.R, cfg.argmax_blend)
    tangent = np.zeros_like(drone.pos)
    if p_m is not None and norm(p_m) > EPS:
        # tangential projection of the foot, unnormalized: the command fades
        # smoothly at the bearing-equalization locus instead of dithering
        tangent = p_m - float(np.dot(p_m, f_hat)) * f_hat
        nt = norm(tangent)
        if nt > cfg.limits.V_max:
            # keep the drift corrector competitive at its saturation level
            tangent *= cfg.limits.V_max / nt
    err = nf - cfg.L_u
    # deadband: unchecked micro-corrections would park the heading radially
    dead = 0.15
    if abs(err) <= dead:
        k = 0.0
    else:
        k = (err - math.copysign(dead, err)) / cfg.radial_tau
        k = min(max(k, -cfg.limits.V_max), cfg.limits.V_max)
    b = tangent + k * f_hat
    return steer_to_control(drone, b, cfg.limits, SPEED_BIDIRECTIONAL)


def to_sphere_step(drone: DroneState, targets, cfg: ObservationConfig) -> ControlInput:
    """Approach the sphere; with targets in view, prioritize the camouflage foot."""
    f = cfg.F - drone.pos
    rep, p_m = _worst_foot(drone.pos, targets, cfg.R, cfg.argmax_blend)
    if p_m is None or norm(p_m) < EPS:
        b = f
    else:
        b = p_m + cfg.progress_gain * ortho_toward(unit(p_m), f)
    return steer_to_control(drone, b, cfg.limits, SPEED_BIDIRECTIONAL)


def retreat_step(drone: DroneState, targets, cfg: ObservationConfig) -> ControlInput:
    """Fly back to the start point, still deferring to the camouflage foot."""
    s = cfg.D_s - drone.pos
    rep, p_m = _worst_foot(drone.pos, targets, cfg.R, cfg.argmax_blend)
    if p_m is None or norm(p_m) < EPS:
        b = s
    else:
        b = p_m + cfg.progress_gain * ortho_toward(unit(p_m), s)
    return steer_to_control(drone, b, cfg.limits, SPEED_BIDIRECTIONAL)


def benchmark_step(drone: DroneState, phase: str, cfg: ObservationConfig) -> ControlInput:
    """Naive comparison controller: straight in, hover, straight back."""
    if phase == PHASE_TO_SPHERE:
        return steer_to_control(drone, cfg.F - drone.pos, cfg.limits)
    if phase == PHASE_ON_SPHERE:
        return ControlInput(u=np.zeros_like(drone.pos), v=0.0)
    return steer_to_control(drone, cfg.D_s - drone.pos, cfg.limits)


def benchmark_arrival_point(cfg: ObservationConfig) -> np.ndarray:
    """Where the inbound ray from D_s pierces the sphere."""
    return cfg.F + cfg.L_u * unit(cfg.D_s - cfg.F)


# ---------------------------------------------------------------------------
# target scripting

def terrain_height(xy: np.ndarray, amp: float = 6.0, wavelength: float = 130.0) -> float:
    """Gentle deterministic hills for target altitude."""
    x, y = float(xy[0]), float(xy[1])
    k = 2.0 * math.pi / wavelength
    return amp * (1.0 + math.sin(k * x) * math.sin(k * 0.77 * y + 1.3)) / 2.0


@dataclass
class TargetScript:
    """Precomputed ground track for one target; positions indexed by step."""

    id: int
    positions: np.ndarray                   # (n_steps+1, 3)
    occlusions: tuple = ()                  # ((t0, t1), ...) observable=False windows

    def track(self, step_idx: int, t: float) -> TargetTrack:
        observable = not any(t0 <= t <= t1 for t0, t1 in self.occlusions)
        return TargetTrack(id=self.id, pos=self.positions[step_idx], observable=observable)


def group_target_scripts(n_targets: int, rng: np.random.Generator, cfg: ObservationConfig,
                         n_steps: int, zone_center: np.ndarray, zone_half: float,
                         spread: float = 20.0, occlusions: dict | None = None) -> list:
    """Scripts for a herd: a common smooth drift plus per-target offsets.

    The group center wanders at up to V_T inside the zone; each animal keeps
    a slowly-precessing offset of up to ``spread`` meters from the center.
    Altitude comes from the terrain. ``occlusions`` maps target id to
    ((t0, t1), ...) invisibility windows.
    """
    dt = cfg.limits.dt
    center = np.asarray(zone_center, dtype=float)[:2] + rng.uniform(-0.4, 0.4, size=2) * zone_half
    theta = rng.uniform(0, 2 * math.pi)
    sigma = 0.25
    offs_r = rng.uniform(0.3, 1.0, size=n_targets) * spread
    offs_a = rng.uniform(0, 2 * math.pi, size=n_targets)
    offs_w = rng.uniform(-0.02, 0.02, size=n_targets)   # offset precession, rad/s
    paths = np.empty((n_targets, n_steps + 1, 3))
    for i in range(n_steps + 1):
        ang = offs_a + offs_w * (i * dt)
        xy = center + np.stack([offs_r * np.cos(ang), offs_r * np.sin(ang)], axis=1)
        paths[:, i, :2] = xy
        for j in range(n_targets):
            paths[j, i, 2] = terrain_height(xy[j])
        theta += sigma * math.sqrt(dt) * rng.standard_normal()
        center = center + cfg.V_T * dt * np.array([math.cos(theta), math.sin(theta)])
        for k in range(2):
            lo = zone_center[k] - zone_half, zone_center[k] + zone_half
            if center[k] < lo[0] or center[k] > lo[1]:
                center[k] = min(max(center[k], lo[0]), lo[1])
                theta = math.pi - theta if k == 0 else -theta
    occlusions = occlusions or {}
    return [TargetScript(id=j + 1, positions=paths[j],
                         occlusions=tuple(occlusions.get(j + 1, ())))
            for j in range(n_targets)]


def waypoint_target_script(tid: int, waypoints, cfg: ObservationConfig, n_steps: int,
                           occlusions: tuple = ()) -> TargetScript:
    """Linear interpolation through (t, x, y) waypoints, altitude from terrain."""
    wps = sorted(waypoints)
    times = np.array([w[0] for w in wps])
    pts = np.array([[w[1], w[2]] for w in wps])
    dt = cfg.limits.dt
    out = np.empty((n_steps + 1, 3))
    for i in range(n_steps + 1):
        t = min(i * dt, times[-1])
        x = np.interp(t, times, pts[:, 0])
        y = np.interp(t, times, pts[:, 1])
        out[i] = [x, y, terrain_height(np.array([x, y]))]
    return TargetScript(id=tid, positions=out, occlusions=occlusions)


def measure_targets(tracks, noise: float, rng: np.random.Generator | None):
    """Controller's view: multiplicative per-component perturbation of positions."""
    if noise <= 0 or rng is None:
        return tracks
    out = []
    for t in tracks:
        wobble = 1.0 + noise * rng.uniform(-1.0, 1.0, size=t.pos.shape)
        out.append(TargetTrack(id=t.id, pos=t.pos * wobble, observable=t.observable))
    return out


# ---------------------------------------------------------------------------
# scenario runner

def run_observation(cfg: ObservationConfig, scripts, seed: int, controller: str = "proposed",
                    noise_rng: np.random.Generator | None = None,
                    header: dict | None = None) -> trace_mod.Trace:
    """Full mission: to-sphere, on-sphere dwell, retreat. Emits one row per step.

    Bearings in the trace are computed against true target positions; the
    controller sees the (optionally noisy) measured ones.
    """
    dt = cfg.limits.dt
    n_steps = int(round(cfg.duration / dt))
    drone = DroneState(pos=cfg.D_s.copy(), heading=unit(cfg.F - cfg.D_s))
    phase = PHASE_TO_SPHERE
    retreat_at = cfg.retreat_at()

    ids = [s.id for s in scripts]
    columns = ["t"] + [f"beta_{i}" for i in ids] + ["beta_m", "dist_F", "phase"]
    tr = trace_mod.Trace(kind="observe", columns=columns,
                         header=dict(header or {}, seed=seed, dt=dt,
                                     controller=controller, version=trace_mod.__version__))

    max_beta_m = float("-inf")
    t_arrive = float("nan")
    t_entry = {i: float("nan") for i in ids}
    t_leave = {i: float("nan") for i in ids}

    for i in range(n_steps + 1):
        t = i * dt
        tracks = [s.track(i, t) for s in scripts]
        measured = measure_targets(tracks, cfg.noise, noise_rng)

        dist_f = norm(cfg.F - drone.pos)
        # visual-field entry/exit bookkeeping (true geometry)
        for tk in tracks:
            d = norm(tk.pos - drone.pos)
            if d <= cfg.visual_range:
                if math.isnan(t_entry[tk.id]):
                    t_entry[tk.id] = t
                t_leave[tk.id] = t

        rep_true = bearing_report(drone.pos, tracks, cfg.R)
        row = [t] + [rep_true.betas.get(j, float("nan")) for j in ids]
        row += [rep_true.beta_m, dist_f, phase]
        tr.add_row(row)
        if phase in (PHASE_ON_SPHERE,) and not math.isnan(rep_true.beta_m):
            max_beta_m = max(max_beta_m, rep_true.beta_m)

        if i == n_steps:
            break

        # phase transitions read true drone geometry
        if phase == PHASE_TO_SPHERE and abs(dist_f - cfg.L_u) <= cfg.sphere_arrival_tol:
            phase = PHASE_ON_SPHERE
            t_arrive = t
        if phase == PHASE_ON_SPHERE and t >= retreat_at:
            phase = PHASE_RETREAT
        if phase == PHASE_RETREAT and norm(drone.pos - cfg.D_s) <= cfg.home_arrival_tol:
            phase = PHASE_DONE

        if phase == PHASE_DONE:
            ctrl = ControlInput(u=np.zeros_like(drone.pos), v=0.0)
        elif controller == "benchmark":
            ctrl = benchmark_step(drone, phase, cfg)
        elif phase == PHASE_TO_SPHERE:
            if abs(dist_f - cfg.L_u) <= cfg.capture_band:
                ctrl = on_sphere_step(drone, measured, cfg)   # braking capture band
            else:
                ctrl = to_sphere_step(drone, measured, cfg)
        elif phase == PHASE_ON_SPHERE:
            ctrl = on_sphere_step(drone, measured, cfg)
        else:
            ctrl = retreat_step(drone, measured, cfg)
        drone = step(drone, ctrl, dt)
        if abs(norm(drone.heading) - 1.0) > 1e-9:
            raise trace_mod.InvariantViolation("unit heading", t)

    tr.complete = phase == PHASE_DONE
    tr.summary = {
        "max_beta_m_on_sphere": max_beta_m if max_beta_m > float("-inf") else float("nan"),
        "max_beta_m": float(np.nanmax([r[len(ids) + 1] for r in tr.rows])),
        "t_arrive": t_arrive,
        "t_retreat": retreat_at,
        "final_dist_Ds": norm(drone.pos - cfg.D_s),
    }
    for j in ids:
        tr.summary[f"t_e_{j}"] = t_entry[j]
        tr.summary[f"t_l_{j}"] = t_leave[j]
    return tr
