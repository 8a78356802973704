# services/billiards_service.py
"""
Event-driven growing-disk compaction ("billiards").

Disks move ballistically inside the fixed unit square while their common
diameter grows as d(t) = d0 + g t. Collisions exchange normal velocity
components and add a separation boost of g per surface. The run stops when
both the relative growth of m over an event window and the mean free path
fall below their tolerances. A "jam" that shows no growth since the start is a
stall (touching disks with no room to move); the diameter is then shrunk a
little and the disks reheated. Jammed results are refined (compact + polish)
to full double precision.

The hot loop works on plain Python floats and lists; numpy is only used for
the per-window spot checks and for normalization.
"""
from __future__ import annotations

import hashlib
import heapq
import logging
import math
from dataclasses import asdict, dataclass, field
from multiprocessing import Pool
from typing import NamedTuple

import numpy as np

from config import (
    EVENT_WINDOW,
    GROWTH_RATE,
    INITIAL_SPEED_SCALE,
    JAM_FREE_PATH_TOL,
    JAM_REL_GROWTH_TOL,
    MAX_EVENTS,
    NEIGHBOR_CELL_SIZE_FACTOR,
    RERANDOMIZE_EVERY,
    TIGHTEN_START_SLACK,
)
from services.errors import (
    DegenerateInput,
    InvalidStart,
    NoConvergence,
    StaleEvent,
)
from services.geometry_service import (
    OVERLAP_TOL_REL,
    Configuration,
    Packing,
    Provenance,
    min_pair_distance,
    round14,
)
from services.polish_service import refine

logger = logging.getLogger(__name__)

PAIR = "pair"
WALL = "wall"
REBUILD = "rebuild"
WALL_NAMES = ("left", "right", "bottom", "top")
NEIGHBOR_MODES = ("cells", "brute")
# a jam that grew less than this fraction of d since the last (re)start is a stall
STALL_GROWTH_REL = 1e-9
RELAX_SHRINK_REL = 1e-3
MAX_RELAXATIONS = 3


@dataclass(frozen=True)
class SimParams:
    growth_rate: float = GROWTH_RATE
    initial_speed_scale: float = INITIAL_SPEED_SCALE
    jam_rel_growth_tol: float = JAM_REL_GROWTH_TOL
    jam_free_path_tol: float = JAM_FREE_PATH_TOL
    event_window: int = EVENT_WINDOW
    max_events: int = MAX_EVENTS
    neighbor_cell_size_factor: float = NEIGHBOR_CELL_SIZE_FACTOR
    rerandomize_every: int = RERANDOMIZE_EVERY
    start_slack: float = TIGHTEN_START_SLACK
    neighbor_mode: str = "cells"
    refine: bool = True
    record_events: bool = False

    def __post_init__(self):
        if not self.growth_rate > 0:
            raise ValueError("growth_rate must be positive")
        if self.initial_speed_scale < 0:
            raise ValueError("initial_speed_scale must be non-negative")
        if not 0 < self.jam_rel_growth_tol < 1e-6:
            raise ValueError("jam_rel_growth_tol must lie in (0, 1e-6)")
        if not self.jam_free_path_tol > 0:
            raise ValueError("jam_free_path_tol must be positive")
        if self.event_window < 1 or self.max_events < 1 or self.rerandomize_every < 1:
            raise ValueError("event counts must be positive")
        if not self.neighbor_cell_size_factor > 1:
            raise ValueError("neighbor_cell_size_factor must exceed 1")
        if not 0 <= self.start_slack < 0.5:
            raise ValueError("start_slack must lie in [0, 0.5)")
        if self.neighbor_mode not in NEIGHBOR_MODES:
            raise ValueError(f"neighbor_mode must be one of {NEIGHBOR_MODES}")

    def digest(self) -> str:
        fields = asdict(self)
        fields.pop("record_events")
        payload = ",".join(f"{key}={fields[key]!r}" for key in sorted(fields))
        return hashlib.sha256(payload.encode()).hexdigest()[:10]


class Event(NamedTuple):
    time: float
    seq: int
    kind: str
    i: int
    j: int  # partner disk, or wall index for WALL events
    epoch_i: int
    epoch_j: int


@dataclass
class SimState:
    """Positions are stored at per-disk timestamps and extrapolated on demand"""

    n: int
    x: list[float]
    y: list[float]
    vx: list[float]
    vy: list[float]
    stamp: list[float]
    d0: float
    g: float
    t: float = 0.0
    seed: int = 0
    brute: bool = False
    epochs: list[int] = field(default_factory=list)
    queue: list[Event] = field(default_factory=list)
    seq: int = 0
    ncell: int = 1
    cells: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    cell_of: list[tuple[int, int]] = field(default_factory=list)
    v_bound: float = 0.0
    horizon: float = math.inf

    def __post_init__(self):
        if not self.epochs:
            self.epochs = [0] * self.n

    def diameter(self, t: float | None = None) -> float:
        return self.d0 + self.g * (self.t if t is None else t)

    def position(self, i: int, t: float) -> tuple[float, float]:
        dt = t - self.stamp[i]
        return self.x[i] + self.vx[i] * dt, self.y[i] + self.vy[i] * dt

    def advance(self, i: int, t: float) -> None:
        self.x[i], self.y[i] = self.position(i, t)
        self.stamp[i] = t

    def advance_all(self, t: float) -> None:
        for i in range(self.n):
            self.advance(i, t)
        self.t = t

    def centers(self, t: float | None = None) -> np.ndarray:
        t = self.t if t is None else t
        return np.array([self.position(i, t) for i in range(self.n)])

    def speeds(self) -> list[float]:
        return [math.hypot(self.vx[i], self.vy[i]) for i in range(self.n)]

    def push(self, event: Event) -> None:
        self.seq += 1
        heapq.heappush(self.queue, event._replace(seq=self.seq))


@dataclass
class PackResult:
    packing: Packing
    jammed: bool
    events_processed: int
    m_trace: list[tuple[float, float]] = field(default_factory=list)
    seed: int = 0
    raw_m: float = 0.0  # m before refinement
    event_log: list[tuple[float, str, int, int]] = field(default_factory=list)
    relaxations: int = 0
    # True only when the contact system was solved to full precision
    refined: bool = False

    @property
    def m(self) -> float:
        return self.packing.m


@dataclass
class SeedStats:
    values: dict[int, float]

    @property
    def min(self) -> float:
        return min(self.values.values())

    @property
    def max(self) -> float:
        return max(self.values.values())

    @property
    def spread(self) -> float:
        return self.max - self.min

    @property
    def distinct(self) -> int:
        return len({round14(v) for v in self.values.values()})

    def to_dict(self) -> dict:
        return {
            "runs": len(self.values),
            "min": self.min,
            "max": self.max,
            "spread": self.spread,
            "distinct": self.distinct,
        }


@dataclass
class BestOf:
    best: PackResult
    stats: SeedStats
    failures: list[int] = field(default_factory=list)


def pair_time(dx, dy, dvx, dvy, d, g) -> float | None:
    """
    Smallest tau >= 0 with |dr + dv tau| = d + g tau, dr = ri - rj, dv = vi - vj.
    None when the pair never meets.
    """
    a = dvx * dvx + dvy * dvy - g * g
    b = dx * dvx + dy * dvy - d * g
    c = dx * dx + dy * dy - d * d
    if b < 0:
        if c <= 0:
            return 0.0
        disc = b * b - a * c
        if disc < 0:
            return None
        return c / (-b + math.sqrt(disc))
    if a >= 0:
        return None
    disc = b * b - a * c
    if disc < 0:
        return 0.0
    return max(0.0, (-b - math.sqrt(disc)) / a)


def wall_times(x, y, vx, vy, d, g) -> list[tuple[int, float]]:
    """Contact times with the walls whose distance to the disk surface is shrinking"""
    half_g = 0.5 * g
    r = 0.5 * d
    out = []
    if vx < half_g:
        out.append((0, max(0.0, (x - r) / (half_g - vx))))
    if vx > -half_g:
        out.append((1, max(0.0, (1.0 - x - r) / (half_g + vx))))
    if vy < half_g:
        out.append((2, max(0.0, (y - r) / (half_g - vy))))
    if vy > -half_g:
        out.append((3, max(0.0, (1.0 - y - r) / (half_g + vy))))
    return out


def _candidates(state: SimState, i: int) -> list[int]:
    if state.brute:
        return [j for j in range(state.n) if j != i]
    cx, cy = state.cell_of[i]
    lo_x, hi_x = max(0, cx - 1), min(state.ncell - 1, cx + 1)
    lo_y, hi_y = max(0, cy - 1), min(state.ncell - 1, cy + 1)
    out = []
    for a in range(lo_x, hi_x + 1):
        for b in range(lo_y, hi_y + 1):
            out.extend(state.cells.get((a, b), ()))
    return sorted(j for j in out if j != i)


def predict_event(state: SimState, i: int, t_now: float | None = None) -> Event | None:
    """Earliest wall or disk contact of disk i after t_now, searched in its neighbour cells"""
    t_now = state.t if t_now is None else t_now
    d = state.diameter(t_now)
    g = state.g
    xi, yi = state.position(i, t_now)
    vxi, vyi = state.vx[i], state.vy[i]

    best_tau = math.inf
    best = None
    for wall, tau in wall_times(xi, yi, vxi, vyi, d, g):
        if tau < best_tau:
            best_tau, best = tau, (WALL, wall)
    for j in _candidates(state, i):
        xj, yj = state.position(j, t_now)
        tau = pair_time(xi - xj, yi - yj, vxi - state.vx[j], vyi - state.vy[j], d, g)
        if tau is not None and tau < best_tau:
            best_tau, best = tau, (PAIR, j)

    if best is None:
        return None
    kind, j = best
    epoch_j = state.epochs[j] if kind == PAIR else 0
    return Event(t_now + best_tau, 0, kind, i, j, state.epochs[i], epoch_j)


def is_current(state: SimState, event: Event) -> bool:
    if event.epoch_i != state.epochs[event.i]:
        return False
    return event.kind != PAIR or event.epoch_j == state.epochs[event.j]


def resolve_collision(state: SimState, event: Event):
    """
    Elastic exchange (disk pair) or reflection (wall) at the event time, plus a
    separation boost of g per growing surface.

    Returns:
        The new velocities of the participants
    """
    if event.kind == REBUILD or not is_current(state, event):
        raise StaleEvent(f"Event {event.kind} for disk {event.i} is no longer valid")
    t = event.time
    g = state.g
    i = event.i
    state.t = t
    state.advance(i, t)
    state.epochs[i] += 1

    if event.kind == WALL:
        if event.j in (0, 1):
            sign = -1.0 if event.j == 0 else 1.0
            state.vx[i] = -state.vx[i] - sign * g
        else:
            sign = -1.0 if event.j == 2 else 1.0
            state.vy[i] = -state.vy[i] - sign * g
        return ((state.vx[i], state.vy[i]),)

    j = event.j
    state.advance(j, t)
    state.epochs[j] += 1
    dx = state.x[j] - state.x[i]
    dy = state.y[j] - state.y[i]
    dist = math.hypot(dx, dy)
    nx, ny = dx / dist, dy / dist
    vi_n = state.vx[i] * nx + state.vy[i] * ny
    vj_n = state.vx[j] * nx + state.vy[j] * ny
    ki = vj_n - vi_n - g
    kj = vi_n - vj_n + g
    state.vx[i] += ki * nx
    state.vy[i] += ki * ny
    state.vx[j] += kj * nx
    state.vy[j] += kj * ny
    return (state.vx[i], state.vy[i]), (state.vx[j], state.vy[j])


def _cell(state: SimState, x: float, y: float) -> tuple[int, int]:
    top = state.ncell - 1
    return (
        min(top, max(0, int(x * state.ncell))),
        min(top, max(0, int(y * state.ncell))),
    )


def _rebuild(state: SimState, params: SimParams) -> None:
    """Advance everyone, rebin into cells and repredict; schedules the next rebuild"""
    t = state.t
    state.advance_all(t)
    d = state.diameter(t)
    max_cells = max(1, int(math.sqrt(state.n)))
    if d > 0:
        state.ncell = max(1, min(max_cells, int(1.0 / (params.neighbor_cell_size_factor * d))))
    else:
        state.ncell = max_cells
    state.cells = {}
    state.cell_of = []
    for i in range(state.n):
        key = _cell(state, state.x[i], state.y[i])
        state.cell_of.append(key)
        state.cells.setdefault(key, []).append(i)

    state.v_bound = 1.5 * max(state.speeds()) + 2.0 * state.g
    if state.ncell <= 2:
        state.horizon = math.inf
    else:
        side = 1.0 / state.ncell
        state.horizon = t + (side - d) / (2.0 * state.v_bound + state.g)

    state.queue = []
    state.epochs = [e + 1 for e in state.epochs]
    if math.isfinite(state.horizon):
        state.push(Event(state.horizon, 0, REBUILD, -1, -1, 0, 0))
    for i in range(state.n):
        event = predict_event(state, i, t)
        if event is not None:
            state.push(event)


def _set_mean_speed(state: SimState, target: float) -> None:
    speeds = state.speeds()
    mean = sum(speeds) / state.n
    if mean <= 0 or target <= 0:
        return
    scale = target / mean
    state.vx = [v * scale for v in state.vx]
    state.vy = [v * scale for v in state.vy]


def _randomize_velocities(state: SimState, rng: np.random.Generator, scale: float) -> None:
    v = rng.normal(size=(state.n, 2))
    state.vx = [float(a) for a in v[:, 0]]
    state.vy = [float(b) for b in v[:, 1]]
    if scale > 0:
        _set_mean_speed(state, scale)
    else:
        state.vx = [0.0] * state.n
        state.vy = [0.0] * state.n


def _relax(state: SimState, params: SimParams, rng: np.random.Generator) -> None:
    """Shrink the diameter and reheat, so a chain of touching disks can buckle"""
    d = state.diameter()
    state.d0 -= RELAX_SHRINK_REL * d
    _randomize_velocities(state, rng, params.initial_speed_scale)
    _rebuild(state, params)


def _simulate(state: SimState, params: SimParams, rng: np.random.Generator):
    """
    Returns:
        (jammed, events_processed, m_trace, event_log, relaxations)
    """
    events = 0
    window_pairs = 0
    window_walls = 0
    window_start = state.t
    d_restart = state.diameter()
    relaxations = 0
    m_prev = 0.0
    m_trace: list[tuple[float, float]] = []
    event_log: list[tuple[float, str, int, int]] = []
    jammed = False

    _rebuild(state, params)
    while events < params.max_events:
        if not state.queue:
            logger.warning("event queue ran dry at t=%.6g", state.t)
            break
        event = heapq.heappop(state.queue)
        if event.kind == REBUILD:
            state.t = event.time
            _rebuild(state, params)
            continue
        if not is_current(state, event):
            if event.epoch_i == state.epochs[event.i]:
                state.t = event.time
                fresh = predict_event(state, event.i, event.time)
                if fresh is not None:
                    state.push(fresh)
            continue

        resolve_collision(state, event)
        events += 1
        if params.record_events:
            event_log.append((event.time, event.kind, event.i, event.j))
        participants = (event.i,) if event.kind == WALL else (event.i, event.j)
        if event.kind == WALL:
            window_walls += 1
        else:
            window_pairs += 1

        if any(math.hypot(state.vx[p], state.vy[p]) > state.v_bound for p in participants):
            _rebuild(state, params)
        else:
            for p in participants:
                fresh = predict_event(state, p, state.t)
                if fresh is not None:
                    state.push(fresh)

        if events % params.event_window == 0:
            d = state.diameter()
            m_now = d / (1.0 - d)
            m_trace.append((state.t, m_now))
            speeds = state.speeds()
            mean_speed = sum(speeds) / state.n
            flights = max(1, 2 * window_pairs + window_walls)
            free_path = mean_speed * (state.t - window_start) * state.n / flights
            growth = (m_now - m_prev) / m_prev if m_prev > 0 else math.inf

            dist, a, b = min_pair_distance(state.centers())
            if dist < d * (1.0 - OVERLAP_TOL_REL):
                logger.warning(
                    "overlap %.3e between disks %d and %d at event %d",
                    (d - dist) / d,
                    a,
                    b,
                    events,
                )
            logger.info(
                "events=%d t=%.9g m=%.15g growth=%.3e free_path=%.3e",
                events,
                state.t,
                m_now,
                growth,
                free_path,
            )

            if growth < params.jam_rel_growth_tol and free_path < params.jam_free_path_tol * d:
                if d - d_restart >= STALL_GROWTH_REL * d:
                    jammed = True
                    break
                # the clock stopped before the disks could move: not a jam
                if relaxations == MAX_RELAXATIONS:
                    logger.warning("run still stalled after %d relaxations", relaxations)
                    break
                relaxations += 1
                logger.warning(
                    "stalled at m=%.15g after %d events, relaxing (%d)",
                    m_now,
                    events,
                    relaxations,
                )
                _relax(state, params, rng)
                d_restart = state.diameter()
                m_prev = 0.0
                window_pairs = window_walls = 0
                window_start = state.t
                continue
            m_prev = m_now
            window_pairs = window_walls = 0
            window_start = state.t
            if events % params.rerandomize_every == 0:
                _randomize_velocities(state, rng, params.initial_speed_scale)
            else:
                _set_mean_speed(state, params.initial_speed_scale)
            _rebuild(state, params)
        elif events % params.rerandomize_every == 0:
            _randomize_velocities(state, rng, params.initial_speed_scale)
            _rebuild(state, params)

    state.advance_all(state.t)
    return jammed, events, m_trace, event_log, relaxations


def _new_state(centers, d0: float, params: SimParams, seed: int, rng) -> SimState:
    n = len(centers)
    state = SimState(
        n=n,
        x=[float(c[0]) for c in centers],
        y=[float(c[1]) for c in centers],
        vx=[0.0] * n,
        vy=[0.0] * n,
        stamp=[0.0] * n,
        d0=d0,
        g=params.growth_rate,
        seed=seed,
        brute=params.neighbor_mode == "brute",
    )
    _randomize_velocities(state, rng, params.initial_speed_scale)
    return state


def _finish(
    state: SimState,
    params: SimParams,
    provenance: Provenance,
    outcome,
) -> PackResult:
    jammed, events, m_trace, event_log, relaxations = outcome
    raw = Packing.from_points(state.centers(), state.diameter(), provenance)
    packing = raw
    refined = False
    if jammed and params.refine:
        packing, refined = refine(raw)
    result = PackResult(
        packing=packing,
        jammed=jammed,
        events_processed=events,
        m_trace=m_trace,
        seed=state.seed,
        raw_m=raw.m,
        event_log=event_log,
        relaxations=relaxations,
        refined=refined,
    )
    if not jammed:
        raise NoConvergence(
            f"No jam after {events} events (seed {state.seed}, m so far {raw.m:.12g})",
            result,
        )
    logger.info("seed %d jammed after %d events: m=%.15g", state.seed, events, packing.m)
    return result


def pack_random(n: int, params: SimParams, seed: int) -> PackResult:
    """Random start with zero diameter, grown until jammed"""
    if n < 2:
        raise DegenerateInput("pack_random needs n >= 2")
    rng = np.random.default_rng(seed)
    centers = rng.random((n, 2))
    while min_pair_distance(centers)[0] == 0.0:
        centers = rng.random((n, 2))
    state = _new_state(centers, 0.0, params, seed, rng)
    provenance = Provenance.simulated(seed, params.digest())
    return _finish(state, params, provenance, _simulate(state, params, rng))


def tighten(config: Configuration, params: SimParams, seed: int) -> PackResult:
    """
    Billiards from a prescribed start; velocities come from the seed. The start
    diameter is shrunk by params.start_slack first.
    """
    overlap = config.max_overlap()
    if overlap > OVERLAP_TOL_REL:
        raise InvalidStart(f"Start configuration overlaps by {overlap:.3e} of the diameter")
    c = config.centers
    if np.any(c < -1e-12) or np.any(c > 1.0 + 1e-12):
        raise InvalidStart("Start configuration leaves the centers-square")

    # physical square of side 1 + d, rescaled onto the unit square
    scale = 1.0 / (1.0 + config.d)
    sim_centers = (np.clip(c, 0.0, 1.0) + 0.5 * config.d) * scale
    rng = np.random.default_rng(seed)
    d0 = config.d * scale * (1.0 - params.start_slack)
    state = _new_state(sim_centers, d0, params, seed, rng)
    label = config.label or "configuration"
    provenance = Provenance(
        "simulated", f"tighten {label} seed={seed} params={params.digest()}"
    )
    return _finish(state, params, provenance, _simulate(state, params, rng))


def _run_seed(job):
    n, params, seed, start = job
    try:
        if start is None:
            return seed, pack_random(n, params, seed), None
        return seed, tighten(start, params, seed), None
    except NoConvergence as exc:
        return seed, exc.result, str(exc)


def best_of(
    n: int,
    params: SimParams,
    seeds,
    start: Configuration | None = None,
    workers: int = 1,
) -> BestOf:
    """
    One run per seed (pack_random, or tighten when a start configuration is
    given). Selects the largest m, ties to the smallest seed.
    """
    seeds = list(seeds)
    if not seeds:
        raise DegenerateInput("best_of needs at least one seed")
    if start is not None and start.n != n:
        raise DegenerateInput(f"start configuration has {start.n} disks, expected {n}")

    jobs = [(n, params, seed, start) for seed in seeds]
    if workers > 1:
        with Pool(processes=workers) as pool:
            outcomes = pool.map(_run_seed, jobs)
    else:
        outcomes = [_run_seed(job) for job in jobs]

    values: dict[int, float] = {}
    failures: list[int] = []
    best: PackResult | None = None
    last_failure = None
    for seed, result, error in sorted(outcomes, key=lambda item: item[0]):
        if error is not None:
            logger.warning("seed %d did not converge: %s", seed, error)
            failures.append(seed)
            last_failure = (error, result)
            continue
        values[seed] = result.m
        if best is None or result.m > best.m:
            best = result

    if best is None:
        message, result = last_failure
        raise NoConvergence(f"All {len(seeds)} seeds failed; last: {message}", result)
    return BestOf(best=best, stats=SeedStats(values), failures=failures)

