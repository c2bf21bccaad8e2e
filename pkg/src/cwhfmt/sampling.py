"""Deterministic low-dispersion state sampling with feasibility/safety filtering.

Samples come from the Halton sequence (radical inverse in the first d prime
bases, index starting at 1), scaled into a per-subplan box.  Planar problems
sample 4 coordinates (dx, dy, vx, vy) and pin the out-of-plane pair to zero.
Candidates failing the free-space test or the abort-safety certificate are
rejected and the index stream continues, so the output is a pure function of
its inputs.  Goal-region samples are produced by a deterministic cube-to-ball
map rather than rejection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRIMES = (2, 3, 5, 7, 11, 13)


class SamplingExhausted(Exception):
    """Acceptance stalled; the sample space is over-constrained."""


# Rejection guard: give up after this many consecutive rejected candidates
# (rejection rate above 99.9% over the window).
_WINDOW = 20000


def halton(index: int, dim: int) -> np.ndarray:
    """Halton point for a 1-based index in the unit cube of dimension dim."""
    if index < 1:
        raise ValueError("Halton index starts at 1")
    if dim > len(PRIMES):
        raise ValueError("dimension exceeds available prime bases")
    out = np.empty(dim)
    for d in range(dim):
        b = PRIMES[d]
        f = 1.0
        r = 0.0
        i = index
        while i > 0:
            f /= b
            r += f * (i % b)
            i //= b
        out[d] = r
    return out


def halton_block(start: int, count: int, dim: int) -> np.ndarray:
    """Rows start .. start+count-1 of the Halton sequence."""
    out = np.empty((count, dim))
    for k in range(count):
        out[k] = halton(start + k, dim)
    return out


@dataclass(frozen=True)
class SampleSpace:
    """Axis-aligned sampling box for one subplan.

    lower/upper are full 6-vectors; in planar mode the z and vz entries are
    ignored (forced to zero).
    """

    lower: np.ndarray
    upper: np.ndarray
    planar: bool = True

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        active = [0, 1, 3, 4] if self.planar else list(range(6))
        if not np.all(lo[active] < hi[active]):
            raise ValueError("sample space box must have lower < upper")

    @property
    def dim(self) -> int:
        return 4 if self.planar else 6

    def scale(self, unit_pts: np.ndarray) -> np.ndarray:
        """Map unit-cube points (n, dim) into full 6-D states."""
        n = unit_pts.shape[0]
        states = np.zeros((n, 6))
        cols = [0, 1, 3, 4] if self.planar else list(range(6))
        for k, c in enumerate(cols):
            states[:, c] = self.lower[c] + unit_pts[:, k] * (self.upper[c] - self.lower[c])
        return states

    def contains(self, x, margin: float = 0.0) -> bool:
        cols = [0, 1, 3, 4] if self.planar else list(range(6))
        x = np.asarray(x)
        return bool(
            np.all(x[cols] >= self.lower[cols] - margin)
            and np.all(x[cols] <= self.upper[cols] + margin)
        )


@dataclass(frozen=True)
class GoalRegion:
    """Position/velocity ball pair around a goal state."""

    center: np.ndarray
    eps_r: float
    eps_v: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        if self.eps_r < 0.0 or self.eps_v < 0.0:
            raise ValueError("goal tolerances must be non-negative")

    def contains(self, x) -> bool:
        x = np.asarray(x)
        dr = np.linalg.norm(x[0:3] - self.center[0:3])
        dv = np.linalg.norm(x[3:6] - self.center[3:6])
        return dr <= self.eps_r and dv <= self.eps_v


@dataclass(frozen=True)
class SampleSet:
    states: np.ndarray
    n: int
    n_goal: int

    @property
    def total(self) -> int:
        return self.n + self.n_goal


def _unit_to_ball_2d(u, v):
    rad = np.sqrt(u)
    ang = 2.0 * np.pi * v
    return rad * np.cos(ang), rad * np.sin(ang)


def _unit_to_ball_3d(u, v, w):
    rad = np.cbrt(u)
    cosphi = 1.0 - 2.0 * v
    sinphi = np.sqrt(np.maximum(0.0, 1.0 - cosphi * cosphi))
    ang = 2.0 * np.pi * w
    return rad * sinphi * np.cos(ang), rad * sinphi * np.sin(ang), rad * cosphi


def goal_ball_states(unit_pts: np.ndarray, goal: GoalRegion, planar: bool) -> np.ndarray:
    """Deterministic cube-to-ball map into the goal region (measure-preserving)."""
    n = unit_pts.shape[0]
    states = np.tile(goal.center, (n, 1))
    if planar:
        px, py = _unit_to_ball_2d(unit_pts[:, 0], unit_pts[:, 1])
        vx, vy = _unit_to_ball_2d(unit_pts[:, 2], unit_pts[:, 3])
        states[:, 0] += goal.eps_r * px
        states[:, 1] += goal.eps_r * py
        states[:, 3] += goal.eps_v * vx
        states[:, 4] += goal.eps_v * vy
    else:
        px, py, pz = _unit_to_ball_3d(unit_pts[:, 0], unit_pts[:, 1], unit_pts[:, 2])
        vx, vy, vz = _unit_to_ball_3d(unit_pts[:, 3], unit_pts[:, 4], unit_pts[:, 5])
        states[:, 0:3] += goal.eps_r * np.column_stack([px, py, pz])
        states[:, 3:6] += goal.eps_v * np.column_stack([vx, vy, vz])
    return states


def sample_free(space: SampleSpace, n: int, accept, goal: GoalRegion | None = None,
                n_goal: int = 0, block: int = 512) -> SampleSet:
    """Accept n box samples plus n_goal goal-ball samples through a filter.

    ``accept`` is a vectorized predicate mapping (m, 6) states to (m,) bools
    (free-space membership AND abort-safety certification).  The first stored
    goal sample is the goal center itself, which must pass the filter.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    dim = space.dim

    def collect(count, to_states, start_index, what):
        """First `count` accepted candidates in stream order; block-invariant."""
        rows = []
        taken = 0
        index = start_index
        rejected_run = 0
        while taken < count:
            pts = halton_block(index, block, dim)
            states = to_states(pts)
            ok = np.asarray(accept(states), dtype=bool)
            hits = np.flatnonzero(ok)
            need = count - taken
            if hits.size >= need:
                rows.append(states[hits[:need]])
                return np.vstack(rows), index + int(hits[need - 1]) + 1
            if hits.size:
                rows.append(states[hits])
                taken += hits.size
                rejected_run = int(block - 1 - hits[-1])
            else:
                rejected_run += block
            index += block
            if rejected_run >= _WINDOW:
                raise SamplingExhausted(
                    f"{what} acceptance stalled after {rejected_run} consecutive rejections"
                )
        return np.vstack(rows), index

    box_states, index = collect(n, space.scale, 1, "sample-space")

    goal_states = np.empty((0, 6))
    if goal is not None and n_goal > 0:
        center_ok = np.asarray(accept(goal.center[None, :]), dtype=bool)[0]
        if not center_ok:
            raise SamplingExhausted("goal center fails the feasibility/safety filter")
        rows = [goal.center[None, :]]
        if n_goal > 1:
            ball, _ = collect(
                n_goal - 1, lambda pts: goal_ball_states(pts, goal, space.planar), index, "goal-ball"
            )
            rows.append(ball)
        goal_states = np.vstack(rows)

    states = np.vstack([box_states, goal_states]) if goal_states.size else box_states
    return SampleSet(states=states, n=n, n_goal=int(goal_states.shape[0]))
