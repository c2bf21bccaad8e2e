"""Exact propagation of Clohessy-Wiltshire-Hill relative dynamics.

States are 6-vectors ``[dx, dy, dz, vx, vy, vz]`` in the target's LVLH frame:
radial (positive away from the attractor), in-track, out-of-plane.  The
linearized relative motion about a circular reference orbit admits a closed
trigonometric state-transition matrix, so coasting and impulsive control are
propagated exactly -- no integrator, no matrix exponential.

All times are relative to the start of the maneuver under consideration; the
dynamics are time-invariant so only elapsed durations matter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import get_kernels


def cwh_a_matrix(omega: float) -> np.ndarray:
    """Continuous-time dynamics matrix of the linearized relative motion."""
    a = np.zeros((6, 6))
    a[0:3, 3:6] = np.eye(3)
    a[3, 0] = 3.0 * omega**2
    a[3, 4] = 2.0 * omega
    a[4, 3] = -2.0 * omega
    a[5, 2] = -(omega**2)
    return a


CWH_B = np.vstack([np.zeros((3, 3)), np.eye(3)])


@dataclass(frozen=True)
class OrbitModel:
    """Circular target orbit, fully described by its mean motion.

    The gravitational parameter and reference radius enter the linearized
    dynamics only through ``omega``.
    """

    omega: float

    def __post_init__(self):
        if not (self.omega > 0.0 and np.isfinite(self.omega)):
            raise ValueError("omega must be positive and finite")

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.omega


def make_state(r, v) -> np.ndarray:
    """Assemble a state vector from position [m] and velocity [m/s]."""
    x = np.empty(6)
    x[0:3] = r
    x[3:6] = v
    if not np.all(np.isfinite(x)):
        raise ValueError("state components must be finite")
    return x


def is_planar(x, tol: float = 0.0) -> bool:
    """True when the out-of-plane position and velocity vanish (exactly by default)."""
    return abs(x[2]) <= tol and abs(x[5]) <= tol


@dataclass(frozen=True)
class Impulse:
    """Instantaneous velocity change ``dv`` applied at time ``tau``."""

    dv: np.ndarray
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "dv", np.asarray(self.dv, dtype=np.float64))
        if self.dv.shape != (3,) or not np.all(np.isfinite(self.dv)) or not np.isfinite(self.tau):
            raise ValueError("impulse needs a finite 3-vector dv and finite tau")

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.dv))


@dataclass(frozen=True)
class BurnSchedule:
    """Ordered impulsive burn sequence.

    ``taus`` must be non-decreasing.  Coincident times are permitted (they
    arise at edge junctions before merging); :meth:`merged` sums them.
    """

    taus: np.ndarray = field(default_factory=lambda: np.empty(0))
    dvs: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=np.float64).reshape(-1)
        dvs = np.asarray(self.dvs, dtype=np.float64).reshape(-1, 3)
        if taus.size != dvs.shape[0]:
            raise ValueError("taus and dvs lengths differ")
        if taus.size and np.any(np.diff(taus) < 0.0):
            raise ValueError("burn times must be non-decreasing")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "dvs", dvs)

    @classmethod
    def from_impulses(cls, impulses) -> "BurnSchedule":
        impulses = sorted(impulses, key=lambda b: b.tau)
        return cls(
            np.array([b.tau for b in impulses]),
            np.array([b.dv for b in impulses]).reshape(-1, 3),
        )

    def __len__(self) -> int:
        return int(self.taus.size)

    def __iter__(self):
        for i in range(len(self)):
            yield Impulse(self.dvs[i], float(self.taus[i]))

    def cost_2norm(self) -> float:
        """Sum of burn vector 2-norms."""
        if not len(self):
            return 0.0
        return float(np.linalg.norm(self.dvs, axis=1).sum())

    def merged(self) -> "BurnSchedule":
        """Sum burns sharing the same time into single net vectors.

        By the triangle inequality the merged 2-norm cost never exceeds the
        unmerged cost.  Exact-zero net burns are dropped.
        """
        if not len(self):
            return self
        taus = []
        dvs = []
        i = 0
        while i < len(self):
            j = i
            acc = np.zeros(3)
            while j < len(self) and self.taus[j] == self.taus[i]:
                acc = acc + self.dvs[j]
                j += 1
            if np.any(acc != 0.0):
                taus.append(self.taus[i])
                dvs.append(acc)
            i = j
        if not taus:
            return BurnSchedule()
        return BurnSchedule(np.array(taus), np.array(dvs))

    def shifted(self, dt: float) -> "BurnSchedule":
        return BurnSchedule(self.taus + dt, self.dvs)

    def concat(self, other: "BurnSchedule") -> "BurnSchedule":
        return BurnSchedule(
            np.concatenate([self.taus, other.taus]),
            np.vstack([self.dvs, other.dvs]),
        )


def stm(model: OrbitModel, T: float) -> np.ndarray:
    """Coast state-transition matrix over elapsed time T (negative T inverts)."""
    return get_kernels().stm(model.omega, float(T))


def impulse_matrix(model: OrbitModel, T: float) -> np.ndarray:
    """[Phi(T) B | B] mapping two stacked burns (at 0 and T) to the state at T."""
    return get_kernels().impulse_matrix(model.omega, float(T))


def propagate_coast(model: OrbitModel, x0, T: float) -> np.ndarray:
    """Ballistic propagation: Phi(T) @ x0."""
    return stm(model, T) @ np.asarray(x0, dtype=np.float64)


def propagate_schedule(model: OrbitModel, x0, schedule: BurnSchedule, t: float) -> np.ndarray:
    """State at time t under the schedule; a burn at tau == t is included."""
    return propagate_schedule_grid(model, x0, schedule, np.array([float(t)]))[0]


def propagate_schedule_grid(model: OrbitModel, x0, schedule: BurnSchedule, ts) -> np.ndarray:
    """States at each time in ts (ascending) under the schedule."""
    ts = np.ascontiguousarray(ts, dtype=np.float64)
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    return get_kernels().propagate_grid(model.omega, x0, schedule.taus, schedule.dvs, ts)
