"""Fuel-optimal, actively-safe rendezvous planning near circular orbits.

Library layout (one module per subsystem):

* :mod:`cwhfmt.dynamics` -- closed-form impulsive CWH propagation
* :mod:`cwhfmt.steering` -- minimum-fuel two-impulse boundary-value solver
* :mod:`cwhfmt.reachability` -- cost-threshold neighbor sets and ellipsoidal bounds
* :mod:`cwhfmt.geometry` -- obstacles, plume checks, trajectory feasibility
* :mod:`cwhfmt.allocation` -- thruster delta-v allocation LP and attitude policy
* :mod:`cwhfmt.safety` -- one-burn abort certification against thruster failures
* :mod:`cwhfmt.sampling` -- deterministic Halton sampling with safety filtering
* :mod:`cwhfmt.planner` -- batch tree planner over precomputed graph data
* :mod:`cwhfmt.smoothing` -- fixed-burn-time convex cost reduction
* :mod:`cwhfmt.scenario` / :mod:`cwhfmt.cli` -- scenario files and the command line

Hot kernels run through numba by default with a pure-numpy fallback; see
:mod:`cwhfmt.backend`.
"""

__version__ = "0.1.0"
