"""Exact characteristics solver for atomic initial data.

Explicit Euler on the coupled ODE system of agent positions. On Dirac sums
this coincides, atom by atom, with pushing the measure forward through the
one-step flow map x -> x + v[mu] dt, so it serves as the convergence oracle
for the grid scheme.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .grids import AtomicMeasure
from .velocity import VelocityModel, eval_atomic_many


@dataclass(frozen=True)
class ParticleState:
    positions: np.ndarray  # (N, d)
    t: float

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1:
            raise ValueError("positions must be a nonempty (N, d) array")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", p)


@dataclass(frozen=True)
class ParticleTrajectory:
    dt: float
    states: tuple

    def __post_init__(self):
        if not self.states:
            raise ValueError("trajectory needs at least one state")
        n0 = self.states[0].positions.shape[0]
        if any(s.positions.shape[0] != n0 for s in self.states):
            raise ValueError("particle count must stay constant")

    @property
    def final(self) -> ParticleState:
        return self.states[-1]


def to_measure(state: ParticleState) -> AtomicMeasure:
    """Uniform Dirac sum over the particle positions; exact duplicates stack."""
    pos = state.positions
    n = pos.shape[0]
    seen: dict = {}
    stacked: list = []
    for row in map(tuple, pos):
        if row in seen:
            stacked[seen[row]] += 1.0 / n
        else:
            seen[row] = len(stacked)
            stacked.append(1.0 / n)
    if len(stacked) == n:
        return AtomicMeasure(pos, np.full(n, 1.0 / n))
    return AtomicMeasure(np.array(list(seen), dtype=float), np.array(stacked))


def push_forward_atoms(mu: AtomicMeasure, model: VelocityModel, dt: float) -> AtomicMeasure:
    """Push mu forward through the one-step flow map x + v[mu](x) dt."""
    moved = mu.positions + dt * eval_atomic_many(model, mu, mu.positions)
    return AtomicMeasure(moved, mu.weights)


def euler_step(state: ParticleState, model: VelocityModel, dt: float) -> ParticleState:
    """Synchronous Euler update of every particle against the pre-step state."""
    mu = to_measure(state)
    vel = eval_atomic_many(model, mu, state.positions)
    return ParticleState(state.positions + dt * vel, state.t + dt)


def run_particles(x0, model: VelocityModel, T: float, dt: float) -> ParticleTrajectory:
    """round(T/dt) Euler steps from the initial positions x0."""
    if not (T > 0 and dt > 0):
        raise ValueError("T and dt must be positive")
    state = ParticleState(np.asarray(x0, dtype=float), 0.0)
    states = [state]
    for _ in range(max(1, round(T / dt))):
        state = euler_step(state, model, dt)
        states.append(state)
    return ParticleTrajectory(dt, tuple(states))


def write_trajectory_csv(traj: ParticleTrajectory, path) -> None:
    """CSV with one row per (t, particle), sorted by time then particle."""
    d = traj.states[0].positions.shape[1]
    header = ["t", "particle"] + [f"x_{l}" for l in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for s in traj.states:
            for l, p in enumerate(s.positions):
                w.writerow([repr(float(s.t)), l, *(repr(float(v)) for v in p)])
