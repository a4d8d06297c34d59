"""Run configuration, run traces and seeded per-particle random streams."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CboConfig:
    """Parameters shared by every CBO solver.

    ``additive_sigma`` defaults to ``sigma * delta``; the additive
    exploration term is applied at every iteration.
    """

    beta: float = 200.0
    lam: float = 1.0
    sigma: float = 0.06
    additive_sigma: float = None
    delta: float = 1.0
    dt: float = 0.2
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.additive_sigma is None:
            object.__setattr__(self, "additive_sigma", self.sigma * self.delta)
        if self.beta <= 0 or self.lam <= 0 or self.dt <= 0:
            raise ValueError("beta, lam and dt must be positive")
        if self.sigma < 0 or self.additive_sigma < 0:
            raise ValueError("noise levels must be nonnegative")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")

    def with_(self, **changes):
        if "sigma" in changes and "additive_sigma" not in changes:
            changes["additive_sigma"] = None
        base = {k: getattr(self, k) for k in self.__dataclass_fields__}
        base.update(changes)
        return CboConfig(**base)


@dataclass
class RunTrace:
    """Per-iteration record of one solver run at a fixed dimension ``M``.

    ``consensus[i]`` is the objective at the consensus point after
    ``iters[i]`` updates.  The run result is the minimum of that sequence
    (or the initial consensus value when no iteration was performed).
    """

    solver: str
    M: int
    rank: int
    initial_consensus: float
    iters: list = field(default_factory=list)
    consensus: list = field(default_factory=list)
    ensemble_min: list = field(default_factory=list)
    ensemble_mean: list = field(default_factory=list)
    best_value: float = np.inf
    best_iter: int = 0
    best_point: np.ndarray = field(default=None, repr=False)
    max_structure_residual: float = 0.0

    def record(self, k, consensus_value, energies, point):
        self.iters.append(k)
        self.consensus.append(float(consensus_value))
        self.ensemble_min.append(float(np.min(energies)))
        self.ensemble_mean.append(float(np.mean(energies)))
        if consensus_value < self.best_value:
            self.best_value = float(consensus_value)
            self.best_iter = k
            self.best_point = point

    def finish(self, initial_point):
        if not self.iters:
            self.best_value = self.initial_consensus
            self.best_iter = 0
            self.best_point = initial_point
        return self


def particle_streams(seed, level, count):
    """Independent generators for particles ``0..count-1`` at dimension ``level``.

    Each stream is keyed by ``(level, j)`` under the master seed, so a
    particle draws the same numbers regardless of which solver, ensemble
    size ordering or worker runs it.
    """
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(level, j))))
        for j in range(count)
    ]


def draw_normals(streams, shape):
    """Stack one ``standard_normal(shape)`` draw from each stream."""
    return np.stack([g.standard_normal(shape) for g in streams])
