"""Episodic trajectories and their discrete-measure representations.

An episode is compared against a demonstration by viewing both as weighted
empirical measures over feature vectors: one point per step, uniform
weights. Zero-weight padding extends a measure to a common length without
changing the transport problem it defines.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, MissingActions, TargetTooSmall

WEIGHT_SUM_TOL = 1e-9


class FeatureMode(Enum):
    """Which parts of a step make up its feature vector."""

    STATE = "state"
    STATE_ACTION = "state-action"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One episode: observations plus optional actions, rewards, terminals.

    observations has shape (T, d) with T >= 1. actions, when present, has
    shape (T, d_a) or (T - 1, d_a); rewards and terminals, when present,
    have length T (one entry per step).
    """

    observations: np.ndarray
    actions: np.ndarray | None = None
    rewards: np.ndarray | None = None
    terminals: np.ndarray | None = None
    id: str = ""

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.float64)
        if obs.ndim != 2 or obs.shape[0] < 1 or obs.shape[1] < 1:
            raise DimensionMismatch(
                f"observations must be a (T, d) array with T >= 1, got shape {obs.shape}"
            )
        object.__setattr__(self, "observations", obs)
        T = obs.shape[0]
        if self.actions is not None:
            acts = np.asarray(self.actions, dtype=np.float64)
            if acts.ndim != 2 or acts.shape[0] not in (T, T - 1):
                raise DimensionMismatch(
                    f"actions must have shape (T, d_a) or (T-1, d_a) with T={T}, "
                    f"got {acts.shape}"
                )
            object.__setattr__(self, "actions", acts)
        if self.rewards is not None:
            rew = np.asarray(self.rewards, dtype=np.float64)
            if rew.shape != (T,):
                raise DimensionMismatch(
                    f"rewards must have length T={T}, got shape {rew.shape}"
                )
            object.__setattr__(self, "rewards", rew)
        if self.terminals is not None:
            term = np.asarray(self.terminals, dtype=bool)
            if term.shape != (T,):
                raise DimensionMismatch(
                    f"terminals must have length T={T}, got shape {term.shape}"
                )
            object.__setattr__(self, "terminals", term)

    @property
    def length(self) -> int:
        return self.observations.shape[0]

    @property
    def obs_dim(self) -> int:
        return self.observations.shape[1]

    @property
    def action_dim(self) -> int | None:
        return None if self.actions is None else self.actions.shape[1]

    def episodic_return(self) -> float:
        """Sum of stored rewards; raises if the episode carries none."""
        if self.rewards is None:
            raise ValueError(f"episode {self.id!r} has no rewards")
        return float(self.rewards.sum())


@dataclass(frozen=True, eq=False)
class WeightedMeasure:
    """Discrete measure: points (n, d) with nonnegative weights summing to 1.

    Weights are stored explicitly so padded entries can carry exactly zero
    mass.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if pts.ndim != 2:
            raise DimensionMismatch(f"points must be (n, d), got shape {pts.shape}")
        if w.shape != (pts.shape[0],):
            raise DimensionMismatch(
                f"weights must have length {pts.shape[0]}, got shape {w.shape}"
            )
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if not np.any(w > 0):
            raise ValueError("at least one weight must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def trajectory_to_measure(traj: Trajectory, features: FeatureMode) -> WeightedMeasure:
    """Convert an episode into a uniformly weighted empirical measure.

    STATE uses the raw observations. STATE_ACTION concatenates each
    observation with the action taken at the same step; the final state,
    which has no action when the episode stores T - 1 of them, is paired
    with a zero action vector.
    """
    T = traj.length
    if features is FeatureMode.STATE:
        points = traj.observations
    elif features is FeatureMode.STATE_ACTION:
        if traj.actions is None:
            raise MissingActions(
                f"state-action features requested but episode {traj.id!r} has no actions"
            )
        acts = traj.actions
        if acts.shape[0] == T - 1:
            acts = np.vstack([acts, np.zeros((1, acts.shape[1]))])
        points = np.hstack([traj.observations, acts])
    else:  # pragma: no cover - exhaustive enum
        raise ValueError(f"unknown feature mode {features!r}")
    weights = np.full(T, 1.0 / T)
    return WeightedMeasure(points=points, weights=weights)


def pad_measure(m: WeightedMeasure, target_len: int) -> WeightedMeasure:
    """Extend a measure to target_len with zero points of exactly zero weight.

    Padding never changes the transport problem: padded entries carry no
    mass, so any coupling assigns them none.
    """
    n = len(m)
    if target_len < n:
        raise TargetTooSmall(f"target length {target_len} < measure length {n}")
    if target_len == n:
        return WeightedMeasure(points=m.points, weights=m.weights)
    extra = target_len - n
    points = np.vstack([m.points, np.zeros((extra, m.dim))])
    weights = np.concatenate([m.weights, np.zeros(extra)])
    return WeightedMeasure(points=points, weights=weights)
