"""Desk-scale offline RL harness on a deterministic gridworld.

Stands in for a full offline RL stack at a size where ground truth is
computable: generate a mixed-quality episodic dataset, label it, run
tabular Q-iteration restricted to dataset support, and roll out the greedy
policy. The goal transition pays 1, everything else 0, so an episode's
true return is simply whether it reached the goal.

Rewards are attached per state: rewards[t] belongs to the transition
(s_t, a_t, s_{t+1}); the final entry has no outgoing transition and is 0.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .costs import CostKind
from .dataset_io import EpisodicDataset, return_correlations
from .errors import EmptyDataset, InvalidCounts
from .labeler import (
    LabelConfig,
    LabeledTrajectory,
    PostScale,
    ScaleMode,
    label_dataset,
    post_scale_rewards,
    squash,
    uds_rewards,
    uniform_plan_rewards,
)
from .measures import FeatureMode, Trajectory
from .solver import SinkhornParams

# Fixed action order; greedy ties resolve to the first maximizer.
ACTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))  # right, left, up, down
N_ACTIONS = 4
MEDIUM_EPSILON = 0.3
Q_CONVERGENCE_TOL = 1e-8


@dataclass(frozen=True)
class Gridworld:
    """Deterministic grid MDP with a single absorbing goal."""

    width: int
    height: int
    start: tuple[int, int]
    goal: tuple[int, int]
    step_reward: float = 0.0
    goal_reward: float = 1.0
    horizon: int = 0  # 0 means the default 4 * (width + height)
    discount: float = 0.99

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must have at least one cell per axis")
        for cell in (self.start, self.goal):
            x, y = cell
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"cell {cell} outside {self.width}x{self.height} grid")
        if self.start == self.goal:
            raise ValueError("start and goal must differ")
        if self.horizon == 0:
            object.__setattr__(self, "horizon", 4 * (self.width + self.height))
        if self.horizon < self.manhattan_distance():
            raise ValueError(
                f"horizon {self.horizon} shorter than start-goal distance "
                f"{self.manhattan_distance()}"
            )
        if not 0 < self.discount < 1:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")

    def manhattan_distance(self) -> int:
        return abs(self.start[0] - self.goal[0]) + abs(self.start[1] - self.goal[1])

    def step(self, cell: tuple[int, int], action: int) -> tuple[int, int]:
        """Deterministic move; walking into a wall stays put."""
        dx, dy = ACTIONS[action]
        nx, ny = cell[0] + dx, cell[1] + dy
        if 0 <= nx < self.width and 0 <= ny < self.height:
            return (nx, ny)
        return cell

    def observation(self, cell: tuple[int, int]) -> np.ndarray:
        """Feature vector (x, y scaled to [0, 1], constant 1).

        The trailing 1 keeps every feature vector away from the zero
        vector, where the cosine distance would be degenerate.
        """
        x = cell[0] / (self.width - 1) if self.width > 1 else 0.0
        y = cell[1] / (self.height - 1) if self.height > 1 else 0.0
        return np.array([x, y, 1.0])

    def decode_cell(self, obs: np.ndarray) -> tuple[int, int]:
        x = int(round(float(obs[0]) * (self.width - 1))) if self.width > 1 else 0
        y = int(round(float(obs[1]) * (self.height - 1))) if self.height > 1 else 0
        return (x, y)

    def shortest_path_action(self, cell: tuple[int, int]) -> int:
        """Move toward the goal, horizontal before vertical."""
        if cell[0] != self.goal[0]:
            return 0 if self.goal[0] > cell[0] else 1
        return 2 if self.goal[1] > cell[1] else 3


def _rollout(env: Gridworld, rng: np.random.Generator | None, eps: float, ep_id: str) -> Trajectory:
    cells = [env.start]
    actions: list[int] = []
    cell = env.start
    for _ in range(env.horizon):
        if cell == env.goal:
            break
        if rng is not None and eps > 0 and rng.random() < eps:
            action = int(rng.integers(N_ACTIONS))
        else:
            action = env.shortest_path_action(cell)
        actions.append(action)
        cell = env.step(cell, action)
        cells.append(cell)
    T = len(cells)
    rewards = np.zeros(T)
    for t in range(T - 1):
        rewards[t] = env.goal_reward if cells[t + 1] == env.goal else env.step_reward
    return Trajectory(
        observations=np.array([env.observation(c) for c in cells]),
        actions=np.array([[float(a)] for a in actions]) if actions else np.zeros((0, 1)),
        rewards=rewards,
        terminals=np.array([c == env.goal for c in cells]),
        id=ep_id,
    )


def ground_truth_rewards(env: Gridworld, traj: Trajectory) -> np.ndarray:
    """Recompute the environment rewards of an episode from its states."""
    cells = [env.decode_cell(o) for o in traj.observations]
    rewards = np.zeros(len(cells))
    for t in range(len(cells) - 1):
        rewards[t] = env.goal_reward if cells[t + 1] == env.goal else env.step_reward
    return rewards


def generate_dataset(
    env: Gridworld, n_expert: int, n_medium: int, n_random: int, seed: int
) -> tuple[EpisodicDataset, EpisodicDataset]:
    """Roll out expert, noisy-expert and uniform-random episodes.

    Returns (experts, unlabeled). Expert episodes keep their ground-truth
    rewards; the unlabeled set has rewards stripped, with each episode's
    true return stashed in the metadata under ``true_returns`` for
    diagnostics. Identical seeds produce identical datasets.
    """
    if n_expert < 1:
        raise InvalidCounts(f"need at least one expert episode, got {n_expert}")
    if n_medium < 0 or n_random < 0:
        raise InvalidCounts("episode counts must be nonnegative")
    rng = np.random.default_rng(seed)
    experts = [_rollout(env, rng, 0.0, f"expert-{i:03d}") for i in range(n_expert)]
    mixed = [
        _rollout(env, rng, MEDIUM_EPSILON, f"medium-{i:03d}") for i in range(n_medium)
    ]
    mixed += [_rollout(env, rng, 1.0, f"random-{i:03d}") for i in range(n_random)]

    true_returns = {ep.id: ep.episodic_return() for ep in mixed}
    stripped = [
        Trajectory(
            observations=ep.observations,
            actions=ep.actions,
            rewards=None,
            terminals=ep.terminals,
            id=ep.id,
        )
        for ep in mixed
    ]
    expert_ds = EpisodicDataset(episodes=experts, metadata={"split": "expert"})
    unlabeled_ds = EpisodicDataset(
        episodes=stripped,
        metadata={"split": "unlabeled", "true_returns": json.dumps(true_returns)},
    )
    return expert_ds, unlabeled_ds


@dataclass
class TabularQ:
    """State-action values over cells actually visited by the dataset."""

    values: dict[tuple[tuple[int, int], int], float]
    trained_sweeps: int

    def value(self, cell: tuple[int, int], action: int) -> float:
        return self.values.get((cell, action), 0.0)


def _decode_transitions(env: Gridworld, dataset: list[LabeledTrajectory]):
    cells_index: dict[tuple[int, int], int] = {}

    def cid(cell):
        if cell not in cells_index:
            cells_index[cell] = len(cells_index)
        return cells_index[cell]

    s_list, a_list, r_list, sn_list, term_list = [], [], [], [], []
    for lt in dataset:
        traj = lt.base
        cells = [env.decode_cell(o) for o in traj.observations]
        n_moves = 0 if traj.actions is None else traj.actions.shape[0]
        for t in range(min(n_moves, len(cells) - 1)):
            s_list.append(cid(cells[t]))
            a_list.append(int(round(float(traj.actions[t][0]))))
            r_list.append(float(lt.ot_rewards[t]))
            sn_list.append(cid(cells[t + 1]))
            if traj.terminals is not None:
                term_list.append(bool(traj.terminals[t + 1]))
            else:
                term_list.append(cells[t + 1] == env.goal)
    return (
        cells_index,
        np.array(s_list, dtype=np.int64),
        np.array(a_list, dtype=np.int64),
        np.array(r_list),
        np.array(sn_list, dtype=np.int64),
        np.array(term_list, dtype=bool),
    )


def fit_offline_q(
    dataset: list[LabeledTrajectory], env: Gridworld, sweeps: int = 4000
) -> TabularQ:
    """Synchronous Q-iteration over dataset transitions only.

    Q(s, a) <- mean over matching transitions of r + gamma * max Q(s', a'),
    where the max runs over actions the dataset actually takes at s'
    (support restriction) and terminal transitions bootstrap to zero.
    Stops when the largest update falls below 1e-8.
    """
    cells_index, S, A, R, SN, TERM = _decode_transitions(env, dataset)
    if len(S) == 0:
        raise EmptyDataset("no transitions to fit on")
    n_states = len(cells_index)
    seen = np.zeros((n_states, N_ACTIONS), dtype=bool)
    seen[S, A] = True
    any_seen = seen.any(axis=1)
    pair = S * N_ACTIONS + A
    upairs, inv = np.unique(pair, return_inverse=True)
    counts = np.bincount(inv).astype(np.float64)
    gamma = env.discount

    Q = np.zeros((n_states, N_ACTIONS))
    trained = 0
    for sweep in range(sweeps):
        trained = sweep + 1
        masked = np.where(seen, Q, -np.inf)
        V = masked.max(axis=1)
        V[~any_seen] = 0.0
        targets = R + gamma * np.where(TERM, 0.0, V[SN])
        sums = np.bincount(inv, weights=targets, minlength=len(upairs))
        new_values = sums / counts
        delta = float(np.abs(new_values - Q[upairs // N_ACTIONS, upairs % N_ACTIONS]).max())
        Q[upairs // N_ACTIONS, upairs % N_ACTIONS] = new_values
        if delta < Q_CONVERGENCE_TOL:
            break

    values = {}
    for cell, idx in cells_index.items():
        for action in range(N_ACTIONS):
            if seen[idx, action]:
                values[(cell, action)] = float(Q[idx, action])
    return TabularQ(values=values, trained_sweeps=trained)


def evaluate_policy(q: TabularQ, env: Gridworld, episodes: int = 1) -> float:
    """Greedy rollout success rate; deterministic, so one episode suffices."""
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    successes = 0
    for _ in range(episodes):
        cell = env.start
        for _ in range(env.horizon):
            if cell == env.goal:
                break
            qs = [q.value(cell, a) for a in range(N_ACTIONS)]
            cell = env.step(cell, int(np.argmax(qs)))
        successes += cell == env.goal
    return successes / episodes


# ---------------------------------------------------------------------------
# Demo configuration and end-to-end run
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarnessConfig:
    """Everything needed to reproduce one end-to-end demo run."""

    env: Gridworld
    n_expert: int = 1
    n_medium: int = 20
    n_random: int = 80
    seed: int = 7
    label: LabelConfig = field(default_factory=LabelConfig)
    sweeps: int = 4000


def reference_config() -> HarnessConfig:
    """The seeded 8x8 configuration used by the acceptance checks.

    The squash exponent and downward shift are sized to this grid's cost
    scale: shifting every squashed reward below zero makes lingering
    strictly unprofitable, so the greedy policy heads for the terminal
    goal along the least-costly (most expert-like) corridor.
    """
    return HarnessConfig(
        env=Gridworld(width=8, height=8, start=(0, 0), goal=(7, 7)),
        n_expert=1,
        n_medium=20,
        n_random=80,
        seed=7,
        label=LabelConfig(
            cost=CostKind.COSINE,
            features=FeatureMode.STATE,
            sinkhorn=SinkhornParams(epsilon=0.01, max_iterations=1000),
            squash_alpha=5.0,
            squash_beta=512.0,
            squash_scale=ScaleMode.PLAIN,
            post_scale=PostScale.shift(-16.0),
        ),
        sweeps=4000,
    )


def _post_scale_to_str(mode: PostScale) -> str:
    if mode.kind == "none":
        return "none"
    if mode.kind == "return-range":
        return f"return-range:{mode.value!r}"
    return f"shift:{mode.value!r}"


def parse_post_scale(text: str) -> PostScale:
    text = text.strip()
    if text == "none":
        return PostScale.none()
    if text.startswith("return-range"):
        _, _, val = text.partition(":")
        return PostScale.return_range(float(val) if val else 1000.0)
    if text.startswith("shift:"):
        return PostScale.shift(float(text.split(":", 1)[1]))
    raise ValueError(f"unknown post-scale spec {text!r}")


def save_harness_config(path, config: HarnessConfig) -> None:
    """Serialize a demo configuration as plain key = value lines."""
    env = config.env
    label = config.label
    lines = [
        f"width = {env.width}",
        f"height = {env.height}",
        f"start = {env.start[0]},{env.start[1]}",
        f"goal = {env.goal[0]},{env.goal[1]}",
        f"horizon = {env.horizon}",
        f"discount = {env.discount!r}",
        f"step_reward = {env.step_reward!r}",
        f"goal_reward = {env.goal_reward!r}",
        f"n_expert = {config.n_expert}",
        f"n_medium = {config.n_medium}",
        f"n_random = {config.n_random}",
        f"seed = {config.seed}",
        f"cost = {label.cost.value}",
        f"features = {label.features.value}",
        f"epsilon = {label.sinkhorn.epsilon!r}",
        f"max_iterations = {label.sinkhorn.max_iterations}",
        f"squash_mode = {label.squash_scale.value}",
        f"alpha = {label.squash_alpha!r}",
        f"beta = {label.squash_beta!r}",
        f"post_scale = {_post_scale_to_str(label.post_scale)}",
        f"sweeps = {config.sweeps}",
    ]
    if label.action_dim is not None:
        lines.append(f"action_dim = {label.action_dim}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_harness_config(path) -> HarnessConfig:
    """Parse a key = value demo configuration file."""
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r}; expected key = value")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()

    def cell(text):
        x, y = text.split(",")
        return (int(x), int(y))

    env = Gridworld(
        width=int(raw["width"]),
        height=int(raw["height"]),
        start=cell(raw["start"]),
        goal=cell(raw["goal"]),
        step_reward=float(raw.get("step_reward", 0.0)),
        goal_reward=float(raw.get("goal_reward", 1.0)),
        horizon=int(raw.get("horizon", 0)),
        discount=float(raw.get("discount", 0.99)),
    )
    label = LabelConfig(
        cost=CostKind(raw.get("cost", "cosine")),
        features=FeatureMode(raw.get("features", "state")),
        sinkhorn=SinkhornParams(
            epsilon=float(raw.get("epsilon", 0.01)),
            max_iterations=int(raw.get("max_iterations", 1000)),
        ),
        squash_alpha=float(raw.get("alpha", 5.0)),
        squash_beta=float(raw.get("beta", 5.0)),
        squash_scale=ScaleMode(raw.get("squash_mode", "plain")),
        action_dim=int(raw["action_dim"]) if "action_dim" in raw else None,
        post_scale=parse_post_scale(raw.get("post_scale", "none")),
    )
    return HarnessConfig(
        env=env,
        n_expert=int(raw.get("n_expert", 1)),
        n_medium=int(raw.get("n_medium", 20)),
        n_random=int(raw.get("n_random", 80)),
        seed=int(raw.get("seed", 7)),
        label=label,
        sweeps=int(raw.get("sweeps", 4000)),
    )


@dataclass
class DemoResult:
    labeler: str
    success_rate: float
    pearson: float
    spearman: float
    degenerate_correlation: bool
    label_seconds: float
    fit_seconds: float
    episodes_labeled: int
    trained_sweeps: int


def _label_with_uniform_plan(
    unlabeled: list[Trajectory], experts: list[Trajectory], cfg: LabelConfig
) -> list[LabeledTrajectory]:
    labeled = []
    for ep in unlabeled:
        rewards = [uniform_plan_rewards(ep, e, cfg) for e in experts]
        best = int(np.argmax([r.sum() for r in rewards]))
        labeled.append(
            LabeledTrajectory(
                base=ep,
                ot_rewards=squash(rewards[best], cfg),
                raw_ot_rewards=rewards[best],
                source_expert=best,
            )
        )
    return post_scale_rewards(labeled, cfg.post_scale)


def _wrap_with_truth(env: Gridworld, episodes: list[Trajectory]) -> list[LabeledTrajectory]:
    out = []
    for ep in episodes:
        rewards = ep.rewards if ep.rewards is not None else ground_truth_rewards(env, ep)
        out.append(LabeledTrajectory(base=ep, ot_rewards=np.asarray(rewards)))
    return out


def run_demo(config: HarnessConfig, labeler: str) -> DemoResult:
    """Generate data, label it with the chosen method, fit Q, evaluate.

    labeler is one of "otr", "uds", "uniform", "truth". Seed-deterministic
    end to end.
    """
    env = config.env
    experts_ds, unlabeled_ds = generate_dataset(
        env, config.n_expert, config.n_medium, config.n_random, config.seed
    )
    experts = experts_ds.episodes
    unlabeled = unlabeled_ds.episodes
    cfg = config.label

    t0 = time.perf_counter()
    if labeler == "otr":
        labeled = label_dataset(unlabeled, experts, cfg)
        expert_part = label_dataset(experts, experts, cfg)
    elif labeler == "uniform":
        labeled = _label_with_uniform_plan(unlabeled, experts, cfg)
        expert_part = _label_with_uniform_plan(experts, experts, cfg)
    elif labeler == "uds":
        merged = uds_rewards(unlabeled, experts, r_min=env.step_reward)
        expert_part, labeled = merged[: len(experts)], merged[len(experts) :]
    elif labeler == "truth":
        labeled = _wrap_with_truth(env, unlabeled)
        expert_part = _wrap_with_truth(env, experts)
    else:
        raise ValueError(f"unknown labeler {labeler!r}")
    label_seconds = time.perf_counter() - t0

    true_returns = [float(ground_truth_rewards(env, ep).sum()) for ep in unlabeled]
    labeled_returns = [lt.episodic_return() for lt in labeled]
    pearson, spearman, degenerate = return_correlations(labeled_returns, true_returns)

    t0 = time.perf_counter()
    q = fit_offline_q(expert_part + labeled, env, sweeps=config.sweeps)
    fit_seconds = time.perf_counter() - t0
    success = evaluate_policy(q, env, episodes=1)

    return DemoResult(
        labeler=labeler,
        success_rate=success,
        pearson=pearson,
        spearman=spearman,
        degenerate_correlation=degenerate,
        label_seconds=label_seconds,
        fit_seconds=fit_seconds,
        episodes_labeled=len(labeled),
        trained_sweeps=q.trained_sweeps,
    )
