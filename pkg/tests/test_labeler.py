import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otreward import (
    CostKind,
    LabelConfig,
    LabeledTrajectory,
    PostScale,
    ScaleMode,
    SinkhornParams,
    Trajectory,
    aggregate_over_experts,
    label_dataset,
    ot_rewards_single,
    post_scale_rewards,
    squash,
    uds_rewards,
    uniform_plan_rewards,
)
from otreward.errors import (
    DegenerateReturnRange,
    EmptyExpertSet,
    ExpertRewardsMissing,
    NonFiniteInput,
)

from conftest import make_episode

PLAIN = LabelConfig.plain_preset()


def plain_cfg(**kwargs):
    defaults = dict(
        cost=CostKind.COSINE,
        squash_alpha=1.0,
        squash_beta=1.0,
        squash_scale=ScaleMode.PLAIN,
    )
    defaults.update(kwargs)
    return LabelConfig(**defaults)


def test_self_alignment_rewards_near_zero(rng):
    ep = make_episode(rng, 8, 4)
    raw, coupling = ot_rewards_single(ep, ep, PLAIN)
    assert coupling.converged
    assert np.all(raw >= -1e-3)
    assert np.all(raw <= 0.0)


def test_single_step_pair_reward_is_negative_cost(rng):
    from otreward import cosine_cost

    a = make_episode(rng, 1, 3)
    e = make_episode(rng, 1, 3)
    raw, coupling = ot_rewards_single(a, e, PLAIN)
    assert raw[0] == pytest.approx(-cosine_cost(a.observations[0], e.observations[0]))
    assert coupling.plan[0, 0] == pytest.approx(1.0)


def test_orthogonal_pair_matches_permutation_plan():
    # Cosine costs form [[0, 1], [1, 0]]; the optimal plan is the diagonal
    # permutation, so each step's reward is ~0 at small epsilon.
    ep = Trajectory(observations=[[1.0, 0.0], [0.0, 1.0]])
    raw, _ = ot_rewards_single(ep, ep, plain_cfg(sinkhorn=SinkhornParams(epsilon=0.01)))
    assert np.abs(raw).max() <= 1e-3


def test_rewards_sum_to_negative_transport_cost(rng):
    for _ in range(20):
        ep = make_episode(rng, int(rng.integers(1, 30)), 5)
        ex = make_episode(rng, int(rng.integers(1, 30)), 5)
        raw, coupling = ot_rewards_single(ep, ex, PLAIN)
        assert abs(-raw.sum() - coupling.transport_cost) <= 1e-9


def test_aggregate_single_expert_matches_single(rng):
    ep = make_episode(rng, 6, 3)
    ex = make_episode(rng, 7, 3)
    raw, best = aggregate_over_experts(ep, [ex], PLAIN)
    single, _ = ot_rewards_single(ep, ex, PLAIN)
    assert np.array_equal(raw, single)
    assert best == 0


def test_aggregate_prefers_identical_expert(rng):
    ep = make_episode(rng, 6, 3)
    distant = Trajectory(observations=-5.0 * ep.observations + 40.0)
    raw, best = aggregate_over_experts(ep, [ep, distant], PLAIN)
    assert best == 0


def test_aggregate_argmax_verified_by_resummation(rng):
    ep = make_episode(rng, 9, 4)
    experts = [make_episode(rng, int(rng.integers(3, 12)), 4) for _ in range(3)]
    raw, best = aggregate_over_experts(ep, experts, PLAIN)
    totals = []
    for ex in experts:
        r, _ = ot_rewards_single(ep, ex, PLAIN)
        totals.append(sum(float(v) for v in r))
    assert best == max(range(3), key=lambda k: (totals[k], -k))
    assert raw.sum() == pytest.approx(totals[best])


def test_aggregate_requires_experts(rng):
    with pytest.raises(EmptyExpertSet):
        aggregate_over_experts(make_episode(rng, 3, 2), [], PLAIN)


def test_squash_at_zero_is_alpha():
    cfg = LabelConfig.locomotion_preset(action_dim=6)
    assert squash(np.zeros(3), cfg).tolist() == [5.0, 5.0, 5.0]
    assert squash(np.zeros(1), LabelConfig.antmaze_preset())[0] == 5.0


def test_squash_plain_unit_parameters():
    assert squash(np.array([-1.0]), PLAIN)[0] == pytest.approx(np.exp(-1.0))


def test_squash_locomotion_preset_value():
    # alpha = beta = 5, T = 1000, |A| = 6: s(-0.006) = 5 * exp(-5).
    cfg = LabelConfig.locomotion_preset(action_dim=6)
    assert squash(np.array([-0.006]), cfg)[0] == pytest.approx(
        5.0 * np.exp(-5.0), rel=1e-9
    )


def test_squash_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        squash(np.array([np.nan]), PLAIN)
    with pytest.raises(NonFiniteInput):
        squash(np.array([-np.inf]), PLAIN)


@settings(max_examples=200, deadline=None)
@given(
    r1=st.floats(-10.0, 0.0),
    r2=st.floats(-10.0, 0.0),
    mode=st.sampled_from(list(ScaleMode)),
)
def test_squash_strictly_monotone(r1, r2, mode):
    # Domain kept clear of exp underflow and of gaps below float
    # resolution, where strictness is unrepresentable.
    if abs(r1 - r2) < 1e-9:
        return
    lo, hi = sorted([r1, r2])
    cfg = LabelConfig(
        squash_alpha=2.0,
        squash_beta=3.0,
        squash_scale=mode,
        episode_length=50,
        action_dim=4,
    )
    s = squash(np.array([lo, hi]), cfg)
    assert s[0] < s[1]


def _labeled(rewards, ep_id=""):
    rewards = np.asarray(rewards, dtype=np.float64)
    base = Trajectory(observations=np.zeros((len(rewards), 1)) + 1.0, id=ep_id)
    return LabeledTrajectory(base=base, ot_rewards=rewards)


def test_post_scale_none_is_identity():
    data = [_labeled([1.0, 2.0]), _labeled([3.0])]
    out = post_scale_rewards(data, PostScale.none())
    assert [lt.ot_rewards.tolist() for lt in out] == [[1.0, 2.0], [3.0]]


def test_post_scale_return_range_factor():
    # Returns 0 and 500 give factor 1000 / 500 = 2.
    data = [_labeled([0.0, 0.0]), _labeled([200.0, 300.0])]
    out = post_scale_rewards(data, PostScale.return_range(1000.0))
    assert out[0].ot_rewards.tolist() == [0.0, 0.0]
    assert out[1].ot_rewards.tolist() == [400.0, 600.0]


def test_post_scale_shift():
    data = [_labeled([1.0, 2.5])]
    out = post_scale_rewards(data, PostScale.shift(-2.0))
    assert out[0].ot_rewards.tolist() == [-1.0, 0.5]


def test_post_scale_degenerate_range():
    data = [_labeled([1.0]), _labeled([0.5, 0.5])]
    with pytest.raises(DegenerateReturnRange):
        post_scale_rewards(data, PostScale.return_range())


def test_label_dataset_self_labeling(rng):
    expert = make_episode(rng, 10, 4)
    labeled = label_dataset([expert], [expert], PLAIN)
    assert len(labeled) == 1
    assert np.abs(labeled[0].ot_rewards - 1.0).max() <= 1e-3
    assert labeled[0].source_expert == 0


def test_label_dataset_empty_input(rng):
    assert label_dataset([], [make_episode(rng, 3, 2)], PLAIN) == []


def test_label_dataset_ranks_expert_like_above_distant(rng):
    expert = make_episode(rng, 8, 4)
    near = Trajectory(observations=expert.observations + 0.01 * rng.normal(size=(8, 4)))
    far = Trajectory(observations=rng.normal(size=(8, 4)) * 3.0 + 10.0)
    labeled = label_dataset([far, near], [expert], PLAIN)
    assert labeled[1].episodic_return() > labeled[0].episodic_return()


def test_label_dataset_order_insensitive(rng):
    experts = [make_episode(rng, 6, 3)]
    eps = [make_episode(rng, int(rng.integers(2, 9)), 3, ep_id=str(i)) for i in range(4)]
    forward = label_dataset(eps, experts, PLAIN)
    shuffled = [eps[2], eps[0], eps[3], eps[1]]
    backward = label_dataset(shuffled, experts, PLAIN)
    by_id = {lt.base.id: lt for lt in backward}
    for lt in forward:
        assert np.array_equal(lt.ot_rewards, by_id[lt.base.id].ot_rewards)


def test_label_dataset_parallel_matches_sequential(rng):
    experts = [make_episode(rng, 5, 3)]
    eps = [make_episode(rng, int(rng.integers(2, 10)), 3) for _ in range(6)]
    seq = label_dataset(eps, experts, PLAIN, workers=1)
    par = label_dataset(eps, experts, PLAIN, workers=2)
    for a, b in zip(seq, par):
        assert np.array_equal(a.ot_rewards, b.ot_rewards)
        assert np.array_equal(a.raw_ot_rewards, b.raw_ot_rewards)
        assert a.source_expert == b.source_expert


def test_raw_rewards_nonpositive_and_squashed_in_range(rng):
    experts = [make_episode(rng, 7, 3)]
    eps = [make_episode(rng, int(rng.integers(2, 12)), 3) for _ in range(5)]
    cfg = plain_cfg(squash_alpha=5.0, squash_beta=2.0)
    for lt in label_dataset(eps, experts, cfg):
        assert np.all(lt.raw_ot_rewards <= 0.0)
        assert np.all(lt.ot_rewards > 0.0)
        assert np.all(lt.ot_rewards <= 5.0)


def test_self_labeling_beats_other_episodes_of_same_length(rng):
    # With a shared episode length, no episode can out-earn the expert
    # against itself: every squashed step reward is capped at alpha.
    expert = make_episode(rng, 8, 4)
    others = [make_episode(rng, 8, 4) for _ in range(5)]
    cfg = plain_cfg(sinkhorn=SinkhornParams(epsilon=0.001))
    labeled = label_dataset([expert] + others, [expert], cfg)
    self_return = labeled[0].episodic_return()
    for lt in labeled[1:]:
        assert self_return >= lt.episodic_return() - 1e-6


def test_source_expert_invariant_under_cost_scaling(rng):
    # Scaling every feature vector scales squared-euclidean costs by a
    # constant; with a clear winner the argmax must not move.
    ep = make_episode(rng, 6, 3)
    near = Trajectory(observations=ep.observations + 0.01)
    far = Trajectory(observations=ep.observations + 30.0)
    cfg = plain_cfg(cost=CostKind.SQUARED_EUCLIDEAN)
    _, best = aggregate_over_experts(ep, [far, near], cfg)
    scaled = Trajectory(observations=3.0 * ep.observations)
    scaled_experts = [
        Trajectory(observations=3.0 * far.observations),
        Trajectory(observations=3.0 * near.observations),
    ]
    _, best_scaled = aggregate_over_experts(scaled, scaled_experts, cfg)
    assert best == best_scaled == 1


def test_uniform_plan_single_step_matches_optimal(rng):
    a = make_episode(rng, 1, 3)
    e = make_episode(rng, 1, 3)
    uni = uniform_plan_rewards(a, e, PLAIN)
    opt, _ = ot_rewards_single(a, e, PLAIN)
    assert uni[0] == pytest.approx(opt[0])


def test_uniform_plan_constant_cost():
    # All-identical points give a constant cosine cost of 0.
    ep = Trajectory(observations=np.ones((4, 2)))
    ex = Trajectory(observations=-np.ones((3, 2)))
    uni = uniform_plan_rewards(ep, ex, PLAIN)
    assert np.allclose(uni, -2.0 / 4.0)  # cost 2 everywhere, T = 4


def test_uniform_plan_matches_scalar_loop(rng):
    from otreward import cosine_cost

    ep = make_episode(rng, 5, 3)
    ex = make_episode(rng, 7, 3)
    uni = uniform_plan_rewards(ep, ex, PLAIN)
    for t in range(5):
        expected = -sum(
            cosine_cost(ep.observations[t], ex.observations[j]) / (5 * 7)
            for j in range(7)
        )
        assert uni[t] == pytest.approx(expected, abs=1e-12)


def test_optimal_plan_total_beats_uniform(rng):
    for _ in range(15):
        ep = make_episode(rng, int(rng.integers(2, 12)), 4)
        ex = make_episode(rng, int(rng.integers(2, 12)), 4)
        opt, _ = ot_rewards_single(ep, ex, PLAIN)
        uni = uniform_plan_rewards(ep, ex, PLAIN)
        assert opt.sum() >= uni.sum() - 1e-9


def test_uds_constant_rewards(rng):
    expert = make_episode(rng, 3, 2, with_rewards=True, ep_id="e0")
    stripped = make_episode(rng, 5, 2, ep_id="u0")
    out = uds_rewards([stripped], [expert], r_min=0.0)
    assert [lt.base.id for lt in out] == ["e0", "u0"]
    assert np.array_equal(out[0].ot_rewards, expert.rewards)
    assert np.array_equal(out[1].ot_rewards, np.zeros(5))


def test_uds_expert_rewards_preserved_elementwise():
    expert = Trajectory(observations=np.ones((3, 1)), rewards=[1.0, 2.0, 3.0])
    out = uds_rewards([], [expert], r_min=-1.0)
    assert out[0].ot_rewards.tolist() == [1.0, 2.0, 3.0]


def test_uds_mixed_set(rng):
    experts = [make_episode(rng, 4, 2, with_rewards=True) for _ in range(2)]
    unlabeled = [make_episode(rng, int(rng.integers(2, 6)), 2) for _ in range(3)]
    out = uds_rewards(unlabeled, experts, r_min=-0.5)
    for lt, ex in zip(out[:2], experts):
        assert np.array_equal(lt.ot_rewards, ex.rewards)
    for lt in out[2:]:
        assert np.all(lt.ot_rewards == -0.5)


def test_uds_requires_expert_rewards(rng):
    with pytest.raises(ExpertRewardsMissing):
        uds_rewards([], [make_episode(rng, 3, 2)], r_min=0.0)


def test_label_config_validation():
    with pytest.raises(ValueError):
        LabelConfig(squash_alpha=0.0)
    with pytest.raises(ValueError):
        LabelConfig(squash_scale=ScaleMode.LOCOMOTION)  # needs action_dim
    cfg = LabelConfig(squash_scale=ScaleMode.LOCOMOTION, action_dim=6)
    assert cfg.squash_exponent() == pytest.approx(5.0 * 1000 / 6)
    assert LabelConfig.antmaze_preset().squash_exponent() == 1000.0
    assert LabelConfig.plain_preset().squash_exponent() == 1.0
