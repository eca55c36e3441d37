import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from helpers import central_difference, random_batch, relative_error, small_nets
from moseac.errors import ContractError, NumericError
from moseac.sac import ACTION_DIM, ActionScale, SacAgent, SacHyper, actor_loss_and_grads, \
    compute_td_target, critic_loss_and_grads, log1m_tanh2, make_nets, policy_sample, scale_action, \
    temperature_gradient, temperature_update, unscale_action
from moseac.nn import AdamState, mlp_forward

unit = st.floats(-1.0, 1.0)


def test_scale_action_fixed_points():
    np.testing.assert_allclose(scale_action([0.0, 0.0, 0.0]), [0.505, 0.0, 0.0], rtol=1e-15)
    np.testing.assert_allclose(scale_action([1.0, 1.0, -1.0]), [1.0, 100.0, -100.0], rtol=1e-15)
    np.testing.assert_allclose(scale_action([-1.0, 0.5, 0.0]), [0.01, 50.0, 0.0], rtol=1e-12)


@given(unit, unit, unit)
def test_scale_round_trip_and_bounds(a, b, c):
    act = scale_action([a, b, c])
    assert 0.01 - 1e-15 <= act[0] <= 1.0 + 1e-15
    assert np.all(np.abs(act[1:]) <= 100.0)
    np.testing.assert_allclose(unscale_action(act), [a, b, c], atol=1e-12)


def test_scale_rejects_unsquashed():
    with pytest.raises(ContractError):
        scale_action([1.01, 0.0, 0.0])
    with pytest.raises(ContractError):
        scale_action([0.0, 0.0])


@given(st.floats(-300.0, 300.0))
def test_log1m_tanh2_matches_cosh_identity(x):
    # 1 - tanh^2 = sech^2
    assert log1m_tanh2(np.array(x)) == pytest.approx(-2.0 * math.log(math.cosh(x)), rel=1e-12,
                                                     abs=1e-12)


def test_log1m_tanh2_large_argument_is_finite():
    v = log1m_tanh2(np.array([50.0, -400.0]))
    assert np.all(np.isfinite(v))
    # asymptote log 4 - 2|x|
    np.testing.assert_allclose(v, [math.log(4) - 100.0, math.log(4) - 800.0], rtol=1e-12)


def test_log_prob_against_change_of_variables(rng):
    nets = small_nets(1)
    states = rng.normal(size=(6, 11))
    noise = rng.standard_normal((6, ACTION_DIM))
    out = policy_sample(nets, states, noise=noise)
    raw, _ = mlp_forward(nets.actor, states)
    mean, log_std = raw[:, :3], np.clip(raw[:, 3:], -20, 2)
    pre = mean + np.exp(log_std) * noise
    want = norm.logpdf(pre, mean, np.exp(log_std)).sum(1) - np.log(1 - np.tanh(pre) ** 2).sum(1)
    np.testing.assert_allclose(out.log_prob, want, rtol=1e-9)
    np.testing.assert_allclose(out.squashed, np.tanh(pre))


def test_deterministic_policy_is_tanh_mean(rng):
    nets = small_nets(2)
    s = rng.normal(size=11)
    out = policy_sample(nets, s, deterministic=True)
    raw, _ = mlp_forward(nets.actor, s)
    np.testing.assert_allclose(out.squashed, np.tanh(raw[:3]))
    np.testing.assert_allclose(out.env_action, scale_action(np.tanh(raw[:3])))


def test_policy_rejects_nonfinite_state():
    with pytest.raises(NumericError):
        policy_sample(small_nets(), np.full(11, np.nan), deterministic=True)


def test_make_nets_shapes_and_targets():
    nets = make_nets()
    assert nets.actor.sizes == (11, 256, 256, 6)
    assert nets.q1.sizes == nets.q2.sizes == (14, 256, 256, 1)
    assert all(np.array_equal(a, b) for a, b in zip(nets.q1.arrays(), nets.q1_target.arrays()))
    assert not np.array_equal(nets.q1.weights[0], nets.q2.weights[0])
    assert nets.temperature == pytest.approx(0.12)


def test_td_target_hand_case(rng):
    nets = small_nets(3)
    batch = random_batch(rng, 5)
    assert np.array_equal(compute_td_target(batch, nets, 0.0, rng), batch.rewards)
    batch.dones[:] = True
    assert np.array_equal(compute_td_target(batch, nets, 0.99, rng), batch.rewards)
    with pytest.raises(ContractError):
        compute_td_target(batch, nets, 1.0, rng)


def test_td_target_formula(rng):
    nets = small_nets(4)
    batch = random_batch(rng, 8)
    noise = rng.standard_normal((8, 3))
    y = compute_td_target(batch, nets, 0.9, noise=noise)
    p = policy_sample(nets, batch.next_states, noise=noise)
    x = np.concatenate([batch.next_states, p.squashed], 1)
    q = np.minimum(mlp_forward(nets.q1_target, x)[0][:, 0], mlp_forward(nets.q2_target, x)[0][:, 0])
    want = batch.rewards + 0.9 * (1 - batch.dones) * (q - nets.temperature * p.log_prob)
    np.testing.assert_allclose(y, want, rtol=1e-12)


def test_critic_gradient_finite_difference(rng):
    nets = small_nets(5)
    batch = random_batch(rng, 12)
    y = rng.normal(size=12)
    _, g1, g2 = critic_loss_and_grads(batch, nets, y)
    num = central_difference(lambda: critic_loss_and_grads(batch, nets, y)[0],
                             nets.q1.arrays() + nets.q2.arrays())
    assert relative_error(g1.arrays() + g2.arrays(), num) < 1e-6


@pytest.mark.parametrize("fixed_u0", [None, -0.9663865546218487])
def test_actor_gradient_finite_difference(rng, fixed_u0):
    nets = small_nets(6)
    batch = random_batch(rng, 12)
    noise = rng.standard_normal((12, 3))
    _, g, _ = actor_loss_and_grads(batch, nets, noise=noise, fixed_u0=fixed_u0)
    num = central_difference(
        lambda: actor_loss_and_grads(batch, nets, noise=noise, fixed_u0=fixed_u0)[0],
        nets.actor.arrays())
    assert relative_error(g.arrays(), num) < 1e-6


def test_actor_gradient_zero_through_clamped_log_std(rng):
    nets = small_nets(7)
    nets.actor.biases[-1][3:] = 5.0        # log_std above the clamp for every state
    nets.actor.weights[-1][3:] = 0.0
    batch = random_batch(rng, 4)
    _, g, _ = actor_loss_and_grads(batch, nets, noise=rng.standard_normal((4, 3)))
    assert not g.weights[-1][3:].any() and not g.biases[-1][3:].any()


@given(st.floats(-3.0, 1.0), st.lists(st.floats(-10, 10), min_size=1, max_size=20),
       st.floats(-6.0, 0.0))
def test_temperature_gradient_matches_derivative(log_t, logps, target):
    def loss(lt):
        return -math.exp(lt) * (float(np.mean(logps)) + target)
    eps = 1e-6
    num = (loss(log_t + eps) - loss(log_t - eps)) / (2 * eps)
    assert temperature_gradient(log_t, logps, target) == pytest.approx(num, rel=1e-5, abs=1e-8)


def test_temperature_moves_toward_target_entropy():
    nets = small_nets()
    state = AdamState.zeros_like([np.zeros(1)])
    before = nets.log_temperature
    # entropy above target (log pi very negative): temperature should drop
    temperature_update(nets, np.full(4, -10.0), -3.0, state, 1e-3)
    assert nets.log_temperature < before
    state = AdamState.zeros_like([np.zeros(1)])
    before = nets.log_temperature
    temperature_update(nets, np.full(4, 5.0), -3.0, state, 1e-3)
    assert nets.log_temperature > before


def test_agent_update_moves_targets_by_tau(rng):
    nets = small_nets(8)
    agent = SacAgent(nets, SacHyper(tau=0.5, actor_lr=1e-3, critic_lr=1e-3))
    old_target = [a.copy() for a in nets.q1_target.arrays()]
    info = agent.update(random_batch(rng, 16), rng)
    assert set(info) == {"critic_loss", "actor_loss", "temperature"}
    assert all(math.isfinite(v) for v in info.values())
    for t, o, s in zip(nets.q1_target.arrays(), old_target, nets.q1.arrays()):
        np.testing.assert_allclose(t, 0.5 * o + 0.5 * s, rtol=1e-12)
    assert agent.n_updates == 1


def test_agent_fits_fixed_targets(rng):
    nets = small_nets(9, hidden=(32, 32))
    agent = SacAgent(nets, SacHyper(gamma=0.0, actor_lr=1e-3, critic_lr=3e-3))
    batch = random_batch(rng, 32)
    first = agent.update(batch, rng)["critic_loss"]
    for _ in range(300):
        last = agent.update(batch, rng)["critic_loss"]
    assert last < 0.25 * first


def test_fixed_duration_variant(rng):
    agent = SacAgent(small_nets(), SacHyper(fixed_duration=1 / 60))
    a = agent.act(rng.normal(size=11), rng)
    assert a[0] == 1 / 60
    assert agent.fixed_u0 == pytest.approx(unscale_action([1 / 60, 0, 0])[0])
    batch = agent.act(rng.normal(size=(4, 11)), rng)
    assert np.all(batch[:, 0] == 1 / 60)


def test_agent_surfaces_numeric_error(rng):
    nets = small_nets()
    agent = SacAgent(nets, SacHyper())
    batch = random_batch(rng, 8)
    batch.rewards[0] = np.inf
    with pytest.raises(NumericError):
        agent.update(batch, rng)


def test_float32_networks(rng):
    nets = make_nets(11, (16, 16), 0, 0.12, dtype="float32")
    assert nets.actor.weights[0].dtype == np.float32
    agent = SacAgent(nets, SacHyper())
    agent.update(random_batch(rng, 8), rng)
    assert nets.q1.weights[0].dtype == np.float32
    assert agent.act(rng.normal(size=11), rng).shape == (3,)
    ref = make_nets(11, (16, 16), 0, 0.12)
    np.testing.assert_allclose(make_nets(11, (16, 16), 0, 0.12, "float32").actor.weights[0],
                               ref.actor.weights[0], rtol=1e-7)
