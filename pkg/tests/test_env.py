import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from moseac.env import MIN_SEPARATION, OBS_DIM, TRACE_HEADER, EnvConfig, EnvState, Event, env_reset, \
    env_step, observe, physics_substep, run_trace
from moseac.errors import ConfigError, ContractError

CFG = EnvConfig()
MU_MG = 0.6 * 20.0 * 9.80665
MU_G = 0.6 * 9.80665


def at_rest(pos=(1.0, 1.0), vel=(0.0, 0.0), goal=(1.9, 1.9), obstacle=(0.1, 0.1)):
    return EnvState(agent_pos=np.array(pos, float), agent_vel=np.array(vel, float),
                    obstacle_pos=np.array(obstacle, float), goal_pos=np.array(goal, float),
                    start_pos=np.array(pos, float), last_duration=0.01, last_force=np.zeros(2))


def test_friction_constant():
    assert CFG.friction_force == pytest.approx(117.6798, abs=1e-4)


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 1.0))
def test_static_friction_holds_at_rest(angle, frac):
    mag = frac * MU_MG
    s = at_rest()
    for _ in range(5):
        s = physics_substep(s, (mag * math.cos(angle), mag * math.sin(angle)), 0.01, CFG)
    assert s.agent_pos.tolist() == [1.0, 1.0]
    assert s.agent_vel.tolist() == [0.0, 0.0]


def test_kinetic_acceleration_from_rest():
    s = physics_substep(at_rest(), (150.0, 0.0), 0.01, CFG)
    a = (150.0 - MU_MG) / 20.0
    assert s.agent_vel[0] == pytest.approx(a * 0.01, rel=1e-12)
    assert s.agent_pos[0] == pytest.approx(1.0 + 0.5 * a * 0.01 ** 2, rel=1e-12)
    assert s.agent_vel[1] == 0.0


def test_free_deceleration_stops_without_reversal():
    v0 = 1.0
    s = at_rest(pos=(0.5, 1.0), vel=(v0, 0.0))
    t, prev_v = 0.0, v0
    while s.agent_vel[0] > 0.0:
        s = physics_substep(s, (0.0, 0.0), 0.01, CFG)
        t += 0.01
        assert 0.0 <= s.agent_vel[0] <= prev_v
        assert s.agent_vel[0] == pytest.approx(max(v0 - MU_G * t, 0.0), abs=1e-12)
        prev_v = s.agent_vel[0]
    # stops inside the substep containing v0 / (mu g) = 0.1699527 s
    assert v0 / MU_G == pytest.approx(0.1699527, abs=1e-7)
    assert t - 0.01 < v0 / MU_G <= t + 1e-12
    assert s.agent_pos[0] - 0.5 == pytest.approx(v0 ** 2 / (2 * MU_G), rel=1e-9)
    for _ in range(10):
        s = physics_substep(s, (0.0, 0.0), 0.01, CFG)
    assert s.agent_vel.tolist() == [0.0, 0.0]


def test_diagonal_deceleration_keeps_direction():
    s = at_rest(vel=(0.3, -0.4))
    for _ in range(20):
        s = physics_substep(s, (0.0, 0.0), 0.01, CFG)
        vx, vy = s.agent_vel
        assert vx >= 0.0 and vy <= 0.0
        assert vx * 0.4 == pytest.approx(-vy * 0.3, abs=1e-12)
    assert s.agent_vel.tolist() == [0.0, 0.0]


def test_speed_limit_per_axis():
    s = at_rest(pos=(0.0, 0.0), vel=(1.99, 1.99))
    for _ in range(100):
        s = physics_substep(s, (1000.0, 1000.0), 0.01, CFG)
        assert np.all(np.abs(s.agent_vel) <= 2.0)


def test_walls_clamp_position_and_zero_velocity():
    s = physics_substep(at_rest(pos=(1.999, 1.0), vel=(1.5, 0.5)), (0.0, 0.0), 0.01, CFG)
    assert s.agent_pos[0] == 2.0 and s.agent_vel[0] == 0.0
    assert s.agent_vel[1] > 0.0


@given(st.lists(st.tuples(st.floats(-150, 150), st.floats(-150, 150)), min_size=1, max_size=40),
       st.floats(0.0, 2.0), st.floats(0.0, 2.0))
def test_random_pushes_keep_state_in_bounds(forces, x, y):
    s = at_rest(pos=(x, y))
    for f in forces:
        s = physics_substep(s, f, 0.01, CFG)
        assert np.all(np.abs(s.agent_vel) <= 2.0)
        assert np.all((s.agent_pos >= 0.0) & (s.agent_pos <= 2.0))


def test_substep_rejects_nonpositive_h():
    with pytest.raises(ContractError):
        physics_substep(at_rest(), (0.0, 0.0), 0.0, CFG)


@given(st.integers(0, 2 ** 32 - 1))
def test_reset_layout_separation(seed):
    state, obs = env_reset(CFG, seed)
    pts = [state.start_pos, state.goal_pos, state.obstacle_pos]
    for i in range(3):
        assert np.all(pts[i] >= 0.05) and np.all(pts[i] <= 1.95)
        for j in range(i):
            assert np.linalg.norm(pts[i] - pts[j]) >= MIN_SEPARATION
    assert obs.shape == (OBS_DIM,)
    assert obs[:2].tolist() == state.agent_pos.tolist()
    assert obs[2:4].tolist() == state.obstacle_pos.tolist()
    assert obs[4:6].tolist() == state.goal_pos.tolist()
    assert obs[6:].tolist() == [0.0, 0.0, 0.01, 0.0, 0.0]


def test_reset_is_seeded():
    a, _ = env_reset(CFG, 3)
    b, _ = env_reset(CFG, 3)
    assert a.layout() == b.layout()
    assert env_reset(CFG, 4)[0].layout() != a.layout()


def test_reset_fails_when_world_too_small():
    with pytest.raises(ConfigError):
        env_reset(EnvConfig(world_size=(0.2, 0.2)), 0)


def test_normalized_observation_range():
    state, _ = env_reset(EnvConfig(normalize_obs=True), 11)
    state = env_step(state, (1.0, 100.0, -100.0), EnvConfig(normalize_obs=True)).state
    obs = observe(state, EnvConfig(normalize_obs=True))
    assert np.all(np.abs(obs) <= 1.0 + 1e-12)
    assert obs[8] == 1.0 and obs[9:].tolist() == [1.0, -1.0]


def test_step_distance_reward_and_elapsed():
    s = at_rest(pos=(1.0, 1.0), goal=(1.5, 1.0), obstacle=(0.2, 1.8))
    out = env_step(s, (0.3, 0.0, 0.0), CFG)
    assert out.event is Event.NONE and not out.terminated and not out.truncated
    assert out.sim_time_elapsed == 0.3
    # unmoved agent: origin distance minus current distance is zero
    assert out.task_reward == 0.0
    assert out.state.step_count == 1 and out.state.last_duration == 0.3


def test_goal_event_terminates_early():
    s = at_rest(pos=(1.0, 1.0), vel=(1.0, 0.0), goal=(1.06, 1.0), obstacle=(0.2, 0.2))
    out = env_step(s, (1.0, 0.0, 0.0), CFG)
    assert out.event is Event.GOAL and out.terminated
    assert out.task_reward == 500.0
    assert out.sim_time_elapsed < 0.1
    assert out.sim_time_elapsed == pytest.approx(round(out.sim_time_elapsed / 0.01) * 0.01)


def test_crash_checked_before_goal():
    s = at_rest(pos=(1.0, 1.0), vel=(1.0, 0.0), goal=(1.06, 1.0), obstacle=(1.06, 1.0))
    out = env_step(s, (0.5, 0.0, 0.0), CFG)
    assert out.event is Event.CRASH and out.task_reward == -500.0


def test_truncation_at_step_limit():
    cfg = EnvConfig(max_episode_steps=3)
    s = at_rest(goal=(1.9, 1.9))
    flags = []
    for _ in range(3):
        out = env_step(s, (0.01, 0.0, 0.0), cfg)
        flags.append(out.truncated)
        s = out.state
    assert flags == [False, False, True]


@pytest.mark.parametrize("action", [(0.005, 0, 0), (1.1, 0, 0), (0.5, 101, 0), (0.5, 0, np.nan),
                                    (0.5, 0)])
def test_step_rejects_bad_actions(action):
    with pytest.raises(ContractError):
        env_step(at_rest(), action, CFG)


@given(st.floats(0.01, 1.0))
def test_partial_substep_elapsed(duration):
    out = env_step(at_rest(goal=(1.9, 1.9)), (duration, 0.0, 0.0), CFG)
    assert out.sim_time_elapsed == duration


def test_trace_output_rows():
    buf = io.StringIO()
    outs = run_trace(CFG, 5, [(0.5, 100.0, 100.0)] * 3, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == TRACE_HEADER
    assert len(lines) == 1 + len(outs)
    assert lines[1].split(",")[0] == "1" and lines[1].split(",")[-1] in ("None", "Goal", "Crash")
