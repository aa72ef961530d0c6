"""High-level Lab wrapper: the construct/reset/step/observations contract."""

import numpy as np
import pytest

import raylab


def test_classic_agent_loop():
    lab = raylab.Lab(
        "seekavoid_arena_01",
        ["RGB_INTERLACED"],
        {"width": "64", "height": "48", "fps": "60", "seed": "11"},
    )
    lab.reset()
    total = 0.0
    action = np.zeros([7], dtype=np.intc)
    action[3] = 1
    for _ in range(20):
        if not lab.is_running():
            break
        total += lab.step(action, num_steps=4)
        obs = lab.observations()
        assert obs["RGB_INTERLACED"].shape == (48, 64, 3)
        assert obs["RGB_INTERLACED"].dtype == np.uint8
    assert lab.episode_score == pytest.approx(total)
    lab.close()


def test_observation_spec_shape():
    lab = raylab.Lab("nav_maze_static_01", ["RGB_INTERLACED", "VEL.TRANS"],
                     {"width": "32", "height": "24"})
    spec = {e["name"]: e for e in lab.observation_spec()}
    assert spec["RGB_INTERLACED"]["shape"] == (24, 32, 3)
    assert spec["RGB_INTERLACED"]["dtype"] == "uint8"
    assert spec["VEL.TRANS"]["shape"] == (3,)
    assert spec["VEL.TRANS"]["dtype"] == "float32"


def test_wrong_action_shape_and_dtype():
    lab = raylab.Lab("nav_maze_static_01", ["RGB_INTERLACED"], {"width": "32", "height": "24"})
    lab.reset()
    with pytest.raises(ValueError):
        lab.step(np.zeros([3], dtype=np.intc))
    with pytest.raises(TypeError):
        lab.step(np.zeros([7], dtype=np.float32))


def test_string_config_overrides_pass_through():
    lab = raylab.Lab("seekavoid_arena_01", ["RGB_INTERLACED"],
                     {"width": "32", "height": "24", "episode_seconds": "0.1"})
    lab.reset(seed=0)
    lab.step(np.zeros([7], dtype=np.intc), num_steps=100)
    assert not lab.is_running()
    with pytest.raises(raylab.EpisodeFinished):
        lab.step(np.zeros([7], dtype=np.intc))


def test_seeded_determinism_through_lab():
    def pixels(seed):
        lab = raylab.Lab("nav_maze_random_goal_01", ["RGB_INTERLACED"],
                         {"width": "32", "height": "24"})
        lab.reset(seed=seed)
        a = np.array([150, 0, 0, 1, 0, 0, 0], dtype=np.intc)
        for _ in range(25):
            lab.step(a)
        return lab.observations()["RGB_INTERLACED"]

    assert np.array_equal(pixels(5), pixels(5))
    assert not np.array_equal(pixels(5), pixels(6))
