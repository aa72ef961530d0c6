"""In-process bindings with the classic construct/reset/step/observations
API shape used by RL agent code:

    lab = raylab.Lab('seekavoid_arena_01', ['RGB_INTERLACED'])
    lab.reset()
    reward = lab.step(np.zeros([7], dtype=np.intc), num_steps=4)
    obs = lab.observations()  # dict of numpy arrays
"""

from __future__ import annotations

import numpy as np

from .env import EnvConfig, Environment


class Lab:
    """Thin wrapper over :class:`raylab.env.Environment`.

    ``config`` values are strings, mirroring the conventional settings
    map: ``width``, ``height``, ``fps``, ``seed``.
    """

    def __init__(self, level_name: str, observation_names, config: dict[str, str] | None = None):
        config = dict(config or {})
        env_config = EnvConfig(
            level_name=level_name,
            observation_names=tuple(observation_names),
            width=int(config.pop("width", 320)),
            height=int(config.pop("height", 240)),
            fps=int(config.pop("fps", 60)),
            seed=int(config.pop("seed", 0)),
        )
        self._env = Environment(env_config, overrides=config or None)

    def reset(self, seed: int | None = None) -> None:
        self._env.reset(seed)

    def step(self, action, num_steps: int = 1) -> float:
        arr = np.asarray(action)
        if arr.shape != (7,):
            raise ValueError(f"action must be a length-7 integer vector, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise TypeError(f"action must be integer-typed, got {arr.dtype}")
        return float(self._env.step(arr.tolist(), num_steps=num_steps))

    def observations(self) -> dict[str, np.ndarray]:
        return self._env.observations()

    def observation_spec(self) -> list[dict]:
        return [
            {"name": e.name, "shape": e.shape, "dtype": e.dtype}
            for e in self._env.observation_spec()
        ]

    def is_running(self) -> bool:
        return self._env.is_running()

    @property
    def episode_score(self) -> float:
        return self._env.episode_score

    def close(self) -> None:
        pass
