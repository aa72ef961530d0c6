"""Agent-facing environment: construction, reset, lock-step stepping,
lazy observation rendering.

The lock-step contract: the world only changes inside :meth:`Environment.step`.
Between a step return and the next step call, observations may be read any
number of times and always return the same bytes; rendering happens lazily
on the first observation request for a tick.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .render import Camera, PixelFormat, encode_observation, render_frame
from .rng import derive_seed
from .sim import ActionVector, apply_action, step_world
from .tasks import RewardEvent, UnknownTask, build_episode, get_task_spec, handle_event, is_episode_done

VEL_TRANS = "VEL.TRANS"
VEL_ROT = "VEL.ROT"
PIXEL_FORMATS = (PixelFormat.RGB_INTERLACED, PixelFormat.RGBD_INTERLACED)
OBSERVATION_NAMES = PIXEL_FORMATS + (VEL_TRANS, VEL_ROT)


class UnknownLevel(Exception):
    pass


class BadConfig(Exception):
    pass


class EpisodeFinished(Exception):
    """step() was called after the episode already ended."""


class NotReset(Exception):
    """step()/observations() before the first reset()."""


@dataclass(frozen=True)
class EnvConfig:
    level_name: str
    observation_names: tuple[str, ...] = (PixelFormat.RGB_INTERLACED,)
    width: int = 320
    height: int = 240
    fps: int = 60
    seed: int = 0

    def validate(self) -> None:
        if not self.observation_names:
            raise BadConfig("observation_names must be non-empty")
        if len(set(self.observation_names)) != len(self.observation_names):
            raise BadConfig("duplicate observation names")
        for name in self.observation_names:
            if name not in OBSERVATION_NAMES:
                raise BadConfig(f"unknown observation name {name!r}")
        if self.width < 8 or self.height < 8:
            raise BadConfig(f"resolution must be at least 8x8, got {self.width}x{self.height}")
        if self.fps <= 0:
            raise BadConfig(f"fps must be positive, got {self.fps}")


@dataclass
class ObservationSpecEntry:
    name: str
    shape: tuple[int, ...]
    dtype: str  # "uint8" | "float32"


class Environment:
    """One environment instance; calls must be externally serialized."""

    def __init__(self, config: EnvConfig, overrides: dict[str, str] | None = None):
        config.validate()
        try:
            spec = get_task_spec(config.level_name)
        except UnknownTask:
            raise UnknownLevel(config.level_name) from None
        if overrides:
            from .tasks import apply_overrides

            spec = apply_overrides(spec, overrides)
        self._base_spec = spec
        self.config = config
        self.dt = 1.0 / config.fps
        self._seed = config.seed
        self._world = None
        self._level = None
        self._spec = spec
        self._done = False
        self._score = 0.0
        self._event_log: list[RewardEvent] = []
        self._frame_cache: tuple[int, object] | None = None

    # -- lifecycle --

    def reset(self, seed: int | None = None) -> None:
        """New episode.  Without an explicit seed the next one in the
        splitmix sequence from the previous seed is used."""
        if seed is None:
            seed = derive_seed(self._seed)
        self._seed = seed
        self._spec, self._level, self._world = build_episode(self._base_spec, seed)
        self._done = False
        self._score = 0.0
        self._event_log = []
        self._frame_cache = None

    def is_running(self) -> bool:
        return self._world is not None and not self._done

    @property
    def world(self):
        return self._world

    @property
    def episode_score(self) -> float:
        return self._score

    @property
    def episode_events(self) -> list[RewardEvent]:
        return list(self._event_log)

    @property
    def tick(self) -> int:
        return 0 if self._world is None else self._world.tick

    # -- stepping --

    def step(self, action, num_steps: int = 1) -> float:
        if self._world is None:
            raise NotReset("call reset() before step()")
        if self._done:
            raise EpisodeFinished("episode ended; call reset()")
        if num_steps < 1:
            raise ValueError(f"num_steps must be >= 1, got {num_steps}")
        if not isinstance(action, ActionVector):
            action = ActionVector.from_sequence(action)
        total = 0.0
        for _ in range(num_steps):
            apply_action(self._world, action)
            step_world(self._world, self.dt)
            for contact in self._world.pending_reward_events:
                reward_event = handle_event(self._spec, self._world, contact)
                if reward_event is not None:
                    total += reward_event.value
                    self._event_log.append(reward_event)
            self._world.pending_reward_events.clear()
            if is_episode_done(self._spec, self._world, self.dt):
                self._done = True
                break
        self._frame_cache = None
        self._score += total
        return total

    # -- observations --

    def observation_spec(self) -> list[ObservationSpecEntry]:
        out = []
        for name in self.config.observation_names:
            if name == PixelFormat.RGB_INTERLACED:
                out.append(ObservationSpecEntry(name, (self.config.height, self.config.width, 3), "uint8"))
            elif name == PixelFormat.RGBD_INTERLACED:
                out.append(ObservationSpecEntry(name, (self.config.height, self.config.width, 4), "uint8"))
            else:
                out.append(ObservationSpecEntry(name, (3,), "float32"))
        return out

    def _frame(self):
        if self._world is None:
            raise NotReset("call reset() before observations()")
        if self._frame_cache is None or self._frame_cache[0] != self._world.tick:
            camera = Camera.from_player(self._world)
            frame = render_frame(self._world, camera, self.config.width, self.config.height)
            self._frame_cache = (self._world.tick, frame)
        return self._frame_cache[1]

    def observations(self) -> dict[str, np.ndarray]:
        if self._world is None:
            raise NotReset("call reset() before observations()")
        out: dict[str, np.ndarray] = {}
        for name in self.config.observation_names:
            if name in PIXEL_FORMATS:
                data = encode_observation(self._frame(), name)
                channels = 3 if name == PixelFormat.RGB_INTERLACED else 4
                arr = np.frombuffer(data, dtype=np.uint8).reshape(self.config.height, self.config.width, channels)
                out[name] = arr.copy()  # snapshot, never a live view
            elif name == VEL_TRANS:
                b = self._world.player.body
                out[name] = np.array([b.vx, b.vy, b.vz], dtype=np.float32)
            elif name == VEL_ROT:
                p = self._world.player
                out[name] = np.array(
                    [p.yaw_step / self.dt, p.pitch_step / self.dt, 0.0], dtype=np.float32
                )
        return out


def create_env(config: EnvConfig, overrides: dict[str, str] | None = None) -> Environment:
    return Environment(config, overrides)
