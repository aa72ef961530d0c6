"""Frames-per-second benchmark over a scripted random policy.

The policy draws uniformly from a small discrete action set (the usual
baseline vocabulary: turn, look, strafe, move, fire, jump, plus no-op) so
the camera actually moves and the renderer sees varied scenes instead of
staring at one wall.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .env import EnvConfig, create_env
from .render import PixelFormat
from .rng import Rng
from .sim import ActionVector

DISCRETE_ACTIONS = (
    ActionVector(),
    ActionVector(look_yaw=-512),
    ActionVector(look_yaw=512),
    ActionVector(look_pitch=-128),
    ActionVector(look_pitch=128),
    ActionVector(strafe=-1),
    ActionVector(strafe=1),
    ActionVector(move=1),
    ActionVector(move=-1),
    ActionVector(fire=1),
    ActionVector(jump=1),
)


@dataclass(frozen=True)
class BenchReport:
    level_name: str
    width: int
    height: int
    num_frames: int
    warmup_frames: int
    wall_seconds: float
    observation: str

    @property
    def fps(self) -> float:
        return self.num_frames / self.wall_seconds


def run_benchmark(
    level_name: str,
    width: int,
    height: int,
    num_frames: int = 1000,
    warmup_frames: int = 100,
    seed: int = 0,
    observation: str = PixelFormat.RGB_INTERLACED,
) -> BenchReport:
    """Time ``num_frames`` step+render cycles after a warmup period.

    Warmup frames run the identical loop but are excluded from timing so
    one-time costs (cache fills, allocator churn) do not skew the rate.
    """
    if num_frames < 1 or warmup_frames < 0:
        raise ValueError("need num_frames >= 1 and warmup_frames >= 0")
    env = create_env(EnvConfig(
        level_name=level_name,
        observation_names=(observation,),
        width=width,
        height=height,
        seed=seed,
    ))
    env.reset(seed=seed)
    rng = Rng(seed)

    def one_frame():
        if not env.is_running():
            env.reset()
        env.step(rng.choice(DISCRETE_ACTIONS))
        env.observations()

    for _ in range(warmup_frames):
        one_frame()
    start = time.perf_counter()
    for _ in range(num_frames):
        one_frame()
    wall = time.perf_counter() - start

    return BenchReport(
        level_name=level_name,
        width=width,
        height=height,
        num_frames=num_frames,
        warmup_frames=warmup_frames,
        wall_seconds=wall,
        observation=observation,
    )


def format_report(report: BenchReport) -> str:
    lines = [
        f"level:       {report.level_name}",
        f"resolution:  {report.width}x{report.height}",
        f"observation: {report.observation}",
        f"frames:      {report.num_frames} (+{report.warmup_frames} warmup)",
        f"wall time:   {report.wall_seconds:.3f} s",
        f"rate:        {report.fps:.1f} fps",
    ]
    return "\n".join(lines)
