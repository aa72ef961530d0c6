"""Command line entry point.

Subcommands:

* ``bench``   time the step+render loop and print a rate report
* ``serve``   run the WebSocket play server
* ``dump``    render one frame of a task to a PPM image
* ``genmaze`` print a generated maze in text level format
* ``tasks``   list registered task names
"""

from __future__ import annotations

import argparse
import sys

from .bench import format_report, run_benchmark
from .env import EnvConfig, create_env
from .level import GoalPolicy, MazeParams, generate_maze, serialize_text_level
from .render import Camera, frame_to_ppm, render_frame
from .serve import ServeConfig, serve_forever
from .tasks import parse_config_text, task_names


def _parse_overrides(pairs: list[str]) -> dict[str, str]:
    return parse_config_text("\n".join(pairs))


def _add_resolution(parser, width=320, height=240):
    parser.add_argument("--width", type=int, default=width)
    parser.add_argument("--height", type=int, default=height)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raylab")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bench", help="measure step+render frames per second")
    p.add_argument("--level", default="nav_maze_static_01")
    _add_resolution(p, 84, 84)
    p.add_argument("--frames", type=int, default=1000)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="serve a playable session over WebSocket")
    p.add_argument("--level", default="nav_maze_random_goal_01")
    _add_resolution(p, 160, 120)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--fps", type=int, default=60)
    p.add_argument("--pacing", choices=("lockstep", "realtime"), default="realtime")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--web-root", default=None, help="directory of static files to serve over HTTP")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="task config override, repeatable")

    p = sub.add_parser("dump", help="render one frame to a PPM file")
    p.add_argument("--level", default="nav_maze_static_01")
    _add_resolution(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=0, help="no-op steps to run before rendering")
    p.add_argument("--out", default="frame.ppm")

    p = sub.add_parser("genmaze", help="generate a maze and print its text form")
    p.add_argument("--maze-width", type=int, default=15)
    p.add_argument("--maze-height", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--goal", choices=[g.value for g in GoalPolicy],
                   default=GoalPolicy.FARTHEST_FROM_SPAWN.value)

    sub.add_parser("tasks", help="list registered task names")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "bench":
        report = run_benchmark(
            args.level, args.width, args.height,
            num_frames=args.frames, warmup_frames=args.warmup, seed=args.seed,
        )
        print(format_report(report))
        return 0

    if args.command == "serve":
        config = ServeConfig(
            level_name=args.level,
            width=args.width,
            height=args.height,
            fps=args.fps,
            pacing=args.pacing,
            seed=args.seed,
            web_root=args.web_root,
            overrides=_parse_overrides(args.set),
        )
        serve_forever(config, host=args.host, port=args.port)
        return 0

    if args.command == "dump":
        env = create_env(EnvConfig(args.level, width=args.width, height=args.height))
        env.reset(seed=args.seed)
        for _ in range(args.steps):
            env.step([0, 0, 0, 0, 0, 0, 0])
        camera = Camera.from_player(env.world)
        frame = render_frame(env.world, camera, args.width, args.height)
        with open(args.out, "wb") as fh:
            fh.write(frame_to_ppm(frame))
        print(f"wrote {args.out} ({args.width}x{args.height}, tick {env.tick})")
        return 0

    if args.command == "genmaze":
        level = generate_maze(MazeParams(
            args.maze_width, args.maze_height, seed=args.seed,
            goal_policy=GoalPolicy(args.goal),
        ))
        sys.stdout.write(serialize_text_level(level))
        return 0

    if args.command == "tasks":
        for name in task_names():
            print(name)
        return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
