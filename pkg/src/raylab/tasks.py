"""Level-category logic: reward tables, episode lifecycle, goal placement.

The registry maps task names to :class:`TaskSpec`.  A task resolves its
level (builtin text file or per-episode generated maze), seeds all
per-episode randomization (spawn choice, goal cell, maze layout, bot
colors) from one 64-bit seed, and translates the simulation's contact
events into scalar reward events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources

from . import bots as bots_mod
from .level import CellKind, GoalPolicy, LevelGrid, MazeParams, generate_maze, parse_text_level
from .rng import Rng, derive_seed
from .sim import (
    PLAYER_ID,
    Bot,
    BotPersona,
    Pickup,
    PickupKind,
    PickupTouched,
    PlayerFell,
    ProjectileHitBot,
    ProjectileHitPlayer,
    SimConstants,
    WorldState,
    cell_center,
    make_world,
    place_player,
)


class UnknownTask(Exception):
    pass


class BadRewardTable(Exception):
    pass


@dataclass(frozen=True)
class RewardTable:
    """Reward magnitudes.  Only the signs (and the tag value) are fixed by
    the task design; the rest are configurable defaults."""

    apple: float = 1.0
    melon: float = 10.0
    lemon: float = -1.0
    goal: float = 10.0
    tag: float = 1.0
    fall: float = 0.0

    def validate(self) -> None:
        if not (self.melon > self.apple > 0.0 > self.lemon):
            raise BadRewardTable(
                f"ordering melon > apple > 0 > lemon violated: "
                f"melon={self.melon} apple={self.apple} lemon={self.lemon}"
            )

    def lookup(self, kind: str) -> float:
        return getattr(self, kind)


class Category(Enum):
    FRUIT_GATHER = "fruit_gather"
    NAV_STATIC = "nav_static"
    NAV_RANDOM_GOAL = "nav_random_goal"
    PROCEDURAL_NAV = "procedural_nav"
    LASER_TAG = "laser_tag"


@dataclass(frozen=True)
class BuiltinText:
    name: str


@dataclass(frozen=True)
class GeneratedMaze:
    width: int
    height: int
    goal_policy: GoalPolicy = GoalPolicy.FARTHEST_FROM_SPAWN


@dataclass(frozen=True)
class TaskSpec:
    name: str
    category: Category
    level_source: BuiltinText | GeneratedMaze
    reward_table: RewardTable = field(default_factory=RewardTable)
    episode_seconds: float = 60.0
    bot_roster: tuple[BotPersona, ...] = ()
    recolor_bots: bool = False
    apple_respawn_seconds: float = 0.0
    sim_constants: SimConstants = field(default_factory=SimConstants)

    def validate(self) -> None:
        self.reward_table.validate()
        if self.category is Category.LASER_TAG and not self.bot_roster:
            raise ValueError(f"laser-tag task {self.name} needs a non-empty bot roster")


@dataclass(frozen=True)
class RewardEvent:
    tick: int
    kind: str  # apple | melon | lemon | goal | tag | fall
    value: float
    bot_id: int | None = None


_REGISTRY: dict[str, TaskSpec] = {}


def register_task(spec: TaskSpec) -> None:
    spec.validate()
    _REGISTRY[spec.name] = spec


def task_names() -> list[str]:
    return sorted(_REGISTRY)


def get_task_spec(name: str) -> TaskSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownTask(name) from None


def _builtin_level_text(name: str) -> str:
    ref = resources.files("raylab").joinpath(f"levels/{name}.maze.txt")
    return ref.read_text(encoding="utf-8")


def load_level_source(spec: TaskSpec, seed: int) -> LevelGrid:
    if isinstance(spec.level_source, BuiltinText):
        return parse_text_level(_builtin_level_text(spec.level_source.name), name=spec.level_source.name)
    src = spec.level_source
    return generate_maze(MazeParams(src.width, src.height, seed=seed, goal_policy=src.goal_policy))


def load_task(name: str, seed: int) -> tuple[TaskSpec, LevelGrid, WorldState]:
    """Build a fresh episode for a registered task name."""
    return build_episode(get_task_spec(name), seed)


def build_episode(spec: TaskSpec, seed: int) -> tuple[TaskSpec, LevelGrid, WorldState]:
    """Resolve the level, seed the world, place the player, apply the goal
    policy, and spawn the bot roster."""
    level = load_level_source(spec, seed)
    world = make_world(level, seed=derive_seed(seed ^ 0x517CC1B727220A95), consts=spec.sim_constants)

    if spec.apple_respawn_seconds > 0.0:
        for p in world.pickups():
            if p.kind is PickupKind.APPLE:
                p.respawn_seconds = spec.apple_respawn_seconds

    if spec.category is Category.NAV_RANDOM_GOAL:
        for p in list(world.pickups()):
            if p.kind is PickupKind.GOAL:
                del world.entities[p.id]
        floors = [
            (r, c)
            for (r, c) in level.floor_cells()
            if level.cell(r, c).kind in (CellKind.FLOOR, CellKind.SPAWN)
        ]
        gr, gc = floors[world.rng.randrange(len(floors))]
        gx, gy = cell_center(gr, gc, world.consts.cell_size)
        world.add_entity(Pickup(id=0, kind=PickupKind.GOAL, x=gx, y=gy, radius=world.consts.pickup_radius))

    respawn_player(world)

    for persona in spec.bot_roster:
        if spec.recolor_bots:
            persona = bots_mod.random_persona(world.rng, skill=persona.skill)
        spawn = level.spawn_points[world.rng.randrange(len(level.spawn_points))]
        bots_mod.spawn_bot(world, spawn, persona)

    return spec, level, world


def respawn_player(world: WorldState) -> None:
    spawn = world.level.spawn_points[world.rng.randrange(len(world.level.spawn_points))]
    yaw = world.rng.randrange(8) * (math.pi / 4.0)
    place_player(world, spawn, yaw=yaw)


_PICKUP_KIND_NAMES = {
    PickupKind.APPLE: "apple",
    PickupKind.MELON: "melon",
    PickupKind.LEMON: "lemon",
    PickupKind.GOAL: "goal",
}


def handle_event(spec: TaskSpec, world: WorldState, event) -> RewardEvent | None:
    """Translate one sim contact event into world mutations and an
    optional reward event.  Every reward path goes through here."""
    table = spec.reward_table

    if isinstance(event, PickupTouched):
        pickup = world.entities.get(event.pickup_id)
        if pickup is None or not pickup.active:
            return None
        kind = _PICKUP_KIND_NAMES[event.kind]
        if event.kind is PickupKind.GOAL:
            persists = spec.category in (Category.NAV_RANDOM_GOAL, Category.PROCEDURAL_NAV)
            if not persists:
                pickup.active = False
            respawn_player(world)
        else:
            pickup.active = False
            if pickup.respawn_seconds > 0.0:
                pickup.respawn_timer = pickup.respawn_seconds
        return RewardEvent(tick=event.tick, kind=kind, value=table.lookup(kind))

    if isinstance(event, ProjectileHitBot):
        bot = world.entities.get(event.bot_id)
        if not isinstance(bot, Bot) or not bot.body.alive:
            return None
        tagged = bots_mod.damage_bot(world, bot)
        if tagged and event.owner_id == PLAYER_ID:
            return RewardEvent(tick=event.tick, kind="tag", value=table.tag, bot_id=event.bot_id)
        return None

    if isinstance(event, ProjectileHitPlayer):
        # Being tagged costs position, not score.
        respawn_player(world)
        return None

    if isinstance(event, PlayerFell):
        respawn_player(world)
        return RewardEvent(tick=event.tick, kind="fall", value=table.fall)

    raise TypeError(f"unknown contact event {event!r}")


def is_episode_done(spec: TaskSpec, world: WorldState, dt: float = 1.0 / 60.0) -> bool:
    return world.tick * dt >= spec.episode_seconds


# --- config overrides --------------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` comments and blank lines ignored."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def apply_overrides(spec: TaskSpec, overrides: dict[str, str]) -> TaskSpec:
    """Override task fields from a flat string map.

    Recognized keys: ``episode_seconds``, ``recolor_bots``,
    ``apple_respawn_seconds``, ``reward.<name>`` and ``sim.<constant>``.
    """
    table = spec.reward_table
    consts = spec.sim_constants
    fields: dict = {}
    for key, value in overrides.items():
        if key.startswith("reward."):
            name = key[len("reward."):]
            if not hasattr(table, name):
                raise KeyError(f"unknown reward entry {name!r}")
            table = replace(table, **{name: float(value)})
        elif key.startswith("sim."):
            name = key[len("sim."):]
            if not hasattr(consts, name):
                raise KeyError(f"unknown sim constant {name!r}")
            current = getattr(consts, name)
            consts = replace(consts, **{name: type(current)(float(value))})
        elif key == "episode_seconds":
            fields["episode_seconds"] = float(value)
        elif key == "apple_respawn_seconds":
            fields["apple_respawn_seconds"] = float(value)
        elif key == "recolor_bots":
            fields["recolor_bots"] = value.lower() in ("1", "true", "yes", "on")
        else:
            raise KeyError(f"unknown config key {key!r}")
    new_spec = replace(spec, reward_table=table, sim_constants=consts, **fields)
    new_spec.validate()
    return new_spec


# --- builtin task registry ---------------------------------------------------


def _default_roster(n: int, skill: float = 0.6) -> tuple[BotPersona, ...]:
    palette = [(200, 60, 60), (60, 110, 220), (230, 170, 40), (150, 70, 190)]
    return tuple(BotPersona(skill=skill, color=palette[i % len(palette)], texture_variant=i) for i in range(n))


def _register_builtins() -> None:
    register_task(TaskSpec(
        name="seekavoid_arena_01",
        category=Category.FRUIT_GATHER,
        level_source=BuiltinText("seekavoid_arena_01"),
        episode_seconds=90.0,
        apple_respawn_seconds=10.0,
    ))
    register_task(TaskSpec(
        name="stairway_to_melon",
        category=Category.FRUIT_GATHER,
        level_source=BuiltinText("stairway_to_melon"),
        episode_seconds=90.0,
        apple_respawn_seconds=10.0,
    ))
    for i in (1, 2, 3):
        register_task(TaskSpec(
            name=f"nav_maze_static_0{i}",
            category=Category.NAV_STATIC,
            level_source=BuiltinText(f"nav_maze_static_0{i}"),
            episode_seconds=120.0,
        ))
        register_task(TaskSpec(
            name=f"nav_maze_random_goal_0{i}",
            category=Category.NAV_RANDOM_GOAL,
            level_source=BuiltinText(f"nav_maze_random_goal_0{i}"),
            episode_seconds=120.0,
        ))
    register_task(TaskSpec(
        name="random_maze",
        category=Category.PROCEDURAL_NAV,
        level_source=GeneratedMaze(21, 21),
        episode_seconds=180.0,
    ))
    register_task(TaskSpec(
        name="lt_chasm",
        category=Category.LASER_TAG,
        level_source=BuiltinText("lt_chasm"),
        episode_seconds=120.0,
        bot_roster=_default_roster(2),
    ))
    register_task(TaskSpec(
        name="lt_horseshoe_color",
        category=Category.LASER_TAG,
        level_source=BuiltinText("lt_horseshoe_color"),
        episode_seconds=120.0,
        bot_roster=_default_roster(2),
        recolor_bots=True,
    ))
    register_task(TaskSpec(
        name="lt_hallway_slope",
        category=Category.LASER_TAG,
        level_source=BuiltinText("lt_hallway_slope"),
        episode_seconds=120.0,
        bot_roster=_default_roster(2),
    ))
    register_task(TaskSpec(
        name="lt_space_bounce_hard",
        category=Category.LASER_TAG,
        level_source=BuiltinText("lt_space_bounce_hard"),
        episode_seconds=120.0,
        bot_roster=_default_roster(3, skill=0.8),
        recolor_bots=True,
    ))


_register_builtins()
