"""Scripted opponents for laser-tag levels.

Bots share the player's kinematics: ``bot_think`` only stages movement
and fire intents, and :func:`raylab.sim.step_world` integrates them with
the same collision code as the player.  All randomness comes from the
world RNG, so bot behavior replays exactly for a given seed.
"""

from __future__ import annotations

import math
from collections import deque

from .level import LevelGrid
from .render import cast_ray
from .rng import Rng
from .sim import Bot, BotMode, BotPersona, PLAYER_ID, WorldState, cell_center, wrap_angle

CHASE_RANGE_CELLS = 12.0
ATTACK_RANGE_CELLS = 8.0
REPATH_SECONDS = 4.0
AIM_SIGMA_MAX = 0.15  # radians at skill 0
TURN_RATE = 6.0  # radians per second of bot steering
WAYPOINT_REACH = 20.0  # world units


class BadCell(Exception):
    pass


def plan_path(level: LevelGrid, start: tuple[int, int], goal: tuple[int, int]) -> list[tuple[int, int]]:
    """Shortest 4-connected path from start to goal, inclusive of both.

    BFS with the fixed neighbor order N, E, S, W for deterministic
    tie-breaking.  Returns an empty list when the goal is unreachable.
    """
    for name, cell in (("start", start), ("goal", goal)):
        r, c = cell
        if not level.in_bounds(r, c) or not level.cell(r, c).is_traversable():
            raise BadCell(f"{name} cell {cell} is not traversable")
    if start == goal:
        return [start]
    prev: dict[tuple[int, int], tuple[int, int]] = {start: start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):  # N, E, S, W
            nb = (r + dr, c + dc)
            if nb in prev or not level.in_bounds(*nb) or not level.cell(*nb).is_traversable():
                continue
            prev[nb] = (r, c)
            if nb == goal:
                path = [goal]
                while path[-1] != start:
                    path.append(prev[path[-1]])
                path.reverse()
                return path
            queue.append(nb)
    return []


def line_of_sight(world: WorldState, x0: float, y0: float, x1: float, y1: float) -> bool:
    """True when no solid cell blocks the segment between two points."""
    dist = math.hypot(x1 - x0, y1 - y0)
    if dist < 1e-9:
        return True
    angle = math.atan2(y1 - y0, x1 - x0)
    try:
        _, perp, face, _ = cast_ray(world.level, (x0, y0), angle, world.open_door_cells())
    except ValueError:
        return False
    # Recover the euclidean distance to the wall from the face-normal one.
    cos_axis = abs(math.cos(angle)) if face in ("E", "W") else abs(math.sin(angle))
    euclid = perp / max(cos_axis, 1e-9)
    return euclid >= dist


def random_persona(rng: Rng, skill: float = 0.5) -> BotPersona:
    """Per-episode random appearance: one 24-bit color draw plus texture."""
    word = rng.next_u64()
    color = ((word >> 16) & 0xFF, (word >> 8) & 0xFF, word & 0xFF)
    return BotPersona(skill=skill, color=color, texture_variant=(word >> 24) & 0x7)


def spawn_bot(world: WorldState, spawn: tuple[int, int], persona: BotPersona, shield: int = 3) -> Bot:
    from .sim import Body

    x, y = cell_center(*spawn, world.consts.cell_size)
    body = Body(x=x, y=y, radius=world.consts.player_radius, eye_height=world.consts.eye_standing)
    bot = Bot(id=0, body=body, persona=persona, shield=shield, max_shield=shield)
    world.add_entity(bot)
    return bot


def respawn_bot(world: WorldState, bot: Bot) -> None:
    spawn = world.level.spawn_points[world.rng.randrange(len(world.level.spawn_points))]
    x, y = cell_center(*spawn, world.consts.cell_size)
    b = bot.body
    b.x, b.y, b.z = x, y, 0.0
    b.vx = b.vy = b.vz = 0.0
    b.grounded = True
    b.alive = True
    bot.shield = bot.max_shield
    bot.mode = BotMode.WANDER
    bot.path = []
    bot.path_index = 0
    bot.repath_timer = 0.0
    bot.respawn_timer = 0.0


def damage_bot(world: WorldState, bot: Bot) -> bool:
    """Apply one projectile hit.  Returns True when the shield reached 0
    (a tag): the bot despawns and will respawn after the usual delay."""
    bot.shield -= 1
    if bot.shield > 0:
        return False
    bot.shield = 0
    bot.body.alive = False
    bot.respawn_timer = world.consts.bot_respawn_seconds
    return True


def _steer_along_path(world: WorldState, bot: Bot, dt: float) -> None:
    """Face the current waypoint and walk forward."""
    b = bot.body
    cs = world.consts.cell_size
    while bot.path_index < len(bot.path):
        wx, wy = cell_center(*bot.path[bot.path_index], cs)
        if math.hypot(wx - b.x, wy - b.y) <= WAYPOINT_REACH:
            bot.path_index += 1
        else:
            break
    if bot.path_index >= len(bot.path):
        bot.intents.move = 0
        return
    wx, wy = cell_center(*bot.path[bot.path_index], cs)
    target = math.atan2(wy - b.y, wx - b.x)
    diff = wrap_angle(target - b.yaw)
    max_turn = TURN_RATE * dt
    b.yaw = wrap_angle(b.yaw + max(-max_turn, min(max_turn, diff)))
    bot.intents.move = 1 if abs(diff) < math.pi / 3 else 0
    bot.intents.strafe = 0


def bot_think(world: WorldState, bot_id: int, dt: float) -> None:
    """Stage one tick of intents for a bot: Wander / Chase / Attack."""
    bot = world.entities[bot_id]
    b = bot.body
    player = world.player.body
    cs = world.consts.cell_size
    bot.intents.fire = False
    bot.intents.jump = False

    dist_cells = math.hypot(player.x - b.x, player.y - b.y) / cs
    sees_player = (
        player.alive
        and dist_cells <= CHASE_RANGE_CELLS
        and line_of_sight(world, b.x, b.y, player.x, player.y)
    )

    if sees_player and dist_cells <= ATTACK_RANGE_CELLS:
        bot.mode = BotMode.ATTACK
    elif sees_player:
        bot.mode = BotMode.CHASE
    else:
        bot.mode = BotMode.WANDER

    if bot.mode is BotMode.ATTACK:
        bearing = math.atan2(player.y - b.y, player.x - b.x)
        sigma = (1.0 - bot.persona.skill) * AIM_SIGMA_MAX
        noise = world.rng.gauss(0.0, sigma) if sigma > 0.0 else 0.0
        b.yaw = wrap_angle(bearing + noise)
        b.pitch = 0.0
        bot.intents.move = 0
        bot.intents.strafe = 0
        bot.intents.fire = True
        bot.path = []
        bot.path_index = 0
        return

    if bot.mode is BotMode.CHASE:
        bot.repath_timer -= dt
        player_cell = (int(player.y // cs), int(player.x // cs))
        if bot.repath_timer <= 0.0 or not bot.path or bot.path[-1] != player_cell:
            bot.path = plan_path(world.level, b.cell(cs), player_cell)
            bot.path_index = 0
            bot.repath_timer = 0.5
        _steer_along_path(world, bot, dt)
        return

    # Wander
    bot.repath_timer -= dt
    if bot.repath_timer <= 0.0 or bot.path_index >= len(bot.path):
        floors = world.level.floor_cells()
        target = floors[world.rng.randrange(len(floors))]
        bot.path = plan_path(world.level, b.cell(cs), target)
        bot.path_index = 0
        bot.repath_timer = REPATH_SECONDS
    _steer_along_path(world, bot, dt)
