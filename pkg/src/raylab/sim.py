"""Deterministic fixed-timestep world simulation.

Coordinate conventions (documented once here, used everywhere):

* One grid cell is 100 world units.  ``x`` grows east (increasing column),
  ``y`` grows south (increasing row), ``z`` grows up.  Cell (row, col)
  covers ``x in [col*100, col*100+100)``, ``y in [row*100, row*100+100)``.
* ``yaw`` 0 faces +x; positive yaw turns toward +y.  Forward is
  ``(cos yaw, sin yaw)``, strafe-right is ``(-sin yaw, cos yaw)``.
* Floors sit at ``z = 0``, ceilings at ``z = 100``; a body's ``z`` is its
  feet, the camera eye sits at ``z + eye_height``.

The step is the atomic unit: the world only changes inside
:func:`step_world`, which advances exactly one tick.  All randomness is
drawn from the world's own counter-based RNG so that two worlds with
equal serialized state produce byte-identical successors.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace
from enum import Enum

from .level import CellKind, LevelGrid
from .rng import Rng


@dataclass(frozen=True)
class SimConstants:
    """Tuning constants.  Defaults are engine-family conventional values;
    every one can be overridden through the task config."""

    cell_size: float = 100.0
    max_speed: float = 320.0
    crouch_speed: float = 160.0
    accel: float = 3200.0  # 10 * max_speed per second
    friction: float = 6.0  # per second
    gravity: float = 800.0
    jump_speed: float = 270.0
    pad_vz: float = 500.0
    projectile_speed: float = 1000.0
    projectile_ttl: float = 2.0
    projectile_radius: float = 4.0
    cooldown_ticks: int = 12
    yaw_rate: float = 0.001  # radians per action unit per step
    pitch_rate: float = 0.001
    player_radius: float = 16.0
    body_height: float = 72.0
    eye_standing: float = 64.0
    eye_crouched: float = 40.0
    door_range_cells: float = 1.5
    door_close_delay: float = 2.0
    door_swing_time: float = 0.5
    pit_fall_z: float = -200.0
    bot_respawn_seconds: float = 3.0
    pickup_radius: float = 24.0


PITCH_LIMIT_FACTOR = 0.99  # pitch clamped to +/- (pi/2 * factor)


def wrap_angle(a: float) -> float:
    """Wrap to [-pi, pi)."""
    return (a + math.pi) % (2.0 * math.pi) - math.pi


@dataclass
class ActionVector:
    """The 7-integer agent action.  Out-of-range components are clamped."""

    look_yaw: int = 0
    look_pitch: int = 0
    strafe: int = 0
    move: int = 0
    fire: int = 0
    jump: int = 0
    crouch: int = 0

    @classmethod
    def from_sequence(cls, seq) -> "ActionVector":
        vals = [int(v) for v in seq]
        if len(vals) != 7:
            raise ValueError(f"action must have 7 components, got {len(vals)}")
        return cls(*vals).clamped()

    def clamped(self) -> "ActionVector":
        c = lambda v, lo, hi: max(lo, min(hi, v))
        return ActionVector(
            look_yaw=c(self.look_yaw, -512, 512),
            look_pitch=c(self.look_pitch, -512, 512),
            strafe=c(self.strafe, -1, 1),
            move=c(self.move, -1, 1),
            fire=c(self.fire, 0, 1),
            jump=c(self.jump, 0, 1),
            crouch=c(self.crouch, 0, 1),
        )

    def to_tuple(self) -> tuple[int, ...]:
        return (self.look_yaw, self.look_pitch, self.strafe, self.move, self.fire, self.jump, self.crouch)


ZERO_ACTION = ActionVector()


@dataclass
class Body:
    """Shared kinematic state for the player and bots."""

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0
    pitch: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    radius: float = 16.0
    eye_height: float = 64.0
    grounded: bool = True
    alive: bool = True

    def cell(self, cell_size: float = 100.0) -> tuple[int, int]:
        return (int(self.y // cell_size), int(self.x // cell_size))

    def forward(self) -> tuple[float, float]:
        return (math.cos(self.yaw), math.sin(self.yaw))

    def right(self) -> tuple[float, float]:
        return (-math.sin(self.yaw), math.cos(self.yaw))


@dataclass
class Intents:
    """Movement wishes staged by apply_action / bot_think, consumed by step_world."""

    move: int = 0
    strafe: int = 0
    jump: bool = False
    crouch: bool = False
    fire: bool = False

    def clear(self) -> None:
        self.move = self.strafe = 0
        self.jump = self.crouch = self.fire = False


@dataclass
class PlayerState:
    body: Body = field(default_factory=Body)
    cooldown: int = 0  # ticks until the gadget may fire again
    yaw_step: float = 0.0  # look delta applied this step (for VEL.ROT)
    pitch_step: float = 0.0


class PickupKind(Enum):
    APPLE = 0
    MELON = 1
    LEMON = 2
    GOAL = 3


@dataclass
class Pickup:
    id: int
    kind: PickupKind
    x: float
    y: float
    z: float = 0.0
    radius: float = 24.0
    active: bool = True
    respawn_timer: float = 0.0  # seconds until reactivation; 0 = stays inactive
    respawn_seconds: float = 0.0  # 0 = never respawns


class BotMode(Enum):
    WANDER = 0
    CHASE = 1
    ATTACK = 2


@dataclass(frozen=True)
class BotPersona:
    skill: float = 0.5  # 1.0 = perfect aim, instant reactions
    color: tuple[int, int, int] = (200, 60, 60)
    texture_variant: int = 0


@dataclass
class Bot:
    id: int
    body: Body
    persona: BotPersona
    shield: int = 3
    max_shield: int = 3
    mode: BotMode = BotMode.WANDER
    path: list[tuple[int, int]] = field(default_factory=list)
    path_index: int = 0
    repath_timer: float = 0.0
    respawn_timer: float = 0.0
    cooldown: int = 0
    intents: Intents = field(default_factory=Intents)
    scripted: bool = False  # rail bots used by fixtures ignore the AI


@dataclass
class Projectile:
    id: int
    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float
    owner_id: int  # PLAYER_ID or a bot id
    ttl: float


PLAYER_ID = 0


# --- contact events emitted by step_world, consumed by tasks.handle_event ---


@dataclass(frozen=True)
class PickupTouched:
    tick: int
    pickup_id: int
    kind: PickupKind


@dataclass(frozen=True)
class ProjectileHitBot:
    tick: int
    bot_id: int
    owner_id: int


@dataclass(frozen=True)
class ProjectileHitPlayer:
    tick: int
    owner_id: int


@dataclass(frozen=True)
class PlayerFell:
    tick: int


@dataclass
class DoorState:
    open_amount: float = 0.0  # 0 closed .. 1 fully open
    close_timer: float = 0.0  # seconds since last proximity

    def is_open(self) -> bool:
        return self.open_amount >= 0.99


@dataclass
class WorldState:
    level: LevelGrid
    consts: SimConstants = field(default_factory=SimConstants)
    tick: int = 0
    player: PlayerState = field(default_factory=PlayerState)
    player_intents: Intents = field(default_factory=Intents)
    entities: dict[int, object] = field(default_factory=dict)  # Pickup | Bot | Projectile
    door_states: dict[tuple[int, int], DoorState] = field(default_factory=dict)
    rng: Rng = field(default_factory=lambda: Rng(0))
    pending_reward_events: list = field(default_factory=list)
    next_entity_id: int = 1  # 0 is the player

    def bots(self) -> list[Bot]:
        return [e for e in self.entities.values() if isinstance(e, Bot)]

    def pickups(self) -> list[Pickup]:
        return [e for e in self.entities.values() if isinstance(e, Pickup)]

    def projectiles(self) -> list[Projectile]:
        return [e for e in self.entities.values() if isinstance(e, Projectile)]

    def add_entity(self, entity) -> int:
        entity.id = self.next_entity_id
        self.entities[entity.id] = entity
        self.next_entity_id += 1
        return entity.id

    def open_door_cells(self) -> frozenset[tuple[int, int]]:
        return frozenset(cell for cell, st in self.door_states.items() if st.is_open())

    def is_solid(self, row: int, col: int) -> bool:
        """Solid for horizontal collision at floor level."""
        if not self.level.in_bounds(row, col):
            return True
        cell = self.level.cell(row, col)
        if cell.is_wall():
            return True
        if cell.is_door():
            return not self.door_states[(row, col)].is_open()
        return False


def cell_center(row: int, col: int, cell_size: float = 100.0) -> tuple[float, float]:
    return ((col + 0.5) * cell_size, (row + 0.5) * cell_size)


def make_world(level: LevelGrid, seed: int, consts: SimConstants | None = None) -> WorldState:
    """World with the player at the first spawn point, pickups/goal placed
    from the grid, doors closed.  Task setup (bots, random spawn choice,
    goal policy) layers on top of this."""
    consts = consts or SimConstants()
    world = WorldState(level=level, consts=consts, rng=Rng(seed))
    for (row, col) in level.doors():
        world.door_states[(row, col)] = DoorState()
    kind_map = {
        CellKind.PICKUP_APPLE: PickupKind.APPLE,
        CellKind.PICKUP_MELON: PickupKind.MELON,
        CellKind.PICKUP_LEMON: PickupKind.LEMON,
        CellKind.GOAL: PickupKind.GOAL,
    }
    for r, c, cell in level.iter_cells():
        kind = kind_map.get(cell.kind)
        if kind is not None:
            x, y = cell_center(r, c, consts.cell_size)
            world.add_entity(Pickup(id=0, kind=kind, x=x, y=y, radius=consts.pickup_radius))
    place_player(world, level.spawn_points[0])
    return world


def place_player(world: WorldState, spawn: tuple[int, int], yaw: float = 0.0) -> None:
    body = world.player.body
    body.x, body.y = cell_center(*spawn, world.consts.cell_size)
    body.z = 0.0
    body.vx = body.vy = body.vz = 0.0
    body.yaw = wrap_angle(yaw)
    body.pitch = 0.0
    body.radius = world.consts.player_radius
    body.eye_height = world.consts.eye_standing
    body.grounded = True
    body.alive = True


def apply_action(world: WorldState, action: ActionVector) -> None:
    """Stage an action.  Look deltas apply immediately (no time passes);
    movement/fire intents are consumed by the next step_world call."""
    a = action.clamped()
    c = world.consts
    body = world.player.body
    dyaw = a.look_yaw * c.yaw_rate
    dpitch = a.look_pitch * c.pitch_rate  # positive pitch looks up
    body.yaw = wrap_angle(body.yaw + dyaw)
    limit = PITCH_LIMIT_FACTOR * math.pi / 2.0
    body.pitch = max(-limit, min(limit, body.pitch + dpitch))
    world.player.yaw_step = dyaw
    world.player.pitch_step = dpitch

    it = world.player_intents
    it.move = a.move
    it.strafe = a.strafe
    it.jump = bool(a.jump)
    it.crouch = bool(a.crouch)
    it.fire = bool(a.fire)


def _resolve_axis(world: WorldState, body: Body, axis: int) -> bool:
    """Push the body's circle out of any solid cell along one axis.
    Returns True when a collision occurred."""
    c = world.consts.cell_size
    r = body.radius
    below_floor = body.z < -1e-9  # inside a pit shaft: every non-pit cell is solid
    min_col = int((body.x - r) // c)
    max_col = int((body.x + r) // c)
    min_row = int((body.y - r) // c)
    max_row = int((body.y + r) // c)
    hit = False
    for row in range(min_row, max_row + 1):
        for col in range(min_col, max_col + 1):
            solid = world.is_solid(row, col)
            if not solid and below_floor:
                cell = world.level.cell(row, col) if world.level.in_bounds(row, col) else None
                solid = cell is None or cell.kind is not CellKind.PIT
            if not solid:
                continue
            # Closest point on the cell rectangle to the circle center.
            cx = max(col * c, min(body.x, (col + 1) * c))
            cy = max(row * c, min(body.y, (row + 1) * c))
            dx, dy = body.x - cx, body.y - cy
            if dx * dx + dy * dy >= r * r:
                continue
            hit = True
            if axis == 0:
                if body.x < cx or (body.x == cx and body.vx > 0):
                    body.x = col * c - r
                else:
                    body.x = (col + 1) * c + r
                body.vx = 0.0
            else:
                if body.y < cy or (body.y == cy and body.vy > 0):
                    body.y = row * c - r
                else:
                    body.y = (row + 1) * c + r
                body.vy = 0.0
    return hit


def integrate_body(world: WorldState, body: Body, intents: Intents, dt: float) -> None:
    """One tick of shared kinematics: friction, acceleration, jumping,
    gravity, grid collision with wall slide, pits and launch pads."""
    c = world.consts

    body.eye_height = c.eye_crouched if intents.crouch else c.eye_standing
    cap = c.crouch_speed if intents.crouch else c.max_speed

    if body.grounded:
        f = max(0.0, 1.0 - c.friction * dt)
        body.vx *= f
        body.vy *= f

    if intents.move or intents.strafe:
        fx, fy = body.forward()
        rx, ry = body.right()
        wx = fx * intents.move + rx * intents.strafe
        wy = fy * intents.move + ry * intents.strafe
        norm = math.hypot(wx, wy)
        if norm > 1e-12:
            body.vx += wx / norm * c.accel * dt
            body.vy += wy / norm * c.accel * dt

    speed = math.hypot(body.vx, body.vy)
    if speed > cap:
        body.vx *= cap / speed
        body.vy *= cap / speed

    if intents.jump and body.grounded:
        body.vz = c.jump_speed
        body.grounded = False

    if not body.grounded:
        body.vz -= c.gravity * dt

    body.x += body.vx * dt
    _resolve_axis(world, body, 0)
    body.y += body.vy * dt
    _resolve_axis(world, body, 1)
    body.z += body.vz * dt

    row, col = body.cell(c.cell_size)
    over_pit = world.level.in_bounds(row, col) and world.level.cell(row, col).kind is CellKind.PIT
    if over_pit:
        if body.grounded:
            body.grounded = False
    else:
        if body.z <= 0.0 and body.vz <= 0.0:
            body.z = 0.0
            body.vz = 0.0
            body.grounded = True
        if body.grounded:
            cell = world.level.cell(row, col)
            if cell.kind is CellKind.LAUNCH_PAD:
                body.vz = c.pad_vz
                body.grounded = False


def fire_gadget(world: WorldState, body: Body, owner_id: int, cooldown: int) -> int:
    """Spawn a projectile from the body's eye along its view direction.
    Returns the new cooldown tick count.  Called only when cooldown is 0."""
    c = world.consts
    cp = math.cos(body.pitch)
    vx = math.cos(body.yaw) * cp * c.projectile_speed
    vy = math.sin(body.yaw) * cp * c.projectile_speed
    vz = math.sin(body.pitch) * c.projectile_speed
    proj = Projectile(
        id=0,
        x=body.x,
        y=body.y,
        z=body.z + body.eye_height,
        vx=vx,
        vy=vy,
        vz=vz,
        owner_id=owner_id,
        ttl=c.projectile_ttl,
    )
    world.add_entity(proj)
    return c.cooldown_ticks


def _segment_hits_solid(world: WorldState, x0, y0, x1, y1) -> bool:
    """Conservative sampled check of the 2D segment against solid cells."""
    c = world.consts.cell_size
    steps = max(1, int(math.hypot(x1 - x0, y1 - y0) / (c * 0.25)) + 1)
    for i in range(1, steps + 1):
        t = i / steps
        x = x0 + (x1 - x0) * t
        y = y0 + (y1 - y0) * t
        if world.is_solid(int(y // c), int(x // c)):
            return True
    return False


def _segment_hits_cylinder(x0, y0, z0, x1, y1, z1, cx, cy, radius, z_lo, z_hi) -> bool:
    """2D closest-approach of the segment to the cylinder axis, with a
    vertical overlap check at the closest point."""
    dx, dy = x1 - x0, y1 - y0
    len2 = dx * dx + dy * dy
    t = 0.0 if len2 < 1e-12 else max(0.0, min(1.0, ((cx - x0) * dx + (cy - y0) * dy) / len2))
    px, py = x0 + dx * t, y0 + dy * t
    if (px - cx) ** 2 + (py - cy) ** 2 > radius * radius:
        return False
    pz = z0 + (z1 - z0) * t
    return z_lo <= pz <= z_hi


def _advance_projectiles(world: WorldState, dt: float) -> None:
    c = world.consts
    body = world.player.body
    dead: list[int] = []
    for proj in world.projectiles():
        x0, y0, z0 = proj.x, proj.y, proj.z
        x1 = x0 + proj.vx * dt
        y1 = y0 + proj.vy * dt
        z1 = z0 + proj.vz * dt
        proj.ttl -= dt

        hit = False
        # Bots are hit by player projectiles (and by other bots' fire).
        for bot in world.bots():
            if bot.id == proj.owner_id or not bot.body.alive:
                continue
            if _segment_hits_cylinder(
                x0, y0, z0, x1, y1, z1, bot.body.x, bot.body.y,
                bot.body.radius + c.projectile_radius, bot.body.z, bot.body.z + c.body_height,
            ):
                world.pending_reward_events.append(ProjectileHitBot(world.tick, bot.id, proj.owner_id))
                hit = True
                break
        if not hit and proj.owner_id != PLAYER_ID and body.alive:
            if _segment_hits_cylinder(
                x0, y0, z0, x1, y1, z1, body.x, body.y,
                body.radius + c.projectile_radius, body.z, body.z + c.body_height,
            ):
                world.pending_reward_events.append(ProjectileHitPlayer(world.tick, proj.owner_id))
                hit = True
        if not hit and (_segment_hits_solid(world, x0, y0, x1, y1) or z1 <= 0.0 or z1 >= c.cell_size):
            hit = True

        if hit or proj.ttl <= 0.0:
            dead.append(proj.id)
        else:
            proj.x, proj.y, proj.z = x1, y1, z1
    for pid in dead:
        del world.entities[pid]


def _update_doors(world: WorldState, dt: float) -> None:
    c = world.consts
    centers = [(world.player.body.x, world.player.body.y)]
    centers += [(b.body.x, b.body.y) for b in world.bots() if b.body.alive]
    rng_range = c.door_range_cells * c.cell_size
    for (row, col), st in world.door_states.items():
        dx, dy = cell_center(row, col, c.cell_size)
        near = any(math.hypot(px - dx, py - dy) <= rng_range for px, py in centers)
        if near:
            st.close_timer = 0.0
            st.open_amount = min(1.0, st.open_amount + dt / c.door_swing_time)
        else:
            st.close_timer += dt
            if st.close_timer >= c.door_close_delay:
                st.open_amount = max(0.0, st.open_amount - dt / c.door_swing_time)


def _update_pickups(world: WorldState, dt: float) -> None:
    body = world.player.body
    for p in world.pickups():
        if not p.active:
            if p.respawn_timer > 0.0:
                p.respawn_timer -= dt
                if p.respawn_timer <= 0.0:
                    p.respawn_timer = 0.0
                    p.active = True
            continue
        if not body.alive:
            continue
        reach = p.radius + body.radius
        if (body.x - p.x) ** 2 + (body.y - p.y) ** 2 <= reach * reach and abs(body.z - p.z) < world.consts.body_height:
            world.pending_reward_events.append(PickupTouched(world.tick, p.id, p.kind))


def step_world(world: WorldState, dt: float) -> None:
    """Advance exactly one simulation tick."""
    from . import bots as bots_mod  # runtime import avoids a module cycle

    c = world.consts
    player = world.player
    _update_doors(world, dt)

    integrate_body(world, player.body, world.player_intents, dt)
    if player.cooldown > 0:
        player.cooldown -= 1
    if world.player_intents.fire and player.cooldown == 0 and player.body.alive:
        player.cooldown = fire_gadget(world, player.body, PLAYER_ID, player.cooldown)

    for bot in sorted(world.bots(), key=lambda b: b.id):
        if not bot.body.alive:
            if bot.respawn_timer > 0.0:
                bot.respawn_timer -= dt
                if bot.respawn_timer <= 0.0:
                    bots_mod.respawn_bot(world, bot)
            continue
        if not bot.scripted:
            bots_mod.bot_think(world, bot.id, dt)
        integrate_body(world, bot.body, bot.intents, dt)
        if bot.cooldown > 0:
            bot.cooldown -= 1
        if bot.intents.fire and bot.cooldown == 0:
            bot.cooldown = fire_gadget(world, bot.body, bot.id, bot.cooldown)
        bot.intents.fire = False
        if bot.body.z < c.pit_fall_z:  # fell into a pit; no event, just respawn
            bot.body.alive = False
            bot.respawn_timer = c.bot_respawn_seconds

    _advance_projectiles(world, dt)
    _update_pickups(world, dt)

    if player.body.alive and player.body.z < c.pit_fall_z:
        world.pending_reward_events.append(PlayerFell(world.tick))
        player.body.alive = False  # tasks respawn the player on the Fell event

    world.player_intents.clear()
    world.tick += 1


# --- snapshot serialization (versioned, little-endian) -----------------------

_SNAP_MAGIC = b"RLW\x01"


def _pack_body(b: Body) -> bytes:
    return struct.pack(
        "<11d2B",
        b.x, b.y, b.z, b.yaw, b.pitch, b.vx, b.vy, b.vz, b.radius, b.eye_height,
        0.0, int(b.grounded), int(b.alive),
    )


def _unpack_body(buf: bytes, off: int) -> tuple[Body, int]:
    vals = struct.unpack_from("<11d2B", buf, off)
    off += struct.calcsize("<11d2B")
    b = Body(
        x=vals[0], y=vals[1], z=vals[2], yaw=vals[3], pitch=vals[4],
        vx=vals[5], vy=vals[6], vz=vals[7], radius=vals[8], eye_height=vals[9],
        grounded=bool(vals[11]), alive=bool(vals[12]),
    )
    return b, off


def serialize_world(world: WorldState) -> bytes:
    """Snapshot of the mutable state.  The level itself is referenced by a
    hash of its serialized text; deserialization takes the level object."""
    from .level import serialize_text_level

    out = [_SNAP_MAGIC]
    level_hash = hashlib.sha256(serialize_text_level(world.level).encode()).digest()[:16]
    out.append(level_hash)
    spare = world.rng._spare_gauss
    out.append(struct.pack(
        "<QQB d Q i",
        world.tick, world.rng.state, int(spare is not None), spare or 0.0,
        world.next_entity_id, world.player.cooldown,
    ))
    out.append(struct.pack("<2d", world.player.yaw_step, world.player.pitch_step))
    out.append(_pack_body(world.player.body))
    it = world.player_intents
    out.append(struct.pack("<2i3B", it.move, it.strafe, int(it.jump), int(it.crouch), int(it.fire)))

    doors = sorted(world.door_states.items())
    out.append(struct.pack("<I", len(doors)))
    for (row, col), st in doors:
        out.append(struct.pack("<2i2d", row, col, st.open_amount, st.close_timer))

    ents = sorted(world.entities.items())
    out.append(struct.pack("<I", len(ents)))
    for eid, ent in ents:
        if isinstance(ent, Pickup):
            out.append(struct.pack("<BQ", 0, eid))
            out.append(struct.pack(
                "<i4dB2d", ent.kind.value, ent.x, ent.y, ent.z, ent.radius,
                int(ent.active), ent.respawn_timer, ent.respawn_seconds,
            ))
        elif isinstance(ent, Bot):
            out.append(struct.pack("<BQ", 1, eid))
            out.append(_pack_body(ent.body))
            out.append(struct.pack(
                "<d3Bi2i2B", ent.persona.skill, *ent.persona.color,
                ent.persona.texture_variant, ent.shield, ent.max_shield,
                ent.mode.value, int(ent.scripted),
            ))
            out.append(struct.pack("<2d i", ent.repath_timer, ent.respawn_timer, ent.cooldown))
            out.append(struct.pack("<2I", len(ent.path), ent.path_index))
            for (r, c) in ent.path:
                out.append(struct.pack("<2i", r, c))
            bi = ent.intents
            out.append(struct.pack("<2i3B", bi.move, bi.strafe, int(bi.jump), int(bi.crouch), int(bi.fire)))
        elif isinstance(ent, Projectile):
            out.append(struct.pack("<BQ", 2, eid))
            out.append(struct.pack("<7dQ", ent.x, ent.y, ent.z, ent.vx, ent.vy, ent.vz, ent.ttl, ent.owner_id))
        else:  # pragma: no cover - defensive
            raise TypeError(f"unserializable entity {type(ent)}")
    return b"".join(out)


def deserialize_world(buf: bytes, level: LevelGrid, consts: SimConstants | None = None) -> WorldState:
    from .level import serialize_text_level

    if buf[:4] != _SNAP_MAGIC:
        raise ValueError("bad snapshot magic")
    off = 4
    level_hash = buf[off:off + 16]
    off += 16
    expect = hashlib.sha256(serialize_text_level(level).encode()).digest()[:16]
    if level_hash != expect:
        raise ValueError("snapshot was taken on a different level")

    world = WorldState(level=level, consts=consts or SimConstants())
    tick, rng_state, has_spare, spare, next_id, cooldown = struct.unpack_from("<QQB d Q i", buf, off)
    off += struct.calcsize("<QQB d Q i")
    world.tick = tick
    world.rng.state = rng_state
    world.rng._spare_gauss = spare if has_spare else None
    world.next_entity_id = next_id
    world.player.cooldown = cooldown
    world.player.yaw_step, world.player.pitch_step = struct.unpack_from("<2d", buf, off)
    off += 16
    world.player.body, off = _unpack_body(buf, off)
    mv, sf, jp, cr, fi = struct.unpack_from("<2i3B", buf, off)
    off += struct.calcsize("<2i3B")
    world.player_intents = Intents(move=mv, strafe=sf, jump=bool(jp), crouch=bool(cr), fire=bool(fi))

    (ndoors,) = struct.unpack_from("<I", buf, off)
    off += 4
    for _ in range(ndoors):
        row, col, amt, timer = struct.unpack_from("<2i2d", buf, off)
        off += struct.calcsize("<2i2d")
        world.door_states[(row, col)] = DoorState(open_amount=amt, close_timer=timer)

    (nents,) = struct.unpack_from("<I", buf, off)
    off += 4
    for _ in range(nents):
        etype, eid = struct.unpack_from("<BQ", buf, off)
        off += struct.calcsize("<BQ")
        if etype == 0:
            kind, x, y, z, radius, active, rt, rs = struct.unpack_from("<i4dB2d", buf, off)
            off += struct.calcsize("<i4dB2d")
            world.entities[eid] = Pickup(
                id=eid, kind=PickupKind(kind), x=x, y=y, z=z, radius=radius,
                active=bool(active), respawn_timer=rt, respawn_seconds=rs,
            )
        elif etype == 1:
            body, off = _unpack_body(buf, off)
            skill, cr_, cg, cb, tv, shield, max_shield, mode, scripted = struct.unpack_from("<d3Bi2i2B", buf, off)
            off += struct.calcsize("<d3Bi2i2B")
            repath, respawn, bcool = struct.unpack_from("<2d i", buf, off)
            off += struct.calcsize("<2d i")
            npath, pidx = struct.unpack_from("<2I", buf, off)
            off += 8
            path = []
            for _ in range(npath):
                r, c = struct.unpack_from("<2i", buf, off)
                off += 8
                path.append((r, c))
            mv, sf, jp, crch, fi = struct.unpack_from("<2i3B", buf, off)
            off += struct.calcsize("<2i3B")
            world.entities[eid] = Bot(
                id=eid, body=body,
                persona=BotPersona(skill=skill, color=(cr_, cg, cb), texture_variant=tv),
                shield=shield, max_shield=max_shield, mode=BotMode(mode), scripted=bool(scripted),
                path=path, path_index=pidx, repath_timer=repath, respawn_timer=respawn, cooldown=bcool,
                intents=Intents(move=mv, strafe=sf, jump=bool(jp), crouch=bool(crch), fire=bool(fi)),
            )
        elif etype == 2:
            x, y, z, vx, vy, vz, ttl, owner = struct.unpack_from("<7dQ", buf, off)
            off += struct.calcsize("<7dQ")
            world.entities[eid] = Projectile(id=eid, x=x, y=y, z=z, vx=vx, vy=vy, vz=vz, ttl=ttl, owner_id=owner)
        else:
            raise ValueError(f"unknown entity type {etype}")
    return world


def world_hash(world: WorldState) -> str:
    return hashlib.sha256(serialize_world(world)).hexdigest()
