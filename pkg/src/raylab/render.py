"""Headless software raycaster.

Renders the world from the player's egocentric viewpoint: one grid-DDA
ray per screen column for the walls, a per-pixel cast for floor and
ceiling, and depth-tested billboards for entities.  Output is a
:class:`FrameBuffer` holding an RGB byte image and a float depth image
(perpendicular distance in cell units).

The renderer is pure and bitwise deterministic: the same world, camera
and dimensions always produce the same bytes.  See ``docs/palette.md``
for the color table.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .level import CellKind, LevelGrid
from .sim import Bot, Pickup, PickupKind, Projectile, WorldState


class BadDimensions(Exception):
    pass


class EscapedGrid(Exception):
    """A ray left the grid; impossible while the border invariant holds."""


@dataclass
class Camera:
    x: float  # world units
    y: float
    z_eye: float
    yaw: float
    pitch: float = 0.0
    fov_h: float = math.pi / 2

    @classmethod
    def from_player(cls, world: WorldState) -> "Camera":
        b = world.player.body
        return cls(x=b.x, y=b.y, z_eye=b.z + b.eye_height, yaw=b.yaw, pitch=b.pitch)


@dataclass
class FrameBuffer:
    width: int
    height: int
    rgb: np.ndarray  # (height, width, 3) uint8
    depth: np.ndarray  # (height, width) float32, cell units


DEPTH_MAX_CELLS = 30.0  # quantization range for the RGBD depth byte
FOG_CELLS = 20.0  # linear fog reaches full strength here
MIN_FOG = 0.15

# Science-fiction palette; the authoritative table lives in docs/palette.md.
WALL_BASE = np.array([96, 120, 150], dtype=np.float32)
DOOR_BASE = np.array([205, 120, 40], dtype=np.float32)
FLOOR_BASE = np.array([58, 60, 68], dtype=np.float32)
FLOOR_ALT = np.array([48, 50, 58], dtype=np.float32)
CEILING_BASE = np.array([28, 30, 40], dtype=np.float32)
PAD_COLOR = np.array([150, 60, 210], dtype=np.float32)
PIT_COLOR = np.array([4, 4, 6], dtype=np.float32)
GOAL_FLOOR = np.array([40, 160, 170], dtype=np.float32)
SPAWN_FLOOR = np.array([70, 72, 84], dtype=np.float32)

PICKUP_COLORS = {
    PickupKind.APPLE: (225, 50, 45),
    PickupKind.MELON: (70, 210, 80),
    PickupKind.LEMON: (235, 220, 60),
    PickupKind.GOAL: (90, 240, 255),
}
PROJECTILE_COLOR = (255, 120, 255)


def cast_ray(
    level: LevelGrid,
    origin: tuple[float, float],
    angle: float,
    open_doors: frozenset[tuple[int, int]] = frozenset(),
) -> tuple[tuple[int, int], float, str, float]:
    """Grid DDA from ``origin`` (world units) along ``angle``.

    Returns ``(hit_cell, perpendicular_distance, wall_face, wall_u)``:
    the first solid cell (wall, or door not in ``open_doors``), the
    distance from the origin to the struck wall plane measured along the
    plane's normal (this is what removes the fisheye effect for a wall
    seen head-on), the face that was struck (one of ``"N E S W"``, named
    from the wall cell's perspective), and the fractional hit coordinate
    along that face.
    """
    cs = 100.0
    x, y = origin
    col = int(x // cs)
    row = int(y // cs)
    if not level.in_bounds(row, col) or level.cell(row, col).is_wall():
        raise ValueError("ray origin must lie inside a non-wall cell")

    dx = math.cos(angle)
    dy = math.sin(angle)
    inv_dx = abs(cs / dx) if dx != 0.0 else math.inf
    inv_dy = abs(cs / dy) if dy != 0.0 else math.inf
    step_c = 1 if dx >= 0 else -1
    step_r = 1 if dy >= 0 else -1
    side_x = ((col + 1) * cs - x) * (inv_dx / cs) if dx >= 0 else (x - col * cs) * (inv_dx / cs)
    side_y = ((row + 1) * cs - y) * (inv_dy / cs) if dy >= 0 else (y - row * cs) * (inv_dy / cs)

    while True:
        if side_x <= side_y:
            col += step_c
            side_hit = 0
            ray_len = side_x  # euclidean distance to the crossed plane
            side_x += inv_dx
        else:
            row += step_r
            side_hit = 1
            ray_len = side_y
            side_y += inv_dy
        if not level.in_bounds(row, col):
            raise EscapedGrid(f"ray escaped at row {row}, col {col}")
        cell = level.cell(row, col)
        solid = cell.is_wall() or (cell.is_door() and (row, col) not in open_doors)
        if solid:
            if side_hit == 0:
                plane_x = col * cs if step_c > 0 else (col + 1) * cs
                perp = abs(plane_x - x)
                face = "W" if step_c > 0 else "E"
                hit_y = y + dy * ray_len
                wall_u = (hit_y - row * cs) / cs
            else:
                plane_y = row * cs if step_r > 0 else (row + 1) * cs
                perp = abs(plane_y - y)
                face = "N" if step_r > 0 else "S"
                hit_x = x + dx * ray_len
                wall_u = (hit_x - col * cs) / cs
            return (row, col), perp, face, min(max(wall_u, 0.0), 1.0)


_grid_cache: "weakref.WeakKeyDictionary[LevelGrid, tuple]" = weakref.WeakKeyDictionary()

_KIND_IDS = {k: i for i, k in enumerate(CellKind)}


def _level_arrays(level: LevelGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(kind ids, variants, wall mask) as numpy grids, cached per level."""
    cached = _grid_cache.get(level)
    if cached is None:
        kinds = np.array([_KIND_IDS[c.kind] for c in level.cells], dtype=np.uint8)
        kinds = kinds.reshape(level.height, level.width)
        variants = np.array([c.variant for c in level.cells], dtype=np.uint8)
        variants = variants.reshape(level.height, level.width)
        walls = kinds == _KIND_IDS[CellKind.WALL]
        cached = (kinds, variants, walls)
        _grid_cache[level] = cached
    return cached


def _fog(dist: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - dist / FOG_CELLS, MIN_FOG, 1.0).astype(np.float32)


def render_frame(world: WorldState, camera: Camera, width: int, height: int) -> FrameBuffer:
    if width < 8 or height < 8:
        raise BadDimensions(f"frame must be at least 8x8, got {width}x{height}")

    level = world.level
    kinds, variants, walls = _level_arrays(level)
    solid = walls.copy()
    for (row, col), st in world.door_states.items():
        if not st.is_open():
            solid[row, col] = True

    cs = world.consts.cell_size
    pos_x = camera.x / cs
    pos_y = camera.y / cs
    eye = camera.z_eye / cs

    half_tan = math.tan(camera.fov_h / 2.0)
    cam_lat = ((2.0 * (np.arange(width, dtype=np.float64) + 0.5) / width) - 1.0) * half_tan
    fx, fy = math.cos(camera.yaw), math.sin(camera.yaw)
    rx, ry = -fy, fx
    dir_x = fx + rx * cam_lat
    dir_y = fy + ry * cam_lat

    # --- vectorized DDA over all columns ---
    with np.errstate(divide="ignore"):
        delta_x = np.abs(1.0 / dir_x)
        delta_y = np.abs(1.0 / dir_y)
    map_c = np.full(width, int(pos_x), dtype=np.int64)
    map_r = np.full(width, int(pos_y), dtype=np.int64)
    step_c = np.where(dir_x >= 0, 1, -1)
    step_r = np.where(dir_y >= 0, 1, -1)
    side_x = np.where(dir_x >= 0, (map_c + 1.0 - pos_x), (pos_x - map_c)) * delta_x
    side_y = np.where(dir_y >= 0, (map_r + 1.0 - pos_y), (pos_y - map_r)) * delta_y

    perp = np.zeros(width, dtype=np.float64)
    hit_side = np.zeros(width, dtype=np.int8)  # 0 = vertical (x) face, 1 = horizontal
    active = np.ones(width, dtype=bool)
    max_iters = (level.width + level.height) * 2
    for _ in range(max_iters):
        if not active.any():
            break
        go_x = active & (side_x <= side_y)
        go_y = active & ~go_x
        map_c = np.where(go_x, map_c + step_c, map_c)
        map_r = np.where(go_y, map_r + step_r, map_r)
        hit_side = np.where(go_x, 0, np.where(go_y, 1, hit_side)).astype(np.int8)
        dist_now = np.where(go_x, side_x, side_y)
        side_x = np.where(go_x, side_x + delta_x, side_x)
        side_y = np.where(go_y, side_y + delta_y, side_y)
        inside = (map_r >= 0) & (map_r < level.height) & (map_c >= 0) & (map_c < level.width)
        if not inside.all():
            raise EscapedGrid("a column ray left the grid")
        hits = active & solid[map_r, map_c]
        # dist_now is the ray parameter with the unnormalized direction,
        # i.e. the projection onto the view axis: fisheye-free by design.
        perp = np.where(hits, dist_now, perp)
        active &= ~hits
    else:
        if active.any():
            raise EscapedGrid("ray iteration cap exceeded")

    perp = np.maximum(perp, 1e-6)

    # Fractional hit coordinate along the struck face, for edge shading.
    wall_hit_x = pos_x + dir_x * perp
    wall_hit_y = pos_y + dir_y * perp
    wall_u = np.where(hit_side == 0, wall_hit_y - np.floor(wall_hit_y), wall_hit_x - np.floor(wall_hit_x))

    ppd = (width / 2.0) / half_tan  # pixels per cell unit at distance 1
    horizon = height / 2.0 + math.tan(camera.pitch) * ppd

    ys = np.arange(height, dtype=np.float64)[:, None] + 0.5
    top = horizon - (1.0 - eye) * ppd / perp
    bottom = horizon + eye * ppd / perp
    wall_mask = (ys >= top[None, :]) & (ys < bottom[None, :])

    # Per-column wall color.
    hit_kind = kinds[map_r, map_c]
    hit_variant = variants[map_r, map_c].astype(np.float32)
    is_door = (hit_kind == _KIND_IDS[CellKind.DOOR_EW]) | (hit_kind == _KIND_IDS[CellKind.DOOR_NS])
    base = np.where(is_door[:, None], DOOR_BASE[None, :], WALL_BASE[None, :]).astype(np.float32)
    shade = np.where(hit_side == 0, 1.0, 0.72).astype(np.float32)  # N/S faces darker
    vtint = (0.85 + 0.05 * hit_variant).astype(np.float32)
    edge = np.where(np.abs(wall_u - 0.5) > 0.46, 0.55, 1.0).astype(np.float32)
    col_color = base * (shade * vtint * edge * _fog(perp))[:, None]

    rgb = np.zeros((height, width, 3), dtype=np.float32)
    depth = np.zeros((height, width), dtype=np.float64)
    rgb[:] = np.where(wall_mask[:, :, None], col_color[None, :, :], 0.0)
    depth[:] = np.where(wall_mask, perp[None, :], 0.0)

    # --- floor and ceiling per-pixel cast ---
    off = ys - horizon  # positive below the horizon
    with np.errstate(divide="ignore", invalid="ignore"):
        floor_dist = np.where(off > 1e-9, eye * ppd / np.maximum(off, 1e-9), np.inf)
        ceil_dist = np.where(off < -1e-9, (1.0 - eye) * ppd / np.maximum(-off, 1e-9), np.inf)
    flat_mask = ~wall_mask
    floor_side = flat_mask & (off >= 0)
    ceil_side = flat_mask & (off < 0)

    for side_mask, dist_col, is_floor in ((floor_side, floor_dist, True), (ceil_side, ceil_dist, False)):
        if not side_mask.any():
            continue
        d = np.broadcast_to(dist_col, (height, width))[side_mask]
        d = np.minimum(d, 1e4)
        px_cols = np.broadcast_to(np.arange(width)[None, :], (height, width))[side_mask]
        wx = pos_x + dir_x[px_cols] * d
        wy = pos_y + dir_y[px_cols] * d
        cxi = np.clip(wx.astype(np.int64), 0, level.width - 1)
        cyi = np.clip(wy.astype(np.int64), 0, level.height - 1)
        if is_floor:
            k = kinds[cyi, cxi]
            checker = ((cxi + cyi) & 1).astype(bool)
            color = np.where(checker[:, None], FLOOR_ALT[None, :], FLOOR_BASE[None, :])
            color = np.where((k == _KIND_IDS[CellKind.LAUNCH_PAD])[:, None], PAD_COLOR[None, :], color)
            color = np.where((k == _KIND_IDS[CellKind.PIT])[:, None], PIT_COLOR[None, :], color)
            color = np.where((k == _KIND_IDS[CellKind.GOAL])[:, None], GOAL_FLOOR[None, :], color)
            color = np.where((k == _KIND_IDS[CellKind.SPAWN])[:, None], SPAWN_FLOOR[None, :], color)
        else:
            color = np.broadcast_to(CEILING_BASE[None, :], (len(d), 3))
        rgb[side_mask] = color * _fog(d)[:, None]
        depth[side_mask] = d

    # --- entity billboards, far to near ---
    sprites = []
    for ent in world.entities.values():
        if isinstance(ent, Pickup):
            if not ent.active:
                continue
            r = ent.radius / cs
            sprites.append((ent.x / cs, ent.y / cs, ent.z / cs, r, 2 * r, PICKUP_COLORS[ent.kind], "ball"))
        elif isinstance(ent, Bot):
            if not ent.body.alive:
                continue
            r = ent.body.radius / cs
            h = world.consts.body_height / cs
            sprites.append((ent.body.x / cs, ent.body.y / cs, ent.body.z / cs, r, h, ent.persona.color, "bot"))
        elif isinstance(ent, Projectile):
            r = world.consts.projectile_radius / cs * 2.0  # tracers drawn oversized
            sprites.append((ent.x / cs, ent.y / cs, ent.z / cs - r, r, 2 * r, PROJECTILE_COLOR, "ball"))

    order = []
    for s in sprites:
        sx, sy = s[0] - pos_x, s[1] - pos_y
        sdepth = sx * fx + sy * fy
        if sdepth > 0.05:
            order.append((sdepth, s))
    order.sort(key=lambda t: -t[0])

    for sdepth, (sx_c, sy_c, sz, r, h, color, shape) in order:
        sx, sy = sx_c - pos_x, sy_c - pos_y
        lateral = sx * rx + sy * ry
        cx_px = width / 2.0 + lateral / sdepth * ppd
        half_w = r / sdepth * ppd
        top_px = horizon - (sz + h - eye) * ppd / sdepth
        bot_px = horizon - (sz - eye) * ppd / sdepth
        x0 = max(0, int(math.floor(cx_px - half_w)))
        x1 = min(width, int(math.ceil(cx_px + half_w)) + 1)
        y0 = max(0, int(math.floor(top_px)))
        y1 = min(height, int(math.ceil(bot_px)) + 1)
        if x0 >= x1 or y0 >= y1:
            continue
        sub_x = np.arange(x0, x1, dtype=np.float64) + 0.5
        sub_y = np.arange(y0, y1, dtype=np.float64)[:, None] + 0.5
        inside_x = np.abs(sub_x - cx_px) <= half_w
        inside = inside_x[None, :] & (sub_y >= top_px) & (sub_y < bot_px)
        if shape == "ball":
            ry_c = (top_px + bot_px) / 2.0
            rr = np.maximum((bot_px - top_px) / 2.0, 1e-6)
            norm = ((sub_x - cx_px) / np.maximum(half_w, 1e-6)) ** 2 + ((sub_y - ry_c) / rr) ** 2
            inside &= norm <= 1.0
        visible = inside & (sdepth < depth[y0:y1, x0:x1])
        if not visible.any():
            continue
        tile = np.empty((y1 - y0, x1 - x0, 3), dtype=np.float32)
        tile[:] = np.asarray(color, dtype=np.float32)
        if shape == "bot":
            span = max(bot_px - top_px, 1e-6)
            band = (sub_y[:, 0] >= top_px + 0.12 * span) & (sub_y[:, 0] <= top_px + 0.26 * span)
            tile[band, :, :] = np.asarray((30, 30, 40), dtype=np.float32)
            edge_px = np.abs(sub_x - cx_px) > 0.8 * max(half_w, 1e-6)
            tile[:, edge_px, :] *= 0.55
        tile *= _fog(np.float64(sdepth))
        region = rgb[y0:y1, x0:x1]
        region[visible] = tile[visible]
        depth[y0:y1, x0:x1][visible] = sdepth

    rgb8 = np.clip(rgb + 0.5, 0, 255).astype(np.uint8)
    return FrameBuffer(width=width, height=height, rgb=rgb8, depth=np.maximum(depth, 1e-4).astype(np.float32))


class PixelFormat:
    RGB_INTERLACED = "RGB_INTERLACED"
    RGBD_INTERLACED = "RGBD_INTERLACED"


def encode_observation(frame: FrameBuffer, pixel_format: str) -> bytes:
    """Pixel-interleaved byte encoding of a frame.

    RGBD appends a per-pixel depth byte: ``round(255 * min(d, D) / D)``
    with ``D`` = 30 cells, round-half-up.  The first three channels are
    byte-identical to the RGB encoding of the same frame.
    """
    if pixel_format == PixelFormat.RGB_INTERLACED:
        return frame.rgb.tobytes()
    if pixel_format == PixelFormat.RGBD_INTERLACED:
        scaled = 255.0 * np.minimum(frame.depth.astype(np.float64), DEPTH_MAX_CELLS) / DEPTH_MAX_CELLS
        depth_byte = np.floor(scaled + 0.5).astype(np.uint8)  # round half up
        out = np.concatenate([frame.rgb, depth_byte[:, :, None]], axis=2)
        return out.tobytes()
    raise ValueError(f"unknown pixel format {pixel_format!r}")


def frame_to_ppm(frame: FrameBuffer) -> bytes:
    """Binary PPM dump for debugging via the CLI."""
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode()
    return header + frame.rgb.tobytes()
