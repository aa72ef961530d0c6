"""Network play: a WebSocket server streaming rendered frames.

One TCP port serves two things:

* WebSocket upgrade requests get an interactive session speaking the
  binary protocol below.
* Plain GET requests are answered from ``web_root`` (when configured) so
  a browser client can be served from the same origin.

Wire protocol (all integers little-endian):

* On connect the server sends one JSON text frame describing the session:
  ``{"protocol": 1, "level": ..., "width": ..., "height": ..., "fps": ...,
  "observation": ..., "pacing": "lockstep" | "realtime"}``.
* Client to server, binary:
  * ``0x01`` ACTION: 7 x int16 action values, then uint16 num_steps.
  * ``0x03`` RESET: uint64 seed.
* Server to client, binary ``0x02`` FRAME:
  uint32 tick, float32 step reward, float32 episode score, uint16 width,
  uint16 height, uint8 channels, width*height*channels pixel bytes,
  3 x float32 translational velocity, 3 x float32 rotational velocity,
  uint8 done flag.

In lockstep pacing the server answers every ACTION with exactly one
FRAME, and stepping only happens on ACTION.  In realtime pacing the
server steps and streams at the configured fps using the most recently
received action.
"""

from __future__ import annotations

import base64
import hashlib
import json
import mimetypes
import os
import socket
import socketserver
import struct
import threading
import time
from dataclasses import dataclass, field

from . import PROTOCOL_VERSION
from .env import EnvConfig, Environment, EpisodeFinished, create_env
from .render import PixelFormat
from .sim import ActionVector

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

MSG_ACTION = 0x01
MSG_FRAME = 0x02
MSG_RESET = 0x03

OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

ACTION_STRUCT = struct.Struct("<B7hH")
RESET_STRUCT = struct.Struct("<BQ")
FRAME_HEAD = struct.Struct("<BIffHHB")
FRAME_TAIL = struct.Struct("<3f3fB")


class ProtocolError(Exception):
    pass


# --- RFC 6455 framing --------------------------------------------------------


def websocket_accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + _WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_ws_frame(payload: bytes, opcode: int = OP_BINARY, mask: bool = False) -> bytes:
    head = bytearray([0x80 | opcode])
    length = len(payload)
    mask_bit = 0x80 if mask else 0x00
    if length < 126:
        head.append(mask_bit | length)
    elif length < 1 << 16:
        head.append(mask_bit | 126)
        head += struct.pack(">H", length)
    else:
        head.append(mask_bit | 127)
        head += struct.pack(">Q", length)
    if not mask:
        return bytes(head) + payload
    key = os.urandom(4)
    head += key
    masked = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return bytes(head) + masked


def read_exact(rfile, n: int) -> bytes:
    chunks = []
    while n:
        chunk = rfile.read(n)
        if not chunk:
            raise ConnectionError("peer closed mid-frame")
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def read_ws_frame(rfile) -> tuple[int, bytes]:
    """Read one frame, returning (opcode, unmasked payload)."""
    b0, b1 = read_exact(rfile, 2)
    if not b0 & 0x80:
        raise ProtocolError("fragmented frames are not supported")
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", read_exact(rfile, 2))
    elif length == 127:
        (length,) = struct.unpack(">Q", read_exact(rfile, 8))
    key = read_exact(rfile, 4) if masked else None
    payload = read_exact(rfile, length)
    if key:
        payload = bytes(b ^ key[i % 4] for i, b in enumerate(payload))
    return opcode, payload


# --- message codec -----------------------------------------------------------


def encode_action_message(action, num_steps: int = 1) -> bytes:
    if not isinstance(action, ActionVector):
        action = ActionVector.from_sequence(action)
    return ACTION_STRUCT.pack(MSG_ACTION, *action.to_tuple(), num_steps)


def decode_action_message(payload: bytes) -> tuple[ActionVector, int]:
    if len(payload) != ACTION_STRUCT.size:
        raise ProtocolError(f"ACTION must be {ACTION_STRUCT.size} bytes, got {len(payload)}")
    fields = ACTION_STRUCT.unpack(payload)
    return ActionVector.from_sequence(fields[1:8]), fields[8]


def encode_reset_message(seed: int) -> bytes:
    return RESET_STRUCT.pack(MSG_RESET, seed)


def decode_reset_message(payload: bytes) -> int:
    if len(payload) != RESET_STRUCT.size:
        raise ProtocolError(f"RESET must be {RESET_STRUCT.size} bytes, got {len(payload)}")
    return RESET_STRUCT.unpack(payload)[1]


def encode_frame_message(env: Environment, step_reward: float, done: bool) -> bytes:
    cfg = env.config
    obs = env.observations()
    name = cfg.observation_names[0]
    pixels = obs[name]
    channels = pixels.shape[2]
    b = env.world.player.body
    p = env.world.player
    head = FRAME_HEAD.pack(
        MSG_FRAME, env.tick, step_reward, env.episode_score,
        cfg.width, cfg.height, channels,
    )
    tail = FRAME_TAIL.pack(
        b.vx, b.vy, b.vz,
        p.yaw_step / env.dt, p.pitch_step / env.dt, 0.0,
        1 if done else 0,
    )
    return head + pixels.tobytes() + tail


@dataclass
class DecodedFrame:
    tick: int
    reward: float
    score: float
    width: int
    height: int
    channels: int
    pixels: bytes
    vel_trans: tuple[float, float, float]
    vel_rot: tuple[float, float, float]
    done: bool


def decode_frame_message(payload: bytes) -> DecodedFrame:
    if len(payload) < FRAME_HEAD.size + FRAME_TAIL.size or payload[0] != MSG_FRAME:
        raise ProtocolError("malformed FRAME message")
    _, tick, reward, score, width, height, channels = FRAME_HEAD.unpack_from(payload)
    npix = width * height * channels
    expected = FRAME_HEAD.size + npix + FRAME_TAIL.size
    if len(payload) != expected:
        raise ProtocolError(f"FRAME must be {expected} bytes, got {len(payload)}")
    pixels = payload[FRAME_HEAD.size:FRAME_HEAD.size + npix]
    *vel, done = FRAME_TAIL.unpack_from(payload, FRAME_HEAD.size + npix)
    return DecodedFrame(
        tick=tick, reward=reward, score=score,
        width=width, height=height, channels=channels, pixels=pixels,
        vel_trans=tuple(vel[:3]), vel_rot=tuple(vel[3:6]), done=bool(done),
    )


# --- server ------------------------------------------------------------------


@dataclass
class ServeConfig:
    level_name: str
    width: int = 160
    height: int = 120
    fps: int = 60
    pacing: str = "lockstep"  # or "realtime"
    seed: int = 0
    observation: str = PixelFormat.RGB_INTERLACED
    web_root: str | None = None
    overrides: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.pacing not in ("lockstep", "realtime"):
            raise ValueError(f"pacing must be lockstep or realtime, got {self.pacing!r}")
        if self.web_root is not None and not os.path.isdir(self.web_root):
            raise ValueError(f"web_root is not a directory: {self.web_root}")


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        try:
            request_line = self.rfile.readline(8192).decode("latin-1").strip()
            if not request_line:
                return
            parts = request_line.split()
            if len(parts) != 3 or parts[0] != "GET":
                self._http_error(405, "only GET is supported")
                return
            path = parts[1]
            headers = {}
            while True:
                line = self.rfile.readline(8192).decode("latin-1").strip()
                if not line:
                    break
                key, _, value = line.partition(":")
                headers[key.strip().lower()] = value.strip()
            if headers.get("upgrade", "").lower() == "websocket":
                self._handle_websocket(headers)
            else:
                self._handle_static(path)
        except (ConnectionError, BrokenPipeError, OSError):
            pass

    def _http_error(self, code: int, message: str) -> None:
        body = message.encode()
        self.wfile.write(
            f"HTTP/1.1 {code} {message}\r\nContent-Length: {len(body)}\r\n"
            f"Content-Type: text/plain\r\nConnection: close\r\n\r\n".encode() + body
        )

    def _handle_static(self, path: str) -> None:
        root = self.server.serve_config.web_root
        if root is None:
            self._http_error(404, "no static content configured")
            return
        path = path.split("?", 1)[0]
        if path.endswith("/"):
            path += "index.html"
        target = os.path.realpath(os.path.join(root, path.lstrip("/")))
        if not target.startswith(os.path.realpath(root) + os.sep):
            self._http_error(403, "forbidden")
            return
        if not os.path.isfile(target):
            self._http_error(404, "not found")
            return
        ctype = mimetypes.guess_type(target)[0] or "application/octet-stream"
        with open(target, "rb") as fh:
            body = fh.read()
        self.wfile.write(
            f"HTTP/1.1 200 OK\r\nContent-Length: {len(body)}\r\n"
            f"Content-Type: {ctype}\r\nConnection: close\r\n\r\n".encode() + body
        )

    # -- websocket session --

    def setup(self):
        super().setup()
        self._write_lock = threading.Lock()

    def _send(self, payload: bytes, opcode: int = OP_BINARY) -> None:
        with self._write_lock:
            self.wfile.write(encode_ws_frame(payload, opcode))
            self.wfile.flush()

    def _handle_websocket(self, headers: dict) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            self._http_error(400, "missing Sec-WebSocket-Key")
            return
        self.wfile.write(
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {websocket_accept_key(key)}\r\n\r\n".encode()
        )
        cfg = self.server.serve_config
        env = create_env(EnvConfig(
            level_name=cfg.level_name,
            observation_names=(cfg.observation,),
            width=cfg.width,
            height=cfg.height,
            fps=cfg.fps,
            seed=cfg.seed,
        ), cfg.overrides or None)
        env.reset(seed=cfg.seed)
        hello = {
            "protocol": PROTOCOL_VERSION,
            "level": cfg.level_name,
            "width": cfg.width,
            "height": cfg.height,
            "fps": cfg.fps,
            "observation": cfg.observation,
            "pacing": cfg.pacing,
        }
        self._send(json.dumps(hello).encode(), OP_TEXT)
        if cfg.pacing == "lockstep":
            self._run_lockstep(env)
        else:
            self._run_realtime(env)

    def _recv_message(self):
        """Next binary payload, transparently answering pings.  None on close."""
        while True:
            opcode, payload = read_ws_frame(self.rfile)
            if opcode == OP_CLOSE:
                return None
            if opcode == OP_PING:
                self._send(payload, OP_PONG)
                continue
            if opcode == OP_BINARY:
                return payload
            if opcode == OP_TEXT:
                raise ProtocolError("unexpected text message")

    def _apply(self, env: Environment, payload: bytes) -> tuple[float, bool]:
        """Apply one client message.  Returns (step reward, done flag)."""
        if not payload:
            raise ProtocolError("empty message")
        if payload[0] == MSG_RESET:
            env.reset(seed=decode_reset_message(payload))
            return 0.0, False
        if payload[0] == MSG_ACTION:
            action, num_steps = decode_action_message(payload)
            try:
                reward = env.step(action, num_steps=max(1, num_steps))
            except EpisodeFinished:
                return 0.0, True
            return reward, not env.is_running()
        raise ProtocolError(f"unknown message type 0x{payload[0]:02x}")

    def _run_lockstep(self, env: Environment) -> None:
        self._send(encode_frame_message(env, 0.0, False))
        while True:
            payload = self._recv_message()
            if payload is None:
                return
            reward, done = self._apply(env, payload)
            self._send(encode_frame_message(env, reward, done))

    def _run_realtime(self, env: Environment) -> None:
        latest = {"action": ActionVector(), "reset": None, "closed": False}
        lock = threading.Lock()

        def receiver():
            try:
                while True:
                    payload = self._recv_message()
                    if payload is None:
                        break
                    with lock:
                        if payload[0] == MSG_RESET:
                            latest["reset"] = decode_reset_message(payload)
                        elif payload[0] == MSG_ACTION:
                            latest["action"] = decode_action_message(payload)[0]
            except (ConnectionError, ProtocolError, OSError):
                pass
            with lock:
                latest["closed"] = True

        thread = threading.Thread(target=receiver, daemon=True)
        thread.start()
        period = 1.0 / env.config.fps
        next_tick = time.perf_counter()
        while True:
            with lock:
                if latest["closed"]:
                    return
                action = latest["action"]
                reset_seed = latest["reset"]
                latest["reset"] = None
            if reset_seed is not None:
                env.reset(seed=reset_seed)
                reward, done = 0.0, False
            elif env.is_running():
                reward = env.step(action)
                done = not env.is_running()
            else:
                env.reset()
                reward, done = 0.0, False
            self._send(encode_frame_message(env, reward, done))
            next_tick += period
            delay = next_tick - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            else:
                next_tick = time.perf_counter()


class GameServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, config: ServeConfig, host: str = "127.0.0.1", port: int = 0):
        config.validate()
        self.serve_config = config
        super().__init__((host, port), _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve_forever(config: ServeConfig, host: str = "127.0.0.1", port: int = 8765) -> None:
    server = GameServer(config, host, port)
    print(f"serving {config.level_name} on ws://{host}:{server.port} ({config.pacing})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


# --- minimal client, used by tests and scripting ----------------------------


class WsClient:
    """Blocking WebSocket client for the session protocol."""

    def __init__(self, host: str, port: int, path: str = "/", timeout: float = 10.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.rfile = self.sock.makefile("rb")
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        request = (
            f"GET {path} HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode())
        status = self.rfile.readline().decode("latin-1")
        if "101" not in status:
            raise ProtocolError(f"upgrade refused: {status.strip()}")
        accept = None
        while True:
            line = self.rfile.readline().decode("latin-1").strip()
            if not line:
                break
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-accept":
                accept = value.strip()
        if accept != websocket_accept_key(key):
            raise ProtocolError("bad Sec-WebSocket-Accept")
        self.hello = json.loads(self.recv_text())

    def send(self, payload: bytes) -> None:
        self.sock.sendall(encode_ws_frame(payload, OP_BINARY, mask=True))

    def recv(self) -> tuple[int, bytes]:
        return read_ws_frame(self.rfile)

    def recv_text(self) -> str:
        opcode, payload = self.recv()
        if opcode != OP_TEXT:
            raise ProtocolError(f"expected text frame, got opcode {opcode}")
        return payload.decode()

    def recv_frame(self) -> DecodedFrame:
        while True:
            opcode, payload = self.recv()
            if opcode == OP_BINARY:
                return decode_frame_message(payload)
            if opcode == OP_CLOSE:
                raise ConnectionError("server closed")

    def step(self, action, num_steps: int = 1) -> DecodedFrame:
        self.send(encode_action_message(action, num_steps))
        return self.recv_frame()

    def reset(self, seed: int) -> DecodedFrame:
        self.send(encode_reset_message(seed))
        return self.recv_frame()

    def close(self) -> None:
        try:
            self.sock.sendall(encode_ws_frame(b"", OP_CLOSE, mask=True))
        except OSError:
            pass
        self.sock.close()
