"""WebSocket session protocol: framing, codec, lockstep equivalence."""

import struct
import threading
import time

import numpy as np
import pytest

from raylab.env import EnvConfig, create_env
from raylab.serve import (
    GameServer,
    ProtocolError,
    ServeConfig,
    WsClient,
    decode_action_message,
    decode_frame_message,
    encode_action_message,
    encode_frame_message,
    encode_reset_message,
    encode_ws_frame,
    read_ws_frame,
    websocket_accept_key,
)
from raylab.sim import ActionVector


@pytest.fixture
def server():
    cfg = ServeConfig(level_name="seekavoid_arena_01", width=32, height=24, seed=7)
    srv = GameServer(cfg, port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def test_accept_key_rfc_example():
    # Worked example from the protocol RFC.
    assert websocket_accept_key("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="


def test_ws_frame_round_trip_lengths():
    import io

    for size in (0, 1, 125, 126, 65535, 65536):
        payload = bytes(i & 0xFF for i in range(size))
        for mask in (False, True):
            raw = encode_ws_frame(payload, mask=mask)
            opcode, out = read_ws_frame(io.BytesIO(raw))
            assert opcode == 0x2
            assert out == payload


def test_action_message_round_trip():
    a = ActionVector(look_yaw=-512, look_pitch=31, strafe=-1, move=1, fire=1, jump=0, crouch=1)
    action, num_steps = decode_action_message(encode_action_message(a, num_steps=4))
    assert action.to_tuple() == a.to_tuple()
    assert num_steps == 4
    with pytest.raises(ProtocolError):
        decode_action_message(b"\x01\x00")


def test_frame_message_round_trip():
    env = create_env(EnvConfig("seekavoid_arena_01", width=16, height=12))
    env.reset(seed=0)
    frame = decode_frame_message(encode_frame_message(env, 1.5, False))
    assert (frame.width, frame.height, frame.channels) == (16, 12, 3)
    assert frame.tick == 0
    assert frame.reward == 1.5
    assert len(frame.pixels) == 16 * 12 * 3
    assert not frame.done


def test_handshake_reports_session_parameters(server):
    client = WsClient("127.0.0.1", server.port)
    try:
        assert client.hello["protocol"] == 1
        assert client.hello["level"] == "seekavoid_arena_01"
        assert client.hello["width"] == 32
        assert client.hello["height"] == 24
        assert client.hello["pacing"] == "lockstep"
        first = client.recv_frame()
        assert first.tick == 0
    finally:
        client.close()


def test_lockstep_session_matches_local_environment(server):
    """The served pixel stream must be byte-identical to stepping the
    same environment configuration locally."""
    env = create_env(EnvConfig(
        "seekavoid_arena_01", width=32, height=24, seed=7,
    ))
    env.reset(seed=7)

    client = WsClient("127.0.0.1", server.port)
    try:
        client.recv_frame()  # initial frame, mirrors reset state
        client.reset(7)
        actions = [
            [0, 0, 0, 1, 0, 0, 0],
            [200, 0, 0, 1, 0, 0, 0],
            [-200, 0, 1, 0, 0, 1, 0],
        ] * 10
        for act in actions:
            frame = client.step(act)
            reward = env.step(act)
            assert frame.tick == env.tick
            assert frame.reward == pytest.approx(reward)
            assert frame.score == pytest.approx(env.episode_score)
            local = env.observations()["RGB_INTERLACED"]
            assert frame.pixels == local.tobytes()
            b = env.world.player.body
            assert frame.vel_trans == pytest.approx((b.vx, b.vy, b.vz))
    finally:
        client.close()


def test_reset_rewinds_to_tick_zero(server):
    client = WsClient("127.0.0.1", server.port)
    try:
        client.recv_frame()
        client.step([0, 0, 0, 1, 0, 0, 0], num_steps=5)
        frame = client.reset(99)
        assert frame.tick == 0
        assert frame.score == 0.0
        # Same seed, same initial pixels.
        again = client.reset(99)
        assert again.pixels == frame.pixels
    finally:
        client.close()


def test_num_steps_batch_over_the_wire(server):
    client = WsClient("127.0.0.1", server.port)
    try:
        client.recv_frame()
        client.reset(1)
        frame = client.step([0, 0, 0, 1, 0, 0, 0], num_steps=12)
        assert frame.tick == 12
    finally:
        client.close()


def test_ping_is_answered(server):
    client = WsClient("127.0.0.1", server.port)
    try:
        client.recv_frame()
        client.sock.sendall(encode_ws_frame(b"hi", opcode=0x9, mask=True))
        client.send(encode_reset_message(3))
        got_pong = False
        for _ in range(3):
            opcode, payload = client.recv()
            if opcode == 0xA and payload == b"hi":
                got_pong = True
            if opcode == 0x2:
                break
        assert got_pong
    finally:
        client.close()


def test_static_files_served_from_web_root(tmp_path):
    (tmp_path / "index.html").write_text("<html>play</html>")
    cfg = ServeConfig(level_name="seekavoid_arena_01", web_root=str(tmp_path))
    srv = GameServer(cfg, port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        import http.client

        conn = http.client.HTTPConnection("127.0.0.1", srv.port, timeout=5)
        conn.request("GET", "/")
        resp = conn.getresponse()
        assert resp.status == 200
        assert b"play" in resp.read()
        conn.close()

        conn = http.client.HTTPConnection("127.0.0.1", srv.port, timeout=5)
        conn.request("GET", "/../secret")
        resp = conn.getresponse()
        assert resp.status in (403, 404)
        conn.close()
    finally:
        srv.shutdown()
        srv.server_close()


def test_realtime_pacing_streams_without_actions():
    cfg = ServeConfig(level_name="seekavoid_arena_01", width=16, height=12, fps=60, pacing="realtime")
    srv = GameServer(cfg, port=0)
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    try:
        client = WsClient("127.0.0.1", srv.port)
        assert client.hello["pacing"] == "realtime"
        start = time.monotonic()
        frames = [client.recv_frame() for _ in range(30)]
        elapsed = time.monotonic() - start
        client.close()
        ticks = [f.tick for f in frames]
        assert ticks == sorted(ticks)
        assert ticks[-1] > ticks[0]
        # Paced near the configured rate, not as fast as possible.
        assert elapsed > 30 / 60 * 0.5
    finally:
        srv.shutdown()
        srv.server_close()


def test_bad_pacing_rejected():
    with pytest.raises(ValueError):
        ServeConfig(level_name="seekavoid_arena_01", pacing="warp").validate()
