/**
 * Live session against a real server process, using the same protocol
 * codec the browser bundle ships.  The sandbox has no browser binary,
 * so the transport is a raw-socket WebSocket client instead of the DOM
 * WebSocket; everything above the socket is the production code path.
 */

import { ChildProcess, spawn } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { decodeFrame, encodeAction, encodeReset, parseHello, Frame, Hello } from "../src/protocol";
import { keyDown, newInputState, takeAction } from "../src/input";
import { RawWsClient } from "./wsraw";

let server: ChildProcess;
let port: number;

function startServer(): Promise<number> {
  return new Promise((resolve, reject) => {
    server = spawn(
      "python3",
      [
        "-u", "-m", "raylab.cli", "serve",
        "--level", "seekavoid_arena_01",
        "--pacing", "realtime",
        "--width", "160", "--height", "120",
        "--port", "0",
      ],
      { cwd: "..", stdio: ["ignore", "pipe", "pipe"] },
    );
    let out = "";
    const timer = setTimeout(() => reject(new Error(`server never reported a port: ${out}`)), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const match = out.match(/ws:\/\/[\d.]+:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number(match[1]));
      }
    });
    server.stderr!.on("data", () => undefined);
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${out}`)));
  });
}

async function nextFrame(client: RawWsClient): Promise<Frame> {
  for (;;) {
    const msg = await client.next();
    if (msg.opcode === 0x2) {
      const copy = msg.data.buffer.slice(msg.data.byteOffset, msg.data.byteOffset + msg.data.length);
      return decodeFrame(copy as ArrayBuffer);
    }
  }
}

beforeAll(async () => {
  port = await startServer();
}, 20000);

afterAll(() => {
  server?.kill();
});

describe("realtime session", () => {
  it("streams at least 30 frames per second and reacts to key input", async () => {
    const client = await RawWsClient.connect(port);
    try {
      const first = await client.next();
      expect(first.opcode).toBe(0x1);
      const hello: Hello = parseHello(first.data.toString("utf8"));
      expect(hello.protocol).toBe(1);
      expect(hello.pacing).toBe("realtime");
      expect(hello.width).toBe(160);
      expect(hello.height).toBe(120);

      // Fresh episode with a known seed, then measure the stream rate.
      client.send(encodeReset(12n));
      await nextFrame(client);
      const start = Date.now();
      let frames = 0;
      let idle: Frame | null = null;
      while (Date.now() - start < 2000) {
        idle = await nextFrame(client);
        frames += 1;
      }
      expect(frames).toBeGreaterThanOrEqual(60); // >= 30 frames/s over 2 s
      expect(idle!.pixels.length).toBe(160 * 120 * 3);
      const speedIdle = Math.hypot(...idle!.velTrans);
      expect(speedIdle).toBe(0);

      // Hold W exactly as the browser client would and watch the player move.
      const input = newInputState();
      keyDown(input, "KeyW");
      const before = Buffer.from(idle!.pixels);
      let moving: Frame = idle!;
      for (let i = 0; i < 30; i++) {
        client.send(encodeAction(takeAction(input)));
        moving = await nextFrame(client);
      }
      const speedMoving = Math.hypot(...moving.velTrans);
      expect(speedMoving).toBeGreaterThan(0);
      expect(Buffer.from(moving.pixels).equals(before)).toBe(false);
      expect(moving.tick).toBeGreaterThan(idle!.tick);
    } finally {
      client.close();
    }
  }, 30000);
});
