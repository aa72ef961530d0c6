/**
 * Binary session protocol codec.
 *
 * All integers are little-endian.  The server opens with a JSON text
 * frame describing the session, then exchanges binary messages:
 *
 *   client -> server  ACTION 0x01: 7 x int16 action, uint16 numSteps
 *   client -> server  RESET  0x03: uint64 seed
 *   server -> client  FRAME  0x02: uint32 tick, float32 reward,
 *     float32 score, uint16 width, uint16 height, uint8 channels,
 *     pixel bytes, 3 x float32 velTrans, 3 x float32 velRot, uint8 done
 */

export const PROTOCOL_VERSION = 1;

export const MSG_ACTION = 0x01;
export const MSG_FRAME = 0x02;
export const MSG_RESET = 0x03;

export const ACTION_SIZE = 7;
const FRAME_HEAD_BYTES = 1 + 4 + 4 + 4 + 2 + 2 + 1;
const FRAME_TAIL_BYTES = 4 * 6 + 1;

export interface Hello {
  protocol: number;
  level: string;
  width: number;
  height: number;
  fps: number;
  observation: string;
  pacing: "lockstep" | "realtime";
}

export interface Frame {
  tick: number;
  reward: number;
  score: number;
  width: number;
  height: number;
  channels: number;
  pixels: Uint8Array;
  velTrans: [number, number, number];
  velRot: [number, number, number];
  done: boolean;
}

export function parseHello(text: string): Hello {
  const data = JSON.parse(text);
  if (data.protocol !== PROTOCOL_VERSION) {
    throw new Error(`unsupported protocol ${data.protocol}`);
  }
  for (const key of ["level", "width", "height", "fps", "observation", "pacing"]) {
    if (!(key in data)) {
      throw new Error(`hello is missing ${key}`);
    }
  }
  return data as Hello;
}

// The trailing "|| 0" folds negative zero into plain zero.
const clampLook = (v: number) => Math.max(-512, Math.min(512, Math.round(v))) || 0;
const clampTri = (v: number) => Math.max(-1, Math.min(1, Math.round(v))) || 0;

/** Clamp a raw 7-vector into the valid action range, same rule set as
 * the engine: look axes to [-512, 512], the rest to {-1, 0, 1}. */
export function clampAction(action: readonly number[]): number[] {
  if (action.length !== ACTION_SIZE) {
    throw new Error(`action must have ${ACTION_SIZE} components, got ${action.length}`);
  }
  return [
    clampLook(action[0]),
    clampLook(action[1]),
    clampTri(action[2]),
    clampTri(action[3]),
    Math.abs(clampTri(action[4])),
    Math.abs(clampTri(action[5])),
    Math.abs(clampTri(action[6])),
  ];
}

export function encodeAction(action: readonly number[], numSteps = 1): ArrayBuffer {
  const clamped = clampAction(action);
  const buf = new ArrayBuffer(1 + 2 * ACTION_SIZE + 2);
  const view = new DataView(buf);
  view.setUint8(0, MSG_ACTION);
  clamped.forEach((v, i) => view.setInt16(1 + 2 * i, v, true));
  view.setUint16(1 + 2 * ACTION_SIZE, numSteps, true);
  return buf;
}

export function encodeReset(seed: number | bigint): ArrayBuffer {
  const buf = new ArrayBuffer(9);
  const view = new DataView(buf);
  view.setUint8(0, MSG_RESET);
  view.setBigUint64(1, BigInt(seed), true);
  return buf;
}

export function decodeFrame(buf: ArrayBuffer): Frame {
  const view = new DataView(buf);
  if (buf.byteLength < FRAME_HEAD_BYTES + FRAME_TAIL_BYTES || view.getUint8(0) !== MSG_FRAME) {
    throw new Error("malformed FRAME message");
  }
  const tick = view.getUint32(1, true);
  const reward = view.getFloat32(5, true);
  const score = view.getFloat32(9, true);
  const width = view.getUint16(13, true);
  const height = view.getUint16(15, true);
  const channels = view.getUint8(17);
  const npix = width * height * channels;
  if (buf.byteLength !== FRAME_HEAD_BYTES + npix + FRAME_TAIL_BYTES) {
    throw new Error(`FRAME should be ${FRAME_HEAD_BYTES + npix + FRAME_TAIL_BYTES} bytes, got ${buf.byteLength}`);
  }
  const pixels = new Uint8Array(buf, FRAME_HEAD_BYTES, npix);
  let off = FRAME_HEAD_BYTES + npix;
  const f = () => {
    const v = view.getFloat32(off, true);
    off += 4;
    return v;
  };
  const velTrans: [number, number, number] = [f(), f(), f()];
  const velRot: [number, number, number] = [f(), f(), f()];
  const done = view.getUint8(off) !== 0;
  return { tick, reward, score, width, height, channels, pixels, velTrans, velRot, done };
}

/** Expand an RGB or RGBD frame into RGBA bytes for a canvas ImageData. */
export function toRgba(frame: Frame): Uint8ClampedArray {
  const n = frame.width * frame.height;
  const out = new Uint8ClampedArray(n * 4);
  const c = frame.channels;
  for (let i = 0; i < n; i++) {
    out[i * 4] = frame.pixels[i * c];
    out[i * 4 + 1] = frame.pixels[i * c + 1];
    out[i * 4 + 2] = frame.pixels[i * c + 2];
    out[i * 4 + 3] = 255;
  }
  return out;
}
