/** Browser entry point: connect, draw frames, send input. */

import { decodeFrame, encodeAction, encodeReset, parseHello, toRgba, Frame, Hello } from "./protocol.js";
import { keyDown, keyUp, mouseMove, newInputState, takeAction } from "./input.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const hud = document.getElementById("hud") as HTMLElement;
const ctx = canvas.getContext("2d")!;
ctx.imageSmoothingEnabled = false;

const input = newInputState();
let hello: Hello | null = null;
let backing: HTMLCanvasElement | null = null;
let frameCount = 0;
let fpsWindowStart = performance.now();
let shownFps = 0;

const url = `ws://${location.host}/session`;
const ws = new WebSocket(url);
ws.binaryType = "arraybuffer";

ws.onmessage = (event) => {
  if (typeof event.data === "string") {
    hello = parseHello(event.data);
    canvas.width = hello.width * 4;
    canvas.height = hello.height * 4;
    backing = document.createElement("canvas");
    backing.width = hello.width;
    backing.height = hello.height;
    return;
  }
  const frame = decodeFrame(event.data as ArrayBuffer);
  draw(frame);
  // One action per received frame keeps lockstep and realtime sessions
  // both responsive without a separate send timer.
  ws.send(encodeAction(takeAction(input)));
};

ws.onclose = () => {
  hud.textContent = "disconnected";
};

function draw(frame: Frame): void {
  if (!backing) return;
  const image = new ImageData(toRgba(frame) as ImageDataArray, frame.width, frame.height);
  backing.getContext("2d")!.putImageData(image, 0, 0);
  ctx.drawImage(backing, 0, 0, canvas.width, canvas.height);

  frameCount += 1;
  const now = performance.now();
  if (now - fpsWindowStart >= 1000) {
    shownFps = (frameCount * 1000) / (now - fpsWindowStart);
    frameCount = 0;
    fpsWindowStart = now;
  }
  const level = hello ? hello.level : "?";
  hud.textContent =
    `${level}  score ${frame.score.toFixed(1)}  tick ${frame.tick}` +
    `  ${shownFps.toFixed(0)} fps` + (frame.done ? "  [episode over, press R]" : "");
}

document.addEventListener("keydown", (e) => {
  if (e.code === "KeyR") {
    ws.send(encodeReset(Math.floor(Math.random() * 2 ** 32)));
    return;
  }
  keyDown(input, e.code);
  e.preventDefault();
});
document.addEventListener("keyup", (e) => keyUp(input, e.code));

canvas.addEventListener("click", () => canvas.requestPointerLock());
document.addEventListener("mousemove", (e) => {
  if (document.pointerLockElement === canvas) {
    mouseMove(input, e.movementX, e.movementY);
  }
});
document.addEventListener("mousedown", () => {
  if (document.pointerLockElement === canvas) input.firing = true;
});
document.addEventListener("mouseup", () => {
  input.firing = false;
});
