/** Keyboard and mouse state folded into engine action vectors. */
import { clampAction } from "./protocol.js";
/** Look units per pixel of mouse movement. */
export const MOUSE_LOOK_SCALE = 4;
/** Look units per tick while a turn key is held. */
export const KEY_TURN_RATE = 80;
export function newInputState() {
    return { keys: new Set(), mouseDx: 0, mouseDy: 0, firing: false };
}
export function keyDown(state, code) {
    state.keys.add(code);
}
export function keyUp(state, code) {
    state.keys.delete(code);
}
export function mouseMove(state, dx, dy) {
    state.mouseDx += dx;
    state.mouseDy += dy;
}
const has = (s, ...codes) => codes.some((c) => s.keys.has(c));
/**
 * Build the 7-vector [lookYaw, lookPitch, strafe, move, fire, jump,
 * crouch] for one tick and clear the per-tick mouse accumulator.
 *
 * W/S move, A/D strafe, arrows turn, space jumps, C or shift crouches,
 * F or the mouse button fires.  Moving the mouse up looks up.
 */
export function takeAction(state) {
    let yaw = state.mouseDx * MOUSE_LOOK_SCALE;
    let pitch = -state.mouseDy * MOUSE_LOOK_SCALE;
    state.mouseDx = 0;
    state.mouseDy = 0;
    if (has(state, "ArrowLeft"))
        yaw -= KEY_TURN_RATE;
    if (has(state, "ArrowRight"))
        yaw += KEY_TURN_RATE;
    if (has(state, "ArrowUp"))
        pitch += KEY_TURN_RATE;
    if (has(state, "ArrowDown"))
        pitch -= KEY_TURN_RATE;
    const move = (has(state, "KeyW") ? 1 : 0) - (has(state, "KeyS") ? 1 : 0);
    const strafe = (has(state, "KeyD") ? 1 : 0) - (has(state, "KeyA") ? 1 : 0);
    const fire = state.firing || has(state, "KeyF") ? 1 : 0;
    const jump = has(state, "Space") ? 1 : 0;
    const crouch = has(state, "KeyC", "ShiftLeft", "ShiftRight") ? 1 : 0;
    return clampAction([yaw, pitch, strafe, move, fire, jump, crouch]);
}
