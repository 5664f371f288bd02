/**
 * Pointer-to-probe mapping: the mouse stands in for the haptic arm.
 *
 * A drag moves the probe on a camera-facing plane; the scroll wheel slides
 * that plane along the view direction (an on-screen depth readout mirrors
 * it). Probe messages are only emitted while the pointer state actually
 * changes, carry client timestamps, and those timestamps strictly increase.
 */

export type Vec3 = [number, number, number];

export interface CameraBasis {
  position: Vec3;
  forward: Vec3; // unit
  right: Vec3;   // unit
  up: Vec3;      // unit
  fovYRadians: number;
  aspect: number;
}

function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

/** Unit ray through normalized device coordinates (x, y in [-1, 1], y up). */
export function pointerRay(ndcX: number, ndcY: number, cam: CameraBasis): { origin: Vec3; dir: Vec3 } {
  const halfH = Math.tan(cam.fovYRadians / 2);
  const halfW = halfH * cam.aspect;
  const d = add(
    cam.forward,
    add(scale(cam.right, ndcX * halfW), scale(cam.up, ndcY * halfH)),
  );
  const len = norm(d);
  return { origin: cam.position, dir: scale(d, 1 / len) };
}

/**
 * World position of the probe for a pointer location and scroll depth.
 * Depth is measured along the camera forward axis, so scrolling moves the
 * probe straight into or out of the scene regardless of where the pointer
 * sits on screen.
 */
export function probePosition(ndcX: number, ndcY: number, depthAlongForward: number,
                              cam: CameraBasis): Vec3 {
  const ray = pointerRay(ndcX, ndcY, cam);
  const along = dot(ray.dir, cam.forward);
  const tRay = depthAlongForward / along;
  return add(ray.origin, scale(ray.dir, tRay));
}

export interface ProbeSample {
  t: number;
  pos: Vec3;
}

/**
 * Emits probe samples at display rate with idle suppression: identical
 * pointer/depth state produces no message, so the simulation clock only
 * advances while the trainee moves.
 */
export class ProbeInput {
  private ndcX = 0;
  private ndcY = 0;
  private depth: number;
  private lastSent: { ndcX: number; ndcY: number; depth: number } | null = null;
  private lastT = -Infinity;

  constructor(
    private cam: CameraBasis,
    initialDepth: number,
    private depthStepPerScroll = 1.0,
    private minDepth = 1.0,
    private maxDepth = 2000.0,
  ) {
    this.depth = initialDepth;
  }

  get currentDepth(): number {
    return this.depth;
  }

  setCamera(cam: CameraBasis): void {
    this.cam = cam;
  }

  movePointer(ndcX: number, ndcY: number): void {
    this.ndcX = ndcX;
    this.ndcY = ndcY;
  }

  scroll(deltaSteps: number): void {
    this.depth = Math.min(
      this.maxDepth,
      Math.max(this.minDepth, this.depth + deltaSteps * this.depthStepPerScroll),
    );
  }

  /** Sample at time t (seconds); null while the pointer is idle. */
  sample(t: number): ProbeSample | null {
    const state = { ndcX: this.ndcX, ndcY: this.ndcY, depth: this.depth };
    if (
      this.lastSent &&
      this.lastSent.ndcX === state.ndcX &&
      this.lastSent.ndcY === state.ndcY &&
      this.lastSent.depth === state.depth
    ) {
      return null;
    }
    if (t <= this.lastT) {
      return null; // timestamps must strictly increase
    }
    this.lastSent = state;
    this.lastT = t;
    return { t, pos: probePosition(state.ndcX, state.ndcY, state.depth, this.cam) };
  }
}
