/**
 * Three.js scene wrapper. Geometry topology comes from the static OBJ
 * asset; every vertex position on screen comes from the gateway's frame
 * vertex blocks, so the deformation the trainee sees is exactly what the
 * simulation computed.
 */

import * as THREE from "three";

import { CtPlaneMessage } from "./protocol.js";
import { CameraBasis, Vec3 } from "./probe.js";

export class TrainerRenderer {
  readonly scene = new THREE.Scene();
  readonly camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private liver: THREE.Mesh | null = null;
  private geometry: THREE.BufferGeometry | null = null;
  private probeBall: THREE.Mesh;
  private ctGroup = new THREE.Group();

  constructor(private canvas: HTMLCanvasElement) {
    this.renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    this.camera = new THREE.PerspectiveCamera(45, canvas.width / canvas.height, 1, 2000);
    this.camera.position.set(0, -260, 140);
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(0, 0, 0);

    this.scene.background = new THREE.Color(0x10151c);
    const key = new THREE.DirectionalLight(0xffffff, 2.2);
    key.position.set(120, -200, 260);
    this.scene.add(key);
    this.scene.add(new THREE.AmbientLight(0x667788, 1.1));

    this.probeBall = new THREE.Mesh(
      new THREE.SphereGeometry(3.5, 24, 16),
      new THREE.MeshStandardMaterial({ color: 0xdde6f0, metalness: 0.6, roughness: 0.3 }),
    );
    this.scene.add(this.probeBall);
    this.scene.add(this.ctGroup);
  }

  setTopology(triangles: Uint32Array, vertexCount: number): void {
    this.geometry = new THREE.BufferGeometry();
    this.geometry.setIndex(new THREE.BufferAttribute(triangles, 1));
    this.geometry.setAttribute(
      "position",
      new THREE.BufferAttribute(new Float32Array(vertexCount * 3), 3),
    );
    const material = new THREE.MeshStandardMaterial({
      color: 0x8c3b2e,
      roughness: 0.55,
      metalness: 0.05,
    });
    if (this.liver) this.scene.remove(this.liver);
    this.liver = new THREE.Mesh(this.geometry, material);
    this.scene.add(this.liver);
  }

  /** Apply a deformed vertex block from a frame message. */
  setVertices(flat: Float64Array): void {
    if (!this.geometry) return;
    const attr = this.geometry.getAttribute("position") as THREE.BufferAttribute;
    (attr.array as Float32Array).set(flat);
    attr.needsUpdate = true;
    this.geometry.computeVertexNormals();
    this.geometry.computeBoundingSphere();
  }

  setProbe(pos: Vec3): void {
    this.probeBall.position.set(pos[0], pos[1], pos[2]);
  }

  setSectionPlane(message: CtPlaneMessage | null, extentMm = 120): void {
    this.ctGroup.clear();
    if (!message) return;
    const { origin, normal, basis_u, basis_v } = message.plane;
    const plane = new THREE.Mesh(
      new THREE.PlaneGeometry(extentMm * 2, extentMm * 2),
      new THREE.MeshBasicMaterial({
        color: 0x3b82f6, transparent: true, opacity: 0.15, side: THREE.DoubleSide,
      }),
    );
    const basis = new THREE.Matrix4().makeBasis(
      new THREE.Vector3(...basis_u),
      new THREE.Vector3(...basis_v),
      new THREE.Vector3(...normal),
    );
    plane.quaternion.setFromRotationMatrix(basis);
    plane.position.set(origin[0], origin[1], origin[2]);
    this.ctGroup.add(plane);

    for (const polyline of message.contour) {
      const pts = polyline.points.map(([x, y, z]) => new THREE.Vector3(x, y, z));
      if (polyline.closed && pts.length) pts.push(pts[0].clone());
      const line = new THREE.Line(
        new THREE.BufferGeometry().setFromPoints(pts),
        new THREE.LineBasicMaterial({ color: 0x60a5fa }),
      );
      this.ctGroup.add(line);
    }
  }

  cameraBasis(): CameraBasis {
    const forward = new THREE.Vector3();
    this.camera.getWorldDirection(forward);
    const up = this.camera.up.clone().projectOnPlane(forward).normalize();
    const right = new THREE.Vector3().crossVectors(forward, up).normalize();
    const upOrtho = new THREE.Vector3().crossVectors(right, forward).normalize();
    return {
      position: this.camera.position.toArray() as Vec3,
      forward: forward.toArray() as Vec3,
      right: right.toArray() as Vec3,
      up: upOrtho.toArray() as Vec3,
      fovYRadians: (this.camera.fov * Math.PI) / 180,
      aspect: this.camera.aspect,
    };
  }

  resize(width: number, height: number): void {
    this.renderer.setSize(width, height, false);
    this.camera.aspect = width / height;
    this.camera.updateProjectionMatrix();
  }

  render(): void {
    this.renderer.render(this.scene, this.camera);
  }
}
