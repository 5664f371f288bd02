/**
 * CT panel logic: slice selection and projecting the 3D section contour
 * onto the 2D slice image using the plane's in-plane basis.
 */

import { CtPlaneMessage } from "./protocol.js";

export interface SlicePoint {
  u: number;
  v: number;
}

export function clampSliceIndex(index: number, sliceCount: number): number {
  if (sliceCount <= 0) return 0;
  return Math.min(Math.max(Math.round(index), 0), sliceCount - 1);
}

/** Contour points in plane coordinates (mm), relative to the plane origin. */
export function contourInPlane(message: CtPlaneMessage): SlicePoint[][] {
  const { origin, basis_u, basis_v } = message.plane;
  return message.contour.map((polyline) =>
    polyline.points.map(([x, y, z]) => {
      const dx = x - origin[0];
      const dy = y - origin[1];
      const dz = z - origin[2];
      return {
        u: dx * basis_u[0] + dy * basis_u[1] + dz * basis_u[2],
        v: dx * basis_v[0] + dy * basis_v[1] + dz * basis_v[2],
      };
    }),
  );
}

/** Map plane mm coordinates onto image pixels (image centered on the plane origin). */
export function planeToPixels(points: SlicePoint[], imageSize: number,
                              mmExtent: number): SlicePoint[] {
  const half = imageSize / 2;
  const s = half / mmExtent;
  return points.map(({ u, v }) => ({ u: half + u * s, v: half + v * s }));
}

/** The panel only exists when the gateway advertises slices. */
export function panelVisible(sliceCount: number): boolean {
  return sliceCount > 0;
}
