/**
 * Minimal OBJ reader for the static liver asset. The wire protocol only
 * streams vertex positions, so the triangle topology comes from the asset
 * bundle; vertex counts must match the gateway's model.
 */

export interface ParsedMesh {
  positions: Float32Array; // flattened xyz
  triangles: Uint32Array;  // flattened indices
}

export function parseObj(text: string): ParsedMesh {
  const positions: number[] = [];
  const triangles: number[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (line.startsWith("v ")) {
      const parts = line.split(/\s+/);
      positions.push(Number(parts[1]), Number(parts[2]), Number(parts[3]));
    } else if (line.startsWith("f ")) {
      const parts = line.split(/\s+/).slice(1);
      if (parts.length !== 3) {
        throw new Error(`non-triangle face: ${line}`);
      }
      for (const token of parts) {
        const index = Number(token.split("/")[0]);
        if (!Number.isInteger(index) || index < 1) {
          throw new Error(`bad face index: ${token}`);
        }
        triangles.push(index - 1);
      }
    }
  }
  const vertexCount = positions.length / 3;
  for (const index of triangles) {
    if (index >= vertexCount) {
      throw new Error(`face index ${index + 1} out of range (${vertexCount} vertices)`);
    }
  }
  return {
    positions: Float32Array.from(positions),
    triangles: Uint32Array.from(triangles),
  };
}
