/** Decimated display cloud fetched from the service. */

export interface DisplayCloud {
  /** total points in the full cloud */
  nPoints: number;
  /** display row i corresponds to full-cloud index i * stride */
  stride: number;
  /** flat [x, y, z, r, g, b] per displayed point */
  data: Float64Array;
}

export function displayCount(cloud: DisplayCloud): number {
  return cloud.data.length / 6;
}

export function positionOf(cloud: DisplayCloud, row: number): [number, number, number] {
  const o = row * 6;
  return [cloud.data[o], cloud.data[o + 1], cloud.data[o + 2]];
}

export function colorOf(cloud: DisplayCloud, row: number): [number, number, number] {
  const o = row * 6;
  return [cloud.data[o + 3], cloud.data[o + 4], cloud.data[o + 5]];
}

export function fullIndexOf(cloud: DisplayCloud, row: number): number {
  return row * cloud.stride;
}

export function fromRows(nPoints: number, stride: number, rows: number[][]): DisplayCloud {
  const data = new Float64Array(rows.length * 6);
  rows.forEach((row, i) => data.set(row, i * 6));
  return { nPoints, stride, data };
}

export function bounds(cloud: DisplayCloud): { min: [number, number, number]; max: [number, number, number] } {
  const min: [number, number, number] = [Infinity, Infinity, Infinity];
  const max: [number, number, number] = [-Infinity, -Infinity, -Infinity];
  for (let i = 0; i < displayCount(cloud); i++) {
    const p = positionOf(cloud, i);
    for (let d = 0; d < 3; d++) {
      min[d] = Math.min(min[d], p[d]);
      max[d] = Math.max(max[d], p[d]);
    }
  }
  return { min, max };
}
