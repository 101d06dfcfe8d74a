/** Planar helpers for lasso selection. */

export type Point = readonly [number, number];

/**
 * Even-odd point-in-polygon test (ray cast towards +x).
 *
 * The polygon is auto-closed. Half-open edge handling keeps a point that
 * sits exactly on a horizontal boundary from being counted twice, so the
 * test stays consistent for self-intersecting strokes.
 */
export function pointInPolygonEvenOdd(pt: Point, polygon: readonly Point[]): boolean {
  const [x, y] = pt;
  let inside = false;
  const n = polygon.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const [xi, yi] = polygon[i]!;
    const [xj, yj] = polygon[j]!;
    const crosses = yi > y !== yj > y;
    if (crosses) {
      const xCross = xi + ((y - yi) * (xj - xi)) / (yj - yi);
      if (x < xCross) inside = !inside;
    }
  }
  return inside;
}

/** Absolute polygon area via the shoelace formula (auto-closed). */
export function polygonArea(polygon: readonly Point[]): number {
  let twice = 0;
  const n = polygon.length;
  for (let i = 0, j = n - 1; i < n; j = i++) {
    const [xi, yi] = polygon[i]!;
    const [xj, yj] = polygon[j]!;
    twice += xj * yi - xi * yj;
  }
  return Math.abs(twice) / 2;
}
