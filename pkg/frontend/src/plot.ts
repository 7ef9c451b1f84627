// Local rendering of exported tessellations: filled value plots and
// wireframes, written as PNG files. No server-side rendering is involved;
// everything works from triangulation points and point-data rows.

import { writeFileSync } from "node:fs";

import { RemoteFunction, RemoteGrid, TriangulationData } from "./grid.js";
import { encodePNG } from "./png.js";

export interface PlotOptions {
  level?: number;
  width?: number;
  height?: number;
}

// compact blue -> white -> red diverging colormap
function colormap(t: number): [number, number, number] {
  const clamped = Math.min(1, Math.max(0, t));
  if (clamped < 0.5) {
    const s = clamped * 2;
    return [Math.round(60 + 195 * s), Math.round(80 + 175 * s), 255];
  }
  const s = (clamped - 0.5) * 2;
  return [255, Math.round(255 - 175 * s), Math.round(255 - 195 * s)];
}

interface Frame {
  width: number;
  height: number;
  pixels: Uint8Array;
  toPixel: (p: number[]) => [number, number];
}

function makeFrame(
  points: number[][],
  width: number,
  height: number,
): Frame {
  let [minX, maxX] = [Infinity, -Infinity];
  let [minY, maxY] = [Infinity, -Infinity];
  for (const [x, y] of points) {
    minX = Math.min(minX, x);
    maxX = Math.max(maxX, x);
    minY = Math.min(minY, y);
    maxY = Math.max(maxY, y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const margin = 8;
  const scale = Math.min(
    (width - 2 * margin) / spanX,
    (height - 2 * margin) / spanY,
  );
  const pixels = new Uint8Array(width * height * 4).fill(255);
  return {
    width,
    height,
    pixels,
    toPixel: ([x, y]) => [
      margin + (x - minX) * scale,
      height - margin - (y - minY) * scale,
    ],
  };
}

function putPixel(
  frame: Frame,
  px: number,
  py: number,
  rgb: [number, number, number],
): void {
  const x = Math.round(px);
  const y = Math.round(py);
  if (x < 0 || y < 0 || x >= frame.width || y >= frame.height) return;
  const offset = (y * frame.width + x) * 4;
  frame.pixels[offset] = rgb[0];
  frame.pixels[offset + 1] = rgb[1];
  frame.pixels[offset + 2] = rgb[2];
  frame.pixels[offset + 3] = 255;
}

function fillTriangle(
  frame: Frame,
  corners: [number, number][],
  values: [number, number, number],
  range: [number, number],
): void {
  const [a, b, c] = corners;
  const minX = Math.max(0, Math.floor(Math.min(a[0], b[0], c[0])));
  const maxX = Math.min(frame.width - 1, Math.ceil(Math.max(a[0], b[0], c[0])));
  const minY = Math.max(0, Math.floor(Math.min(a[1], b[1], c[1])));
  const maxY = Math.min(
    frame.height - 1,
    Math.ceil(Math.max(a[1], b[1], c[1])),
  );
  const det =
    (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
  if (det === 0) return;
  const span = range[1] - range[0] || 1;
  for (let y = minY; y <= maxY; y++) {
    for (let x = minX; x <= maxX; x++) {
      const l0 =
        ((b[1] - c[1]) * (x - c[0]) + (c[0] - b[0]) * (y - c[1])) / det;
      const l1 =
        ((c[1] - a[1]) * (x - c[0]) + (a[0] - c[0]) * (y - c[1])) / det;
      const l2 = 1 - l0 - l1;
      if (l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9) continue;
      const value = l0 * values[0] + l1 * values[1] + l2 * values[2];
      putPixel(frame, x, y, colormap((value - range[0]) / span));
    }
  }
}

function drawLine(
  frame: Frame,
  from: [number, number],
  to: [number, number],
): void {
  const steps = Math.max(
    1,
    Math.ceil(Math.max(Math.abs(to[0] - from[0]), Math.abs(to[1] - from[1]))),
  );
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    putPixel(
      frame,
      from[0] + t * (to[0] - from[0]),
      from[1] + t * (to[1] - from[1]),
      [40, 40, 40],
    );
  }
}

function renderWireframe(tri: TriangulationData, frame: Frame): void {
  for (const cell of tri.triangles) {
    const corners = cell.map((i) => frame.toPixel(tri.points[i]));
    for (let k = 0; k < 3; k++) {
      drawLine(frame, corners[k], corners[(k + 1) % 3]);
    }
  }
}

/**
 * Render a grid wireframe or a grid-function value plot to a PNG file.
 * Returns the number of triangulation points used (rows of point data).
 */
export async function plot(
  target: RemoteGrid | RemoteFunction,
  path: string,
  options: PlotOptions = {},
): Promise<number> {
  const level = options.level ?? 0;
  const width = options.width ?? 480;
  const height = options.height ?? 480;
  const grid = target instanceof RemoteGrid ? target : target.grid;
  const tri = await grid.triangulation(level);
  const frame = makeFrame(tri.points, width, height);
  if (target instanceof RemoteGrid) {
    renderWireframe(tri, frame);
  } else {
    const rows = await target.pointData(level);
    if (rows.length !== tri.points.length) {
      throw new Error(
        `point data has ${rows.length} rows, triangulation has ` +
          `${tri.points.length} points`,
      );
    }
    const values = rows.map((row) => row[0]);
    const range: [number, number] = [
      Math.min(...values),
      Math.max(...values),
    ];
    for (const cell of tri.triangles) {
      fillTriangle(
        frame,
        cell.map((i) => frame.toPixel(tri.points[i])) as [
          [number, number],
          [number, number],
          [number, number],
        ],
        [values[cell[0]], values[cell[1]], values[cell[2]]],
        range,
      );
    }
  }
  writeFileSync(path, encodePNG(width, height, frame.pixels));
  return tri.points.length;
}
