import assert from "node:assert/strict";
import { execFileSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import {
  RemoteGrid,
  ServerError,
  Session,
  gridFunction,
  interpolateP1,
  interpolationError,
  l2error,
} from "../src/index.js";

const FAN = {
  vertices: [
    [0, 0], [1, 0], [1, 0.6], [0, 0.6],
    [-1, 0.6], [-1, 0], [-1, -0.6], [0, -0.6],
  ],
  simplices: [
    [2, 0, 1], [0, 2, 3], [4, 0, 3],
    [0, 4, 5], [6, 0, 5], [0, 6, 7],
  ],
};

const UNIT_SQUARE = {
  vertices: [[0, 0], [1, 0], [1, 1], [0, 1]],
  simplices: [[2, 0, 1], [0, 2, 3]],
};

function oscillation(x: number[]): number {
  return Math.cos((2 * Math.PI) / (0.3 + Math.abs(x[0] * x[1])));
}

async function withSession<T>(body: (s: Session) => Promise<T>): Promise<T> {
  const session = Session.spawn();
  try {
    return await body(session);
  } finally {
    session.close();
  }
}

test("unit-square counts match over the wire", async () => {
  await withSession(async (session) => {
    const grid = await RemoteGrid.conform(session, UNIT_SQUARE);
    assert.equal(grid.elements, 2);
    assert.equal(grid.vertices, 4);
    assert.equal(await grid.size(0), 2);
    assert.equal(await grid.size(1), 5);
    assert.equal(await grid.size(2), 4);
  });
});

test("grid arithmetic: structured, bisection and quartering refinement", async () => {
  await withSession(async (session) => {
    const cartesian = await RemoteGrid.structured(
      session, [0, 0], [1, 0.25], [15, 4]);
    assert.equal(cartesian.elements, 60);
    assert.equal(cartesian.vertices, 80);
    await cartesian.hierarchicalGrid.globalRefine();
    assert.equal(cartesian.elements, 240);

    const bisect = await RemoteGrid.conform(session, UNIT_SQUARE);
    for (const expected of [4, 8, 16]) {
      await bisect.hierarchicalGrid.globalRefine();
      assert.equal(bisect.elements, expected);
    }

    const quarter = await RemoteGrid.simplex(session, UNIT_SQUARE);
    for (const expected of [8, 32]) {
      await quarter.hierarchicalGrid.globalRefine();
      assert.equal(quarter.elements, expected);
    }
  });
});

test("marker-driven adaptation reproduces the shrinking-radius counts", async () => {
  await withSession(async (session) => {
    const fan = await RemoteGrid.conform(session, FAN);
    await fan.hierarchicalGrid.globalRefine(2);
    assert.equal(fan.elements, 24);
    const counts: number[] = [];
    for (let i = 1; i <= 4; i++) {
      const radius = Math.pow(0.64, i);
      const before = session.callbackCount;
      await fan.hierarchicalGrid.adapt((points) =>
        points.map(([x, y]) => (Math.hypot(x, y) < radius ? 1 : 0)));
      assert.equal(session.callbackCount, before + 1);
      counts.push(fan.elements);
    }
    assert.deepEqual(counts, [36, 48, 60, 66]);
  });
});

function kernelReferenceValue(refine: number, order: number): number {
  const dir = mkdtempSync(join(tmpdir(), "gridkit-client-"));
  writeFileSync(join(dir, "fan.json"), JSON.stringify(FAN));
  const state = join(dir, "state.json");
  execFileSync(
    "python3",
    ["-m", "gridkit.cli", "make-grid", "--json", join(dir, "fan.json"),
     "--kind", "conform", "--state", state],
    { cwd: dir },
  );
  const out = execFileSync(
    "python3",
    ["-m", "gridkit.cli", "l2error", "--refine", String(refine),
     "--order", String(order), "--mode", "kernel", "--state", state],
    { cwd: dir, encoding: "utf-8" },
  );
  const match = /l2error=([0-9.eE+-]+) callbacks=0/.exec(out);
  assert.ok(match, out);
  return Number(match[1]);
}

test("remote interpolation error matches the core kernel computation", async () => {
  await withSession(async (session) => {
    const grid = await RemoteGrid.conform(session, FAN);
    await grid.hierarchicalGrid.globalRefine(3);
    const error = await interpolationError(grid, oscillation);

    const before = session.callbackCount;
    const vectorized = await l2error(grid, error, 5, true);
    const clientCounted = session.callbackCount - before;
    assert.equal(clientCounted, grid.elements);
    assert.equal(vectorized.callbacks, grid.elements);

    const loopStart = session.callbackCount;
    const loop = await l2error(grid, error, 5, false);
    assert.equal(session.callbackCount - loopStart, grid.elements * 7);
    assert.ok(Math.abs(vectorized.value - loop.value) <= 1e-12);

    const kernel = kernelReferenceValue(3, 5);
    assert.ok(
      Math.abs(vectorized.value - kernel) <= 1e-10,
      `remote ${vectorized.value} vs kernel ${kernel}`,
    );
  });
});

async function scriptedTranscript(): Promise<string[]> {
  return withSession(async (session) => {
    const grid = await RemoteGrid.conform(session, FAN);
    await grid.hierarchicalGrid.globalRefine(2);
    const error = await interpolationError(grid, oscillation);
    await l2error(grid, error, 5, true);
    await grid.triangulation(0);
    await grid.describe();
    return [...session.transcript];
  });
}

test("golden transcript replays byte-identically", async () => {
  const first = await scriptedTranscript();
  const second = await scriptedTranscript();
  assert.deepEqual(first, second);
  assert.ok(first.length > 5);
});

test("server errors surface with their code and the session survives", async () => {
  await withSession(async (session) => {
    await assert.rejects(
      RemoteGrid.structured(session, [0, 0], [0, 1], [1, 1]),
      (error: unknown) =>
        error instanceof ServerError && error.code === "domain",
    );
    const grid = await RemoteGrid.structured(session, [0], [1], [4]);
    assert.equal(grid.elements, 4);
  });
});

test("wrong-length callback replies abort with callback_shape", async () => {
  await withSession(async (session) => {
    const grid = await RemoteGrid.conform(session, UNIT_SQUARE);
    const bad = await gridFunction(grid, (points: number[][]) =>
      points.slice(1).map(() => 0));
    await assert.rejects(
      l2error(grid, bad, 2, true),
      (error: unknown) =>
        error instanceof ServerError && error.code === "callback_shape",
    );
    assert.equal(await grid.size(0), 2);
  });
});

test("describe returns the registry tag of the remote grid", async () => {
  await withSession(async (session) => {
    const grid = await RemoteGrid.structured(session, [0, 0], [1, 1], [2, 2]);
    const tag = await grid.describe();
    assert.equal(tag.typeName, "GridKit::StructuredGrid< 2 >");
    assert.deepEqual(tag.includes, []);
  });
});
