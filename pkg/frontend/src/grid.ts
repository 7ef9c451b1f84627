// Remote grids and callback-served grid functions over a gridkit session.

import { Session } from "./session.js";

export interface SimplexData {
  vertices: number[][];
  simplices: number[][];
}

export interface GridSizes {
  elements: number;
  vertices: number;
}

export interface TriangulationData {
  points: number[][];
  triangles: number[][];
}

export type GlobalFunction = (points: number[][]) => number[];
export type LocalFunction = (element: number, points: number[][]) => number[];

export class RemoteFunction {
  constructor(
    readonly grid: RemoteGrid,
    readonly id: string,
    readonly kind: "global" | "local",
  ) {}

  pointData(level = 0): Promise<number[][]> {
    return this.grid.session
      .request("pointData", { fn: this.id, level })
      .then((r) => (r as { values: number[][] }).values);
  }
}

export interface InterpolationResult {
  fn: RemoteFunction;
  size: number;
  data: number[];
  elementVertexIndices: number[][];
}

class HierarchicalGridFacade {
  constructor(private readonly grid: RemoteGrid) {}

  async globalRefine(n = 1): Promise<GridSizes> {
    const sizes = (await this.grid.session.request("globalRefine", {
      grid: this.grid.id,
      n,
    })) as GridSizes;
    this.grid.updateSizes(sizes);
    return sizes;
  }

  /** Marker over element centers, served through one batched callback. */
  async adapt(marker: GlobalFunction): Promise<GridSizes> {
    const fn = await this.grid.registerGlobal((points) => marker(points));
    const sizes = (await this.grid.session.request("adapt", {
      grid: this.grid.id,
      marker: fn.id,
    })) as GridSizes;
    this.grid.updateSizes(sizes);
    return sizes;
  }
}

export class RemoteGrid {
  readonly hierarchicalGrid = new HierarchicalGridFacade(this);
  elements: number;
  vertices: number;

  private constructor(
    readonly session: Session,
    readonly id: string,
    sizes: GridSizes,
  ) {
    this.elements = sizes.elements;
    this.vertices = sizes.vertices;
  }

  static async structured(
    session: Session,
    lower: number[],
    upper: number[],
    cells: number[],
  ): Promise<RemoteGrid> {
    const result = (await session.request("createGrid", {
      cartesian: { lower, upper, cells },
    })) as GridSizes & { grid: string };
    return new RemoteGrid(session, result.grid, result);
  }

  static async conform(
    session: Session,
    data: SimplexData,
  ): Promise<RemoteGrid> {
    return RemoteGrid.fromSimplexData(session, data, "conform");
  }

  static async simplex(
    session: Session,
    data: SimplexData,
  ): Promise<RemoteGrid> {
    return RemoteGrid.fromSimplexData(session, data, "simplex");
  }

  private static async fromSimplexData(
    session: Session,
    data: SimplexData,
    kind: "conform" | "simplex",
  ): Promise<RemoteGrid> {
    const result = (await session.request("createGrid", {
      simplex: data,
      kind,
    })) as GridSizes & { grid: string };
    return new RemoteGrid(session, result.grid, result);
  }

  updateSizes(sizes: GridSizes): void {
    this.elements = sizes.elements;
    this.vertices = sizes.vertices;
  }

  async size(codim: number): Promise<number> {
    const result = (await this.session.request("size", {
      grid: this.id,
      codim,
    })) as { size: number };
    return result.size;
  }

  async coordinates(): Promise<number[][]> {
    const result = (await this.session.request("coordinates", {
      grid: this.id,
    })) as { coordinates: number[][] };
    return result.coordinates;
  }

  async triangulation(level = 0): Promise<TriangulationData> {
    return (await this.session.request("triangulation", {
      grid: this.id,
      level,
    })) as TriangulationData;
  }

  async describe(): Promise<{ typeName: string; includes: string[] }> {
    return (await this.session.request("describe", {
      object: this.id,
    })) as { typeName: string; includes: string[] };
  }

  async writeVTK(
    name: string,
    pointdata: Record<string, RemoteFunction> = {},
    subsampling = 0,
  ): Promise<string> {
    const labels: Record<string, string> = {};
    for (const [label, fn] of Object.entries(pointdata)) {
      labels[label] = fn.id;
    }
    const result = (await this.session.request("writeVTK", {
      grid: this.id,
      name,
      pointdata: labels,
      subsampling,
    })) as { path: string };
    return result.path;
  }

  async registerGlobal(handler: GlobalFunction): Promise<RemoteFunction> {
    const result = (await this.session.request("registerFunction", {
      grid: this.id,
      kind: "global",
    })) as { fn: string };
    this.session.registerHandler(result.fn, (_element, points) =>
      handler(points),
    );
    return new RemoteFunction(this, result.fn, "global");
  }

  async registerLocal(handler: LocalFunction): Promise<RemoteFunction> {
    const result = (await this.session.request("registerFunction", {
      grid: this.id,
      kind: "local",
    })) as { fn: string };
    this.session.registerHandler(result.fn, (element, points) => {
      if (element === undefined) {
        throw new Error("local callback without an element index");
      }
      return handler(element, points);
    });
    return new RemoteFunction(this, result.fn, "local");
  }
}

/**
 * Register a host function on the grid; arity selects the kind the same way
 * the decorator form does: f(points) is global, f(element, points) local.
 */
export function gridFunction(
  grid: RemoteGrid,
  fn: GlobalFunction | LocalFunction,
): Promise<RemoteFunction> {
  if (fn.length <= 1) {
    return grid.registerGlobal(fn as GlobalFunction);
  }
  return grid.registerLocal(fn as LocalFunction);
}

export async function interpolateP1(
  grid: RemoteGrid,
  fn: RemoteFunction,
): Promise<InterpolationResult> {
  const result = (await grid.session.request("interpolateP1", {
    grid: grid.id,
    fn: fn.id,
  })) as { fn: string; size: number; data: number[];
           elementVertexIndices: number[][] };
  return {
    fn: new RemoteFunction(grid, result.fn, "local"),
    size: result.size,
    data: result.data,
    elementVertexIndices: result.elementVertexIndices,
  };
}

export async function l2error(
  grid: RemoteGrid,
  fn: RemoteFunction,
  order: number,
  vectorized = true,
): Promise<{ value: number; callbacks: number }> {
  return (await grid.session.request("l2error", {
    grid: grid.id,
    fn: fn.id,
    order,
    vectorized,
  })) as { value: number; callbacks: number };
}

/**
 * Client-side interpolation-error pipeline: interpolate `f`, keep the dof
 * vector and connectivity locally, and register |p1 - f| as a local
 * function evaluated entirely on the client per callback batch.
 */
export async function interpolationError(
  grid: RemoteGrid,
  f: (x: number[]) => number,
): Promise<RemoteFunction> {
  const fRemote = await grid.registerGlobal((points) => points.map(f));
  const interp = await interpolateP1(grid, fRemote);
  const coords = await grid.coordinates();
  const data = interp.data;
  const connectivity = interp.elementVertexIndices;
  return grid.registerLocal((element, points) => {
    const idx = connectivity[element];
    const c0 = coords[idx[0]];
    const c1 = coords[idx[1]];
    const c2 = coords[idx[2]];
    return points.map(([x, y]) => {
      const discrete =
        (1 - x - y) * data[idx[0]] + x * data[idx[1]] + y * data[idx[2]];
      const world = [
        c0[0] + x * (c1[0] - c0[0]) + y * (c2[0] - c0[0]),
        c0[1] + x * (c1[1] - c0[1]) + y * (c2[1] - c0[1]),
      ];
      return Math.abs(discrete - f(world));
    });
  });
}
