export { Session, ServerError } from "./session.js";
export {
  RemoteGrid,
  RemoteFunction,
  gridFunction,
  interpolateP1,
  interpolationError,
  l2error,
} from "./grid.js";
export type {
  GridSizes,
  SimplexData,
  TriangulationData,
  InterpolationResult,
} from "./grid.js";
export { plot } from "./plot.js";
export { encodePNG } from "./png.js";
