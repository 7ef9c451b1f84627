"""Newline-delimited JSON protocol server for scripting clients.

One request per line, one response per line. While a request is in flight
the server may issue reverse callbacks to evaluate client-side functions in
batches; the client must answer each callback before the response arrives.
Floats are serialized with 17 significant digits so transcripts replay
byte-identically.
"""

from __future__ import annotations

import json
import math
import socket
import sys

import numpy as np

from . import errors
from .errors import CapabilityError, DomainError, ProtocolError, ShapeError
from .grid import Marker
from .gridfunction import GridFunction, interpolateP1, p1Function
from .io import pointData, triangulation, writeVTK
from .quadrature import quadratureRules
from .registry import defaultRegistry, describe, generateTypeName
from .schemes import l2Norm2, l2Norm2Loop


def _formatFloat(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ProtocolError(f"cannot serialize non-finite float {x}")
    return "%.17g" % x


def jsonDumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 17-digit floats."""
    pieces = []
    _writeJson(obj, pieces)
    return "".join(pieces)


def _writeJson(obj, out):
    if obj is None or obj is True or obj is False:
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_formatFloat(float(obj)))
    elif isinstance(obj, np.ndarray):
        _writeJson(obj.tolist(), out)
    elif isinstance(obj, dict):
        out.append("{")
        for n, (key, value) in enumerate(obj.items()):
            if n:
                out.append(",")
            out.append(json.dumps(str(key)))
            out.append(":")
            _writeJson(value, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for n, value in enumerate(obj):
            if n:
                out.append(",")
            _writeJson(value, out)
        out.append("]")
    else:
        raise ProtocolError(f"cannot serialize {type(obj).__name__}")


_ERROR_CODES = {
    errors.DomainError: "domain",
    errors.CapabilityError: "capability",
    errors.ConstructionError: "construction",
    errors.InvalidationError: "invalidation",
    errors.StateError: "state",
    errors.ShapeError: "callback_shape",
    errors.IllegalPartitionError: "illegal_partition",
    errors.ConvergenceError: "convergence",
    errors.FactoryLookupError: "lookup",
    errors.NumericError: "numeric",
    errors.ProtocolError: "protocol",
}


def _errorCode(exc) -> str:
    for cls, code in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return code
    return "internal"


class RemoteCallbackGridFunction(GridFunction):
    """Grid function whose values are served by the protocol client."""

    def __init__(self, session, view, fnId, kind):
        if kind not in ("global", "local"):
            raise DomainError(f"function kind must be global or local, "
                              f"got {kind!r}")
        self._session = session
        self.fnId = fnId
        self.kind = kind
        super().__init__(view, rangeDim=1)

    def _ask(self, element, points):
        points = np.asarray(points, dtype=float).reshape(-1, self.view.dimension)
        values = self._session.issueCallback(self.fnId, self.kind, element,
                                             points)
        if values.shape != (len(points),):
            raise ShapeError(
                f"callback for {self.fnId} returned {values.shape[0] if values.ndim else 0} "
                f"values, expected {len(points)}")
        return values

    def evalGlobal(self, x):
        if self.kind != "global":
            raise CapabilityError(
                "global evaluation requires a globally backed grid function")
        x = np.asarray(x, dtype=float)
        values = self._ask(None, x.reshape(-1, self.view.dimension))
        return values if x.ndim == 2 else values[0]

    def _evaluate(self, e, hatx):
        return self._evaluateBatch(e, hatx.reshape(1, -1))[0]

    def _evaluateBatch(self, e, hatxs):
        if self.kind == "global":
            return self._ask(None, e.geometry.toGlobalBatch(hatxs))
        return self._ask(int(e.index), hatxs)


class ProtocolSession:
    """One sequential NDJSON session over a line-based transport."""

    def __init__(self, recvLine, sendLine):
        self._recv = recvLine
        self._send = sendLine
        self._grids = {}
        self._functions = {}
        self._seenIds = set()
        self._cbId = 0
        self.callbacksInRequest = 0

    # -- transport ---------------------------------------------------------

    def run(self):
        while True:
            line = self._recv()
            if line is None:
                return
            line = line.strip()
            if not line:
                continue
            self._handleLine(line)

    def _handleLine(self, line):
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            self._send(jsonDumps({"id": None, "ok": False,
                                  "error": {"code": "parse",
                                            "message": str(exc)}}))
            return
        requestId = message.get("id")
        try:
            if not isinstance(message, dict) or "op" not in message:
                raise ProtocolError("request needs an 'op' field")
            if requestId in self._seenIds:
                raise ProtocolError(f"duplicate request id {requestId}")
            self._seenIds.add(requestId)
            op = message["op"]
            handler = getattr(self, "_op_" + str(op), None)
            if handler is None:
                self._send(jsonDumps({
                    "id": requestId, "ok": False,
                    "error": {"code": "unknown_op",
                              "message": f"unknown op {op!r}"}}))
                return
            self.callbacksInRequest = 0
            result = handler(message.get("args") or {})
            self._send(jsonDumps({"id": requestId, "ok": True,
                                  "result": result}))
        except Exception as exc:  # errors become responses, session survives
            self._send(jsonDumps({
                "id": requestId, "ok": False,
                "error": {"code": _errorCode(exc), "message": str(exc)}}))

    def issueCallback(self, fnId, kind, element, points):
        self._cbId += 1
        cb = self._cbId
        self.callbacksInRequest += 1
        message = {"cb": cb, "fn": fnId, "kind": kind}
        if element is not None:
            message["element"] = element
        message["points"] = points
        self._send(jsonDumps(message))
        line = self._recv()
        if line is None:
            raise ProtocolError("client closed the stream during a callback")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"invalid callback reply: {exc}") from exc
        if not isinstance(reply, dict) or reply.get("cb") != cb:
            raise ProtocolError("callback reply out of order")
        values = np.asarray(reply.get("values", []), dtype=float).reshape(-1)
        return values

    # -- helpers -----------------------------------------------------------

    def _grid(self, gridId):
        view = self._grids.get(gridId)
        if view is None:
            raise DomainError(f"unknown grid {gridId!r}")
        return view

    def _function(self, fnId):
        fn = self._functions.get(fnId)
        if fn is None:
            raise DomainError(f"unknown function {fnId!r}")
        return fn

    def _sizes(self, view):
        return {"elements": view.size(0),
                "vertices": view.size(view.dimension)}

    # -- operations --------------------------------------------------------

    def _op_createGrid(self, args):
        if "cartesian" in args:
            spec = args["cartesian"]
            view = defaultRegistry.resolveFactory("structuredGrid", spec)
        elif "simplex" in args:
            kind = args.get("kind", "conform")
            if kind not in ("conform", "simplex"):
                raise DomainError(f"grid kind must be conform or simplex, "
                                  f"got {kind!r}")
            factory = "conformGrid" if kind == "conform" else "simplexGrid"
            view = defaultRegistry.resolveFactory(factory, args["simplex"])
        else:
            raise DomainError("createGrid needs 'cartesian' or 'simplex' args")
        gridId = f"g{len(self._grids)}"
        self._grids[gridId] = view
        return {"grid": gridId, **self._sizes(view)}

    def _op_globalRefine(self, args):
        view = self._grid(args.get("grid"))
        view.hierarchicalGrid.globalRefine(int(args.get("n", 1)))
        return self._sizes(view)

    def _op_adapt(self, args):
        view = self._grid(args.get("grid"))
        marker = self._function(args.get("marker"))
        if marker.kind != "global":
            raise DomainError("adapt markers must be global functions")
        centers = np.array([np.asarray(e.geometry.center)
                            for e in view.elements])
        values = marker._ask(None, centers)
        flags = values > 0.5

        def mark(e):
            return Marker.refine if flags[e.index] else Marker.keep

        view.hierarchicalGrid.adapt(mark)
        return self._sizes(view)

    def _op_registerFunction(self, args):
        view = self._grid(args.get("grid"))
        kind = args.get("kind", "global")
        fnId = f"f{len(self._functions)}"
        fn = RemoteCallbackGridFunction(self, view, fnId, kind)
        fn._descriptor = generateTypeName(
            "GridKit::CallbackGridFunction", kind)
        self._functions[fnId] = fn
        return {"fn": fnId, "kind": kind}

    def _op_interpolateP1(self, args):
        view = self._grid(args.get("grid"))
        fn = self._function(args.get("fn"))
        mapper, data = interpolateP1(view, fn)
        p1 = p1Function(view, mapper, data)
        p1Id = f"f{len(self._functions)}"
        p1._descriptor = generateTypeName("GridKit::P1GridFunction", 2)
        self._functions[p1Id] = p1
        vertexIndices = [list(view.indexSet.subIndices(e, view.dimension))
                         for e in view.elements]
        return {"fn": p1Id, "size": int(mapper.size), "data": data,
                "elementVertexIndices": vertexIndices}

    def _op_l2error(self, args):
        view = self._grid(args.get("grid"))
        fn = self._function(args.get("fn"))
        order = int(args.get("order", 5))
        vectorized = bool(args.get("vectorized", True))
        rules = quadratureRules(order)
        if vectorized:
            norm2 = l2Norm2(view, fn, rules)
        else:
            norm2 = l2Norm2Loop(view, fn, rules)
        return {"value": math.sqrt(norm2),
                "callbacks": self.callbacksInRequest}

    def _op_size(self, args):
        view = self._grid(args.get("grid"))
        if "codim" in args:
            return {"size": view.size(int(args["codim"]))}
        return self._sizes(view)

    def _op_coordinates(self, args):
        view = self._grid(args.get("grid"))
        return {"coordinates": view.coordinates()}

    def _op_triangulation(self, args):
        view = self._grid(args.get("grid"))
        tri = triangulation(view, int(args.get("level", 0)))
        return {"points": tri.points, "triangles": tri.triangles}

    def _op_pointData(self, args):
        fn = self._function(args.get("fn"))
        values = pointData(fn, int(args.get("level", 0)))
        return {"values": values}

    def _op_writeVTK(self, args):
        view = self._grid(args.get("grid"))
        name = args.get("name")
        if not name:
            raise DomainError("writeVTK needs a file name")
        pointdata = {label: self._function(fnId)
                     for label, fnId in (args.get("pointdata") or {}).items()}
        celldata = {label: self._function(fnId)
                    for label, fnId in (args.get("celldata") or {}).items()}
        path = writeVTK(view, name, pointdata=pointdata, celldata=celldata,
                        subsampling=int(args.get("subsampling", 0)))
        return {"path": path}

    def _op_describe(self, args):
        objectId = args.get("object")
        obj = self._grids.get(objectId) or self._functions.get(objectId)
        if obj is None:
            raise DomainError(f"unknown object {objectId!r}")
        desc = describe(obj)
        if desc is None:
            raise DomainError(f"object {objectId!r} carries no descriptor")
        return {"typeName": desc.typeName, "includes": list(desc.includes)}


def serveStdio(stdin=None, stdout=None):
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def recv():
        line = stdin.readline()
        return line if line else None

    def send(text):
        stdout.write(text + "\n")
        stdout.flush()

    ProtocolSession(recv, send).run()


def serveTcp(port: int, host: str = "127.0.0.1"):
    with socket.create_server((host, port)) as server:
        conn, _ = server.accept()
        with conn, conn.makefile("r", encoding="utf-8") as reader, \
                conn.makefile("w", encoding="utf-8") as writer:

            def recv():
                line = reader.readline()
                return line if line else None

            def send(text):
                writer.write(text + "\n")
                writer.flush()

            ProtocolSession(recv, send).run()
